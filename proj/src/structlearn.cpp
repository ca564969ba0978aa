#include "pcc/structlearn.hpp"

#include <cmath>
#include <iostream>

#include "pcc/adjacency.hpp"
#include "pcc/error.hpp"

namespace pcc {

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw ShapeError("matrix exponential needs a square matrix");
    const Eigen::Index n = m.rows();
    if (n == 0) return m;
    const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Eigen::MatrixXd scaled = m / std::ldexp(1.0, squarings);
    // With ||scaled|| <= 1/2 the 24-term remainder is below 1e-30.
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= 24; ++k) {
        term = term * scaled / static_cast<double>(k);
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

PenaltyValue acyclicity(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw ShapeError("acyclicity needs a square matrix");
    const Eigen::MatrixXd e = matrix_exponential(a.cwiseProduct(a));
    return {e.trace() - static_cast<double>(a.rows()), e.transpose().cwiseProduct(2.0 * a)};
}

PenaltyValue prior_penalty(const Eigen::MatrixXd& a, const PriorConfig& config) {
    const Eigen::MatrixXd sign = a.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
    return {config.lambda_l1 * a.cwiseAbs().sum() + config.lambda_l2 * a.squaredNorm(),
            config.lambda_l1 * sign + 2.0 * config.lambda_l2 * a};
}

Eigen::MatrixXd threshold(const Eigen::MatrixXd& weighted, double omega) {
    if (!(omega > 0.0)) throw ConfigError("threshold omega must be positive");
    return (weighted.array().abs() > omega).cast<double>();
}

TrainConfig DiscoveryConfig::default_train() {
    TrainConfig t;
    t.steps = 16;
    t.gamma = 1e-4;
    t.gains = OptimizerConfig{OptimizerKind::AdamW, 5e-3, 0.0};
    t.learn_weights = false;
    t.learn_gains = true;
    t.epochs = 400;
    t.batch_size = 128;
    return t;
}

namespace {

void check_priors(const PriorConfig& p) {
    if (p.lambda_l1 < 0.0 || p.lambda_l2 < 0.0 || p.lambda_dag < 0.0)
        throw ConfigError("prior weights must be nonnegative");
    if (!(p.omega > 0.0)) throw ConfigError("omega must be positive");
}

DiscoveryResult run_discovery(const Dataset& data, const DiscoveryConfig& config) {
    check_priors(config.priors);
    const int n = static_cast<int>(data.cols());
    if (n < 1) throw DataError("discovery needs at least one variable");
    if (data.rows() < n)
        std::cerr << "warning: " << data.rows() << " samples for " << n << " variables\n";
    if (config.truth && (config.truth->rows() != n || config.truth->cols() != n))
        throw ShapeError("truth matrix does not match the number of variables");

    PCGraph graph = fully_connected_graph(n, config.allow_self_edges);
    std::vector<ColumnBinding> clamp;
    for (int i = 0; i < n; ++i) clamp.push_back({i, i});

    const PriorConfig& priors = config.priors;
    auto dag_weight = [&](int epoch) {
        if (config.dag_warmup_epochs <= 0) return priors.lambda_dag;
        return priors.lambda_dag * std::min(1.0, (epoch + 1.0) / config.dag_warmup_epochs);
    };

    DiscoveryResult result;
    TrainHooks hooks;
    hooks.gain_regularizer = [&](int epoch, const Eigen::MatrixXd& a, Eigen::MatrixXd& grad) {
        grad += prior_penalty(a, priors).gradient;
        if (priors.lambda_dag > 0.0) grad += dag_weight(epoch) * acyclicity(a).gradient;
    };
    hooks.on_epoch = [&](int epoch, const PCGraph& g, double energy) {
        const Eigen::MatrixXd& a = g.gains();
        TraceRow row;
        row.epoch = epoch + 1;
        row.energy = energy;
        row.prior_l1 = priors.lambda_l1 * a.cwiseAbs().sum();
        row.prior_l2 = priors.lambda_l2 * a.squaredNorm();
        row.prior_dag = priors.lambda_dag * acyclicity(a).value;
        if (config.truth) {
            row.mae = mae(*config.truth, a);
            const auto gm = graph_metrics((config.truth->array() != 0.0).cast<double>(), threshold(a, priors.omega));
            row.shd = gm.shd;
            row.f1 = gm.f1;
        }
        result.trace.push_back(row);
    };

    train(graph, data, clamp, config.train, hooks);
    result.weighted = graph.gains();
    result.binary = threshold(result.weighted, priors.omega);
    return result;
}

}  // namespace

DiscoveryResult discover(const Dataset& data, const DiscoveryConfig& config) {
    DiscoveryConfig cfg = config;
    cfg.train.negatives.reset();
    return run_discovery(data, cfg);
}

DiscoveryResult discover_with_negatives(const Dataset& data, int label_column, const DiscoveryConfig& config) {
    if (label_column < 0 || label_column >= data.cols()) throw ConfigError("label column out of range");
    if (!config.priors.negatives) throw ConfigError("negative sampling parameters missing");
    const auto& neg = *config.priors.negatives;
    if (neg.p_ns < 0.0 || neg.p_ns > 1.0) throw ConfigError("p_ns must lie in [0, 1]");
    DiscoveryConfig cfg = config;
    cfg.priors.lambda_dag = 0.0;
    cfg.allow_self_edges = true;
    cfg.train.negatives = NegativeSampling{label_column, neg.p_ns, neg.k};
    return run_discovery(data, cfg);
}

Dataset trace_to_dataset(const std::vector<TraceRow>& trace) {
    const bool metrics = !trace.empty() && trace.front().mae.has_value();
    Dataset d;
    d.columns = {"epoch", "energy", "prior_l1", "prior_l2", "prior_dag"};
    if (metrics) d.columns.insert(d.columns.end(), {"mae", "shd", "f1"});
    d.values.resize(static_cast<Eigen::Index>(trace.size()), static_cast<Eigen::Index>(d.columns.size()));
    for (std::size_t r = 0; r < trace.size(); ++r) {
        const auto& t = trace[r];
        const auto i = static_cast<Eigen::Index>(r);
        d.values(i, 0) = t.epoch;
        d.values(i, 1) = t.energy;
        d.values(i, 2) = t.prior_l1;
        d.values(i, 3) = t.prior_l2;
        d.values(i, 4) = t.prior_dag;
        if (metrics) {
            d.values(i, 5) = t.mae.value_or(0.0);
            d.values(i, 6) = t.shd.value_or(0);
            d.values(i, 7) = t.f1.value_or(0.0);
        }
    }
    return d;
}

CycleRepair break_cycles(const Eigen::MatrixXd& binary, const Eigen::MatrixXd& weighted) {
    if (binary.rows() != weighted.rows() || binary.cols() != weighted.cols())
        throw ShapeError("binary and weighted matrices differ in shape");
    CycleRepair out{binary, {}};
    while (true) {
        const auto cycle = find_cycle(out.adjacency);
        if (cycle.empty()) break;
        std::pair<int, int> weakest{cycle.back(), cycle.front()};
        for (std::size_t k = 0; k < cycle.size(); ++k) {
            const int from = cycle[k];
            const int to = cycle[(k + 1) % cycle.size()];
            if (std::abs(weighted(from, to)) < std::abs(weighted(weakest.first, weakest.second))) weakest = {from, to};
        }
        out.adjacency(weakest.first, weakest.second) = 0.0;
        out.removed.push_back(weakest);
    }
    return out;
}

EndToEndResult end_to_end(const Dataset& data, const EndToEndConfig& config, const FitCheckpoint& checkpoint) {
    EndToEndResult out{discover(data, config.discovery), {}, {FittedScm{PCGraph({}, {}), {}}, {}}};
    out.repair = break_cycles(out.discovery.binary, out.discovery.weighted);
    if (!out.repair.removed.empty())
        std::cerr << "warning: removed " << out.repair.removed.size() << " edge(s) to break cycles\n";
    const PCGraph graph = augment_with_exogenous(out.repair.adjacency, config.augment);
    const Dataset named{variable_names(static_cast<int>(data.cols())), data.values};
    out.fit = fit_scm(graph, named, config.fit, checkpoint);
    return out;
}

}  // namespace pcc
