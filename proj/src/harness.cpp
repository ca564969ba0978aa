#include "pcc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "pcc/adjacency.hpp"
#include "pcc/error.hpp"
#include "pcc/metrics.hpp"
#include "pcc/rng.hpp"

namespace pcc {

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::FitAndQuery: return "fit_and_query";
        case ExperimentKind::Discover: return "discover";
        case ExperimentKind::EndToEnd: return "e2e";
        case ExperimentKind::NegativesToy: return "negatives_toy";
    }
    return "fit_and_query";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
    for (auto k : {ExperimentKind::FitAndQuery, ExperimentKind::Discover, ExperimentKind::EndToEnd,
                   ExperimentKind::NegativesToy})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown experiment: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Config

namespace {

void allow_only(const json& j, std::initializer_list<const char*> keys, const char* where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : j.items())
        if (!allowed.contains(key)) throw ConfigError("unknown field '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

void read_optimizer(const json& j, OptimizerConfig& opt) {
    std::string name(to_string(opt.kind));
    read(j, "optimizer", name);
    opt.kind = optimizer_from_string(name);
    read(j, "lr", opt.lr);
    read(j, "weight_decay", opt.weight_decay);
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be positive");
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
    allow_only(j, {"experiment", "graph", "n_train", "n_test", "discovery_samples", "model", "fit", "query",
                   "discovery", "negatives", "seeds", "output_dir"},
               "config");
    ExperimentConfig c;
    if (!j.contains("experiment")) throw ConfigError("config needs an 'experiment' field");
    c.experiment = experiment_kind_from_string(j.at("experiment").get<std::string>());

    if (j.contains("graph")) {
        const auto& g = j.at("graph");
        allow_only(g, {"source", "name", "regime", "kind", "nodes", "k", "weight_range", "path"}, "graph");
        read(g, "source", c.graph.source);
        read(g, "name", c.graph.name);
        std::string regime(to_string(c.graph.regime));
        read(g, "regime", regime);
        c.graph.regime = edge_regime_from_string(regime);
        std::string kind(to_string(c.graph.kind));
        read(g, "kind", kind);
        c.graph.kind = random_graph_kind_from_string(kind);
        read(g, "nodes", c.graph.nodes);
        read(g, "k", c.graph.k);
        if (g.contains("weight_range")) {
            const auto& w = g.at("weight_range");
            if (!w.is_array() || w.size() != 2) throw ConfigError("weight_range must be [lo, hi]");
            c.graph.weight_range = {w[0].get<double>(), w[1].get<double>()};
        }
        read(g, "path", c.graph.path);
        if (c.graph.source != "common" && c.graph.source != "random" && c.graph.source != "file")
            throw ConfigError("graph.source must be common, random or file");
    }
    read(j, "n_train", c.n_train);
    read(j, "n_test", c.n_test);
    read(j, "discovery_samples", c.discovery_samples);
    if (c.n_train < 1 || c.n_test < 0 || c.discovery_samples < 1) throw ConfigError("dataset sizes out of range");
    c.augment.regime = c.graph.regime;

    if (j.contains("model")) {
        const auto& m = j.at("model");
        allow_only(m, {"hidden", "activation"}, "model");
        read(m, "hidden", c.augment.hidden);
        std::string act(to_string(c.augment.activation));
        read(m, "activation", act);
        c.augment.activation = activation_from_string(act);
    }
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        allow_only(f, {"steps", "gamma", "optimizer", "lr", "weight_decay", "epochs", "batch_size", "checkpoint_every"},
                   "fit");
        read(f, "steps", c.fit.steps);
        read(f, "gamma", c.fit.gamma);
        read_optimizer(f, c.fit.optimizer);
        read(f, "epochs", c.fit.epochs);
        read(f, "batch_size", c.fit.batch_size);
        read(f, "checkpoint_every", c.fit.checkpoint_every);
    }
    if (j.contains("query")) {
        const auto& q = j.at("query");
        allow_only(q, {"steps", "gamma", "early_stop", "early_stop_tol"}, "query");
        read(q, "steps", c.query.inference.steps);
        read(q, "gamma", c.query.inference.gamma);
        read(q, "early_stop", c.query.inference.early_stop);
        read(q, "early_stop_tol", c.query.inference.early_stop_tol);
    }
    c.fit.abduction = c.query;
    if (j.contains("discovery")) {
        const auto& d = j.at("discovery");
        allow_only(d, {"steps", "gamma", "optimizer", "lr", "weight_decay", "epochs", "batch_size", "mode", "lambda_l1",
                       "lambda_l2", "lambda_dag", "omega", "dag_warmup_epochs"},
                   "discovery");
        auto& t = c.discovery.train;
        read(d, "steps", t.steps);
        read(d, "gamma", t.gamma);
        read_optimizer(d, t.gains);
        read(d, "epochs", t.epochs);
        read(d, "batch_size", t.batch_size);
        std::string mode(to_string(t.mode));
        read(d, "mode", mode);
        t.mode = schedule_from_string(mode);
        read(d, "lambda_l1", c.discovery.priors.lambda_l1);
        read(d, "lambda_l2", c.discovery.priors.lambda_l2);
        read(d, "lambda_dag", c.discovery.priors.lambda_dag);
        read(d, "omega", c.discovery.priors.omega);
        read(d, "dag_warmup_epochs", c.discovery.dag_warmup_epochs);
    }
    if (j.contains("negatives")) {
        const auto& n = j.at("negatives");
        allow_only(n, {"samples", "scale", "sigma", "p_ns", "k", "lambda_l1", "epochs", "batch_size", "lr"},
                   "negatives");
        auto& t = c.negatives;
        read(n, "samples", t.samples);
        read(n, "scale", t.scale);
        read(n, "sigma", t.sigma);
        read(n, "p_ns", t.p_ns);
        read(n, "k", t.k);
        read(n, "lambda_l1", t.lambda_l1);
        read(n, "epochs", t.epochs);
        read(n, "batch_size", t.batch_size);
        read(n, "lr", t.lr);
        if (t.p_ns < 0.0 || t.p_ns > 1.0) throw ConfigError("negatives.p_ns must lie in [0, 1]");
    }
    read(j, "seeds", c.seeds);
    if (c.seeds.empty()) throw ConfigError("at least one seed is required");
    read(j, "output_dir", c.output_dir);

    require_positive(c.fit.gamma, "fit.gamma");
    require_positive(c.fit.optimizer.lr, "fit.lr");
    require_positive(c.query.inference.gamma, "query.gamma");
    require_positive(c.discovery.train.gamma, "discovery.gamma");
    require_positive(c.discovery.train.gains.lr, "discovery.lr");
    if (c.fit.steps < 1 || c.query.inference.steps < 1 || c.discovery.train.steps < 1)
        throw ConfigError("inference steps must be at least 1");
    if (c.fit.epochs < 0 || c.discovery.train.epochs < 0) throw ConfigError("epochs must be nonnegative");
    if (c.fit.batch_size < 1 || c.discovery.train.batch_size < 1) throw ConfigError("batch sizes must be positive");
    return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = to_string(c.experiment);
    j["graph"] = {{"source", c.graph.source},
                  {"name", c.graph.name},
                  {"regime", to_string(c.graph.regime)},
                  {"kind", to_string(c.graph.kind)},
                  {"nodes", c.graph.nodes},
                  {"k", c.graph.k},
                  {"weight_range", {c.graph.weight_range.first, c.graph.weight_range.second}},
                  {"path", c.graph.path}};
    j["n_train"] = c.n_train;
    j["n_test"] = c.n_test;
    j["discovery_samples"] = c.discovery_samples;
    j["model"] = {{"hidden", c.augment.hidden}, {"activation", to_string(c.augment.activation)}};
    j["fit"] = {{"steps", c.fit.steps},
                {"gamma", c.fit.gamma},
                {"optimizer", to_string(c.fit.optimizer.kind)},
                {"lr", c.fit.optimizer.lr},
                {"weight_decay", c.fit.optimizer.weight_decay},
                {"epochs", c.fit.epochs},
                {"batch_size", c.fit.batch_size},
                {"checkpoint_every", c.fit.checkpoint_every}};
    j["query"] = {{"steps", c.query.inference.steps},
                  {"gamma", c.query.inference.gamma},
                  {"early_stop", c.query.inference.early_stop},
                  {"early_stop_tol", c.query.inference.early_stop_tol}};
    const auto& t = c.discovery.train;
    j["discovery"] = {{"steps", t.steps},
                      {"gamma", t.gamma},
                      {"optimizer", to_string(t.gains.kind)},
                      {"lr", t.gains.lr},
                      {"weight_decay", t.gains.weight_decay},
                      {"epochs", t.epochs},
                      {"batch_size", t.batch_size},
                      {"mode", to_string(t.mode)},
                      {"lambda_l1", c.discovery.priors.lambda_l1},
                      {"lambda_l2", c.discovery.priors.lambda_l2},
                      {"lambda_dag", c.discovery.priors.lambda_dag},
                      {"omega", c.discovery.priors.omega},
                      {"dag_warmup_epochs", c.discovery.dag_warmup_epochs}};
    const auto& n = c.negatives;
    j["negatives"] = {{"samples", n.samples},     {"scale", n.scale},   {"sigma", n.sigma},
                      {"p_ns", n.p_ns},           {"k", n.k},           {"lambda_l1", n.lambda_l1},
                      {"epochs", n.epochs},       {"batch_size", n.batch_size}, {"lr", n.lr}};
    j["seeds"] = c.seeds;
    j["output_dir"] = c.output_dir;
    return j;
}

ScmSpec build_spec(const GraphSource& source, std::uint64_t seed) {
    if (source.source == "common") return common_graph(source.name, source.regime, seed, source.weight_range);
    if (source.source == "random") {
        if (source.regime != EdgeRegime::Linear) throw ConfigError("random graphs are linear only");
        return random_scm({source.kind, source.nodes, source.k, source.weight_range, seed});
    }
    if (source.source == "file") return scm_spec_from_json(read_json(source.path));
    throw ConfigError("unknown graph source: " + source.source);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

Assignment exogenous_evidence(const FittedScm& fitted, const Eigen::MatrixXd& U) {
    Assignment a;
    for (int i = 0; i < fitted.endogenous_count(); ++i) a.emplace(fitted.exogenous(i), U.row(i));
    return a;
}

Eigen::MatrixXd endogenous_rows(const FittedScm& fitted, const QueryResult& r) {
    const int n = fitted.endogenous_count();
    const Eigen::Index b = r.values.front().cols();
    Eigen::MatrixXd X(b, n);
    for (int i = 0; i < n; ++i) X.col(i) = r.values[static_cast<std::size_t>(i)].row(0).transpose();
    return X;
}

/// Draws exogenous values (n x m) from the fitted noise model.
Eigen::MatrixXd draw_noise(const FittedScm& fitted, Eigen::Index m, Rng& rng) {
    const int n = fitted.endogenous_count();
    Eigen::MatrixXd U(n, m);
    for (Eigen::Index r = 0; r < m; ++r)
        for (int i = 0; i < n; ++i) {
            const auto& p = fitted.noise[static_cast<std::size_t>(i)];
            U(i, r) = p.mu + p.sigma * rng.normal();
        }
    return U;
}

void put(json& m, const std::string& name, double value) {
    m[name] = value;
    m[name + "_x100"] = 100.0 * value;
}

}  // namespace

double interventional_mae(const FittedScm& fitted, const ScmSpec& truth, int vertex,
                          const std::vector<double>& values, const QueryConfig& config) {
    const auto des = descendants(truth.adjacency, vertex);
    if (des.empty() || values.empty()) return 0.0;
    const auto m = static_cast<Eigen::Index>(values.size());
    Eigen::MatrixXd do_row(1, m);
    for (Eigen::Index r = 0; r < m; ++r) do_row(0, r) = values[static_cast<std::size_t>(r)];
    QueryConfig cfg = config;
    cfg.exogenous_prior = ExogenousPrior::Gaussian;
    const Eigen::MatrixXd est = endogenous_rows(fitted, interventional_query(fitted.graph, {{vertex, do_row}}, {}, cfg));
    Eigen::MatrixXd U(m, truth.size());
    for (int i = 0; i < truth.size(); ++i) U.col(i).setConstant(truth.noise[static_cast<std::size_t>(i)].mu);
    double total = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::MatrixXd x = oracle_evaluate(truth, U.row(r), Intervention{vertex, do_row(0, r)});
        for (int i : des) total += std::abs(x(0, i) - est(r, i));
    }
    return total / static_cast<double>(m * static_cast<Eigen::Index>(des.size()));
}

std::vector<Eigen::VectorXd> counterfactual_estimates(const FittedScm& fitted, const std::vector<CfPair>& pairs,
                                                      const QueryConfig& config) {
    const int n = fitted.endogenous_count();
    std::vector<Eigen::VectorXd> out(pairs.size());
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < pairs.size(); ++r) groups[pairs[r].do_vertex].push_back(r);
    for (const auto& [j, rows] : groups) {
        const auto b = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd factual(n, b);
        Eigen::MatrixXd do_row(1, b);
        for (Eigen::Index c = 0; c < b; ++c) {
            const auto& p = pairs[rows[static_cast<std::size_t>(c)]];
            if (p.factual.size() != n) throw ShapeError("factual row width does not match the model");
            factual.col(c) = p.factual;
            do_row(0, c) = p.do_value;
        }
        const Eigen::MatrixXd est = endogenous_rows(fitted, counterfactual_query(fitted, factual, {{j, do_row}}, config));
        for (Eigen::Index c = 0; c < b; ++c) out[rows[static_cast<std::size_t>(c)]] = est.row(c).transpose();
    }
    return out;
}

json evaluate_scm(const FittedScm& fitted, const Benchmark& bench, const QueryConfig& config, std::uint64_t seed) {
    const int n = fitted.endogenous_count();
    if (n != bench.spec.size()) throw ShapeError("fitted model and benchmark differ in size");
    json m = json::object();
    Rng rng(derive_seed(seed, Stream::Evaluation, 100));

    // Associational: abduct the noise of held-out rows; compare samples.
    const Eigen::MatrixXd Xobs = bench.test_obs.values.leftCols(n);
    const Eigen::MatrixXd Uobs = bench.test_obs.values.rightCols(n);
    if (Xobs.rows() > 0) {
        const Eigen::MatrixXd Uhat = abduct(fitted, Xobs.transpose(), config).transpose();
        put(m, "obs.mae", mae(Uobs, Uhat));
        const Eigen::VectorXd t = (Uobs - Uhat).rowwise().norm();
        const double tm = t.mean();
        put(m, "obs.mse", tm / n);
        put(m, "obs.sse", std::sqrt((t.array() - tm).square().mean()) / n);
        const Eigen::MatrixXd U = draw_noise(fitted, Xobs.rows(), rng);
        const Eigen::MatrixXd Xhat = endogenous_rows(fitted, conditional_query(fitted.graph, exogenous_evidence(fitted, U), config));
        put(m, "obs.mmd", mmd(Xobs, Xhat));
    }

    // Interventional.
    std::vector<InterventionSamples> truth;
    std::vector<InterventionSamples> estimate;
    double mae_sum = 0.0;
    double mmd_sum = 0.0;
    int groups = 0;
    const int dv = bench.test_do.column_index("do_vertex");
    for (const auto& set : bench.interventions) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index r = 0; r < bench.test_do.rows(); ++r)
            if (static_cast<int>(bench.test_do.values(r, dv)) == set.vertex + 1) rows.push_back(r);
        if (rows.empty()) continue;
        const Dataset sub = bench.test_do.select_rows(rows);
        const auto b = static_cast<Eigen::Index>(rows.size());
        const Eigen::MatrixXd do_row = sub.values.col(n + 1).transpose();
        const Eigen::MatrixXd U = draw_noise(fitted, b, rng);
        const Eigen::MatrixXd Xhat = endogenous_rows(
            fitted, interventional_query(fitted.graph, {{set.vertex, do_row}}, exogenous_evidence(fitted, U), config));
        truth.push_back({set.vertex, sub.values.leftCols(n)});
        estimate.push_back({set.vertex, Xhat});
        std::vector<double> values(do_row.data(), do_row.data() + do_row.size());
        mae_sum += interventional_mae(fitted, bench.spec, set.vertex, values, config);
        mmd_sum += mmd(truth.back().samples, Xhat);
        ++groups;
    }
    if (groups > 0) {
        put(m, "do.mae", mae_sum / groups);
        put(m, "do.mmd", mmd_sum / groups);
        const auto im = interventional_metrics(truth, estimate, bench.spec.adjacency);
        put(m, "do.mean_e", im.mean_e);
        put(m, "do.std_e", im.std_e);
    }

    // Counterfactual.
    if (!bench.test_cf.empty()) {
        const auto est = counterfactual_estimates(fitted, bench.test_cf, config);
        double total = 0.0;
        long count = 0;
        for (std::size_t r = 0; r < est.size(); ++r) {
            for (int i : descendants(bench.spec.adjacency, bench.test_cf[r].do_vertex)) {
                total += std::abs(bench.test_cf[r].counterfactual(i) - est[r](i));
                ++count;
            }
        }
        put(m, "cf.mae", count > 0 ? total / static_cast<double>(count) : 0.0);
        const auto cm = counterfactual_metrics(bench.test_cf, est, bench.spec.adjacency);
        put(m, "cf.mse", cm.mse);
        put(m, "cf.sse", cm.sse);
    }
    return m;
}

Eigen::Vector3d negatives_toy_gains(const NegativesToyConfig& config, double p_ns, std::uint64_t seed) {
    Rng rng(derive_seed(seed, Stream::Noise));
    Dataset data{{"x", "z", "y"}, Eigen::MatrixXd(config.samples, 3)};
    for (int r = 0; r < config.samples; ++r) {
        const double x = rng.normal(0.0, config.sigma);
        data.values(r, 0) = x;
        data.values(r, 1) = rng.normal(0.0, config.sigma);
        data.values(r, 2) = config.scale * x;
    }
    DiscoveryConfig cfg;
    cfg.priors.lambda_l1 = config.lambda_l1;
    cfg.priors.negatives = NegativeSampling{2, p_ns, config.k};
    cfg.train.epochs = config.epochs;
    cfg.train.batch_size = config.batch_size;
    cfg.train.gains.lr = config.lr;
    cfg.train.seed = seed;
    const auto result = discover_with_negatives(data, 2, cfg);
    return result.weighted.col(2);
}

// ---------------------------------------------------------------------------
// Experiment driver

namespace {

namespace fs = std::filesystem;

json graph_metric_json(const Eigen::MatrixXd& truth_weights, const DiscoveryResult& d) {
    const auto gm = graph_metrics((truth_weights.array() != 0.0).cast<double>(), d.binary);
    json m = json::object();
    m["graph.mae"] = mae(truth_weights, d.weighted);
    m["graph.fdr"] = gm.fdr;
    m["graph.tpr"] = gm.tpr;
    m["graph.fpr"] = gm.fpr;
    m["graph.shd"] = gm.shd;
    m["graph.shd_elementwise"] = gm.shd_elementwise;
    m["graph.nnz"] = gm.nnz;
    m["graph.f1"] = gm.f1;
    return m;
}

Eigen::MatrixXd truth_weights(const ScmSpec& spec) {
    return spec.is_linear() ? spec.weight_matrix() : spec.adjacency;
}

void write_fit_trace(const ScmFitResult& fit, const fs::path& path) {
    Dataset d{{"epoch", "energy", "prior_l1", "prior_dag"},
              Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(fit.energy.size()), 4)};
    for (std::size_t e = 0; e < fit.energy.size(); ++e) {
        d.values(static_cast<Eigen::Index>(e), 0) = static_cast<double>(e + 1);
        d.values(static_cast<Eigen::Index>(e), 1) = fit.energy[e];
    }
    save_csv(d, path);
}

json run_seed(const ExperimentConfig& config, std::uint64_t seed) {
    const fs::path dir = fs::path(config.output_dir) / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    const std::string rel = "seed_" + std::to_string(seed) + "/";
    json entry{{"seed", seed}};
    json metrics = json::object();
    json artifacts = json::object();

    if (config.experiment == ExperimentKind::NegativesToy) {
        const Eigen::Vector3d plain = negatives_toy_gains(config.negatives, 0.0, seed);
        const Eigen::Vector3d with = negatives_toy_gains(config.negatives, config.negatives.p_ns, seed);
        Eigen::Index a = 0;
        Eigen::Index b = 0;
        plain.cwiseAbs().maxCoeff(&a);
        with.cwiseAbs().maxCoeff(&b);
        const char* names[] = {"x", "z", "y"};
        for (int i = 0; i < 3; ++i) {
            metrics[std::string("plain.gain_") + names[i]] = plain(i);
            metrics[std::string("negatives.gain_") + names[i]] = with(i);
        }
        metrics["plain.self_is_argmax"] = a == 2 ? 1 : 0;
        metrics["negatives.input_is_argmax"] = b == 0 ? 1 : 0;
        entry["metrics"] = metrics;
        entry["argmax"] = {{"plain", names[a]}, {"negatives", names[b]}};
        entry["artifacts"] = artifacts;
        return entry;
    }

    const ScmSpec spec = build_spec(config.graph, seed);
    write_json(scm_spec_to_json(spec), dir / "spec.json");
    artifacts["spec"] = rel + "spec.json";

    if (config.experiment == ExperimentKind::Discover) {
        const Dataset data = oracle_sample(spec, config.discovery_samples, std::nullopt, seed);
        DiscoveryConfig dc = config.discovery;
        dc.train.seed = seed;
        dc.truth = truth_weights(spec);
        const auto result = discover(data, dc);
        save_csv(matrix_to_dataset(result.weighted), dir / "weighted.csv");
        save_csv(matrix_to_dataset(result.binary), dir / "binary.csv");
        save_csv(trace_to_dataset(result.trace), dir / "trace.csv");
        artifacts["weighted"] = rel + "weighted.csv";
        artifacts["binary"] = rel + "binary.csv";
        artifacts["trace"] = rel + "trace.csv";
        metrics.update(graph_metric_json(*dc.truth, result));
        entry["metrics"] = metrics;
        entry["artifacts"] = artifacts;
        return entry;
    }

    const Benchmark bench = make_benchmark(spec, config.n_train, config.n_test, seed);
    AugmentConfig aug = config.augment;
    aug.seed = seed;
    ScmFitConfig fc = config.fit;
    fc.seed = seed;

    json checkpoints = json::array();
    FitCheckpoint on_checkpoint;
    if (fc.checkpoint_every > 0) {
        on_checkpoint = [&](int epoch, const FittedScm& current) {
            json row = evaluate_scm(current, bench, config.query, seed);
            row["epoch"] = epoch;
            checkpoints.push_back(row);
        };
    }

    ScmFitResult fit{FittedScm{PCGraph({}, {}), {}}, {}};
    if (config.experiment == ExperimentKind::EndToEnd) {
        EndToEndConfig ec{config.discovery, aug, fc};
        ec.discovery.train.seed = seed;
        ec.discovery.truth = truth_weights(spec);
        auto e2e = end_to_end(bench.train, ec, on_checkpoint);
        save_csv(matrix_to_dataset(e2e.discovery.weighted), dir / "weighted.csv");
        save_csv(matrix_to_dataset(e2e.discovery.binary), dir / "binary.csv");
        save_csv(trace_to_dataset(e2e.discovery.trace), dir / "trace.csv");
        artifacts["weighted"] = rel + "weighted.csv";
        artifacts["binary"] = rel + "binary.csv";
        artifacts["trace"] = rel + "trace.csv";
        metrics.update(graph_metric_json(*ec.discovery.truth, e2e.discovery));
        json removed = json::array();
        for (auto [a, b] : e2e.repair.removed) removed.push_back({a + 1, b + 1});
        entry["removed_edges"] = removed;
        fit = std::move(e2e.fit);
    } else {
        fit = fit_scm(augment_with_exogenous(spec.adjacency, aug), bench.train, fc, on_checkpoint);
    }
    write_json(fitted_scm_to_json(fit.scm), dir / "model.json");
    write_fit_trace(fit, dir / "fit_trace.csv");
    artifacts["model"] = rel + "model.json";
    artifacts["fit_trace"] = rel + "fit_trace.csv";
    if (!checkpoints.empty()) {
        write_json(checkpoints, dir / "checkpoints.json");
        artifacts["checkpoints"] = rel + "checkpoints.json";
    }
    metrics.update(evaluate_scm(fit.scm, bench, config.query, seed));
    metrics["fit.final_energy"] = fit.energy.empty() ? 0.0 : fit.energy.back();
    entry["metrics"] = metrics;
    entry["artifacts"] = artifacts;
    return entry;
}

json aggregate(const json& per_seed) {
    std::map<std::string, std::vector<double>> values;
    std::vector<std::string> order;
    for (const auto& e : per_seed) {
        for (const auto& [k, v] : e.at("metrics").items()) {
            if (!v.is_number()) continue;
            if (!values.contains(k)) order.push_back(k);
            values[k].push_back(v.get<double>());
        }
    }
    json out = json::object();
    for (const auto& k : order) {
        const auto& v = values[k];
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
        out[k] = {{"mean", mean}, {"std", sd}, {"n", v.size()}};
    }
    return out;
}

}  // namespace

json run_experiment(const ExperimentConfig& config, int threads) {
    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(config.output_dir);
    std::vector<json> entries(config.seeds.size());
    std::vector<std::exception_ptr> errors(config.seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
            try {
                entries[i] = run_seed(config, config.seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int pool = std::max(1, std::min<int>(threads, static_cast<int>(config.seeds.size())));
    if (pool == 1) {
        worker();
    } else {
        std::vector<std::thread> ts;
        for (int t = 0; t < pool; ++t) ts.emplace_back(worker);
        for (auto& t : ts) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    json report;
    report["experiment"] = to_string(config.experiment);
    report["config"] = experiment_config_to_json(config);
    report["per_seed"] = json::array();
    for (auto& e : entries) report["per_seed"].push_back(std::move(e));
    report["aggregate"] = aggregate(report["per_seed"]);
    report["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(report, fs::path(config.output_dir) / "report.json");
    return report;
}

int thread_count_from_env() {
    const char* raw = std::getenv("PC_CAUSAL_THREADS");
    if (raw == nullptr || *raw == '\0') return 1;
    char* end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (*end != '\0' || v < 1 || v > 1024) throw ConfigError("PC_CAUSAL_THREADS must be a positive integer");
    return static_cast<int>(v);
}

}  // namespace pcc
