#include "pcc/synthgen.hpp"

#include <cmath>

#include "pcc/adjacency.hpp"
#include "pcc/error.hpp"
#include "pcc/rng.hpp"

namespace pcc {

std::string_view to_string(RandomGraphKind kind) { return kind == RandomGraphKind::ER ? "er" : "sf"; }

RandomGraphKind random_graph_kind_from_string(std::string_view name) {
    if (name == "er" || name == "ER") return RandomGraphKind::ER;
    if (name == "sf" || name == "SF") return RandomGraphKind::SF;
    throw ConfigError("unknown random graph kind: " + std::string(name));
}

Eigen::MatrixXd gen_random_dag(const RandomGraphConfig& config) {
    const int n = config.n_nodes;
    const int k = config.edges_per_node;
    if (n < 2) throw ConfigError("random graphs need at least 2 nodes");
    if (k < 1) throw ConfigError("edges per node must be at least 1");
    Rng rng(derive_seed(config.seed, Stream::Graph));
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    if (config.kind == RandomGraphKind::ER) {
        const double p = std::min(1.0, 2.0 * k * n / (static_cast<double>(n) * (n - 1)));
        const auto order = rng.permutation(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.bernoulli(p))
                    A(static_cast<Eigen::Index>(order[static_cast<std::size_t>(i)]),
                      static_cast<Eigen::Index>(order[static_cast<std::size_t>(j)])) = 1.0;
        return A;
    }
    std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
    for (int v = 1; v < n; ++v) {
        std::vector<int> targets;
        if (v <= k) {
            for (int u = 0; u < v; ++u) targets.push_back(u);
        } else {
            std::vector<double> w(degree.begin(), degree.begin() + v);
            for (int pick = 0; pick < k; ++pick) {
                double total = 0.0;
                for (double x : w) total += x;
                double r = rng.uniform() * total;
                int chosen = v - 1;
                for (int u = 0; u < v; ++u) {
                    if (w[static_cast<std::size_t>(u)] <= 0.0) continue;
                    if (r < w[static_cast<std::size_t>(u)]) {
                        chosen = u;
                        break;
                    }
                    r -= w[static_cast<std::size_t>(u)];
                    chosen = u;
                }
                targets.push_back(chosen);
                w[static_cast<std::size_t>(chosen)] = 0.0;
            }
        }
        for (int u : targets) {
            A(v, u) = 1.0;
            degree[static_cast<std::size_t>(u)] += 1.0;
            degree[static_cast<std::size_t>(v)] += 1.0;
        }
    }
    return A;
}

Eigen::MatrixXd assign_weights(const Eigen::MatrixXd& adjacency, std::pair<double, double> range,
                               std::uint64_t seed) {
    if (range.first < 0.0 || range.second < range.first) throw ConfigError("invalid weight range");
    Rng rng(derive_seed(seed, Stream::EdgeWeights));
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(adjacency.rows(), adjacency.cols());
    for (Eigen::Index i = 0; i < adjacency.rows(); ++i)
        for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
            if (adjacency(i, j) == 0.0) continue;
            const double mag = rng.uniform(range.first, range.second);
            W(i, j) = rng.bernoulli(0.5) ? mag : -mag;
        }
    return W;
}

Eigen::MatrixXd common_adjacency(std::string_view name) {
    std::vector<std::pair<int, int>> edges;
    int n = 3;
    if (name == "chain") edges = {{0, 1}, {1, 2}};
    else if (name == "collider") edges = {{0, 2}, {1, 2}};
    else if (name == "confounder") edges = {{0, 1}, {0, 2}, {1, 2}};
    else if (name == "fork") edges = {{0, 1}, {0, 2}};
    else if (name == "mediator") edges = {{0, 1}, {1, 2}, {0, 2}};
    else if (name == "m_bias") {
        n = 5;
        edges = {{0, 2}, {1, 2}, {0, 3}, {1, 4}};
    } else if (name == "butterfly") {
        n = 5;
        edges = {{0, 2}, {1, 2}, {0, 3}, {2, 3}, {1, 4}, {2, 4}};
    } else {
        throw ConfigError("unknown common graph: " + std::string(name));
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (auto [i, j] : edges) A(i, j) = 1.0;
    return A;
}

ScmSpec common_graph(std::string_view name, EdgeRegime regime, std::uint64_t seed,
                     std::pair<double, double> range) {
    const Eigen::MatrixXd A = common_adjacency(name);
    if (regime == EdgeRegime::Linear) return linear_scm(assign_weights(A, range, seed));
    const int n = static_cast<int>(A.rows());
    ScmSpec spec;
    spec.adjacency = A;
    spec.noise.assign(static_cast<std::size_t>(n), NoiseParams{});
    for (int i = 0; i < n; ++i) {
        if ((A.col(i).array() == 0.0).all()) {
            spec.equations.push_back({EquationKind::Linear, Eigen::VectorXd::Zero(n), {}});
        } else {
            spec.equations.push_back(
                {EquationKind::Nonlinear, {}, std::string(name) + ".x" + std::to_string(i + 1)});
        }
    }
    validate(spec);
    return spec;
}

ScmSpec random_scm(const RandomGraphConfig& config) {
    return linear_scm(assign_weights(gen_random_dag(config), config.weight_range, config.seed));
}

std::vector<double> intervention_values(const Dataset& observational, int vertex) {
    if (vertex < 0 || vertex >= observational.cols()) throw GraphError("intervention vertex out of range");
    const auto col = observational.values.col(vertex).array();
    const double mean = observational.rows() > 0 ? col.mean() : 0.0;
    const double sd = observational.rows() > 0 ? std::sqrt((col - mean).square().mean()) : 0.0;
    std::vector<double> out;
    for (double g : kInterventionGrid) out.push_back(mean + sd * g);
    return out;
}

Benchmark make_benchmark(const ScmSpec& spec, Eigen::Index n_train, Eigen::Index n_test, std::uint64_t seed) {
    validate(spec);
    const int n = spec.size();
    Benchmark b;
    b.spec = spec;
    b.train = oracle_sample(spec, n_train, std::nullopt, derive_seed(seed, Stream::Evaluation, 0));

    const Eigen::MatrixXd U = sample_exogenous(spec, n_test, derive_seed(seed, Stream::Evaluation, 1));
    b.test_obs.columns = variable_names(n);
    for (const auto& c : variable_names(n, "u")) b.test_obs.columns.push_back(c);
    b.test_obs.values.resize(n_test, 2 * n);
    b.test_obs.values.leftCols(n) = oracle_evaluate(spec, U);
    b.test_obs.values.rightCols(n) = U;

    b.test_do.columns = variable_names(n);
    b.test_do.columns.push_back("do_vertex");
    b.test_do.columns.push_back("do_value");
    const auto targets = non_leaf_vertices(spec.adjacency);
    b.test_do.values.resize(n_test * static_cast<Eigen::Index>(targets.size()), n + 2);
    Eigen::Index row = 0;
    for (int j : targets) {
        InterventionSet set{j, n_train > 0 ? intervention_values(b.train, j) : std::vector<double>(7, 0.0)};
        const auto jj = static_cast<std::uint64_t>(j);
        const Eigen::MatrixXd Uj = sample_exogenous(spec, n_test, derive_seed(seed, Stream::Evaluation, 2 + 2 * jj));
        Rng pick(derive_seed(seed, Stream::Interventions, jj));
        for (Eigen::Index r = 0; r < n_test; ++r, ++row) {
            const double value = set.values[pick.index(set.values.size())];
            b.test_do.values.row(row).head(n) = oracle_evaluate(spec, Uj.row(r), Intervention{j, value});
            b.test_do.values(row, n) = j + 1;
            b.test_do.values(row, n + 1) = value;
        }
        auto pairs = oracle_counterfactual(spec, n_test, j, set.values, derive_seed(seed, Stream::Evaluation, 3 + 2 * jj));
        b.test_cf.insert(b.test_cf.end(), pairs.begin(), pairs.end());
        b.interventions.push_back(std::move(set));
    }
    return b;
}

}  // namespace pcc
