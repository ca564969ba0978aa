#include "pcc/scm.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pcc/adjacency.hpp"
#include "pcc/error.hpp"
#include "pcc/rng.hpp"

namespace pcc {

std::string_view to_string(EquationKind kind) {
    return kind == EquationKind::Linear ? "linear" : "nonlinear";
}

EquationKind equation_kind_from_string(std::string_view name) {
    if (name == "linear") return EquationKind::Linear;
    if (name == "nonlinear") return EquationKind::Nonlinear;
    throw ConfigError("unknown equation kind: " + std::string(name));
}

std::string_view to_string(EdgeRegime regime) {
    return regime == EdgeRegime::Linear ? "linear" : "nonlinear";
}

EdgeRegime edge_regime_from_string(std::string_view name) {
    if (name == "linear") return EdgeRegime::Linear;
    if (name == "nonlinear") return EdgeRegime::Nonlinear;
    throw ConfigError("unknown regime: " + std::string(name));
}

// ---------------------------------------------------------------------------
// Closed-form nonlinear mechanisms, indices 0-based.

namespace {

using Column = Eigen::ArrayXd;

struct Mechanism {
    std::vector<int> parents;
    std::function<Column(const Eigen::MatrixXd&)> eval;
};

Column squash(const Column& x) { return -1.0 + 3.0 / (1.0 + (-2.0 * x).exp()); }

const std::map<std::string, Mechanism, std::less<>>& catalog() {
    static const std::map<std::string, Mechanism, std::less<>> table = [] {
        std::map<std::string, Mechanism, std::less<>> t;
        auto col = [](const Eigen::MatrixXd& X, int i) -> Column { return X.col(i).array(); };
        t["fork.x2"] = {{0}, [=](const auto& X) { return squash(col(X, 0)); }};
        t["fork.x3"] = {{0}, [=](const auto& X) { return Column(0.25 * col(X, 0).square()); }};
        t["collider.x3"] = {{0, 1}, [=](const auto& X) {
                                return Column(0.05 * col(X, 0) + 0.25 * col(X, 1).square());
                            }};
        t["confounder.x2"] = {{0}, [=](const auto& X) { return squash(col(X, 0)); }};
        t["confounder.x3"] = {{0, 1}, [=](const auto& X) {
                                  return Column(col(X, 0) + 0.25 * col(X, 1).square());
                              }};
        t["chain.x2"] = {{0}, [=](const auto& X) { return squash(col(X, 0)); }};
        t["chain.x3"] = {{1}, [=](const auto& X) { return Column(0.25 * col(X, 1).square()); }};
        t["mediator.x2"] = {{0}, [=](const auto& X) { return Column(1.0 - (0.5 * col(X, 0)).cosh()); }};
        t["mediator.x3"] = {{0, 1}, [=](const auto& X) {
                                return Column(col(X, 0) + 0.25 * col(X, 1).square());
                            }};
        t["m_bias.x3"] = {{0, 1}, [=](const auto& X) {
                              return Column(0.5 * col(X, 0).square() - col(X, 1));
                          }};
        t["m_bias.x4"] = {{0}, [=](const auto& X) {
                              return Column(col(X, 0) + 0.5 * col(X, 0).square());
                          }};
        t["m_bias.x5"] = {{1}, [=](const auto& X) { return Column(-1.5 * col(X, 1).square()); }};
        t["butterfly.x3"] = {{0, 1}, [=](const auto& X) {
                                 return Column(0.5 * col(X, 0).square() - col(X, 1));
                             }};
        t["butterfly.x4"] = {{0, 2}, [=](const auto& X) {
                                 return Column(col(X, 0) + 0.5 * col(X, 0).square() - 0.25 * col(X, 2).square());
                             }};
        t["butterfly.x5"] = {{1, 2}, [=](const auto& X) {
                                 return Column(-1.5 * col(X, 1).square() + 0.25 * col(X, 2).square());
                             }};
        return t;
    }();
    return table;
}

const Mechanism& mechanism(std::string_view id) {
    const auto it = catalog().find(id);
    if (it == catalog().end()) throw ConfigError("unknown nonlinear expression: " + std::string(id));
    return it->second;
}

Eigen::VectorXd mechanism_value(const StructuralEquation& eq, const Eigen::MatrixXd& X) {
    if (eq.kind == EquationKind::Linear) return X * eq.weights;
    const auto& m = mechanism(eq.expression);
    if (X.cols() <= *std::max_element(m.parents.begin(), m.parents.end()))
        throw ShapeError("expression " + eq.expression + " needs more variables");
    return m.eval(X).matrix();
}

}  // namespace

std::vector<int> expression_parents(std::string_view id) { return mechanism(id).parents; }

Eigen::VectorXd evaluate_expression(std::string_view id, const Eigen::MatrixXd& X) {
    StructuralEquation eq{EquationKind::Nonlinear, {}, std::string(id)};
    return mechanism_value(eq, X);
}

std::vector<std::string> expression_catalog() {
    std::vector<std::string> out;
    for (const auto& [id, m] : catalog()) out.push_back(id);
    return out;
}

// ---------------------------------------------------------------------------
// Spec

Eigen::MatrixXd ScmSpec::weight_matrix() const {
    const int n = size();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& eq = equations.at(static_cast<std::size_t>(i));
        if (eq.kind != EquationKind::Linear) throw ConfigError("weight matrix requested for a nonlinear SCM");
        W.col(i) = eq.weights;
    }
    return W;
}

bool ScmSpec::is_linear() const {
    return std::all_of(equations.begin(), equations.end(),
                       [](const StructuralEquation& e) { return e.kind == EquationKind::Linear; });
}

void validate(const ScmSpec& spec) {
    const int n = spec.size();
    if (spec.adjacency.cols() != n) throw ShapeError("adjacency must be square");
    if (static_cast<int>(spec.equations.size()) != n) throw ShapeError("need one equation per variable");
    if (static_cast<int>(spec.noise.size()) != n) throw ShapeError("need one noise entry per variable");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (spec.adjacency(i, j) != 0.0 && spec.adjacency(i, j) != 1.0)
                throw ConfigError("adjacency must be binary");
    if (!is_dag(spec.adjacency)) throw GraphError("SCM adjacency is cyclic");
    for (int i = 0; i < n; ++i) {
        const auto& eq = spec.equations[static_cast<std::size_t>(i)];
        if (eq.kind == EquationKind::Linear) {
            if (eq.weights.size() != n) throw ShapeError("linear equation weights must have length N");
            for (int j = 0; j < n; ++j)
                if (eq.weights(j) != 0.0 && spec.adjacency(j, i) == 0.0)
                    throw GraphError("equation for x" + std::to_string(i + 1) + " uses a non-parent");
        } else {
            auto parents = expression_parents(eq.expression);
            std::vector<int> declared;
            for (int j = 0; j < n; ++j)
                if (spec.adjacency(j, i) != 0.0) declared.push_back(j);
            std::sort(parents.begin(), parents.end());
            if (parents != declared)
                throw GraphError("expression " + eq.expression + " does not match the parents of x" +
                                 std::to_string(i + 1));
        }
        if (spec.noise[static_cast<std::size_t>(i)].sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
    }
}

ScmSpec linear_scm(const Eigen::MatrixXd& weights, std::vector<NoiseParams> noise) {
    const int n = static_cast<int>(weights.rows());
    ScmSpec spec;
    spec.adjacency = (weights.array() != 0.0).cast<double>();
    for (int i = 0; i < n; ++i) spec.equations.push_back({EquationKind::Linear, weights.col(i), {}});
    spec.noise = noise.empty() ? std::vector<NoiseParams>(static_cast<std::size_t>(n)) : std::move(noise);
    validate(spec);
    return spec;
}

// ---------------------------------------------------------------------------
// Oracles

Eigen::MatrixXd oracle_evaluate(const ScmSpec& spec, const Eigen::MatrixXd& U,
                                const std::optional<Intervention>& intervention) {
    validate(spec);
    const int n = spec.size();
    if (U.cols() != n) throw ShapeError("exogenous matrix must have N columns");
    if (intervention && (intervention->vertex < 0 || intervention->vertex >= n))
        throw GraphError("intervention on unknown vertex");
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(U.rows(), n);
    const std::vector<int> order = *topological_order(spec.adjacency);
    for (int i : order) {
        if (intervention && intervention->vertex == i) {
            X.col(i).setConstant(intervention->value);
            continue;
        }
        X.col(i) = mechanism_value(spec.equations[static_cast<std::size_t>(i)], X) + U.col(i);
    }
    return X;
}

Eigen::MatrixXd sample_exogenous(const ScmSpec& spec, Eigen::Index n, std::uint64_t seed) {
    const int d = spec.size();
    Rng rng(derive_seed(seed, Stream::Noise));
    Eigen::MatrixXd U(n, d);
    for (Eigen::Index r = 0; r < n; ++r)
        for (int i = 0; i < d; ++i) {
            const auto& p = spec.noise.at(static_cast<std::size_t>(i));
            U(r, i) = p.mu + p.sigma * rng.normal();
        }
    return U;
}

Dataset oracle_sample(const ScmSpec& spec, Eigen::Index n, const std::optional<Intervention>& intervention,
                      std::uint64_t seed) {
    validate(spec);
    return Dataset{variable_names(spec.size()), oracle_evaluate(spec, sample_exogenous(spec, n, seed), intervention)};
}

std::vector<CfPair> oracle_counterfactual(const ScmSpec& spec, Eigen::Index n, int do_vertex,
                                          const std::vector<double>& do_values, std::uint64_t seed) {
    validate(spec);
    if (do_vertex < 0 || do_vertex >= spec.size()) throw GraphError("do-vertex out of range");
    if (do_values.empty() && n > 0) throw ConfigError("need at least one intervention value");
    const Eigen::MatrixXd U = sample_exogenous(spec, n, seed);
    const Eigen::MatrixXd X = oracle_evaluate(spec, U);
    Rng pick(derive_seed(seed, Stream::Interventions));
    std::vector<CfPair> pairs;
    pairs.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        const double value = do_values[pick.index(do_values.size())];
        const Eigen::MatrixXd cf = oracle_evaluate(spec, U.row(r), Intervention{do_vertex, value});
        pairs.push_back({X.row(r).transpose(), cf.row(0).transpose(), do_vertex, value});
    }
    return pairs;
}

Dataset cf_pairs_to_dataset(const std::vector<CfPair>& pairs, int n) {
    Dataset d;
    d.columns = variable_names(n);
    for (const auto& c : variable_names(n, "x_cf")) d.columns.push_back(c);
    d.columns.push_back("do_vertex");
    d.columns.push_back("do_value");
    d.values.resize(static_cast<Eigen::Index>(pairs.size()), 2 * n + 2);
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        const auto& p = pairs[r];
        if (p.factual.size() != n || p.counterfactual.size() != n) throw ShapeError("pair width mismatch");
        const auto row = static_cast<Eigen::Index>(r);
        d.values.row(row).head(n) = p.factual.transpose();
        d.values.row(row).segment(n, n) = p.counterfactual.transpose();
        d.values(row, 2 * n) = p.do_vertex + 1;
        d.values(row, 2 * n + 1) = p.do_value;
    }
    return d;
}

std::vector<CfPair> cf_pairs_from_dataset(const Dataset& data) {
    const int dv = data.require_column("do_vertex");
    const int dval = data.require_column("do_value");
    int n = 0;
    while (data.column_index("x" + std::to_string(n + 1)) >= 0) ++n;
    std::vector<int> fx, cx;
    for (int i = 0; i < n; ++i) {
        fx.push_back(data.require_column("x" + std::to_string(i + 1)));
        cx.push_back(data.require_column("x_cf" + std::to_string(i + 1)));
    }
    std::vector<CfPair> pairs;
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        CfPair p{Eigen::VectorXd(n), Eigen::VectorXd(n), 0, data.values(r, dval)};
        for (int i = 0; i < n; ++i) {
            p.factual(i) = data.values(r, fx[static_cast<std::size_t>(i)]);
            p.counterfactual(i) = data.values(r, cx[static_cast<std::size_t>(i)]);
        }
        const double v = data.values(r, dv);
        if (v < 1 || v > n || v != std::floor(v)) throw DataError("do_vertex out of range");
        p.do_vertex = static_cast<int>(v) - 1;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

// ---------------------------------------------------------------------------
// PC model of an SCM

PCGraph augment_with_exogenous(const Eigen::MatrixXd& adjacency, const AugmentConfig& config) {
    if (adjacency.rows() != adjacency.cols()) throw ShapeError("adjacency must be square");
    if (!is_dag(adjacency)) throw GraphError("cannot build an SCM on a cyclic adjacency");
    const int n = static_cast<int>(adjacency.rows());
    std::vector<VertexSpec> vertices;
    for (int i = 0; i < n; ++i) vertices.push_back({i, 1, VertexRole::Endogenous, "x" + std::to_string(i + 1)});
    for (int i = 0; i < n; ++i) vertices.push_back({n + i, 1, VertexRole::Exogenous, "u" + std::to_string(i + 1)});
    Rng rng(derive_seed(config.seed, Stream::ModelInit));
    std::vector<EdgeEntry> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (adjacency(i, j) == 0.0) continue;
            if (config.regime == EdgeRegime::Linear)
                edges.push_back({{i, j}, EdgeFunction::scalar(rng.uniform(-1.0, 1.0))});
            else
                edges.push_back({{i, j}, EdgeFunction::random_mlp(1, 1, config.hidden, config.activation, rng)});
        }
    }
    for (int i = 0; i < n; ++i) {
        EdgeFunction unit = EdgeFunction::scalar(1.0);
        unit.set_trainable(false);
        edges.push_back({{n + i, i}, std::move(unit)});
    }
    return PCGraph(std::move(vertices), std::move(edges));
}

FittedScm fitted_from_spec(const ScmSpec& spec) {
    validate(spec);
    if (!spec.is_linear()) throw ConfigError("exact PC model needs a linear SCM");
    const int n = spec.size();
    PCGraph graph = augment_with_exogenous(spec.adjacency);
    const Eigen::MatrixXd W = spec.weight_matrix();
    for (const auto& [key, f] : graph.edges()) {
        if (key.first < n) {
            auto& e = graph.edge(key);
            e.set_params(Eigen::VectorXd::Constant(1, W(key.first, key.second)));
        }
    }
    for (int i = 0; i < n; ++i)
        graph.set_bias(n + i, Eigen::VectorXd::Constant(1, spec.noise[static_cast<std::size_t>(i)].mu));
    return FittedScm{std::move(graph), spec.noise};
}

std::vector<NoiseParams> noise_statistics(const Eigen::MatrixXd& U) {
    std::vector<NoiseParams> out;
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
        if (U.cols() == 0) {
            out.push_back({0.0, 0.0});
            continue;
        }
        const double mu = U.row(i).mean();
        const double var = (U.row(i).array() - mu).square().mean();
        out.push_back({mu, std::sqrt(var)});
    }
    return out;
}

namespace {

Eigen::MatrixXd endogenous_block(const PCGraph& graph, const Dataset& data) {
    const int n = graph.size() / 2;
    Eigen::MatrixXd X(n, data.rows());
    for (int i = 0; i < n; ++i) X.row(i) = data.values.col(data.require_column(graph.vertex_name(i))).transpose();
    return X;
}

FittedScm snapshot(const PCGraph& graph, const Eigen::MatrixXd& X, const QueryConfig& abduction) {
    FittedScm scm{graph, {}};
    const Eigen::MatrixXd U = abduct(scm, X, abduction);
    scm.noise = noise_statistics(U);
    const int n = scm.endogenous_count();
    for (int i = 0; i < n; ++i)
        scm.graph.set_bias(n + i, Eigen::VectorXd::Constant(1, scm.noise[static_cast<std::size_t>(i)].mu));
    return scm;
}

}  // namespace

ScmFitResult fit_scm(const PCGraph& graph, const Dataset& data, const ScmFitConfig& config,
                     const FitCheckpoint& checkpoint) {
    validate_scm_layout(graph);
    if (config.steps < 1 || config.batch_size < 1) throw ConfigError("steps and batch size must be positive");
    PCGraph model = graph;
    const int n = model.size() / 2;
    const Eigen::MatrixXd X = endogenous_block(model, data);
    const Eigen::Index rows = X.cols();
    Rng batch_rng(derive_seed(config.seed, Stream::Batching));
    std::map<EdgeKey, OptimizerState> opt;
    ScmFitResult result{FittedScm{model, std::vector<NoiseParams>(static_cast<std::size_t>(n))}, {}};

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto perm = batch_rng.permutation(static_cast<std::size_t>(rows));
        Eigen::VectorXd residual_sum = Eigen::VectorXd::Zero(n);
        double energy_sum = 0.0;
        for (Eigen::Index start = 0; start < rows; start += config.batch_size) {
            const Eigen::Index stop = std::min<Eigen::Index>(rows, start + config.batch_size);
            const auto b = static_cast<int>(stop - start);
            GraphState state = make_state(model, b);
            for (int i = 0; i < n; ++i) {
                Eigen::MatrixXd v(1, b);
                for (int r = 0; r < b; ++r) v(0, r) = X(i, static_cast<Eigen::Index>(perm[static_cast<std::size_t>(start + r)]));
                clamp_value(state, i, v);
            }
            forward_sweep(model, state);
            for (int t = 0; t < config.steps; ++t) value_step(model, state, config.gamma);
            energy_sum += sample_energies(state).sum();
            for (int i = 0; i < n; ++i) {
                const auto si = static_cast<std::size_t>(i);
                residual_sum(i) += (state.errors[si] + state.values[static_cast<std::size_t>(n + i)]).sum();
            }
            const auto grads = weight_grads(model, state);
            for (const auto& [key, g] : grads) {
                auto& f = model.edge(key);
                if (!f.trainable() || f.num_params() == 0) continue;
                Eigen::VectorXd p = f.params();
                optimizer_step(p, g, opt[key], config.optimizer);
                f.set_params(p);
            }
        }
        if (rows > 0) {
            for (int i = 0; i < n; ++i)
                model.set_bias(n + i, Eigen::VectorXd::Constant(1, residual_sum(i) / static_cast<double>(rows)));
            result.energy.push_back(energy_sum / static_cast<double>(rows));
        } else {
            result.energy.push_back(0.0);
        }
        if (checkpoint && config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0)
            checkpoint(epoch + 1, snapshot(model, X, config.abduction));
    }
    result.scm = snapshot(model, X, config.abduction);
    return result;
}

}  // namespace pcc
