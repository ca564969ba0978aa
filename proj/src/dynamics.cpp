#include "pcc/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "pcc/error.hpp"
#include "pcc/rng.hpp"

namespace pcc {

std::string_view to_string(OptimizerKind kind) {
    return kind == OptimizerKind::Sgd ? "sgd" : "adamw";
}

OptimizerKind optimizer_from_string(std::string_view name) {
    if (name == "sgd") return OptimizerKind::Sgd;
    if (name == "adamw") return OptimizerKind::AdamW;
    throw ConfigError("unknown optimizer: " + std::string(name));
}

std::string_view to_string(Schedule mode) {
    return mode == Schedule::Standard ? "standard" : "ipc";
}

Schedule schedule_from_string(std::string_view name) {
    if (name == "standard") return Schedule::Standard;
    if (name == "ipc") return Schedule::Incremental;
    throw ConfigError("unknown training mode: " + std::string(name));
}

void optimizer_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads,
                    OptimizerState& state, const OptimizerConfig& config) {
    if (params.size() != grads.size()) throw ShapeError("gradient and parameter sizes differ");
    if (config.kind == OptimizerKind::Sgd) {
        if (config.weight_decay != 0.0) params -= config.lr * config.weight_decay * params;
        params -= config.lr * grads;
        ++state.step;
        return;
    }
    if (state.m.size() != params.size()) {
        state.m = Eigen::VectorXd::Zero(params.size());
        state.v = Eigen::VectorXd::Zero(params.size());
        state.step = 0;
    }
    ++state.step;
    state.m = config.beta1 * state.m + (1.0 - config.beta1) * grads;
    state.v = config.beta2 * state.v + (1.0 - config.beta2) * grads.cwiseProduct(grads);
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    if (config.weight_decay != 0.0) params -= config.lr * config.weight_decay * params;
    params.array() -= config.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + config.eps);
}

void value_step(const PCGraph& graph, GraphState& state, double gamma) {
    const int n = graph.size();
    const auto eps = effective_errors(state);
    std::vector<Eigen::MatrixXd> delta(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (state.value_clamped[sj]) continue;
        Eigen::MatrixXd d = -eps[sj];
        for (int k : graph.children(j)) {
            const auto sk = static_cast<std::size_t>(k);
            if (state.error_clamped[sk]) continue;
            d += graph.gain(j, k) * graph.edge({j, k}).backward(state.values[sj], eps[sk], nullptr);
        }
        delta[sj] = std::move(d);
    }
    for (int j = 0; j < n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (!state.value_clamped[sj]) state.values[sj] += gamma * delta[sj];
    }
    predict(graph, state);
}

std::vector<double> run_inference(const PCGraph& graph, GraphState& state,
                                  const InferenceConfig& config, const StepObserver& observer) {
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(std::max(config.steps, 0)));
    const bool any_free =
        std::find(state.value_clamped.begin(), state.value_clamped.end(), false) != state.value_clamped.end();
    double previous = energy(graph, state);
    for (int t = 0; t < config.steps; ++t) {
        if (any_free) value_step(graph, state, config.gamma);
        const double f = energy(graph, state);
        trace.push_back(f);
        if (observer) observer(t, state);
        if (config.early_stop && previous - f < config.early_stop_tol && previous >= f) break;
        previous = f;
    }
    return trace;
}

std::map<EdgeKey, Eigen::VectorXd> weight_grads(const PCGraph& graph, const GraphState& state) {
    const auto eps = effective_errors(state);
    const double scale = state.batch_size() > 0 ? -2.0 / state.batch_size() : 0.0;
    std::map<EdgeKey, Eigen::VectorXd> out;
    for (const auto& [key, f] : graph.edges()) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(f.num_params());
        const auto child = static_cast<std::size_t>(key.second);
        const double a = graph.gain(key.first, key.second);
        if (!state.error_clamped[child] && a != 0.0) {
            f.backward(state.values[static_cast<std::size_t>(key.first)], eps[child], &g);
            g *= scale * a;
        }
        out.emplace(key, std::move(g));
    }
    return out;
}

Eigen::MatrixXd gain_grads(const PCGraph& graph, const GraphState& state) {
    const auto eps = effective_errors(state);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(graph.size(), graph.size());
    if (state.batch_size() == 0) return out;
    const double scale = -2.0 / state.batch_size();
    for (const auto& [key, f] : graph.edges()) {
        const auto child = static_cast<std::size_t>(key.second);
        if (state.error_clamped[child]) continue;
        const Eigen::MatrixXd y = f.forward(state.values[static_cast<std::size_t>(key.first)]);
        out(key.first, key.second) = scale * (eps[child].array() * y.array()).sum();
    }
    return out;
}

namespace {

struct SubBatch {
    GraphState state;
    int count = 0;
};

Eigen::MatrixXd gather(const Dataset& data, const std::vector<Eigen::Index>& rows, int column, int dim) {
    Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int d = 0; d < dim; ++d) m(d, static_cast<Eigen::Index>(r)) = data.values(rows[r], column + d);
    return m;
}

}  // namespace

TrainResult train(PCGraph& graph, const Dataset& data, const std::vector<ColumnBinding>& clamp,
                  const TrainConfig& config, const TrainHooks& hooks) {
    if (config.steps < 1) throw ConfigError("inference steps must be at least 1");
    if (config.batch_size < 1) throw ConfigError("batch size must be positive");
    for (const auto& b : clamp) {
        if (b.vertex < 0 || b.vertex >= graph.size()) throw GraphError("clamp binding to unknown vertex");
        if (b.column < 0 || b.column + graph.dim(b.vertex) > data.cols())
            throw ShapeError("dataset has too few columns for vertex " + graph.vertex_name(b.vertex));
    }
    const ColumnBinding* label = nullptr;
    if (config.negatives) {
        const auto& neg = *config.negatives;
        if (neg.p_ns < 0.0 || neg.p_ns > 1.0) throw ConfigError("p_ns must lie in [0, 1]");
        if (neg.k < 0.0) throw ConfigError("target energy k must be nonnegative");
        for (const auto& b : clamp)
            if (b.vertex == neg.label_vertex) label = &b;
        if (label == nullptr) throw ConfigError("negative sampling needs the label vertex bound to data");
    }

    TrainResult result;
    const Eigen::Index n = data.rows();
    Rng batch_rng(derive_seed(config.seed, Stream::Batching));
    Rng neg_rng(derive_seed(config.seed, Stream::Negatives));
    std::map<EdgeKey, OptimizerState> weight_state;
    OptimizerState gain_state;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto perm = batch_rng.permutation(static_cast<std::size_t>(n));
        double energy_sum = 0.0;
        Eigen::Index seen = 0;
        for (Eigen::Index start = 0; start < n; start += config.batch_size) {
            const Eigen::Index stop = std::min<Eigen::Index>(n, start + config.batch_size);
            std::vector<Eigen::Index> pos_rows;
            std::vector<Eigen::Index> neg_rows;
            for (Eigen::Index i = start; i < stop; ++i) {
                const auto row = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
                if (config.negatives && neg_rng.bernoulli(config.negatives->p_ns))
                    neg_rows.push_back(row);
                else
                    pos_rows.push_back(row);
            }

            std::vector<SubBatch> batches;
            auto build = [&](const std::vector<Eigen::Index>& rows, bool negative) {
                if (rows.empty()) return;
                SubBatch sb{make_state(graph, static_cast<int>(rows.size())), static_cast<int>(rows.size())};
                for (const auto& b : clamp) {
                    Eigen::MatrixXd v = gather(data, rows, b.column, graph.dim(b.vertex));
                    if (negative && &b == label) {
                        // Swap in the label of another row whose label differs.
                        for (std::size_t r = 0; r < rows.size(); ++r) {
                            const Eigen::MatrixXd own = v.col(static_cast<Eigen::Index>(r));
                            for (int attempt = 0; attempt < 32; ++attempt) {
                                const auto other = static_cast<Eigen::Index>(neg_rng.index(static_cast<std::size_t>(n)));
                                Eigen::MatrixXd cand = gather(data, {other}, b.column, graph.dim(b.vertex));
                                if (cand != own) {
                                    v.col(static_cast<Eigen::Index>(r)) = cand;
                                    break;
                                }
                            }
                        }
                    }
                    clamp_value(sb.state, b.vertex, v);
                }
                if (negative) sb.state.target = EnergyTarget{config.negatives->label_vertex, config.negatives->k};
                forward_sweep(graph, sb.state);
                batches.push_back(std::move(sb));
            };
            build(pos_rows, false);
            build(neg_rows, true);
            const double total = static_cast<double>(stop - start);

            auto update = [&] {
                if (config.learn_weights) {
                    std::map<EdgeKey, Eigen::VectorXd> grads;
                    for (const auto& sb : batches) {
                        auto g = weight_grads(graph, sb.state);
                        for (auto& [key, v] : g) {
                            v *= sb.count / total;
                            auto it = grads.find(key);
                            if (it == grads.end()) grads.emplace(key, std::move(v));
                            else it->second += v;
                        }
                    }
                    for (auto& [key, g] : grads) {
                        auto& f = graph.edge(key);
                        if (!f.trainable() || f.num_params() == 0) continue;
                        Eigen::VectorXd p = f.params();
                        optimizer_step(p, g, weight_state[key], config.weights);
                        f.set_params(p);
                    }
                }
                if (config.learn_gains) {
                    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(graph.size(), graph.size());
                    for (const auto& sb : batches) g += (sb.count / total) * gain_grads(graph, sb.state);
                    if (hooks.gain_regularizer) hooks.gain_regularizer(epoch, graph.gains(), g);
                    for (int i = 0; i < graph.size(); ++i)
                        for (int j = 0; j < graph.size(); ++j)
                            if (!graph.has_edge(i, j)) g(i, j) = 0.0;
                    Eigen::MatrixXd a = graph.gains();
                    Eigen::Map<Eigen::VectorXd> flat(a.data(), a.size());
                    optimizer_step(flat, Eigen::Map<const Eigen::VectorXd>(g.data(), g.size()), gain_state,
                                   config.gains);
                    graph.set_gains(a);
                }
                for (auto& sb : batches) predict(graph, sb.state);
            };

            double batch_energy = 0.0;
            for (int t = 0; t < config.steps; ++t) {
                for (auto& sb : batches) {
                    const bool any_free = std::find(sb.state.value_clamped.begin(), sb.state.value_clamped.end(),
                                                    false) != sb.state.value_clamped.end();
                    if (any_free) value_step(graph, sb.state, config.gamma);
                }
                if (t + 1 == config.steps) {
                    batch_energy = 0.0;
                    for (const auto& sb : batches) batch_energy += sample_energies(sb.state).sum();
                }
                if (config.mode == Schedule::Incremental || t + 1 == config.steps) update();
            }
            energy_sum += batch_energy;
            seen += stop - start;
        }
        const double mean_energy = seen > 0 ? energy_sum / static_cast<double>(seen) : 0.0;
        result.energy.push_back(mean_energy);
        if (hooks.on_epoch) hooks.on_epoch(epoch, graph, mean_energy);
    }
    return result;
}

}  // namespace pcc
