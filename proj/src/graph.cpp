#include "pcc/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <set>

#include "pcc/error.hpp"

namespace pcc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct MlpPass {
    std::vector<Eigen::MatrixXd> inputs;       // input to each layer
    std::vector<Eigen::MatrixXd> preactivations;
    Eigen::MatrixXd output;
};

MlpPass mlp_forward(const Mlp& mlp, Activation act, const Eigen::MatrixXd& x) {
    MlpPass pass;
    Eigen::MatrixXd h = x;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        const auto& layer = mlp.layers[l];
        pass.inputs.push_back(h);
        Eigen::MatrixXd z = layer.weight * h;
        z.colwise() += layer.bias;
        if (l + 1 < mlp.layers.size()) {
            h = activate(act, z);
            pass.preactivations.push_back(std::move(z));
        } else {
            h = std::move(z);
        }
    }
    pass.output = std::move(h);
    return pass;
}

}  // namespace

std::string_view to_string(VertexRole role) {
    switch (role) {
        case VertexRole::Endogenous: return "endogenous";
        case VertexRole::Exogenous: return "exogenous";
        case VertexRole::Input: return "input";
        case VertexRole::Label: return "label";
    }
    return "endogenous";
}

VertexRole vertex_role_from_string(std::string_view name) {
    for (auto r : {VertexRole::Endogenous, VertexRole::Exogenous, VertexRole::Input,
                   VertexRole::Label}) {
        if (to_string(r) == name) return r;
    }
    throw ConfigError("unknown vertex role: " + std::string(name));
}

std::string_view to_string(EdgeKind kind) {
    switch (kind) {
        case EdgeKind::ScalarLinear: return "scalar_linear";
        case EdgeKind::DenseLinear: return "dense_linear";
        case EdgeKind::Mlp: return "mlp";
    }
    return "scalar_linear";
}

EdgeKind edge_kind_from_string(std::string_view name) {
    for (auto k : {EdgeKind::ScalarLinear, EdgeKind::DenseLinear, EdgeKind::Mlp}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown edge kind: " + std::string(name));
}

// ---------------------------------------------------------------------------
// EdgeFunction

EdgeFunction::EdgeFunction(Body body, Activation activation, bool trainable)
    : body_(std::move(body)), activation_(activation), trainable_(trainable) {
    if (const auto* m = std::get_if<Mlp>(&body_)) {
        if (m->layers.empty()) throw ShapeError("mlp edge needs at least one layer");
        for (std::size_t l = 0; l < m->layers.size(); ++l) {
            const auto& layer = m->layers[l];
            if (layer.bias.size() != layer.weight.rows())
                throw ShapeError("mlp layer bias does not match weight rows");
            if (l > 0 && layer.weight.cols() != m->layers[l - 1].weight.rows())
                throw ShapeError("mlp layers do not chain");
        }
    }
}

EdgeFunction EdgeFunction::scalar(double weight, Activation activation) {
    return EdgeFunction(ScalarLinear{weight}, activation);
}

EdgeFunction EdgeFunction::dense(Eigen::MatrixXd weight, Activation activation) {
    return EdgeFunction(DenseLinear{std::move(weight)}, activation);
}

EdgeFunction EdgeFunction::mlp(std::vector<MlpLayer> layers, Activation hidden) {
    return EdgeFunction(Mlp{std::move(layers)}, hidden);
}

EdgeFunction EdgeFunction::random_mlp(int in_dim, int out_dim, std::span<const int> hidden,
                                      Activation activation, Rng& rng) {
    std::vector<int> dims{in_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out_dim);
    std::vector<MlpLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        MlpLayer layer{Eigen::MatrixXd(dims[l + 1], dims[l]), Eigen::VectorXd(dims[l + 1])};
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
                layer.weight(r, c) = rng.uniform(-bound, bound);
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = rng.uniform(-bound, bound);
        layers.push_back(std::move(layer));
    }
    return mlp(std::move(layers), activation);
}

EdgeKind EdgeFunction::kind() const {
    return std::visit(overloaded{[](const ScalarLinear&) { return EdgeKind::ScalarLinear; },
                                 [](const DenseLinear&) { return EdgeKind::DenseLinear; },
                                 [](const Mlp&) { return EdgeKind::Mlp; }},
                      body_);
}

std::optional<int> EdgeFunction::in_dim() const {
    return std::visit(
        overloaded{[](const ScalarLinear&) -> std::optional<int> { return std::nullopt; },
                   [](const DenseLinear& d) -> std::optional<int> {
                       return static_cast<int>(d.weight.cols());
                   },
                   [](const Mlp& m) -> std::optional<int> {
                       return static_cast<int>(m.layers.front().weight.cols());
                   }},
        body_);
}

std::optional<int> EdgeFunction::out_dim() const {
    return std::visit(
        overloaded{[](const ScalarLinear&) -> std::optional<int> { return std::nullopt; },
                   [](const DenseLinear& d) -> std::optional<int> {
                       return static_cast<int>(d.weight.rows());
                   },
                   [](const Mlp& m) -> std::optional<int> {
                       return static_cast<int>(m.layers.back().weight.rows());
                   }},
        body_);
}

Eigen::MatrixXd EdgeFunction::forward(const Eigen::MatrixXd& x) const {
    return std::visit(
        overloaded{[&](const ScalarLinear& s) -> Eigen::MatrixXd {
                       return s.weight * activate(activation_, x);
                   },
                   [&](const DenseLinear& d) -> Eigen::MatrixXd {
                       return d.weight * activate(activation_, x);
                   },
                   [&](const Mlp& m) -> Eigen::MatrixXd {
                       return mlp_forward(m, activation_, x).output;
                   }},
        body_);
}

Eigen::MatrixXd EdgeFunction::backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& g,
                                       Eigen::VectorXd* param_grad) const {
    if (param_grad != nullptr && param_grad->size() != num_params())
        *param_grad = Eigen::VectorXd::Zero(num_params());
    return std::visit(
        overloaded{
            [&](const ScalarLinear& s) -> Eigen::MatrixXd {
                if (param_grad != nullptr)
                    (*param_grad)(0) += (g.array() * activate(activation_, x).array()).sum();
                return (s.weight * g.array() * activate_derivative(activation_, x).array())
                    .matrix();
            },
            [&](const DenseLinear& d) -> Eigen::MatrixXd {
                if (param_grad != nullptr) {
                    Eigen::MatrixXd gw = g * activate(activation_, x).transpose();
                    param_grad->head(gw.size()) +=
                        Eigen::Map<const Eigen::VectorXd>(gw.data(), gw.size());
                }
                return ((d.weight.transpose() * g).array() *
                        activate_derivative(activation_, x).array())
                    .matrix();
            },
            [&](const Mlp& m) -> Eigen::MatrixXd {
                const MlpPass pass = mlp_forward(m, activation_, x);
                // Parameter offsets, in flattening order.
                std::vector<Eigen::Index> offsets;
                Eigen::Index off = 0;
                for (const auto& layer : m.layers) {
                    offsets.push_back(off);
                    off += layer.weight.size() + layer.bias.size();
                }
                Eigen::MatrixXd upstream = g;
                for (std::size_t l = m.layers.size(); l-- > 0;) {
                    const auto& layer = m.layers[l];
                    if (l + 1 < m.layers.size()) {
                        upstream = (upstream.array() *
                                    activate_derivative(activation_, pass.preactivations[l]).array())
                                       .matrix();
                    }
                    if (param_grad != nullptr) {
                        Eigen::MatrixXd gw = upstream * pass.inputs[l].transpose();
                        param_grad->segment(offsets[l], gw.size()) +=
                            Eigen::Map<const Eigen::VectorXd>(gw.data(), gw.size());
                        param_grad->segment(offsets[l] + gw.size(), layer.bias.size()) +=
                            upstream.rowwise().sum();
                    }
                    upstream = layer.weight.transpose() * upstream;
                }
                return upstream;
            }},
        body_);
}

Eigen::Index EdgeFunction::num_params() const {
    return std::visit(overloaded{[](const ScalarLinear&) -> Eigen::Index { return 1; },
                                 [](const DenseLinear& d) { return d.weight.size(); },
                                 [](const Mlp& m) {
                                     Eigen::Index n = 0;
                                     for (const auto& l : m.layers) n += l.weight.size() + l.bias.size();
                                     return n;
                                 }},
                      body_);
}

Eigen::VectorXd EdgeFunction::params() const {
    Eigen::VectorXd p(num_params());
    std::visit(overloaded{[&](const ScalarLinear& s) { p(0) = s.weight; },
                          [&](const DenseLinear& d) {
                              p = Eigen::Map<const Eigen::VectorXd>(d.weight.data(), d.weight.size());
                          },
                          [&](const Mlp& m) {
                              Eigen::Index off = 0;
                              for (const auto& l : m.layers) {
                                  p.segment(off, l.weight.size()) =
                                      Eigen::Map<const Eigen::VectorXd>(l.weight.data(), l.weight.size());
                                  off += l.weight.size();
                                  p.segment(off, l.bias.size()) = l.bias;
                                  off += l.bias.size();
                              }
                          }},
               body_);
    return p;
}

void EdgeFunction::set_params(const Eigen::VectorXd& p) {
    if (p.size() != num_params()) throw ShapeError("parameter vector size mismatch");
    std::visit(overloaded{[&](ScalarLinear& s) { s.weight = p(0); },
                          [&](DenseLinear& d) {
                              Eigen::Map<Eigen::VectorXd>(d.weight.data(), d.weight.size()) = p;
                          },
                          [&](Mlp& m) {
                              Eigen::Index off = 0;
                              for (auto& l : m.layers) {
                                  Eigen::Map<Eigen::VectorXd>(l.weight.data(), l.weight.size()) =
                                      p.segment(off, l.weight.size());
                                  off += l.weight.size();
                                  l.bias = p.segment(off, l.bias.size());
                                  off += l.bias.size();
                              }
                          }},
               body_);
}

// ---------------------------------------------------------------------------
// PCGraph

PCGraph::PCGraph(std::vector<VertexSpec> vertices, std::vector<EdgeEntry> edges,
                 std::optional<Eigen::MatrixXd> gains, GraphOptions options)
    : vertices_(std::move(vertices)), options_(options) {
    const int n = size();
    for (int i = 0; i < n; ++i) {
        if (vertices_[static_cast<std::size_t>(i)].id != i)
            throw GraphError("vertex ids must be contiguous 0..N-1");
        if (vertices_[static_cast<std::size_t>(i)].dim < 1)
            throw ShapeError("vertex dimension must be positive");
    }
    for (auto& entry : edges) {
        const auto [from, to] = entry.key;
        if (from < 0 || from >= n || to < 0 || to >= n)
            throw GraphError("edge references unknown vertex id");
        if (from == to && !options_.allow_self_edges)
            throw GraphError("self-edge on vertex " + std::to_string(from) + " not allowed");
        const int din = dim(from);
        const int dout = dim(to);
        const auto& f = entry.function;
        if (f.kind() == EdgeKind::ScalarLinear) {
            if (din != dout)
                throw ShapeError("scalar edge needs equal endpoint dimensions");
        } else if (f.in_dim() != din || f.out_dim() != dout) {
            throw ShapeError("edge " + std::to_string(from) + "->" + std::to_string(to) +
                             " shape does not match endpoint dimensions");
        }
        if (!edges_.emplace(entry.key, std::move(entry.function)).second)
            throw GraphError("duplicate edge " + std::to_string(from) + "->" + std::to_string(to));
    }
    if (gains) {
        if (gains->rows() != n || gains->cols() != n) throw ShapeError("gains must be N x N");
        gains_ = *gains;
    } else {
        gains_ = Eigen::MatrixXd::Zero(n, n);
        for (const auto& [key, f] : edges_) gains_(key.first, key.second) = 1.0;
    }
    bias_.reserve(static_cast<std::size_t>(n));
    for (const auto& v : vertices_) bias_.push_back(Eigen::VectorXd::Zero(v.dim));
    index_edges();
}

void PCGraph::index_edges() {
    const int n = size();
    parents_.assign(static_cast<std::size_t>(n), {});
    children_.assign(static_cast<std::size_t>(n), {});
    for (const auto& [key, f] : edges_) {
        parents_[static_cast<std::size_t>(key.second)].push_back(key.first);
        children_[static_cast<std::size_t>(key.first)].push_back(key.second);
    }
    std::vector<int> indegree(static_cast<std::size_t>(n), 0);
    for (const auto& [key, f] : edges_)
        if (key.first != key.second) ++indegree[static_cast<std::size_t>(key.second)];
    std::deque<int> ready;
    for (int v = 0; v < n; ++v)
        if (indegree[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
    order_.clear();
    std::vector<bool> placed(static_cast<std::size_t>(n), false);
    while (!ready.empty()) {
        const int v = ready.front();
        ready.pop_front();
        order_.push_back(v);
        placed[static_cast<std::size_t>(v)] = true;
        for (int c : children_[static_cast<std::size_t>(v)]) {
            if (c == v) continue;
            if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
        }
    }
    acyclic_ = static_cast<int>(order_.size()) == n;
    for (int v = 0; v < n; ++v)
        if (!placed[static_cast<std::size_t>(v)]) order_.push_back(v);
    if (acyclic_) {
        for (const auto& [key, f] : edges_)
            if (key.first == key.second) acyclic_ = false;
    }
}

std::string PCGraph::vertex_name(int v) const {
    const auto& spec = vertex(v);
    return spec.name.empty() ? "v" + std::to_string(v) : spec.name;
}

int PCGraph::find_vertex(std::string_view name) const {
    for (int v = 0; v < size(); ++v)
        if (vertex_name(v) == name) return v;
    int id = -1;
    const auto* end = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(name.data(), end, id);
    if (ec == std::errc{} && ptr == end && id >= 0 && id < size()) return id;
    return -1;
}

const EdgeFunction& PCGraph::edge(EdgeKey key) const {
    auto it = edges_.find(key);
    if (it == edges_.end()) throw GraphError("no such edge");
    return it->second;
}

EdgeFunction& PCGraph::edge(EdgeKey key) {
    auto it = edges_.find(key);
    if (it == edges_.end()) throw GraphError("no such edge");
    return it->second;
}

void PCGraph::set_gains(const Eigen::MatrixXd& gains) {
    if (gains.rows() != size() || gains.cols() != size()) throw ShapeError("gains must be N x N");
    gains_ = gains;
}

void PCGraph::set_bias(int v, const Eigen::VectorXd& b) {
    if (b.size() != dim(v)) throw ShapeError("bias dimension mismatch");
    bias_.at(static_cast<std::size_t>(v)) = b;
}

PCGraph PCGraph::without_edges_into(std::span<const int> targets) const {
    const std::set<int> cut(targets.begin(), targets.end());
    std::vector<EdgeEntry> kept;
    Eigen::MatrixXd gains = gains_;
    for (const auto& [key, f] : edges_) {
        if (cut.contains(key.second)) {
            gains(key.first, key.second) = 0.0;
            continue;
        }
        kept.push_back({key, f});
    }
    PCGraph out(vertices_, std::move(kept), gains, options_);
    out.bias_ = bias_;
    return out;
}

PCGraph build_graph(std::vector<VertexSpec> vertices, std::vector<EdgeEntry> edges,
                    std::optional<Eigen::MatrixXd> gains_init, GraphOptions options) {
    return PCGraph(std::move(vertices), std::move(edges), std::move(gains_init), options);
}

PCGraph fully_connected_graph(int n, bool allow_self_edges) {
    std::vector<VertexSpec> vertices;
    for (int i = 0; i < n; ++i)
        vertices.push_back({i, 1, VertexRole::Endogenous, "x" + std::to_string(i + 1)});
    std::vector<EdgeEntry> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j && !allow_self_edges) continue;
            EdgeFunction f = EdgeFunction::scalar(1.0);
            f.set_trainable(false);
            edges.push_back({{i, j}, std::move(f)});
        }
    }
    return PCGraph(std::move(vertices), std::move(edges), Eigen::MatrixXd::Zero(n, n),
                   GraphOptions{allow_self_edges});
}

// ---------------------------------------------------------------------------
// State, prediction, energy

GraphState make_state(const PCGraph& graph, int batch_size) {
    GraphState s;
    const auto n = static_cast<std::size_t>(graph.size());
    s.values.reserve(n);
    for (int v = 0; v < graph.size(); ++v) s.values.push_back(Eigen::MatrixXd::Zero(graph.dim(v), batch_size));
    s.predictions = s.values;
    s.errors = s.values;
    s.value_clamped.assign(n, false);
    s.error_clamped.assign(n, false);
    return s;
}

void clamp_value(GraphState& state, int v, const Eigen::MatrixXd& value) {
    auto& x = state.values.at(static_cast<std::size_t>(v));
    if (value.rows() != x.rows()) throw ShapeError("clamped value dimension mismatch");
    if (value.cols() == x.cols()) {
        x = value;
    } else if (value.cols() == 1) {
        x = value.replicate(1, x.cols());
    } else {
        throw ShapeError("clamped value batch mismatch");
    }
    state.value_clamped[static_cast<std::size_t>(v)] = true;
}

namespace {

void check_state(const PCGraph& graph, const GraphState& state) {
    if (state.size() != graph.size()) throw ShapeError("state has wrong number of vertices");
    for (int v = 0; v < graph.size(); ++v)
        if (state.values[static_cast<std::size_t>(v)].rows() != graph.dim(v))
            throw ShapeError("state value dimension mismatch at vertex " + std::to_string(v));
}

Eigen::MatrixXd prediction_of(const PCGraph& graph, const GraphState& state, int v) {
    const auto sv = static_cast<std::size_t>(v);
    Eigen::MatrixXd u(graph.dim(v), state.batch_size());
    u.colwise() = graph.bias(v);
    for (int p : graph.parents(v)) {
        const double a = graph.gain(p, v);
        u += a * graph.edge({p, v}).forward(state.values[static_cast<std::size_t>(p)]);
    }
    (void)sv;
    return u;
}

void refresh_error(GraphState& state, int v) {
    const auto sv = static_cast<std::size_t>(v);
    if (state.error_clamped[sv]) {
        state.errors[sv].setZero(state.values[sv].rows(), state.values[sv].cols());
    } else {
        state.errors[sv] = state.values[sv] - state.predictions[sv];
    }
}

}  // namespace

void predict(const PCGraph& graph, GraphState& state) {
    check_state(graph, state);
    for (int v = 0; v < graph.size(); ++v) {
        state.predictions[static_cast<std::size_t>(v)] = prediction_of(graph, state, v);
        refresh_error(state, v);
    }
}

void forward_sweep(const PCGraph& graph, GraphState& state) {
    check_state(graph, state);
    for (int v : graph.topological_order()) {
        const auto sv = static_cast<std::size_t>(v);
        if (!state.value_clamped[sv]) state.values[sv] = prediction_of(graph, state, v);
    }
    predict(graph, state);
}

std::vector<Eigen::MatrixXd> effective_errors(const GraphState& state) {
    std::vector<Eigen::MatrixXd> eps = state.errors;
    if (state.target) {
        const auto t = static_cast<std::size_t>(state.target->label_vertex);
        const auto& e = state.errors.at(t);
        const Eigen::RowVectorXd sq = e.colwise().squaredNorm();
        const Eigen::RowVectorXd scale = 2.0 * (sq.array() - state.target->k).matrix();
        eps[t] = e.array().rowwise() * scale.array();
    }
    return eps;
}

Eigen::VectorXd sample_energies(const GraphState& state) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(state.batch_size());
    for (int v = 0; v < state.size(); ++v) {
        const Eigen::VectorXd sq = state.errors[static_cast<std::size_t>(v)].colwise().squaredNorm().transpose();
        if (state.target && state.target->label_vertex == v) {
            out += (sq.array() - state.target->k).square().matrix();
        } else {
            out += sq;
        }
    }
    return out;
}

double energy(const PCGraph& graph, const GraphState& state) {
    return energy(graph, state, state.target);
}

double energy(const PCGraph& graph, const GraphState& state,
              const std::optional<EnergyTarget>& target) {
    check_state(graph, state);
    if (state.batch_size() == 0) return 0.0;
    if (target.has_value() != state.target.has_value() ||
        (target && (target->label_vertex != state.target->label_vertex || target->k != state.target->k))) {
        GraphState view = state;
        view.target = target;
        return sample_energies(view).mean();
    }
    return sample_energies(state).mean();
}

}  // namespace pcc
