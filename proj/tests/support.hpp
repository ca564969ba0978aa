#pragma once
// Shared fixtures: random PC graphs and finite-difference gradient oracles.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "pcc/dynamics.hpp"
#include "pcc/graph.hpp"
#include "pcc/rng.hpp"

namespace pcc::testing {

struct RandomGraphOptions {
    int max_vertices = 5;
    int max_dim = 3;
    double edge_prob = 0.6;
    bool random_gains = true;
    bool random_bias = true;
    std::optional<Activation> activation;  // every edge uses it when set
};

inline Activation pick_activation(Rng& rng) {
    return kAllActivations[rng.index(std::size(kAllActivations))];
}

/// Random DAG over a shuffled vertex order; edge kinds and activations vary.
inline PCGraph random_graph(Rng& rng, const RandomGraphOptions& opt = {}) {
    const int n = 2 + static_cast<int>(rng.index(static_cast<std::size_t>(opt.max_vertices - 1)));
    std::vector<VertexSpec> vertices;
    for (int i = 0; i < n; ++i)
        vertices.push_back({i, 1 + static_cast<int>(rng.index(static_cast<std::size_t>(opt.max_dim)))});
    const auto order = rng.permutation(static_cast<std::size_t>(n));
    std::vector<EdgeEntry> edges;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            if (!rng.bernoulli(opt.edge_prob)) continue;
            const int from = static_cast<int>(order[static_cast<std::size_t>(a)]);
            const int to = static_cast<int>(order[static_cast<std::size_t>(b)]);
            const int din = vertices[static_cast<std::size_t>(from)].dim;
            const int dout = vertices[static_cast<std::size_t>(to)].dim;
            const Activation act = opt.activation.value_or(pick_activation(rng));
            const std::size_t kind = din == dout ? rng.index(3) : 1 + rng.index(2);
            if (kind == 0) {
                edges.push_back({{from, to}, EdgeFunction::scalar(rng.uniform(-1.5, 1.5), act)});
            } else if (kind == 1) {
                Eigen::MatrixXd w(dout, din);
                for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(-1.0, 1.0);
                edges.push_back({{from, to}, EdgeFunction::dense(w, act)});
            } else {
                const int hidden[] = {1 + static_cast<int>(rng.index(3))};
                edges.push_back({{from, to}, EdgeFunction::random_mlp(din, dout, hidden, act, rng)});
            }
        }
    PCGraph g(std::move(vertices), std::move(edges));
    if (opt.random_gains) {
        Eigen::MatrixXd a = g.gains();
        for (const auto& [key, f] : g.edges()) a(key.first, key.second) = rng.uniform(0.3, 1.5);
        g.set_gains(a);
    }
    if (opt.random_bias) {
        for (int v = 0; v < g.size(); ++v) {
            Eigen::VectorXd b(g.dim(v));
            for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.5, 0.5);
            g.set_bias(v, b);
        }
    }
    return g;
}

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal(0.0, scale);
    return m;
}

/// State with random values everywhere and fresh predictions.
inline GraphState random_state(const PCGraph& g, Rng& rng, int batch = 1) {
    GraphState s = make_state(g, batch);
    for (int v = 0; v < g.size(); ++v) s.values[static_cast<std::size_t>(v)] = random_matrix(rng, g.dim(v), batch);
    predict(g, s);
    return s;
}

/// ||a - b|| / max(||a||, ||b||), or the absolute gap when both are tiny.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double scale = std::max(a.norm(), b.norm());
    const double gap = (a - b).norm();
    return scale < 1e-8 ? gap : gap / scale;
}

inline Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
    return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

/// Central difference of `f` along every coordinate of `x`.
template <typename F>
Eigen::VectorXd numeric_gradient(Eigen::VectorXd x, F&& f, double h = 1e-6) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double orig = x(i);
        x(i) = orig + h;
        const double up = f(x);
        x(i) = orig - h;
        const double down = f(x);
        x(i) = orig;
        g(i) = (up - down) / (2.0 * h);
    }
    return g;
}

/// dF/dx_v by finite differences, holding everything else fixed.
inline Eigen::MatrixXd numeric_value_gradient(const PCGraph& g, const GraphState& s, int v) {
    const auto vi = static_cast<std::size_t>(v);
    const Eigen::Index rows = s.values[vi].rows();
    const Eigen::Index cols = s.values[vi].cols();
    const Eigen::VectorXd grad = numeric_gradient(flatten(s.values[vi]), [&](const Eigen::VectorXd& x) {
        GraphState t = s;
        t.values[vi] = Eigen::Map<const Eigen::MatrixXd>(x.data(), rows, cols);
        predict(g, t);
        return energy(g, t) * static_cast<double>(cols);  // per-sample sum
    });
    return Eigen::Map<const Eigen::MatrixXd>(grad.data(), rows, cols);
}

inline Eigen::VectorXd numeric_weight_gradient(const PCGraph& g, const GraphState& s, EdgeKey key) {
    return numeric_gradient(g.edge(key).params(), [&](const Eigen::VectorXd& p) {
        PCGraph h = g;
        h.edge(key).set_params(p);
        GraphState t = s;
        predict(h, t);
        return energy(h, t);
    });
}

inline double numeric_gain_gradient(const PCGraph& g, const GraphState& s, int from, int to) {
    Eigen::VectorXd a0(1);
    a0 << g.gain(from, to);
    return numeric_gradient(a0, [&](const Eigen::VectorXd& a) {
        PCGraph h = g;
        Eigen::MatrixXd gains = h.gains();
        gains(from, to) = a(0);
        h.set_gains(gains);
        GraphState t = s;
        predict(h, t);
        return energy(h, t);
    })(0);
}

}  // namespace pcc::testing
