#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pcc/error.hpp"
#include "pcc/graph.hpp"
#include "pcc/serialization.hpp"
#include "support.hpp"

using namespace pcc;

namespace {

PCGraph chain2(double w = 1.0) {
    return PCGraph({{0, 1}, {1, 1}}, {{{0, 1}, EdgeFunction::scalar(w)}});
}

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

}  // namespace

TEST_CASE("activations and their derivatives") {
    CHECK(activate(Activation::ReLU, -1.0) == 0.0);
    CHECK(activate_derivative(Activation::ReLU, 0.0) == 0.0);
    CHECK(activate(Activation::ELU, -1.0) == doctest::Approx(std::exp(-1.0) - 1.0));
    CHECK(activate(Activation::GELU, 1.0) == doctest::Approx(0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)))));
    for (Activation act : kAllActivations) {
        CHECK(activation_from_string(to_string(act)) == act);
        for (double x : {-1.7, -0.3, 0.4, 2.1}) {
            const double h = 1e-6;
            const double fd = (activate(act, x + h) - activate(act, x - h)) / (2 * h);
            CHECK(activate_derivative(act, x) == doctest::Approx(fd).epsilon(1e-7));
        }
    }
    CHECK_THROWS_AS(activation_from_string("swish"), ConfigError);
}

TEST_CASE("build_graph validates wiring") {
    SUBCASE("two vertices with one scalar edge get a unit gain") {
        PCGraph g = build_graph({{0, 1}, {1, 1}}, {{{0, 1}, EdgeFunction::scalar(2.0)}});
        CHECK(g.size() == 2);
        CHECK(g.gain(0, 1) == 1.0);
        CHECK(g.gain(1, 0) == 0.0);
        CHECK(g.parents(1) == std::vector<int>{0});
        CHECK(g.children(0) == std::vector<int>{1});
    }
    SUBCASE("dense edge with the wrong shape") {
        CHECK_THROWS_AS(build_graph({{0, 2}, {1, 3}}, {{{0, 1}, EdgeFunction::dense(Eigen::MatrixXd::Zero(2, 2))}}),
                        ShapeError);
    }
    SUBCASE("butterfly wiring has six edges") {
        std::vector<VertexSpec> v;
        for (int i = 0; i < 5; ++i) v.push_back({i, 1});
        std::vector<EdgeEntry> e;
        for (auto [a, b] : {std::pair{1, 3}, {2, 3}, {1, 4}, {3, 4}, {2, 5}, {3, 5}})
            e.push_back({{a - 1, b - 1}, EdgeFunction::scalar(1.0)});
        PCGraph g = build_graph(v, e);
        CHECK(g.edge_count() == 6);
        CHECK(g.is_acyclic());
        const auto& order = g.topological_order();
        auto pos = [&](int x) { return std::find(order.begin(), order.end(), x) - order.begin(); };
        for (const auto& [key, f] : g.edges()) CHECK(pos(key.first) < pos(key.second));
    }
    SUBCASE("rejections") {
        CHECK_THROWS_AS(build_graph({{0, 1}, {2, 1}}, {}), GraphError);
        CHECK_THROWS_AS(build_graph({{0, 0}}, {}), ShapeError);
        CHECK_THROWS_AS(build_graph({{0, 1}, {1, 1}}, {{{0, 5}, EdgeFunction::scalar(1.0)}}), GraphError);
        CHECK_THROWS_AS(build_graph({{0, 1}}, {{{0, 0}, EdgeFunction::scalar(1.0)}}), GraphError);
        CHECK_THROWS_AS(build_graph({{0, 1}, {1, 1}},
                                    {{{0, 1}, EdgeFunction::scalar(1.0)}, {{0, 1}, EdgeFunction::scalar(2.0)}}),
                        GraphError);
        CHECK_THROWS_AS(build_graph({{0, 1}, {1, 2}}, {{{0, 1}, EdgeFunction::scalar(1.0)}}), ShapeError);
        CHECK_THROWS_AS(build_graph({{0, 1}, {1, 1}}, {}, Eigen::MatrixXd::Zero(3, 3)), ShapeError);
    }
    SUBCASE("self-edges only when allowed") {
        PCGraph g = build_graph({{0, 1}}, {{{0, 0}, EdgeFunction::scalar(1.0)}}, std::nullopt, {true});
        CHECK(g.has_edge(0, 0));
        CHECK_FALSE(g.is_acyclic());
    }
}

TEST_CASE("fully connected discovery graph") {
    PCGraph g = fully_connected_graph(4, false);
    CHECK(g.edge_count() == 12);
    CHECK(g.gains().isZero());
    for (const auto& [key, f] : g.edges()) {
        CHECK_FALSE(f.trainable());
        CHECK(f.params()(0) == 1.0);
    }
    CHECK(fully_connected_graph(3, true).edge_count() == 9);
    CHECK(g.find_vertex("x3") == 2);
    CHECK(g.find_vertex("2") == 2);
    CHECK(g.find_vertex("nope") == -1);
}

TEST_CASE("predict") {
    PCGraph g = chain2();
    GraphState s = make_state(g);
    clamp_value(s, 0, scalar(1.0));
    clamp_value(s, 1, scalar(2.0));
    predict(g, s);
    CHECK(s.predictions[0](0, 0) == 0.0);
    CHECK(s.predictions[1](0, 0) == 1.0);
    CHECK(s.errors[0](0, 0) == 1.0);
    CHECK(s.errors[1](0, 0) == 1.0);
    CHECK(energy(g, s) == 2.0);

    s.error_clamped[1] = true;
    predict(g, s);
    CHECK(s.errors[0](0, 0) == 1.0);
    CHECK(s.errors[1](0, 0) == 0.0);

    PCGraph gated = chain2(2.0);
    Eigen::MatrixXd a = gated.gains();
    a(0, 1) = 0.5;
    gated.set_gains(a);
    GraphState t = make_state(gated);
    t.values[0] = scalar(3.0);
    predict(gated, t);
    CHECK(t.predictions[1](0, 0) == doctest::Approx(3.0));
}

TEST_CASE("energy and the target variant") {
    PCGraph g = chain2();
    GraphState s = make_state(g);
    predict(g, s);
    CHECK(energy(g, s) == 0.0);

    s.values[1] = scalar(1.0);
    predict(g, s);
    CHECK(energy(g, s, EnergyTarget{1, 1.0}) == 0.0);
    CHECK(energy(g, s, EnergyTarget{1, 0.0}) == 1.0);
    s.values[1] = scalar(2.0);
    predict(g, s);
    CHECK(energy(g, s, EnergyTarget{1, 1.0}) == doctest::Approx(9.0));
    s.target = EnergyTarget{1, 1.0};
    CHECK(energy(g, s) == doctest::Approx(9.0));
    CHECK(effective_errors(s)[1](0, 0) == doctest::Approx(2.0 * 3.0 * 2.0));
}

TEST_CASE("graph-core properties on random graphs") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        PCGraph g = testing::random_graph(rng);
        GraphState s = testing::random_state(g, rng, 3);

        // predict is idempotent
        GraphState again = s;
        predict(g, again);
        for (int v = 0; v < g.size(); ++v) {
            CHECK(again.predictions[v] == s.predictions[v]);
            CHECK(again.errors[v] == s.errors[v]);
        }

        // energy is nonnegative; an error clamp removes exactly its own term
        const double full = energy(g, s);
        CHECK(full >= 0.0);
        const int j = static_cast<int>(rng.index(static_cast<std::size_t>(g.size())));
        GraphState clamped = s;
        clamped.error_clamped[j] = true;
        predict(g, clamped);
        const double term = (s.values[j] - s.predictions[j]).colwise().squaredNorm().mean();
        CHECK(full - energy(g, clamped) == doctest::Approx(term).epsilon(1e-12));

        // forward sweep leaves only the root terms
        GraphState swept = s;
        forward_sweep(g, swept);
        double roots = 0.0;
        for (int v = 0; v < g.size(); ++v) {
            if (!g.parents(v).empty()) {
                CHECK(swept.errors[v].norm() < 1e-12);
                continue;
            }
            roots += (swept.values[v].colwise() - g.bias(v)).colwise().squaredNorm().mean();
        }
        CHECK(energy(g, swept) == doctest::Approx(roots).epsilon(1e-12));
    }
}

TEST_CASE("forward sweep respects value clamps") {
    PCGraph g = chain2(3.0);
    GraphState s = make_state(g, 2);
    Eigen::MatrixXd x0(1, 2);
    x0 << 1.0, -1.0;
    clamp_value(s, 0, x0);
    forward_sweep(g, s);
    CHECK(s.values[1](0, 0) == 3.0);
    CHECK(s.values[1](0, 1) == -3.0);
    CHECK(s.values[0] == x0);
    CHECK_THROWS_AS(clamp_value(s, 0, Eigen::MatrixXd::Zero(2, 2)), ShapeError);
}

TEST_CASE("without_edges_into keeps bias and zeroes gains") {
    PCGraph g = chain2(2.0);
    g.set_bias(1, Eigen::VectorXd::Constant(1, 0.7));
    const int target[] = {1};
    PCGraph m = g.without_edges_into(target);
    CHECK(m.edge_count() == 0);
    CHECK(m.gain(0, 1) == 0.0);
    CHECK(m.bias(1)(0) == 0.7);
}

TEST_CASE("graph JSON round trip") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        PCGraph g = testing::random_graph(rng);
        PCGraph back = graph_from_json(json::parse(graph_to_json(g).dump()));
        REQUIRE(back.size() == g.size());
        CHECK(back.gains() == g.gains());
        REQUIRE(back.edge_count() == g.edge_count());
        for (const auto& [key, f] : g.edges()) {
            CHECK(back.edge(key).kind() == f.kind());
            CHECK(back.edge(key).activation() == f.activation());
            CHECK(back.edge(key).params() == f.params());
        }
        for (int v = 0; v < g.size(); ++v) CHECK(back.bias(v) == g.bias(v));
    }
    CHECK_THROWS_AS(graph_from_json(json::parse(R"({"edges": []})")), ConfigError);
}
