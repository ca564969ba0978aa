#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pcc/error.hpp"
#include "pcc/queries.hpp"
#include "pcc/scm.hpp"
#include "pcc/synthgen.hpp"
#include "support.hpp"

using namespace pcc;

namespace {

PCGraph chain(int n, double w = 1.0) {
    std::vector<VertexSpec> v;
    std::vector<EdgeEntry> e;
    for (int i = 0; i < n; ++i) v.push_back({i, 1});
    for (int i = 0; i + 1 < n; ++i) e.push_back({{i, i + 1}, EdgeFunction::scalar(w)});
    return PCGraph(v, e);
}

Eigen::MatrixXd scalar(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

QueryConfig long_run() { return QueryConfig{InferenceConfig{3000, 0.1}}; }

}  // namespace

TEST_CASE("conditional queries") {
    auto r = conditional_query(chain(2), {{1, scalar(1.0)}}, long_run());
    CHECK(r.values[0](0, 0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(r.values[1](0, 0) == 1.0);
    CHECK(r.energy_trace.size() == 3000);

    auto all = conditional_query(chain(2), {{0, scalar(0.25)}, {1, scalar(-3.0)}}, long_run());
    CHECK(all.values[0](0, 0) == 0.25);
    CHECK(all.values[1](0, 0) == -3.0);

    auto three = conditional_query(chain(3), {{2, scalar(1.0)}}, long_run());
    CHECK(three.values[0](0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(three.values[1](0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));

    CHECK_THROWS_AS(conditional_query(chain(2), {{7, scalar(1.0)}}), GraphError);
    CHECK_THROWS_AS(conditional_query(chain(2), {{0, Eigen::MatrixXd::Zero(2, 1)}}), ShapeError);
}

TEST_CASE("interventional queries") {
    auto r = interventional_query(chain(2), {{1, scalar(1.0)}}, {}, long_run());
    CHECK(std::abs(r.values[0](0, 0)) < 1e-9);

    auto mid = interventional_query(chain(3), {{1, scalar(1.0)}}, {}, long_run());
    CHECK(std::abs(mid.values[0](0, 0)) < 1e-9);
    CHECK(mid.values[2](0, 0) == doctest::Approx(1.0).epsilon(1e-9));

    // do on a root matches conditioning on it for every other vertex
    auto d = interventional_query(chain(3), {{0, scalar(0.6)}}, {}, long_run());
    auto c = conditional_query(chain(3), {{0, scalar(0.6)}}, long_run());
    CHECK(d.values[1](0, 0) == doctest::Approx(c.values[1](0, 0)).epsilon(1e-12));
    CHECK(d.values[2](0, 0) == doctest::Approx(c.values[2](0, 0)).epsilon(1e-12));

    CHECK_THROWS_AS(interventional_query(chain(2), {{1, scalar(1.0)}}, {{1, scalar(2.0)}}), ConfigError);
}

TEST_CASE("mutilate") {
    std::vector<VertexSpec> v;
    for (int i = 0; i < 5; ++i) v.push_back({i, 1});
    std::vector<EdgeEntry> e;
    for (auto [a, b] : {std::pair{0, 2}, {1, 2}, {0, 3}, {2, 3}, {1, 4}, {2, 4}})
        e.push_back({{a, b}, EdgeFunction::scalar(1.0)});
    PCGraph butterfly(v, e);

    const int x3[] = {2};
    PCGraph m = mutilate(butterfly, x3);
    CHECK(m.edge_count() == 4);
    CHECK_FALSE(m.has_edge(0, 2));
    CHECK_FALSE(m.has_edge(1, 2));
    CHECK(m.has_edge(2, 3));
    CHECK(m.has_edge(0, 3));

    const int root[] = {0};
    CHECK(mutilate(butterfly, root).edge_count() == 6);
    const int every[] = {0, 1, 2, 3, 4};
    CHECK(mutilate(butterfly, every).edge_count() == 0);
}

TEST_CASE("interventions equal conditioning on the mutilated graph") {
    Rng rng(77);
    testing::RandomGraphOptions opt;
    opt.max_vertices = 8;
    for (int trial = 0; trial < 40; ++trial) {
        PCGraph g = testing::random_graph(rng, opt);
        const int n = g.size();
        const int j = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
        Assignment act{{j, testing::random_matrix(rng, g.dim(j), 3)}};
        Assignment evidence;
        for (int v = 0; v < n; ++v)
            if (v != j && rng.bernoulli(0.3)) evidence[v] = testing::random_matrix(rng, g.dim(v), 3);
        Assignment merged = evidence;
        merged.insert(act.begin(), act.end());

        QueryConfig cfg{InferenceConfig{40, 0.05}};
        std::vector<std::vector<Eigen::MatrixXd>> lhs, rhs;
        interventional_query(g, act, evidence, cfg, [&](int, const GraphState& s) { lhs.push_back(s.values); });
        const int cut[] = {j};
        conditional_query(mutilate(g, cut), merged, cfg, [&](int, const GraphState& s) { rhs.push_back(s.values); });
        REQUIRE(lhs.size() == rhs.size());
        double worst = 0.0;
        for (std::size_t t = 0; t < lhs.size(); ++t)
            for (int v = 0; v < n; ++v)
                if (v != j) worst = std::max(worst, (lhs[t][v] - rhs[t][v]).cwiseAbs().maxCoeff());
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("null intervention leaves downstream values unchanged") {
    PCGraph g = chain(3, 0.8);
    auto c = conditional_query(g, {{0, scalar(1.0)}}, long_run());
    auto d = interventional_query(g, {{1, c.values[1]}}, {{0, scalar(1.0)}}, long_run());
    CHECK(d.values[2](0, 0) == doctest::Approx(c.values[2](0, 0)).epsilon(1e-9));
}

TEST_CASE("counterfactual on a linear chain") {
    ScmSpec spec = linear_scm((Eigen::MatrixXd(2, 2) << 0, 1, 0, 0).finished());
    FittedScm scm = fitted_from_spec(spec);
    Eigen::MatrixXd factual(2, 1);
    factual << 1.0, 3.0;

    Eigen::MatrixXd u = abduct(scm, factual);
    CHECK(u(1, 0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(u(0, 0) == doctest::Approx(1.0).epsilon(1e-9));

    auto cf = counterfactual_query(scm, factual, {{0, scalar(5.0)}});
    CHECK(cf.values[1](0, 0) == doctest::Approx(7.0).epsilon(1e-9));

    auto same = counterfactual_query(scm, factual, {{0, scalar(1.0)}});
    CHECK(same.values[1](0, 0) == doctest::Approx(3.0).epsilon(1e-9));

    CHECK_THROWS(counterfactual_query(scm, Eigen::MatrixXd::Zero(1, 1), {{0, scalar(5.0)}}));
    CHECK_THROWS_AS(validate_scm_layout(chain(3)), GraphError);
}

TEST_CASE("counterfactual consistency with true parameters") {
    for (auto name : kCommonGraphs) {
        ScmSpec spec = common_graph(name, EdgeRegime::Linear, 3);
        FittedScm scm = fitted_from_spec(spec);
        const Eigen::MatrixXd X = oracle_sample(spec, 20, std::nullopt, 9).values.transpose();
        for (int j = 0; j < spec.size(); ++j) {
            auto r = counterfactual_query(scm, X, {{j, X.row(j)}}, long_run());
            for (int i = 0; i < spec.size(); ++i)
                CHECK((r.values[i] - X.row(i)).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("abduction recovers the linear residual") {
    ScmSpec spec = common_graph("butterfly", EdgeRegime::Linear, 1);
    FittedScm scm = fitted_from_spec(spec);
    const Eigen::MatrixXd X = oracle_sample(spec, 50, std::nullopt, 2).values;
    const Eigen::MatrixXd residual = X - X * spec.weight_matrix();
    const Eigen::MatrixXd u = abduct(scm, X.transpose());
    CHECK((u.transpose() - residual).cwiseAbs().maxCoeff() < 1e-6);

    const Eigen::MatrixXd clean = oracle_evaluate(spec, Eigen::MatrixXd::Zero(4, 5));
    CHECK(abduct(scm, clean.transpose()).cwiseAbs().maxCoeff() < 1e-6);
}
