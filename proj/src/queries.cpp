#include "pcc/queries.hpp"

#include <algorithm>

#include "pcc/error.hpp"

namespace pcc {

namespace {

int batch_of(const Assignment& a, int current) {
    for (const auto& [v, m] : a) {
        const int cols = static_cast<int>(m.cols());
        if (cols == 1) continue;
        if (current != 1 && cols != current) throw ShapeError("assignments disagree on batch size");
        current = cols;
    }
    return current;
}

void check_vertices(const PCGraph& graph, const Assignment& a) {
    for (const auto& [v, m] : a) {
        if (v < 0 || v >= graph.size()) throw GraphError("query references unknown vertex " + std::to_string(v));
        if (m.rows() != graph.dim(v))
            throw ShapeError("assignment for " + graph.vertex_name(v) + " has wrong dimension");
    }
}

QueryResult run_query(const PCGraph& graph, const Assignment& intervention, const Assignment& evidence,
                      const QueryConfig& config, const StepObserver& observer) {
    check_vertices(graph, evidence);
    check_vertices(graph, intervention);
    for (const auto& [v, m] : intervention)
        if (evidence.contains(v))
            throw ConfigError("vertex " + graph.vertex_name(v) + " is both observed and intervened on");
    const int batch = batch_of(intervention, batch_of(evidence, 1));
    GraphState state = make_state(graph, batch);
    for (const auto& [v, m] : evidence) clamp_value(state, v, m);
    for (const auto& [v, m] : intervention) {
        clamp_value(state, v, m);
        state.error_clamped[static_cast<std::size_t>(v)] = true;
    }
    if (config.exogenous_prior == ExogenousPrior::Flat) {
        for (int v = 0; v < graph.size(); ++v)
            if (graph.vertex(v).role == VertexRole::Exogenous) state.error_clamped[static_cast<std::size_t>(v)] = true;
    }
    forward_sweep(graph, state);
    QueryResult result;
    result.energy_trace = run_inference(graph, state, config.inference, observer);
    result.values = std::move(state.values);
    return result;
}

}  // namespace

QueryResult conditional_query(const PCGraph& graph, const Assignment& evidence, const QueryConfig& config,
                              const StepObserver& observer) {
    return run_query(graph, {}, evidence, config, observer);
}

QueryResult interventional_query(const PCGraph& graph, const Assignment& intervention,
                                 const Assignment& evidence, const QueryConfig& config,
                                 const StepObserver& observer) {
    return run_query(graph, intervention, evidence, config, observer);
}

PCGraph mutilate(const PCGraph& graph, std::span<const int> do_vertices) {
    for (int v : do_vertices)
        if (v < 0 || v >= graph.size()) throw GraphError("mutilate: unknown vertex " + std::to_string(v));
    return graph.without_edges_into(do_vertices);
}

void validate_scm_layout(const PCGraph& graph) {
    if (graph.size() % 2 != 0) throw GraphError("SCM graph needs one exogenous vertex per endogenous vertex");
    const int n = graph.size() / 2;
    for (int i = 0; i < n; ++i) {
        if (graph.dim(i) != 1 || graph.dim(n + i) != 1) throw ShapeError("SCM vertices must be scalar");
        if (graph.vertex(i).role != VertexRole::Endogenous)
            throw GraphError("vertex " + std::to_string(i) + " should be endogenous");
        if (graph.vertex(n + i).role != VertexRole::Exogenous)
            throw GraphError("vertex " + std::to_string(n + i) + " should be exogenous");
        if (!graph.has_edge(n + i, i)) throw GraphError("missing exogenous edge into " + graph.vertex_name(i));
        if (!graph.parents(n + i).empty()) throw GraphError("exogenous vertices must be roots");
    }
}

Eigen::MatrixXd abduct(const FittedScm& scm, const Eigen::MatrixXd& factual, const QueryConfig& config) {
    validate_scm_layout(scm.graph);
    const int n = scm.endogenous_count();
    if (factual.rows() != n) throw ShapeError("factual rows must cover every endogenous vertex");
    Assignment evidence;
    for (int i = 0; i < n; ++i) evidence.emplace(i, factual.row(i));
    QueryConfig cfg = config;
    cfg.exogenous_prior = ExogenousPrior::Flat;
    auto result = conditional_query(scm.graph, evidence, cfg);
    Eigen::MatrixXd u(n, factual.cols());
    for (int i = 0; i < n; ++i) u.row(i) = result.values[static_cast<std::size_t>(scm.exogenous(i))].row(0);
    return u;
}

QueryResult counterfactual_query(const FittedScm& scm, const Eigen::MatrixXd& factual,
                                 const Assignment& intervention, const QueryConfig& config) {
    const int n = scm.endogenous_count();
    for (const auto& [v, m] : intervention)
        if (v < 0 || v >= n) throw GraphError("counterfactual do-vertex must be endogenous");
    const Eigen::MatrixXd u = abduct(scm, factual, config);
    Assignment exogenous;
    for (int i = 0; i < n; ++i) exogenous.emplace(scm.exogenous(i), u.row(i));
    return interventional_query(scm.graph, intervention, exogenous, config);
}

}  // namespace pcc
