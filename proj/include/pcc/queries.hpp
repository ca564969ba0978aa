#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <vector>

#include "pcc/dynamics.hpp"
#include "pcc/graph.hpp"

namespace pcc {

/// vertex id -> dim x batch matrix (or dim x 1, broadcast over the batch).
using Assignment = std::map<int, Eigen::MatrixXd>;

enum class ExogenousPrior {
    Gaussian,  // exogenous roots keep their quadratic prior around the bias
    Flat,      // exogenous errors are clamped: no prior pull
};

struct QueryConfig {
    InferenceConfig inference{200, 0.1, false, 1e-10};
    ExogenousPrior exogenous_prior = ExogenousPrior::Gaussian;
};

struct QueryResult {
    std::vector<Eigen::MatrixXd> values;  // per vertex, dim x batch
    std::vector<double> energy_trace;
};

QueryResult conditional_query(const PCGraph& graph, const Assignment& evidence,
                              const QueryConfig& config = {}, const StepObserver& observer = {});

/// Do-vertices are value- and error-clamped. Overlap with evidence is rejected.
QueryResult interventional_query(const PCGraph& graph, const Assignment& intervention,
                                 const Assignment& evidence, const QueryConfig& config = {},
                                 const StepObserver& observer = {});

/// Copy of the graph with every edge into the listed vertices deleted.
PCGraph mutilate(const PCGraph& graph, std::span<const int> do_vertices);

struct NoiseParams {
    double mu = 0.0;
    double sigma = 1.0;
};

/// Endogenous vertices 0..n-1, exogenous n..2n-1 with u_i -> x_i.
struct FittedScm {
    PCGraph graph;
    std::vector<NoiseParams> noise;

    int endogenous_count() const { return graph.size() / 2; }
    int exogenous(int i) const { return endogenous_count() + i; }
};

/// Checks the endogenous/exogenous layout; throws GraphError otherwise.
void validate_scm_layout(const PCGraph& graph);

/// Exogenous values (n x batch) given full endogenous rows (n x batch).
/// Uses a flat exogenous prior so the estimate is the exact residual.
Eigen::MatrixXd abduct(const FittedScm& scm, const Eigen::MatrixXd& factual,
                       const QueryConfig& config = {});

/// Abduction, action and prediction. `factual` holds every endogenous
/// vertex (n x batch); do-vertices are endogenous ids.
QueryResult counterfactual_query(const FittedScm& scm, const Eigen::MatrixXd& factual,
                                 const Assignment& intervention, const QueryConfig& config = {});

}  // namespace pcc
