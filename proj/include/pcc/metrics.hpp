#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pcc/scm.hpp"

namespace pcc {

double mae(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

/// Median pairwise Euclidean distance over the pooled rows of X and Y
/// times {0.25, 0.5, 1, 2, 4}; falls back to 1 when the median is 0.
std::vector<double> default_bandwidths(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

/// Biased squared MMD, rows are samples; kernel is the mean of
/// exp(-|a-b|^2 / (2 s^2)) over the bandwidths. Empty bandwidths use the defaults.
double mmd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, std::vector<double> bandwidths = {});

struct InterventionalMetrics {
    double mean_e = 0.0;
    double std_e = 0.0;
    std::vector<int> used;  // intervention vertices that had descendants
};

/// Samples under do(x_j), rows are samples, one matrix per intervened vertex.
struct InterventionSamples {
    int vertex = 0;
    Eigen::MatrixXd samples;
};

InterventionalMetrics interventional_metrics(const std::vector<InterventionSamples>& truth,
                                             const std::vector<InterventionSamples>& estimate,
                                             const Eigen::MatrixXd& adjacency);

struct CounterfactualMetrics {
    double mse = 0.0;
    double sse = 0.0;
};

/// Pairs and estimates line up row by row; grouped by do-vertex.
CounterfactualMetrics counterfactual_metrics(const std::vector<CfPair>& truth,
                                             const std::vector<Eigen::VectorXd>& estimate,
                                             const Eigen::MatrixXd& adjacency);

struct Confusion {
    int tp = 0;
    int r = 0;
    int fp = 0;
    int tn = 0;
    int fn = 0;
    int m = 0;
};

struct GraphMetrics {
    double fdr = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
    int shd = 0;
    int nnz = 0;
    double f1 = 0.0;
    int shd_elementwise = 0;
    Confusion confusion;
};

/// Rates with a zero denominator are reported as 0; F1 is 1 when both graphs are empty.
GraphMetrics graph_metrics(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate);

}  // namespace pcc
