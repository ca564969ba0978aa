#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "pcc/dataset.hpp"
#include "pcc/dynamics.hpp"
#include "pcc/metrics.hpp"
#include "pcc/scm.hpp"

namespace pcc {

/// exp(M) by scaling and squaring with a truncated Taylor series.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& m);

struct PenaltyValue {
    double value = 0.0;
    Eigen::MatrixXd gradient;
};

/// h(A) = tr(exp(A o A)) - N, gradient exp(A o A)^T o 2A.
PenaltyValue acyclicity(const Eigen::MatrixXd& a);

struct PriorConfig {
    double lambda_l1 = 5e-6;
    double lambda_l2 = 0.0;
    double lambda_dag = 200.0;
    double omega = 0.3;
    std::optional<NegativeSampling> negatives;
};

/// lambda_l1 * sum|a| + lambda_l2 * sum a^2, gradient lambda_l1 sign(A) + 2 lambda_l2 A.
PenaltyValue prior_penalty(const Eigen::MatrixXd& a, const PriorConfig& config);

/// 1 where |W| > omega.
Eigen::MatrixXd threshold(const Eigen::MatrixXd& weighted, double omega);

struct DiscoveryConfig {
    PriorConfig priors;
    TrainConfig train = default_train();
    /// The acyclicity weight ramps linearly from lambda_dag / warmup to
    /// lambda_dag over this many epochs; 0 applies it in full from the start.
    int dag_warmup_epochs = 200;
    bool allow_self_edges = false;
    std::optional<Eigen::MatrixXd> truth;  // weighted or binary; enables metric columns

    static TrainConfig default_train();
};

struct TraceRow {
    int epoch = 0;
    double energy = 0.0;
    double prior_l1 = 0.0;
    double prior_l2 = 0.0;
    double prior_dag = 0.0;
    std::optional<double> mae;
    std::optional<int> shd;
    std::optional<double> f1;
};

struct DiscoveryResult {
    Eigen::MatrixXd weighted;
    Eigen::MatrixXd binary;
    std::vector<TraceRow> trace;
};

/// Every data column is one scalar variable.
DiscoveryResult discover(const Dataset& data, const DiscoveryConfig& config = {});

/// Label column trained with resampled negatives; self-edges on, acyclicity off.
DiscoveryResult discover_with_negatives(const Dataset& data, int label_column, const DiscoveryConfig& config);

Dataset trace_to_dataset(const std::vector<TraceRow>& trace);

struct CycleRepair {
    Eigen::MatrixXd adjacency;
    std::vector<std::pair<int, int>> removed;
};

/// Drops the smallest-|W| edge of some cycle until the graph is acyclic.
CycleRepair break_cycles(const Eigen::MatrixXd& binary, const Eigen::MatrixXd& weighted);

struct EndToEndConfig {
    DiscoveryConfig discovery;
    AugmentConfig augment;
    ScmFitConfig fit;
};

struct EndToEndResult {
    DiscoveryResult discovery;
    CycleRepair repair;
    ScmFitResult fit;
};

EndToEndResult end_to_end(const Dataset& data, const EndToEndConfig& config,
                          const FitCheckpoint& checkpoint = {});

}  // namespace pcc
