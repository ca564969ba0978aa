#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "pcc/dataset.hpp"
#include "pcc/graph.hpp"

namespace pcc {

enum class OptimizerKind { Sgd, AdamW };
enum class Schedule { Standard, Incremental };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);
std::string_view to_string(Schedule mode);
Schedule schedule_from_string(std::string_view name);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::AdamW;
    double lr = 8e-3;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct OptimizerState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long step = 0;
};

/// In-place update. AdamW applies decoupled decay p -= lr * wd * p.
void optimizer_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads,
                    OptimizerState& state, const OptimizerConfig& config);

struct InferenceConfig {
    int steps = 8;
    double gamma = 3e-3;
    bool early_stop = false;
    double early_stop_tol = 1e-10;
};

using StepObserver = std::function<void(int step, const GraphState&)>;

/// x_j += gamma * (-eps_j + sum_k a_jk J^T eps_k) on free vertices, all
/// vertices moved simultaneously, then predictions refreshed.
void value_step(const PCGraph& graph, GraphState& state, double gamma);

/// Runs `config.steps` value steps (fewer with early stop). Returns the
/// energy after each step. The observer sees the state after every step.
std::vector<double> run_inference(const PCGraph& graph, GraphState& state,
                                  const InferenceConfig& config,
                                  const StepObserver& observer = {});

/// Batch-mean dF/dtheta for every edge with at least one parameter.
std::map<EdgeKey, Eigen::VectorXd> weight_grads(const PCGraph& graph, const GraphState& state);

/// Batch-mean dF/da on declared edges (data term only).
Eigen::MatrixXd gain_grads(const PCGraph& graph, const GraphState& state);

struct NegativeSampling {
    int label_vertex = 0;
    double p_ns = 0.1;
    double k = 1.0;
};

struct TrainConfig {
    int steps = 8;
    double gamma = 3e-3;
    OptimizerConfig weights{OptimizerKind::AdamW, 8e-3, 1e-4};
    OptimizerConfig gains{OptimizerKind::AdamW, 5e-3, 0.0};
    bool learn_weights = true;
    bool learn_gains = false;
    int epochs = 1000;
    int batch_size = 128;
    Schedule mode = Schedule::Standard;
    std::optional<NegativeSampling> negatives;
    std::uint64_t seed = 0;
};

/// Binds `graph.dim(vertex)` consecutive dataset columns starting at `column`.
struct ColumnBinding {
    int vertex = 0;
    int column = 0;
};

struct TrainHooks {
    /// Adds prior terms to the gain gradient before each gain update.
    std::function<void(int epoch, const Eigen::MatrixXd& gains, Eigen::MatrixXd& grad)>
        gain_regularizer;
    /// Called after each epoch with the mean data energy of that epoch.
    std::function<void(int epoch, const PCGraph& graph, double energy)> on_epoch;
};

struct TrainResult {
    std::vector<double> energy;  // per epoch, priors excluded
};

/// Mini-batch training. Each batch clamps the bound columns, zero-initializes
/// and forward-sweeps free values, then runs `steps` value steps with
/// parameter updates at the end (standard) or after every step (incremental).
TrainResult train(PCGraph& graph, const Dataset& data, const std::vector<ColumnBinding>& clamp,
                  const TrainConfig& config, const TrainHooks& hooks = {});

}  // namespace pcc
