#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcc/dataset.hpp"
#include "pcc/dynamics.hpp"
#include "pcc/graph.hpp"
#include "pcc/queries.hpp"

namespace pcc {

enum class EquationKind { Linear, Nonlinear };

std::string_view to_string(EquationKind kind);
EquationKind equation_kind_from_string(std::string_view name);

/// x_i = g_i(parents) + u_i.
struct StructuralEquation {
    EquationKind kind = EquationKind::Linear;
    Eigen::VectorXd weights;  // Linear: weights(j) multiplies x_j
    std::string expression;   // Nonlinear: catalog id such as "fork.x2"
};

struct ScmSpec {
    Eigen::MatrixXd adjacency;  // binary, A(i, j) = 1 means i -> j
    std::vector<StructuralEquation> equations;
    std::vector<NoiseParams> noise;

    int size() const { return static_cast<int>(adjacency.rows()); }
    /// Linear weight matrix W(j, i) = weight of j -> i; throws for nonlinear specs.
    Eigen::MatrixXd weight_matrix() const;
    bool is_linear() const;
};

/// Throws GraphError on cycles or parent mismatch, ShapeError on sizes.
void validate(const ScmSpec& spec);

/// Parent indices used by a nonlinear catalog expression; throws for unknown ids.
std::vector<int> expression_parents(std::string_view id);
/// Mechanism without noise, evaluated row-wise on X (rows x N).
Eigen::VectorXd evaluate_expression(std::string_view id, const Eigen::MatrixXd& X);
std::vector<std::string> expression_catalog();

/// Linear SCM with W(j, i) as the weight of j -> i.
ScmSpec linear_scm(const Eigen::MatrixXd& weights, std::vector<NoiseParams> noise = {});

struct Intervention {
    int vertex = 0;
    double value = 0.0;
};

/// Evaluate the mechanisms in topological order from exogenous draws U (rows x N).
Eigen::MatrixXd oracle_evaluate(const ScmSpec& spec, const Eigen::MatrixXd& U,
                                const std::optional<Intervention>& intervention = std::nullopt);

/// Exogenous draws u = mu + sigma * z, one standard normal per vertex per row.
Eigen::MatrixXd sample_exogenous(const ScmSpec& spec, Eigen::Index n, std::uint64_t seed);

Dataset oracle_sample(const ScmSpec& spec, Eigen::Index n,
                      const std::optional<Intervention>& intervention, std::uint64_t seed);

struct CfPair {
    Eigen::VectorXd factual;
    Eigen::VectorXd counterfactual;
    int do_vertex = 0;
    double do_value = 0.0;
};

/// Each pair shares one exogenous draw; the do value is picked uniformly from `do_values`.
std::vector<CfPair> oracle_counterfactual(const ScmSpec& spec, Eigen::Index n, int do_vertex,
                                          const std::vector<double>& do_values, std::uint64_t seed);

/// Columns x1..xN, x_cf1..x_cfN, do_vertex, do_value (do_vertex 1-based).
Dataset cf_pairs_to_dataset(const std::vector<CfPair>& pairs, int n);
std::vector<CfPair> cf_pairs_from_dataset(const Dataset& data);

enum class EdgeRegime { Linear, Nonlinear };

std::string_view to_string(EdgeRegime regime);
EdgeRegime edge_regime_from_string(std::string_view name);

struct AugmentConfig {
    EdgeRegime regime = EdgeRegime::Linear;
    std::vector<int> hidden{16, 16};
    Activation activation = Activation::ELU;
    std::uint64_t seed = 0;
};

/// 2N-vertex PC graph: x1..xN wired per the adjacency, plus fixed unit
/// edges u_i -> x_i. Linear weights start at U(-1, 1).
PCGraph augment_with_exogenous(const Eigen::MatrixXd& adjacency, const AugmentConfig& config = {});

/// Fitted model holding the true linear mechanisms and noise parameters.
FittedScm fitted_from_spec(const ScmSpec& spec);

struct ScmFitConfig {
    int steps = 8;
    double gamma = 3e-3;
    OptimizerConfig optimizer{OptimizerKind::AdamW, 8e-3, 1e-4};
    int epochs = 1000;
    int batch_size = 128;
    std::uint64_t seed = 0;
    QueryConfig abduction{};
    int checkpoint_every = 0;  // 0 disables the checkpoint callback
};

struct ScmFitResult {
    FittedScm scm;
    std::vector<double> energy;  // per epoch
};

using FitCheckpoint = std::function<void(int epoch, const FittedScm& current)>;

/// Each batch clamps the endogenous values, relaxes the exogenous values
/// under their Gaussian prior, then updates the mechanisms. The exogenous
/// bias tracks the mean residual. Noise estimates come from a final flat
/// abduction over the training data.
ScmFitResult fit_scm(const PCGraph& graph, const Dataset& data, const ScmFitConfig& config = {},
                     const FitCheckpoint& checkpoint = {});

/// Mean and population std of each row of U (n x batch).
std::vector<NoiseParams> noise_statistics(const Eigen::MatrixXd& U);

}  // namespace pcc
