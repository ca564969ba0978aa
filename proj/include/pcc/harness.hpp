#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pcc/queries.hpp"
#include "pcc/scm.hpp"
#include "pcc/serialization.hpp"
#include "pcc/structlearn.hpp"
#include "pcc/synthgen.hpp"

namespace pcc {

enum class ExperimentKind { FitAndQuery, Discover, EndToEnd, NegativesToy };

std::string_view to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(std::string_view name);

struct GraphSource {
    std::string source = "common";  // common | random | file
    std::string name = "chain";
    EdgeRegime regime = EdgeRegime::Linear;
    RandomGraphKind kind = RandomGraphKind::ER;
    int nodes = 10;
    int k = 1;
    std::pair<double, double> weight_range{0.5, 2.0};
    std::string path;
};

/// x ~ N(0, sigma^2), distractor z ~ N(0, sigma^2), label y = scale * x.
struct NegativesToyConfig {
    int samples = 2000;
    double scale = 2.0;
    double sigma = 0.25;
    double p_ns = 0.1;
    double k = 1.0;
    double lambda_l1 = 1e-3;
    int epochs = 200;
    int batch_size = 64;
    double lr = 5e-3;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::FitAndQuery;
    GraphSource graph;
    Eigen::Index n_train = 3000;
    Eigen::Index n_test = 1000;
    Eigen::Index discovery_samples = 2000;
    AugmentConfig augment;
    ScmFitConfig fit;
    QueryConfig query;
    DiscoveryConfig discovery;
    NegativesToyConfig negatives;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::string output_dir = "out";
};

/// Missing fields keep their defaults; unknown fields are rejected.
ExperimentConfig experiment_config_from_json(const json& j);
json experiment_config_to_json(const ExperimentConfig& config);

/// Ground-truth SCM for one seed.
ScmSpec build_spec(const GraphSource& source, std::uint64_t seed);

/// Mode of the fitted interventional distribution against the true
/// expectation (noise at its mean), averaged over rows and descendants.
double interventional_mae(const FittedScm& fitted, const ScmSpec& truth, int vertex,
                          const std::vector<double>& values, const QueryConfig& config);

/// Counterfactual rows estimated by the fitted model, aligned with `pairs`.
std::vector<Eigen::VectorXd> counterfactual_estimates(const FittedScm& fitted, const std::vector<CfPair>& pairs,
                                                      const QueryConfig& config);

/// Flat metric map: obs.*, do.*, cf.* with raw and _x100 entries.
json evaluate_scm(const FittedScm& fitted, const Benchmark& bench, const QueryConfig& config, std::uint64_t seed);

/// Label column gains (x, z, y -> y) after training on the toy task.
Eigen::Vector3d negatives_toy_gains(const NegativesToyConfig& config, double p_ns, std::uint64_t seed);

/// Runs every seed, writes per-seed artifacts and report.json under the
/// output directory, and returns the report.
json run_experiment(const ExperimentConfig& config, int threads = 1);

/// PC_CAUSAL_THREADS, or 1 when unset. Throws ConfigError on junk.
int thread_count_from_env();

}  // namespace pcc
