#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcc/dataset.hpp"
#include "pcc/scm.hpp"

namespace pcc {

enum class RandomGraphKind { ER, SF };

std::string_view to_string(RandomGraphKind kind);
RandomGraphKind random_graph_kind_from_string(std::string_view name);

struct RandomGraphConfig {
    RandomGraphKind kind = RandomGraphKind::ER;
    int n_nodes = 10;
    int edges_per_node = 1;
    std::pair<double, double> weight_range{0.5, 2.0};
    std::uint64_t seed = 0;
};

/// ER: undirected G(N, p) with p = 2k/(N-1), oriented by a random vertex order.
/// SF: preferential attachment with m = k, edges from the newer vertex to the older.
Eigen::MatrixXd gen_random_dag(const RandomGraphConfig& config);

/// |w| ~ U(range) with a random sign on every nonzero entry.
Eigen::MatrixXd assign_weights(const Eigen::MatrixXd& adjacency, std::pair<double, double> range,
                               std::uint64_t seed);

inline constexpr std::array<std::string_view, 7> kCommonGraphs{
    "chain", "collider", "confounder", "fork", "mediator", "m_bias", "butterfly"};

/// Binary wiring of a catalog graph, 0-based.
Eigen::MatrixXd common_adjacency(std::string_view name);

/// Linear: random weights from `range`. Nonlinear: the closed-form catalog.
ScmSpec common_graph(std::string_view name, EdgeRegime regime, std::uint64_t seed,
                     std::pair<double, double> range = {0.5, 2.0});

/// Random linear SCM with standard normal noise.
ScmSpec random_scm(const RandomGraphConfig& config);

inline constexpr std::array<double, 7> kInterventionGrid{-1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0};

/// mean(x_j) + std(x_j) * grid, from the column of an observational sample.
std::vector<double> intervention_values(const Dataset& observational, int vertex);

struct InterventionSet {
    int vertex = 0;
    std::vector<double> values;
};

struct Benchmark {
    ScmSpec spec;
    Dataset train;
    Dataset test_obs;  // x1..xN plus the true u1..uN
    Dataset test_do;   // x1..xN, do_vertex (1-based), do_value
    std::vector<CfPair> test_cf;
    std::vector<InterventionSet> interventions;  // every non-leaf vertex
};

/// n_test rows per intervened vertex in test_do and test_cf; values drawn
/// from the grid computed on the training split.
Benchmark make_benchmark(const ScmSpec& spec, Eigen::Index n_train, Eigen::Index n_test, std::uint64_t seed);

}  // namespace pcc
