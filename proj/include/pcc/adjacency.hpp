#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace pcc {

/// Binary-matrix helpers. Nonzero A(i, j) means an edge i -> j.

/// Kahn order, or nullopt when the matrix has a cycle (self-loops included).
std::optional<std::vector<int>> topological_order(const Eigen::MatrixXd& adjacency);
bool is_dag(const Eigen::MatrixXd& adjacency);

/// Strict descendants of j, ascending.
std::vector<int> descendants(const Eigen::MatrixXd& adjacency, int j);

/// Vertices of one directed cycle in path order, or empty when acyclic.
std::vector<int> find_cycle(const Eigen::MatrixXd& adjacency);

/// Vertices with at least one child.
std::vector<int> non_leaf_vertices(const Eigen::MatrixXd& adjacency);

}  // namespace pcc
