#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "pcc/dataset.hpp"
#include "pcc/graph.hpp"
#include "pcc/queries.hpp"
#include "pcc/scm.hpp"

namespace pcc {

using json = nlohmann::ordered_json;

/// {vertices, edges: [{from, to, kind, activation, trainable, shape, params}],
///  gains: row-major N*N, bias, allow_self_edges}
json graph_to_json(const PCGraph& graph);
PCGraph graph_from_json(const json& j);

/// {adjacency: [[0/1]], equations: [{kind, params}], noise: [{mu, sigma}]}
json scm_spec_to_json(const ScmSpec& spec);
ScmSpec scm_spec_from_json(const json& j);

/// {graph, noise}
json fitted_scm_to_json(const FittedScm& scm);
FittedScm fitted_scm_from_json(const json& j);

json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);

/// Square matrix as CSV with header x1..xN.
Dataset matrix_to_dataset(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_dataset(const Dataset& d);

json read_json(const std::filesystem::path& path);
/// Two-space indent, trailing newline.
void write_json(const json& j, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace pcc
