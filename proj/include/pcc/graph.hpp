#pragma once

// Predictive coding graph: value nodes, gated edge predictions, and the
// variational free energy that inference and learning both descend.

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "pcc/activation.hpp"
#include "pcc/rng.hpp"

namespace pcc {

enum class VertexRole { Endogenous, Exogenous, Input, Label };

std::string_view to_string(VertexRole role);
VertexRole vertex_role_from_string(std::string_view name);

struct VertexSpec {
    int id = 0;
    int dim = 1;
    VertexRole role = VertexRole::Endogenous;
    std::string name;  // empty means "v<id>"
};

/// y = w * f(x), elementwise; requires equal endpoint dims.
struct ScalarLinear {
    double weight = 1.0;
};

/// y = W f(x), W is d_child x d_parent.
struct DenseLinear {
    Eigen::MatrixXd weight;
};

struct MlpLayer {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
};

/// Affine layers with the edge activation between them; the output layer is affine.
struct Mlp {
    std::vector<MlpLayer> layers;
};

enum class EdgeKind { ScalarLinear, DenseLinear, Mlp };

std::string_view to_string(EdgeKind kind);
EdgeKind edge_kind_from_string(std::string_view name);

class EdgeFunction {
public:
    using Body = std::variant<ScalarLinear, DenseLinear, Mlp>;

    EdgeFunction(Body body, Activation activation, bool trainable = true);

    static EdgeFunction scalar(double weight, Activation activation = Activation::Identity);
    static EdgeFunction dense(Eigen::MatrixXd weight,
                              Activation activation = Activation::Identity);
    static EdgeFunction mlp(std::vector<MlpLayer> layers, Activation hidden);
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization for every layer.
    static EdgeFunction random_mlp(int in_dim, int out_dim, std::span<const int> hidden,
                                   Activation activation, Rng& rng);

    EdgeKind kind() const;
    Activation activation() const { return activation_; }
    bool trainable() const { return trainable_; }
    void set_trainable(bool t) { trainable_ = t; }
    const Body& body() const { return body_; }

    /// Expected input dimension, or nullopt when any dimension works (ScalarLinear).
    std::optional<int> in_dim() const;
    std::optional<int> out_dim() const;

    /// Columns are samples.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

    /// Vector-Jacobian product. Returns J^T g per column; when `param_grad`
    /// is non-null, adds the batch-summed gradient of <g, f(x)> wrt the
    /// flattened parameters.
    Eigen::MatrixXd backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& g,
                             Eigen::VectorXd* param_grad) const;

    Eigen::Index num_params() const;
    Eigen::VectorXd params() const;
    void set_params(const Eigen::VectorXd& p);

private:
    Body body_;
    Activation activation_;
    bool trainable_;
};

using EdgeKey = std::pair<int, int>;  // (parent, child): parent -> child

struct EdgeEntry {
    EdgeKey key;
    EdgeFunction function;
};

struct GraphOptions {
    bool allow_self_edges = false;
};

class PCGraph {
public:
    /// Gains default to 1 on declared edges and 0 elsewhere.
    PCGraph(std::vector<VertexSpec> vertices, std::vector<EdgeEntry> edges,
            std::optional<Eigen::MatrixXd> gains = std::nullopt, GraphOptions options = {});

    int size() const { return static_cast<int>(vertices_.size()); }
    const std::vector<VertexSpec>& vertices() const { return vertices_; }
    const VertexSpec& vertex(int v) const { return vertices_.at(static_cast<std::size_t>(v)); }
    int dim(int v) const { return vertex(v).dim; }
    std::string vertex_name(int v) const;
    /// -1 when absent; also accepts a bare integer id.
    int find_vertex(std::string_view name) const;

    const std::map<EdgeKey, EdgeFunction>& edges() const { return edges_; }
    bool has_edge(int from, int to) const { return edges_.contains({from, to}); }
    const EdgeFunction& edge(EdgeKey key) const;
    EdgeFunction& edge(EdgeKey key);
    std::size_t edge_count() const { return edges_.size(); }

    const std::vector<int>& parents(int v) const { return parents_.at(static_cast<std::size_t>(v)); }
    const std::vector<int>& children(int v) const { return children_.at(static_cast<std::size_t>(v)); }

    /// a(i, j) gates the edge i -> j.
    const Eigen::MatrixXd& gains() const { return gains_; }
    void set_gains(const Eigen::MatrixXd& gains);
    double gain(int from, int to) const { return gains_(from, to); }

    /// Constant term added to the prediction; for roots it is the prior mean.
    const Eigen::VectorXd& bias(int v) const { return bias_.at(static_cast<std::size_t>(v)); }
    void set_bias(int v, const Eigen::VectorXd& b);

    bool allows_self_edges() const { return options_.allow_self_edges; }
    bool is_acyclic() const { return acyclic_; }
    /// Topological order when acyclic; otherwise Kahn order followed by the
    /// remaining vertices by index. Self-edges are ignored.
    const std::vector<int>& topological_order() const { return order_; }

    /// Copy with every edge into the listed vertices removed.
    PCGraph without_edges_into(std::span<const int> targets) const;

private:
    void index_edges();

    std::vector<VertexSpec> vertices_;
    std::map<EdgeKey, EdgeFunction> edges_;
    Eigen::MatrixXd gains_;
    std::vector<Eigen::VectorXd> bias_;
    GraphOptions options_;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<int>> children_;
    std::vector<int> order_;
    bool acyclic_ = true;
};

PCGraph build_graph(std::vector<VertexSpec> vertices, std::vector<EdgeEntry> edges,
                    std::optional<Eigen::MatrixXd> gains_init = std::nullopt,
                    GraphOptions options = {});

/// Fully connected graph of scalar vertices with fixed unit ScalarLinear edges;
/// the gains become the learnable weighted adjacency. Gains start at zero.
PCGraph fully_connected_graph(int n, bool allow_self_edges);

/// Target energy for the label vertex: the label term becomes (||e||^2 - k)^2.
struct EnergyTarget {
    int label_vertex = 0;
    double k = 0.0;
};

/// Per-vertex matrices are dim x batch; every column is an independent sample.
struct GraphState {
    std::vector<Eigen::MatrixXd> values;
    std::vector<Eigen::MatrixXd> predictions;
    std::vector<Eigen::MatrixXd> errors;
    std::vector<bool> value_clamped;
    std::vector<bool> error_clamped;
    std::optional<EnergyTarget> target;

    int batch_size() const { return values.empty() ? 0 : static_cast<int>(values.front().cols()); }
    int size() const { return static_cast<int>(values.size()); }
};

/// Zero values, nothing clamped.
GraphState make_state(const PCGraph& graph, int batch_size = 1);

/// Clamp a vertex's value to `value` (dim x batch, or dim x 1 broadcast).
void clamp_value(GraphState& state, int v, const Eigen::MatrixXd& value);

/// Refresh u_i = b_i + sum_k a_{k,i} f_{k,i}(x_k) and e_i = x_i - u_i
/// (e_i = 0 where error-clamped).
void predict(const PCGraph& graph, GraphState& state);

/// One pass in topological order setting every free value to its prediction.
/// Ends with fresh predictions and errors.
void forward_sweep(const PCGraph& graph, GraphState& state);

/// Signal that flows back through edges: e_i, or 2(||e||^2 - k) e for the
/// target vertex. Equals -1/2 dF/du_i.
std::vector<Eigen::MatrixXd> effective_errors(const GraphState& state);

/// Per-sample energies: sum_i ||e_i||^2, or the target-modified variant.
Eigen::VectorXd sample_energies(const GraphState& state);

/// Batch-mean energy. Uses `state.target` unless a target is passed.
double energy(const PCGraph& graph, const GraphState& state);
double energy(const PCGraph& graph, const GraphState& state,
              const std::optional<EnergyTarget>& target);

}  // namespace pcc
