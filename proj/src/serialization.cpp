#include "pcc/serialization.hpp"

#include <fstream>
#include <sstream>

#include "pcc/error.hpp"

namespace pcc {

namespace {

template <typename T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad field '") + key + "': " + e.what());
    }
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("expected an array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError("expected a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

}  // namespace

json matrix_to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_to_json(m.row(r).transpose()));
    return out;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("expected a matrix (array of rows)");
    if (j.empty()) return Eigen::MatrixXd(0, 0);
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        const Eigen::VectorXd row = vector_from_json(j[r]);
        if (row.size() != cols) throw ConfigError("ragged matrix rows");
        m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
}

json graph_to_json(const PCGraph& graph) {
    json j;
    j["vertices"] = json::array();
    for (const auto& v : graph.vertices())
        j["vertices"].push_back({{"id", v.id}, {"dim", v.dim}, {"role", to_string(v.role)}, {"name", v.name}});
    j["edges"] = json::array();
    for (const auto& [key, f] : graph.edges()) {
        json e{{"from", key.first},
               {"to", key.second},
               {"kind", to_string(f.kind())},
               {"activation", to_string(f.activation())},
               {"trainable", f.trainable()}};
        json shape = json::array();
        if (const auto* d = std::get_if<DenseLinear>(&f.body())) {
            shape.push_back({d->weight.rows(), d->weight.cols()});
        } else if (const auto* m = std::get_if<Mlp>(&f.body())) {
            for (const auto& layer : m->layers) shape.push_back({layer.weight.rows(), layer.weight.cols()});
        }
        e["shape"] = shape;
        e["params"] = vector_to_json(f.params());
        j["edges"].push_back(e);
    }
    const Eigen::MatrixXd& a = graph.gains();
    json gains = json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) gains.push_back(a(r, c));
    j["gains"] = gains;
    j["bias"] = json::array();
    for (int v = 0; v < graph.size(); ++v) j["bias"].push_back(vector_to_json(graph.bias(v)));
    j["allow_self_edges"] = graph.allows_self_edges();
    return j;
}

PCGraph graph_from_json(const json& j) {
    std::vector<VertexSpec> vertices;
    for (const auto& v : field<json>(j, "vertices")) {
        vertices.push_back({field<int>(v, "id"), field<int>(v, "dim"),
                            v.contains("role") ? vertex_role_from_string(field<std::string>(v, "role"))
                                               : VertexRole::Endogenous,
                            v.value("name", std::string{})});
    }
    std::vector<EdgeEntry> edges;
    for (const auto& e : field<json>(j, "edges")) {
        const EdgeKind kind = edge_kind_from_string(field<std::string>(e, "kind"));
        const Activation act = activation_from_string(e.value("activation", std::string("identity")));
        const Eigen::VectorXd params = vector_from_json(field<json>(e, "params"));
        const json shape = e.value("shape", json::array());
        EdgeFunction f = EdgeFunction::scalar(1.0, act);
        if (kind == EdgeKind::DenseLinear) {
            if (shape.size() != 1) throw ConfigError("dense edge needs one shape entry");
            f = EdgeFunction::dense(Eigen::MatrixXd::Zero(shape[0][0].get<int>(), shape[0][1].get<int>()), act);
        } else if (kind == EdgeKind::Mlp) {
            std::vector<MlpLayer> layers;
            for (const auto& s : shape) {
                const int rows = s[0].get<int>();
                layers.push_back({Eigen::MatrixXd::Zero(rows, s[1].get<int>()), Eigen::VectorXd::Zero(rows)});
            }
            f = EdgeFunction::mlp(std::move(layers), act);
        }
        if (params.size() != f.num_params()) throw ConfigError("edge parameter count does not match its shape");
        f.set_params(params);
        f.set_trainable(e.value("trainable", true));
        edges.push_back({{field<int>(e, "from"), field<int>(e, "to")}, std::move(f)});
    }
    const auto n = static_cast<Eigen::Index>(vertices.size());
    std::optional<Eigen::MatrixXd> gains;
    if (j.contains("gains")) {
        const Eigen::VectorXd flat = vector_from_json(j.at("gains"));
        if (flat.size() != n * n) throw ShapeError("gains must have N*N entries");
        gains = Eigen::MatrixXd(n, n);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c) (*gains)(r, c) = flat(r * n + c);
    }
    PCGraph g(std::move(vertices), std::move(edges), gains, GraphOptions{j.value("allow_self_edges", false)});
    if (j.contains("bias")) {
        const auto& b = j.at("bias");
        if (b.size() != static_cast<std::size_t>(n)) throw ShapeError("bias must list every vertex");
        for (int v = 0; v < g.size(); ++v) g.set_bias(v, vector_from_json(b[static_cast<std::size_t>(v)]));
    }
    return g;
}

json scm_spec_to_json(const ScmSpec& spec) {
    json j;
    j["adjacency"] = matrix_to_json(spec.adjacency);
    j["equations"] = json::array();
    for (const auto& eq : spec.equations) {
        json params;
        if (eq.kind == EquationKind::Linear) params["weights"] = vector_to_json(eq.weights);
        else params["expression"] = eq.expression;
        j["equations"].push_back({{"kind", to_string(eq.kind)}, {"params", params}});
    }
    j["noise"] = json::array();
    for (const auto& p : spec.noise) j["noise"].push_back({{"mu", p.mu}, {"sigma", p.sigma}});
    return j;
}

ScmSpec scm_spec_from_json(const json& j) {
    ScmSpec spec;
    spec.adjacency = matrix_from_json(field<json>(j, "adjacency"));
    for (const auto& e : field<json>(j, "equations")) {
        StructuralEquation eq;
        eq.kind = equation_kind_from_string(field<std::string>(e, "kind"));
        const json params = field<json>(e, "params");
        if (eq.kind == EquationKind::Linear) eq.weights = vector_from_json(field<json>(params, "weights"));
        else eq.expression = field<std::string>(params, "expression");
        spec.equations.push_back(std::move(eq));
    }
    if (j.contains("noise")) {
        for (const auto& p : j.at("noise")) spec.noise.push_back({field<double>(p, "mu"), field<double>(p, "sigma")});
    } else {
        spec.noise.assign(static_cast<std::size_t>(spec.size()), NoiseParams{});
    }
    validate(spec);
    return spec;
}

json fitted_scm_to_json(const FittedScm& scm) {
    json j;
    j["graph"] = graph_to_json(scm.graph);
    j["noise"] = json::array();
    for (const auto& p : scm.noise) j["noise"].push_back({{"mu", p.mu}, {"sigma", p.sigma}});
    return j;
}

FittedScm fitted_scm_from_json(const json& j) {
    FittedScm scm{graph_from_json(field<json>(j, "graph")), {}};
    validate_scm_layout(scm.graph);
    for (const auto& p : field<json>(j, "noise")) scm.noise.push_back({field<double>(p, "mu"), field<double>(p, "sigma")});
    if (static_cast<int>(scm.noise.size()) != scm.endogenous_count())
        throw ConfigError("noise list must have one entry per endogenous vertex");
    return scm;
}

Dataset matrix_to_dataset(const Eigen::MatrixXd& m) {
    return Dataset{variable_names(static_cast<int>(m.cols())), m};
}

Eigen::MatrixXd matrix_from_dataset(const Dataset& d) {
    if (d.rows() != d.cols()) throw DataError("matrix CSV must be square");
    return d.values;
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

void write_json(const json& j, const std::filesystem::path& path) { write_text(j.dump(2) + "\n", path); }

}  // namespace pcc
