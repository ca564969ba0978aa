// pcc_causal: command-line driver for generation, fitting, querying and discovery.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "pcc/adjacency.hpp"
#include "pcc/error.hpp"
#include "pcc/harness.hpp"

namespace fs = std::filesystem;
using namespace pcc;

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

/// "x1=0.5,x3=2" -> {vertex: value}. Keys are vertex names or ids.
Assignment parse_assignments(const PCGraph& graph, const std::string& text) {
    Assignment out;
    if (text.empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        const int v = graph.find_vertex(key);
        if (v < 0) throw ConfigError("unknown vertex '" + key + "'");
        if (graph.dim(v) != 1) throw ConfigError("command-line values only cover scalar vertices");
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(item.substr(eq + 1), &used);
            if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError("bad number in '" + item + "'");
        }
        if (!out.emplace(v, Eigen::MatrixXd::Constant(1, 1, value)).second)
            throw ConfigError("vertex '" + key + "' given twice");
    }
    return out;
}

/// Adjacency from a spec JSON file or a square CSV matrix.
Eigen::MatrixXd load_adjacency(const fs::path& path) {
    if (path.extension() == ".json") {
        const json j = read_json(path);
        if (j.contains("equations")) return scm_spec_from_json(j).adjacency;
        return matrix_from_json(j.at("adjacency"));
    }
    return matrix_from_dataset(load_csv(path));
}

Eigen::MatrixXd load_truth_weights(const fs::path& path) {
    if (path.extension() == ".json") {
        const ScmSpec spec = scm_spec_from_json(read_json(path));
        return spec.is_linear() ? spec.weight_matrix() : spec.adjacency;
    }
    return matrix_from_dataset(load_csv(path));
}

json values_to_json(const PCGraph& graph, const std::vector<Eigen::MatrixXd>& values, int limit) {
    json out = json::object();
    for (int v = 0; v < limit; ++v) {
        json vals = json::array();
        const auto& m = values[static_cast<std::size_t>(v)];
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) vals.push_back(m(r, c));
        out[graph.vertex_name(v)] = vals;
    }
    return out;
}

struct GenerateArgs {
    std::string kind = "common";
    std::string name = "chain";
    int nodes = 10;
    int k = 1;
    std::string regime = "linear";
    long n_train = 3000;
    long n_test = 1000;
    std::uint64_t seed = 0;
    std::string out;
};

void run_generate(const GenerateArgs& a) {
    GraphSource src;
    if (a.kind == "common") {
        src.source = "common";
        src.name = a.name;
    } else {
        src.source = "random";
        src.kind = random_graph_kind_from_string(a.kind);
        src.nodes = a.nodes;
        src.k = a.k;
    }
    src.regime = edge_regime_from_string(a.regime);
    const ScmSpec spec = build_spec(src, a.seed);
    const Benchmark b = make_benchmark(spec, a.n_train, a.n_test, a.seed);
    fs::create_directories(a.out);
    const fs::path dir(a.out);
    write_json(scm_spec_to_json(spec), dir / "spec.json");
    save_csv(b.train, dir / "train.csv");
    save_csv(b.test_obs, dir / "test_obs.csv");
    save_csv(b.test_do, dir / "test_do.csv");
    save_csv(cf_pairs_to_dataset(b.test_cf, spec.size()), dir / "test_cf.csv");
}

struct FitArgs {
    std::string data;
    std::string adjacency;
    std::string regime = "linear";
    ScmFitConfig fit;
    std::uint64_t seed = 0;
    std::string out;
};

void run_fit(FitArgs a) {
    const Dataset data = load_csv(a.data);
    AugmentConfig aug;
    aug.regime = edge_regime_from_string(a.regime);
    aug.seed = a.seed;
    a.fit.seed = a.seed;
    const PCGraph graph = augment_with_exogenous(load_adjacency(a.adjacency), aug);
    const auto result = fit_scm(graph, data, a.fit);
    fs::create_directories(a.out);
    write_json(fitted_scm_to_json(result.scm), fs::path(a.out) / "model.json");
    Dataset trace{{"epoch", "energy", "prior_l1", "prior_dag"},
                  Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(result.energy.size()), 4)};
    for (std::size_t e = 0; e < result.energy.size(); ++e) {
        trace.values(static_cast<Eigen::Index>(e), 0) = static_cast<double>(e + 1);
        trace.values(static_cast<Eigen::Index>(e), 1) = result.energy[e];
    }
    save_csv(trace, fs::path(a.out) / "trace.csv");
}

struct QueryArgs {
    std::string graph;
    std::string evidence;
    std::string intervention;
    std::string counterfactual;
    QueryConfig config;
};

void run_query(const QueryArgs& a) {
    const json j = read_json(a.graph);
    if (!a.counterfactual.empty()) {
        if (!j.contains("noise")) throw ConfigError("counterfactual queries need a fitted SCM model file");
        if (!a.evidence.empty()) throw ConfigError("counterfactual queries take factual rows from the file, not --evidence");
        const FittedScm scm = fitted_scm_from_json(j);
        const Dataset rows = load_csv(a.counterfactual);
        const int n = scm.endogenous_count();
        Eigen::MatrixXd factual(n, rows.rows());
        for (int i = 0; i < n; ++i)
            factual.row(i) = rows.values.col(rows.require_column(scm.graph.vertex_name(i))).transpose();
        Assignment intervention = parse_assignments(scm.graph, a.intervention);
        const auto result = counterfactual_query(scm, factual, intervention, a.config);
        std::cout << values_to_json(scm.graph, result.values, n).dump(2) << "\n";
        return;
    }
    const PCGraph graph = j.contains("noise") ? fitted_scm_from_json(j).graph : graph_from_json(j);
    const Assignment evidence = parse_assignments(graph, a.evidence);
    const Assignment intervention = parse_assignments(graph, a.intervention);
    const auto result = intervention.empty() ? conditional_query(graph, evidence, a.config)
                                             : interventional_query(graph, intervention, evidence, a.config);
    std::cout << values_to_json(graph, result.values, graph.size()).dump(2) << "\n";
}

struct DiscoverArgs {
    std::string data;
    std::string truth;
    DiscoveryConfig config;
    std::uint64_t seed = 0;
    std::string out;
};

void run_discover(DiscoverArgs a) {
    const Dataset data = load_csv(a.data);
    a.config.train.seed = a.seed;
    if (!a.truth.empty()) a.config.truth = load_truth_weights(a.truth);
    const auto result = discover(data, a.config);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    save_csv(matrix_to_dataset(result.weighted), dir / "weighted.csv");
    save_csv(matrix_to_dataset(result.binary), dir / "binary.csv");
    save_csv(trace_to_dataset(result.trace), dir / "trace.csv");
    json report;
    report["samples"] = data.rows();
    report["variables"] = data.cols();
    report["seed"] = a.seed;
    report["lambda_l1"] = a.config.priors.lambda_l1;
    report["lambda_l2"] = a.config.priors.lambda_l2;
    report["lambda_dag"] = a.config.priors.lambda_dag;
    report["omega"] = a.config.priors.omega;
    report["epochs"] = a.config.train.epochs;
    report["acyclic"] = is_dag(result.binary);
    report["edges"] = static_cast<int>(result.binary.sum());
    if (a.config.truth) {
        const auto gm = graph_metrics((a.config.truth->array() != 0.0).cast<double>(), result.binary);
        report["metrics"] = {{"mae", mae(*a.config.truth, result.weighted)},
                             {"fdr", gm.fdr},
                             {"tpr", gm.tpr},
                             {"fpr", gm.fpr},
                             {"shd", gm.shd},
                             {"shd_elementwise", gm.shd_elementwise},
                             {"nnz", gm.nnz},
                             {"f1", gm.f1}};
    }
    write_json(report, dir / "report.json");
}

void run_report(const std::string& config_path, const std::string& out, std::optional<ExperimentKind> force) {
    json j = config_path.empty() ? json{{"experiment", "e2e"}} : read_json(config_path);
    if (force) j["experiment"] = to_string(*force);
    if (!out.empty()) j["output_dir"] = out;
    const ExperimentConfig config = experiment_config_from_json(j);
    const json report = run_experiment(config, thread_count_from_env());
    std::cout << report["aggregate"].dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Predictive-coding causal inference engine"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Sample an SCM and its benchmark datasets");
    g->add_option("--kind", gen.kind, "er | sf | common")->check(CLI::IsMember({"er", "sf", "common"}));
    g->add_option("--name", gen.name, "common graph name");
    g->add_option("--nodes", gen.nodes, "random graph size");
    g->add_option("--k", gen.k, "expected edges per node");
    g->add_option("--regime", gen.regime, "linear | nonlinear")->check(CLI::IsMember({"linear", "nonlinear"}));
    g->add_option("--n-train", gen.n_train, "training rows");
    g->add_option("--n-test", gen.n_test, "test rows per split");
    g->add_option("--seed", gen.seed, "root seed");
    g->add_option("--out", gen.out, "output directory")->required();

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit an SCM to observational data");
    f->add_option("--data", fit.data, "training CSV")->required();
    f->add_option("--adjacency", fit.adjacency, "spec JSON or square CSV")->required();
    f->add_option("--regime", fit.regime, "linear | nonlinear")->check(CLI::IsMember({"linear", "nonlinear"}));
    f->add_option("--epochs", fit.fit.epochs);
    f->add_option("--steps", fit.fit.steps);
    f->add_option("--gamma", fit.fit.gamma);
    f->add_option("--lr", fit.fit.optimizer.lr);
    f->add_option("--weight-decay", fit.fit.optimizer.weight_decay);
    f->add_option("--batch-size", fit.fit.batch_size);
    f->add_option("--seed", fit.seed);
    f->add_option("--out", fit.out, "output directory")->required();

    QueryArgs query;
    auto* q = app.add_subcommand("query", "Answer a conditional, interventional or counterfactual query");
    q->add_option("--graph", query.graph, "graph or fitted model JSON")->required();
    q->add_option("--evidence", query.evidence, "k=v,...");
    q->add_option("--do", query.intervention, "k=v,...");
    q->add_option("--counterfactual", query.counterfactual, "CSV of factual rows");
    q->add_option("--steps", query.config.inference.steps);
    q->add_option("--gamma", query.config.inference.gamma);

    DiscoverArgs disc;
    auto* d = app.add_subcommand("discover", "Learn a DAG from observational data");
    d->add_option("--data", disc.data, "data CSV")->required();
    d->add_option("--lambda-l1", disc.config.priors.lambda_l1);
    d->add_option("--lambda-l2", disc.config.priors.lambda_l2);
    d->add_option("--lambda-dag", disc.config.priors.lambda_dag);
    d->add_option("--omega", disc.config.priors.omega);
    d->add_option("--epochs", disc.config.train.epochs);
    d->add_option("--warmup", disc.config.dag_warmup_epochs, "epochs to ramp the acyclicity weight");
    d->add_option("--lr", disc.config.train.gains.lr);
    d->add_option("--batch-size", disc.config.train.batch_size);
    d->add_option("--seed", disc.seed);
    d->add_option("--truth", disc.truth, "true weights (spec JSON or CSV)");
    d->add_option("--out", disc.out, "output directory")->required();

    std::string e2e_config;
    std::string e2e_out;
    auto* e = app.add_subcommand("e2e", "Discover, fit and evaluate queries on held-out data");
    e->add_option("--config", e2e_config, "experiment JSON");
    e->add_option("--out", e2e_out, "output directory");

    std::string report_config;
    std::string report_out;
    auto* r = app.add_subcommand("report", "Run an experiment config over its seeds and write report.json");
    r->add_option("--config", report_config, "experiment JSON")->required();
    r->add_option("--out", report_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        if (*g) run_generate(gen);
        else if (*f) run_fit(fit);
        else if (*q) run_query(query);
        else if (*d) run_discover(disc);
        else if (*e) run_report(e2e_config, e2e_out, ExperimentKind::EndToEnd);
        else if (*r) run_report(report_config, report_out, std::nullopt);
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kConfigError;
    } catch (const nlohmann::json::exception& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kConfigError;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kRuntimeError;
    }
    return 0;
}
