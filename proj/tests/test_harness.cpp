#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcc/dataset.hpp"
#include "pcc/error.hpp"
#include "pcc/harness.hpp"

using namespace pcc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("pcc_harness_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(const std::string& args) {
    const std::string cmd = std::string(PCC_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig small(ExperimentKind kind, const fs::path& out) {
    ExperimentConfig cfg;
    cfg.experiment = kind;
    cfg.graph.name = "fork";
    cfg.n_train = 400;
    cfg.n_test = 30;
    cfg.discovery_samples = 400;
    cfg.fit.epochs = 15;
    cfg.query.inference.steps = 60;
    cfg.discovery.train.epochs = 30;
    cfg.discovery.dag_warmup_epochs = 15;
    cfg.negatives.samples = 300;
    cfg.negatives.epochs = 5;
    cfg.seeds = {0, 1, 2};
    cfg.output_dir = out.string();
    return cfg;
}

}  // namespace

TEST_CASE("dataset CSV round trip") {
    Rng rng(1);
    Dataset d{{"x1", "x2", "x3"}, Eigen::MatrixXd(100, 3)};
    for (Eigen::Index i = 0; i < d.values.size(); ++i) d.values(i) = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
    const fs::path p = scratch("csv") / "d.csv";
    save_csv(d, p);
    Dataset back = load_csv(p);
    CHECK(back.columns == d.columns);
    CHECK(back.values == d.values);

    CHECK(parse_csv("").rows() == 0);
    CHECK(parse_csv("x1,x2\n").rows() == 0);
    CHECK(parse_csv("x1,x2\n").columns.size() == 2);
    CHECK_THROWS_AS(parse_csv("x1,x2\n1,2\n3\n"), DataError);
    CHECK_THROWS_AS(parse_csv("x1,x2\n1,abc\n"), DataError);
    CHECK_THROWS_AS(d.require_column("x9"), DataError);
    CHECK_THROWS_AS(load_csv(p.parent_path() / "missing.csv"), DataError);
    CHECK(std::stod(format_double(0.1)) == 0.1);
}

TEST_CASE("experiment config parsing") {
    ExperimentConfig cfg = experiment_config_from_json(json::parse(R"({
        "experiment": "discover",
        "graph": {"source": "random", "kind": "sf", "nodes": 8, "k": 2},
        "discovery": {"lambda_dag": 50, "epochs": 12},
        "seeds": [3, 4]
    })"));
    CHECK(cfg.experiment == ExperimentKind::Discover);
    CHECK(cfg.graph.kind == RandomGraphKind::SF);
    CHECK(cfg.discovery.priors.lambda_dag == 50.0);
    CHECK(cfg.discovery.train.epochs == 12);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(cfg.fit.epochs == 1000);
    CHECK(cfg.fit.optimizer.lr == 8e-3);
    CHECK(cfg.fit.optimizer.weight_decay == 1e-4);
    CHECK(cfg.discovery.priors.lambda_l1 == 5e-6);
    CHECK(cfg.discovery.priors.omega == 0.3);

    ExperimentConfig back = experiment_config_from_json(experiment_config_to_json(cfg));
    CHECK(experiment_config_to_json(back).dump() == experiment_config_to_json(cfg).dump());

    CHECK_THROWS_AS(experiment_config_from_json(json::parse(R"({"experiment": "teleport"})")), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(json::parse(R"({"epochz": 3})")), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(json::parse(R"({"seeds": []})")), ConfigError);
    CHECK_THROWS_AS(experiment_config_from_json(json::parse(R"({"fit": {"lr": "fast"}})")), ConfigError);
}

TEST_CASE("experiments produce reports whose aggregates match the seeds") {
    for (auto kind : {ExperimentKind::FitAndQuery, ExperimentKind::Discover, ExperimentKind::EndToEnd,
                      ExperimentKind::NegativesToy}) {
        CAPTURE(to_string(kind));
        const fs::path out = scratch(std::string(to_string(kind)));
        json report = run_experiment(small(kind, out), 2);
        CHECK(fs::exists(out / "report.json"));
        REQUIRE(report["per_seed"].size() == 3);
        for (const auto& [key, agg] : report["aggregate"].items()) {
            std::vector<double> v;
            for (const auto& s : report["per_seed"]) v.push_back(s["metrics"][key].get<double>());
            double mean = 0.0;
            for (double x : v) mean += x / 3.0;
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean) / 2.0;
            CHECK(agg["mean"].get<double>() == doctest::Approx(mean).epsilon(1e-12));
            CHECK(agg["std"].get<double>() == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
            CHECK(agg["n"].get<int>() == 3);
        }
        for (const auto& s : report["per_seed"])
            for (const auto& [name, path] : s["artifacts"].items()) CHECK(fs::exists(out / path.get<std::string>()));
    }
}

TEST_CASE("fit_and_query reports every query level twice") {
    const fs::path out = scratch("levels");
    json report = run_experiment(small(ExperimentKind::FitAndQuery, out), 1);
    const auto& m = report["per_seed"][0]["metrics"];
    for (const char* key : {"obs.mae", "obs.mmd", "do.mae", "do.mmd", "do.mean_e", "do.std_e", "cf.mae", "cf.mse",
                            "cf.sse"}) {
        CAPTURE(key);
        REQUIRE(m.contains(key));
        REQUIRE(m.contains(std::string(key) + "_x100"));
        CHECK(m[std::string(key) + "_x100"].get<double>() == doctest::Approx(100.0 * m[key].get<double>()));
        CHECK(m[key].get<double>() >= 0.0);
    }
}

TEST_CASE("reports are reproducible regardless of thread count") {
    for (auto kind : {ExperimentKind::FitAndQuery, ExperimentKind::Discover}) {
        const fs::path a = scratch("det_a"), b = scratch("det_b");
        json ra = run_experiment(small(kind, a), 1);
        json rb = run_experiment(small(kind, b), 3);
        ra.erase("wall_clock_seconds");
        rb.erase("wall_clock_seconds");
        ra["config"].erase("output_dir");
        rb["config"].erase("output_dir");
        CHECK(ra.dump() == rb.dump());
        for (const auto& entry : fs::recursive_directory_iterator(a)) {
            if (!entry.is_regular_file() || entry.path().filename() == "report.json") continue;
            const fs::path twin = b / fs::relative(entry.path(), a);
            CHECK(slurp(entry.path()) == slurp(twin));
        }
    }
}

TEST_CASE("thread count from the environment") {
    ::unsetenv("PC_CAUSAL_THREADS");
    CHECK(thread_count_from_env() == 1);
    ::setenv("PC_CAUSAL_THREADS", "4", 1);
    CHECK(thread_count_from_env() == 4);
    ::setenv("PC_CAUSAL_THREADS", "many", 1);
    CHECK_THROWS_AS(thread_count_from_env(), ConfigError);
    ::unsetenv("PC_CAUSAL_THREADS");
}

TEST_CASE("command line") {
    const fs::path dir = scratch("cli");
    const std::string d = dir.string();
    CHECK(cli("generate --kind common --name chain --n-train 500 --n-test 20 --seed 3 --out " + d + "/gen") == 0);
    for (const char* f : {"spec.json", "train.csv", "test_obs.csv", "test_do.csv", "test_cf.csv"})
        CHECK(fs::exists(dir / "gen" / f));
    CHECK(cli("discover --data " + d + "/gen/train.csv --truth " + d + "/gen/spec.json --epochs 50 --warmup 25 --out " +
              d + "/disc") == 0);
    for (const char* f : {"weighted.csv", "binary.csv", "trace.csv", "report.json"}) CHECK(fs::exists(dir / "disc" / f));
    CHECK(cli("fit --data " + d + "/gen/train.csv --adjacency " + d + "/gen/spec.json --epochs 20 --out " + d +
              "/fit") == 0);
    CHECK(fs::exists(dir / "fit" / "model.json"));
    CHECK(cli("query --graph " + d + "/fit/model.json --do x1=1.0") == 0);
    CHECK(cli("query --graph " + d + "/fit/model.json --evidence x3=0.5") == 0);

    CHECK(cli("") != 0);
    CHECK(cli("generate --kind hexagon --out " + d + "/bad") == 1);
    CHECK(cli("query --graph " + d + "/fit/model.json --do nope=1") == 1);
    CHECK(cli("query --graph " + d + "/fit/model.json --do x1=1 --evidence x1=2") == 1);
    CHECK(cli("report --config " + d + "/missing.json") == 1);
    CHECK(cli("discover --data " + d + "/missing.csv --out " + d + "/x") == 2);
    std::ofstream(dir / "ragged.csv") << "x1,x2\n1,2\n3\n";
    CHECK(cli("discover --data " + d + "/ragged.csv --out " + d + "/x") == 2);
}
