#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtwin/csv.hpp"
#include "vtwin/experiments.hpp"

using namespace vtwin;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("vtwin_exp_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(VTWIN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

ExperimentConfig quick_config(const TempDir& dir, std::uint64_t seed) {
    ExperimentConfig cfg = parse_config(nlohmann::json::object());
    cfg.seed = seed;
    cfg.out_dir = dir.path.string();
    cfg.queue_grid = {{0.5, 1.0, 1}, {1.5, 1.0, 2}};
    cfg.target_completions = 40000;
    Scenario s;
    s.params = {5.0, 4.0, 8};
    s.duration = 150.0;
    s.attacks = {AttackProfile::flood(50.0, 100.0, 6.0)};
    cfg.scenario = s;
    return cfg;
}

} // namespace

TEST_CASE("config defaults and overrides") {
    const ExperimentConfig d = parse_config(nlohmann::json::object());
    CHECK(d.seed == 42);
    CHECK(d.out_dir == "out");
    CHECK(d.twin.gamma == 80.0);
    CHECK(d.knn_k == 5);
    CHECK_FALSE(d.scenario.has_value());

    const auto j = nlohmann::json::parse(R"({
        "seed": 7,
        "out_dir": "elsewhere",
        "scenario": {"lambda": 2.0, "mu": 1.0, "channels": 3, "duration": 100.0,
                     "lifetime": "inf",
                     "attacks": [{"kind": "jam", "start": 10, "end": 20, "loss": 0.5, "burst": 2.0}]},
        "twin": {"gamma": 60.0, "sampling": "bernoulli"},
        "lifetime_grid": [1, 2, "inf"],
        "split": {"train": 0.6, "validation": 0.2, "test": 0.2},
        "pipeline": {"epochs": 10, "hidden": [8, 8, 8]},
        "knn_k": 3,
        "cost": {"ns_per_op": 10.0}
    })");
    const ExperimentConfig c = parse_config(j);
    CHECK(c.seed == 7);
    CHECK(c.out_dir == "elsewhere");
    REQUIRE(c.scenario.has_value());
    CHECK(c.scenario->params.m == 3);
    CHECK_FALSE(c.scenario->message_lifetime.has_value());
    REQUIRE(c.scenario->attacks.size() == 1);
    CHECK(c.scenario->attacks[0].kind == AttackProfile::Kind::jam);
    CHECK(c.twin.sampling == SamplingMode::bernoulli);
    REQUIRE(c.lifetime_grid.size() == 3);
    CHECK(std::isinf(c.lifetime_grid[2]));
    CHECK(c.split.train_fraction == 0.6);
    CHECK(c.pipeline.epochs == 10);
    CHECK(c.pipeline.hidden == std::array<std::size_t, 3>{8, 8, 8});
    CHECK(c.knn_k == 3);
    CHECK(c.cost.ns_per_op == 10.0);
}

TEST_CASE("broken configs are rejected") {
    const auto bad = [](const char* text) {
        CHECK_THROWS_AS(parse_config(nlohmann::json::parse(text)), invalid_config_error);
    };
    bad(R"([1,2,3])");
    bad(R"({"gamma_grid": [0]})");
    bad(R"({"gamma_grid": [150]})");
    bad(R"({"lifetime_grid": [-1]})");
    bad(R"({"lifetime_grid": ["soon"]})");
    bad(R"({"lifetime_grid": [true]})");
    bad(R"({"twin": {"sampling": "sometimes"}})");
    bad(R"({"twin": {"gamma": 0}})");
    bad(R"({"pipeline": {"hidden": [0, 4, 4]}})");
    bad(R"({"pipeline": {"hidden": [4, 4]}})");
    bad(R"({"split": {"train": 0.9, "validation": 0.2, "test": 0.2}})");
    bad(R"({"cost": {"ns_per_op": 0}})");
    bad(R"({"seed": "abc"})");
    bad(R"({"scenario": {"lambda": 1, "mu": 1, "channels": 1, "duration": 0}})");
    bad(R"({"scenario": {"lambda": 1, "mu": 1, "channels": 1, "duration": 10,
            "attacks": [{"kind": "flood", "start": 0, "end": 5, "multiplier": 1.0}]}})");
    bad(R"({"scenario": {"lambda": 1, "mu": 1, "channels": 1, "duration": 10,
            "attacks": [{"kind": "quiet", "start": 0, "end": 5}]}})");
    bad(R"({"scenario": {"lambda": 1, "mu": 1, "channels": 1, "duration": 10,
            "attacks": {"kind": "flood"}}})");
    bad(R"({"scenario": {"lambda": 1, "mu": 1, "channels": 1, "duration": 10, "lifetime": "never"}})");
}

TEST_CASE("the config hash ignores seed and output directory") {
    const auto a = parse_config(nlohmann::json::parse(R"({"seed": 1, "out_dir": "x", "knn_k": 7})"));
    const auto b = parse_config(nlohmann::json::parse(R"({"seed": 2, "out_dir": "y", "knn_k": 7})"));
    const auto c = parse_config(nlohmann::json::parse(R"({"seed": 1, "out_dir": "x", "knn_k": 9})"));
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("queue validation reports one row per grid point") {
    TempDir dir;
    ExperimentConfig cfg = quick_config(dir, 5);
    cfg.queue_grid = {{0.5, 1.0, 1}, {2.0, 1.0, 1}, {1.5, 1.0, 2}}; // middle point saturated
    const fs::path report = run_queue_validate(cfg);

    const auto meta = read_report_meta(report.string());
    CHECK(meta.at("experiment") == "queue-validate");
    CHECK(meta.at("seed") == "5");
    CHECK(meta.at("version") == kVersion);
    CHECK(meta.at("config_hash").size() == 16);

    const csv::Document doc = csv::parse_file(report.string());
    REQUIRE(doc.rows.size() == 3);
    CHECK(doc.header.front() == "lambda");
    const std::size_t stable = 3, tq_model = 4, tq_err = 6, nq_err = 9;
    CHECK(doc.rows[0][stable] == "1");
    CHECK(doc.rows[1][stable] == "0");
    CHECK(doc.rows[1][tq_model].empty());
    CHECK(doc.rows[2][stable] == "1");
    // shorter runs than the standard grid, so a looser band
    for (std::size_t r : {std::size_t{0}, std::size_t{2}}) {
        CHECK(csv::parse_double(doc.rows[r][tq_err], "tq") < 0.10);
        CHECK(csv::parse_double(doc.rows[r][nq_err], "nq") < 0.10);
    }
}

TEST_CASE("resource accounting moves the scan to the twin") {
    TempDir dir;
    const ExperimentConfig cfg = quick_config(dir, 9);
    const fs::path report = run_resource(cfg);
    const csv::Document doc = csv::parse_file(report.string());
    REQUIRE(doc.rows.size() == 2);
    const auto& no_twin = doc.rows[0];
    const auto& twin = doc.rows[1];
    CHECK(no_twin[0] == "no-twin");
    CHECK(no_twin[1].empty());
    CHECK(no_twin[2] == no_twin[3]); // every row processed at the source
    CHECK(no_twin[4] == "0");
    CHECK(no_twin[7] == "0");
    CHECK(twin[0] == "twin");
    CHECK(csv::parse_double(twin[1], "gamma") == 80.0);
    CHECK(twin[3] == "0");
    const double total = csv::parse_double(twin[2], "total");
    const double mirrored = csv::parse_double(twin[4], "mirrored");
    CHECK(mirrored == Catch::Approx(0.8 * total).margin(1.0));
    CHECK(csv::parse_double(twin[7], "ram") > 0.0);

    const fs::path stream = dir.path / "twin_stream.csv";
    REQUIRE(fs::exists(stream));
    REQUIRE(fs::exists(dir.path / "twin_stream.csv.meta.json"));
    const csv::Document sdoc = csv::parse_file(stream.string());
    CHECK(sdoc.rows.size() == static_cast<std::size_t>(mirrored));
    CHECK(sdoc.header[0] == "source_index");
}

TEST_CASE("experiments rerun byte for byte") {
    TempDir a, b;
    const ExperimentConfig ca = quick_config(a, 31);
    const ExperimentConfig cb = quick_config(b, 31);

    run_queue_validate(ca);
    run_queue_validate(cb);
    CHECK(slurp(a.path / "queue_validate.csv") == slurp(b.path / "queue_validate.csv"));

    run_simulate(ca);
    run_simulate(cb);
    for (const char* f : {"trace.csv", "windows.csv", "summary.csv"})
        CHECK(slurp(a.path / f) == slurp(b.path / f));

    run_resource(ca);
    run_resource(cb);
    CHECK(slurp(a.path / "resource.csv") == slurp(b.path / "resource.csv"));
    CHECK(slurp(a.path / "twin_stream.csv") == slurp(b.path / "twin_stream.csv"));
}

TEST_CASE("reports carry no absolute paths and a fixed meta block") {
    TempDir dir;
    const ExperimentConfig cfg = quick_config(dir, 13);
    run_simulate(cfg);
    const std::string manifest = slurp(dir.path / "windows.csv.manifest.json");
    CHECK(manifest.find(dir.path.string()) == std::string::npos);
    const std::string summary = slurp(dir.path / "summary.csv");
    CHECK(summary.find(dir.path.string()) == std::string::npos);
    const auto meta = read_report_meta((dir.path / "summary.csv").string());
    REQUIRE(meta.size() == 4);
    CHECK(meta.count("experiment") == 1);
    CHECK(meta.count("config_hash") == 1);
    CHECK(meta.count("seed") == 1);
    CHECK(meta.count("version") == 1);
}

TEST_CASE("cli exit codes distinguish config and data problems") {
    TempDir dir;
    const std::string good_cfg = dir.file("good.json");
    {
        std::ofstream os(good_cfg);
        os << R"({"queue_grid": [{"lambda": 0.5, "mu": 1.0, "channels": 1}],)"
           << R"( "target_completions": 20000})";
    }
    CHECK(run_cli("queue-validate --config " + good_cfg + " --seed 1 --out " +
                  dir.file("ok")) == 0);
    REQUIRE(fs::exists(dir.path / "ok" / "queue_validate.csv"));

    const std::string bad_cfg = dir.file("bad.json");
    {
        std::ofstream os(bad_cfg);
        os << R"({"gamma_grid": [0]})";
    }
    CHECK(run_cli("twinning-sweep --config " + bad_cfg + " --out " + dir.file("x")) == 2);

    const std::string missing_data = dir.file("data.json");
    {
        std::ofstream os(missing_data);
        os << R"({"datasets": {"rf_a": "nowhere_a.csv", "rf_b": "nowhere_b.csv",)"
           << R"( "ton": "nowhere_t.csv"}})";
    }
    CHECK(run_cli("detect-bench --config " + missing_data + " --out " + dir.file("y")) == 3);

    CHECK(run_cli("no-such-command") != 0);
    CHECK(run_cli("simulate --config does_not_exist.json") != 0);
}
