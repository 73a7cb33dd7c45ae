#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypdrift/lab.hpp"

using namespace hypdrift;
namespace fs = std::filesystem;

namespace {
std::string error_path(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "no error";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small() {
    ExperimentConfig c;
    c.name = "lab-test";
    c.n = 200;
    c.batch = 40;
    c.ball_radius = 8;
    c.window_lo = 4;
    c.window_hi = 8;
    c.bucket_n = 4;
    c.deviation_radius = 3;
    c.seed = 5;
    return c;
}
}  // namespace

TEST_CASE("config parsing and validation") {
    const ExperimentConfig d = parse_config("{}");
    CHECK(d.action == "free(2)");
    CHECK(d.n == 10000);
    const ExperimentConfig c = parse_config(R"({"action": "modular", "measure": [["s", 2], ["t", 1], ["T", 1]], "seed": 4})");
    CHECK(c.measure.size() == 3);
    CHECK(c.seed == 4);

    CHECK(error_path(R"({"n": "many"})") == "$.n");
    CHECK(error_path(R"({"n": -3})") == "$.n");
    CHECK(error_path(R"({"colour": 1})") == "$.colour");
    CHECK(error_path(R"({"action": "lattice"})") == "$.action");
    CHECK(error_path(R"({"potential": "wiggle"})") == "$.potential");
    CHECK(error_path(R"({"window_lo": 9, "window_hi": 8, "ball_radius": 12})") == "$.window_hi");
    CHECK(error_path(R"({"n": 50})") == "$.n");
    CHECK(error_path(R"({"measure": [["a", 1], 2]})").rfind("$.measure", 0) == 0);
    // truncated input names the field being read
    CHECK(error_path(R"({"name": "x", "seed": )") == "$.seed");
    CHECK(error_path(R"({"phi_grid": [20, 40,)") == "$.phi_grid[2]");
    try {
        parse_config("{\n  \"n\": 200,\n");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config("/nonexistent/cfg.json"), ConfigError);
}

TEST_CASE("fingerprints") {
    ExperimentConfig a = small(), b = small();
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(a.fingerprint().size() == 16);
    b.out_dir = "elsewhere";
    CHECK(a.fingerprint() == b.fingerprint());
    b.seed = 6;
    CHECK(a.fingerprint() != b.fingerprint());
    // round trip through JSON
    CHECK(config_from_json(a.to_json()).fingerprint() == a.fingerprint());
    CHECK(parse_config(a.canonical()).fingerprint() == a.fingerprint());
}

TEST_CASE("schema") {
    const auto s = config_schema();
    CHECK(s.at("additionalProperties") == false);
    CHECK(s.at("properties").contains("seed"));
    CHECK(s.at("properties").contains("potential"));
}

TEST_CASE("builtins") {
    const auto names = builtin_config_names();
    CHECK(std::find(names.begin(), names.end(), "f2-uniform-equality") != names.end());
    CHECK(std::find(names.begin(), names.end(), "modular-strict") != names.end());
    CHECK(builtin_config("modular-strict").action == "modular");
    CHECK_THROWS(builtin_config("nope"));
    for (const auto& n : suite_config_names())
        CHECK_NOTHROW(builtin_config(n));
}

TEST_CASE("list and describe") {
    const std::string actions = list_text("actions");
    for (const char* a : {"free(k)", "schottky", "modular"})
        CHECK(actions.find(a) != std::string::npos);
    CHECK(list_text("configs").find("f2-uniform-equality") != std::string::npos);
    CHECK(list_text("potentials").find("plane-bump") != std::string::npos);
    CHECK_THROWS(list_text("colours"));
    const std::string m = describe_text("modular");
    CHECK(m.find("S") != std::string::npos);
    CHECK(m.find("T") != std::string::npos);
    CHECK(m.find("T = [[1, 1], [0, 1]]") != std::string::npos);
    CHECK_THROWS(describe_text("unknown"));
}

TEST_CASE("run writes reproducible reports") {
    const fs::path dir = fs::temp_directory_path() / "hypdrift_lab_test";
    fs::remove_all(dir);
    const RunOutput r1 = run_experiment(small(), (dir / "a").string());
    REQUIRE(r1.exit_code == 0);
    CHECK(fs::exists(dir / "a" / "report.json"));
    CHECK(fs::exists(dir / "a" / "drift.csv"));
    CHECK(fs::exists(dir / "a" / "deviation.csv"));
    const auto rep = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
    CHECK(rep.at("fingerprint") == small().fingerprint());
    CHECK(rep.at("module_versions").contains("diagnostics"));
    CHECK(rep.at("inequality").at("verdict") == "equality-consistent");
    CHECK(rep.contains("generated_at"));

    const RunOutput r2 = run_experiment(small(), (dir / "b").string());
    auto j1 = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
    auto j2 = nlohmann::json::parse(slurp(dir / "b" / "report.json"));
    j1.erase("generated_at");
    j2.erase("generated_at");
    CHECK(j1.dump() == j2.dump());
    CHECK(slurp(dir / "a" / "deviation.csv") == slurp(dir / "b" / "deviation.csv"));

    ExperimentConfig bad = small();
    bad.action = "modular";
    bad.potential = "plane-bump";
    bad.n = 1000;
    bad.batch = 2;
    bad.potential_step = 0.02;
    bad.bucket_n = 0;
    bad.deviation_radius = 0;
    const RunOutput r3 = run_experiment(bad, (dir / "c").string());
    CHECK(r3.exit_code == 2);
    CHECK(r3.report.at("inequality").at("verdict") == "inconclusive");
    CHECK(r3.report.at("inequality").contains("failing_component"));
    fs::remove_all(dir);
}

TEST_CASE("shipped configs parse") {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(HYPDRIFT_CONFIG_DIR)) {
        if (e.path().extension() != ".json" || e.path().filename() == "schema.json")
            continue;
        const ExperimentConfig c = load_config(e.path().string());
        const auto names = builtin_config_names();
        if (std::find(names.begin(), names.end(), c.name) != names.end())
            CHECK(builtin_config(c.name).fingerprint() == c.fingerprint());
        ++n;
    }
    CHECK(n >= builtin_config_names().size());
    const auto schema = nlohmann::json::parse(slurp(fs::path(HYPDRIFT_CONFIG_DIR) / "schema.json"));
    CHECK(schema == config_schema());
}
