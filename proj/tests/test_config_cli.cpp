#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "catch_amalgamated.hpp"
#include "json.hpp"

#include "liquidity/config.hpp"
#include "liquidity/report.hpp"

using namespace liquidity;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

namespace fs = std::filesystem;

ErrorKind parse_kind(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error for " << text);
    return ErrorKind::ParseError;
}

// Removed at process exit.
struct Scratch {
    fs::path dir = fs::temp_directory_path() / ("liquidity_cli_test_" + std::to_string(::getpid()));
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

fs::path scratch_dir() {
    static Scratch s;
    fs::create_directories(s.dir);
    return s.dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
    fs::path p = scratch_dir() / name;
    std::ofstream(p) << text;
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs the CLI with stdout captured to a file; returns the exit status.
int run_cli(const std::string& args, std::string* out = nullptr) {
    const fs::path o = scratch_dir() / "stdout.txt";
    const std::string cmd = std::string("\"") + LIQUIDITY_CLI + "\" " + args + " > \"" + o.string() + "\" 2>/dev/null";
    const int status = std::system(cmd.c_str());
    if (out) *out = read_file(o);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("empty config resolves to the base preset", "[config]") {
    CHECK(parse_config("") == ExperimentConfig{});
    CHECK(parse_config("{}") == ExperimentConfig{});
    const ModelParams p = resolve_params(parse_config("  \n"));
    const ModelParams b = base_params(0.0);
    CHECK(p.mu == b.mu);
    CHECK(p.sigma == b.sigma);
    CHECK(p.lambda01 == b.lambda01);
    CHECK(p.lambda10 == b.lambda10);
    CHECK(p.L == b.L);
}

TEST_CASE("configs reject unknown keys and bad values", "[config]") {
    CHECK(parse_kind(R"({"foo": 1})") == ErrorKind::ParseError);
    CHECK(parse_kind(R"({"params": {"beta": 1}})") == ErrorKind::ParseError);
    CHECK(parse_kind(R"({"grid": {"n_pi": "many"}})") == ErrorKind::ParseError);
    CHECK(parse_kind(R"({"output": {"format": "xml"}})") == ErrorKind::ParseError);
    CHECK(parse_kind(R"({"preset": "nope"})") == ErrorKind::ParseError);
    CHECK(parse_kind(R"({"seed": -3})") == ErrorKind::ParseError);
    CHECK(parse_kind(R"({"horizon": {"T": 0}})") == ErrorKind::InvalidParams);
    try {
        parse_config(R"({"params": {"sigma": 0}})");
        FAIL("expected InvalidParams");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidParams);
        CHECK_THAT(std::string(e.what()), ContainsSubstring("params:"));
    }
    try {
        parse_config("{\n  \"preset\": \"base\",\n  oops\n}");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ParseError);
        CHECK_THAT(std::string(e.what()), ContainsSubstring("line 3"));
    }
}

TEST_CASE("configs round-trip through JSON", "[config]") {
    const std::string text = R"({
        "preset": "fig1",
        "params": {"gamma": -0.5, "L": 0.05},
        "solver": "coupled",
        "grid": {"profile_points": 300, "n_pi": 200},
        "tolerance": {"tol": 1e-9},
        "horizon": {"T": 3},
        "homogenized": {"L_bar": 0.2, "eps": 0.1},
        "simulation": {"n_paths": 100, "antithetic": 1},
        "output": {"format": "json", "path": "out.json"},
        "seed": 17
    })";
    const ExperimentConfig c = parse_config(text);
    CHECK(c.solver == SolverKind::Coupled);
    CHECK(c.seed == 17u);
    CHECK(parse_config(dump_config(c)) == c);
    CHECK(config_to_json(parse_config(dump_config(c))) == config_to_json(c));
}

TEST_CASE("table1 preset expands to the fixture rows", "[config]") {
    std::ifstream in(std::string(LIQUIDITY_FIXTURES) + "/table1_rows.json");
    REQUIRE(in.good());
    const nlohmann::json fx = nlohmann::json::parse(in);
    const auto cases = table1_cases();
    const auto configs = table1_configs();
    REQUIRE(cases.size() == 18);
    REQUIRE(configs.size() == 18);
    REQUIRE(fx.at("rows").size() == 18);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& row = fx.at("rows")[i];
        INFO("row " << i);
        CHECK(cases[i].family == row.at("family").get<std::string>());
        CHECK(cases[i].label == row.at("case").get<std::string>());
        const ModelParams p = resolve_params(configs[i]);
        CHECK(p.gamma == row.at("gamma").get<double>());
        CHECK_THAT(p.mu, WithinAbs(row.at("mu").get<double>(), 1e-12));
        for (const auto& [k, v] : row.at("overrides").items()) CHECK(configs[i].params.at(k) == v.get<double>());
    }
}

TEST_CASE("illiquid consumption curves", "[config][figures]") {
    const Report r = figure1_data(ExperimentConfig{}, 1000);
    std::map<double, std::vector<std::pair<double, double>>> curves;
    for (const auto& row : r.table.rows)
        curves[row[0].get<double>()].emplace_back(row[1].get<double>(), row[2].get<double>());
    REQUIRE(curves.size() == 3);
    CHECK_THAT(curves[0.0].front().second, WithinAbs(0.05, 1e-12));
    for (auto& [g, c] : curves) {
        INFO("gamma " << g);
        CHECK(c.back().second < 0.05 * c.front().second);
        for (std::size_t i = 1; i < c.size(); ++i) REQUIRE(c[i].second <= c[i - 1].second * (1.0 + 1e-12));
    }
    // γ = 0.5 starts below the log curve and ends above it.
    const auto& a = curves[0.5];
    const auto& b = curves[0.0];
    double cross = -1.0;
    for (std::size_t i = 1; i < a.size(); ++i)
        if ((a[i - 1].second - b[i - 1].second) * (a[i].second - b[i].second) <= 0.0) cross = a[i].first;
    CHECK(cross > 0.85);
    CHECK(cross < 0.97);
}

TEST_CASE("CLI exit codes follow the error class", "[cli]") {
    CHECK(run_cli("") == 1);
    CHECK(run_cli("no-such-command") == 1);
    CHECK(run_cli("solve-log") == 0);
    const fs::path unknown = write_file("unknown.json", R"({"foo": 1})");
    CHECK(run_cli("--config " + unknown.string() + " solve-log") == exit_code(ErrorKind::ParseError));
    const fs::path bad = write_file("bad.json", R"({"params": {"sigma": 0}})");
    CHECK(run_cli("--config " + bad.string() + " solve-log") == exit_code(ErrorKind::InvalidParams));
    CHECK(run_cli("solve-hara") == exit_code(ErrorKind::DomainError));
    const fs::path alpha = write_file("alpha.json", R"({"params": {"alpha": 0.03}})");
    CHECK(run_cli("--config " + alpha.string() + " solve-log") == exit_code(ErrorKind::UnsupportedModel));
    CHECK(run_cli("--format xml solve-log") == 1);
}

TEST_CASE("CLI output formats", "[cli]") {
    std::string csv, json;
    REQUIRE(run_cli("solve-log", &csv) == 0);
    CHECK(csv.rfind("b,pi_star,", 0) == 0);
    REQUIRE(run_cli("--format json solve-log", &json) == 0);
    const nlohmann::json j = nlohmann::json::parse(json);
    CHECK(j.at("report") == "solve-log");
    CHECK_THAT(j.at("rows")[0].at("pi_star").get<double>(), WithinAbs(0.8791, 1e-4));

    const fs::path out = scratch_dir() / "table.csv";
    REQUIRE(run_cli("--out " + out.string() + " table1") == 0);
    std::istringstream lines(read_file(out));
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) ++n;
    CHECK(n == 19);
}

TEST_CASE("simulation output is reproducible by seed", "[cli]") {
    const fs::path cfg = write_file("sim.json", R"({"simulation": {"n_paths": 300, "horizon": 50}})");
    std::string a, b, c;
    REQUIRE(run_cli("--config " + cfg.string() + " --seed 5 --format json simulate", &a) == 0);
    REQUIRE(run_cli("--config " + cfg.string() + " --seed 5 --format json simulate", &b) == 0);
    REQUIRE(run_cli("--config " + cfg.string() + " --seed 6 --format json simulate", &c) == 0);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(nlohmann::json::parse(a).at("rows")[0].at("seed") == 5);
}
