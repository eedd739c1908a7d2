#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "liquidity/errors.hpp"
#include "liquidity/model.hpp"

namespace liquidity {

enum class SolverKind { ClosedForm, Coupled, Asymptotic, Homogenized, FiniteHorizon, Dks, Simulate };

inline const char* to_string(SolverKind s) {
    switch (s) {
        case SolverKind::ClosedForm: return "closed-form";
        case SolverKind::Coupled: return "coupled";
        case SolverKind::Asymptotic: return "asymptotic";
        case SolverKind::Homogenized: return "homogenized";
        case SolverKind::FiniteHorizon: return "finite-horizon";
        case SolverKind::Dks: return "dks";
        case SolverKind::Simulate: return "simulate";
    }
    return "unknown";
}

enum class OutputFormat { Csv, Json };

inline const char* to_string(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

// Every field except preset is optional; unset fields fall back to the preset
// or solver defaults and are not written back, so configs round-trip exactly.
struct ExperimentConfig {
    std::string preset = "base";
    // Keys of ModelParams (mu, sigma, r, alpha, rho, gamma, lambda01, lambda10, L).
    std::map<std::string, double> params;
    std::optional<SolverKind> solver;
    // Profile grid and finite-horizon grid: profile_points, z_min, z_max, n_pi,
    // dt_max, cfl, n_t_out.
    std::map<std::string, double> grid;
    // tol, max_evaluations, damping.
    std::map<std::string, double> tolerance;
    std::optional<double> horizon_T;
    std::optional<double> L_bar;
    std::optional<double> eps;
    // n_paths, horizon, dt, antithetic (0/1).
    std::map<std::string, double> simulation;
    std::optional<OutputFormat> format;
    std::optional<std::string> output_path;
    std::optional<std::uint64_t> seed;

    bool operator==(const ExperimentConfig&) const = default;
};

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"base", "table1", "fig1", "fig2", "example1"};
    return names;
}

namespace detail {

inline const std::set<std::string>& param_keys() {
    static const std::set<std::string> k{"mu", "sigma", "r", "alpha", "rho", "gamma", "lambda01", "lambda10", "L"};
    return k;
}
inline const std::set<std::string>& grid_keys() {
    static const std::set<std::string> k{"profile_points", "z_min", "z_max", "n_pi", "dt_max", "cfl", "n_t_out"};
    return k;
}
inline const std::set<std::string>& tolerance_keys() {
    static const std::set<std::string> k{"tol", "max_evaluations", "damping"};
    return k;
}
inline const std::set<std::string>& simulation_keys() {
    static const std::set<std::string> k{"n_paths", "horizon", "dt", "antithetic"};
    return k;
}

inline double& param_slot(ModelParams& p, const std::string& key) {
    if (key == "mu") return p.mu;
    if (key == "sigma") return p.sigma;
    if (key == "r") return p.r;
    if (key == "alpha") return p.alpha;
    if (key == "rho") return p.rho;
    if (key == "gamma") return p.gamma;
    if (key == "lambda01") return p.lambda01;
    if (key == "lambda10") return p.lambda10;
    if (key == "L") return p.L;
    fail(ErrorKind::ParseError, "unknown parameter key '" + key + "'");
}

inline std::map<std::string, double> read_numbers(const nlohmann::json& j, const std::string& path,
                                                  const std::set<std::string>& allowed) {
    if (!j.is_object()) fail(ErrorKind::ParseError, path + ": expected an object");
    std::map<std::string, double> out;
    for (const auto& [k, v] : j.items()) {
        if (!allowed.count(k)) fail(ErrorKind::ParseError, path + "." + k + ": unknown key");
        if (!v.is_number()) fail(ErrorKind::ParseError, path + "." + k + ": expected a number");
        out[k] = v.get<double>();
    }
    return out;
}

inline double read_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) fail(ErrorKind::ParseError, path + ": expected a number");
    return j.get<double>();
}

inline SolverKind parse_solver(const std::string& s) {
    for (SolverKind k : {SolverKind::ClosedForm, SolverKind::Coupled, SolverKind::Asymptotic, SolverKind::Homogenized,
                         SolverKind::FiniteHorizon, SolverKind::Dks, SolverKind::Simulate})
        if (s == to_string(k)) return k;
    fail(ErrorKind::ParseError, "solver: unknown value '" + s + "'");
}

}  // namespace detail

inline OutputFormat parse_format(const std::string& s) {
    if (s == "csv") return OutputFormat::Csv;
    if (s == "json") return OutputFormat::Json;
    fail(ErrorKind::ParseError, "output.format: expected 'csv' or 'json', got '" + s + "'");
}

// Preset parameters. "base", "table1" and "example1" take μ = r + 0.9σ²(1−γ)
// unless μ is overridden; gamma is read from the overrides first.
inline ModelParams preset_params(const std::string& preset, const std::map<std::string, double>& overrides = {}) {
    auto it = overrides.find("gamma");
    const double gamma = it != overrides.end() ? it->second : 0.0;
    ModelParams p;
    if (preset == "base" || preset == "table1" || preset == "example1") {
        p = base_params(gamma);
    } else if (preset == "fig1") {
        p = base_params(gamma);
        p.mu = 0.0625;
        p.lambda10 = 1.0;
    } else if (preset == "fig2") {
        p = base_params(0.0);
        p.mu = 0.075;
    } else {
        fail(ErrorKind::ParseError, "preset: unknown value '" + preset + "'");
    }
    for (const auto& [k, v] : overrides) detail::param_slot(p, k) = v;
    try {
        return validate_params(p);
    } catch (const Error& e) {
        fail(ErrorKind::InvalidParams, "params: " + e.message());
    }
}

inline ModelParams resolve_params(const ExperimentConfig& c) { return preset_params(c.preset, c.params); }

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.is_null()) return c;
    if (!j.is_object()) fail(ErrorKind::ParseError, "config: top level must be an object");
    static const std::set<std::string> top{"preset",  "params",      "solver",     "grid", "tolerance", "horizon",
                                           "homogenized", "simulation", "output", "seed"};
    for (const auto& [k, v] : j.items()) {
        if (!top.count(k)) fail(ErrorKind::ParseError, k + ": unknown key");
        if (k == "preset") {
            if (!v.is_string()) fail(ErrorKind::ParseError, "preset: expected a string");
            c.preset = v.get<std::string>();
            bool known = false;
            for (const auto& n : preset_names()) known = known || n == c.preset;
            if (!known) fail(ErrorKind::ParseError, "preset: unknown value '" + c.preset + "'");
        } else if (k == "params") {
            c.params = detail::read_numbers(v, "params", detail::param_keys());
        } else if (k == "solver") {
            if (!v.is_string()) fail(ErrorKind::ParseError, "solver: expected a string");
            c.solver = detail::parse_solver(v.get<std::string>());
        } else if (k == "grid") {
            c.grid = detail::read_numbers(v, "grid", detail::grid_keys());
        } else if (k == "tolerance") {
            c.tolerance = detail::read_numbers(v, "tolerance", detail::tolerance_keys());
        } else if (k == "horizon") {
            auto h = detail::read_numbers(v, "horizon", {"T"});
            if (h.count("T")) c.horizon_T = h["T"];
        } else if (k == "homogenized") {
            auto h = detail::read_numbers(v, "homogenized", {"L_bar", "eps"});
            if (h.count("L_bar")) c.L_bar = h["L_bar"];
            if (h.count("eps")) c.eps = h["eps"];
        } else if (k == "simulation") {
            c.simulation = detail::read_numbers(v, "simulation", detail::simulation_keys());
        } else if (k == "output") {
            if (!v.is_object()) fail(ErrorKind::ParseError, "output: expected an object");
            for (const auto& [ok, ov] : v.items()) {
                if (ok != "format" && ok != "path") fail(ErrorKind::ParseError, "output." + ok + ": unknown key");
                if (!ov.is_string()) fail(ErrorKind::ParseError, "output." + ok + ": expected a string");
                if (ok == "format") c.format = parse_format(ov.get<std::string>());
                else c.output_path = ov.get<std::string>();
            }
        } else if (k == "seed") {
            if (!v.is_number_unsigned()) fail(ErrorKind::ParseError, "seed: expected a nonnegative integer");
            c.seed = v.get<std::uint64_t>();
        }
    }
    resolve_params(c);
    if (c.horizon_T && !(*c.horizon_T > 0.0)) fail(ErrorKind::InvalidParams, "horizon.T: must be > 0");
    if (c.eps && !(*c.eps > 0.0)) fail(ErrorKind::InvalidParams, "homogenized.eps: must be > 0");
    return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["preset"] = c.preset;
    if (!c.params.empty()) j["params"] = c.params;
    if (c.solver) j["solver"] = to_string(*c.solver);
    if (!c.grid.empty()) j["grid"] = c.grid;
    if (!c.tolerance.empty()) j["tolerance"] = c.tolerance;
    if (c.horizon_T) j["horizon"]["T"] = *c.horizon_T;
    if (c.L_bar) j["homogenized"]["L_bar"] = *c.L_bar;
    if (c.eps) j["homogenized"]["eps"] = *c.eps;
    if (!c.simulation.empty()) j["simulation"] = c.simulation;
    if (c.format) j["output"]["format"] = to_string(*c.format);
    if (c.output_path) j["output"]["path"] = *c.output_path;
    if (c.seed) j["seed"] = *c.seed;
    return j;
}

inline ExperimentConfig parse_config(const std::string& text) {
    std::string trimmed = text;
    if (trimmed.find_first_not_of(" \t\r\n") == std::string::npos) return {};
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // Byte offset to line:column.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        fail(ErrorKind::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
    }
    return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::ParseError, "cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline std::string dump_config(const ExperimentConfig& c) { return config_to_json(c).dump(2) + "\n"; }

// Table-1 row: family label and parameter overrides on top of the base preset.
struct Table1Case {
    std::string family;
    std::string label;
    double gamma;
    std::map<std::string, double> overrides;
};

inline std::vector<Table1Case> table1_cases() {
    std::vector<Table1Case> rows;
    const std::vector<std::pair<std::string, double>> families{{"log", 0.0}, {"hyperbolic", -1.0}, {"sqrt", 0.5}};
    for (const auto& [fam, g] : families) {
        rows.push_back({fam, "base", g, {}});
        rows.push_back({fam, "lambda01=0.05", g, {{"lambda01", 0.05}}});
        rows.push_back({fam, "lambda01=0.02", g, {{"lambda01", 0.02}}});
        rows.push_back({fam, "lambda10=4", g, {{"lambda10", 4.0}}});
        rows.push_back({fam, "L=0.1", g, {{"L", 0.1}}});
        rows.push_back({fam, "lambda01=0.5,lambda10=10", g, {{"lambda01", 0.5}, {"lambda10", 10.0}}});
    }
    return rows;
}

// Row configs for the table1 preset; user overrides other than gamma are
// applied on top of every row.
inline std::vector<ExperimentConfig> table1_configs(const ExperimentConfig& base = {}) {
    std::vector<ExperimentConfig> out;
    for (const auto& row : table1_cases()) {
        ExperimentConfig c = base;
        c.preset = "table1";
        c.solver = SolverKind::Coupled;
        c.params = row.overrides;
        c.params["gamma"] = row.gamma;
        for (const auto& [k, v] : base.params)
            if (k != "gamma") c.params[k] = v;
        out.push_back(c);
    }
    return out;
}

}  // namespace liquidity
