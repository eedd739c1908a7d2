#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "liquidity/config.hpp"
#include "liquidity/coupled_hjb.hpp"
#include "liquidity/dks.hpp"
#include "liquidity/errors.hpp"
#include "liquidity/finite_horizon.hpp"
#include "liquidity/homogenized.hpp"
#include "liquidity/infinite_hara.hpp"
#include "liquidity/infinite_log.hpp"
#include "liquidity/model.hpp"
#include "liquidity/monte_carlo.hpp"

namespace liquidity {

// Columnar output. Cells are JSON scalars; CSV prints numbers with %.10g
// unless a display string is given for the column.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::json>> rows;

    void add(std::vector<nlohmann::json> row) {
        if (row.size() != columns.size()) fail(ErrorKind::DomainError, "table row width mismatch");
        rows.push_back(std::move(row));
    }
};

struct Report {
    std::string name;
    Table table;
    // Full-precision solver diagnostics (iterations, residuals, tolerances).
    nlohmann::json diagnostics = nlohmann::json::object();
};

inline std::string format_number(double v, int digits = 10) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

inline std::string format_fixed(double v, int decimals) {
    if (!std::isfinite(v)) return format_number(v);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string csv_cell(const nlohmann::json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        return q + "\"";
    }
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    return format_number(v.get<double>());
}

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
        os << "\n";
    }
}

inline nlohmann::json table_json(const Table& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json o = nlohmann::json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            const auto& v = row[i];
            // JSON has no NaN/inf; emit them as strings.
            if (v.is_number_float() && !std::isfinite(v.get<double>())) o[t.columns[i]] = format_number(v.get<double>());
            else o[t.columns[i]] = v;
        }
        rows.push_back(o);
    }
    return rows;
}

inline void write_json(std::ostream& os, const Report& r, const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["report"] = r.name;
    j["config"] = config_to_json(cfg);
    j["rows"] = table_json(r.table);
    j["diagnostics"] = r.diagnostics;
    os << j.dump(2) << "\n";
}

inline void write_report(std::ostream& os, const Report& r, const ExperimentConfig& cfg, OutputFormat f) {
    if (f == OutputFormat::Csv) write_csv(os, r.table);
    else write_json(os, r, cfg);
}

namespace detail {

inline double cfg_get(const std::map<std::string, double>& m, const std::string& k, double fallback) {
    auto it = m.find(k);
    return it == m.end() ? fallback : it->second;
}

inline int cfg_int(const std::map<std::string, double>& m, const std::string& k, int fallback, const std::string& path) {
    const double v = cfg_get(m, k, fallback);
    if (v != std::floor(v) || v < 0 || v > 1e9) fail(ErrorKind::InvalidParams, path + "." + k + ": expected an integer");
    return static_cast<int>(v);
}

}  // namespace detail

inline ProfileGrid profile_grid(const ExperimentConfig& c) {
    ProfileGrid g;
    g.points = detail::cfg_int(c.grid, "profile_points", g.points, "grid");
    g.z_min = detail::cfg_get(c.grid, "z_min", g.z_min);
    g.z_max = detail::cfg_get(c.grid, "z_max", g.z_max);
    if (g.points < 8 || !(g.z_min > 0.0) || !(g.z_max > g.z_min)) fail(ErrorKind::GridTooCoarse, "grid: invalid profile grid");
    return g;
}

inline CoupledOptions coupled_options(const ExperimentConfig& c) {
    CoupledOptions o;
    o.tol = detail::cfg_get(c.tolerance, "tol", o.tol);
    o.max_evaluations = detail::cfg_int(c.tolerance, "max_evaluations", o.max_evaluations, "tolerance");
    o.damping = detail::cfg_get(c.tolerance, "damping", o.damping);
    o.grid = profile_grid(c);
    if (!(o.tol > 0.0) || !(o.damping > 0.0 && o.damping <= 1.0) || o.max_evaluations < 1)
        fail(ErrorKind::InvalidParams, "tolerance: tol > 0, 0 < damping <= 1, max_evaluations >= 1 required");
    return o;
}

inline FiniteHorizonOptions finite_horizon_options(const ExperimentConfig& c) {
    FiniteHorizonOptions o;
    o.n_pi = detail::cfg_int(c.grid, "n_pi", o.n_pi, "grid");
    o.dt_max = detail::cfg_get(c.grid, "dt_max", o.dt_max);
    o.cfl = detail::cfg_get(c.grid, "cfl", o.cfl);
    o.n_t_out = detail::cfg_int(c.grid, "n_t_out", o.n_t_out, "grid");
    if (!(o.dt_max > 0.0) || !(o.cfl > 0.0 && o.cfl <= 1.0)) fail(ErrorKind::InvalidParams, "grid: dt_max > 0 and 0 < cfl <= 1 required");
    return o;
}

inline SimulationOptions simulation_options(const ExperimentConfig& c) {
    SimulationOptions o;
    o.n_paths = static_cast<long>(detail::cfg_int(c.simulation, "n_paths", static_cast<int>(o.n_paths), "simulation"));
    o.horizon = detail::cfg_get(c.simulation, "horizon", o.horizon);
    o.dt = detail::cfg_get(c.simulation, "dt", o.dt);
    o.antithetic = detail::cfg_get(c.simulation, "antithetic", 0.0) != 0.0;
    o.seed = c.seed.value_or(1);
    return o;
}

inline double config_horizon(const ExperimentConfig& c) { return c.horizon_T.value_or(2.0); }

// Loss convention each Table-1 family is reported in.
inline LossConvention table1_convention(double gamma) {
    return gamma == -1.0 ? LossConvention::Compensation : LossConvention::Reduction;
}

struct Table1Row {
    std::string family;
    std::string label;
    ModelParams params;
    LossConvention convention = LossConvention::Reduction;
    double pi_star = NAN;
    double pi_asymptotic = NAN;
    double theta_pct = NAN;
    double theta_asymptotic_pct = NAN;
    int iterations = 0;
    double residual = NAN;
    double seconds = 0.0;
    // Empty on success; the solver error otherwise.
    std::string error;
};

inline Table1Row table1_row(const Table1Case& tc, const ExperimentConfig& cfg) {
    Table1Row row;
    row.family = tc.family;
    row.label = tc.label;
    row.convention = table1_convention(tc.gamma);
    auto t0 = std::chrono::steady_clock::now();
    try {
        std::map<std::string, double> ov = tc.overrides;
        ov["gamma"] = tc.gamma;
        for (const auto& [k, v] : cfg.params)
            if (k != "gamma") ov[k] = v;
        row.params = preset_params("table1", ov);
        const ModelParams& p = row.params;
        CoupledSolution s = solve_coupled(p, coupled_options(cfg));
        row.pi_star = s.pi_star;
        row.theta_pct = 100.0 * s.theta(row.convention);
        row.iterations = s.iterations;
        row.residual = s.residual;
        if (p.is_log()) {
            LogAsymptotics a = asymptotic_log(p);
            row.pi_asymptotic = a.pi_approx;
            row.theta_asymptotic_pct = 100.0 * a.loss_approx;
        } else {
            HaraAsymptotics a = asymptotic_hara(p, profile_grid(cfg));
            row.pi_asymptotic = a.pi_approx;
            row.theta_asymptotic_pct = 100.0 * a.loss_approx(p, s.reference, row.convention);
        }
    } catch (const Error& e) {
        row.error = e.what();
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

inline std::vector<Table1Row> run_table1_rows(const ExperimentConfig& cfg = {}) {
    std::vector<Table1Row> rows;
    for (const auto& tc : table1_cases()) rows.push_back(table1_row(tc, cfg));
    return rows;
}

// Fractions with 3 decimals; losses with 2 (log, hyperbolic) or 3 (sqrt).
inline Report run_table1(const ExperimentConfig& cfg = {}) {
    Report r;
    r.name = "table1";
    r.table.columns = {"family", "case", "pi_star", "pi_asymptotic", "theta_pct", "theta_asymptotic_pct", "error"};
    nlohmann::json diag = nlohmann::json::array();
    for (const Table1Row& row : run_table1_rows(cfg)) {
        const int dec = row.family == "sqrt" ? 3 : 2;
        r.table.add({row.family, row.label, format_fixed(row.pi_star, 3), format_fixed(row.pi_asymptotic, 3),
                     format_fixed(row.theta_pct, dec), format_fixed(row.theta_asymptotic_pct, dec), row.error});
        diag.push_back({{"family", row.family},
                        {"case", row.label},
                        {"convention", to_string(row.convention)},
                        {"pi_star", row.pi_star},
                        {"pi_asymptotic", row.pi_asymptotic},
                        {"theta_pct", row.theta_pct},
                        {"theta_asymptotic_pct", row.theta_asymptotic_pct},
                        {"iterations", row.iterations},
                        {"hjb_residual", std::isfinite(row.residual) ? nlohmann::json(row.residual) : nlohmann::json()},
                        {"seconds", row.seconds},
                        {"error", row.error}});
    }
    r.diagnostics["rows"] = diag;
    r.diagnostics["tolerance"] = coupled_options(cfg).tol;
    return r;
}

inline Report run_solve_log(const ExperimentConfig& cfg) {
    const ModelParams p = resolve_params(cfg);
    if (!p.is_log()) fail(ErrorKind::DomainError, "solve-log requires gamma = 0");
    const LogSolution s = solve_log(p);
    Report r;
    r.name = "solve-log";
    r.table.columns = {"b", "pi_star", "h_hat", "pi_hat", "theta_pct", "pi_asymptotic", "theta_asymptotic_pct"};
    double pa = NAN, ta = NAN;
    try {
        const LogAsymptotics a = asymptotic_log(p);
        pa = a.pi_approx;
        ta = 100.0 * a.loss_approx;
    } catch (const Error& e) {
        r.diagnostics["asymptotics"] = e.what();
    }
    r.table.add({s.b, s.pi_star, s.h_hat, merton_log(p).pi_hat, 100.0 * efficiency_loss_log(s), pa, ta});
    r.diagnostics["zeta_star"] = s.zeta_star;
    r.diagnostics["c0_rate"] = s.c0_rate;
    return r;
}

inline Report run_solve_hara(const ExperimentConfig& cfg) {
    const ModelParams p = resolve_params(cfg);
    if (p.is_log()) fail(ErrorKind::DomainError, "solve-hara requires gamma != 0");
    if (p.alpha != p.r) fail(ErrorKind::UnsupportedModel, "solve-hara (uncoupled quadrature) requires alpha = r; use coupled");
    const ProfileGrid grid = profile_grid(cfg);
    const HaraSolution s = p.gamma == -1.0 ? solve_hyperbolic(p, false) : solve_hara_uncoupled(p, grid);
    Report r;
    r.name = "solve-hara";
    r.table.columns = {"b", "pi_star", "f_hat", "pi_hat", "theta_reduction_pct", "theta_compensation_pct", "eta",
                       "pi_asymptotic"};
    double pa = NAN;
    try {
        pa = asymptotic_hara(p, grid).pi_approx;
    } catch (const Error& e) {
        r.diagnostics["asymptotics"] = e.what();
    }
    r.table.add({s.b, s.pi_star, s.f_hat, s.pi_hat, 100.0 * s.theta(LossConvention::Reduction),
                 100.0 * s.theta(LossConvention::Compensation), s.eta, pa});
    r.diagnostics["c0_rate"] = s.c0_rate;
    r.diagnostics["anchor"] = s.anchor;
    return r;
}

inline Report run_coupled(const ExperimentConfig& cfg) {
    const ModelParams p = resolve_params(cfg);
    const CoupledOptions opt = coupled_options(cfg);
    const CoupledSolution s = solve_coupled(p, opt);
    Report r;
    r.name = "coupled";
    r.table.columns = {"v0_coeff", "pi_star", "reference", "theta_reduction_pct", "theta_compensation_pct",
                       "iterations", "hjb_residual"};
    r.table.add({s.v0_coeff, s.pi_star, s.reference, 100.0 * s.theta(LossConvention::Reduction),
                 100.0 * s.theta(LossConvention::Compensation), s.iterations, s.residual});
    r.diagnostics["fixed_point_residual"] = s.fp_residual;
    r.diagnostics["tolerance"] = opt.tol;
    r.diagnostics["trace"] = s.trace;
    return r;
}

inline Report run_homogenize(const ExperimentConfig& cfg) {
    const ModelParams p = resolve_params(cfg);
    const double L_bar = cfg.L_bar.value_or(0.0);
    const HomogenizedSolution h = homogenize(p, L_bar);
    Report r;
    r.name = "homogenize";
    r.table.columns = {"lambda_bar", "L_bar", "theta_hom", "pi_star", "pi_star_half", "B0", "theta_loss_pct",
                       "eps", "coupled_theta_pct", "relative_gap"};
    double eps = NAN, ct = NAN, gap = NAN;
    if (cfg.eps) {
        eps = *cfg.eps;
        const CoupledSolution s = solve_coupled(fast_switching(p, eps, L_bar), coupled_options(cfg));
        ct = 100.0 * s.theta(LossConvention::Reduction);
        gap = ct / (100.0 * h.theta_loss) - 1.0;
        r.diagnostics["coupled_iterations"] = s.iterations;
        r.diagnostics["coupled_residual"] = s.residual;
    }
    r.table.add({h.lambda_bar, h.L_bar, h.theta_hom, h.pi_star, h.pi_star_half, h.B0, 100.0 * h.theta_loss, eps, ct,
                 gap});
    r.diagnostics["is_gain"] = h.is_gain;
    r.diagnostics["avg_drift"] = h.avg_drift;
    r.diagnostics["avg_vol"] = h.avg_vol;
    return r;
}

// (t, π, Θ) surface on every output time and every fourth π node, with the
// liquid-regime path.
inline Report run_finite_horizon(const ExperimentConfig& cfg, int pi_stride = 4) {
    const ModelParams p = resolve_params(cfg);
    const double T = config_horizon(cfg);
    FiniteHorizonSolution s = solve_h1(p, T, finite_horizon_options(cfg));
    solve_h0(p, s);
    Report r;
    r.name = "finite-horizon";
    r.table.columns = {"t", "pi", "theta_pct", "h1", "h0", "h_hat", "pi_star_t"};
    for (std::size_t j = 0; j < s.t_grid.size(); ++j)
        for (std::size_t i = 0; i < s.pi_grid.size(); i += pi_stride)
            r.table.add({s.t_grid[j], s.pi_grid[i], 100.0 * s.loss_surface[j][i], s.h1[j][i], s.h0[j], s.h_hat[j],
                         s.pi_star_t[j]});
    r.diagnostics["T"] = T;
    r.diagnostics["steps"] = s.steps;
    r.diagnostics["floored_nodes"] = s.floored_nodes;
    r.diagnostics["dpi"] = s.dpi;
    return r;
}

inline Report run_dks(const ExperimentConfig& cfg, int n_t = 21) {
    const ModelParams p = resolve_params(cfg);
    const double T = config_horizon(cfg);
    const DksSolution s = dks_solve(p, T);
    const DksHomogenized h = dks_homogenized(p, T, cfg.L_bar.value_or(p.L));
    Report r;
    r.name = "dks";
    r.table.columns = {"t", "pi_star", "f0", "f0_merton", "theta_pct", "lambda01_theta1_pct", "theta_hom_pct"};
    for (double t : num::linspace(0.0, T, n_t))
        r.table.add({t, s.pi_star, s.f0(t), s.f0_merton(t), 100.0 * s.theta(t), 100.0 * p.lambda01 * s.theta1(t),
                     100.0 * h.theta_loss(t)});
    try {
        const DksAsymptotics a = dks_asymptotics(p);
        r.diagnostics["pi_asymptotic"] = a.pi_approx;
        r.diagnostics["consumption_gap"] = a.consumption_gap;
        r.diagnostics["consumption_gap_display"] = a.consumption_gap_display;
    } catch (const Error& e) {
        r.diagnostics["asymptotics"] = e.what();
    }
    r.diagnostics["pi_star_hom"] = h.pi_star;
    return r;
}

// Monte Carlo value of the optimal policy: the closed form for log utility
// with solver "closed-form", the coupled solution otherwise.
inline Report run_simulate(const ExperimentConfig& cfg) {
    const ModelParams p = resolve_params(cfg);
    const SimulationOptions opt = simulation_options(cfg);
    Policy pol;
    double reference;
    const bool closed = cfg.solver == SolverKind::ClosedForm;
    if (closed && p.is_log()) {
        const LogSolution s = solve_log(p);
        pol = policy_from_solution(s);
        reference = s.b;
    } else {
        const CoupledSolution s = solve_coupled(p, coupled_options(cfg));
        pol = policy_from_solution(s);
        reference = p.is_log() ? s.v0_coeff : s.v0_coeff / p.gamma;
    }
    const SimulationEstimate e = evaluate_policy(p, pol, opt);
    Report r;
    r.name = "simulate";
    r.table.columns = {"mean", "std_err", "reference", "z_score", "n_paths", "horizon", "dt", "seed", "tail_bound"};
    r.table.add({e.mean, e.std_err, reference, e.std_err > 0 ? (e.mean - reference) / e.std_err : NAN, e.n_paths,
                 e.horizon_used, e.dt, e.seed, e.tail_bound});
    // No timings here: equal seeds give byte-identical reports.
    r.diagnostics["min_wealth"] = e.min_wealth;
    r.diagnostics["switches"] = e.switches;
    r.diagnostics["antithetic"] = opt.antithetic;
    return r;
}

// Illiquid-regime consumption c/x on π ∈ [0, 0.999] for γ ∈ {0.5, 0, −0.5}.
inline Report figure1_data(const ExperimentConfig& cfg, int n = 1000) {
    Report r;
    r.name = "fig1";
    r.table.columns = {"gamma", "pi", "c_over_x"};
    for (double g : {0.5, 0.0, -0.5}) {
        std::map<std::string, double> ov = cfg.params;
        ov["gamma"] = g;
        const ModelParams p = preset_params("fig1", ov);
        const CoupledSolution s = solve_coupled(p, coupled_options(cfg));
        for (int i = 0; i < n; ++i) {
            const double pi = 0.999 * i / (n - 1);
            r.table.add({g, pi, s.v1.consumption(pi)});
        }
        r.diagnostics["pi_star"][format_number(g)] = s.pi_star;
    }
    return r;
}

inline Report figure2_data(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    c.preset = "fig2";
    Report r = run_finite_horizon(c);
    r.name = "fig2";
    return r;
}

struct FigureData {
    Report fig1;
    Report fig2;
};

inline FigureData emit_figure_data(const ExperimentConfig& cfg) { return {figure1_data(cfg), figure2_data(cfg)}; }

}  // namespace liquidity
