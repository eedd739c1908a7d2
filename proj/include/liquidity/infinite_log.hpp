#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "liquidity/errors.hpp"
#include "liquidity/model.hpp"
#include "liquidity/numerics.hpp"
#include "liquidity/profile.hpp"

namespace liquidity {

// π within this distance of 1 is treated as the cash-crunch point.
inline constexpr double kCrunchClamp = 1e-12;

inline double crunch_exponent(const ModelParams& p) { return 1.0 + p.lambda10 / p.rho; }

inline double log_constant(const ModelParams& p) { return p.r / p.rho - 1.0 + std::log(p.rho); }

// Closed-form illiquid shape for α = r, given the liquid constant b.
inline double log_h(double pi, double b, const ModelParams& p) {
    if (pi >= 1.0 - kCrunchClamp) return -std::numeric_limits<double>::infinity();
    const double a = crunch_exponent(p);
    return (log_constant(p) + p.lambda10 * b + std::log(one_minus_pow(pi, a))) / (p.rho + p.lambda10);
}

inline double log_h_derivative(double pi, const ModelParams& p) {
    if (pi <= 0.0) return 0.0;
    if (pi >= 1.0 - kCrunchClamp) return -std::numeric_limits<double>::infinity();
    const double a = crunch_exponent(p);
    return -a * std::pow(pi, a - 1.0) / (one_minus_pow(pi, a) * (p.rho + p.lambda10));
}

inline double log_c1_rate(double pi, const ModelParams& p) { return p.rho * one_minus_pow(pi, crunch_exponent(p)); }

inline IlliquidProfile log_profile(const ModelParams& p, double b) {
    IlliquidProfile prof;
    prof.gamma = 0.0;
    prof.kind = "log-closed-form";
    prof.value = [p, b](double pi) { return log_h(pi, b, p); };
    prof.derivative = [p](double pi) { return log_h_derivative(pi, p); };
    prof.consumption = [p](double pi) { return log_c1_rate(pi, p); };
    return prof;
}

inline double zeta(double pi, const ModelParams& p) {
    if (!(pi >= 0.0 && pi <= 1.0)) fail(ErrorKind::DomainError, "zeta: pi outside [0,1]");
    const double g = jump_map(pi, p.L);
    double v = ((p.mu - p.r) * pi - 0.5 * pi * pi * p.sigma * p.sigma) / p.rho;
    if (p.lambda01 == 0.0) return v;
    if (g >= 1.0 - kCrunchClamp) return -std::numeric_limits<double>::infinity();
    v += p.lambda01 / (p.rho + p.lambda10) * std::log(one_minus_pow(g, crunch_exponent(p)));
    v += p.lambda01 / p.rho * std::log1p(-pi * p.L);
    return v;
}

inline double zeta_derivative(double pi, const ModelParams& p) {
    double d = (p.mu - p.r - p.sigma * p.sigma * pi) / p.rho;
    if (p.lambda01 == 0.0) return d;
    const double g = jump_map(pi, p.L);
    if (g >= 1.0 - kCrunchClamp) return -std::numeric_limits<double>::infinity();
    const double a = crunch_exponent(p);
    double hp = (g > 0.0) ? a * std::pow(g, a - 1.0) / one_minus_pow(g, a) : 0.0;
    d -= p.lambda01 / (p.rho + p.lambda10) * hp * jump_map_derivative(pi, p.L);
    d -= p.lambda01 * p.L / (p.rho * (1.0 - pi * p.L));
    return d;
}

struct LogSolution {
    ModelParams params;
    double b = 0.0;
    double pi_star = 0.0;
    double zeta_star = 0.0;
    double c0_rate = 0.0;
    double h_hat = 0.0;

    double h(double pi) const { return log_h(pi, b, params); }
    double c1_rate(double pi) const { return log_c1_rate(pi, params); }
    IlliquidProfile profile() const { return log_profile(params, b); }
};

// Maximiser of ζ on [0,1]: root of the first-order condition, which is
// decreasing (ζ is concave).
inline double argmax_zeta(const ModelParams& p) {
    auto d = [&p](double x) { return zeta_derivative(x, p); };
    if (d(0.0) <= 0.0) return 0.0;
    double hi = 1.0;
    if (p.lambda01 == 0.0) {
        if (d(1.0) >= 0.0) return 1.0;
    } else {
        hi = 1.0 - 1e-3;
        while (d(hi) > 0.0 && hi < 1.0 - 1e-15) hi = 1.0 - (1.0 - hi) * 1e-2;
        if (d(hi) > 0.0) return hi;
    }
    return num::bisect(d, 0.0, hi, 1e-15);
}

inline LogSolution solve_log(const ModelParams& params) {
    const ModelParams p = validate_params(params);
    if (!p.is_log()) fail(ErrorKind::DomainError, "solve_log requires gamma = 0");
    if (p.alpha != p.r) fail(ErrorKind::UnsupportedModel, "log closed form requires alpha = r; use the coupled solver");
    LogSolution s;
    s.params = p;
    s.pi_star = argmax_zeta(p);
    s.zeta_star = zeta(s.pi_star, p);
    s.b = log_constant(p) / p.rho + s.zeta_star * (p.rho + p.lambda10) / (p.rho * (p.rho + p.lambda01 + p.lambda10));
    s.c0_rate = p.rho;
    s.h_hat = merton_log(p).value_coeff;
    return s;
}

inline double efficiency_loss_log(const LogSolution& sol, LossConvention c = LossConvention::Reduction) {
    return efficiency_loss(sol.b, sol.h_hat, sol.params, c);
}

enum class ExpansionRegime { Interior, LargeSharpe, Homogenized };

inline const char* to_string(ExpansionRegime r) {
    switch (r) {
        case ExpansionRegime::Interior: return "interior";
        case ExpansionRegime::LargeSharpe: return "large_sharpe";
        case ExpansionRegime::Homogenized: return "homogenized";
    }
    return "unknown";
}

struct LogAsymptotics {
    ExpansionRegime regime = ExpansionRegime::Interior;
    // Interior: π* ≈ π̂ − λ01 π1, b ≈ ĥ + λ01 b1, Θ ≈ λ01 Θ1 with Θ1 = −ρ b1.
    double pi1 = 0.0;
    double b1 = 0.0;
    double theta1 = 0.0;
    // θ²/(2λ10) − log(1−π̂L)/ρ, the ρ ≪ λ10 simplification of Θ1.
    double theta1_simplified = 0.0;
    double pi_approx = 0.0;
    // Loss implied by the expanded value b = ĥ + λ01 b1 (reduction form).
    double loss_approx = 0.0;
    // Large-Sharpe regime: 1 − π* ≈ λ01·one_minus_pi_coeff; V⁰ constant ≈
    // value_leading + loglog_coeff·λ01 log λ01.
    double one_minus_pi_coeff = 0.0;
    double value_leading = 0.0;
    double loglog_coeff = 0.0;
};

inline LogAsymptotics asymptotic_log(const ModelParams& params) {
    const ModelParams p = validate_params(params);
    const MertonSolution m = merton_log(p);
    if (!(m.pi_hat < 1.0)) fail(ErrorKind::WrongRegime, "interior log asymptotics need pi_hat < 1");
    const double a = crunch_exponent(p);
    const double pih = m.pi_hat;
    const double g = jump_map(pih, p.L);
    const double s2 = p.sigma * p.sigma;
    LogAsymptotics out;
    out.regime = ExpansionRegime::Interior;
    double ratio = (g > 0.0) ? std::pow(g, p.lambda10 / p.rho) / one_minus_pow(g, a) : 0.0;
    out.pi1 = (p.L / (1.0 - pih * p.L) + (1.0 - p.L) / ((1.0 - pih * p.L) * (1.0 - pih * p.L)) * ratio) / s2;
    const double hh = m.value_coeff;
    out.b1 = ((log_constant(p) + p.lambda10 * hh) / (p.rho + p.lambda10) - hh + std::log1p(-pih * p.L) / p.rho +
              std::log(one_minus_pow(g, a)) / (p.rho + p.lambda10)) /
             p.rho;
    out.theta1 = -p.rho * out.b1;
    out.theta1_simplified = m.theta * m.theta / (2.0 * p.lambda10) - std::log1p(-pih * p.L) / p.rho;
    out.pi_approx = pih - p.lambda01 * out.pi1;
    out.loss_approx = -std::expm1(p.rho * p.lambda01 * out.b1);
    return out;
}

inline LogAsymptotics large_sharpe_log(const ModelParams& params) {
    const ModelParams p = validate_params(params);
    const MertonSolution m = merton_log(p);
    const double s2 = p.sigma * p.sigma;
    if (!(m.pi_hat >= 1.0) || !(p.mu - p.r > s2))
        fail(ErrorKind::WrongRegime, "large-Sharpe log asymptotics need pi_hat >= 1 and mu - r > sigma^2");
    LogAsymptotics out;
    out.regime = ExpansionRegime::LargeSharpe;
    out.one_minus_pi_coeff = p.rho / ((p.mu - p.r - s2) * (p.rho + p.lambda10));
    out.pi_approx = 1.0 - p.lambda01 * out.one_minus_pi_coeff;
    out.value_leading = log_constant(p) / p.rho + (p.mu - p.r - 0.5 * s2) / (p.rho * p.rho);
    out.loglog_coeff = 1.0 / (p.rho * (p.rho + p.lambda10));
    return out;
}

// Frozen-regime stock fraction under the optimal log consumption rule,
// dΠ = ρΠ(1 − Π^a)dt, integrated in closed form through Π^{-a} − 1.
inline std::vector<double> illiquid_fraction_path(double pi0, const ModelParams& p, const std::vector<double>& t_grid) {
    if (!(pi0 >= 0.0 && pi0 <= 1.0)) fail(ErrorKind::DomainError, "illiquid_fraction_path: pi0 outside [0,1]");
    if (p.alpha != p.r) fail(ErrorKind::UnsupportedModel, "illiquid_fraction_path closed form requires alpha = r");
    std::vector<double> out(t_grid.size());
    const double a = crunch_exponent(p);
    if (pi0 == 0.0 || pi0 == 1.0) {
        std::fill(out.begin(), out.end(), pi0);
        return out;
    }
    // log(π0^{-a} − 1)
    const double l0 = std::log(std::expm1(-a * std::log(pi0)));
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        double x = l0 - a * p.rho * t_grid[i];
        double softplus = (x > 0.0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
        out[i] = std::exp(-softplus / a);
    }
    return out;
}

}  // namespace liquidity
