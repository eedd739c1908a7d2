#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "liquidity/errors.hpp"

namespace liquidity {

// Market and preference constants. gamma == 0 denotes log utility.
struct ModelParams {
    double mu = 0.075;
    double sigma = 1.0 / 6.0;
    double r = 0.05;
    double alpha = 0.05;
    double rho = 0.05;
    double gamma = 0.0;
    double lambda01 = 0.1;
    double lambda10 = 2.0;
    double L = 0.0;

    bool is_log() const { return gamma == 0.0; }
    bool operator==(const ModelParams&) const = default;
};

inline ModelParams validate_params(const ModelParams& p) {
    auto bad = [](const std::string& what) { fail(ErrorKind::InvalidParams, what); };
    if (!std::isfinite(p.mu) || !std::isfinite(p.r) || !std::isfinite(p.alpha)) bad("mu, r, alpha must be finite");
    if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) bad("sigma must be > 0");
    if (!(p.rho > 0.0) || !std::isfinite(p.rho)) bad("rho must be > 0");
    if (!(p.lambda01 >= 0.0) || !std::isfinite(p.lambda01)) bad("lambda01 must be >= 0");
    if (!(p.lambda10 > 0.0) || !std::isfinite(p.lambda10)) bad("lambda10 must be > 0");
    if (!(p.L >= 0.0 && p.L < 1.0)) bad("L must satisfy 0 <= L < 1");
    if (!(p.gamma < 1.0) || !std::isfinite(p.gamma)) bad("gamma must be < 1");
    if (!(p.alpha <= p.r)) bad("alpha must be <= r");
    return p;
}

// Post-shock stock fraction after the jump of size L.
inline double jump_map(double pi, double L) {
    if (!(pi >= 0.0 && pi <= 1.0)) fail(ErrorKind::DomainError, "jump_map: pi outside [0,1]");
    return pi * (1.0 - L) / (1.0 - pi * L);
}

inline double jump_map_derivative(double pi, double L) {
    double d = 1.0 - pi * L;
    return (1.0 - L) / (d * d);
}

// 1 - pi^a evaluated without cancellation near pi = 1.
inline double one_minus_pow(double pi, double a) {
    if (pi <= 0.0) return 1.0;
    if (pi >= 1.0) return 0.0;
    return -std::expm1(a * std::log(pi));
}

struct MertonSolution {
    double pi_hat = 0.0;
    double c_rate = 0.0;
    double theta = 0.0;
    double delta = 0.0;
    // h-hat for log utility, f-hat for power utility.
    double value_coeff = 0.0;
    bool finite = true;
};

inline double sharpe(const ModelParams& p) { return (p.mu - p.r) / p.sigma; }

inline MertonSolution merton_log(const ModelParams& p) {
    MertonSolution m;
    m.theta = sharpe(p);
    m.pi_hat = m.theta / p.sigma;
    m.c_rate = p.rho;
    m.delta = p.rho;
    m.value_coeff = (p.r / p.rho - 1.0 + std::log(p.rho)) / p.rho + m.theta * m.theta / (2.0 * p.rho * p.rho);
    return m;
}

inline MertonSolution merton_hara(const ModelParams& p) {
    if (p.gamma == 0.0) fail(ErrorKind::DomainError, "merton_hara requires gamma != 0");
    const double g = p.gamma;
    MertonSolution m;
    m.theta = sharpe(p);
    m.pi_hat = (p.mu - p.r) / ((1.0 - g) * p.sigma * p.sigma);
    m.delta = p.rho - g * p.r - m.theta * m.theta * g / (2.0 * (1.0 - g));
    m.c_rate = m.delta / (1.0 - g);
    m.finite = !(g > 0.0 && m.delta <= 0.0);
    m.value_coeff = m.finite ? std::pow((1.0 - g) / m.delta, 1.0 - g) : std::numeric_limits<double>::infinity();
    return m;
}

inline MertonSolution merton(const ModelParams& p) { return p.is_log() ? merton_log(p) : merton_hara(p); }

inline MertonSolution require_finite(const MertonSolution& m) {
    if (!m.finite) fail(ErrorKind::InfiniteValue, "Merton value is infinite (gamma > 0 and delta <= 0)");
    return m;
}

// Efficiency-loss conventions. Reduction: the Merton investor gives up the
// fraction Θ of wealth, V̂((1-Θ)x) = V⁰(x). Compensation: the frozen-market
// investor needs (1+Θ)x to match the Merton value, V⁰((1+Θ)x) = V̂(x).
enum class LossConvention { Reduction, Compensation };

inline const char* to_string(LossConvention c) {
    return c == LossConvention::Reduction ? "reduction" : "compensation";
}

// b and reference are value coefficients (utility-units constants for log,
// multipliers of x^γ/γ otherwise).
inline double efficiency_loss(double b, double reference, const ModelParams& p, LossConvention c) {
    if (p.is_log()) {
        double d = p.rho * (b - reference);
        return c == LossConvention::Reduction ? -std::expm1(d) : std::expm1(-d);
    }
    if (c == LossConvention::Reduction) return 1.0 - std::pow(b / reference, 1.0 / p.gamma);
    return std::pow(reference / b, 1.0 / p.gamma) - 1.0;
}

// Base preset: sigma = 1/6, r = rho = alpha = 0.05, L = 0, lambda01 = 0.1,
// lambda10 = 2, drift chosen so that the Merton fraction equals pi_hat.
inline ModelParams base_params(double gamma, double pi_hat = 0.9) {
    ModelParams p;
    p.gamma = gamma;
    p.sigma = 1.0 / 6.0;
    p.r = p.rho = p.alpha = 0.05;
    p.mu = p.r + pi_hat * p.sigma * p.sigma * (1.0 - gamma);
    return p;
}

}  // namespace liquidity
