#pragma once

#include <cmath>

#include "liquidity/errors.hpp"
#include "liquidity/infinite_log.hpp"
#include "liquidity/model.hpp"

namespace liquidity {

struct HomogenizedSolution {
    double lambda_bar = 1.0;
    double L_bar = 0.0;
    double theta_hom = 0.0;
    // Merton fraction under the modified Sharpe ratio.
    double pi_star = 0.0;
    // θ_hom/(2σ) for log utility (the form quoted alongside B0); equal to
    // pi_star for power utility.
    double pi_star_half = 0.0;
    double B0 = 0.0;
    // Reduction-form loss; negative when the modified Sharpe ratio beats θ.
    double theta_loss = 0.0;
    bool is_gain = false;
    double avg_drift = 0.0;
    double avg_vol = 0.0;
};

// Generator Q/ε with jump size εL̄.
inline ModelParams fast_switching(const ModelParams& p, double eps, double L_bar) {
    if (!(eps > 0.0)) fail(ErrorKind::InvalidParams, "eps must be > 0");
    ModelParams q = p;
    q.lambda01 = p.lambda01 / eps;
    q.lambda10 = p.lambda10 / eps;
    q.L = eps * L_bar;
    return validate_params(q);
}

namespace detail {

inline HomogenizedSolution homogenized_common(const ModelParams& p, double L_bar) {
    HomogenizedSolution h;
    h.lambda_bar = p.lambda10 / (p.lambda01 + p.lambda10);
    h.L_bar = L_bar;
    h.avg_drift = p.alpha + (p.mu - p.alpha - p.lambda01 * L_bar) * h.lambda_bar;
    h.avg_vol = std::sqrt(h.lambda_bar) * p.sigma;
    return h;
}

}  // namespace detail

inline HomogenizedSolution homogenize_log(const ModelParams& params, double L_bar) {
    const ModelParams p = validate_params(params);
    HomogenizedSolution h = detail::homogenized_common(p, L_bar);
    const double theta = sharpe(p);
    h.theta_hom = (p.mu - p.r - p.lambda01 * L_bar + p.lambda01 / p.lambda10 * (p.alpha - p.r)) / p.sigma;
    h.pi_star = h.theta_hom / p.sigma;
    h.pi_star_half = h.theta_hom / (2.0 * p.sigma);
    h.B0 = log_constant(p) / p.rho + h.lambda_bar * h.theta_hom * h.theta_hom / (2.0 * p.rho * p.rho);
    h.theta_loss = -std::expm1((h.lambda_bar * h.theta_hom * h.theta_hom - theta * theta) / (2.0 * p.rho));
    h.is_gain = h.theta_loss < 0.0;
    return h;
}

inline HomogenizedSolution homogenize_hara(const ModelParams& params, double L_bar) {
    const ModelParams p = validate_params(params);
    if (p.is_log()) fail(ErrorKind::DomainError, "homogenize_hara requires gamma != 0");
    const double g = p.gamma;
    const MertonSolution m = require_finite(merton_hara(p));
    HomogenizedSolution h = detail::homogenized_common(p, L_bar);
    h.theta_hom = (p.mu - p.r - p.lambda01 * L_bar + p.lambda01 / (p.lambda10 * g) * (p.alpha - p.r)) / p.sigma;
    h.pi_star = h.theta_hom / ((1.0 - g) * p.sigma);
    h.pi_star_half = h.pi_star;
    const double delta_hom = p.rho - g * p.r - h.lambda_bar * h.theta_hom * h.theta_hom * g / (2.0 * (1.0 - g));
    if (!(delta_hom > 0.0)) fail(ErrorKind::InfiniteValue, "homogenized value is infinite (modified delta <= 0)");
    h.B0 = std::pow(1.0 - g, 1.0 - g) * std::pow(delta_hom, g - 1.0);
    h.theta_loss = 1.0 - std::pow(delta_hom / m.delta, (g - 1.0) / g);
    h.is_gain = h.theta_loss < 0.0;
    return h;
}

inline HomogenizedSolution homogenize(const ModelParams& p, double L_bar) {
    return p.is_log() ? homogenize_log(p, L_bar) : homogenize_hara(p, L_bar);
}

// ∂Θ_hom/∂λ10 for log utility.
inline double homogenized_log_dtheta_dlambda10(const ModelParams& params, double L_bar) {
    const ModelParams p = validate_params(params);
    const HomogenizedSolution h = homogenize_log(p, L_bar);
    const double s = p.lambda01 + p.lambda10;
    const double dlb = p.lambda01 / (s * s);
    const double dth = -(p.lambda01 / (p.lambda10 * p.lambda10)) * (p.alpha - p.r) / p.sigma;
    const double dE = (dlb * h.theta_hom * h.theta_hom + 2.0 * h.lambda_bar * h.theta_hom * dth) / (2.0 * p.rho);
    return -(1.0 - h.theta_loss) * dE;
}

}  // namespace liquidity
