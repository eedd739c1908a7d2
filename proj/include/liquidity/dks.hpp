#pragma once

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "liquidity/errors.hpp"
#include "liquidity/model.hpp"

namespace liquidity {

// Terminal-wealth problem with a proportional loss L on the stock position
// when the market is frozen at T. Requires α = r; values are J⁰ = log x + f⁰(t),
// J¹ = log x + f¹(t,π).
struct DksSolution {
    ModelParams params;
    double T = 0.0;
    double pi_star = 0.0;

    // Constant part of the liquid-regime drift,
    // r + (μ−r)π − ½σ²π² + (λ01/λ10)(r + λ10 log(1−πL)) at π = π*.
    double drift() const {
        const ModelParams& p = params;
        const double pi = pi_star;
        return p.r + (p.mu - p.r) * pi - 0.5 * p.sigma * p.sigma * pi * pi +
               p.lambda01 / p.lambda10 * (p.r + p.lambda10 * std::log1p(-pi * p.L));
    }

    double f0(double t) const {
        const ModelParams& p = params;
        const double tau = T - t;
        if (tau <= 0.0) return 0.0;
        const double lam = p.lambda01 + p.lambda10;
        const double Q = drift();
        const double e10 = std::exp(-p.lambda10 * tau);
        const double e = std::exp(-lam * tau);
        const double first = (Q * (-std::expm1(-lam * tau)) / lam - p.r / p.lambda10 * (e10 - e)) * p.lambda01 / lam;
        const double second =
            (p.lambda01 * p.r / (p.lambda10 * p.lambda10) * std::expm1(-p.lambda10 * tau) + Q * tau) * p.lambda10 / lam;
        return first + second;
    }

    // f¹(t,π) = ∫ₜᵀ (λ10 f⁰(s) + r + λ10 log(1−πL)) e^{−λ10(s−t)} ds + log(1−πL) e^{−λ10(T−t)}.
    double f1(double t, double pi) const {
        const ModelParams& p = params;
        const double tau = T - t;
        const double lg = std::log1p(-pi * p.L);
        if (tau <= 0.0) return lg;
        auto integrand = [&](double s) {
            return (p.lambda10 * f0(s) + p.r + p.lambda10 * lg) * std::exp(-p.lambda10 * (s - t));
        };
        return boost::math::quadrature::gauss<double, 30>::integrate(integrand, t, T) + lg * std::exp(-p.lambda10 * tau);
    }

    double f0_merton(double t) const {
        const double th = sharpe(params);
        return (params.r + 0.5 * th * th) * (T - t);
    }

    // Θ(t) = 1 − exp(f⁰ − f⁰_Merton): terminal log wealth has unit coefficient.
    double theta(double t) const { return -std::expm1(f0(t) - f0_merton(t)); }

    // First-order loss coefficient, Θ ≈ λ01 Θ1.
    double theta1(double t) const {
        const ModelParams& p = params;
        const double tau = T - t;
        const double th = sharpe(p);
        const double x = p.lambda10 * tau;
        const double poly = x < 1e-3 ? x * x * (0.5 - x / 6.0) : std::expm1(-x) + x;
        return th * th / (2.0 * p.lambda10 * p.lambda10) * poly -
               std::log1p(-(p.mu - p.r) * p.L / (p.sigma * p.sigma)) * tau;
    }
};

// Maximizer of (μ−r)π − ½σ²π² + λ01 log(1−πL) on [0,1].
inline double dks_pi_star(const ModelParams& p) {
    const double s2 = p.sigma * p.sigma;
    const double a = p.mu - p.r;
    double pi;
    if (p.L == 0.0 || p.lambda01 == 0.0) {
        pi = a / s2;
    } else {
        const double d = s2 - a * p.L;
        const double disc = d * d + 4.0 * s2 * p.L * p.L * p.lambda01;
        // Smaller root of σ²L π² − (σ² + (μ−r)L) π + (μ−r) − λ01L = 0, written to
        // avoid cancellation when λ01 is small.
        const double num = 2.0 * (a - p.lambda01 * p.L);
        pi = num / (s2 + a * p.L + std::sqrt(disc));
    }
    return std::clamp(pi, 0.0, 1.0);
}

inline DksSolution dks_solve(const ModelParams& params, double T) {
    const ModelParams p = validate_params(params);
    if (!(T > 0.0)) fail(ErrorKind::InvalidParams, "T must be > 0");
    if (p.alpha != p.r) fail(ErrorKind::DomainError, "dks_solve requires alpha = r");
    if (p.lambda10 <= 0.0) fail(ErrorKind::InvalidParams, "dks_solve requires lambda10 > 0");
    DksSolution s;
    s.params = p;
    s.T = T;
    s.pi_star = dks_pi_star(p);
    if (!(1.0 - s.pi_star * p.L > 0.0)) fail(ErrorKind::DomainError, "dks_solve: 1 - pi* L must be > 0");
    return s;
}

struct DksAsymptotics {
    // π*_DKS ≈ π̂ − λ01 pi1.
    double pi1 = 0.0;
    double pi_approx = 0.0;
    // π*_DKS − π*_log to first order, λ01(1−L)/(σ²(1−π̂L)²)·g^{λ10/ρ}/(1−g^{1+λ10/ρ}).
    double consumption_gap = 0.0;
    // Same quantity in the λ01(1−L)/(1−π̂L)²·g^{λ10/ρ}/(1−g^{λ10/ρ}) form.
    double consumption_gap_display = 0.0;
};

inline DksAsymptotics dks_asymptotics(const ModelParams& params) {
    const ModelParams p = validate_params(params);
    const double s2 = p.sigma * p.sigma;
    const double pih = (p.mu - p.r) / s2;
    if (!(pih > 0.0 && pih < 1.0)) fail(ErrorKind::WrongRegime, "DKS expansion needs 0 < (mu - r)/sigma^2 < 1");
    DksAsymptotics a;
    a.pi1 = p.L / (s2 - (p.mu - p.r) * p.L);
    a.pi_approx = pih - p.lambda01 * a.pi1;
    const double g = jump_map(pih, p.L);
    const double w = (1.0 - pih * p.L) * (1.0 - pih * p.L);
    const double gl = std::pow(g, p.lambda10 / p.rho);
    a.consumption_gap = p.lambda01 * (1.0 - p.L) / (s2 * w) * gl / (1.0 - gl * g);
    a.consumption_gap_display = p.lambda01 * (1.0 - p.L) / w * gl / (1.0 - gl);
    return a;
}

struct DksHomogenized {
    double lambda_bar = 1.0;
    double L_bar = 0.0;
    // (μ − r − λ01 L̄)/σ.
    double theta_tilde = 0.0;
    double pi_star = 0.0;
    double T = 0.0;
    double r = 0.0;
    double theta = 0.0;

    // Limit of f⁰: (T−t)(r + ½ λ̄ θ̃²).
    double f0(double t) const { return (T - t) * (r + 0.5 * lambda_bar * theta_tilde * theta_tilde); }
    double theta_loss(double t) const {
        return -std::expm1((T - t) * 0.5 * (lambda_bar * theta_tilde * theta_tilde - theta * theta));
    }
};

// Limit under generator Q/ε with jump size εL̄ as ε → 0.
inline DksHomogenized dks_homogenized(const ModelParams& params, double T, double L_bar) {
    const ModelParams p = validate_params(params);
    if (!(T > 0.0)) fail(ErrorKind::InvalidParams, "T must be > 0");
    if (p.alpha != p.r) fail(ErrorKind::DomainError, "DKS homogenization requires alpha = r");
    DksHomogenized h;
    h.lambda_bar = p.lambda10 / (p.lambda01 + p.lambda10);
    h.L_bar = L_bar;
    h.theta_tilde = (p.mu - p.r - p.lambda01 * L_bar) / p.sigma;
    h.pi_star = h.theta_tilde / p.sigma;
    h.T = T;
    h.r = p.r;
    h.theta = sharpe(p);
    return h;
}

}  // namespace liquidity
