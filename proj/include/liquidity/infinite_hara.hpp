#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>

#include "liquidity/errors.hpp"
#include "liquidity/infinite_log.hpp"
#include "liquidity/model.hpp"
#include "liquidity/numerics.hpp"
#include "liquidity/phi_profile.hpp"
#include "liquidity/profile.hpp"

namespace liquidity {

// Post-freeze value multiplier seen from the liquid regime, ξ(π) = f(g(π))(1−πL)^γ.
inline double xi_value(const IlliquidProfile& prof, double pi, const ModelParams& p) {
    const double g = jump_map(pi, p.L);
    return prof.value(g) * std::pow(1.0 - pi * p.L, p.gamma);
}

inline double xi_derivative(const IlliquidProfile& prof, double pi, const ModelParams& p) {
    const double g = jump_map(pi, p.L);
    const double w = 1.0 - pi * p.L;
    return prof.derivative(g) * jump_map_derivative(pi, p.L) * std::pow(w, p.gamma) -
           p.gamma * p.L * prof.value(g) * std::pow(w, p.gamma - 1.0);
}

struct LiquidRoot {
    double b;
    double pi_star;
};

// Liquid-regime equation for power utility, divided by γ:
//   J(b) = ((−ρ+γr−λ01)/γ) b + ((1−γ)/γ) b^{γ/(γ−1)} + sup_π { b m(π) + λ01 ξ(π)/γ },
//   m(π) = (μ−r)π − ½(1−γ)σ²π², π ∈ [0,1].
class LiquidHaraEquation {
public:
    LiquidHaraEquation(const ModelParams& p, IlliquidProfile prof) : p_(p), prof_(std::move(prof)) {}

    num::Argmax inner(double b) const {
        const double g = p_.gamma;
        const double s2 = p_.sigma * p_.sigma;
        auto obj = [&](double pi) {
            double m = (p_.mu - p_.r) * pi - 0.5 * (1.0 - g) * s2 * pi * pi;
            if (p_.lambda01 == 0.0) return b * m;
            double x = xi_value(prof_, pi, p_);
            if (!std::isfinite(x)) return -std::numeric_limits<double>::infinity();
            return b * m + p_.lambda01 * x / g;
        };
        auto dobj = [&](double pi) {
            double dm = (p_.mu - p_.r) - (1.0 - g) * s2 * pi;
            if (p_.lambda01 == 0.0) return b * dm;
            double dx = xi_derivative(prof_, pi, p_);
            if (!std::isfinite(dx)) return -std::numeric_limits<double>::infinity();
            return b * dm + p_.lambda01 * dx / g;
        };
        return num::argmax_scan(obj, dobj, 0.0, 1.0, 64, 1e-13);
    }

    double operator()(double b) const {
        const double g = p_.gamma;
        return ((-p_.rho + g * p_.r - p_.lambda01) / g) * b + ((1.0 - g) / g) * std::pow(b, g / (g - 1.0)) +
               inner(b).value;
    }

    LiquidRoot solve(double guess) const {
        auto J = *this;
        double lo = guess, hi = guess;
        const double s = J(guess);
        if (s == 0.0) return {guess, inner(guess).x};
        bool found = false;
        for (int i = 1; i <= 200 && !found; ++i) {
            double up = guess * std::pow(1.25, i), dn = guess / std::pow(1.25, i);
            if (std::signbit(J(up)) != std::signbit(s)) {
                lo = up / 1.25;
                hi = up;
                found = true;
            } else if (std::signbit(J(dn)) != std::signbit(s)) {
                lo = dn;
                hi = dn * 1.25;
                found = true;
            }
        }
        if (!found) fail(ErrorKind::NoConvergence, "liquid HARA equation: no bracket for b");
        double b = num::bisect(J, lo, hi, 1e-14 * std::abs(guess));
        return {b, inner(b).x};
    }

    const IlliquidProfile& profile() const { return prof_; }

private:
    ModelParams p_;
    IlliquidProfile prof_;
};

struct HaraSolution {
    ModelParams params;
    double b = 0.0;
    double pi_star = 0.0;
    double f_hat = 0.0;
    double pi_hat = 0.0;
    double c0_rate = 0.0;
    // Closed-form constant η(γ) for γ ∈ {−1, ½, −½}; NaN otherwise.
    double eta = std::numeric_limits<double>::quiet_NaN();
    std::optional<AbelRoots> abel;
    // Anchor of the illiquid profile: f̂ when uncoupled, b itself when coupled.
    double anchor = 0.0;
    bool coupled = false;
    int iterations = 1;
    IlliquidProfile profile;
    std::shared_ptr<const PhiProfile> phi;

    double theta(LossConvention c = LossConvention::Reduction) const { return efficiency_loss(b, f_hat, params, c); }
    double xi(double pi) const { return xi_value(profile, pi, params); }
    double c1_rate(double pi) const { return profile.consumption(pi); }
};

inline double closed_form_eta(const ModelParams& p, double anchor) {
    if (p.gamma == -1.0) return HyperbolicForm::from_anchor(p, anchor).eta;
    if (p.gamma == 0.5) {
        const double k = p.rho - 0.5 * p.r + p.lambda10;
        const double C = p.lambda10 * anchor;
        return std::sqrt(2.0 * k + C * C);
    }
    if (p.gamma == -0.5) return abel_roots(p, anchor).eta;
    return std::numeric_limits<double>::quiet_NaN();
}

inline HaraSolution finish_hara(const ModelParams& p, IlliquidProfile prof, double anchor, double guess) {
    const MertonSolution m = require_finite(merton_hara(p));
    LiquidHaraEquation eq(p, prof);
    LiquidRoot root = eq.solve(guess);
    HaraSolution s;
    s.params = p;
    s.b = root.b;
    s.pi_star = root.pi_star;
    s.f_hat = m.value_coeff;
    s.pi_hat = m.pi_hat;
    s.c0_rate = std::pow(root.b, 1.0 / (p.gamma - 1.0));
    s.anchor = anchor;
    s.profile = std::move(prof);
    s.eta = closed_form_eta(p, anchor);
    if (p.gamma == -0.5) {
        try {
            s.abel = abel_roots(p, anchor);
        } catch (const Error&) {
            s.abel.reset();
        }
    }
    return s;
}

// Liquid solve against a given frozen-regime profile.
inline HaraSolution solve_liquid_hara(const ModelParams& params, const PhiProfile& phi) {
    const ModelParams p = validate_params(params);
    auto shared = std::make_shared<const PhiProfile>(phi);
    const double anchor = phi.C() / p.lambda10;
    HaraSolution s = finish_hara(p, phi.as_profile(), anchor, require_finite(merton_hara(p)).value_coeff);
    s.phi = shared;
    return s;
}

// Uncoupled system: frozen-regime profile anchored at f̂.
inline HaraSolution solve_hara_uncoupled(const ModelParams& params, const ProfileGrid& grid = {}) {
    const ModelParams p = validate_params(params);
    if (p.is_log()) fail(ErrorKind::DomainError, "solve_hara_uncoupled requires gamma != 0");
    return solve_liquid_hara(p, solve_phi_generic(p, grid));
}

// γ = −1 with the closed-form profile; coupled mode iterates B ↔ η(B).
inline HaraSolution solve_hyperbolic(const ModelParams& params, bool coupled = true, double tol = 1e-10) {
    const ModelParams p = validate_params(params);
    if (p.gamma != -1.0) fail(ErrorKind::DomainError, "solve_hyperbolic requires gamma = -1");
    const double fh = require_finite(merton_hara(p)).value_coeff;
    if (!coupled) return finish_hara(p, closed_form_hyperbolic(p, fh).as_profile(), fh, fh);
    auto map = [&](double B) {
        return LiquidHaraEquation(p, closed_form_hyperbolic(p, B).as_profile()).solve(B).b;
    };
    num::FixedPointResult fp = num::fixed_point(map, fh, tol, 500);
    if (!fp.converged) fail(ErrorKind::NoConvergence, "hyperbolic B <-> eta iteration did not converge");
    HaraSolution s = finish_hara(p, closed_form_hyperbolic(p, fp.x).as_profile(), fp.x, fp.x);
    s.coupled = true;
    s.iterations = fp.evaluations;
    return s;
}

struct HaraAsymptotics {
    ExpansionRegime regime = ExpansionRegime::Interior;
    double b1 = 0.0;
    // π* ≈ π̂ + λ01 π1 with the numerator −((μ−r)b1 − ξ'(π̂)).
    double pi1 = 0.0;
    // Same order with b1 cancelled: π1 = ξ'(π̂)/(γ(1−γ)σ² f̂).
    double pi1_consistent = 0.0;
    double theta1 = 0.0;
    double xi_hat = 0.0;
    double dxi_hat = 0.0;
    double pi_approx = 0.0;
    // Large-Sharpe regime: 1 − π* ≈ √λ01·coeff, with the liquid value at f̂
    // (one_minus_pi_coeff) or at the π ≡ 1 Merton value B1.
    double one_minus_pi_coeff = 0.0;
    double one_minus_pi_coeff_b1 = 0.0;
    double b1_constrained = 0.0;

    // Loss implied by b = f̂ + λ01 b1.
    double loss_approx(const ModelParams& p, double f_hat, LossConvention c) const {
        return efficiency_loss(f_hat + p.lambda01 * b1, f_hat, p, c);
    }
};

inline HaraAsymptotics asymptotic_hara(const ModelParams& params, const ProfileGrid& grid = {}) {
    const ModelParams p = validate_params(params);
    if (p.is_log()) fail(ErrorKind::DomainError, "asymptotic_hara requires gamma != 0");
    const MertonSolution m = require_finite(merton_hara(p));
    if (!(m.pi_hat < 1.0)) fail(ErrorKind::WrongRegime, "interior HARA asymptotics need pi_hat < 1");
    const double g = p.gamma;
    const double s2 = p.sigma * p.sigma;
    const IlliquidProfile prof = solve_phi_generic(p, grid).as_profile();
    HaraAsymptotics a;
    a.xi_hat = xi_value(prof, m.pi_hat, p);
    a.dxi_hat = xi_derivative(prof, m.pi_hat, p);
    a.b1 = (a.xi_hat - m.value_coeff) * (1.0 - g) / m.delta;
    a.pi1 = -((p.mu - p.r) * a.b1 - a.dxi_hat) / (g * (1.0 - g) * s2 * m.value_coeff);
    a.pi1_consistent = a.dxi_hat / (g * (1.0 - g) * s2 * m.value_coeff);
    a.theta1 = -a.b1 / (g * m.value_coeff);
    a.pi_approx = m.pi_hat + p.lambda01 * a.pi1;
    return a;
}

inline HaraAsymptotics large_sharpe_hyperbolic(const ModelParams& params) {
    const ModelParams p = validate_params(params);
    if (p.gamma != -1.0) fail(ErrorKind::DomainError, "large_sharpe_hyperbolic requires gamma = -1");
    const MertonSolution m = require_finite(merton_hara(p));
    const double s2 = p.sigma * p.sigma;
    const double excess = p.mu - p.r - 2.0 * s2;
    if (!(m.pi_hat > 1.0) || !(excess > 0.0))
        fail(ErrorKind::WrongRegime, "large-Sharpe hyperbolic asymptotics need pi_hat > 1 and mu - r > 2 sigma^2");
    const double beta = p.rho + p.r + p.lambda10;
    HaraAsymptotics a;
    a.regime = ExpansionRegime::LargeSharpe;
    a.one_minus_pi_coeff = 2.0 / (beta * std::sqrt(m.value_coeff * excess));
    const double root = 2.0 / (p.rho + p.mu - s2);
    a.b1_constrained = root * root;
    a.one_minus_pi_coeff_b1 = 2.0 / (beta * std::sqrt(a.b1_constrained * excess));
    a.pi_approx = 1.0 - std::sqrt(p.lambda01) * a.one_minus_pi_coeff;
    return a;
}

}  // namespace liquidity
