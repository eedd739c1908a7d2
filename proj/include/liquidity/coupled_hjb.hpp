#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "liquidity/errors.hpp"
#include "liquidity/infinite_hara.hpp"
#include "liquidity/infinite_log.hpp"
#include "liquidity/model.hpp"
#include "liquidity/numerics.hpp"
#include "liquidity/phi_profile.hpp"
#include "liquidity/profile.hpp"

namespace liquidity {

// Liquid-regime equation for log utility against an arbitrary frozen-regime
// profile h: (ρ+λ01) b = r/ρ − 1 + log ρ + sup_π Ψ(π),
//   Ψ(π) = ((μ−r)π − σ²π²/2)/ρ + λ01 (h(g(π)) + log(1−πL)/ρ).
inline LiquidRoot solve_liquid_log(const ModelParams& p, const IlliquidProfile& prof) {
    const double s2 = p.sigma * p.sigma;
    auto psi = [&](double pi) {
        double v = ((p.mu - p.r) * pi - 0.5 * s2 * pi * pi) / p.rho;
        if (p.lambda01 == 0.0) return v;
        double h = prof.value(jump_map(pi, p.L));
        if (!std::isfinite(h)) return -std::numeric_limits<double>::infinity();
        return v + p.lambda01 * (h + std::log1p(-pi * p.L) / p.rho);
    };
    auto dpsi = [&](double pi) {
        double d = (p.mu - p.r - s2 * pi) / p.rho;
        if (p.lambda01 == 0.0) return d;
        double hp = prof.derivative(jump_map(pi, p.L));
        if (!std::isfinite(hp)) return -std::numeric_limits<double>::infinity();
        return d + p.lambda01 * (hp * jump_map_derivative(pi, p.L) - p.L / (p.rho * (1.0 - pi * p.L)));
    };
    num::Argmax best = num::argmax_scan(psi, dpsi, 0.0, 1.0, 64, 1e-14);
    return {(log_constant(p) + best.value) / (p.rho + p.lambda01), best.x};
}

// Frozen-regime profile for α ≠ r (also valid for α = r), obtained by marching
// the first-order ODE in s = log z, z = −log π, away from the cash crunch.
// State: w = f^{1/γ} for γ < 0 (≈ linear in z at the crunch), f for γ > 0,
// h for log utility. The control κ = c/x solves a monotone scalar equation
// on κ > max(0, (r−α)(1−π)).
class MarchedProfile {
public:
    static constexpr double kZStart = 1e-12;
    static constexpr double kStepS = 5e-3;

    static MarchedProfile build(const ModelParams& params, double anchor) {
        MarchedProfile m;
        m.p_ = validate_params(params);
        m.anchor_ = anchor;
        m.march();
        return m;
    }

    double gamma() const { return p_.gamma; }

    // Value coefficient f (or h) and its π-derivative.
    double value(double pi) const {
        if (pi <= 0.0) return f_inf_;
        if (pi >= 1.0) return crunch_value();
        return value_from_state(state_at(std::log(-std::log(pi))));
    }

    double derivative(double pi) const {
        if (pi <= 0.0) return 0.0;
        if (pi >= 1.0) return p_.gamma > 0.0 ? -std::numeric_limits<double>::infinity()
                                             : std::numeric_limits<double>::infinity();
        const double z = -std::log(pi);
        const double fz = f_z(pi, value_from_state(state_at(std::log(z))));
        return -fz / pi;
    }

    double consumption(double pi) const {
        if (pi >= 1.0) return 0.0;
        const double q = std::max(pi, 0.0);
        return kappa(q, pi <= 0.0 ? f_inf_ : value(pi));
    }

    double boundary_value() const { return f_inf_; }

    IlliquidProfile as_profile() const {
        auto self = std::make_shared<MarchedProfile>(*this);
        IlliquidProfile out;
        out.gamma = p_.gamma;
        out.kind = "marched";
        out.value = [self](double pi) { return self->value(pi); };
        out.derivative = [self](double pi) { return self->derivative(pi); };
        out.consumption = [self](double pi) { return self->consumption(pi); };
        return out;
    }

    // Scalar control equation G(κ; π, f) = 0.
    double G(double kap, double pi, double f) const {
        const double g = p_.gamma, d = p_.alpha - p_.r;
        if (g == 0.0) {
            double v = -(p_.rho + p_.lambda10) * f + (p_.r + d * pi) / p_.rho - 1.0 + p_.lambda10 * anchor_ +
                       std::log(kap);
            if (d != 0.0) v -= d * (1.0 - pi) * (1.0 / kap - 1.0 / p_.rho);
            return v;
        }
        const double A = -p_.rho + g * p_.r + g * d * pi - p_.lambda10;
        double v = A * f + p_.lambda10 * anchor_ + (1.0 - g) * std::pow(kap, g);
        if (d != 0.0) v -= d * (1.0 - pi) * g * (std::pow(kap, g - 1.0) - f);
        return v;
    }

    double kappa(double pi, double f) const {
        const double lo_k = std::max(0.0, (p_.r - p_.alpha) * (1.0 - pi));
        double lo = (lo_k > 0.0) ? std::log(lo_k) + 1e-14 : std::log(1e-300);
        auto Gu = [&](double u) { return G(std::exp(u), pi, f); };
        const double glo = Gu(lo);
        double hi = std::max(lo + 1.0, 0.0);
        int guard = 0;
        while (std::signbit(Gu(hi)) == std::signbit(glo)) {
            hi += 2.0;
            if (++guard > 400) fail(ErrorKind::NoConvergence, "frozen-regime control: no bracket");
        }
        return std::exp(num::bisect(Gu, lo, hi, 1e-14));
    }

    double f_z(double pi, double f) const {
        const double k = kappa(pi, f);
        if (p_.gamma == 0.0) return 1.0 / k - 1.0 / p_.rho;
        return p_.gamma * (std::pow(k, p_.gamma - 1.0) - f);
    }

private:
    using State = std::array<double, 1>;

    double crunch_value() const {
        if (p_.gamma > 0.0) return f_crunch_;
        return p_.gamma < 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }

    double value_from_state(double y) const { return p_.gamma < 0.0 ? std::pow(y, p_.gamma) : y; }

    double state_from_value(double f) const { return p_.gamma < 0.0 ? std::pow(f, 1.0 / p_.gamma) : f; }

    // dy/ds with s = log z.
    double rhs(double s, double y) const {
        const double z = std::exp(s);
        const double pi = std::exp(-z);
        const double f = value_from_state(y);
        const double fz = f_z(pi, f);
        if (p_.gamma < 0.0) return z * fz * y / (p_.gamma * f);
        return z * fz;
    }

    double state_at(double s) const {
        if (s <= ss_.front()) {
            const double z = std::exp(s), z0 = std::exp(ss_.front());
            if (p_.gamma < 0.0) return ys_.front() * z / z0;
            if (p_.gamma > 0.0) return f_crunch_ + (ys_.front() - f_crunch_) * std::pow(z / z0, p_.gamma);
            return ys_.front() + (s - ss_.front()) / (p_.rho + p_.lambda10);
        }
        if (s >= ss_.back()) return ys_.back();
        return table_(s);
    }

    void march() {
        const double g = p_.gamma, d = p_.alpha - p_.r;
        const double k_eff = p_.rho - g * p_.alpha + p_.lambda10;
        // At the crunch κ ≈ a z with a = (ρ − γr + λ10)/(1−γ): the d(1−π)κ^{γ−1}
        // term is of the same order as κ^γ, so a involves r rather than α.
        const double a = (p_.rho - g * p_.r + p_.lambda10) / (1.0 - g);
        const double z0 = kZStart;
        double y0;
        if (g < 0.0) {
            y0 = z0 * std::pow(a, (g - 1.0) / g);
        } else if (g > 0.0) {
            f_crunch_ = p_.lambda10 * anchor_ / k_eff;
            y0 = f_crunch_ + std::pow(a, g - 1.0) * std::pow(z0, g);
        } else {
            const double c = p_.rho + p_.lambda10;
            y0 = (p_.alpha / p_.rho - 1.0 + p_.lambda10 * anchor_ + std::log(c * z0) - d / c) / c;
        }
        if (g == 0.0) {
            f_inf_ = (log_constant(p_) + p_.lambda10 * anchor_) / (p_.rho + p_.lambda10);
        } else {
            f_inf_ = f0_root(PhiConstants{g, p_.rho - g * p_.r + p_.lambda10, p_.lambda10 * anchor_});
        }

        namespace ode = boost::numeric::odeint;
        auto sys = [this](const State& y, State& dy, double s) { dy[0] = rhs(s, y[0]); };
        const double s0 = std::log(z0);
        double s_end = std::log(40.0);
        for (int attempt = 0; attempt < 6; ++attempt) {
            std::vector<double> times;
            for (double s = s0; s < s_end; s += kStepS) times.push_back(s);
            times.push_back(s_end);
            ss_.clear();
            ys_.clear();
            State y{y0};
            // The state starts at O(z0); the absolute tolerance must sit below it.
            auto stepper = ode::make_dense_output(1e-24, 1e-11, ode::runge_kutta_dopri5<State>());
            ode::integrate_times(stepper, sys, y, times.begin(), times.end(), 1e-4,
                                 [this](const State& st, double s) {
                                     ss_.push_back(s);
                                     ys_.push_back(st[0]);
                                 });
            const double f_end = value_from_state(ys_.back());
            if (std::abs(f_end - f_inf_) <= 1e-8 * std::max(1.0, std::abs(f_inf_))) break;

            if (attempt == 5)
                fail(ErrorKind::NoConvergence, "marched frozen-regime profile does not reach its pi = 0 value");
            s_end += std::log(2.0);
        }
        table_.x = ss_;
        table_.y = ys_;
        table_.dy.resize(ss_.size());
        for (std::size_t i = 0; i < ss_.size(); ++i) table_.dy[i] = rhs(ss_[i], ys_[i]);
    }

    ModelParams p_{};
    double anchor_ = 0.0;
    double f_inf_ = 0.0;
    double f_crunch_ = 0.0;
    std::vector<double> ss_, ys_;
    num::HermiteTable table_;
};

struct CoupledSolution {
    ModelParams params;
    // Liquid value constant: b̄ (power) or b (log).
    double v0_coeff = 0.0;
    double pi_star = 0.0;
    int iterations = 0;
    double fp_residual = 0.0;
    // Max HJB residual over the check grid, filled by solve_coupled.
    double residual = 0.0;
    double reference = 0.0;
    std::vector<double> trace;
    IlliquidProfile v1;
    std::shared_ptr<const PhiProfile> phi;

    double theta(LossConvention c = LossConvention::Reduction) const {
        return efficiency_loss(v0_coeff, reference, params, c);
    }
    std::vector<double> v1_profile(const std::vector<double>& pi_grid) const {
        std::vector<double> out(pi_grid.size());
        for (std::size_t i = 0; i < pi_grid.size(); ++i) out[i] = v1.value(pi_grid[i]);
        return out;
    }
};

struct ResidualReport {
    double illiquid_max = 0.0;
    double illiquid_mean = 0.0;
    double liquid = 0.0;
    double max() const { return std::max(illiquid_max, liquid); }
};

struct CoupledOptions {
    double tol = 1e-10;
    int max_evaluations = 500;
    double damping = 0.5;
    ProfileGrid grid{};
    bool compute_residual = true;
};

inline std::vector<double> default_residual_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 200; ++i) g.push_back(0.005 * i * 0.999);
    for (double e = 1e-3; e >= 1e-4; e /= 1.5) g.push_back(1.0 - e);
    g.push_back(1.0 - 1e-4);
    std::sort(g.begin(), g.end());
    return g;
}

namespace detail {

// Frozen-regime HJB with the control optimised out, divided by max(1,|f|);
// f' from a fourth-order central difference in z.
inline double illiquid_residual(const ModelParams& p, const IlliquidProfile& v1, double b, double pi) {
    const double z = -std::log(pi);
    const double h = 1e-3 * std::min(z, 1.0);
    auto fz = [&](double zz) { return v1.value(std::exp(-zz)); };
    const double dfz = (-fz(z + 2 * h) + 8 * fz(z + h) - 8 * fz(z - h) + fz(z - 2 * h)) / (12.0 * h);
    const double f = v1.value(pi);
    const double fp = -dfz / pi;
    const double d = p.alpha - p.r;
    double R;
    if (p.is_log()) {
        const double kap = 1.0 / (1.0 / p.rho - pi * fp);
        R = -p.rho * f + std::log(kap) - 1.0 + (p.r + d * pi) / p.rho + pi * (1.0 - pi) * d * fp + p.lambda10 * (b - f);
    } else {
        const double g = p.gamma;
        const double m = f - pi * fp / g;
        R = g * (p.r + d * pi) * f - p.rho * f + pi * (1.0 - pi) * d * fp + p.lambda10 * (b - f) +
            (1.0 - g) * std::pow(m, g / (g - 1.0));
    }
    return std::abs(R) / std::max(1.0, std::abs(f));
}

inline double liquid_residual(const ModelParams& p, const IlliquidProfile& v1, double b) {
    if (p.is_log()) {
        LiquidRoot r = solve_liquid_log(p, v1);
        return std::abs((r.b - b) * (p.rho + p.lambda01)) / std::max(1.0, std::abs(b));
    }
    return std::abs(LiquidHaraEquation(p, v1)(b)) / std::max(1.0, std::abs(b));
}

}  // namespace detail

inline ResidualReport hjb_residual(const ModelParams& p, const IlliquidProfile& v1, double b,
                                   const std::vector<double>& grid = default_residual_grid()) {
    ResidualReport rep;
    int n = 0;
    for (double pi : grid) {
        if (pi > 1.0 - 1e-4 || pi <= 0.0) continue;
        double r = detail::illiquid_residual(p, v1, b, pi);
        rep.illiquid_max = std::max(rep.illiquid_max, r);
        rep.illiquid_mean += r;
        ++n;
    }
    if (n > 0) rep.illiquid_mean /= n;
    rep.liquid = detail::liquid_residual(p, v1, b);
    return rep;
}

inline ResidualReport hjb_residual(const CoupledSolution& sol, const ModelParams& p,
                                   const std::vector<double>& grid = default_residual_grid()) {
    return hjb_residual(p, sol.v1, sol.v0_coeff, grid);
}

// Frozen-regime profile anchored at b̄ for the given model.
inline IlliquidProfile illiquid_profile_for(const ModelParams& p, double anchor, const ProfileGrid& grid,
                                            std::shared_ptr<const PhiProfile>* phi_out = nullptr) {
    if (p.alpha != p.r) return MarchedProfile::build(p, anchor).as_profile();
    if (p.is_log()) return log_profile(p, anchor);
    auto phi = std::make_shared<const PhiProfile>(PhiProfile::build(p, anchor, grid));
    if (phi_out) *phi_out = phi;
    return phi->as_profile();
}

inline LiquidRoot liquid_root(const ModelParams& p, const IlliquidProfile& prof, double guess) {
    if (p.is_log()) return solve_liquid_log(p, prof);
    return LiquidHaraEquation(p, prof).solve(guess);
}

// Fixed point b̄ = T(b̄): T solves the frozen-regime equation anchored at b̄ and
// then the liquid-regime equation against that profile.
inline CoupledSolution solve_coupled(const ModelParams& params, const CoupledOptions& opt = {}) {
    const ModelParams p = validate_params(params);
    const MertonSolution m = require_finite(merton(p));
    auto map = [&](double b) { return liquid_root(p, illiquid_profile_for(p, b, opt.grid), b).b; };
    num::FixedPointResult fp = num::fixed_point(map, m.value_coeff, opt.tol, opt.max_evaluations, opt.damping);
    if (!fp.converged) {
        std::string msg = "coupled iteration did not converge after " + std::to_string(fp.evaluations) +
                          " evaluations; last residual " + std::to_string(fp.residual);
        fail(ErrorKind::NoConvergence, msg);
    }
    CoupledSolution s;
    s.params = p;
    s.reference = m.value_coeff;
    s.iterations = fp.evaluations;
    s.fp_residual = fp.residual;
    s.trace = fp.trace;
    s.v1 = illiquid_profile_for(p, fp.x, opt.grid, &s.phi);
    LiquidRoot root = liquid_root(p, s.v1, fp.x);
    s.v0_coeff = root.b;
    s.pi_star = root.pi_star;
    if (opt.compute_residual) s.residual = hjb_residual(s, p).max();
    return s;
}

}  // namespace liquidity
