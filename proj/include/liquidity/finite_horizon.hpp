#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "liquidity/errors.hpp"
#include "liquidity/model.hpp"
#include "liquidity/numerics.hpp"

namespace liquidity {

// 1 − e^{−x}(1+x) without cancellation for small x.
inline double one_minus_exp_poly(double x) {
    if (x < 1e-3) return x * x * (0.5 - x / 3.0 + x * x / 8.0);
    return -std::expm1(-x) - x * std::exp(-x);
}

// Merton log solution on [0,T] as a function of time to go τ = T − t:
// V̂ = k̂ log x + ĥ.
struct FiniteMerton {
    ModelParams p;
    double T;

    double k(double tau) const { return -std::expm1(-p.rho * tau) / p.rho; }
    double h(double tau) const {
        if (tau <= 0.0) return 0.0;
        const double kk = k(tau);
        const double th = sharpe(p);
        return -kk * std::log(kk) + (0.5 * th * th + p.r - p.rho) / (p.rho * p.rho) * one_minus_exp_poly(p.rho * tau);
    }
    double c_rate(double tau) const { return 1.0 / k(tau); }
    double pi_hat() const { return (p.mu - p.r) / (p.sigma * p.sigma); }

    double k_at(double t) const { return k(T - t); }
    double h_at(double t) const { return h(T - t); }
};

inline FiniteMerton merton_finite_log(const ModelParams& params, double T) {
    if (!(T > 0.0)) fail(ErrorKind::InvalidParams, "T must be > 0");
    return {validate_params(params), T};
}

// Boundary-layer shift h¹(t,1−dπ̃) − h¹(t,1−π̃) for small π̃.
inline double cash_crunch_shift(const ModelParams& p, double T, double t, double d) {
    if (!(d > 0.0 && d <= 1.0)) fail(ErrorKind::DomainError, "cash_crunch_shift needs 0 < d <= 1");
    const double c = p.rho + p.lambda10;
    return -std::expm1(-c * (T - t)) / c * std::log(d);
}

// π = 0 column of the frozen-regime equation, which carries no π-derivative:
// h(τ) = ∫₀^τ e^{−(ρ+λ10)(τ−s)} [r k̂(s) − 1 + λ10 ĥ(s) − log k̂(s)] ds.
inline double h1_pi0_column(const ModelParams& p, double T, double tau) {
    if (tau <= 0.0) return 0.0;
    const FiniteMerton m{p, T};
    const double c = p.rho + p.lambda10;
    auto f = [&](double s) {
        return std::exp(-c * (tau - s)) * (p.r * m.k(s) - 1.0 + p.lambda10 * m.h(s) - std::log(m.k(s)));
    };
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(f, 0.0, tau);
}

// SingularSplit solves for u = h¹ − K(τ) log(1−π), K(τ) = (1−e^{−(ρ+λ10)τ})/(ρ+λ10),
// which stays bounded up to π = 1; CrunchGhost solves for h¹ on [0, 1−Δπ] and
// sets h¹(1−Δπ) = h¹(1−2Δπ) − K(τ) log 2.
enum class CrunchBoundary { SingularSplit, CrunchGhost };

struct FiniteHorizonOptions {
    CrunchBoundary boundary = CrunchBoundary::SingularSplit;
    int n_pi = 400;
    double dt_max = 1e-3;
    double cfl = 0.5;
    double tau0_frac = 1e-8;
    int n_t_out = 201;
};

struct FiniteHorizonSolution {
    ModelParams params;
    double T = 0.0;
    double dpi = 0.0;
    // t_grid ascending from 0 to T; rows of h1 and loss_surface follow it.
    std::vector<double> t_grid;
    std::vector<double> pi_grid;
    std::vector<double> k_hat;
    std::vector<double> h_hat;
    std::vector<std::vector<double>> h1;
    std::vector<std::vector<double>> loss_surface;
    std::vector<double> h0;
    std::vector<double> pi_star_t;
    long steps = 0;
    long floored_nodes = 0;

    // Linear interpolation of h¹(t_i, ·).
    double h1_at(std::size_t i, double pi) const {
        const auto& row = h1[i];
        double u = pi / dpi;
        if (u <= 0.0) return row.front();
        std::size_t j = static_cast<std::size_t>(u);
        if (j + 1 >= row.size()) return row.back();
        double w = u - j;
        return (1.0 - w) * row[j] + w * row[j + 1];
    }
    double loss_at(std::size_t i, double pi) const {
        if (k_hat[i] <= 0.0) return 0.0;
        return -std::expm1((h1_at(i, pi) - h_hat[i]) / k_hat[i]);
    }
};

// Frozen-regime equation in τ = T − t,
//   h_τ = −(ρ+λ10) h + r k̂ − 1 + λ10 ĥ − log(k̂ − π h_π),
// by Heun steps with upwind differences. In split form the equation reads
//   u_τ = −(ρ+λ10) u + r k̂ − 1 + λ10 ĥ − log((1−π)(k̂ − π u_π) + π K).
inline FiniteHorizonSolution solve_h1(const ModelParams& params, double T, const FiniteHorizonOptions& opt = {}) {
    const ModelParams p = validate_params(params);
    if (p.alpha != p.r) fail(ErrorKind::UnsupportedModel, "finite-horizon frozen-regime equation requires alpha = r");
    if (!(T > 0.0)) fail(ErrorKind::InvalidParams, "T must be > 0");
    if (opt.n_pi < 8 || opt.n_t_out < 2) fail(ErrorKind::GridTooCoarse, "finite-horizon grid too coarse");
    const FiniteMerton m{p, T};
    const int N = opt.n_pi;
    const double dpi = 1.0 / N;
    const double c = p.rho + p.lambda10;

    FiniteHorizonSolution s;
    s.params = p;
    s.T = T;
    s.dpi = dpi;
    s.pi_grid.resize(N);
    for (int i = 0; i < N; ++i) s.pi_grid[i] = i * dpi;
    s.t_grid = num::linspace(0.0, T, opt.n_t_out);
    const int nt = opt.n_t_out;
    s.h1.assign(nt, std::vector<double>(N, 0.0));
    s.k_hat.resize(nt);
    s.h_hat.resize(nt);
    for (int j = 0; j < nt; ++j) {
        s.k_hat[j] = m.k_at(s.t_grid[j]);
        s.h_hat[j] = m.h_at(s.t_grid[j]);
    }

    double tau = opt.tau0_frac * T;
    const bool split = opt.boundary == CrunchBoundary::SingularSplit;
    // Split form: u = h − K log(1−π) on {0, …, 1}; ghost form: h on {0, …, 1−Δπ}.
    const int M = split ? N + 1 : N;
    std::vector<double> u(M, h1_pi0_column(p, T, tau)), u_mid(M), rate(M);
    const double dt_cap = std::min(opt.dt_max, dpi / 5.0);
    const double log2 = std::log(2.0);
    auto K_of = [&](double ta) { return -std::expm1(-c * ta) / c; };
    auto ghost = [&](std::vector<double>& v, double ta) {
        if (!split) v[N - 1] = v[N - 2] - K_of(ta) * log2;
    };
    const int n_free = split ? M : N - 1;
    // One-sided differences towards π = 1: minmod of the first- and
    // second-order stencils, so steep layers fall back to first order.
    auto slope = [&](const std::vector<double>& v, int i) {
        if (i + 1 >= M) return 0.0;
        const double d1 = (v[i + 1] - v[i]) / dpi;
        if (i + 2 >= M) return d1;
        const double d2 = (-3.0 * v[i] + 4.0 * v[i + 1] - v[i + 2]) / (2.0 * dpi);
        if (d1 * d2 <= 0.0) return 0.0;
        return std::abs(d1) < std::abs(d2) ? d1 : d2;
    };
    // Right-hand side at τ; returns the largest characteristic speed.
    auto eval = [&](const std::vector<double>& v, double ta, bool count) {
        const double kk = m.k(ta);
        const double K = K_of(ta);
        const double src = p.r * kk - 1.0 + p.lambda10 * m.h(ta);
        double vmax = 0.0;
        for (int i = 0; i < n_free; ++i) {
            const double pi = i * dpi;
            const double w = split ? pi * (1.0 - pi) : pi;
            double arg = split ? (1.0 - pi) * kk + pi * K - w * slope(v, i) : kk - w * slope(v, i);
            if (!(arg > 1e-12)) {
                arg = 1e-12;
                if (count) ++s.floored_nodes;
            }
            vmax = std::max(vmax, w / arg);
            rate[i] = -c * v[i] + src - std::log(arg);
        }
        return vmax;
    };
    auto store = [&](int j, double ta) {
        const double K = K_of(ta);
        for (int i = 0; i < N; ++i) s.h1[j][i] = split ? u[i] + K * std::log1p(-i * dpi) : u[i];
    };
    ghost(u, tau);
    for (int j = nt - 2; j >= 0; --j) {
        const double target = T - s.t_grid[j];
        while (tau < target * (1.0 - 1e-14)) {
            // Heun (SSP-RK2) step.
            const double vmax = eval(u, tau, true);
            double dt = dt_cap;
            if (vmax > 0.0) dt = std::min(dt, opt.cfl * dpi / vmax);
            dt = std::min(dt, target - tau);
            for (int i = 0; i < n_free; ++i) u_mid[i] = u[i] + dt * rate[i];
            ghost(u_mid, tau + dt);
            eval(u_mid, tau + dt, false);
            for (int i = 0; i < n_free; ++i) u[i] = 0.5 * (u[i] + u_mid[i] + dt * rate[i]);
            tau += dt;
            ghost(u, tau);
            ++s.steps;
        }
        store(j, tau);
    }

    s.loss_surface.assign(nt, std::vector<double>(N, 0.0));
    for (int j = 0; j < nt; ++j)
        for (int i = 0; i < N; ++i) s.loss_surface[j][i] = s.loss_at(j, s.pi_grid[i]);
    return s;
}

namespace detail {

struct XiResult {
    double value;
    double pi;
};

// sup_π {(μ−r)π k̂ − ½σ²π² k̂ + λ01 (k̂ log(1−πL) + h¹(t, g(π)))} with h¹ from a
// cubic spline of the grid row.
inline XiResult finite_xi(const ModelParams& p, const FiniteHorizonSolution& s, std::size_t j) {
    const double kk = s.k_hat[j];
    const auto& row = s.h1[j];
    boost::math::interpolators::cardinal_cubic_b_spline<double> sp(row.begin(), row.end(), 0.0, s.dpi);
    const double top = 1.0 - s.dpi;
    const double pi_max = top / (1.0 - p.L + top * p.L);
    const double s2 = p.sigma * p.sigma;
    auto obj = [&](double pi) {
        double v = (p.mu - p.r) * pi * kk - 0.5 * s2 * pi * pi * kk;
        if (p.lambda01 > 0.0) v += p.lambda01 * (kk * std::log1p(-pi * p.L) + sp(jump_map(pi, p.L)));
        return v;
    };
    auto dobj = [&](double pi) {
        double d = (p.mu - p.r) * kk - s2 * pi * kk;
        if (p.lambda01 > 0.0)
            d += p.lambda01 * (-kk * p.L / (1.0 - pi * p.L) + sp.prime(jump_map(pi, p.L)) * jump_map_derivative(pi, p.L));
        return d;
    };
    if (kk <= 0.0) return {p.lambda01 * sp(0.0), std::clamp(FiniteMerton{p, s.T}.pi_hat(), 0.0, 1.0)};
    num::Argmax a = num::argmax_scan(obj, dobj, 0.0, pi_max, 128, 1e-13);
    return {a.value, a.x};
}

}  // namespace detail

// h⁰ on the output grid: D = h⁰ − ĥ solves, in τ,
//   D_τ = −(ρ+λ01) D − λ01 ĥ + ξ − θ² k̂/2,
// integrated with the exponential trapezoid rule; π*(t) is the ξ maximiser.
inline void solve_h0(const ModelParams& params, FiniteHorizonSolution& s) {
    const ModelParams p = validate_params(params);
    const int nt = static_cast<int>(s.t_grid.size());
    const double th = sharpe(p);
    const double c = p.rho + p.lambda01;
    s.h0.assign(nt, 0.0);
    s.pi_star_t.assign(nt, 0.0);
    std::vector<double> src(nt);
    for (int j = 0; j < nt; ++j) {
        detail::XiResult x = detail::finite_xi(p, s, j);
        s.pi_star_t[j] = x.pi;
        src[j] = -p.lambda01 * s.h_hat[j] + x.value - 0.5 * th * th * s.k_hat[j];
    }
    double D = 0.0;
    s.h0[nt - 1] = 0.0;
    for (int j = nt - 2; j >= 0; --j) {
        const double dtau = s.t_grid[j + 1] - s.t_grid[j];
        const double e = std::exp(-c * dtau);
        D = e * D + 0.5 * dtau * (e * src[j + 1] + src[j]);
        s.h0[j] = s.h_hat[j] + D;
    }
}

struct FiniteAsymptotics {
    std::vector<double> t_grid;
    // π*(t) ≈ π̂ + λ01 pi1(t); h⁰(t) ≈ ĥ(t) + λ01 h01(t).
    std::vector<double> pi1;
    std::vector<double> h01;
    std::vector<double> pi_approx;
    std::vector<double> h0_approx;
};

inline FiniteAsymptotics finite_asymptotics(const ModelParams& params, const FiniteHorizonSolution& s) {
    const ModelParams p = validate_params(params);
    const FiniteMerton m{p, s.T};
    const double pih = m.pi_hat();
    if (!(pih < 1.0)) fail(ErrorKind::WrongRegime, "finite-horizon asymptotics need pi_hat < 1");
    const double g = jump_map(pih, p.L);
    const double gp = jump_map_derivative(pih, p.L);
    const double s2 = p.sigma * p.sigma;
    const int nt = static_cast<int>(s.t_grid.size());
    FiniteAsymptotics a;
    a.t_grid = s.t_grid;
    a.pi1.assign(nt, 0.0);
    a.h01.assign(nt, 0.0);
    a.pi_approx.assign(nt, pih);
    a.h0_approx.assign(nt, 0.0);
    std::vector<double> gap(nt);
    for (int j = 0; j < nt; ++j) {
        boost::math::interpolators::cardinal_cubic_b_spline<double> sp(s.h1[j].begin(), s.h1[j].end(), 0.0, s.dpi);
        gap[j] = sp(g) - s.h_hat[j];
        if (s.k_hat[j] > 0.0) a.pi1[j] = (-p.L / (1.0 - pih * p.L) + sp.prime(g) * gp / s.k_hat[j]) / s2;
        else a.pi1[j] = -p.L / (1.0 - pih * p.L) / s2;
    }
    // I(t) = ∫_t^T e^{−ρ(s−t)} gap(s) ds by the exponential trapezoid rule.
    double I = 0.0;
    for (int j = nt - 1; j >= 0; --j) {
        if (j < nt - 1) {
            const double dt = s.t_grid[j + 1] - s.t_grid[j];
            const double e = std::exp(-p.rho * dt);
            I = e * I + 0.5 * dt * (e * gap[j + 1] + gap[j]);
        }
        const double tau = s.T - s.t_grid[j];
        a.h01[j] = I + std::log1p(-pih * p.L) * one_minus_exp_poly(p.rho * tau) / (p.rho * p.rho);
        a.pi_approx[j] = pih + p.lambda01 * a.pi1[j];
        a.h0_approx[j] = s.h_hat[j] + p.lambda01 * a.h01[j];
    }
    return a;
}

}  // namespace liquidity
