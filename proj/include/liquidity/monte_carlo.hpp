#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "liquidity/coupled_hjb.hpp"
#include "liquidity/errors.hpp"
#include "liquidity/infinite_hara.hpp"
#include "liquidity/infinite_log.hpp"
#include "liquidity/model.hpp"

namespace liquidity {

// Scale-invariant feedback policy: constant liquid fraction and consumption
// rates proportional to wealth. The frozen-regime fraction is not a control;
// it evolves by dπ/dt = π(1−π)(α−r) + π c¹(π).
struct Policy {
    double gamma = 0.0;
    double liquid_fraction = 0.0;
    double liquid_consumption = 0.0;
    std::function<double(double)> illiquid_consumption;
    bool clip = true;

    double fraction() const { return clip ? std::clamp(liquid_fraction, 0.0, 1.0) : liquid_fraction; }
};

inline Policy merton_policy(const ModelParams& p) {
    const MertonSolution m = p.is_log() ? merton_log(p) : require_finite(merton_hara(p));
    Policy pol;
    pol.gamma = p.gamma;
    pol.liquid_fraction = m.pi_hat;
    pol.liquid_consumption = m.c_rate;
    const double c = m.c_rate;
    pol.illiquid_consumption = [c](double) { return c; };
    return pol;
}

inline Policy policy_from_solution(const LogSolution& s) {
    Policy pol;
    pol.gamma = 0.0;
    pol.liquid_fraction = s.pi_star;
    pol.liquid_consumption = s.c0_rate;
    const ModelParams p = s.params;
    pol.illiquid_consumption = [p](double pi) { return log_c1_rate(pi, p); };
    return pol;
}

inline Policy policy_from_solution(const HaraSolution& s) {
    Policy pol;
    pol.gamma = s.params.gamma;
    pol.liquid_fraction = s.pi_star;
    pol.liquid_consumption = s.c0_rate;
    pol.illiquid_consumption = s.profile.consumption;
    return pol;
}

inline Policy policy_from_solution(const CoupledSolution& s) {
    const ModelParams& p = s.params;
    Policy pol;
    pol.gamma = p.gamma;
    pol.liquid_fraction = s.pi_star;
    pol.liquid_consumption = p.is_log() ? p.rho : std::pow(s.v0_coeff, 1.0 / (p.gamma - 1.0));
    pol.illiquid_consumption = s.v1.consumption;
    return pol;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Independent stream for (seed, path); paths can be generated in any order.
inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path) {
    return std::mt19937_64(detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(~path)));
}

struct MarketPath {
    std::vector<double> t;
    std::vector<int> regime;
    std::vector<double> S;
    // Regime transition times, in order.
    std::vector<double> switch_times;
    // Total time spent in the frozen regime on [0,T].
    double time_illiquid = 0.0;
};

// Regime chain and stock price on the grid {0, dt, 2dt, …, T}; transitions are
// exact exponential times, S is exact between them, and a 0→1 transition
// multiplies S by 1 − L.
inline MarketPath simulate_market_path(const ModelParams& params, double T, double dt, std::uint64_t seed,
                                       int initial_regime = 0, double S0 = 1.0) {
    const ModelParams p = validate_params(params);
    if (!(T > 0.0) || !(dt > 0.0)) fail(ErrorKind::InvalidParams, "simulate_market_path needs T > 0 and dt > 0");
    std::mt19937_64 rng = path_rng(seed, 0);
    std::exponential_distribution<double> unit_exp(1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto next_switch = [&](int m, double now) {
        const double rate = m == 0 ? p.lambda01 : p.lambda10;
        return rate > 0.0 ? now + unit_exp(rng) / rate : std::numeric_limits<double>::infinity();
    };
    MarketPath path;
    int m = initial_regime;
    double S = S0;
    double now = 0.0;
    double sw = next_switch(m, now);
    const auto n = static_cast<long>(std::ceil(T / dt - 1e-9));
    path.t.push_back(0.0);
    path.regime.push_back(m);
    path.S.push_back(S);
    auto advance = [&](double h) {
        if (h <= 0.0) return;
        if (m == 0) {
            S *= std::exp((p.mu - 0.5 * p.sigma * p.sigma) * h + p.sigma * std::sqrt(h) * normal(rng));
        } else {
            S *= std::exp(p.alpha * h);
            path.time_illiquid += h;
        }
    };
    for (long i = 1; i <= n; ++i) {
        const double target = std::min(T, i * dt);
        while (sw <= target) {
            advance(sw - now);
            now = sw;
            path.switch_times.push_back(now);
            if (m == 0) S *= 1.0 - p.L;
            m = 1 - m;
            sw = next_switch(m, now);
        }
        advance(target - now);
        now = target;
        path.t.push_back(now);
        path.regime.push_back(m);
        path.S.push_back(S);
    }
    return path;
}

struct SimulationOptions {
    // Truncation horizon in years.
    double horizon = 150.0;
    // Step of the frozen-regime trajectory table.
    double dt = 1.0 / 2000.0;
    long n_paths = 10000;
    std::uint64_t seed = 1;
    bool antithetic = false;
    double initial_wealth = 1.0;
};

struct SimulationEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    long n_paths = 0;
    double horizon_used = 0.0;
    double dt = 0.0;
    std::uint64_t seed = 0;
    // Bound on the discounted utility beyond the horizon.
    double tail_bound = 0.0;
    double min_wealth = std::numeric_limits<double>::infinity();
    long switches = 0;
};

namespace detail {

// Frozen-regime trajectory from π0 with unit initial wealth, tabulated at step
// dt: π(s), ℓ(s) = log X(s) and U(s) = ∫₀ˢ e^{−ρu} w(u) du, where
// w = log c (log) or c^γ/γ (power). Reads are cubic Hermite in the stored
// values and slopes, so the interpolation error is O(dt⁴).
class FrozenTable {
public:
    FrozenTable(const ModelParams& p, const Policy& pol, double pi0, double dt, double s_max)
        : dt_(dt), rho_(p.rho), gamma_(pol.gamma) {
        const auto n = static_cast<std::size_t>(std::ceil(s_max / dt)) + 1;
        pi_.reserve(n);
        ell_.reserve(n);
        U_.reserve(n);
        const double drift = p.alpha - p.r;
        auto c_of = [&](double pi) { return std::max(0.0, pol.illiquid_consumption(std::clamp(pi, 0.0, 1.0))); };
        auto utility_rate = [&](double s, double pi, double ell) {
            const double c = c_of(pi);
            if (gamma_ == 0.0) return std::exp(-rho_ * s) * (std::log(c) + ell);
            return std::exp(-rho_ * s) * std::pow(c, gamma_) * std::exp(gamma_ * ell) / gamma_;
        };
        // y = (π, ℓ, U)
        auto rhs = [&](double s, const std::array<double, 3>& y) {
            const double pi = std::clamp(y[0], 0.0, 1.0);
            const double c = c_of(pi);
            return std::array<double, 3>{pi * (1.0 - pi) * drift + pi * c, p.r + drift * pi - c,
                                         utility_rate(s, pi, y[1])};
        };
        std::array<double, 3> y{pi0, 0.0, 0.0};
        double s = 0.0;
        push(y, rhs(s, y));
        for (std::size_t i = 1; i < n; ++i) {
            auto k1 = rhs(s, y);
            auto k2 = rhs(s + 0.5 * dt, add(y, k1, 0.5 * dt));
            auto k3 = rhs(s + 0.5 * dt, add(y, k2, 0.5 * dt));
            auto k4 = rhs(s + dt, add(y, k3, dt));
            for (int j = 0; j < 3; ++j) y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            s += dt;
            if (!std::isfinite(y[1]) || !std::isfinite(y[2])) fail(ErrorKind::Ruin, "frozen-regime wealth reached 0");
            push(y, rhs(s, y));
        }
    }

    double s_max() const { return dt_ * static_cast<double>(pi_.size() - 1); }
    double pi(double s) const { return std::clamp(hermite(pi_, dpi_, s), 0.0, 1.0); }
    double ell(double s) const { return hermite(ell_, dell_, s); }
    double U(double s) const { return hermite(U_, dU_, s); }

private:
    static std::array<double, 3> add(const std::array<double, 3>& y, const std::array<double, 3>& k, double h) {
        return {y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]};
    }
    void push(const std::array<double, 3>& y, const std::array<double, 3>& dy) {
        pi_.push_back(std::clamp(y[0], 0.0, 1.0));
        ell_.push_back(y[1]);
        U_.push_back(y[2]);
        dpi_.push_back(dy[0]);
        dell_.push_back(dy[1]);
        dU_.push_back(dy[2]);
    }
    double hermite(const std::vector<double>& v, const std::vector<double>& dv, double s) const {
        const double x = std::clamp(s / dt_, 0.0, static_cast<double>(v.size() - 1));
        const auto i = std::min(static_cast<std::size_t>(x), v.size() - 2);
        const double w = x - static_cast<double>(i);
        const double w2 = w * w, w3 = w2 * w;
        return (2.0 * w3 - 3.0 * w2 + 1.0) * v[i] + (w3 - 2.0 * w2 + w) * dt_ * dv[i] +
               (-2.0 * w3 + 3.0 * w2) * v[i + 1] + (w3 - w2) * dt_ * dv[i + 1];
    }

    double dt_, rho_, gamma_;
    std::vector<double> pi_, ell_, U_;
    std::vector<double> dpi_, dell_, dU_;
};

// ∫₀^τ e^{−ρs} s ds.
inline double discounted_first_moment(double rho, double tau) {
    const double x = rho * tau;
    const double poly = x < 1e-3 ? x * x * (0.5 - x / 3.0 + x * x / 8.0) : -std::expm1(-x) - x * std::exp(-x);
    return poly / (rho * rho);
}

}  // namespace detail

// Expected discounted utility of a policy from the liquid regime, truncated at
// opt.horizon. Liquid segments use the exact log-normal endpoint, with the
// in-segment utility integral replaced by its conditional expectation given
// that endpoint; frozen segments read a deterministic table.
inline SimulationEstimate evaluate_policy(const ModelParams& params, const Policy& pol,
                                          const SimulationOptions& opt = {}) {
    const ModelParams p = validate_params(params);
    if (pol.gamma != p.gamma) fail(ErrorKind::InvalidParams, "policy gamma differs from model gamma");
    if (!(opt.horizon > 0.0) || !(opt.dt > 0.0) || opt.n_paths < 1 || !(opt.initial_wealth > 0.0))
        fail(ErrorKind::InvalidParams, "evaluate_policy needs horizon, dt > 0, n_paths >= 1, wealth > 0");
    if (!pol.illiquid_consumption) fail(ErrorKind::InvalidParams, "policy has no illiquid consumption rule");
    const double g = p.gamma;
    const double pi = pol.fraction();
    const double c0 = pol.liquid_consumption;
    if (!(c0 > 0.0)) fail(ErrorKind::InvalidParams, "liquid consumption rate must be > 0");
    const double sv = p.sigma * pi;
    const double m = p.r + (p.mu - p.r) * pi - c0 - 0.5 * sv * sv;
    const double jump = std::log1p(-pi * p.L);
    if (!std::isfinite(jump)) fail(ErrorKind::Ruin, "jump wipes out wealth");
    const double pi_frozen = jump_map(pi, p.L);
    const detail::FrozenTable table(p, pol, pi_frozen, opt.dt, opt.horizon);
    const double rho = p.rho;

    // Liquid segment [t0, t0+τ] with log wealth ℓ0 and endpoint shock W_τ = √τ z.
    auto liquid_value = [&](double t0, double tau, double ell0, double z) {
        const double W = std::sqrt(tau) * z;
        if (g == 0.0) {
            const double E0 = -std::expm1(-rho * tau) / rho;
            const double E1 = detail::discounted_first_moment(rho, tau);
            return std::exp(-rho * t0) * ((std::log(c0) + ell0) * E0 + (m + sv * W / tau) * E1);
        }
        auto f = [&](double s) {
            return std::exp(-rho * s + g * (m * s + sv * s * W / tau) + 0.5 * g * g * sv * sv * s * (tau - s) / tau);
        };
        const double I = boost::math::quadrature::gauss<double, 30>::integrate(f, 0.0, tau);
        return std::exp(-rho * t0 + g * ell0) * std::pow(c0, g) / g * I;
    };

    SimulationEstimate est;
    est.n_paths = opt.n_paths;
    est.horizon_used = opt.horizon;
    est.dt = opt.dt;
    est.seed = opt.seed;
    const double T = opt.horizon;
    // Welford running mean and sum of squared deviations.
    double mean = 0.0, m2 = 0.0, tail_sum = 0.0;
    double min_wealth = std::numeric_limits<double>::infinity();
    long switches = 0;
    std::vector<double> durations;
    std::vector<double> shocks;
    for (long path = 0; path < opt.n_paths; ++path) {
        std::mt19937_64 rng = path_rng(opt.seed, static_cast<std::uint64_t>(path));
        std::exponential_distribution<double> unit_exp(1.0);
        std::normal_distribution<double> normal(0.0, 1.0);
        // Draw the whole path first so antithetic twins share regime times.
        durations.clear();
        shocks.clear();
        {
            double t = 0.0;
            int regime = 0;
            while (t < T) {
                const double rate = regime == 0 ? p.lambda01 : p.lambda10;
                const double d = rate > 0.0 ? unit_exp(rng) / rate : std::numeric_limits<double>::infinity();
                const double seg = std::min(d, T - t);
                durations.push_back(seg);
                shocks.push_back(regime == 0 ? normal(rng) : 0.0);
                t += seg;
                regime = 1 - regime;
            }
        }
        switches += static_cast<long>(durations.size()) - 1;
        auto run = [&](double sign) {
            double t = 0.0, ell = std::log(opt.initial_wealth), value = 0.0, last_rate = 0.0;
            for (std::size_t k = 0; k < durations.size(); ++k) {
                const double tau = durations[k];
                if (k % 2 == 0) {
                    const double z = sign * shocks[k];
                    value += liquid_value(t, tau, ell, z);
                    ell += m * tau + sv * std::sqrt(tau) * z;
                    last_rate = g == 0.0 ? std::log(c0) + ell : std::pow(c0, g) * std::exp(g * ell) / g;
                    if (t + tau < T) ell += jump;
                } else {
                    const double U = table.U(tau);
                    if (g == 0.0) {
                        value += std::exp(-rho * t) * (ell * (-std::expm1(-rho * tau)) / rho + U);
                    } else {
                        value += std::exp(-rho * t + g * ell) * U;
                    }
                    ell += table.ell(tau);
                    const double c = std::max(0.0, pol.illiquid_consumption(table.pi(tau)));
                    last_rate = g == 0.0 ? std::log(c) + ell : std::pow(c, g) * std::exp(g * ell) / g;
                }
                min_wealth = std::min(min_wealth, std::exp(ell));
                t += tau;
            }
            tail_sum += std::abs(last_rate);
            return value;
        };
        double v = run(1.0);
        if (opt.antithetic) v = 0.5 * (v + run(-1.0));
        if (!std::isfinite(v)) fail(ErrorKind::Ruin, "path utility is not finite");
        const double delta = v - mean;
        mean += delta / static_cast<double>(path + 1);
        m2 += delta * (v - mean);
    }
    const double n = static_cast<double>(opt.n_paths);
    est.mean = mean;
    est.std_err = opt.n_paths > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
    const double paths_run = opt.antithetic ? 2.0 * n : n;
    // e^{−ρT}·|u-scale|/ρ, with the log drift's linear growth folded in.
    est.tail_bound = std::exp(-rho * T) * (tail_sum / paths_run / rho + (g == 0.0 ? std::abs(m) / (rho * rho) : 0.0));
    est.min_wealth = min_wealth;
    est.switches = switches;
    return est;
}

// Two-sided Kolmogorov–Smirnov test of samples against a continuous CDF.
struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

inline KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) fail(ErrorKind::InvalidParams, "ks_test needs samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double D = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = cdf(samples[i]);
        D = std::max({D, (i + 1) / n - F, F - i / n});
    }
    const double sn = std::sqrt(n);
    const double lam = (sn + 0.12 + 0.11 / sn) * D;
    if (lam < 0.2) return {D, 1.0};
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lam * lam);
        q += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return {D, std::clamp(q, 0.0, 1.0)};
}

}  // namespace liquidity
