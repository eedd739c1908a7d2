#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "liquidity/errors.hpp"

namespace liquidity::num {

inline constexpr double inf = std::numeric_limits<double>::infinity();
inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

// Bisection on a bracket with f(lo), f(hi) of opposite sign. Stops when the
// bracket is narrower than tol or the midpoint is exactly a root.
template <class F>
double bisect(F&& f, double lo, double hi, double tol = 1e-12, int max_iter = 400) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (std::signbit(flo) == std::signbit(fhi) || std::isnan(flo) || std::isnan(fhi))
        fail(ErrorKind::NoConvergence, "bisect: no sign change on [" + std::to_string(lo) + ", " +
                                           std::to_string(hi) + "]");
    for (int i = 0; i < max_iter; ++i) {
        double mid = 0.5 * (lo + hi);
        if (hi - lo <= tol || mid == lo || mid == hi) return mid;
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if (std::signbit(fm) == std::signbit(flo)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Multiplies hi by `factor` until f changes sign relative to f(lo).
template <class F>
double expand_upward(F&& f, double lo, double hi, double factor = 2.0, int max_iter = 200) {
    const bool s = std::signbit(f(lo));
    for (int i = 0; i < max_iter; ++i) {
        double v = f(hi);
        if (!std::isnan(v) && std::signbit(v) != s) return hi;
        hi *= factor;
    }
    fail(ErrorKind::NoConvergence, "expand_upward: no sign change found");
}

template <class F>
double expand_downward(F&& f, double lo, double hi, double factor = 2.0, int max_iter = 2000) {
    const bool s = std::signbit(f(hi));
    for (int i = 0; i < max_iter; ++i) {
        double v = f(lo);
        if (!std::isnan(v) && std::signbit(v) != s) return lo;
        lo /= factor;
    }
    fail(ErrorKind::NoConvergence, "expand_downward: no sign change found");
}

template <class F>
double golden_max(F&& f, double lo, double hi, double tol = 1e-10, int max_iter = 500) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

struct Argmax {
    double x;
    double value;
};

// Global maximiser on [lo, hi]: a uniform scan locates the best cell, then the
// sign change of the derivative (when supplied) or golden section refines it.
template <class F, class DF>
Argmax argmax_scan(F&& f, DF&& df, double lo, double hi, int n_scan = 64, double tol = 1e-13) {
    std::vector<double> xs(n_scan + 1), fs(n_scan + 1);
    std::size_t best = 0;
    for (int i = 0; i <= n_scan; ++i) {
        xs[i] = lo + (hi - lo) * i / n_scan;
        fs[i] = f(xs[i]);
        if (!(fs[i] <= fs[best])) best = i;
        if (std::isnan(fs[best])) best = i;
    }
    double a = xs[best > 0 ? best - 1 : 0];
    double b = xs[best < static_cast<std::size_t>(n_scan) ? best + 1 : n_scan];
    double x;
    if constexpr (!std::is_same_v<std::decay_t<DF>, std::nullptr_t>) {
        double da = df(a), db = df(b);
        if (best == 0 && df(lo) <= 0.0) {
            x = lo;
        } else if (best == static_cast<std::size_t>(n_scan) && df(hi) >= 0.0) {
            x = hi;
        } else if (da > 0.0 && db < 0.0) {
            x = bisect(df, a, b, tol);
        } else {
            x = golden_max(f, a, b, tol);
        }
    } else {
        x = golden_max(f, a, b, tol);
    }
    double fx = f(x);
    if (fs[best] > fx) return {xs[best], fs[best]};
    return {x, fx};
}

template <class F>
Argmax argmax_scan(F&& f, double lo, double hi, int n_scan = 64, double tol = 1e-10) {
    return argmax_scan(std::forward<F>(f), nullptr, lo, hi, n_scan, tol);
}

// 16-point Gauss-Legendre rule on [a, b].
template <class F>
double gl16(F&& f, double a, double b) {
    if (a == b) return 0.0;
    return boost::math::quadrature::gauss<double, 16>::integrate(f, a, b);
}

// Composite Gauss-Legendre with panels no longer than `panel`.
template <class F>
double gl_composite(F&& f, double a, double b, double panel) {
    if (a == b) return 0.0;
    int n = std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / panel)));
    double h = (b - a) / n, s = 0.0;
    for (int i = 0; i < n; ++i) s += gl16(f, a + i * h, a + (i + 1) * h);
    return s;
}

struct FixedPointResult {
    double x;
    int evaluations;
    double residual;
    bool converged;
    std::vector<double> trace;
};

// Damped fixed-point iteration x <- x + w (T(x) - x) with Aitken extrapolation
// after every two damped steps. Converged when |T(x) - x| < tol (relative to
// max(1, |x|)).
template <class T>
FixedPointResult fixed_point(T&& map, double x0, double tol, int max_eval, double damping = 0.5) {
    FixedPointResult r{x0, 0, inf, false, {}};
    double x = x0;
    auto scale = [](double v) { return std::max(1.0, std::abs(v)); };
    while (r.evaluations < max_eval) {
        double tx = map(x);
        ++r.evaluations;
        r.trace.push_back(tx);
        r.residual = std::abs(tx - x) / scale(x);
        if (r.residual < tol) {
            r.x = tx;
            r.converged = true;
            return r;
        }
        double x1 = x + damping * (tx - x);
        if (r.evaluations >= max_eval) {
            x = x1;
            break;
        }
        double tx1 = map(x1);
        ++r.evaluations;
        r.trace.push_back(tx1);
        double x2 = x1 + damping * (tx1 - x1);
        double denom = x2 - 2.0 * x1 + x;
        double acc = (std::abs(denom) > 1e-300) ? x - (x1 - x) * (x1 - x) / denom : x2;
        // Aitken is a geometric extrapolation; use it only when the observed
        // ratio of successive steps is a contraction.
        const double q = (x1 != x) ? (x2 - x1) / (x1 - x) : 0.0;
        if (!std::isfinite(acc) || !(std::abs(q) < 0.9999)) acc = x2;
        x = acc;
    }
    r.x = x;
    return r;
}

// Cubic Hermite interpolation on a sorted grid with known slopes.
struct HermiteTable {
    std::vector<double> x, y, dy;

    double operator()(double t) const {
        if (t <= x.front()) return y.front() + dy.front() * (t - x.front());
        if (t >= x.back()) return y.back() + dy.back() * (t - x.back());
        std::size_t i = std::upper_bound(x.begin(), x.end(), t) - x.begin() - 1;
        double h = x[i + 1] - x[i];
        double s = (t - x[i]) / h;
        double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        double h10 = s * (1 - s) * (1 - s);
        double h01 = s * s * (3 - 2 * s);
        double h11 = s * s * (s - 1);
        return h00 * y[i] + h10 * h * dy[i] + h01 * y[i + 1] + h11 * h * dy[i + 1];
    }
};

inline std::vector<double> geometric_grid(double z_min, double z_max, int n) {
    if (n < 2 || !(z_min > 0.0) || !(z_max > z_min))
        fail(ErrorKind::GridTooCoarse, "geometric_grid needs n >= 2 and 0 < z_min < z_max");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = z_min * std::pow(z_max / z_min, static_cast<double>(i) / (n - 1));
    return g;
}

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = (n == 1) ? a : a + (b - a) * i / (n - 1);
    return g;
}

}  // namespace liquidity::num
