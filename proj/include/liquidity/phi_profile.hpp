#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "liquidity/errors.hpp"
#include "liquidity/model.hpp"
#include "liquidity/numerics.hpp"
#include "liquidity/profile.hpp"

namespace liquidity {

struct ProfileGrid {
    int points = 400;
    double z_min = 1e-6;
    double z_max = 20.0;
};

// Constants of the frozen-regime ODE in z = -log π for power utility and α = r:
//   φ(z) = k f(e^{-z}) - C,   φ'(z) = γ H̃(φ),
//   H̃(x) = k (x/(1-γ))^{1-1/γ} - x - C,   k = ρ - γr + λ10,  C = λ10·anchor,
// where the anchor is f̂ (uncoupled system) or the liquid multiplier b̄.
struct PhiConstants {
    double gamma;
    double k;
    double C;

    double Htilde(double x) const {
        return k * std::pow(x / (1.0 - gamma), 1.0 - 1.0 / gamma) - x - C;
    }
    double Htilde_prime(double x) const {
        return k * (1.0 - 1.0 / gamma) / (1.0 - gamma) * std::pow(x / (1.0 - gamma), -1.0 / gamma) - 1.0;
    }
    // Boundary polynomial at π = 0: H(x) = -k x + (1-γ) x^{γ/(γ-1)} + C.
    double H(double x) const { return -k * x + (1.0 - gamma) * std::pow(x, gamma / (gamma - 1.0)) + C; }
};

inline PhiConstants phi_constants(const ModelParams& p, double anchor) {
    if (p.gamma == 0.0) fail(ErrorKind::DomainError, "phi profile requires gamma != 0");
    return {p.gamma, p.rho - p.gamma * p.r + p.lambda10, p.lambda10 * anchor};
}

// Root of H on its decreasing branch. For γ > 0 H is decreasing on (0, ∞)
// with H(0+) = +∞; for γ < 0 H rises from H(0) = C > 0 to its maximum at
// x_m = (k/|γ|)^{γ-1} and decreases afterwards.
inline double f0_root(const PhiConstants& c) {
    auto H = [&c](double x) { return c.H(x); };
    double lo;
    if (c.gamma > 0.0) {
        lo = 1.0;
        while (H(lo) < 0.0) lo *= 0.5;
        double hi = 1.0;
        while (H(hi) > 0.0) hi *= 2.0;
        return num::bisect(H, lo, hi, 0.0);
    }
    lo = std::pow(c.k / (-c.gamma), c.gamma - 1.0);
    double hi = num::expand_upward(H, lo, 2.0 * lo);
    return num::bisect(H, lo, hi, 0.0);
}

inline double boundary_f0(const ModelParams& p) {
    const MertonSolution m = require_finite(merton_hara(validate_params(p)));
    return f0_root(phi_constants(p, m.value_coeff));
}

// Monotone solution φ of the frozen-regime ODE with the cash-crunch boundary
// condition (φ(0) = 0 for γ > 0, φ(0+) = +∞ for γ < 0), built from the
// quadrature z(φ) = ∫ dx/(γH̃(x)) on nodes graded towards both singular ends
// and inverted pointwise by safeguarded Newton iteration.
class PhiProfile {
public:
    // Relative distance of the last node from φ∞; closer nodes lose H̃ to
    // cancellation, and the exponential tail covers the rest.
    static constexpr double kAsymptoteGap = 1e-10;

    PhiProfile() = default;

    static PhiProfile build(const ModelParams& p, double anchor, const ProfileGrid& grid = {}) {
        PhiProfile pr;
        pr.c_ = phi_constants(p, anchor);
        pr.f0 = f0_root(pr.c_);
        pr.asymptote = pr.c_.k * pr.f0 - pr.c_.C;
        if (!(pr.asymptote > 0.0)) fail(ErrorKind::NoConvergence, "phi asymptote is not positive");
        pr.f_plus_1 = (pr.c_.gamma > 0.0) ? pr.c_.C / pr.c_.k : std::numeric_limits<double>::infinity();
        pr.nu_ = -pr.c_.gamma * pr.c_.Htilde_prime(pr.asymptote);
        if (!(pr.nu_ > 0.0)) fail(ErrorKind::NoConvergence, "phi asymptote is not attracting");
        pr.build_nodes();
        pr.grid = num::geometric_grid(grid.z_min, grid.z_max, grid.points);
        pr.values.resize(pr.grid.size());
        for (std::size_t i = 0; i < pr.grid.size(); ++i) pr.values[i] = pr.phi(pr.grid[i]);
        for (std::size_t i = 1; i < pr.values.size(); ++i) {
            double d = pr.values[i] - pr.values[i - 1];
            if ((pr.c_.gamma > 0.0 && d < 0.0) || (pr.c_.gamma < 0.0 && d > 0.0))
                fail(ErrorKind::GridTooCoarse, "tabulated phi is not monotone");
        }
        return pr;
    }

    double gamma() const { return c_.gamma; }
    double k() const { return c_.k; }
    double C() const { return c_.C; }
    const PhiConstants& constants() const { return c_; }

    double phi(double z) const {
        if (z <= 0.0) return c_.gamma > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        if (c_.gamma < 0.0 && z < zs_.front()) {
            // Tail region x > X: z = s/A + s²/(2A²) with s = x^{1/γ}.
            double s = A_ * (std::sqrt(1.0 + 2.0 * z) - 1.0);
            return std::pow(s, c_.gamma);
        }
        if (z >= zs_.back()) return asymptote + (xs_.back() - asymptote) * std::exp(-nu_ * (z - zs_.back()));
        std::size_t j = std::upper_bound(zs_.begin(), zs_.end(), z) - zs_.begin() - 1;
        return invert_in_cell(j, z);
    }

    double dphi(double z) const {
        double v = phi(z);
        if (!std::isfinite(v)) return c_.gamma > 0.0 ? std::numeric_limits<double>::infinity()
                                                     : -std::numeric_limits<double>::infinity();
        if (z >= zs_.back()) return -nu_ * (v - asymptote);
        return c_.gamma * c_.Htilde(v);
    }

    // f(π) = (φ(-log π) + C)/k.
    double f(double pi) const {
        if (pi <= 0.0) return f0;
        if (pi >= 1.0) return f_plus_1;
        return (phi(-std::log(pi)) + c_.C) / c_.k;
    }

    double df(double pi) const {
        if (pi <= 0.0) return 0.0;
        if (pi >= 1.0) return std::numeric_limits<double>::infinity();
        return -dphi(-std::log(pi)) / (c_.k * pi);
    }

    // Optimal c/x in the frozen regime, (φ/(1-γ))^{1/γ}.
    double c1_rate(double pi) const {
        if (pi >= 1.0) return 0.0;
        double z = (pi <= 0.0) ? std::numeric_limits<double>::infinity() : -std::log(pi);
        double v = (pi <= 0.0) ? asymptote : phi(z);
        return std::pow(v / (1.0 - c_.gamma), 1.0 / c_.gamma);
    }

    IlliquidProfile as_profile() const {
        auto self = std::make_shared<PhiProfile>(*this);
        IlliquidProfile out;
        out.gamma = c_.gamma;
        out.kind = "phi-quadrature";
        out.value = [self](double pi) { return self->f(pi); };
        out.derivative = [self](double pi) { return self->df(pi); };
        out.consumption = [self](double pi) { return self->c1_rate(pi); };
        return out;
    }

    double f0 = 0.0;
    double asymptote = 0.0;
    double f_plus_1 = 0.0;
    std::vector<double> grid;
    std::vector<double> values;

private:
    double integrand(double x) const { return 1.0 / (c_.gamma * c_.Htilde(x)); }

    void build_nodes() {
        const double a = asymptote;
        std::vector<double> xs;
        if (c_.gamma > 0.0) {
            xs.push_back(0.0);
            for (double u = 1e-12; u < 0.5; u *= 1.5) xs.push_back(a * u);
            std::vector<double> hi;
            for (double v = 0.5; v > kAsymptoteGap; v /= 1.5) hi.push_back(a * (1.0 - v));
            xs.insert(xs.end(), hi.begin(), hi.end());
            zs_.assign(xs.size(), 0.0);
            for (std::size_t j = 1; j < xs.size(); ++j)
                zs_[j] = zs_[j - 1] + num::gl16([this](double x) { return integrand(x); }, xs[j - 1], xs[j]);
        } else {
            const double g = c_.gamma;
            A_ = c_.k * std::pow(1.0 - g, 1.0 / g - 1.0);
            // Cut-off where the neglected tail terms are below 1e-12 relative.
            double X = std::max(std::pow(1e-8 * A_, g), 1e8 * (std::abs(c_.C) + a));
            std::vector<double> down;  // descending x, ascending z
            down.push_back(X);
            double x = X;
            while (x / 2.0 > 2.0 * a) {
                x /= 2.0;
                down.push_back(x);
            }
            for (double v = (x - a) / a / 1.5; v > kAsymptoteGap; v /= 1.5) down.push_back(a * (1.0 + v));
            xs = down;
            zs_.assign(xs.size(), 0.0);
            double s = std::pow(X, 1.0 / g);
            zs_[0] = s / A_ + s * s / (2.0 * A_ * A_);
            for (std::size_t j = 1; j < xs.size(); ++j)
                zs_[j] = zs_[j - 1] + num::gl16([this](double t) { return integrand(t); }, xs[j - 1], xs[j]);
        }
        xs_ = xs;
        for (std::size_t j = 1; j < zs_.size(); ++j)
            if (!(zs_[j] > zs_[j - 1])) fail(ErrorKind::NoConvergence, "phi quadrature nodes not increasing in z");
    }

    // Solve z_j + ∫_{x_j}^{x} dt/(γH̃) = z for x in the cell (x_j, x_{j+1}).
    double invert_in_cell(std::size_t j, double z) const {
        double xa = xs_[j], xb = xs_[j + 1];
        double za = zs_[j], zb = zs_[j + 1];
        auto resid = [&](double x) {
            return za + num::gl16([this](double t) { return integrand(t); }, xa, x) - z;
        };
        double lo = std::min(xa, xb), hi = std::max(xa, xb);
        double x = xa + (xb - xa) * (z - za) / (zb - za);
        for (int it = 0; it < 60; ++it) {
            double r = resid(x);
            if (std::abs(r) <= 1e-15 * std::max(1.0, std::abs(z))) return x;
            // dz/dx = integrand(x); keep the iterate inside the shrinking bracket.
            bool increasing = (xb > xa);
            bool below = (r < 0.0);
            if (below == increasing) lo = x; else hi = x;
            double step = r / integrand(x);
            double xn = x - step;
            if (!(xn > lo && xn < hi) || !std::isfinite(xn)) xn = 0.5 * (lo + hi);
            if (std::abs(xn - x) <= 4e-16 * std::abs(x)) return xn;
            x = xn;
        }
        return x;
    }

    PhiConstants c_{};
    double nu_ = 0.0;
    double A_ = 0.0;
    std::vector<double> xs_;
    std::vector<double> zs_;
};

inline PhiProfile solve_phi_generic(const ModelParams& p, const ProfileGrid& grid = {}) {
    const ModelParams q = validate_params(p);
    const MertonSolution m = require_finite(merton_hara(q));
    return PhiProfile::build(q, m.value_coeff, grid);
}

// γ = -1 closed form: F(π) = β⁻²{1 + η² + 2η(1+π^η)/(1-π^η)}, β = ρ + r + λ10.
struct HyperbolicForm {
    double beta;
    double eta;

    static HyperbolicForm from_anchor(const ModelParams& p, double anchor) {
        double beta = p.rho + p.r + p.lambda10;
        return {beta, std::sqrt(1.0 + beta * p.lambda10 * anchor)};
    }

    double F(double pi) const {
        if (pi >= 1.0) return std::numeric_limits<double>::infinity();
        double q = (pi <= 0.0) ? 0.0 : std::pow(pi, eta);
        double om = (pi <= 0.0) ? 1.0 : one_minus_pow(pi, eta);
        return (1.0 + eta * eta + 2.0 * eta * (1.0 + q) / om) / (beta * beta);
    }

    double dF(double pi) const {
        if (pi <= 0.0) return eta > 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
        if (pi >= 1.0) return std::numeric_limits<double>::infinity();
        double q = std::pow(pi, eta);
        double om = one_minus_pow(pi, eta);
        // d/dπ (1+q)/(1-q) = 2 q'/(1-q)², q' = η q/π.
        return 2.0 * eta * 2.0 * eta * q / pi / (om * om) / (beta * beta);
    }

    double c1_rate(double pi) const {
        if (pi >= 1.0) return 0.0;
        double q = (pi <= 0.0) ? 0.0 : std::pow(pi, eta);
        double om = (pi <= 0.0) ? 1.0 : one_minus_pow(pi, eta);
        return beta * om / std::sqrt((1.0 + q) * ((1.0 + eta) * (1.0 + eta) + q * (1.0 - eta) * (1.0 - eta)));
    }

    IlliquidProfile as_profile() const {
        IlliquidProfile out;
        out.gamma = -1.0;
        out.kind = "hyperbolic-closed-form";
        HyperbolicForm h = *this;
        out.value = [h](double pi) { return h.F(pi); };
        out.derivative = [h](double pi) { return h.dF(pi); };
        out.consumption = [h](double pi) { return h.c1_rate(pi); };
        return out;
    }
};

inline HyperbolicForm closed_form_hyperbolic(const ModelParams& p, double B) {
    if (p.gamma != -1.0) fail(ErrorKind::DomainError, "closed_form_hyperbolic requires gamma = -1");
    if (!(B > 0.0)) fail(ErrorKind::DomainError, "closed_form_hyperbolic requires B > 0");
    return HyperbolicForm::from_anchor(p, B);
}

// γ = 1/2: e^z = (1 + 2φ/(η+C))^{-1-C/η} (1 - 2φ/(η-C))^{-1+C/η},
// η = sqrt(2k + C²), solved for φ ∈ [0, (η-C)/2).
inline double implicit_sqrt_anchor(const ModelParams& p, double anchor, double z) {
    if (p.gamma != 0.5) fail(ErrorKind::DomainError, "implicit_sqrt requires gamma = 0.5");
    const double k = p.rho - 0.5 * p.r + p.lambda10;
    const double C = p.lambda10 * anchor;
    const double eta = std::sqrt(2.0 * k + C * C);
    const double top = 0.5 * (eta - C);
    if (z <= 0.0) return 0.0;
    auto zof = [&](double phi) {
        return (-1.0 - C / eta) * std::log1p(2.0 * phi / (eta + C)) + (-1.0 + C / eta) * std::log1p(-2.0 * phi / (eta - C));
    };
    auto g = [&](double phi) { return zof(phi) - z; };
    double hi = top;
    for (double d = 0.5; ; d *= 0.5) {
        hi = top * (1.0 - d);
        if (g(hi) > 0.0) break;
        if (d < 1e-300 || hi == top) return top;
    }
    return num::bisect(g, 0.0, hi, 0.0);
}

inline double implicit_sqrt(const ModelParams& p, double z) {
    return implicit_sqrt_anchor(p, require_finite(merton_hara(p)).value_coeff, z);
}

struct AbelRoots {
    double eta;
    double h1;
    double p;
    double q;
    double D;
};

// γ = -1/2: cubic k(x/1.5)³ - x - C with one real root h1 and complex pair p ± iq.
inline AbelRoots abel_roots(const ModelParams& par, double anchor) {
    if (par.gamma != -0.5) fail(ErrorKind::DomainError, "abel_roots requires gamma = -0.5");
    const double k = par.rho + 0.5 * par.r + par.lambda10;
    const double C = par.lambda10 * anchor;
    AbelRoots a{};
    a.D = 2.0 / 27.0 * k - 4.0 / 27.0 * k * k * C * C;
    if (!(a.D < 0.0)) fail(ErrorKind::WrongRegime, "Abel cubic discriminant is not negative");
    a.eta = 0.75 * std::pow(k, 2.0 / 3.0) * std::cbrt(4.0 * C + std::sqrt(16.0 * C * C - 8.0 / k));
    a.h1 = a.eta / k + 9.0 / (8.0 * a.eta);
    a.p = -0.5 * a.h1;
    a.q = std::sqrt(3.0) / 2.0 * (a.h1 - 9.0 / (4.0 * a.eta));
    return a;
}

inline double implicit_abel_anchor(const ModelParams& par, double anchor, double z) {
    const AbelRoots a = abel_roots(par, anchor);
    const double k = par.rho + 0.5 * par.r + par.lambda10;
    if (z <= 0.0) return std::numeric_limits<double>::infinity();
    const double rhs = -4.0 / 27.0 * ((a.h1 - a.p) * (a.h1 - a.p) + a.q * a.q) * k * z;
    auto lhs = [&](double phi) {
        double d = phi - a.p;
        return std::log(std::abs(phi - a.h1) / std::sqrt(d * d + a.q * a.q)) + (a.h1 - a.p) / a.q * std::atan(a.q / d);
    };
    auto g = [&](double phi) { return lhs(phi) - rhs; };
    double lo = a.h1;
    for (double d = 1.0; ; d *= 0.5) {
        lo = a.h1 * (1.0 + d);
        if (g(lo) < 0.0) break;
        if (d < 1e-300) return a.h1;
    }
    double hi = num::expand_upward(g, lo, 2.0 * lo);
    return num::bisect(g, lo, hi, 0.0);
}

inline double implicit_abel(const ModelParams& p, double z) {
    return implicit_abel_anchor(p, require_finite(merton_hara(p)).value_coeff, z);
}

}  // namespace liquidity
