#include "catch_amalgamated.hpp"

#include "liquidity/dks.hpp"
#include "liquidity/homogenized.hpp"
#include "liquidity/infinite_log.hpp"
#include "oracles.hpp"

using namespace liquidity;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModelParams dks_base(double L) {
    ModelParams p = base_params(0.0);
    p.L = L;
    return p;
}

// f⁰ at t = T − τ by RK4 on the regime pair in time to go,
//   F0' = r + (μ−r)π − ½σ²π² + λ01 (F1 − F0),  F1' = r + λ10 (F0 + log(1−πL) − F1),
// with F0(0) = 0 and F1(0) = log(1−πL).
double f0_rk4(const ModelParams& p, double pi, double tau, long steps = 20000) {
    const double lg = std::log1p(-pi * p.L);
    const double q = p.r + (p.mu - p.r) * pi - 0.5 * p.sigma * p.sigma * pi * pi;
    double F0 = 0.0, F1 = lg;
    const double h = tau / steps;
    auto d0 = [&](double a, double b) { return q + p.lambda01 * (b - a); };
    auto d1 = [&](double a, double b) { return p.r + p.lambda10 * (a + lg - b); };
    for (long i = 0; i < steps; ++i) {
        const double a1 = d0(F0, F1), b1 = d1(F0, F1);
        const double a2 = d0(F0 + 0.5 * h * a1, F1 + 0.5 * h * b1), b2 = d1(F0 + 0.5 * h * a1, F1 + 0.5 * h * b1);
        const double a3 = d0(F0 + 0.5 * h * a2, F1 + 0.5 * h * b2), b3 = d1(F0 + 0.5 * h * a2, F1 + 0.5 * h * b2);
        const double a4 = d0(F0 + h * a3, F1 + h * b3), b4 = d1(F0 + h * a3, F1 + h * b3);
        F0 += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        F1 += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    }
    return F0;
}

}  // namespace

TEST_CASE("terminal-wealth allocation", "[dks]") {
    ModelParams p = dks_base(0.0);
    CHECK(dks_pi_star(p) == (p.mu - p.r) / (p.sigma * p.sigma));

    ModelParams q = dks_base(0.1);
    const double s2 = q.sigma * q.sigma;
    auto foc = [&](double x) { return (q.mu - q.r) - s2 * x - q.lambda01 * q.L / (1.0 - q.L * x); };
    const double ref = oracle::bisect(foc, 0.0, 1.0);
    CHECK_THAT(dks_pi_star(q), WithinAbs(ref, 1e-9));
    CHECK_THAT(dks_solve(q, 2.0).pi_star, WithinAbs(0.520, 5e-4));
    // Losing part of the position at a freeze can only shrink the holding.
    CHECK(dks_pi_star(q) < dks_pi_star(p));
}

TEST_CASE("value functions against the regime ODE pair", "[dks][oracle]") {
    for (double L : {0.0, 0.1}) {
        const ModelParams p = dks_base(L);
        const double T = 5.0;
        DksSolution s = dks_solve(p, T);
        CHECK(s.f0(T) == 0.0);
        CHECK_THAT(s.f1(T, 0.7), WithinAbs(std::log1p(-0.7 * L), 1e-15));
        for (double t : {0.0, 2.5, 4.9}) {
            INFO("L " << L << " t " << t);
            CHECK_THAT(s.f0(t), WithinAbs(f0_rk4(p, s.pi_star, T - t), 1e-9));
        }
        ModelParams q = p;
        q.lambda01 = 0.0;
        DksSolution m = dks_solve(q, T);
        CHECK_THAT(m.f0(0.0), WithinAbs(m.f0_merton(0.0), 1e-12));
        CHECK_THAT(m.theta(0.0), WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("small-lambda01 allocation expansion", "[dks][property]") {
    std::vector<double> ratio;
    for (double l01 : {1e-2, 1e-3, 1e-4}) {
        ModelParams p = dks_base(0.1);
        p.lambda01 = l01;
        ratio.push_back(std::abs(dks_pi_star(p) - dks_asymptotics(p).pi_approx) / (l01 * l01));
    }
    const double lo = *std::min_element(ratio.begin(), ratio.end());
    const double hi = *std::max_element(ratio.begin(), ratio.end());
    CHECK(hi / lo < 2.0);
    try {
        ModelParams p = dks_base(0.1);
        p.mu = p.r;
        dks_asymptotics(p);
        FAIL("expected WrongRegime");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::WrongRegime);
    }
}

TEST_CASE("first-order terminal-wealth loss", "[dks][property]") {
    for (double L : {0.0, 0.1}) {
        ModelParams p = dks_base(L);
        const double T = 5.0;
        DksSolution s = dks_solve(p, T);
        CHECK(s.theta1(T) == 0.0);
        double prev = s.theta1(0.0);
        CHECK(prev > 0.0);
        for (int i = 1; i <= 100; ++i) {
            const double v = s.theta1(T * i / 100.0);
            REQUIRE(v <= prev);
            prev = v;
        }
        // Θ/λ01 − Θ1 = O(λ01).
        std::vector<double> err;
        for (double l01 : {1e-3, 1e-4}) {
            ModelParams q = p;
            q.lambda01 = l01;
            DksSolution d = dks_solve(q, T);
            err.push_back(std::abs(d.theta(0.0) / l01 - d.theta1(0.0)));
        }
        INFO("L " << L);
        CHECK_THAT(err[0] / err[1], WithinRel(10.0, 0.2));
    }
}

TEST_CASE("fast recovery leaves only the jump loss", "[dks]") {
    ModelParams p = dks_base(0.1);
    const double T = 3.0;
    const double jump = -std::log1p(-(p.mu - p.r) * p.L / (p.sigma * p.sigma)) * T;
    double prev = 1e300;
    for (double l10 : {2.0, 20.0, 200.0, 2000.0}) {
        p.lambda10 = l10;
        const double gap = std::abs(dks_solve(p, T).theta1(0.0) - jump);
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev < 1e-3 * jump);
}

TEST_CASE("consumption-induced allocation gap", "[dks][property]") {
    std::vector<double> ratio;
    for (double l01 : {1e-3, 1e-4}) {
        ModelParams p = dks_base(0.0);
        p.lambda01 = l01;
        const double gap = dks_pi_star(p) - solve_log(p).pi_star;
        const DksAsymptotics a = dks_asymptotics(p);
        CHECK(gap > 0.0);
        CHECK(a.consumption_gap > 0.0);
        CHECK(a.consumption_gap_display > 0.0);
        ratio.push_back(std::abs(gap - a.consumption_gap) / (l01 * l01));
    }
    CHECK(std::max(ratio[0], ratio[1]) / std::min(ratio[0], ratio[1]) < 2.0);
}

TEST_CASE("homogenized terminal-wealth problem", "[dks][homogenized]") {
    ModelParams p = dks_base(0.0);
    const double T = 4.0;
    DksHomogenized h = dks_homogenized(p, T, 0.0);
    const double th = sharpe(p);
    const double lb = p.lambda10 / (p.lambda01 + p.lambda10);
    CHECK_THAT(h.theta_tilde, WithinAbs(th, 1e-15));
    CHECK_THAT(h.pi_star, WithinAbs(0.9, 1e-14));
    CHECK_THAT(h.theta_loss(0.0), WithinAbs(-std::expm1(T * th * th * (lb - 1.0) / 2.0), 1e-15));
    CHECK(h.theta_loss(T) == 0.0);

    // Rescaled solutions approach the limit.
    const double Lb = 0.1;
    const DksHomogenized lim = dks_homogenized(p, T, Lb);
    double prev = 1e300;
    for (double eps : {0.1, 0.01, 0.001}) {
        DksSolution s = dks_solve(fast_switching(p, eps, Lb), T);
        const double gap = std::abs(s.f0(0.0) - lim.f0(0.0));
        INFO("eps " << eps);
        CHECK(gap < prev);
        CHECK_THAT(s.pi_star, WithinAbs(lim.pi_star, 20.0 * eps));
        prev = gap;
    }
    CHECK(prev < 1e-2 * std::abs(lim.f0(0.0)));
}

TEST_CASE("terminal-wealth solver rejects unsupported inputs", "[dks]") {
    ModelParams p = dks_base(0.1);
    p.alpha = 0.03;
    try {
        dks_solve(p, 1.0);
        FAIL("expected DomainError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DomainError);
    }
    try {
        dks_solve(dks_base(0.1), 0.0);
        FAIL("expected InvalidParams");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidParams);
    }
}
