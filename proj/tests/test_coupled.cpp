#include "catch_amalgamated.hpp"

#include "liquidity/coupled_hjb.hpp"

using namespace liquidity;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("coupled solve without shocks is Merton", "[coupled]") {
    for (double g : {0.0, -1.0, 0.5}) {
        ModelParams p = base_params(g);
        p.lambda01 = 0.0;
        CoupledSolution s = solve_coupled(p);
        INFO("gamma " << g);
        CHECK(s.iterations <= 3);
        CHECK_THAT(s.v0_coeff, WithinRel(merton(p).value_coeff, 1e-10));
        CHECK_THAT(s.pi_star, WithinAbs(0.9, 1e-8));
    }
}

TEST_CASE("coupled log solve matches the closed form", "[coupled][oracle]") {
    for (double L : {0.0, 0.1}) {
        ModelParams p = base_params(0.0);
        p.L = L;
        CoupledSolution c = solve_coupled(p);
        LogSolution e = solve_log(p);
        CHECK_THAT(c.v0_coeff, WithinAbs(e.b, 1e-8));
        CHECK_THAT(c.pi_star, WithinAbs(e.pi_star, 1e-8));
    }
}

TEST_CASE("coupled hyperbolic solve", "[coupled][printed]") {
    ModelParams p = base_params(-1.0);
    CoupledSolution c = solve_coupled(p);
    CHECK_THAT(c.pi_star, WithinAbs(0.857, 5e-4));
    // Same fixed point as the closed-form B <-> η iteration.
    CHECK_THAT(c.v0_coeff, WithinRel(solve_hyperbolic(p).b, 1e-8));
}

TEST_CASE("HJB residual responds to a perturbed liquid value", "[coupled]") {
    ModelParams p = base_params(0.0);
    LogSolution s = solve_log(p);
    ResidualReport exact = hjb_residual(p, s.profile(), s.b);
    CHECK(exact.max() < 1e-8);
    const double bumped = s.b + 0.01 * std::abs(s.b);
    ResidualReport off = hjb_residual(p, s.profile(), bumped);
    CHECK(off.max() > exact.max());
    CHECK(off.liquid > 1e-4);

    ModelParams q = base_params(-1.0);
    CoupledSolution c = solve_coupled(q);
    ResidualReport r0 = hjb_residual(c, q);
    ResidualReport r1 = hjb_residual(q, c.v1, 1.01 * c.v0_coeff);
    CHECK(r1.max() > r0.max());
}

TEST_CASE("converged solutions have small HJB residuals", "[coupled][property]") {
    for (double g : {0.0, -1.0, -0.5, 0.5, -2.0}) {
        for (double L : {0.0, 0.1}) {
            ModelParams p = base_params(g);
            p.L = L;
            CoupledSolution c = solve_coupled(p);
            INFO("gamma " << g << " L " << L);
            CHECK(c.residual < 1e-6);
            CHECK(c.fp_residual < 1e-9);
        }
    }
}

TEST_CASE("alpha below r uses the marched profile", "[coupled]") {
    for (double g : {0.0, -1.0, -2.0, 0.5}) {
        ModelParams p = base_params(g);
        p.alpha = 0.03;
        CoupledSolution c = solve_coupled(p);
        INFO("gamma " << g);
        CHECK(c.residual < 1e-6);
        CHECK(c.theta() > 0.0);
        // A slower illiquid asset makes freezes costlier.
        ModelParams q = base_params(g);
        CHECK(c.theta() > solve_coupled(q).theta());
    }
    // Continuity in α at α = r.
    ModelParams p = base_params(0.0);
    p.alpha = p.r - 1e-7;
    CoupledSolution c = solve_coupled(p);
    LogSolution e = solve_log(base_params(0.0));
    CHECK_THAT(c.v0_coeff, WithinAbs(e.b, 1e-5));
    CHECK_THAT(c.pi_star, WithinAbs(e.pi_star, 1e-5));
}

TEST_CASE("crunch behaviour of the illiquid profile", "[coupled]") {
    CoupledSolution pos = solve_coupled(base_params(0.5));
    CHECK(std::isfinite(pos.v1.value(1.0 - 1e-9)));
    CHECK(pos.v1.value(1.0 - 1e-9) > 0.0);
    CoupledSolution neg = solve_coupled(base_params(-1.0));
    CHECK(neg.v1.value(1.0 - 1e-9) > 1e3 * neg.v1.value(0.0));
    CoupledSolution lg = solve_coupled(base_params(0.0));
    CHECK(lg.v1.value(1.0 - 1e-9) < lg.v1.value(0.0) - 5.0);
}

TEST_CASE("loss is nondecreasing and pi* nonincreasing in lambda01 and L", "[coupled][property]") {
    for (double g : {0.0, -1.0, 0.5}) {
        double prev = -1.0, prev_pi = 1.0;
        for (double l01 : {0.0, 0.02, 0.05, 0.1, 0.2}) {
            ModelParams p = base_params(g);
            p.lambda01 = l01;
            const CoupledSolution s = solve_coupled(p);
            INFO("gamma " << g << " lambda01 " << l01);
            CHECK(s.theta() >= prev);
            CHECK(s.pi_star <= prev_pi + 1e-9);
            prev = s.theta();
            prev_pi = s.pi_star;
        }
        prev = -1.0;
        prev_pi = 1.0;
        for (double L : {0.0, 0.05, 0.1, 0.2}) {
            ModelParams p = base_params(g);
            p.L = L;
            const CoupledSolution s = solve_coupled(p);
            INFO("gamma " << g << " L " << L);
            CHECK(s.theta() >= prev);
            CHECK(s.pi_star <= prev_pi + 1e-9);
            prev = s.theta();
            prev_pi = s.pi_star;
        }
    }
}

TEST_CASE("coupled value departs from the first-order value at second order", "[coupled][property]") {
    for (double g : {-1.0, 0.5}) {
        std::vector<double> ratio;
        for (double l01 : {1e-2, 1e-3}) {
            ModelParams p = base_params(g);
            p.lambda01 = l01;
            const double fh = merton_hara(p).value_coeff;
            const double b1 = asymptotic_hara(p).b1;
            ratio.push_back(std::abs(solve_coupled(p).v0_coeff - (fh + l01 * b1)) / (l01 * l01));
        }
        INFO("gamma " << g);
        CHECK(std::max(ratio[0], ratio[1]) / std::min(ratio[0], ratio[1]) < 2.0);
    }
}

TEST_CASE("non-convergence is reported as an error", "[coupled]") {
    CoupledOptions opt;
    opt.max_evaluations = 2;
    opt.tol = 1e-15;
    try {
        solve_coupled(base_params(-1.0), opt);
        FAIL("expected NoConvergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NoConvergence);
    }
}
