#include "catch_amalgamated.hpp"

#include "liquidity/coupled_hjb.hpp"
#include "liquidity/infinite_log.hpp"
#include "oracles.hpp"

using namespace liquidity;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// ζ coded from scratch for the oracle scans.
double zeta_ref(double pi, const ModelParams& p) {
    const double s2 = p.sigma * p.sigma;
    const double g = pi * (1.0 - p.L) / (1.0 - pi * p.L);
    const double a = 1.0 + p.lambda10 / p.rho;
    double v = ((p.mu - p.r) * pi - 0.5 * s2 * pi * pi) / p.rho;
    if (p.lambda01 == 0.0) return v;
    const double om = 1.0 - std::pow(g, a);
    if (om <= 0.0) return -1e300;
    return v + p.lambda01 / (p.rho + p.lambda10) * std::log(om) + p.lambda01 / p.rho * std::log(1.0 - pi * p.L);
}

ModelParams base() { return base_params(0.0); }

}  // namespace

TEST_CASE("zeta without shocks is the Merton objective", "[log]") {
    ModelParams p = base();
    p.lambda01 = 0.0;
    for (double pi : {0.0, 0.3, 0.9, 0.99})
        CHECK_THAT(zeta(pi, p), WithinAbs(((p.mu - p.r) * pi - pi * pi * p.sigma * p.sigma / 2) / p.rho, 1e-14));
    CHECK_THAT(argmax_zeta(p), WithinAbs(merton_log(p).pi_hat, 1e-12));
    CHECK(zeta(0.0, base()) == 0.0);
}

TEST_CASE("zeta maximiser agrees with a dense golden-section scan", "[log][oracle]") {
    for (double L : {0.0, 0.1}) {
        ModelParams p = base();
        p.L = L;
        auto f = [&](double x) { return zeta_ref(x, p); };
        const double ref = oracle::argmax(f, 0.0, 1.0 - 1e-9, 1000000);
        CHECK_THAT(solve_log(p).pi_star, WithinAbs(ref, 1e-6));
        CHECK_THAT(zeta(0.879, p), WithinAbs(zeta_ref(0.879, p), 1e-12));
    }
}

TEST_CASE("log closed form reproduces the printed fractions and losses", "[log][printed]") {
    ModelParams p = base();
    LogSolution s = solve_log(p);
    CHECK_THAT(s.pi_star, WithinAbs(0.879, 5e-4));
    CHECK_THAT(100.0 * efficiency_loss_log(s), WithinAbs(1.08, 5e-3));

    ModelParams q = base();
    q.L = 0.1;
    // 0.5202 here; the printed 0.521 sits inside the table tolerance.
    CHECK_THAT(solve_log(q).pi_star, WithinAbs(0.521, 2e-3));

    ModelParams f = base();
    f.lambda01 = 0.5;
    f.lambda10 = 10.0;
    CHECK_THAT(100.0 * efficiency_loss_log(solve_log(f)), WithinAbs(1.06, 5e-3));
}

TEST_CASE("log closed form without shocks is Merton", "[log]") {
    ModelParams p = base();
    p.lambda01 = 0.0;
    LogSolution s = solve_log(p);
    CHECK_THAT(s.pi_star, WithinAbs(merton_log(p).pi_hat, 1e-12));
    CHECK_THAT(s.b, WithinAbs(merton_log(p).value_coeff, 1e-10));
    CHECK_THAT(efficiency_loss_log(s), WithinAbs(0.0, 1e-12));
}

TEST_CASE("log closed form rejects alpha != r", "[log]") {
    ModelParams p = base();
    p.alpha = 0.04;
    try {
        solve_log(p);
        FAIL("expected UnsupportedModel");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnsupportedModel);
    }
}

TEST_CASE("log solution invariants", "[log][property]") {
    ModelParams p = base();
    LogSolution s = solve_log(p);
    CHECK(s.c0_rate == p.rho);
    CHECK(s.pi_star >= 0.0);
    CHECK(s.pi_star < merton_log(p).pi_hat);
    CHECK(s.c1_rate(0.0) == s.c0_rate);
    // π^{1+λ10/ρ} underflows the spacing of doubles below π ≈ 0.4, so
    // strictness is only checked where it is representable.
    double prev_h = s.h(0.0);
    for (int i = 1; i < 1000; ++i) {
        double pi = i / 1000.0;
        double h = s.h(pi);
        REQUIRE(s.c1_rate(pi) <= s.c0_rate);
        REQUIRE(s.c1_rate(pi) >= 0.0);
        REQUIRE(h <= prev_h);
        if (pi >= 0.5) {
            REQUIRE(s.c1_rate(pi) < s.c0_rate);
            REQUIRE(h < prev_h);
        }
        prev_h = h;
    }
    CHECK(s.h(1.0 - 1e-9) < s.h(0.999) - 5.0);
    CHECK(std::isinf(s.h(1.0)));
}

TEST_CASE("closed-form log solution satisfies the HJB system", "[log][property]") {
    for (double L : {0.0, 0.1}) {
        ModelParams p = base();
        p.L = L;
        LogSolution s = solve_log(p);
        std::vector<double> grid;
        for (int i = 1; i <= 1000; ++i) grid.push_back(i / 1000.0 * (1.0 - 1e-4));
        ResidualReport r = hjb_residual(p, s.profile(), s.b, grid);
        CHECK(r.illiquid_max < 1e-8);
        CHECK(r.liquid < 1e-8);
    }
}

TEST_CASE("log asymptotics reproduce the printed expansion columns", "[log][printed]") {
    ModelParams p = base();
    LogAsymptotics a = asymptotic_log(p);
    CHECK_THAT(a.pi_approx, WithinAbs(0.846, 5e-4));
    CHECK_THAT(100.0 * a.loss_approx, WithinAbs(1.15, 1e-2));
    CHECK(a.pi1 >= 0.0);

    ModelParams q = base();
    q.lambda10 = 4.0;
    CHECK_THAT(asymptotic_log(q).pi_approx, WithinAbs(0.899, 5e-4));
}

TEST_CASE("log pi1 vanishes for L = 0 and slow recovery discounting", "[log]") {
    double prev = 1.0;
    for (double l10 : {2.0, 10.0, 50.0, 200.0}) {
        ModelParams p = base();
        p.lambda10 = l10;
        double pi1 = asymptotic_log(p).pi1;
        CHECK(pi1 < prev);
        prev = pi1;
    }
    CHECK(prev < 1e-20);
}

TEST_CASE("interior log expansion error is O(lambda01^2)", "[log][property]") {
    std::vector<double> ratio;
    for (double l01 : {1e-2, 1e-3, 1e-4}) {
        ModelParams p = base();
        p.lambda01 = l01;
        double err = std::abs(solve_log(p).pi_star - asymptotic_log(p).pi_approx);
        ratio.push_back(err / (l01 * l01));
    }
    double lo = *std::min_element(ratio.begin(), ratio.end());
    double hi = *std::max_element(ratio.begin(), ratio.end());
    CHECK(hi / lo < 2.0);
}

TEST_CASE("exact loss stays below the first-order loss on the log presets", "[log][property]") {
    const std::vector<std::pair<const char*, std::map<std::string, double>>> presets{
        {"base", {}},
        {"lambda01=0.05", {{"lambda01", 0.05}}},
        {"lambda01=0.02", {{"lambda01", 0.02}}},
        {"lambda10=4", {{"lambda10", 4.0}}},
        {"L=0.1", {{"L", 0.1}}},
        {"lambda01=0.5,lambda10=10", {{"lambda01", 0.5}, {"lambda10", 10.0}}}};
    for (const auto& [label, ov] : presets) {
        ModelParams p = base();
        for (const auto& [k, v] : ov) {
            if (k == "lambda01") p.lambda01 = v;
            if (k == "lambda10") p.lambda10 = v;
            if (k == "L") p.L = v;
        }
        INFO(label);
        CHECK(efficiency_loss_log(solve_log(p)) <= p.lambda01 * asymptotic_log(p).theta1);
    }
}

TEST_CASE("large-Sharpe log regime", "[log]") {
    ModelParams p = base();
    p.lambda10 = p.rho;
    p.mu = p.r + 2.0 * p.sigma * p.sigma;
    LogAsymptotics a = large_sharpe_log(p);
    CHECK_THAT(a.one_minus_pi_coeff, WithinRel(1.0 / (2.0 * p.sigma * p.sigma), 1e-12));
    CHECK_THAT(a.loglog_coeff, WithinRel(1.0 / (p.rho * (p.rho + p.lambda10)), 1e-14));
    for (double l01 : {1e-4, 1e-5}) {
        p.lambda01 = l01;
        auto f = [&](double x) { return zeta_ref(x, p); };
        // Search the boundary layer directly: 1 − π* is O(λ01).
        const double ref = oracle::argmax(f, 1.0 - 100.0 * l01, 1.0 - 1e-3 * l01, 200000);
        CHECK_THAT((1.0 - ref) / (l01 * a.one_minus_pi_coeff), WithinAbs(1.0, 0.05));
        CHECK_THAT(solve_log(p).pi_star, WithinAbs(ref, 1e-9));
    }
    double prev = 0.0;
    for (double l01 : {1e-2, 1e-3, 1e-4, 1e-5}) {
        p.lambda01 = l01;
        double pi = solve_log(p).pi_star;
        CHECK(pi > prev);
        prev = pi;
    }
    CHECK(prev > 0.999);

    try {
        large_sharpe_log(base());
        FAIL("expected WrongRegime");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::WrongRegime);
    }
}

TEST_CASE("frozen-regime fraction path", "[log]") {
    ModelParams p = base();
    std::vector<double> t{0.0, 0.5, 1.0, 5.0};
    for (double v : illiquid_fraction_path(0.0, p, t)) CHECK(v == 0.0);
    for (double v : illiquid_fraction_path(1.0, p, t)) CHECK(v == 1.0);

    const double a = 1.0 + p.lambda10 / p.rho;
    auto rhs = [&](double, double y) { return p.rho * y * (1.0 - std::pow(y, a)); };
    const double ref = oracle::rk4(rhs, 0.5, 0.0, 1.0, 100000);
    std::vector<double> path = illiquid_fraction_path(0.5, p, {1.0});
    CHECK_THAT(path[0], WithinAbs(ref, 1e-8));

    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(0.2 * i);
    std::vector<double> mono = illiquid_fraction_path(0.3, p, grid);
    for (std::size_t i = 1; i < mono.size(); ++i) {
        CHECK(mono[i] >= mono[i - 1]);
        CHECK(mono[i] <= 1.0);
    }
}
