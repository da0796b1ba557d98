#include <cmath>
#include <random>

#include "doctest.h"
#include "rovella/conditions.hpp"
#include "rovella/errors.hpp"
#include "rovella/map_family.hpp"
#include "rovella/neighborhoods.hpp"

using namespace rovella;

TEST_SUITE("map_core") {

TEST_CASE("fixture values") {
    FixtureFamily f(2, 0.01);
    CHECK(evaluate(f, 0, 1) == doctest::Approx(1).epsilon(1e-15));
    CHECK(evaluate(f, 0, 0.5) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(evaluate(f, 0, -0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(evaluate(f, 0.01, 0.5) == doctest::Approx(1.99 * 0.25 - 1).epsilon(1e-15));
}

TEST_CASE("fixture derivatives") {
    FixtureFamily f(2, 0.01);
    CHECK(derivative(f, 0, 0.5) == doctest::Approx(2).epsilon(1e-15));
    CHECK(derivative(f, 0, 1) == doctest::Approx(4).epsilon(1e-15));
    for (double x : {1e-3, 1e-6, 1e-9}) {
        CHECK(derivative(f, 0, x) / x == doctest::Approx(4).epsilon(1e-12));
        CHECK(derivative(f, 0, -x) / x == doctest::Approx(4).epsilon(1e-12));
    }
}

TEST_CASE("schwarzian closed form") {
    FixtureFamily f2(2, 0.01);
    FixtureFamily f3(3, 0.01);
    CHECK(schwarzian(f2, 0, 0.5) == doctest::Approx(-6).epsilon(1e-12));
    CHECK(schwarzian(f2, 0, -0.5) == doctest::Approx(-6).epsilon(1e-12));
    CHECK(schwarzian(f3, 0, 1) == doctest::Approx(-4).epsilon(1e-12));
}

TEST_CASE("domain errors") {
    FixtureFamily f(2, 0.01);
    CHECK_THROWS_AS(evaluate(f, 0, 0), DomainError);
    CHECK_THROWS_AS(evaluate(f, 0.02, 0.5), DomainError);
    CHECK_THROWS_AS(evaluate(f, 0, 1.5), DomainError);
    CHECK_THROWS_AS(derivative(f, 0, 0), DomainError);
    CHECK_THROWS_AS(schwarzian(f, 0, 0), DomainError);
}

TEST_CASE("finite differences agree with derivatives") {
    std::mt19937_64 rng(11);
    for (double s : {2.0, 2.5, 3.0}) {
        FixtureFamily f(s, 0.01);
        std::uniform_real_distribution<double> ux(0.01, 0.99);
        std::uniform_real_distribution<double> ut(-0.01, 0.01);
        for (int i = 0; i < 2000; ++i) {
            const double x = (i % 2 ? 1 : -1) * ux(rng);
            const double t = ut(rng);
            const double h = 1e-6;
            const double fd = (evaluate(f, t, x + h) - evaluate(f, t, x - h)) / (2 * h);
            CHECK(std::fabs(fd - derivative(f, t, x)) <= 1e-6 * std::fabs(derivative(f, t, x)));

            const double k = 1e-4;
            const double dp = derivative(f, t, x + k);
            const double d0 = derivative(f, t, x);
            const double dm = derivative(f, t, x - k);
            const double d2 = (dp - dm) / (2 * k);
            const double d3 = (dp - 2 * d0 + dm) / (k * k);
            const double fd_s = d3 / d0 - 1.5 * (d2 / d0) * (d2 / d0);
            const double sw = schwarzian(f, t, x);
            CHECK(std::fabs(fd_s - sw) <= 1e-4 * std::fabs(sw));
        }
    }
}

TEST_CASE("admissible in t") {
    FixtureFamily f(2, 0.01);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(-1, 1);
    std::uniform_real_distribution<double> ut(-0.01, 0.01);
    for (int i = 0; i < 1000; ++i) {
        const double x = ux(rng);
        if (x == 0) continue;
        const double t1 = ut(rng);
        const double t2 = ut(rng);
        CHECK(std::fabs(evaluate(f, t1, x) - evaluate(f, t2, x)) <= std::fabs(t1 - t2) + 1e-15);
    }
}

TEST_CASE("inverse branches") {
    FixtureFamily f(2, 0.01);
    for (double y : {-0.99, -0.5, 0.0, 0.3, 0.97}) {
        for (Side side : {Side::negative, Side::positive}) {
            const long double x = f.inverse(0.004, side, y);
            CHECK(static_cast<double>(f.value(0.004, x)) == doctest::Approx(y).epsilon(1e-14));
        }
    }
}

TEST_CASE("critical neighborhoods") {
    FixtureFamily f(2, 0.01);
    const CriticalNeighborhoods b = tilde_b(f, 0, 0.1);
    CHECK(b.positive.hi == doctest::Approx(0.22360680).epsilon(1e-8));
    CHECK(b.negative.lo == doctest::Approx(-0.22360680).epsilon(1e-8));
    CHECK(b.measure() == doctest::Approx(0.4472136).epsilon(1e-7));
    CHECK(b.d_ratio == doctest::Approx(0.4472136).epsilon(1e-7));
    CHECK(std::fabs(evaluate(f, 0, b.positive.hi) - (-0.9)) <= 1e-10);
    CHECK(std::fabs(evaluate(f, 0, b.negative.lo) - 0.9) <= 1e-10);
    double prev = b.measure();
    for (double d : {0.01, 1e-3, 1e-4, 1e-6}) {
        const double m = tilde_b(f, 0.005, d).measure();
        CHECK(m < prev);
        prev = m;
    }
    CHECK(prev < 2e-3);
    CHECK_THROWS_AS(tilde_b(f, 0, 2.5), DeltaTooLarge);
    CHECK_THROWS_AS(tilde_b(f, 0, 0), DomainError);
}

TEST_CASE("verify conditions on the fixture") {
    FixtureFamily f(2, 0.01);
    GridSpec grid;
    grid.x_points = 2000;
    const ConditionReport r = verify_conditions(f, grid);
    CHECK(r.c1_limits);
    CHECK(r.c2_monotone);
    CHECK(r.c2_envelope);
    CHECK(r.c3_negative_schwarzian);
    CHECK(r.range_ok);
    CHECK(r.r1);
    CHECK(r.lambda == doctest::Approx(4).epsilon(1e-12));
    CHECK(r.r2);
    CHECK_FALSE(r.r3);
    CHECK(r.admissible_t_lipschitz);
    CHECK(r.required_pass());
    CHECK(r.k1_empirical >= f.k1() - 1e-12);
    CHECK(r.k2_empirical <= f.k2() + 1e-12);
    CHECK(r.distortion_constant > 0);
    CHECK(r.summability_plus.back() == doctest::Approx(4.0 / 3).epsilon(1e-6));
}

TEST_CASE("tabulated family with a linear profile matches the fixture") {
    nlohmann::json spec = {{"kind", "table"},
                           {"s", 2.0},
                           {"eps_max", 0.01},
                           {"K1", 3.98},
                           {"K2", 4.0},
                           {"positive", {{"u", {0.0, 0.25, 0.5, 0.75, 1.0}}, {"y", {-1.0, -0.5, 0.0, 0.5, 1.0}}}},
                           {"negative", {{"u", {0.0, 0.5, 1.0}}, {"y", {1.0, 0.0, -1.0}}}}};
    const FamilyPtr table = make_family(spec);
    FixtureFamily f(2, 0.01);
    for (double x : {-0.9, -0.3, -1e-4, 2e-3, 0.4, 0.99}) {
        CHECK(evaluate(*table, 0.007, x) == doctest::Approx(evaluate(f, 0.007, x)).epsilon(1e-12));
        CHECK(derivative(*table, 0.007, x) == doctest::Approx(derivative(f, 0.007, x)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(make_family({{"kind", "spiral"}}), ParamError);
}

}  // TEST_SUITE
