#include <cmath>
#include <random>

#include "doctest.h"
#include "rovella/branches.hpp"
#include "rovella/errors.hpp"
#include "rovella/orbit.hpp"

using namespace rovella;

namespace {

// 2x^2 - 1 on each side, except that x = 0.5 goes straight to the singularity.
class Trapdoor final : public MapFamily {
public:
    Trapdoor() : MapFamily(2, 0.01, 4, 4) {}
    long double value(long double, long double x) const override {
        if (x == 0.5L) return 0;
        return (x > 0 ? 1 : -1) * (2 * x * x - 1);
    }
    long double derivative(long double, long double x) const override { return 4 * std::fabs(x); }
    Jet jet(long double t, long double x) const override {
        return {value(t, x), derivative(t, x), x > 0 ? 4.0L : -4.0L, 0};
    }
    long double limit_at_zero(long double, Side side) const override { return side == Side::positive ? -1 : 1; }
    nlohmann::json to_json() const override { return {{"kind", "trapdoor"}}; }
};

}  // namespace

TEST_SUITE("orbit_engine") {

TEST_CASE("fixed point orbit") {
    FixtureFamily f(2, 0.01);
    const OrbitTrace tr = iterate(f, stream(1, 0), 1.0, 5, 0.1);
    CHECK(tr.length() == 5);
    for (double x : tr.points) CHECK(x == 1.0);
    CHECK(tr.log_der[0] == 0.0);
    CHECK(tr.log_der[5] == doctest::Approx(5 * std::log(4.0)).epsilon(1e-14));
    CHECK(a_sum(tr, 3) == doctest::Approx(21).epsilon(1e-13));
    CHECK(a_sum(tr, 1) == 1.0);
}

TEST_CASE("single step") {
    FixtureFamily f(2, 0.01);
    const OrbitTrace tr = iterate(f, stream(1, 0), 0.5, 1, 0.1);
    CHECK(tr.points[1] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(tr.log_der[0] == 0.0);
    const OrbitTrace two = iterate(f, stream(1, 0), 0.5, 2, 0.1);
    CHECK(a_sum(two, 2) == doctest::Approx(6).epsilon(1e-13));
    CHECK(a_sum(two, 1) == 1 / 0.5);
}

TEST_CASE("return depth") {
    FixtureFamily f(2, 0.01);
    CHECK(return_depth(f, 0, 0.5, 0.1) == 0);
    CHECK(return_depth(f, 0, 0.1, 0.5) == 3);
    CHECK(return_depth(f, 0, -0.1, 0.5) == 3);
    CHECK(return_depth(f, 0, 0.9, 0.2) == 0);
    CHECK_THROWS_AS(return_depth(f, 0, 0.0, 0.1), DomainError);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 2000; ++i) {
        const double x = u(rng);
        const double d = 1e-3;
        const int r = return_depth(f, 0.003, x, d);
        const double lhs = derivative(f, 0.003, x) * std::fabs(x);
        CHECK(lhs >= std::exp(-r) * d * (1 - 1e-15));
        if (r > 0) CHECK(lhs < std::exp(-(r - 1)) * d);
    }
}

TEST_CASE("trace bookkeeping") {
    FixtureFamily f(2, 0.01);
    const NoiseStream noise = stream(3, 0.01);
    const double delta = 0.01;
    const OrbitTrace tr = iterate(f, noise, 0.37, 400, delta);
    const CriticalNeighborhoods b = tilde_b(f, 0, delta);
    for (std::size_t i = 0; i < tr.points.size(); ++i) {
        const double x = tr.points[i];
        CHECK(std::fabs(x) <= 1);
        CHECK(x != 0);
        CHECK(tr.depths[i] == return_depth(f, noise.get(static_cast<std::int64_t>(i)), x, delta));
        CHECK(static_cast<bool>(tr.visits[i]) == b.contains(x));
    }
    double prev = 0;
    for (int n = 1; n <= 400; ++n) {
        const double a = a_sum(tr, n);
        CHECK(a >= prev);
        prev = a;
    }
}

TEST_CASE("cocycle additivity") {
    FixtureFamily f(2, 0.01);
    const NoiseStream noise = stream(1, 0.01);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const double x0 = u(rng);
        const int n = 1 + static_cast<int>(rng() % 300);
        const OrbitTrace tr = iterate(f, noise, x0, n, 0.01);
        const int m = static_cast<int>(rng() % static_cast<unsigned>(n));
        const OrbitTrace tail = iterate(f, noise.shifted(m), tr.points[static_cast<std::size_t>(m)], n - m, 0.01);
        const double joined = tail.log_der.back() + tr.log_der[static_cast<std::size_t>(m)];
        CHECK(std::fabs(joined - tr.log_der.back()) <= 1e-9 * std::max(1.0, std::fabs(tr.log_der.back())));
        long double direct = 0;
        for (int j = 0; j < n; ++j) {
            direct += std::log(derivative(f, noise.get(j), tr.points[static_cast<std::size_t>(j)]));
        }
        CHECK(std::fabs(static_cast<double>(direct) - tr.log_der.back()) <=
              1e-9 * std::max(1.0, std::fabs(tr.log_der.back())));
    }
}

TEST_CASE("singular hits") {
    Trapdoor f;
    CHECK_THROWS_AS(iterate(f, stream(1, 0), 0.5, 3, 0.1), SingularHit);
    const OrbitTrace tr = iterate(f, stream(1, 0), 0.5, 3, 0.1, SingularPolicy::truncate);
    CHECK(tr.truncated);
    CHECK(tr.length() == 0);
    CHECK_THROWS_AS(iterate(FixtureFamily(2, 0.01), stream(1, 0), 0.0, 3, 0.1), DomainError);
}

TEST_CASE("branch partitions") {
    auto f = std::make_shared<FixtureFamily>(2, 0.01);
    const NoiseStream calm = stream(1, 0);
    const BranchPartition p1 = branch_partition(f, calm, 1);
    REQUIRE(p1.branches.size() == 2);
    CHECK(static_cast<double>(p1.branches[0].lo) == -1.0);
    CHECK(static_cast<double>(p1.branches[0].hi) == 0.0);
    CHECK(static_cast<double>(p1.branches[1].hi) == 1.0);

    const BranchPartition p2 = branch_partition(f, calm, 2);
    CHECK(p2.branches.size() == 4);
    const auto cuts = p2.cut_points();
    REQUIRE(cuts.size() == 5);
    CHECK(cuts[1] == doctest::Approx(-1 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(cuts[2] == 0.0);
    CHECK(cuts[3] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));

    CHECK(branch_partition(f, calm, 3).branches.size() == 8);
    CHECK_THROWS_AS(branch_partition(f, calm, 41), CapExceeded);
    CHECK_THROWS_AS(branch_partition(f, calm, 12, BranchLimits{40, 100}), CapExceeded);
}

TEST_CASE("branch partition against a sign scan") {
    auto f = std::make_shared<FixtureFamily>(2, 0.01);
    const NoiseStream noise = stream(2, 0.01);
    const int n = 5;
    const BranchPartition p = branch_partition(f, noise, n);
    const auto cuts = p.cut_points();
    const auto image = [&](double x) {
        double y = x;
        for (int j = 0; j < n; ++j) y = step(*f, noise.get(j), y);
        return y;
    };
    // Between consecutive grid points in the same branch the image increases.
    std::size_t current = 0;
    double prev = image(-1.0 + 1e-5);
    for (double x = -1.0 + 2e-5; x < 1.0; x += 1e-5) {
        const auto idx = p.branch_containing(x);
        const double y = image(x);
        if (idx && *idx == current) CHECK(y > prev);
        if (idx) current = *idx;
        prev = y;
    }
    for (std::size_t i = 0; i < p.branches.size(); ++i) {
        const Branch& b = p.branches[i];
        if (i + 1 < p.branches.size()) CHECK(b.hi == p.branches[i + 1].lo);
        const long double mid = (b.lo + b.hi) / 2;
        const long double at_lo = p.evaluate(i, b.lo);
        const long double at_hi = p.evaluate(i, b.hi);
        CHECK(static_cast<double>(std::min(at_lo, at_hi)) == doctest::Approx(static_cast<double>(b.image_lo)).epsilon(1e-9));
        CHECK(static_cast<double>(std::max(at_lo, at_hi)) == doctest::Approx(static_cast<double>(b.image_hi)).epsilon(1e-9));
        CHECK(p.evaluate(i, mid) > b.image_lo);
        CHECK(p.evaluate(i, mid) < b.image_hi);
    }
    CHECK(cuts.front() == -1.0);
    CHECK(cuts.back() == 1.0);
    CHECK_FALSE(p.branch_containing(0.0).has_value());
}

TEST_CASE("preimages inside a branch") {
    auto f = std::make_shared<FixtureFamily>(2, 0.01);
    const BranchPartition p = branch_partition(f, stream(1, 0), 1);
    const Interval j = preimage_in_branch(p, 1, {-0.9, -0.8});
    CHECK(j.lo == doctest::Approx(std::sqrt(0.05)).epsilon(1e-12));
    CHECK(j.hi == doctest::Approx(std::sqrt(0.1)).epsilon(1e-12));
    const Interval full = preimage_in_branch(p, 1, {-1, 1});
    CHECK(full.lo == 0.0);
    CHECK(full.hi == 1.0);
    const Interval inner = preimage_in_branch(p, 1, {-0.88, -0.85});
    CHECK(inner.lo > j.lo);
    CHECK(inner.hi < j.hi);
    CHECK_THROWS_AS(preimage_in_branch(p, 1, {1.5, 2}), EmptyIntersection);

    const NoiseStream noise = stream(5, 0.01);
    const BranchPartition p4 = branch_partition(f, noise, 4);
    for (std::size_t i = 0; i < p4.branches.size(); ++i) {
        const Branch& b = p4.branches[i];
        const double lo = static_cast<double>(b.image_lo + (b.image_hi - b.image_lo) * 0.3L);
        const double hi = static_cast<double>(b.image_lo + (b.image_hi - b.image_lo) * 0.6L);
        const Interval pre = preimage_in_branch(p4, i, {lo, hi});
        CHECK(std::fabs(static_cast<double>(p4.evaluate(i, pre.lo)) - lo) <= 1e-9);
        CHECK(std::fabs(static_cast<double>(p4.evaluate(i, pre.hi)) - hi) <= 1e-9);
    }
}

}  // TEST_SUITE
