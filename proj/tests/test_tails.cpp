#include "doctest.h"
#include "rovella/tails.hpp"

using namespace rovella;

TEST_SUITE("tails") {

TEST_CASE("ensembles do not depend on the worker count") {
    FixtureFamily f(2, 0.01);
    EnsembleParams p;
    p.samples = 6000;
    p.n_max = 30;
    p.workers = 1;
    const EnsembleTails a = ensemble_tails(f, HyperbolicConfig{}, p);
    p.workers = 3;
    const EnsembleTails b = ensemble_tails(f, HyperbolicConfig{}, p);
    CHECK(a.bad_set.survivors == b.bad_set.survivors);
    CHECK(a.first_hyperbolic.survivors == b.first_hyperbolic.survivors);
    CHECK(a.first_return.survivors == b.first_return.survivors);
}

TEST_CASE("survivor tables") {
    FixtureFamily f(2, 0.01);
    EnsembleParams p;
    p.samples = 5000;
    p.n_max = 40;
    const EnsembleTails r = ensemble_tails(f, HyperbolicConfig{}, p);
    CHECK(r.first_hyperbolic.total + r.singular_hits == p.samples);
    CHECK(r.bad_set.survivors[0] == r.bad_set.total);
    for (std::size_t n = 1; n < r.first_hyperbolic.survivors.size(); ++n) {
        CHECK(r.first_hyperbolic.survivors[n] <= r.first_hyperbolic.survivors[n - 1]);
        CHECK(r.first_return.survivors[n] <= r.first_return.survivors[n - 1]);
        // h > n forces membership in E_n.
        CHECK(r.first_hyperbolic.survivors[n] <= r.bad_set.survivors[n]);
        // Every hyperbolic return time is a hyperbolic time.
        CHECK(r.first_hyperbolic.survivors[n] <= r.first_return.survivors[n]);
    }
}

TEST_CASE("tail fit ranges") {
    TailTable t;
    t.total = 10000;
    t.survivors = {10000, 3000, 5000, 4000, 3200, 2560, 2048, 1638, 1310, 1048, 838, 90, 40};
    const auto fit = fit_tail(t, 100);
    REQUIRE(fit.has_value());
    CHECK(fit->first == 2);
    CHECK(fit->last == 10);
    CHECK(fit->b == doctest::Approx(-std::log(0.8)).epsilon(1e-3));
    t.survivors = {10000, 50, 20};
    CHECK_FALSE(fit_tail(t, 100).has_value());
}

}  // TEST_SUITE
