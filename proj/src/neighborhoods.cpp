#include "rovella/neighborhoods.hpp"

#include <cmath>

#include "rovella/errors.hpp"

namespace rovella {

namespace {

// Root of value(t, x) = target on the open branch between `from` (at the singularity)
// and `to` (at the boundary). The branch is increasing in x.
double bisect_branch(const MapFamily& family, double t, long double from, long double to,
                     long double target) {
    long double lo = std::fmin(from, to);
    long double hi = std::fmax(from, to);
    while (hi - lo > 1e-12L) {
        const long double mid = lo + (hi - lo) / 2;  // never 0: one end of the bracket is 0
        if (family.value(t, mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return static_cast<double>(lo + (hi - lo) / 2);
}

}  // namespace

CriticalNeighborhoods tilde_b(const MapFamily& family, double t, double delta) {
    if (!(delta > 0)) throw DomainError("delta must be positive");
    if (!(std::fabs(t) <= family.eps_max())) throw DomainError("|t| exceeds eps_max");

    const auto [pos_inf, pos_sup] = family.branch_range(t, Side::positive);
    const auto [neg_inf, neg_sup] = family.branch_range(t, Side::negative);
    const long double pos_target = pos_inf + delta;  // edge of B_delta(-1)
    const long double neg_target = neg_sup - delta;  // edge of B_delta(1)
    if (pos_target >= pos_sup || neg_target <= neg_inf) {
        throw DeltaTooLarge("B_delta(+-1) exceeds the branch range");
    }

    CriticalNeighborhoods out;
    out.delta = delta;
    out.positive = {0.0, bisect_branch(family, t, 0.0L, 1.0L, pos_target)};
    out.negative = {bisect_branch(family, t, 0.0L, -1.0L, neg_target), 0.0};
    out.d_ratio = 2.0 * delta / out.measure();
    return out;
}

}  // namespace rovella
