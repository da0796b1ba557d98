#pragma once

#include "rovella/map_family.hpp"

namespace rovella {

struct Interval {
    double lo = 0;
    double hi = 0;

    double length() const noexcept { return hi - lo; }
    bool contains(double x) const noexcept { return lo < x && x < hi; }
};

/// B~(delta) = T_t^{-1}(B_delta(1)) u T_t^{-1}(B_delta(-1)), restricted to the two
/// components adjacent to the singularity, together with D(delta) = |B_delta(0)| / |B~(delta)|.
struct CriticalNeighborhoods {
    double delta = 0;
    Interval negative;  // (-b_-, 0), mapped into B_delta(1)
    Interval positive;  // (0, b_+), mapped into B_delta(-1)
    double d_ratio = 0;

    double measure() const noexcept { return negative.length() + positive.length(); }
    bool contains(double x) const noexcept { return negative.contains(x) || positive.contains(x); }
};

// Components found by bisection on each monotone branch to width 1e-12.
// DeltaTooLarge when B_delta(+-1) leaves the branch range; DomainError for delta <= 0.
CriticalNeighborhoods tilde_b(const MapFamily& family, double t, double delta);

}  // namespace rovella
