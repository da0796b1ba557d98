#pragma once

#include <cstdint>
#include <vector>

#include "rovella/map_family.hpp"
#include "rovella/neighborhoods.hpp"
#include "rovella/noise.hpp"

namespace rovella {

/// A random orbit x_i = T_omega^i(x0), i = 0..n, with derivative bookkeeping.
/// log_der[i] = sum_{j<i} log DT_{w_j}(x_j), so DT_omega^i(x0) = exp(log_der[i]).
/// depths[i] is r_delta(x_i) for the map T_{w_i}; visits[i] flags x_i in B~(delta).
struct OrbitTrace {
    double x0 = 0;
    double delta = 0;
    std::vector<double> points;
    std::vector<double> log_der;
    std::vector<int> depths;
    std::vector<std::uint8_t> visits;
    bool truncated = false;  // an iterate rounded to 0; the trace stops before it

    std::size_t length() const noexcept { return points.empty() ? 0 : points.size() - 1; }
};

enum class SingularPolicy { raise, truncate };

// SingularHit under SingularPolicy::raise when an iterate is exactly 0.
// B~(delta) visits use the unperturbed map; pass `neighborhoods` to reuse a precomputed one.
OrbitTrace iterate(const MapFamily& family, const NoiseStream& noise, double x0, int n, double delta,
                   SingularPolicy policy = SingularPolicy::raise);
OrbitTrace iterate(const MapFamily& family, const NoiseStream& noise, double x0, int n, double delta,
                   const CriticalNeighborhoods& neighborhoods, SingularPolicy policy = SingularPolicy::raise);

// Next point of an orbit: T_t(x) rounded to double. Every orbit in the library steps through here.
double step(const MapFamily& family, double t, double x);

// A(omega, x0, n) = sum_{i<n} DT_omega^i(x0) / |x_i|.
double a_sum(const OrbitTrace& trace, int n);

// Least r >= 0 with DT_t(x) |x| >= e^{-r} delta.
int return_depth(const MapFamily& family, double t, double x, double delta);

}  // namespace rovella
