#include "rovella/orbit.hpp"

#include <cmath>
#include <string>

#include "rovella/errors.hpp"

namespace rovella {

double step(const MapFamily& family, double t, double x) {
    return static_cast<double>(family.value(t, x));
}

int return_depth(const MapFamily& family, double t, double x, double delta) {
    if (x == 0) throw DomainError("return depth undefined at the singularity");
    if (!(delta > 0)) throw DomainError("delta must be positive");
    const double g = static_cast<double>(family.derivative(t, x)) * std::fabs(x);
    if (g >= delta) return 0;
    int r = static_cast<int>(std::ceil(std::log(delta / g)));
    if (r < 0) r = 0;
    // log/ceil can be off by one at exact ties; settle against the defining inequality.
    while (g < std::exp(-static_cast<double>(r)) * delta) ++r;
    while (r > 0 && g >= std::exp(-static_cast<double>(r - 1)) * delta) --r;
    return r;
}

OrbitTrace iterate(const MapFamily& family, const NoiseStream& noise, double x0, int n, double delta,
                   SingularPolicy policy) {
    return iterate(family, noise, x0, n, delta, tilde_b(family, 0.0, delta), policy);
}

OrbitTrace iterate(const MapFamily& family, const NoiseStream& noise, double x0, int n, double delta,
                   const CriticalNeighborhoods& neighborhoods, SingularPolicy policy) {
    if (n < 1) throw DomainError("orbit length must be at least 1");
    if (x0 == 0 || !(std::fabs(x0) <= 1)) throw DomainError("x0 must lie in [-1, 1] \\ {0}");
    OrbitTrace tr;
    tr.x0 = x0;
    tr.delta = delta;
    tr.points.reserve(static_cast<std::size_t>(n) + 1);
    tr.log_der.reserve(static_cast<std::size_t>(n) + 1);
    tr.depths.reserve(static_cast<std::size_t>(n) + 1);
    tr.visits.reserve(static_cast<std::size_t>(n) + 1);

    double x = x0;
    double log_der = 0;
    for (int i = 0;; ++i) {
        const double t = noise.get(i);
        tr.points.push_back(x);
        tr.log_der.push_back(log_der);
        tr.depths.push_back(return_depth(family, t, x, delta));
        tr.visits.push_back(neighborhoods.contains(x) ? 1 : 0);
        if (i == n) break;
        log_der += static_cast<double>(std::log(family.derivative(t, x)));
        x = step(family, t, x);
        if (x == 0) {
            if (policy == SingularPolicy::raise) {
                throw SingularHit("orbit of " + std::to_string(x0) + " hit 0 at step " + std::to_string(i + 1));
            }
            tr.truncated = true;
            break;
        }
    }
    return tr;
}

double a_sum(const OrbitTrace& trace, int n) {
    if (n < 0 || static_cast<std::size_t>(n) > trace.length() + 1) throw DomainError("a_sum index past trace end");
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        sum += std::exp(trace.log_der[k]) / std::fabs(trace.points[k]);
    }
    return sum;
}

}  // namespace rovella
