#include "rovella/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rovella {

namespace {

std::vector<double> log_spaced_magnitudes(int count, double x_min) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    const double log_min = std::log(x_min);
    for (int i = 0; i < count; ++i) {
        const double f = count == 1 ? 1.0 : static_cast<double>(i) / (count - 1);
        out.push_back(std::exp(log_min * (1.0 - f)));
    }
    out.back() = 1.0;
    return out;
}

std::vector<double> t_grid(const MapFamily& family, int count) {
    std::vector<double> out;
    const double e = family.eps_max();
    for (int i = 0; i < count; ++i) {
        out.push_back(count == 1 ? 0.0 : -e + 2.0 * e * i / (count - 1));
    }
    return out;
}

}  // namespace

bool ConditionReport::required_pass() const noexcept {
    return c1_limits && c2_monotone && c2_sup_at_boundary && c2_envelope && c3_negative_schwarzian &&
           range_ok && r1 && r2 && admissible_t_lipschitz;
}

nlohmann::json ConditionReport::to_json() const {
    return {
        {"C1", {{"pass", c1_limits}, {"residual", c1_residual}}},
        {"C2",
         {{"monotone", c2_monotone},
          {"min_derivative", min_derivative},
          {"sup_at_boundary", c2_sup_at_boundary},
          {"K1_empirical", k1_empirical},
          {"K2_empirical", k2_empirical},
          {"envelope", c2_envelope}}},
        {"C3", {{"pass", c3_negative_schwarzian}, {"max_schwarzian", max_schwarzian}}},
        {"range", {{"pass", range_ok}}},
        {"R1", {{"pass", r1}, {"lambda", lambda}}},
        {"R2", {{"pass", r2}, {"alpha", alpha}}},
        {"R3", {{"pass", r3}, {"coverage", r3_coverage}, {"required", false}}},
        {"admissibility",
         {{"t_lipschitz", admissible_t_lipschitz},
          {"max_t_slope", max_t_slope},
          {"distortion_constant", distortion_constant}}},
        {"summability", {{"plus", summability_plus}, {"minus", summability_minus}, {"verdict", nullptr}}},
        {"required_pass", required_pass()},
    };
}

ConditionReport verify_conditions(const MapFamily& family, const GridSpec& grid) {
    ConditionReport rep;
    const double s = family.order();
    const int per_side = std::max(2, grid.x_points / 2);
    const auto mags = log_spaced_magnitudes(per_side, grid.x_min);
    const auto ts = t_grid(family, grid.t_points);

    // C1: one-sided limits along the shrinking grid.
    double c1 = 0;
    for (double t : ts) {
        c1 = std::max(c1, static_cast<double>(std::fabs(family.value(t, grid.x_min) + 1.0L)));
        c1 = std::max(c1, static_cast<double>(std::fabs(family.value(t, -grid.x_min) - 1.0L)));
    }
    rep.c1_residual = c1;
    rep.c1_limits = c1 <= grid.limit_tolerance;

    // C2, C3 and range over the full grid.
    double min_der = std::numeric_limits<double>::infinity();
    double k_lo = std::numeric_limits<double>::infinity();
    double k_hi = 0;
    double max_s = -std::numeric_limits<double>::infinity();
    bool range_ok = true;
    bool sup_ok = true;
    for (double t : ts) {
        const long double boundary_pos = family.derivative(t, 1.0L);
        const long double boundary_neg = family.derivative(t, -1.0L);
        for (int sgn : {-1, 1}) {
            for (double m : mags) {
                const double x = sgn * m;
                const Jet j = family.jet(t, x);
                min_der = std::min(min_der, static_cast<double>(j.d1));
                const double ratio = static_cast<double>(j.d1 / std::pow(static_cast<long double>(m), s - 1));
                k_lo = std::min(k_lo, ratio);
                k_hi = std::max(k_hi, ratio);
                const long double r = j.d2 / j.d1;
                max_s = std::max(max_s, static_cast<double>(j.d3 / j.d1 - 1.5L * r * r));
                if (j.value < -1.0L || j.value > 1.0L) range_ok = false;
                const long double bound = sgn > 0 ? boundary_pos : boundary_neg;
                if (j.d1 > bound * (1 + 1e-12L)) sup_ok = false;
            }
        }
    }
    rep.min_derivative = min_der;
    rep.c2_monotone = min_der > 0;
    rep.k1_empirical = k_lo;
    rep.k2_empirical = k_hi;
    rep.c2_envelope = family.k1() <= k_lo * (1 + 1e-9) && k_hi <= family.k2() * (1 + 1e-9);
    rep.c2_sup_at_boundary = sup_ok;
    rep.max_schwarzian = max_s;
    rep.c3_negative_schwarzian = max_s < 0;
    rep.range_ok = range_ok;

    // R1, R2, R3 and summability along the unperturbed orbits of the critical values +-1.
    const int n_max = grid.horizon;
    double lambda = std::numeric_limits<double>::infinity();
    double alpha = 0;
    bool orbit_ok = true;
    std::vector<bool> visited(static_cast<std::size_t>(std::max(1, grid.density_bins)), false);
    for (double start : {1.0, -1.0}) {
        long double x = start;
        long double log_der = 0;
        double partial = 0;
        auto& sums = start > 0 ? rep.summability_plus : rep.summability_minus;
        for (int n = 0; n <= n_max; ++n) {
            // Here x = f^n(start) and log_der = log Df^n(start).
            if (n >= 1) {
                lambda = std::min(lambda, static_cast<double>(std::exp(log_der / n)));
                // R2 at index n concerns f^{n-1}(start), recorded on the previous pass.
            }
            partial += static_cast<double>(std::exp(-log_der));
            sums.push_back(partial);
            if (x == 0) {
                orbit_ok = false;
                break;
            }
            if (n + 1 <= n_max) {
                const double prev = static_cast<double>(std::fabs(x));
                alpha = std::max(alpha, -std::log(prev) / (n + 1));
            }
            const auto bin = std::min<std::size_t>(
                visited.size() - 1, static_cast<std::size_t>((x + 1.0L) / 2.0L * visited.size()));
            visited[bin] = true;
            log_der += std::log(family.derivative(0.0L, x));
            x = family.value(0.0L, x);
        }
    }
    rep.lambda = orbit_ok ? lambda : 0.0;
    rep.r1 = orbit_ok && lambda > 1.0;
    rep.alpha = orbit_ok ? alpha : std::numeric_limits<double>::infinity();
    rep.r2 = orbit_ok;
    rep.r3_coverage =
        static_cast<double>(std::count(visited.begin(), visited.end(), true)) / visited.size();
    rep.r3 = rep.r3_coverage == 1.0;

    // Admissibility: |dT/dt| <= 1 and the log-derivative distortion constant.
    double max_slope = 0;
    for (std::size_t k = 1; k < ts.size(); ++k) {
        const double dt = ts[k] - ts[k - 1];
        if (dt <= 0) continue;
        for (int sgn : {-1, 1}) {
            for (double m : mags) {
                const double x = sgn * m;
                const double diff = static_cast<double>(std::fabs(family.value(ts[k], x) - family.value(ts[k - 1], x)));
                max_slope = std::max(max_slope, diff / dt);
            }
        }
    }
    rep.max_t_slope = max_slope;
    rep.admissible_t_lipschitz = max_slope <= 1.0 + 1e-9;

    double c_dist = 0;
    const double fractions[] = {1e-3, 1e-2, 0.1, 0.25, 0.4, 0.49};
    const std::size_t stride = std::max<std::size_t>(1, mags.size() / 1000);
    for (double t : ts) {
        for (int sgn : {-1, 1}) {
            for (std::size_t i = 0; i < mags.size(); i += stride) {
                const long double x = sgn * mags[i];
                const long double dx = family.derivative(t, x);
                for (double f : fractions) {
                    for (int dir : {-1, 1}) {
                        const long double y = x * (1.0L + dir * f);
                        if (std::fabs(y) > 1.0L || y == 0) continue;
                        const long double dy = family.derivative(t, y);
                        const long double c = std::fabs(std::log(dx / dy)) * std::fabs(x) / std::fabs(x - y);
                        c_dist = std::max(c_dist, static_cast<double>(c));
                    }
                }
            }
        }
    }
    rep.distortion_constant = c_dist;
    return rep;
}

}  // namespace rovella
