#pragma once

#include <vector>

#include "json.hpp"
#include "rovella/map_family.hpp"

namespace rovella {

// Sampling plan for verify_conditions. x points are log-spaced from x_min to 1 on each
// side of the singularity; t points are uniform on [-eps_max, eps_max].
struct GridSpec {
    int x_points = 10000;
    int t_points = 41;
    int horizon = 20;  // N for the critical-orbit conditions
    double x_min = 1e-8;
    double limit_tolerance = 1e-6;
    int density_bins = 20;  // resolution of the R3 coverage test
};

/// Grid-sampled verdicts for C1-C3, R1-R3 and admissibility. Failures are data, not
/// errors: R3 in particular is reported but never required.
struct ConditionReport {
    bool c1_limits = false;
    double c1_residual = 0;

    bool c2_monotone = false;
    double min_derivative = 0;
    bool c2_sup_at_boundary = false;
    double k1_empirical = 0;
    double k2_empirical = 0;
    bool c2_envelope = false;  // declared K1, K2 bound every sampled ratio

    bool c3_negative_schwarzian = false;
    double max_schwarzian = 0;

    bool range_ok = false;

    bool r1 = false;
    double lambda = 0;  // min over n of (DT^n(+-1))^{1/n}
    bool r2 = false;
    double alpha = 0;   // smallest alpha consistent with the sampled horizon
    bool r3 = false;
    double r3_coverage = 0;

    bool admissible_t_lipschitz = false;
    double max_t_slope = 0;
    double distortion_constant = 0;  // empirical C of admissibility item 3

    // Partial sums of 1/DT^n along the orbits of the critical values +1 and -1; no verdict attached.
    std::vector<double> summability_plus;
    std::vector<double> summability_minus;

    bool required_pass() const noexcept;
    nlohmann::json to_json() const;
};

ConditionReport verify_conditions(const MapFamily& family, const GridSpec& grid = {});

}  // namespace rovella
