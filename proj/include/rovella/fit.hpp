#pragma once

#include <cstddef>
#include <vector>

#include "json.hpp"

namespace rovella {

// log y = log C - b n, fitted by least squares. b > 0 means decay.
struct ExpFit {
    double c = 0;
    double b = 0;
    double r_squared = 0;
    double b_stderr = 0;  // standard error of the slope
    std::size_t points = 0;
    std::size_t first = 0;  // first index used
    std::size_t last = 0;   // last index used

    nlohmann::json to_json() const;
};

// Fits series[n] for n >= burn_in, skipping values <= floor. InsufficientData below 5 points.
// A flat series gives b = 0 and r_squared = 0.
ExpFit fit_exponential(const std::vector<double>& series, std::size_t burn_in, double floor = 1e-14);

// Same fit restricted to indices first..last inclusive.
ExpFit fit_exponential_range(const std::vector<double>& series, std::size_t first, std::size_t last,
                             double floor = 1e-14);

}  // namespace rovella
