#include "rovella/fit.hpp"

#include <cmath>

#include "rovella/errors.hpp"

namespace rovella {

nlohmann::json ExpFit::to_json() const {
    return {{"C", c}, {"b", b}, {"r_squared", r_squared}, {"b_stderr", b_stderr}, {"points", points}, {"first", first}, {"last", last}};
}

ExpFit fit_exponential(const std::vector<double>& series, std::size_t burn_in, double floor) {
    if (series.empty()) throw InsufficientData("empty series");
    return fit_exponential_range(series, burn_in, series.size() - 1, floor);
}

ExpFit fit_exponential_range(const std::vector<double>& series, std::size_t first, std::size_t last,
                             double floor) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t n = first; n <= last && n < series.size(); ++n) {
        if (series[n] > floor && std::isfinite(series[n])) {
            xs.push_back(static_cast<double>(n));
            ys.push_back(std::log(series[n]));
        }
    }
    if (xs.size() < 5) throw InsufficientData("fewer than 5 points above the floor");

    const auto m = static_cast<double>(xs.size());
    double mx = 0;
    double my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0;
    double sxy = 0;
    double syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    ExpFit fit;
    fit.points = xs.size();
    fit.first = static_cast<std::size_t>(xs.front());
    fit.last = static_cast<std::size_t>(xs.back());
    const double slope = sxy / sxx;
    // Relative flatness test: rounding in log() leaves syy tiny but nonzero for constants.
    if (syy <= 1e-24 * m * (1 + my * my)) {
        fit.b = 0;
        fit.c = std::exp(my);
        fit.r_squared = 0;
        return fit;
    }
    fit.b = -slope;
    fit.c = std::exp(my - slope * mx);
    fit.r_squared = sxy * sxy / (sxx * syy);
    const double residual = std::max(0.0, syy - sxy * sxy / sxx);
    fit.b_stderr = std::sqrt(residual / (m - 2) / sxx);
    return fit;
}

}  // namespace rovella
