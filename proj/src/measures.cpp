#include "rovella/measures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "rovella/errors.hpp"
#include "rovella/orbit.hpp"
#include "rovella/parallel.hpp"

namespace rovella {

std::size_t UniformGrid::cell_of(double x) const noexcept {
    const double f = std::floor((x + 1.0) / width());
    if (!(f > 0)) return 0;
    return std::min(m - 1, static_cast<std::size_t>(f));
}

void UniformGrid::validate() const {
    if (m < 16 || m % 2 != 0) throw ParamError("grid needs an even number of cells, at least 16");
}

std::vector<double> UlamOperator::push(const std::vector<double>& mass) const {
    std::vector<double> out(grid.m, 0.0);
    for (std::size_t i = 0; i < grid.m; ++i) {
        const double p = mass[i];
        if (p == 0) continue;
        for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k) out[column[k]] += p * value[k];
    }
    return out;
}

double UlamOperator::row_sum(std::size_t i) const {
    double s = 0;
    for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k) s += value[k];
    return s;
}

UlamOperator ulam_row_operator(const MapFamily& family, double t, const UniformGrid& grid, int workers) {
    grid.validate();
    struct Row {
        std::vector<std::uint32_t> cols;
        std::vector<double> vals;
    };
    std::vector<Row> rows(grid.m);
    constexpr std::size_t kChunk = 256;
    for_each_chunk(grid.m, kChunk, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const long double a = grid.left(i);
            const long double b = grid.right(i);
            const Side side = a >= 0 ? Side::positive : Side::negative;
            const auto image = [&](long double x) { return x == 0 ? family.limit_at_zero(t, side) : family.value(t, x); };
            const long double ya = image(a);
            const long double yb = image(b);
            const std::size_t j0 = grid.cell_of(static_cast<double>(ya));
            std::size_t j1 = grid.cell_of(static_cast<double>(yb));
            if (j1 > j0 && static_cast<long double>(grid.left(j1)) >= yb) --j1;
            Row& row = rows[i];
            long double x_lo = a;
            double total = 0;
            for (std::size_t j = j0; j <= j1; ++j) {
                const long double edge = j == j1 ? yb : static_cast<long double>(grid.right(j));
                const long double x_hi = j == j1 ? b : std::clamp(family.inverse(t, side, edge), a, b);
                const double frac = static_cast<double>((x_hi - x_lo) / (b - a));
                if (frac > 0) {
                    row.cols.push_back(static_cast<std::uint32_t>(j));
                    row.vals.push_back(frac);
                    total += frac;
                }
                x_lo = x_hi;
            }
            for (double& v : row.vals) v /= total;
        }
    });
    UlamOperator op;
    op.grid = grid;
    op.t = t;
    op.row_start.reserve(grid.m + 1);
    op.row_start.push_back(0);
    for (const Row& r : rows) {
        op.column.insert(op.column.end(), r.cols.begin(), r.cols.end());
        op.value.insert(op.value.end(), r.vals.begin(), r.vals.end());
        op.row_start.push_back(op.column.size());
    }
    return op;
}

// ---------------------------------------------------------------------------

DensityVector DensityVector::uniform(const UniformGrid& grid) {
    return {grid, std::vector<double>(grid.m, 0.5)};
}

DensityVector DensityVector::from_mass(const UniformGrid& grid, const std::vector<double>& mass) {
    double total = 0;
    for (double p : mass) total += p;
    DensityVector d{grid, std::vector<double>(grid.m)};
    for (std::size_t i = 0; i < grid.m; ++i) d.weights[i] = std::max(0.0, mass[i]) / total / grid.width();
    return d;
}

std::vector<double> DensityVector::mass() const {
    std::vector<double> out(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) out[i] = weights[i] * grid.width();
    return out;
}

double DensityVector::total() const {
    double s = 0;
    for (double w : weights) s += w;
    return s * grid.width();
}

double DensityVector::l1_distance(const DensityVector& other) const {
    const DensityVector& fine = grid.m >= other.grid.m ? *this : other;
    const DensityVector& coarse = grid.m >= other.grid.m ? other : *this;
    if (fine.grid.m % coarse.grid.m != 0) throw ParamError("grids are not nested");
    const std::size_t ratio = fine.grid.m / coarse.grid.m;
    double sum = 0;
    for (std::size_t i = 0; i < fine.grid.m; ++i) sum += std::fabs(fine.weights[i] - coarse.weights[i / ratio]);
    return sum * fine.grid.width();
}

double DensityVector::coarsening_error() const {
    double sum = 0;
    for (std::size_t i = 0; i + 1 < weights.size(); i += 2) {
        const double avg = (weights[i] + weights[i + 1]) / 2;
        sum += std::fabs(weights[i] - avg) + std::fabs(weights[i + 1] - avg);
    }
    return sum * grid.width();
}

namespace {

std::vector<double> pull_forward_mass(const MapFamily& family, const NoiseStream& noise, std::int64_t from,
                                      std::int64_t to, std::vector<double> mass, const UniformGrid& grid,
                                      int workers) {
    for (std::int64_t k = from; k < to; ++k) mass = ulam_row_operator(family, noise.get(k), grid, workers).push(mass);
    return mass;
}

}  // namespace

DensityVector equivariant_density(const MapFamily& family, const NoiseStream& noise, int m_past,
                                  const UniformGrid& grid, int workers) {
    grid.validate();
    if (m_past < 0) throw ParamError("m_past must be nonnegative");
    auto mass = pull_forward_mass(family, noise, -m_past, 0, DensityVector::uniform(grid).mass(), grid, workers);
    return DensityVector::from_mass(grid, mass);
}

AdaptiveDensity equivariant_density_adaptive(const MapFamily& family, const NoiseStream& noise, int start,
                                             const UniformGrid& grid, int max_m_past, int workers) {
    AdaptiveDensity out;
    int m = std::max(1, start);
    DensityVector prev = equivariant_density(family, noise, m, grid, workers);
    while (true) {
        const int next = 2 * m;
        DensityVector cur = equivariant_density(family, noise, next, grid, workers);
        out.cauchy_residual = cur.l1_distance(prev);
        out.grid_error = cur.coarsening_error();
        out.m_past = next;
        out.density = cur;
        if (out.cauchy_residual < 2 * out.grid_error) {
            out.converged = true;
            return out;
        }
        if (next >= max_m_past) return out;
        prev = std::move(cur);
        m = next;
    }
}

// ---------------------------------------------------------------------------

Observable observable(const std::string& name) {
    if (name == "one") return {name, [](double) { return 1.0; }, 1.0};
    if (name == "x") return {name, [](double x) { return x; }, 1.0};
    if (name == "x2") return {name, [](double x) { return x * x; }, 1.0};
    if (name == "abs") return {name, [](double x) { return std::fabs(x); }, 1.0};
    if (name == "cos_pi_x") return {name, [](double x) { return std::cos(M_PI * x); }, 1.0};
    if (name == "sign") return {name, [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }, std::nullopt};
    throw ConfigError("unknown observable '" + name + "'");
}

std::vector<std::string> observable_names() { return {"one", "x", "x2", "abs", "cos_pi_x", "sign"}; }

ObservableNorms observable_norms(const Observable& obs, std::size_t points) {
    ObservableNorms out;
    std::vector<double> xs(points);
    std::vector<double> fs(points);
    for (std::size_t i = 0; i < points; ++i) {
        xs[i] = -1.0 + 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(points);
        fs[i] = obs.f(xs[i]);
        out.sup = std::max(out.sup, std::fabs(fs[i]));
    }
    if (!obs.holder_exponent) {
        out.holder = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double eta = *obs.holder_exponent;
    for (std::size_t d = 1; d < points; d *= 2) {
        for (std::size_t i = 0; i + d < points; ++i) {
            out.holder = std::max(out.holder, std::fabs(fs[i + d] - fs[i]) / std::pow(xs[i + d] - xs[i], eta));
        }
    }
    return out;
}

std::string to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }
std::string to_string(Method m) { return m == Method::ulam ? "ulam" : "monte_carlo"; }

Direction parse_direction(const std::string& s) {
    if (s == "forward") return Direction::forward;
    if (s == "backward") return Direction::backward;
    throw ConfigError("direction must be forward or backward");
}

Method parse_method(const std::string& s) {
    if (s == "ulam") return Method::ulam;
    if (s == "monte_carlo" || s == "monte-carlo") return Method::monte_carlo;
    throw ConfigError("method must be ulam or monte_carlo");
}

nlohmann::json CorrelationSeries::to_json() const {
    nlohmann::json j = {{"direction", to_string(direction)},
                        {"method", to_string(method)},
                        {"burn_in", burn_in},
                        {"values", values}};
    j["fit"] = fit ? fit->to_json() : nlohmann::json(nullptr);
    return j;
}

namespace {

// Cell averages by 5-point Gauss-Legendre quadrature.
std::vector<double> cell_averages(const Observable& obs, const UniformGrid& grid) {
    static constexpr std::array<double, 5> nodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                                    0.5384693101056831, 0.9061798459386640};
    static constexpr std::array<double, 5> weights = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                      0.4786286704993665, 0.2369268850561891};
    std::vector<double> out(grid.m);
    for (std::size_t i = 0; i < grid.m; ++i) {
        const double mid = (grid.left(i) + grid.right(i)) / 2;
        const double half = (grid.right(i) - grid.left(i)) / 2;
        double s = 0;
        for (std::size_t k = 0; k < nodes.size(); ++k) s += weights[k] * obs.f(mid + half * nodes[k]);
        out[i] = s / 2;
    }
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// (psi - <psi, p>) p for a probability mass vector p.
std::vector<double> centered(const std::vector<double>& psi_avg, const std::vector<double>& mass) {
    const double mean = dot(psi_avg, mass);
    std::vector<double> g(mass.size());
    for (std::size_t i = 0; i < mass.size(); ++i) g[i] = (psi_avg[i] - mean) * mass[i];
    return g;
}

std::vector<double> ulam_series(const MapFamily& family, const NoiseStream& noise, const Observable& phi,
                                const Observable& psi, int n_max, Direction direction, const CorrelationParams& p) {
    const UniformGrid& grid = p.grid;
    const auto phi_avg = cell_averages(phi, grid);
    const auto psi_avg = cell_averages(psi, grid);
    std::vector<double> values(static_cast<std::size_t>(n_max) + 1);

    if (direction == Direction::forward) {
        const auto mass = equivariant_density(family, noise, p.m_past, grid, p.workers).mass();
        auto g = centered(psi_avg, mass);
        values[0] = std::fabs(dot(phi_avg, g));
        for (int n = 1; n <= n_max; ++n) {
            g = ulam_row_operator(family, noise.get(n - 1), grid, p.workers).push(g);
            values[static_cast<std::size_t>(n)] = std::fabs(dot(phi_avg, g));
        }
        return values;
    }

    // Single pullback from -(n_max + m_past), keeping the masses at times -n_max..0.
    const std::int64_t start = -static_cast<std::int64_t>(n_max) - p.m_past;
    auto mass = pull_forward_mass(family, noise, start, -n_max, DensityVector::uniform(grid).mass(), grid, p.workers);
    std::vector<UlamOperator> recent;  // operators at times -n_max..-1
    std::vector<std::vector<double>> past(static_cast<std::size_t>(n_max) + 1);
    for (int k = -n_max; k < 0; ++k) {
        past[static_cast<std::size_t>(-k)] = mass;
        recent.push_back(ulam_row_operator(family, noise.get(k), grid, p.workers));
        mass = recent.back().push(mass);
    }
    past[0] = mass;
    for (int n = 0; n <= n_max; ++n) {
        auto g = centered(psi_avg, past[static_cast<std::size_t>(n)]);
        for (int k = -n; k < 0; ++k) g = recent[static_cast<std::size_t>(k + n_max)].push(g);
        values[static_cast<std::size_t>(n)] = std::fabs(dot(phi_avg, g));
    }
    return values;
}

struct McSums {
    std::vector<double> phi;      // per n (forward) or single (backward)
    std::vector<double> psi;      // single (forward) or per n (backward)
    std::vector<double> product;  // per n
    std::size_t count = 0;
};

double initial_point(std::uint64_t seed, std::size_t i) {
    const double u = unit_interval(derive_seed(seed, i / 2));
    const double v = i % 2 == 0 ? u : 1.0 - u;  // antithetic partner
    const double x = -1.0 + 2.0 * v;
    return x == 0 ? std::numeric_limits<double>::denorm_min() : x;
}

std::vector<double> monte_carlo_series(const MapFamily& family, const NoiseStream& noise, const Observable& phi,
                                       const Observable& psi, int n_max, Direction direction,
                                       const CorrelationParams& p) {
    const auto nn = static_cast<std::size_t>(n_max) + 1;
    constexpr std::size_t kChunk = 4096;
    const std::uint64_t start_seed = derive_seed(noise.seed(), 0x6A09E667F3BCC909ULL);
    std::vector<McSums> parts(chunk_count(p.samples, kChunk));
    const bool forward = direction == Direction::forward;
    const std::int64_t origin = forward ? -p.m_past : -static_cast<std::int64_t>(n_max) - p.m_past;

    for_each_chunk(p.samples, kChunk, p.workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
        McSums& s = parts[c];
        s.phi.assign(forward ? nn : 1, 0.0);
        s.psi.assign(forward ? 1 : nn, 0.0);
        s.product.assign(nn, 0.0);
        std::vector<double> path(nn);
        for (std::size_t i = begin; i < end; ++i) {
            double x = initial_point(start_seed, i);
            bool ok = true;
            const std::int64_t stop = forward ? 0 : -n_max;
            for (std::int64_t k = origin; k < stop && ok; ++k) {
                x = step(family, noise.get(k), x);
                ok = x != 0;
            }
            // path[n] is x at time n (forward) or at time -n (backward).
            for (std::size_t n = 0; n < nn && ok; ++n) {
                if (forward) {
                    path[n] = x;
                    if (n + 1 < nn) x = step(family, noise.get(static_cast<std::int64_t>(n)), x);
                } else {
                    path[nn - 1 - n] = x;
                    if (n + 1 < nn) x = step(family, noise.get(static_cast<std::int64_t>(n) - n_max), x);
                }
                ok = x != 0;
            }
            if (!ok) continue;
            ++s.count;
            if (forward) {
                const double b = psi.f(path[0]);
                s.psi[0] += b;
                for (std::size_t n = 0; n < nn; ++n) {
                    const double a = phi.f(path[n]);
                    s.phi[n] += a;
                    s.product[n] += a * b;
                }
            } else {
                const double a = phi.f(path[0]);
                s.phi[0] += a;
                for (std::size_t n = 0; n < nn; ++n) {
                    const double b = psi.f(path[n]);
                    s.psi[n] += b;
                    s.product[n] += a * b;
                }
            }
        }
    });

    McSums total;
    total.phi.assign(forward ? nn : 1, 0.0);
    total.psi.assign(forward ? 1 : nn, 0.0);
    total.product.assign(nn, 0.0);
    for (const McSums& s : parts) {
        total.count += s.count;
        for (std::size_t k = 0; k < total.phi.size(); ++k) total.phi[k] += s.phi[k];
        for (std::size_t k = 0; k < total.psi.size(); ++k) total.psi[k] += s.psi[k];
        for (std::size_t k = 0; k < nn; ++k) total.product[k] += s.product[k];
    }
    if (total.count == 0) throw InsufficientData("every Monte Carlo sample hit the singularity");
    const auto cnt = static_cast<double>(total.count);
    std::vector<double> values(nn);
    for (std::size_t n = 0; n < nn; ++n) {
        const double a = total.phi[forward ? n : 0] / cnt;
        const double b = total.psi[forward ? 0 : n] / cnt;
        values[n] = std::fabs(total.product[n] / cnt - a * b);
    }
    return values;
}

}  // namespace

CorrelationSeries quenched_correlation(const MapFamily& family, const NoiseStream& noise, const Observable& phi,
                                       const Observable& psi, int n_max, Method method, Direction direction,
                                       const CorrelationParams& params) {
    if (n_max < 0) throw ParamError("n_max must be nonnegative");
    if (!phi.holder_exponent) throw ParamError("phi must be a Hölder observable");
    params.grid.validate();
    CorrelationSeries out;
    out.direction = direction;
    out.method = method;
    out.burn_in = params.burn_in;
    out.values = method == Method::ulam ? ulam_series(family, noise, phi, psi, n_max, direction, params)
                                        : monte_carlo_series(family, noise, phi, psi, n_max, direction, params);
    auto last = static_cast<std::size_t>(n_max);
    if (method == Method::monte_carlo) {
        // Stop at the first value under the sampling noise floor.
        const double floor = 3.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, params.samples)));
        for (std::size_t n = params.burn_in; n <= last; ++n) {
            if (out.values[n] < floor) {
                last = n == 0 ? 0 : n - 1;
                break;
            }
        }
    }
    try {
        out.fit = fit_exponential_range(out.values, params.burn_in, last);
    } catch (const InsufficientData&) {
        out.fit.reset();
    }
    return out;
}

}  // namespace rovella
