#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rovella/fit.hpp"
#include "rovella/map_family.hpp"
#include "rovella/noise.hpp"

namespace rovella {

// m equal cells over [-1, 1]; m must be even so that 0 is a cell edge.
struct UniformGrid {
    std::size_t m = 2048;

    double width() const noexcept { return 2.0 / static_cast<double>(m); }
    double left(std::size_t i) const noexcept { return -1.0 + width() * static_cast<double>(i); }
    double right(std::size_t i) const noexcept { return i + 1 == m ? 1.0 : left(i + 1); }
    std::size_t cell_of(double x) const noexcept;
    void validate() const;
};

/// Row-stochastic Ulam matrix of T_t in CSR form: entry (i, j) is the fraction of cell i
/// that T_t maps into cell j, from exact preimages of the cell edges.
struct UlamOperator {
    UniformGrid grid;
    double t = 0;
    std::vector<std::size_t> row_start;
    std::vector<std::uint32_t> column;
    std::vector<double> value;

    // Cell masses p -> p P.
    std::vector<double> push(const std::vector<double>& mass) const;
    double row_sum(std::size_t i) const;
};

UlamOperator ulam_row_operator(const MapFamily& family, double t, const UniformGrid& grid, int workers = 1);

/// Piecewise-constant density: weights[i] is the value on cell i; sum of weights times
/// the cell width is 1.
struct DensityVector {
    UniformGrid grid;
    std::vector<double> weights;

    static DensityVector uniform(const UniformGrid& grid);
    static DensityVector from_mass(const UniformGrid& grid, const std::vector<double>& mass);
    std::vector<double> mass() const;
    double total() const;
    // L1 distance; grids must be equal or one a 2^k refinement of the other.
    double l1_distance(const DensityVector& other) const;
    // L1 distance to the density averaged over pairs of cells: a grid-error proxy.
    double coarsening_error() const;
};

// Uniform density pushed through the operators of T_{w_{-m_past}}, ..., T_{w_{-1}}.
DensityVector equivariant_density(const MapFamily& family, const NoiseStream& noise, int m_past,
                                  const UniformGrid& grid, int workers = 1);

struct AdaptiveDensity {
    DensityVector density;
    int m_past = 0;
    double cauchy_residual = 0;  // L1 distance between the last two depths
    double grid_error = 0;
    bool converged = false;
};

// Doubles m_past from `start` until the Cauchy residual is below twice the grid error.
AdaptiveDensity equivariant_density_adaptive(const MapFamily& family, const NoiseStream& noise, int start,
                                             const UniformGrid& grid, int max_m_past = 6400, int workers = 1);

/// An observable on [-1, 1]. Hölder observables declare their exponent; bounded
/// non-Hölder ones (allowed for psi only) carry no exponent.
struct Observable {
    std::string name;
    std::function<double(double)> f;
    std::optional<double> holder_exponent;
};

// Known names: one, x, x2, sign, abs, cos_pi_x. ConfigError for unknown names.
Observable observable(const std::string& name);
std::vector<std::string> observable_names();

// Grid proxies for C_{phi,psi}: sup norm and the Hölder seminorm with the declared exponent.
struct ObservableNorms {
    double sup = 0;
    double holder = 0;
};
ObservableNorms observable_norms(const Observable& obs, std::size_t points = 4096);

enum class Direction { forward, backward };
enum class Method { ulam, monte_carlo };

std::string to_string(Direction d);
std::string to_string(Method m);
Direction parse_direction(const std::string& s);
Method parse_method(const std::string& s);

struct CorrelationParams {
    UniformGrid grid{2048};
    int m_past = 200;
    std::size_t samples = 100000;
    std::size_t burn_in = 5;
    int workers = 1;
};

struct CorrelationSeries {
    Direction direction = Direction::forward;
    Method method = Method::ulam;
    std::vector<double> values;  // C_n, n = 0..n_max
    std::optional<ExpFit> fit;
    std::size_t burn_in = 0;
    nlohmann::json to_json() const;
};

// Quenched correlation |int (phi o T^n) psi dmu - int phi dmu' int psi dmu| in the chosen
// display. The fit covers burn_in..n_max and is left empty when it has too few points.
CorrelationSeries quenched_correlation(const MapFamily& family, const NoiseStream& noise, const Observable& phi,
                                       const Observable& psi, int n_max, Method method, Direction direction,
                                       const CorrelationParams& params = {});

}  // namespace rovella
