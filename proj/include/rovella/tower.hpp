#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "rovella/hyperbolic.hpp"
#include "rovella/map_family.hpp"
#include "rovella/neighborhoods.hpp"
#include "rovella/noise.hpp"

namespace rovella {

struct TowerConfig {
    double delta_prime = 0.05;  // base B(delta') = (-delta', delta')
    int n_max = 25;
    HyperbolicConfig hyperbolic;
    bool require_hyperbolic = true;  // tau must be a hyperbolic time of the element's reference point
    bool require_v_ball = true;      // J inside B(x, C^{-1} delta0 e^{-lambda' tau / 2}) with delta0 = 2 delta'
    double boundary_margin = 1e-9;
    double markov_tolerance = 1e-9;
    int aperiodicity_scan = 30;
    int aperiodicity_count = 4;
    std::size_t max_pieces = std::size_t{1} << 24;

    void validate() const;
    nlohmann::json to_json() const;
};

/// One partition element: T_omega^tau maps (left, right) monotonically onto the base.
/// branch_id is the itinerary of the element under T_omega (bit j = side of the j-th iterate).
struct Element {
    long double left = 0;
    long double right = 0;
    int tau = 0;
    std::uint64_t branch_id = 0;
    bool seeded = false;
    double markov_residual = 0;

    long double length() const noexcept { return right - left; }
};

struct ReturnPartition {
    FamilyPtr family;
    NoiseStream noise;
    TowerConfig config;
    Interval base;
    int horizon = 0;
    std::vector<Element> elements;  // sorted by left endpoint
    std::vector<int> seeded_taus;
    bool seeds_coprime = false;
    long double uncovered = 0;
    std::size_t peak_pieces = 0;
    bool truncated = false;  // the piece cap stopped refinement early

    // Index of the element containing x, if any.
    std::optional<std::size_t> locate(long double x) const;
    std::vector<double> noise_window(int length) const;
};

ReturnPartition build_return_partition(FamilyPtr family, const NoiseStream& noise, const TowerConfig& cfg);

// |base| minus the admitted elements with tau <= n.
double tail_measure(const ReturnPartition& partition, int n);

// max |T_omega^tau(endpoint) -+ delta'| over both endpoints, in extended precision.
double markov_residual(const MapFamily& family, const NoiseStream& noise, const Element& element, double delta_prime);

/// The element of the partition of sigma^offset omega that contains x, found by following
/// only the branch through x. Agrees with build_return_partition on the shifted stream.
struct Located {
    int tau = 0;
    std::uint64_t branch_id = 0;
    long double left = 0;
    long double right = 0;
};

std::optional<Located> locate_in_partition(const MapFamily& family, const NoiseStream& noise,
                                           const TowerConfig& cfg, long double x);

struct TowerState {
    int level = 0;
    int tau = 0;
    std::uint64_t branch_id = 0;
    double x = 0;                 // base point of the current column
    std::int64_t base_time = 0;   // index of the noise at which the column starts
};

/// The random tower over a noise realization. Partitions for shifted noise are
/// resolved lazily, one branch at a time.
class RandomTower {
public:
    RandomTower(FamilyPtr family, NoiseStream noise, TowerConfig cfg);

    // UncoveredReturn when x is not in any element of the partition at base_time.
    TowerState enter(double x, std::int64_t base_time = 0) const;
    // Climb if level + 1 < tau, else return to the base. InvalidState for malformed states;
    // UncoveredReturn when the return lands outside the partition.
    TowerState step(const TowerState& state) const;
    // T^level_{sigma^{base_time} omega}(x), iterated exactly as orbit iteration does.
    double project(const TowerState& state) const;
    // Return point T^tau(x) of the column.
    double return_point(const TowerState& state) const;

    // Separation time of two base points at the same base time, capped at `cap` steps.
    int separation_time(double x, double y, std::int64_t base_time, int cap) const;

    const MapFamily& family() const noexcept { return *family_; }
    const NoiseStream& noise() const noexcept { return noise_; }
    const TowerConfig& config() const noexcept { return cfg_; }

private:
    FamilyPtr family_;
    NoiseStream noise_;
    TowerConfig cfg_;
};

TowerState tower_step(const RandomTower& tower, const TowerState& state);

struct AxiomReport {
    // C1
    int p0 = 0;
    std::size_t separation_pairs = 0;
    std::size_t separation_mismatches = 0;
    // C2
    std::size_t elements = 0;
    std::size_t monotone_failures = 0;
    double max_markov_residual = 0;
    // C3
    double distortion_d = 0;
    double element_distortion = 0;  // max spread of log DT^tau over one element
    double distortion_gamma = 0;
    std::size_t distortion_pairs = 0;
    // C4
    std::vector<double> cylinder_diameters;  // n = 1..10
    std::vector<std::size_t> cylinder_counts;  // sampled points whose first n returns are covered
    bool diameters_nonincreasing = false;
    // C5
    double tail_c = 0;
    double tail_gamma = 0;
    double tail_r2 = 0;
    bool tail_fit_ok = false;
    // C6
    int gcd = 0;

    bool c1() const noexcept { return p0 >= 1 && separation_mismatches == 0; }
    bool c2() const noexcept;
    bool c3() const noexcept;
    bool c4() const noexcept { return diameters_nonincreasing; }
    bool c5() const noexcept { return tail_fit_ok && tail_gamma > 0; }
    bool c6() const noexcept { return gcd == 1; }
    double markov_tolerance = 1e-9;
    nlohmann::json to_json() const;
};

struct AxiomSampling {
    std::uint64_t seed = 7;
    std::size_t separation_pairs = 500;
    std::size_t distortion_pairs = 4000;
    std::size_t cylinder_points = 1000;
    int separation_cap = 200;
};

AxiomReport certify_axioms(const ReturnPartition& partition, const AxiomSampling& sampling = {});

}  // namespace rovella
