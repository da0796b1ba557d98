#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rovella/map_family.hpp"
#include "rovella/neighborhoods.hpp"
#include "rovella/noise.hpp"
#include "rovella/orbit.hpp"

namespace rovella {

struct HyperbolicConfig {
    double delta = 0.001;
    double delta0 = 0.003;
    double c = 0.165;
    double c_prime = 0.33;
    double kappa = 0.66;
    double expansion_constant = 0.5;  // C in DT^n >= C e^{lambda n}

    double lambda_prime() const noexcept { return kappa - c_prime; }
    // ParamError unless 0 < c < c_prime < kappa, delta > 0 and delta0 > 0.
    void validate() const;
    nlohmann::json to_json() const;
};

/// The two smallness constraints on delta0 used by the V_{x,n} construction, evaluated
/// for given constants. `distortion` is the admissibility constant C'.
struct Delta0Constraints {
    double expansion_lhs = 0;  // C' C^{-1} K2 delta0 delta^{1/s}, needs < lambda'/2
    double expansion_rhs = 0;
    double radius_lhs = 0;     // delta0, needs < (C / K2) delta^{1/s}
    double radius_rhs = 0;
    bool c_prime_third = false;  // c' <= kappa / 3, so that lambda'/2 >= c'
    bool bounds_hold() const noexcept { return expansion_lhs < expansion_rhs && radius_lhs < radius_rhs; }
    bool satisfied() const noexcept { return bounds_hold() && c_prime_third; }
    nlohmann::json to_json() const;
};

Delta0Constraints delta0_constraints(const MapFamily& family, const HyperbolicConfig& cfg, double distortion);

struct HyperbolicReport {
    std::vector<int> times;
    std::optional<int> first;
    std::vector<int> return_times;
    std::optional<int> first_return;
    bool bad = false;  // membership in E_n for n = trace length
};

// Indices n in 1..len with sum_{j=k}^{n-1} a_j > c1 (n - k) for every 0 <= k < n.
// ParamError unless A >= c2 > c1 and every a_j <= A.
std::vector<int> pliss_times(const std::vector<double>& a, double c1, double c2, double A);

// Times n in 1..len with sum_{j=k}^{n-1} depths[j] < c_prime (n - k) for all k < n.
// Comparisons are exact in the binary value of c_prime. Linear time.
std::vector<int> hyperbolic_times(const std::vector<int>& depths, std::size_t len, double c_prime);
std::optional<int> first_hyperbolic_time(const std::vector<int>& depths, std::size_t len, double c_prime);

// Definition-level check of a single time, quadratic overall; used as a cross-check.
bool is_hyperbolic_time(const std::vector<int>& depths, std::size_t n, double c_prime);

// `return_region` is B~(delta0 / 2).
HyperbolicReport hyperbolic_times(const OrbitTrace& trace, const HyperbolicConfig& cfg,
                                  const CriticalNeighborhoods& return_region);
HyperbolicReport hyperbolic_times(const MapFamily& family, const OrbitTrace& trace, const HyperbolicConfig& cfg);

bool bad_set_membership(const OrbitTrace& trace, const HyperbolicConfig& cfg, std::size_t n);
bool bad_set_membership(const std::vector<int>& depths, double c, std::size_t n);

std::vector<int> hyperbolic_return_times(const OrbitTrace& trace, const HyperbolicConfig& cfg,
                                         const CriticalNeighborhoods& return_region);
std::optional<int> first_hyperbolic_return(const OrbitTrace& trace, const HyperbolicConfig& cfg,
                                           const CriticalNeighborhoods& return_region);

struct BindingViolation {
    int sample = 0;
    int j = 0;
    int display = 0;  // 1: shadowing, 2: derivative ratio, 3: displacement
    double y = 0;
};

struct CheckReport {
    bool pass = true;
    int samples = 0;
    std::optional<BindingViolation> first_violation;
    nlohmann::json to_json() const;
};

// Tests the three binding-period displays for `sample` points y with |y - v| <= eps and
// independent noise realizations derived from `noise` (whose own eps sets the noise size).
CheckReport binding_period_check(const MapFamily& family, const NoiseStream& noise, double v, double eps, int N,
                                 double C, int sample);

// sum_{i<N} 1/DT_0^{i+1}(v) and A(0, v, N) along the unperturbed orbit of v.
struct BindingSums {
    double w = 0;
    double a = 0;
};
BindingSums binding_sums(const MapFamily& family, double v, int N);

// Largest N <= cap with A(0, v, N) W_N <= theta1 / eps; 0 when even N = 1 fails.
int admissible_binding_length(const MapFamily& family, double v, double eps, double theta1, int cap = 10000);

struct VCertificate {
    bool single_branch = false;
    bool expansion = false;
    double min_expansion_margin = 0;  // min over samples and k of DT^{n-k} / (C e^{lambda'(n-k)/2})
    bool distortion = false;
    double max_distortion = 0;  // max over k of the estimated N(T^{n-k} | T^k V)
    bool pass() const noexcept { return single_branch && expansion && distortion; }
    nlohmann::json to_json() const;
};

struct VNeighborhood {
    Interval interval;
    Interval image;  // T_omega^n of the interval
    VCertificate certificate;
};

// V_{x,n} = (T_omega^n)^{-1}(B(T_omega^n x, delta0)) n B(x, C^{-1} delta0 e^{-lambda' n / 2}),
// taken inside the branch of T_omega^n containing x. NotHyperbolic unless n is a
// hyperbolic time of (omega, x); BranchStraddle when B(T^n x, delta0) n I leaves the branch image.
VNeighborhood v_neighborhood(const MapFamily& family, const NoiseStream& noise, double x, int n,
                             const HyperbolicConfig& cfg);

struct PreferredBinding {
    bool found = false;
    int m = 0;
    double lambda0 = 0;  // DT_0^M at the critical value
    double w0 = 0;
    double theta = 0;
    double l = 0;
    double zeta = 0;
    std::string reason;
    nlohmann::json to_json() const;
};

// Smallest M meeting the three conditions along both critical value orbits, searched up
// to `cap` steps. theta = theta1 / (4 W0), L = 2^{s+1} + 1, zeta = 1 / (2s).
PreferredBinding preferred_binding_period(const MapFamily& family, double delta, double theta1 = 0.09,
                                          int cap = 10000);

struct KappaEstimate {
    double kappa = 0;
    std::size_t events = 0;
    std::size_t samples = 0;
};

// 1st percentile of (1/n) log DT_omega^n(x) over escape events: x, ..., x_{n-1} outside
// B~(delta) and x_n in B~(2 delta). Samples use derived seeds, so the result is independent of workers.
KappaEstimate estimate_kappa(const MapFamily& family, std::uint64_t seed, double eps, double delta,
                             std::size_t samples = 20000, int horizon = 200, int workers = 1);

}  // namespace rovella
