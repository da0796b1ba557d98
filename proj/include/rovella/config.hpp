#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rovella/hyperbolic.hpp"
#include "rovella/map_family.hpp"
#include "rovella/measures.hpp"
#include "rovella/tower.hpp"

namespace rovella {

struct OrbitSection {
    double x0 = 0.3;
    int n = 1000;
};

struct TailsSection {
    std::size_t samples = 100000;
    int n_max = 60;
    std::size_t min_survivors = 100;
};

struct TowerSection {
    double delta_prime = 0.05;
    int n_max = 25;
    int seed_grid = 4096;  // accepted for compatibility; the builder evolves every branch
    bool require_hyperbolic = true;
    bool require_v_ball = true;
    int aperiodicity_scan = 30;
    std::uint64_t sampling_seed = 7;
    std::size_t separation_pairs = 500;
    std::size_t distortion_pairs = 4000;
    std::size_t cylinder_points = 1000;
};

struct MeasuresSection {
    std::size_t grid_m = 2048;
    int m_past = 200;
    bool adaptive = false;
    int n_max = 40;
    std::string phi = "x";
    std::string psi = "sign";
    std::string method = "ulam";
    std::string direction = "forward";
    std::size_t samples = 100000;
    std::size_t burn_in = 5;
};

struct FitSection {
    std::string input;
    std::string column;  // empty: C_n, then fraction, then the last column
    std::size_t burn_in = 0;
};

struct OutputSection {
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "json"};
};

/// Everything a run needs. Sections missing from a config file keep their defaults;
/// unknown keys are errors.
struct ExperimentConfig {
    nlohmann::json family{{"kind", "fixture"}, {"s", 2.0}, {"eps_max", 0.01}};
    std::uint64_t seed = 1;
    double eps = 0.01;
    HyperbolicConfig hyperbolic;
    OrbitSection orbit;
    TailsSection tails;
    TowerSection tower;
    MeasuresSection measures;
    FitSection fit;
    OutputSection output;
    int workers = 1;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    nlohmann::json to_json() const;

    // Builds the family and re-checks every constraint chain. ConfigError names the chain.
    FamilyPtr validate() const;

    TowerConfig tower_config() const;
    CorrelationParams correlation_params() const;
    bool wants(const std::string& format) const;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

}  // namespace rovella
