#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rovella/fit.hpp"
#include "rovella/hyperbolic.hpp"
#include "rovella/map_family.hpp"

namespace rovella {

/// survivors[n] counts samples still "alive" at n (in E_n, or first time > n).
struct TailTable {
    std::string name;
    std::vector<std::size_t> survivors;  // n = 0..n_max
    std::size_t total = 0;
    std::optional<ExpFit> fit;

    double fraction(std::size_t n) const;
    nlohmann::json to_json() const;
};

struct EnsembleParams {
    std::uint64_t seed = 1;
    double eps = 0.01;
    std::size_t samples = 100000;
    int n_max = 60;
    int workers = 1;
    std::size_t min_survivors = 100;
};

struct EnsembleTails {
    TailTable bad_set;           // (P x Leb)(E_n)
    TailTable first_hyperbolic;  // P(h > n)
    TailTable first_return;      // P(h* > n)
    std::size_t singular_hits = 0;
    std::size_t samples = 0;
};

// Samples (omega, x) with x uniform on I and omega from derived seeds; results do not
// depend on the worker count.
EnsembleTails ensemble_tails(const MapFamily& family, const HyperbolicConfig& cfg, const EnsembleParams& params);

// Log-linear fit from the mode of the survivor curve to the last n with at least
// `min_survivors` survivors. Empty when that range has fewer than 5 points.
std::optional<ExpFit> fit_tail(const TailTable& table, std::size_t min_survivors);

}  // namespace rovella
