#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rovella/map_family.hpp"
#include "rovella/neighborhoods.hpp"
#include "rovella/noise.hpp"

namespace rovella {

// Pulls y back from level k to level 0 through T_{w_{k-1}}, ..., T_{w_0}. Bit j of
// `itinerary` is the side of the level-j point (1 = positive). Extended precision:
// the inverse branches contract, so the chain does not amplify rounding.
long double pull_back(const MapFamily& family, const std::vector<double>& omega, std::uint64_t itinerary,
                      int k, long double y);

// T_{w_{k-1}} o ... o T_{w_0}(x) in extended precision, following the itinerary at 0
// so that branch endpoints map to their one-sided limits.
long double push_forward(const MapFamily& family, const std::vector<double>& omega, std::uint64_t itinerary,
                         int k, long double x);

/// A maximal interval on which T_omega^n is monotone, with its image.
struct Branch {
    long double lo = 0;
    long double hi = 0;
    long double image_lo = 0;
    long double image_hi = 0;
    std::uint64_t itinerary = 0;
};

/// The branches of T_omega^n for one noise realization, sorted left to right.
struct BranchPartition {
    FamilyPtr family;
    std::vector<double> omega;  // w_0 .. w_{n-1}
    int n = 0;
    std::vector<Branch> branches;

    std::vector<double> cut_points() const;
    // Index of the branch containing x; none when x is within 1e-12 of a cut.
    std::optional<std::size_t> branch_containing(double x) const;
    long double evaluate(std::size_t branch, long double x) const;
};

struct BranchLimits {
    int max_n = 40;
    std::size_t max_branches = std::size_t{1} << 22;
};

// CapExceeded when n exceeds the cap or the branch count exceeds max_branches.
BranchPartition branch_partition(FamilyPtr family, const NoiseStream& noise, int n, BranchLimits limits = {});

// J inside the branch with T_omega^n(J) = target intersected with the branch image.
// EmptyIntersection when the two are disjoint.
Interval preimage_in_branch(const BranchPartition& partition, std::size_t branch, Interval target);

}  // namespace rovella
