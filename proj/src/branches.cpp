#include "rovella/branches.hpp"

#include <algorithm>
#include <cmath>

#include "rovella/errors.hpp"

namespace rovella {

namespace {

Side side_at(std::uint64_t itinerary, int j) {
    return ((itinerary >> j) & 1U) != 0 ? Side::positive : Side::negative;
}

// Image of a point on the given side; 0, or rounding onto the wrong side, maps to the one-sided limit.
long double image_point(const MapFamily& family, double t, Side side, long double x) {
    const bool on_side = side == Side::positive ? x > 0 : x < 0;
    return on_side ? family.value(t, x) : family.limit_at_zero(t, side);
}

}  // namespace

long double pull_back(const MapFamily& family, const std::vector<double>& omega, std::uint64_t itinerary,
                      int k, long double y) {
    for (int j = k - 1; j >= 0; --j) {
        y = family.inverse(omega[static_cast<std::size_t>(j)], side_at(itinerary, j), y);
    }
    return y;
}

long double push_forward(const MapFamily& family, const std::vector<double>& omega, std::uint64_t itinerary,
                         int k, long double x) {
    for (int j = 0; j < k; ++j) {
        x = image_point(family, omega[static_cast<std::size_t>(j)], side_at(itinerary, j), x);
    }
    return x;
}

std::vector<double> BranchPartition::cut_points() const {
    std::vector<double> cuts;
    cuts.reserve(branches.size() + 1);
    for (const auto& b : branches) cuts.push_back(static_cast<double>(b.lo));
    if (!branches.empty()) cuts.push_back(static_cast<double>(branches.back().hi));
    return cuts;
}

std::optional<std::size_t> BranchPartition::branch_containing(double x) const {
    auto it = std::upper_bound(branches.begin(), branches.end(), static_cast<long double>(x),
                               [](long double v, const Branch& b) { return v < b.lo; });
    if (it == branches.begin()) return std::nullopt;
    --it;
    if (x <= it->lo + 1e-12L || x >= it->hi - 1e-12L) return std::nullopt;
    return static_cast<std::size_t>(it - branches.begin());
}

long double BranchPartition::evaluate(std::size_t branch, long double x) const {
    return push_forward(*family, omega, branches.at(branch).itinerary, n, x);
}

BranchPartition branch_partition(FamilyPtr family, const NoiseStream& noise, int n, BranchLimits limits) {
    if (n < 1) throw DomainError("branch partition needs n >= 1");
    if (n > limits.max_n || n > 63) throw CapExceeded("branch partition depth exceeds the cap");
    BranchPartition out;
    out.family = family;
    out.n = n;
    for (int j = 0; j < n; ++j) out.omega.push_back(noise.get(j));

    // Each piece carries its x-interval and its image after `level` maps.
    std::vector<Branch> pieces{{-1.0L, 1.0L, -1.0L, 1.0L, 0}};
    for (int level = 0; level < n; ++level) {
        const double t = out.omega[static_cast<std::size_t>(level)];
        std::vector<Branch> next;
        next.reserve(pieces.size() * 2);
        for (const auto& p : pieces) {
            Branch halves[2] = {p, p};
            int count = 1;
            if (p.image_lo < 0 && p.image_hi > 0) {
                const long double cut = pull_back(*family, out.omega, p.itinerary, level, 0.0L);
                halves[0].hi = cut;
                halves[0].image_hi = 0;
                halves[1].lo = cut;
                halves[1].image_lo = 0;
                count = 2;
            }
            for (int h = 0; h < count; ++h) {
                Branch b = halves[h];
                const Side side = b.image_lo >= 0 ? Side::positive : Side::negative;
                if (side == Side::positive) b.itinerary |= std::uint64_t{1} << level;
                b.image_lo = image_point(*family, t, side, b.image_lo);
                b.image_hi = image_point(*family, t, side, b.image_hi);
                next.push_back(b);
            }
        }
        if (next.size() > limits.max_branches) throw CapExceeded("branch count exceeds the configured limit");
        pieces = std::move(next);
    }
    out.branches = std::move(pieces);
    return out;
}

Interval preimage_in_branch(const BranchPartition& partition, std::size_t branch, Interval target) {
    const Branch& b = partition.branches.at(branch);
    const long double lo = std::max<long double>(target.lo, b.image_lo);
    const long double hi = std::min<long double>(target.hi, b.image_hi);
    if (!(lo < hi)) throw EmptyIntersection("target misses the branch image");
    const auto& f = *partition.family;
    long double x_lo = lo == b.image_lo ? b.lo : pull_back(f, partition.omega, b.itinerary, partition.n, lo);
    long double x_hi = hi == b.image_hi ? b.hi : pull_back(f, partition.omega, b.itinerary, partition.n, hi);
    return {static_cast<double>(x_lo), static_cast<double>(x_hi)};
}

}  // namespace rovella
