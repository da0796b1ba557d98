#pragma once

#include <cstdint>

namespace rovella {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seed of the index-th member of an ensemble rooted at `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(master ^ mix64(index ^ 0xD1B54A32D192ED03ULL));
}

// Uniform double in [0, 1) from the top 53 bits of a hash.
constexpr double unit_interval(std::uint64_t h) noexcept {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// A two-sided i.i.d. sequence omega = (..., w_-1, w_0, w_1, ...) with w_i uniform on
/// [-eps, eps]. Values are counter-based: w_i depends only on (seed, i), so access
/// order is irrelevant and the stream is a plain value, shareable across threads.
/// shifted(k) realizes sigma^k.
class NoiseStream {
public:
    NoiseStream() = default;
    NoiseStream(std::uint64_t seed, double eps) : seed_(seed), eps_(eps) {}

    double get(std::int64_t i) const noexcept {
        if (eps_ == 0.0) return 0.0;
        const auto key = static_cast<std::uint64_t>(i + offset_);
        const double u = unit_interval(mix64(seed_ ^ mix64(key)));
        return eps_ * (2.0 * u - 1.0);
    }

    NoiseStream shifted(std::int64_t k) const noexcept {
        NoiseStream out = *this;
        out.offset_ += k;
        return out;
    }

    std::uint64_t seed() const noexcept { return seed_; }
    double eps() const noexcept { return eps_; }
    std::int64_t offset() const noexcept { return offset_; }

    friend bool operator==(const NoiseStream&, const NoiseStream&) = default;

private:
    std::uint64_t seed_ = 0;
    double eps_ = 0.0;
    std::int64_t offset_ = 0;
};

inline NoiseStream stream(std::uint64_t master_seed, double eps) { return {master_seed, eps}; }
inline NoiseStream shift(const NoiseStream& s, std::int64_t k) { return s.shifted(k); }

}  // namespace rovella
