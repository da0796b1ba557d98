#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "json.hpp"

namespace rovella {

enum class Side : int { negative = -1, positive = 1 };

constexpr Side side_of(long double x) noexcept { return x > 0 ? Side::positive : Side::negative; }
constexpr int sign_of(Side side) noexcept { return static_cast<int>(side); }

// Value of a branch and its first three x-derivatives at one point.
struct Jet {
    long double value = 0;
    long double d1 = 0;
    long double d2 = 0;
    long double d3 = 0;
};

/// A one-parameter family {T_t} of contracting Lorenz maps on I = [-1, 1] with a
/// singularity of order s at 0. Members are immutable and safe to share across threads.
///
/// The virtual interface works in extended precision and performs no domain checks;
/// the free functions below (evaluate, derivative, ...) are the checked entry points.
class MapFamily {
public:
    virtual ~MapFamily() = default;

    double order() const noexcept { return s_; }
    double eps_max() const noexcept { return eps_max_; }
    double k1() const noexcept { return k1_; }
    double k2() const noexcept { return k2_; }

    virtual long double value(long double t, long double x) const = 0;
    virtual long double derivative(long double t, long double x) const = 0;
    virtual Jet jet(long double t, long double x) const = 0;

    // One-sided limit of T_t at the singularity.
    virtual long double limit_at_zero(long double t, Side side) const = 0;

    // The point on `side` that T_t maps to y. y is clamped into the branch range.
    // The default bisects the monotone branch down to adjacent representable values.
    virtual long double inverse(long double t, Side side, long double y) const;

    // (inf, sup) of T_t over the branch on `side`.
    std::pair<long double, long double> branch_range(long double t, Side side) const;

    virtual nlohmann::json to_json() const = 0;

protected:
    MapFamily(double s, double eps_max, double k1, double k2);

private:
    double s_;
    double eps_max_;
    double k1_;
    double k2_;
};

using FamilyPtr = std::shared_ptr<const MapFamily>;

// Families of the form T_t(x) = a P_side(|x|^s) - sign(x) (1 - a) with a = 1 - |t|/2,
// where the profile P_side is monotone on [0, 1] with P_+(0) = -1 and P_-(0) = 1.
// The singular limits T_t(0^+) = -1 and T_t(0^-) = 1 then hold for every t, and
// |dT/dt| <= 1 follows from |P| <= 1.
class ProfileFamily : public MapFamily {
public:
    long double value(long double t, long double x) const override;
    long double derivative(long double t, long double x) const override;
    Jet jet(long double t, long double x) const override;
    long double limit_at_zero(long double t, Side side) const override;
    long double inverse(long double t, Side side, long double y) const override;

protected:
    ProfileFamily(double s, double eps_max, double k1, double k2);

    // P_side(u) and its u-derivatives.
    virtual Jet profile(Side side, long double u) const = 0;
    virtual long double profile_value(Side side, long double u) const = 0;
    virtual long double profile_slope(Side side, long double u) const = 0;
    // u in [0, 1] with P_side(u) = y; y already lies in the profile range.
    virtual long double profile_inverse(Side side, long double y) const = 0;

private:
    long double power(long double z) const noexcept;
    long double root(long double u) const noexcept;

    int integer_order_ = 0;  // s when s is 2 or 3, else 0
};

// T_t(x) = sign(x) ((2 - |t|) |x|^s - 1).
class FixtureFamily final : public ProfileFamily {
public:
    FixtureFamily(double s, double eps_max);
    nlohmann::json to_json() const override;

protected:
    Jet profile(Side side, long double u) const override;
    long double profile_value(Side side, long double u) const override;
    long double profile_slope(Side side, long double u) const override;
    long double profile_inverse(Side side, long double y) const override;
};

// Knot table of a monotone profile: u from 0 to 1, y monotone.
struct ProfileTable {
    std::vector<double> u;
    std::vector<double> y;
};

/// Profiles given as monotone cubic Hermite (Fritsch-Carlson) interpolants in u = |x|^s.
/// The positive table must start at y = -1 and increase; the negative one must start
/// at y = 1 and decrease. K1 and K2 are declared, not derived.
class TabulatedFamily final : public ProfileFamily {
public:
    TabulatedFamily(double s, double eps_max, double k1, double k2, ProfileTable positive,
                    ProfileTable negative);
    nlohmann::json to_json() const override;

protected:
    Jet profile(Side side, long double u) const override;
    long double profile_value(Side side, long double u) const override;
    long double profile_slope(Side side, long double u) const override;
    long double profile_inverse(Side side, long double y) const override;

private:
    struct Spline {
        ProfileTable table;
        std::vector<long double> c1, c2, c3;  // per-segment cubic coefficients
        Jet at(long double u) const;
    };
    static Spline fit(ProfileTable table, bool increasing);
    const Spline& spline(Side side) const { return side == Side::positive ? pos_ : neg_; }

    Spline pos_;
    Spline neg_;
};

// Builds a family from {"kind": "fixture", "s", "eps_max"} or
// {"kind": "table", "s", "eps_max", "K1", "K2", "positive": {"u", "y"}, "negative": {...}}.
FamilyPtr make_family(const nlohmann::json& spec);

// Checked evaluation. DomainError when x = 0, |x| > 1 or |t| > eps_max.
double evaluate(const MapFamily& family, double t, double x);
double derivative(const MapFamily& family, double t, double x);
double second_derivative(const MapFamily& family, double t, double x);
double third_derivative(const MapFamily& family, double t, double x);
// S(T_t)(x) = T'''/T' - (3/2) (T''/T')^2.
double schwarzian(const MapFamily& family, double t, double x);

}  // namespace rovella
