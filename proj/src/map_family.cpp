#include "rovella/map_family.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rovella/errors.hpp"

namespace rovella {

MapFamily::MapFamily(double s, double eps_max, double k1, double k2)
    : s_(s), eps_max_(eps_max), k1_(k1), k2_(k2) {
    if (!(s > 1)) throw ParamError("singularity order s must exceed 1");
    if (!(eps_max >= 0)) throw ParamError("eps_max must be nonnegative");
    if (!(k1 > 0) || !(k2 >= k1)) throw ParamError("need 0 < K1 <= K2");
}

std::pair<long double, long double> MapFamily::branch_range(long double t, Side side) const {
    const long double at_zero = limit_at_zero(t, side);
    const long double at_end = value(t, side == Side::positive ? 1.0L : -1.0L);
    return side == Side::positive ? std::pair{at_zero, at_end} : std::pair{at_end, at_zero};
}

long double MapFamily::inverse(long double t, Side side, long double y) const {
    const auto [inf, sup] = branch_range(t, side);
    if (y <= inf) return side == Side::positive ? 0.0L : -1.0L;
    if (y >= sup) return side == Side::positive ? 1.0L : 0.0L;
    long double lo = side == Side::positive ? 0.0L : -1.0L;
    long double hi = side == Side::positive ? 1.0L : 0.0L;
    for (int it = 0; it < 200; ++it) {
        const long double mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi) break;
        if (mid == 0 || value(t, mid) < y) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo + (hi - lo) / 2;
}

// ---------------------------------------------------------------------------

ProfileFamily::ProfileFamily(double s, double eps_max, double k1, double k2)
    : MapFamily(s, eps_max, k1, k2) {
    if (s == 2.0) integer_order_ = 2;
    if (s == 3.0) integer_order_ = 3;
}

long double ProfileFamily::power(long double z) const noexcept {
    switch (integer_order_) {
        case 2: return z * z;
        case 3: return z * z * z;
        default: return std::pow(z, static_cast<long double>(order()));
    }
}

long double ProfileFamily::root(long double u) const noexcept {
    if (integer_order_ == 2) return std::sqrt(u);
    if (integer_order_ == 3) return std::cbrt(u);
    return std::pow(u, 1.0L / static_cast<long double>(order()));
}

long double ProfileFamily::value(long double t, long double x) const {
    const Side side = side_of(x);
    const long double a = 1.0L - std::fabs(t) / 2;
    const long double v = a * profile_value(side, power(std::fabs(x))) - sign_of(side) * (1.0L - a);
    return std::clamp(v, -1.0L, 1.0L);
}

long double ProfileFamily::derivative(long double t, long double x) const {
    const Side side = side_of(x);
    const long double a = 1.0L - std::fabs(t) / 2;
    const long double z = std::fabs(x);
    const long double s = order();
    const long double dz = integer_order_ == 2 ? 2 * z : s * power(z) / z;
    return a * profile_slope(side, power(z)) * dz * sign_of(side);
}

Jet ProfileFamily::jet(long double t, long double x) const {
    const Side side = side_of(x);
    const long double sgn = sign_of(side);
    const long double a = 1.0L - std::fabs(t) / 2;
    const long double s = order();
    const long double z = std::fabs(x);
    const long double u = power(z);
    // u = z^s and its z-derivatives.
    const long double u1 = s * u / z;
    const long double u2 = s * (s - 1) * u / (z * z);
    const long double u3 = s * (s - 1) * (s - 2) * u / (z * z * z);
    const Jet p = profile(side, u);
    Jet out;
    out.value = std::clamp(a * p.value - sgn * (1.0L - a), -1.0L, 1.0L);
    out.d1 = sgn * a * p.d1 * u1;
    out.d2 = a * (p.d2 * u1 * u1 + p.d1 * u2);
    out.d3 = sgn * a * (p.d3 * u1 * u1 * u1 + 3 * p.d2 * u1 * u2 + p.d1 * u3);
    return out;
}

long double ProfileFamily::limit_at_zero(long double t, Side side) const {
    const long double a = 1.0L - std::fabs(t) / 2;
    return a * profile_value(side, 0.0L) - sign_of(side) * (1.0L - a);
}

long double ProfileFamily::inverse(long double t, Side side, long double y) const {
    const long double a = 1.0L - std::fabs(t) / 2;
    const long double target = (y + sign_of(side) * (1.0L - a)) / a;
    const long double p0 = profile_value(side, 0.0L);
    const long double p1 = profile_value(side, 1.0L);
    const long double lo = std::min(p0, p1);
    const long double hi = std::max(p0, p1);
    const long double u = profile_inverse(side, std::clamp(target, lo, hi));
    const long double z = root(std::clamp(u, 0.0L, 1.0L));
    return side == Side::positive ? z : -z;
}

// ---------------------------------------------------------------------------

FixtureFamily::FixtureFamily(double s, double eps_max)
    : ProfileFamily(s, eps_max, (2.0 - eps_max) * s, 2.0 * s) {
    if (eps_max >= 2.0) throw ParamError("fixture requires eps_max < 2");
}

nlohmann::json FixtureFamily::to_json() const {
    return {{"kind", "fixture"}, {"s", order()}, {"eps_max", eps_max()}};
}

Jet FixtureFamily::profile(Side side, long double u) const {
    const long double sgn = sign_of(side);
    return {sgn * (2 * u - 1), sgn * 2, 0, 0};
}

long double FixtureFamily::profile_value(Side side, long double u) const {
    return sign_of(side) * (2 * u - 1);
}

long double FixtureFamily::profile_slope(Side side, long double) const {
    return sign_of(side) * 2.0L;
}

long double FixtureFamily::profile_inverse(Side side, long double y) const {
    return (sign_of(side) * y + 1) / 2;
}

// ---------------------------------------------------------------------------

namespace {

void check_table(const ProfileTable& t, double start, bool increasing, const char* name) {
    if (t.u.size() != t.y.size() || t.u.size() < 2) {
        throw ParamError(std::string(name) + " table needs matching u/y arrays of length >= 2");
    }
    if (t.u.front() != 0.0 || t.u.back() != 1.0) {
        throw ParamError(std::string(name) + " table must span u in [0, 1]");
    }
    if (t.y.front() != start) {
        std::ostringstream msg;
        msg << name << " table must start at y = " << start;
        throw ParamError(msg.str());
    }
    for (std::size_t i = 1; i < t.u.size(); ++i) {
        if (!(t.u[i] > t.u[i - 1])) throw ParamError(std::string(name) + " knots must increase");
        const bool ok = increasing ? t.y[i] > t.y[i - 1] : t.y[i] < t.y[i - 1];
        if (!ok) throw ParamError(std::string(name) + " values must be strictly monotone");
    }
    for (double y : t.y) {
        if (y < -1.0 || y > 1.0) throw ParamError(std::string(name) + " values must lie in [-1, 1]");
    }
}

}  // namespace

TabulatedFamily::TabulatedFamily(double s, double eps_max, double k1, double k2,
                                 ProfileTable positive, ProfileTable negative)
    : ProfileFamily(s, eps_max, k1, k2) {
    check_table(positive, -1.0, true, "positive");
    check_table(negative, 1.0, false, "negative");
    if (eps_max >= 2.0) throw ParamError("table family requires eps_max < 2");
    pos_ = fit(std::move(positive), true);
    neg_ = fit(std::move(negative), false);
}

TabulatedFamily::Spline TabulatedFamily::fit(ProfileTable table, bool increasing) {
    (void)increasing;
    const std::size_t n = table.u.size();
    std::vector<long double> h(n - 1), delta(n - 1), d(n);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = static_cast<long double>(table.u[k + 1]) - table.u[k];
        delta[k] = (static_cast<long double>(table.y[k + 1]) - table.y[k]) / h[k];
    }
    if (n == 2) {
        d[0] = d[1] = delta[0];
    } else {
        for (std::size_t k = 1; k + 1 < n; ++k) {
            if (delta[k - 1] * delta[k] <= 0) {
                d[k] = 0;
            } else {
                const long double w1 = 2 * h[k] + h[k - 1];
                const long double w2 = h[k] + 2 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        // Shape-preserving three-point end slopes.
        auto end_slope = [](long double h0, long double h1, long double m0, long double m1) {
            long double slope = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
            if (slope * m0 <= 0) {
                slope = 0;
            } else if (m0 * m1 <= 0 && std::fabs(slope) > std::fabs(3 * m0)) {
                slope = 3 * m0;
            }
            return slope;
        };
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }
    Spline sp;
    sp.c1.resize(n - 1);
    sp.c2.resize(n - 1);
    sp.c3.resize(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        sp.c1[k] = d[k];
        sp.c2[k] = (3 * delta[k] - 2 * d[k] - d[k + 1]) / h[k];
        sp.c3[k] = (d[k] + d[k + 1] - 2 * delta[k]) / (h[k] * h[k]);
    }
    sp.table = std::move(table);
    return sp;
}

Jet TabulatedFamily::Spline::at(long double u) const {
    const auto& knots = table.u;
    auto it = std::upper_bound(knots.begin(), knots.end(), static_cast<double>(u));
    std::size_t k = it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin()) - 1;
    k = std::min(k, knots.size() - 2);
    const long double w = u - knots[k];
    Jet j;
    j.value = table.y[k] + w * (c1[k] + w * (c2[k] + w * c3[k]));
    j.d1 = c1[k] + w * (2 * c2[k] + 3 * w * c3[k]);
    j.d2 = 2 * c2[k] + 6 * w * c3[k];
    j.d3 = 6 * c3[k];
    return j;
}

Jet TabulatedFamily::profile(Side side, long double u) const { return spline(side).at(u); }

long double TabulatedFamily::profile_value(Side side, long double u) const {
    return spline(side).at(u).value;
}

long double TabulatedFamily::profile_slope(Side side, long double u) const {
    return spline(side).at(u).d1;
}

long double TabulatedFamily::profile_inverse(Side side, long double y) const {
    const Spline& sp = spline(side);
    const bool increasing = side == Side::positive;
    long double lo = 0, hi = 1;
    for (int it = 0; it < 200; ++it) {
        const long double mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi) break;
        const long double v = sp.at(mid).value;
        if ((v < y) == increasing) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo + (hi - lo) / 2;
}

nlohmann::json TabulatedFamily::to_json() const {
    return {{"kind", "table"},
            {"s", order()},
            {"eps_max", eps_max()},
            {"K1", k1()},
            {"K2", k2()},
            {"positive", {{"u", pos_.table.u}, {"y", pos_.table.y}}},
            {"negative", {{"u", neg_.table.u}, {"y", neg_.table.y}}}};
}

// ---------------------------------------------------------------------------

FamilyPtr make_family(const nlohmann::json& spec) {
    const std::string kind = spec.value("kind", std::string("fixture"));
    const double s = spec.value("s", 2.0);
    const double eps_max = spec.value("eps_max", 0.02);
    if (kind == "fixture") return std::make_shared<FixtureFamily>(s, eps_max);
    if (kind == "table") {
        auto table = [&](const char* key) {
            if (!spec.contains(key)) throw ParamError(std::string("table family lacks '") + key + "'");
            const auto& j = spec.at(key);
            return ProfileTable{j.at("u").get<std::vector<double>>(), j.at("y").get<std::vector<double>>()};
        };
        if (!spec.contains("K1") || !spec.contains("K2")) {
            throw ParamError("table family must declare K1 and K2");
        }
        return std::make_shared<TabulatedFamily>(s, eps_max, spec.at("K1").get<double>(),
                                                 spec.at("K2").get<double>(), table("positive"),
                                                 table("negative"));
    }
    throw ParamError("unknown family kind '" + kind + "'");
}

namespace {

void check_domain(const MapFamily& family, double t, double x) {
    if (x == 0.0) throw DomainError("x = 0 is the singular point");
    if (!(std::fabs(x) <= 1.0)) throw DomainError("x outside [-1, 1]");
    if (!(std::fabs(t) <= family.eps_max())) throw DomainError("|t| exceeds eps_max");
}

}  // namespace

double evaluate(const MapFamily& family, double t, double x) {
    check_domain(family, t, x);
    return static_cast<double>(family.value(t, x));
}

double derivative(const MapFamily& family, double t, double x) {
    check_domain(family, t, x);
    return static_cast<double>(family.derivative(t, x));
}

double second_derivative(const MapFamily& family, double t, double x) {
    check_domain(family, t, x);
    return static_cast<double>(family.jet(t, x).d2);
}

double third_derivative(const MapFamily& family, double t, double x) {
    check_domain(family, t, x);
    return static_cast<double>(family.jet(t, x).d3);
}

double schwarzian(const MapFamily& family, double t, double x) {
    check_domain(family, t, x);
    const Jet j = family.jet(t, x);
    const long double ratio = j.d2 / j.d1;
    return static_cast<double>(j.d3 / j.d1 - 1.5L * ratio * ratio);
}

}  // namespace rovella
