#include "rovella/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rovella/branches.hpp"
#include "rovella/errors.hpp"
#include "rovella/parallel.hpp"

namespace rovella {

void HyperbolicConfig::validate() const {
    if (!(delta > 0)) throw ParamError("delta must be positive");
    if (!(delta0 > 0)) throw ParamError("delta0 must be positive");
    if (!(c > 0 && c < c_prime && c_prime < kappa)) {
        throw ParamError("constants must satisfy 0 < c < c_prime < kappa");
    }
    if (!(expansion_constant > 0)) throw ParamError("expansion constant must be positive");
}

nlohmann::json HyperbolicConfig::to_json() const {
    return {{"delta", delta},   {"delta0", delta0}, {"c", c},
            {"c_prime", c_prime}, {"kappa", kappa}, {"lambda_prime", lambda_prime()},
            {"expansion_constant", expansion_constant}};
}

nlohmann::json Delta0Constraints::to_json() const {
    return {{"expansion", {{"lhs", expansion_lhs}, {"rhs", expansion_rhs}, {"pass", expansion_lhs < expansion_rhs}}},
            {"radius", {{"lhs", radius_lhs}, {"rhs", radius_rhs}, {"pass", radius_lhs < radius_rhs}}},
            {"c_prime_at_most_kappa_over_3", c_prime_third},
            {"satisfied", satisfied()}};
}

Delta0Constraints delta0_constraints(const MapFamily& family, const HyperbolicConfig& cfg, double distortion) {
    Delta0Constraints out;
    const double root = std::pow(cfg.delta, 1.0 / family.order());
    out.expansion_lhs = distortion / cfg.expansion_constant * family.k2() * cfg.delta0 * root;
    out.expansion_rhs = cfg.lambda_prime() / 2;
    out.radius_lhs = cfg.delta0;
    out.radius_rhs = cfg.expansion_constant / family.k2() * root;
    out.c_prime_third = cfg.c_prime <= cfg.kappa / 3;
    return out;
}

std::vector<int> pliss_times(const std::vector<double>& a, double c1, double c2, double A) {
    if (!(A >= c2 && c2 > c1)) throw ParamError("pliss_times needs A >= c2 > c1");
    for (double v : a) {
        if (v > A) throw ParamError("pliss_times needs a_j <= A");
    }
    std::vector<int> out;
    long double q = 0;
    long double best = 0;  // max over k < n of Q_k - c1 k
    for (std::size_t n = 1; n <= a.size(); ++n) {
        q += a[n - 1];
        const long double p = q - static_cast<long double>(c1) * n;
        if (p > best) out.push_back(static_cast<int>(n));
        best = std::max(best, p);
    }
    return out;
}

namespace {

// c_prime = mantissa * 2^{-shift} with an odd integer mantissa.
struct ExactRate {
    std::int64_t mantissa = 0;
    int shift = 0;
};

ExactRate exact_rate(double c_prime) {
    if (!(c_prime > 0) || !std::isfinite(c_prime)) throw ParamError("c_prime must be positive and finite");
    int e = 0;
    const double f = std::frexp(c_prime, &e);
    auto m = static_cast<std::int64_t>(std::ldexp(f, 53));
    int shift = 53 - e;
    while ((m & 1) == 0 && shift > 0) {
        m >>= 1;
        --shift;
    }
    if (shift < 0 || shift > 90) throw ParamError("c_prime outside the exactly comparable range");
    return {m, shift};
}

}  // namespace

std::vector<int> hyperbolic_times(const std::vector<int>& depths, std::size_t len, double c_prime) {
    if (len > depths.size()) throw DomainError("hyperbolic time horizon exceeds the depth sequence");
    const ExactRate rate = exact_rate(c_prime);
    // n is hyperbolic iff P_n < min_{k<n} P_k with P_i = R_i 2^shift - mantissa i.
    std::vector<int> out;
    __int128 r = 0;
    __int128 min_p = 0;
    for (std::size_t n = 1; n <= len; ++n) {
        r += depths[n - 1];
        const __int128 p = (r << rate.shift) - static_cast<__int128>(rate.mantissa) * static_cast<__int128>(n);
        if (p < min_p) {
            out.push_back(static_cast<int>(n));
            min_p = p;
        }
    }
    return out;
}

std::optional<int> first_hyperbolic_time(const std::vector<int>& depths, std::size_t len, double c_prime) {
    const auto times = hyperbolic_times(depths, len, c_prime);
    if (times.empty()) return std::nullopt;
    return times.front();
}

bool is_hyperbolic_time(const std::vector<int>& depths, std::size_t n, double c_prime) {
    if (n == 0 || n > depths.size()) return false;
    const ExactRate rate = exact_rate(c_prime);
    __int128 sum = 0;
    for (std::size_t k = n; k-- > 0;) {
        sum += depths[k];
        const auto span = static_cast<__int128>(n - k);
        if ((sum << rate.shift) >= static_cast<__int128>(rate.mantissa) * span) return false;
    }
    return true;
}

bool bad_set_membership(const std::vector<int>& depths, double c, std::size_t n) {
    if (n > depths.size()) throw DomainError("bad set index past trace end");
    long long sum = 0;
    for (std::size_t j = 0; j < n; ++j) sum += depths[j];
    return static_cast<long double>(sum) >= static_cast<long double>(c) * static_cast<long double>(n);
}

bool bad_set_membership(const OrbitTrace& trace, const HyperbolicConfig& cfg, std::size_t n) {
    if (n > trace.length()) throw DomainError("bad set index past trace end");
    return bad_set_membership(trace.depths, cfg.c, n);
}

std::vector<int> hyperbolic_return_times(const OrbitTrace& trace, const HyperbolicConfig& cfg,
                                         const CriticalNeighborhoods& return_region) {
    std::vector<int> out;
    for (int n : hyperbolic_times(trace.depths, trace.length(), cfg.c_prime)) {
        if (return_region.contains(trace.points[static_cast<std::size_t>(n)])) out.push_back(n);
    }
    return out;
}

std::optional<int> first_hyperbolic_return(const OrbitTrace& trace, const HyperbolicConfig& cfg,
                                           const CriticalNeighborhoods& return_region) {
    const auto times = hyperbolic_return_times(trace, cfg, return_region);
    if (times.empty()) return std::nullopt;
    return times.front();
}

HyperbolicReport hyperbolic_times(const OrbitTrace& trace, const HyperbolicConfig& cfg,
                                  const CriticalNeighborhoods& return_region) {
    HyperbolicReport rep;
    rep.times = hyperbolic_times(trace.depths, trace.length(), cfg.c_prime);
    if (!rep.times.empty()) rep.first = rep.times.front();
    for (int n : rep.times) {
        if (return_region.contains(trace.points[static_cast<std::size_t>(n)])) rep.return_times.push_back(n);
    }
    if (!rep.return_times.empty()) rep.first_return = rep.return_times.front();
    rep.bad = bad_set_membership(trace, cfg, trace.length());
    return rep;
}

HyperbolicReport hyperbolic_times(const MapFamily& family, const OrbitTrace& trace, const HyperbolicConfig& cfg) {
    return hyperbolic_times(trace, cfg, tilde_b(family, 0.0, cfg.delta0 / 2));
}

// ---------------------------------------------------------------------------

nlohmann::json CheckReport::to_json() const {
    nlohmann::json j = {{"pass", pass}, {"samples", samples}};
    if (first_violation) {
        j["first_violation"] = {{"sample", first_violation->sample},
                                {"j", first_violation->j},
                                {"display", first_violation->display},
                                {"y", first_violation->y}};
    } else {
        j["first_violation"] = nullptr;
    }
    return j;
}

CheckReport binding_period_check(const MapFamily& family, const NoiseStream& noise, double v, double eps, int N,
                                 double C, int sample) {
    if (v == 0) throw DomainError("binding period needs v != 0");
    CheckReport rep;
    rep.samples = sample;
    if (N <= 0) return rep;

    // Unperturbed orbit of v and log DT^{j}(v), j = 0..N.
    std::vector<long double> vs{v};
    std::vector<long double> log_dv{0};
    for (int j = 0; j < N; ++j) {
        const long double x = vs.back();
        if (x == 0) throw SingularHit("reference orbit hit 0");
        log_dv.push_back(log_dv.back() + std::log(family.derivative(0.0L, x)));
        vs.push_back(family.value(0.0L, x));
    }

    for (int k = 0; k < sample; ++k) {
        const auto uk = static_cast<std::uint64_t>(k);
        const double u = unit_interval(derive_seed(noise.seed(), 2 * uk));
        double y0 = v + eps * (2 * u - 1);
        y0 = std::clamp(y0, -1.0, 1.0);
        const NoiseStream omega(derive_seed(noise.seed(), 2 * uk + 1), noise.eps());
        long double y = y0;
        long double log_dy = 0;
        for (int j = 0; j < N; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            int failed = 0;
            if (y == 0 || 2 * std::fabs(y - vs[ju]) > std::fabs(vs[ju])) {
                failed = 1;
            } else {
                const double t = omega.get(j);
                log_dy += std::log(family.derivative(t, y));
                y = family.value(t, y);
                const long double ratio = log_dy - log_dv[ju + 1];
                if (ratio < -1.0L || ratio > 1.0L) {
                    failed = 2;
                } else if (C * eps * std::exp(log_dv[ju + 1]) < std::fabs(y - vs[ju + 1])) {
                    failed = 3;
                }
            }
            if (failed != 0) {
                rep.pass = false;
                rep.first_violation = BindingViolation{k, j, failed, y0};
                return rep;
            }
        }
    }
    return rep;
}

BindingSums binding_sums(const MapFamily& family, double v, int N) {
    BindingSums out;
    long double x = v;
    long double der = 1;
    for (int i = 0; i < N; ++i) {
        if (x == 0) throw SingularHit("orbit hit 0 in binding sums");
        out.a += static_cast<double>(der / std::fabs(x));
        der *= family.derivative(0.0L, x);
        out.w += static_cast<double>(1.0L / der);
        x = family.value(0.0L, x);
    }
    return out;
}

int admissible_binding_length(const MapFamily& family, double v, double eps, double theta1, int cap) {
    long double x = v;
    long double der = 1;
    long double a = 0;
    long double w = 0;
    int best = 0;
    for (int n = 1; n <= cap; ++n) {
        if (x == 0) break;
        a += der / std::fabs(x);
        der *= family.derivative(0.0L, x);
        w += 1.0L / der;
        x = family.value(0.0L, x);
        if (a * w * eps > theta1) break;
        best = n;
    }
    return best;
}

// ---------------------------------------------------------------------------

nlohmann::json VCertificate::to_json() const {
    return {{"single_branch", single_branch},
            {"expansion", expansion},
            {"min_expansion_margin", min_expansion_margin},
            {"distortion", distortion},
            {"max_distortion", max_distortion},
            {"pass", pass()}};
}

namespace {

// sup |T''/T'| * |L| over `points` samples of L under T_t.
long double distortion_estimate(const MapFamily& family, double t, long double lo, long double hi, int points) {
    long double sup = 0;
    for (int i = 0; i < points; ++i) {
        const long double y = lo + (hi - lo) * (i + 0.5L) / points;
        if (y == 0) continue;
        const Jet j = family.jet(t, y);
        sup = std::max(sup, std::fabs(j.d2 / j.d1));
    }
    return sup * (hi - lo);
}

}  // namespace

VNeighborhood v_neighborhood(const MapFamily& family, const NoiseStream& noise, double x, int n,
                             const HyperbolicConfig& cfg) {
    if (n < 1) throw NotHyperbolic("n must be positive");
    const OrbitTrace trace = iterate(family, noise, x, n, cfg.delta);
    if (!is_hyperbolic_time(trace.depths, static_cast<std::size_t>(n), cfg.c_prime)) {
        throw NotHyperbolic("n is not a hyperbolic time of (omega, x)");
    }
    std::vector<double> omega;
    std::uint64_t itinerary = 0;
    for (int j = 0; j < n; ++j) {
        omega.push_back(noise.get(j));
        if (trace.points[static_cast<std::size_t>(j)] > 0) itinerary |= std::uint64_t{1} << j;
    }

    // Image of the branch of T^n through x, tracked one level at a time.
    long double a = x > 0 ? 0.0L : -1.0L;
    long double b = x > 0 ? 1.0L : 0.0L;
    for (int j = 0; j < n; ++j) {
        const double t = omega[static_cast<std::size_t>(j)];
        const Side side = side_of(trace.points[static_cast<std::size_t>(j)]);
        a = a == 0 ? family.limit_at_zero(t, side) : family.value(t, a);
        b = b == 0 ? family.limit_at_zero(t, side) : family.value(t, b);
        if (j + 1 < n && a < 0 && b > 0) {
            if (trace.points[static_cast<std::size_t>(j) + 1] > 0) {
                a = 0;
            } else {
                b = 0;
            }
        }
    }
    const long double xn = trace.points.back();
    const long double t_lo = std::max(-1.0L, xn - cfg.delta0);
    const long double t_hi = std::min(1.0L, xn + cfg.delta0);
    if (t_lo < a - 1e-15L || t_hi > b + 1e-15L) {
        throw BranchStraddle("B(T^n x, delta0) is not inside one branch image of T^n");
    }

    const long double radius = cfg.delta0 / cfg.expansion_constant * std::exp(-cfg.lambda_prime() * n / 2);
    long double lo = std::max<long double>(pull_back(family, omega, itinerary, n, t_lo), x - radius);
    long double hi = std::min<long double>(pull_back(family, omega, itinerary, n, t_hi), x + radius);
    lo = std::max(lo, x > 0 ? 0.0L : -1.0L);
    hi = std::min(hi, x > 0 ? 1.0L : 0.0L);

    VNeighborhood out;
    out.interval = {static_cast<double>(lo), static_cast<double>(hi)};
    out.image = {static_cast<double>(push_forward(family, omega, itinerary, n, lo)),
                 static_cast<double>(push_forward(family, omega, itinerary, n, hi))};

    VCertificate& cert = out.certificate;
    cert.single_branch = true;

    constexpr int kSamples = 50;
    long double margin = std::numeric_limits<long double>::infinity();
    for (int i = 0; i < kSamples; ++i) {
        long double y = lo + (hi - lo) * (i + 0.5L) / kSamples;
        std::vector<long double> logs{0};
        for (int j = 0; j < n; ++j) {
            const double t = omega[static_cast<std::size_t>(j)];
            logs.push_back(logs.back() + std::log(family.derivative(t, y)));
            y = family.value(t, y);
        }
        for (int k = 0; k < n; ++k) {
            const long double gain = logs[static_cast<std::size_t>(n)] - logs[static_cast<std::size_t>(k)];
            const long double need = std::log(static_cast<long double>(cfg.expansion_constant)) +
                                     cfg.lambda_prime() * (n - k) / 2.0L;
            margin = std::min(margin, std::exp(gain - need));
        }
    }
    cert.min_expansion_margin = static_cast<double>(margin);
    cert.expansion = margin >= 1;

    long double total = 0;
    for (int j = n - 1; j >= 0; --j) {
        const long double l = push_forward(family, omega, itinerary, j, lo);
        const long double h = push_forward(family, omega, itinerary, j, hi);
        total += distortion_estimate(family, omega[static_cast<std::size_t>(j)], l, h, 200);
    }
    // The suffix sums grow toward k = 0, so the full sum is the maximum.
    cert.max_distortion = static_cast<double>(total);
    cert.distortion = total < 1;
    return out;
}

// ---------------------------------------------------------------------------

nlohmann::json PreferredBinding::to_json() const {
    return {{"found", found}, {"M", m},     {"Lambda0", lambda0}, {"W0", w0},
            {"theta", theta}, {"L", l},     {"zeta", zeta},       {"reason", reason}};
}

PreferredBinding preferred_binding_period(const MapFamily& family, double delta, double theta1, int cap) {
    PreferredBinding out;
    const double s = family.order();
    out.l = std::pow(2.0, s + 1) + 1;
    out.zeta = 1 / (2 * s);

    struct Orbit {
        std::vector<long double> x;        // x[j] = T_0^j(critical value)
        std::vector<long double> log_der;  // log DT_0^j at the critical value
    };
    Orbit orbits[2];
    const Side sides[2] = {Side::negative, Side::positive};
    for (int k = 0; k < 2; ++k) {
        Orbit& o = orbits[k];
        o.x.push_back(family.limit_at_zero(0.0L, sides[k]));
        o.log_der.push_back(0);
        for (int j = 0; j <= cap; ++j) {
            const long double x = o.x.back();
            if (x == 0) break;
            o.log_der.push_back(o.log_der.back() + std::log(family.derivative(0.0L, x)));
            o.x.push_back(family.value(0.0L, x));
        }
        long double w = 0;
        for (long double ld : o.log_der) w += std::exp(-ld);
        out.w0 = std::max(out.w0, static_cast<double>(w));
    }
    out.theta = theta1 / (4 * out.w0);

    CriticalNeighborhoods far;
    try {
        far = tilde_b(family, 0.0, out.l * delta);
    } catch (const DeltaTooLarge&) {
        out.reason = "B~(L delta) is undefined: delta too large";
        return out;
    }

    long double a_sum_side[2] = {0, 0};
    bool avoid[2] = {true, true};
    const double a_cap = out.theta / delta;
    for (int m = 1; m <= cap; ++m) {
        bool ok = true;
        for (int k = 0; k < 2; ++k) {
            const Orbit& o = orbits[k];
            const auto i = static_cast<std::size_t>(m - 1);
            if (i + 2 >= o.x.size()) {
                out.reason = "critical orbit hit the singularity";
                return out;
            }
            a_sum_side[k] += std::exp(o.log_der[i]) / std::fabs(o.x[i]);
            if (m >= 2 && far.contains(static_cast<double>(o.x[i - 1]))) avoid[k] = false;
            if (a_sum_side[k] > a_cap) {
                out.m = m;
                out.reason = "A along the critical orbit exceeds theta/delta before the other conditions hold";
                return out;
            }
            const long double gain = o.log_der[i + 2];  // log DT^{M+1} at the critical value
            const long double reach = std::max<long double>(std::fabs(o.x[i + 1]), delta) / delta;
            if (!avoid[k] || gain < (1 - out.zeta) * std::log(reach)) ok = false;
        }
        if (ok) {
            out.found = true;
            out.m = m;
            const auto i = static_cast<std::size_t>(m);
            out.lambda0 = static_cast<double>(
                std::exp(std::min(orbits[0].log_der[i], orbits[1].log_der[i])));
            out.reason = "";
            return out;
        }
        if (!avoid[0] || !avoid[1]) {
            out.m = m;
            out.reason = "critical orbit entered B~(L delta)";
            return out;
        }
    }
    out.reason = "search cap reached";
    return out;
}

// ---------------------------------------------------------------------------

KappaEstimate estimate_kappa(const MapFamily& family, std::uint64_t seed, double eps, double delta,
                             std::size_t samples, int horizon, int workers) {
    const CriticalNeighborhoods inner = tilde_b(family, 0.0, delta);
    const CriticalNeighborhoods outer = tilde_b(family, 0.0, 2 * delta);
    constexpr std::size_t kChunk = 1024;
    std::vector<std::vector<double>> parts(chunk_count(samples, kChunk));
    for_each_chunk(samples, kChunk, workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
        auto& rates = parts[c];
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint64_t s = derive_seed(seed, i);
            const double x0 = 2 * unit_interval(mix64(s ^ 0x5851F42D4C957F2DULL)) - 1;
            if (x0 == 0 || inner.contains(x0)) continue;
            const NoiseStream omega(s, eps);
            double x = x0;
            double log_der = 0;
            for (int n = 1; n <= horizon; ++n) {
                const double t = omega.get(n - 1);
                log_der += static_cast<double>(std::log(family.derivative(t, x)));
                x = step(family, t, x);
                if (x == 0) break;
                if (outer.contains(x)) rates.push_back(log_der / n);
                if (inner.contains(x)) break;
            }
        }
    });
    std::vector<double> all;
    for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    KappaEstimate out;
    out.samples = samples;
    out.events = all.size();
    if (all.empty()) throw InsufficientData("no escape events for the kappa estimate");
    std::sort(all.begin(), all.end());
    out.kappa = all[static_cast<std::size_t>(0.01 * static_cast<double>(all.size() - 1))];
    return out;
}

}  // namespace rovella
