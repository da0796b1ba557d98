#include "rovella/tower.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>
#include <set>

#include "rovella/branches.hpp"
#include "rovella/errors.hpp"
#include "rovella/fit.hpp"
#include "rovella/orbit.hpp"

namespace rovella {

void TowerConfig::validate() const {
    if (!(delta_prime > 0 && delta_prime < 1)) throw ParamError("delta_prime must lie in (0, 1)");
    if (n_max < 1 || n_max > 60) throw ParamError("tower n_max must lie in [1, 60]");
    if (aperiodicity_scan > 60) throw ParamError("aperiodicity scan beyond 60 levels");
    hyperbolic.validate();
}

nlohmann::json TowerConfig::to_json() const {
    return {{"delta_prime", delta_prime},
            {"n_max", n_max},
            {"hyperbolic", hyperbolic.to_json()},
            {"require_hyperbolic", require_hyperbolic},
            {"require_v_ball", require_v_ball},
            {"boundary_margin", boundary_margin},
            {"markov_tolerance", markov_tolerance},
            {"aperiodicity_scan", aperiodicity_scan},
            {"aperiodicity_count", aperiodicity_count},
            {"max_pieces", max_pieces}};
}

namespace {

// An uncovered part of one branch of T^k, held as its image at level k.
struct Piece {
    long double a;
    long double b;
    std::uint64_t itinerary;
};

class Builder {
public:
    Builder(const MapFamily& family, const NoiseStream& noise, const TowerConfig& cfg, int levels)
        : family_(family), cfg_(cfg), dp_(cfg.delta_prime) {
        for (int j = 0; j < levels; ++j) omega_.push_back(noise.get(j));
    }

    const std::vector<double>& omega() const { return omega_; }

    // Element carved from piece p at level k, or none when admission fails.
    std::optional<Element> admit(const Piece& p, int k) const {
        const long double m = cfg_.boundary_margin;
        if (!(p.a < -dp_ - m && p.b > dp_ + m)) return std::nullopt;
        Element e;
        e.tau = k;
        e.branch_id = p.itinerary;
        e.left = pull_back(family_, omega_, p.itinerary, k, -dp_);
        e.right = pull_back(family_, omega_, p.itinerary, k, dp_);
        if (!(e.left < e.right)) return std::nullopt;

        if (cfg_.require_hyperbolic || cfg_.require_v_ball) {
            // Reference point: the preimage of delta'/2, with its intermediate iterates.
            std::vector<double> pts(static_cast<std::size_t>(k));
            long double y = dp_ / 2;
            for (int j = k - 1; j >= 0; --j) {
                y = family_.inverse(omega_[static_cast<std::size_t>(j)], side(p.itinerary, j), y);
                pts[static_cast<std::size_t>(j)] = static_cast<double>(y);
            }
            if (cfg_.require_hyperbolic) {
                std::vector<int> depths(static_cast<std::size_t>(k));
                for (int j = 0; j < k; ++j) {
                    const auto ju = static_cast<std::size_t>(j);
                    if (pts[ju] == 0) return std::nullopt;
                    depths[ju] = return_depth(family_, omega_[ju], pts[ju], cfg_.hyperbolic.delta);
                }
                if (!is_hyperbolic_time(depths, static_cast<std::size_t>(k), cfg_.hyperbolic.c_prime)) {
                    return std::nullopt;
                }
            }
            if (cfg_.require_v_ball) {
                const HyperbolicConfig& h = cfg_.hyperbolic;
                const long double r = 2 * cfg_.delta_prime / h.expansion_constant * std::exp(-h.lambda_prime() * k / 2.0);
                if (e.left < pts[0] - r || e.right > pts[0] + r) return std::nullopt;
            }
        }
        const long double lo = push_forward(family_, omega_, p.itinerary, k, e.left);
        const long double hi = push_forward(family_, omega_, p.itinerary, k, e.right);
        const long double residual = std::max(std::fabs(lo + dp_), std::fabs(hi - dp_));
        if (!(residual <= cfg_.markov_tolerance)) return std::nullopt;
        e.markov_residual = static_cast<double>(residual);
        return e;
    }

    // Splits p at 0 when needed and maps the halves to level k + 1.
    template <class Sink>
    void advance(const Piece& p, int k, Sink&& sink) const {
        if (p.a < 0 && p.b > 0) {
            sink(map_half({p.a, 0, p.itinerary}, k, Side::negative));
            sink(map_half({0, p.b, p.itinerary}, k, Side::positive));
        } else {
            sink(map_half(p, k, p.a >= 0 ? Side::positive : Side::negative));
        }
    }

    // x-coordinate of the cut of p at 0 (level k).
    long double cut(const Piece& p, int k) const { return pull_back(family_, omega_, p.itinerary, k, 0.0L); }

    long double delta_prime() const { return dp_; }

private:
    static Side side(std::uint64_t itinerary, int j) {
        return ((itinerary >> j) & 1U) != 0 ? Side::positive : Side::negative;
    }

    Piece map_half(Piece p, int k, Side s) const {
        const double t = omega_[static_cast<std::size_t>(k)];
        const auto img = [&](long double v) { return v == 0 ? family_.limit_at_zero(t, s) : family_.value(t, v); };
        if (s == Side::positive) p.itinerary |= std::uint64_t{1} << k;
        return {img(p.a), img(p.b), p.itinerary};
    }

    const MapFamily& family_;
    const TowerConfig& cfg_;
    long double dp_;
    std::vector<double> omega_;
};

int gcd_all(const std::vector<int>& v) {
    int g = 0;
    for (int x : v) g = std::gcd(g, x);
    return g;
}

// Pairwise coprime return times: the smallest consecutive pair first, then ascending.
std::vector<int> choose_seed_taus(const std::set<int>& available, int count) {
    std::vector<int> chosen;
    for (int t : available) {
        if (available.count(t + 1) != 0) {
            chosen = {t, t + 1};
            break;
        }
    }
    for (int t : available) {
        if (static_cast<int>(chosen.size()) >= count) break;
        if (std::find(chosen.begin(), chosen.end(), t) != chosen.end()) continue;
        bool coprime = true;
        for (int c : chosen) coprime = coprime && std::gcd(c, t) == 1;
        if (coprime) chosen.push_back(t);
    }
    if (static_cast<int>(chosen.size()) > count) chosen.resize(static_cast<std::size_t>(count));
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace

std::optional<std::size_t> ReturnPartition::locate(long double x) const {
    auto it = std::upper_bound(elements.begin(), elements.end(), x,
                               [](long double v, const Element& e) { return v < e.left; });
    if (it == elements.begin()) return std::nullopt;
    --it;
    if (x > it->left && x < it->right) return static_cast<std::size_t>(it - elements.begin());
    return std::nullopt;
}

std::vector<double> ReturnPartition::noise_window(int length) const {
    std::vector<double> out;
    for (int j = 0; j < length; ++j) out.push_back(noise.get(j));
    return out;
}

ReturnPartition build_return_partition(FamilyPtr family, const NoiseStream& noise, const TowerConfig& cfg) {
    cfg.validate();
    const int levels = std::max(cfg.n_max, cfg.aperiodicity_scan);
    Builder builder(*family, noise, cfg, levels);
    const long double dp = cfg.delta_prime;

    ReturnPartition out;
    out.family = family;
    out.noise = noise;
    out.config = cfg;
    out.base = {-cfg.delta_prime, cfg.delta_prime};
    out.horizon = cfg.n_max;

    std::vector<Piece> pieces;
    builder.advance({-dp, dp, 0}, 0, [&](const Piece& p) { pieces.push_back(p); });
    std::vector<Piece> next;
    std::set<int> taus;
    std::vector<Element> late;  // admissible elements past n_max, kept only as seed candidates
    std::vector<int> seeds;

    for (int k = 1; k <= levels && !pieces.empty(); ++k) {
        const bool in_horizon = k <= cfg.n_max;
        if (!in_horizon) {
            seeds = choose_seed_taus(taus, cfg.aperiodicity_count);
            if (static_cast<int>(seeds.size()) >= cfg.aperiodicity_count && gcd_all(seeds) == 1) break;
        }
        next.clear();
        std::vector<Element> level_elements;
        for (const Piece& p : pieces) {
            const auto e = builder.admit(p, k);
            const auto push = [&](const Piece& q) {
                if (q.b > q.a && k < levels) builder.advance(q, k, [&](const Piece& r) { next.push_back(r); });
            };
            if (e) {
                level_elements.push_back(*e);
                push({p.a, -dp, p.itinerary});
                push({dp, p.b, p.itinerary});
            } else {
                push(p);
            }
        }
        if (!level_elements.empty()) taus.insert(k);
        auto& sink = in_horizon ? out.elements : late;
        sink.insert(sink.end(), level_elements.begin(), level_elements.end());
        out.peak_pieces = std::max(out.peak_pieces, next.size());
        if (next.size() > cfg.max_pieces) {
            out.truncated = true;
            break;
        }
        pieces.swap(next);
    }
    seeds = choose_seed_taus(taus, cfg.aperiodicity_count);

    for (int t : seeds) {
        if (t <= cfg.n_max) {
            auto it = std::min_element(out.elements.begin(), out.elements.end(), [&](const Element& a, const Element& b) {
                if ((a.tau == t) != (b.tau == t)) return a.tau == t;
                return a.left < b.left;
            });
            if (it != out.elements.end() && it->tau == t) it->seeded = true;
        } else {
            auto it = std::min_element(late.begin(), late.end(), [&](const Element& a, const Element& b) {
                if ((a.tau == t) != (b.tau == t)) return a.tau == t;
                return a.left < b.left;
            });
            if (it != late.end() && it->tau == t) {
                it->seeded = true;
                out.elements.push_back(*it);
            }
        }
    }
    out.seeded_taus = seeds;
    out.seeds_coprime = !seeds.empty() && gcd_all(seeds) == 1;
    std::sort(out.elements.begin(), out.elements.end(),
              [](const Element& a, const Element& b) { return a.left < b.left; });
    out.uncovered = static_cast<long double>(tail_measure(out, cfg.n_max));
    return out;
}

double tail_measure(const ReturnPartition& partition, int n) {
    long double covered = 0;
    for (const auto& e : partition.elements) {
        if (e.tau <= n) covered += e.length();
    }
    return static_cast<double>(static_cast<long double>(partition.base.length()) - covered);
}

double markov_residual(const MapFamily& family, const NoiseStream& noise, const Element& element, double delta_prime) {
    std::vector<double> omega;
    for (int j = 0; j < element.tau; ++j) omega.push_back(noise.get(j));
    const long double lo = push_forward(family, omega, element.branch_id, element.tau, element.left);
    const long double hi = push_forward(family, omega, element.branch_id, element.tau, element.right);
    return static_cast<double>(std::max(std::fabs(lo + delta_prime), std::fabs(hi - delta_prime)));
}

std::optional<Located> locate_in_partition(const MapFamily& family, const NoiseStream& noise,
                                           const TowerConfig& cfg, long double x) {
    const long double dp = cfg.delta_prime;
    if (!(x > -dp && x < dp) || x == 0) return std::nullopt;
    Builder builder(family, noise, cfg, cfg.n_max);

    Piece piece{};
    builder.advance({-dp, dp, 0}, 0, [&](const Piece& p) {
        if ((p.itinerary & 1U) == (x > 0 ? 1U : 0U)) piece = p;
    });
    for (int k = 1; k <= cfg.n_max; ++k) {
        if (const auto e = builder.admit(piece, k)) {
            if (x > e->left && x < e->right) return Located{e->tau, e->branch_id, e->left, e->right};
            if (x == e->left || x == e->right) return std::nullopt;
            piece = x < e->left ? Piece{piece.a, -dp, piece.itinerary} : Piece{dp, piece.b, piece.itinerary};
        }
        if (k == cfg.n_max) break;
        std::optional<bool> right_half;
        if (piece.a < 0 && piece.b > 0) {
            const long double c = builder.cut(piece, k);
            if (x == c) return std::nullopt;
            right_half = x > c;
        }
        builder.advance(piece, k, [&](const Piece& p) {
            if (!right_half || ((p.itinerary >> k) & 1U) == (*right_half ? 1U : 0U)) piece = p;
        });
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

RandomTower::RandomTower(FamilyPtr family, NoiseStream noise, TowerConfig cfg)
    : family_(std::move(family)), noise_(noise), cfg_(std::move(cfg)) {}

TowerState RandomTower::enter(double x, std::int64_t base_time) const {
    const auto loc = locate_in_partition(*family_, noise_.shifted(base_time), cfg_, x);
    if (!loc) throw UncoveredReturn("base point outside every partition element");
    return {0, loc->tau, loc->branch_id, x, base_time};
}

double RandomTower::project(const TowerState& state) const {
    double x = state.x;
    for (int j = 0; j < state.level; ++j) x = rovella::step(*family_, noise_.get(state.base_time + j), x);
    return x;
}

double RandomTower::return_point(const TowerState& state) const {
    double x = state.x;
    for (int j = 0; j < state.tau; ++j) {
        x = rovella::step(*family_, noise_.get(state.base_time + j), x);
        if (x == 0) throw SingularHit("tower column hit 0");
    }
    return x;
}

TowerState RandomTower::step(const TowerState& state) const {
    if (state.tau < 1 || state.level < 0 || state.level >= state.tau) throw InvalidState("level outside [0, tau)");
    if (state.level + 1 < state.tau) {
        TowerState next = state;
        ++next.level;
        return next;
    }
    return enter(return_point(state), state.base_time + state.tau);
}

int RandomTower::separation_time(double x, double y, std::int64_t base_time, int cap) const {
    int total = 0;
    while (total < cap) {
        const auto lx = locate_in_partition(*family_, noise_.shifted(base_time), cfg_, x);
        const auto ly = locate_in_partition(*family_, noise_.shifted(base_time), cfg_, y);
        if (!lx || !ly || lx->tau != ly->tau || lx->branch_id != ly->branch_id) return total;
        const TowerState sx{0, lx->tau, lx->branch_id, x, base_time};
        const TowerState sy{0, ly->tau, ly->branch_id, y, base_time};
        x = return_point(sx);
        y = return_point(sy);
        total += lx->tau;
        base_time += lx->tau;
    }
    return std::min(total, cap);
}

TowerState tower_step(const RandomTower& tower, const TowerState& state) { return tower.step(state); }

// ---------------------------------------------------------------------------

bool AxiomReport::c2() const noexcept { return monotone_failures == 0 && max_markov_residual <= markov_tolerance; }

bool AxiomReport::c3() const noexcept {
    return std::isfinite(distortion_d) && distortion_d > 0 && distortion_gamma > 0;
}

nlohmann::json AxiomReport::to_json() const {
    return {
        {"C1", {{"p0", p0}, {"separation_pairs", separation_pairs}, {"separation_mismatches", separation_mismatches},
                {"pass", c1()}}},
        {"C2", {{"elements", elements}, {"monotone_failures", monotone_failures},
                {"max_markov_residual", max_markov_residual}, {"pass", c2()}}},
        {"C3", {{"element_distortion", element_distortion}, {"D", distortion_d}, {"gamma", distortion_gamma}, {"pairs", distortion_pairs}, {"pass", c3()}}},
        {"C4", {{"max_cylinder_diameter", cylinder_diameters}, {"sampled_points", cylinder_counts},
                {"nonincreasing", diameters_nonincreasing},
                {"pass", c4()}}},
        {"C5", {{"C", tail_c}, {"gamma", tail_gamma}, {"r_squared", tail_r2}, {"fit_ok", tail_fit_ok}, {"pass", c5()}}},
        {"C6", {{"gcd", gcd}, {"pass", c6()}}},
    };
}

namespace {

class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : seed_(seed) {}
    double uniform() { return unit_interval(derive_seed(seed_, counter_++)); }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

// Steps two tower points in lockstep and counts the time until their columns differ.
int lockstep_separation(const RandomTower& tower, double x, double y, int cap) {
    TowerState a;
    TowerState b;
    try {
        a = tower.enter(x);
        b = tower.enter(y);
    } catch (const UncoveredReturn&) {
        return 0;
    }
    int n = 0;
    while (n < cap) {
        if (a.level == 0 && (a.tau != b.tau || a.branch_id != b.branch_id)) return n;
        try {
            a = tower.step(a);
            b = tower.step(b);
        } catch (const UncoveredReturn&) {
            return n + 1;
        }
        ++n;
    }
    return cap;
}

}  // namespace

AxiomReport certify_axioms(const ReturnPartition& partition, const AxiomSampling& sampling) {
    AxiomReport rep;
    rep.markov_tolerance = partition.config.markov_tolerance;
    const MapFamily& family = *partition.family;
    const RandomTower tower(partition.family, partition.noise, partition.config);
    const double dp = partition.config.delta_prime;
    Sampler rng(sampling.seed);

    // C1 and C6.
    rep.p0 = 0;
    std::vector<int> taus;
    for (const auto& e : partition.elements) {
        taus.push_back(e.tau);
        rep.p0 = rep.p0 == 0 ? e.tau : std::min(rep.p0, e.tau);
    }
    rep.gcd = gcd_all(taus);

    // C2: residuals and monotonicity on five points per element.
    rep.elements = partition.elements.size();
    int max_tau = 0;
    for (const auto& e : partition.elements) max_tau = std::max(max_tau, e.tau);
    const std::vector<double> omega = partition.noise_window(max_tau);
    // log DT^tau along the element's branch, and the image point.
    const auto log_jacobian = [&](const Element& e, long double z, double* image) {
        long double sum = 0;
        for (int j = 0; j < e.tau; ++j) {
            const double t = omega[static_cast<std::size_t>(j)];
            sum += std::log(family.derivative(t, z));
            z = family.value(t, z);
        }
        if (image) *image = static_cast<double>(z);
        return sum;
    };
    for (const auto& e : partition.elements) {
        rep.max_markov_residual = std::max(rep.max_markov_residual, e.markov_residual);
        const long double l0 = log_jacobian(e, e.left, nullptr);
        const long double l1 = log_jacobian(e, e.left + e.length() / 2, nullptr);
        const long double l2 = log_jacobian(e, e.right, nullptr);
        rep.element_distortion = std::max(
            rep.element_distortion, static_cast<double>(std::max({l0, l1, l2}) - std::min({l0, l1, l2})));
        long double prev = -2;
        for (int i = 0; i <= 4; ++i) {
            const long double x = e.left + (e.right - e.left) * i / 4;
            const long double y = push_forward(family, omega, e.branch_id, e.tau, x);
            if (!(y > prev)) {
                ++rep.monotone_failures;
                break;
            }
            prev = y;
        }
    }

    if (partition.elements.empty()) return rep;
    const auto random_base_point = [&] { return -dp + 2 * dp * rng.uniform(); };

    // C1: separation times two ways on pairs drawn inside common elements.
    for (std::size_t i = 0; i < sampling.separation_pairs; ++i) {
        const auto idx = partition.locate(random_base_point());
        if (!idx) continue;
        const Element& e = partition.elements[*idx];
        const double x = static_cast<double>(e.left + e.length() * rng.uniform());
        const double y = static_cast<double>(e.left + e.length() * rng.uniform());
        if (!(x > e.left && x < e.right && y > e.left && y < e.right)) continue;
        ++rep.separation_pairs;
        const int direct = lockstep_separation(tower, x, y, sampling.separation_cap);
        const int recursive = tower.separation_time(x, y, 0, sampling.separation_cap);
        if (direct != recursive) ++rep.separation_mismatches;
    }

    // C3: |log DT^tau(x) - log DT^tau(y)| against the separation time of the images.
    constexpr double kLogFloor = 1e-15;  // extended-precision roundoff of the log sums
    constexpr std::size_t kMinBin = 10;
    std::map<int, std::pair<std::size_t, double>> worst;  // separation time -> (pairs, largest log ratio)
    std::vector<std::pair<int, double>> pairs;
    for (std::size_t i = 0; i < sampling.distortion_pairs; ++i) {
        const auto idx = partition.locate(random_base_point());
        if (!idx) continue;
        const Element& e = partition.elements[*idx];
        // Second point at a log-uniform distance in [1e-12, 1] of the room left in the element.
        const long double x = e.left + e.length() * rng.uniform();
        const bool up = e.right - x > x - e.left;
        const long double room = up ? e.right - x : x - e.left;
        const long double h = room * std::exp(-std::log(1e12) * rng.uniform());
        long double pts[2] = {x, up ? x + h : x - h};
        double images[2] = {0, 0};
        const long double logs[2] = {log_jacobian(e, pts[0], &images[0]), log_jacobian(e, pts[1], &images[1])};
        const int s = tower.separation_time(images[0], images[1], e.tau, sampling.separation_cap);
        const double lhs = static_cast<double>(std::fabs(logs[0] - logs[1]));
        ++rep.distortion_pairs;
        if (lhs < kLogFloor) continue;
        pairs.emplace_back(s, lhs);
        auto& [count, largest] = worst[s];
        ++count;
        largest = std::max(largest, lhs);
    }
    std::vector<double> bin_series;
    if (!worst.empty()) {
        bin_series.assign(static_cast<std::size_t>(worst.rbegin()->first) + 1, 0.0);
        for (const auto& [sep, w] : worst) {
            if (w.first >= kMinBin) bin_series[static_cast<std::size_t>(sep)] = w.second;
        }
    }
    try {
        // Half the fitted decay rate of the per-time maxima: a conservative envelope.
        const ExpFit fit = fit_exponential(bin_series, 0, kLogFloor);
        rep.distortion_gamma = fit.b / 2;
    } catch (const InsufficientData&) {
        rep.distortion_gamma = 0;
    }
    rep.distortion_d = rep.element_distortion;
    for (const auto& [sep, lhs] : pairs) {
        rep.distortion_d = std::max(rep.distortion_d, lhs * std::exp(rep.distortion_gamma * sep));
    }

    // C4: diameters of n-fold cylinders through sampled base points.
    constexpr int kDepth = 10;
    rep.cylinder_diameters.assign(kDepth, 0.0);
    rep.cylinder_counts.assign(kDepth, 0);
    for (std::size_t i = 0; i < sampling.cylinder_points; ++i) {
        double x = random_base_point();
        std::int64_t offset = 0;
        struct Link {
            std::int64_t offset;
            Located loc;
        };
        std::vector<Link> chain;
        for (int n = 0; n < kDepth; ++n) {
            const auto loc = locate_in_partition(family, partition.noise.shifted(offset), partition.config, x);
            if (!loc) break;
            chain.push_back({offset, *loc});
            // Pull the newest element back through the earlier links.
            long double lo = loc->left;
            long double hi = loc->right;
            for (std::size_t m = chain.size() - 1; m-- > 0;) {
                const Link& l = chain[m];
                std::vector<double> w;
                for (int j = 0; j < l.loc.tau; ++j) w.push_back(partition.noise.get(l.offset + j));
                lo = pull_back(family, w, l.loc.branch_id, l.loc.tau, lo);
                hi = pull_back(family, w, l.loc.branch_id, l.loc.tau, hi);
            }
            auto& d = rep.cylinder_diameters[static_cast<std::size_t>(n)];
            d = std::max(d, static_cast<double>(hi - lo));
            ++rep.cylinder_counts[static_cast<std::size_t>(n)];
            try {
                x = tower.return_point({0, loc->tau, loc->branch_id, x, offset});
            } catch (const SingularHit&) {
                break;
            }
            offset += loc->tau;
        }
    }
    rep.diameters_nonincreasing = true;
    for (int n = 1; n < kDepth; ++n) {
        const auto k = static_cast<std::size_t>(n);
        if (rep.cylinder_diameters[k] > rep.cylinder_diameters[k - 1]) rep.diameters_nonincreasing = false;
    }

    // C5: exponential fit of the uncovered measure.
    std::vector<double> tail;
    for (int n = 0; n <= partition.horizon; ++n) tail.push_back(tail_measure(partition, n));
    try {
        const ExpFit fit = fit_exponential(tail, static_cast<std::size_t>(rep.p0));
        rep.tail_c = fit.c;
        rep.tail_gamma = fit.b;
        rep.tail_r2 = fit.r_squared;
        rep.tail_fit_ok = true;
    } catch (const InsufficientData&) {
        rep.tail_fit_ok = false;
    }
    return rep;
}

}  // namespace rovella
