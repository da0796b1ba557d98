// One line per acceptance criterion; exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "rovella/config.hpp"
#include "rovella/errors.hpp"
#include "rovella/fit.hpp"
#include "rovella/hyperbolic.hpp"
#include "rovella/measures.hpp"
#include "rovella/orbit.hpp"
#include "rovella/runner.hpp"
#include "rovella/tails.hpp"
#include "rovella/tower.hpp"

using namespace rovella;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;
constexpr double kEps = 0.01;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

FamilyPtr fixture() { return std::make_shared<FixtureFamily>(2, kEps); }

std::vector<int> brute_times(const std::vector<int>& d, double c_prime) {
    std::vector<int> out;
    for (std::size_t n = 1; n <= d.size(); ++n) {
        bool ok = true;
        for (std::size_t k = 0; k < n && ok; ++k) {
            long long sum = 0;
            for (std::size_t j = k; j < n; ++j) sum += d[j];
            ok = static_cast<long double>(sum) < static_cast<long double>(c_prime) * static_cast<long double>(n - k);
        }
        if (ok) out.push_back(static_cast<int>(n));
    }
    return out;
}

void oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(kSeed);
    const double c_prime = HyperbolicConfig{}.c_prime;
    std::size_t mismatches = 0;
    std::size_t times = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t len = 1 + rng() % 200;
        const unsigned sparsity = 1 + static_cast<unsigned>(rng() % 40);
        std::vector<int> d(len);
        for (auto& v : d) v = rng() % sparsity == 0 ? static_cast<int>(rng() % 9) : 0;
        const auto fast = hyperbolic_times(d, len, c_prime);
        times += fast.size();
        if (fast != brute_times(d, c_prime)) ++mismatches;
    }
    const double sec = seconds_since(t0);
    report(1, mismatches == 0 && sec < 10,
           fmt("10000 sequences, %zu hyperbolic times, %zu mismatches, %.2f s", times, mismatches, sec));
}

void pliss_count() {
    std::mt19937_64 rng(kSeed + 1);
    std::size_t violations = 0;
    int accepted = 0;
    double worst_ratio = 1e300;
    while (accepted < 1000) {
        const double A = 1 + 2 * std::uniform_real_distribution<double>(0, 1)(rng);
        const double c1 = std::uniform_real_distribution<double>(-1, 0.5)(rng);
        const double c2 = std::uniform_real_distribution<double>(c1 + 0.01, A)(rng);
        const std::size_t n = 5 + rng() % 300;
        std::uniform_real_distribution<double> a_law(c2 - 2.5, A);
        std::vector<double> a(n);
        double sum = 0;
        for (auto& v : a) {
            v = a_law(rng);
            sum += v;
        }
        if (!(sum > c2 * static_cast<double>(n))) continue;
        ++accepted;
        const double theta = (c2 - c1) / (A - c1);
        const double count = static_cast<double>(pliss_times(a, c1, c2, A).size());
        worst_ratio = std::min(worst_ratio, count / (theta * static_cast<double>(n)));
        if (count < theta * static_cast<double>(n)) ++violations;
    }
    report(2, violations == 0,
           fmt("1000 sequences, %zu violations, min count/(theta n) = %.3f", violations, worst_ratio));
}

void hyperbolic_density() {
    const FamilyPtr f = fixture();
    const HyperbolicConfig cfg;
    const CriticalNeighborhoods visits = tilde_b(*f, 0.0, cfg.delta);
    constexpr int n = 100;
    const double need = (1 - cfg.c / cfg.c_prime) * n;
    std::size_t qualifying = 0;
    std::size_t skipped_bad = 0;
    std::size_t violations = 0;
    std::size_t fewest = n;
    for (std::uint64_t i = 0; qualifying < 10000; ++i) {
        const std::uint64_t s = derive_seed(kSeed, i);
        const double x0 = 2 * unit_interval(mix64(s ^ 0x5851F42D4C957F2DULL)) - 1;
        if (x0 == 0) continue;
        const OrbitTrace tr = iterate(*f, NoiseStream(s, kEps), x0, n, cfg.delta, visits, SingularPolicy::truncate);
        if (tr.truncated) continue;
        if (bad_set_membership(tr.depths, cfg.c, n)) {
            ++skipped_bad;
            continue;
        }
        ++qualifying;
        const std::size_t count = hyperbolic_times(tr.depths, n, cfg.c_prime).size();
        fewest = std::min(fewest, count);
        if (static_cast<double>(count) < need) ++violations;
    }
    report(3, violations == 0,
           fmt("10000 orbits outside E_100 (%zu in E_100 skipped), fewest %zu hyperbolic times, bound %.1f, "
               "%zu violations",
               skipped_bad, fewest, need, violations));
}

void tail_fits() {
    const auto t0 = std::chrono::steady_clock::now();
    const FamilyPtr f = fixture();
    EnsembleParams p;
    p.seed = kSeed;
    p.eps = kEps;
    p.samples = 100000;
    p.n_max = 60;
    p.workers = 8;
    p.min_survivors = 100;
    const EnsembleTails r = ensemble_tails(*f, HyperbolicConfig{}, p);
    const double sec = seconds_since(t0);
    bool pass = sec < 300;
    std::string detail;
    for (const TailTable* t : {&r.bad_set, &r.first_hyperbolic, &r.first_return}) {
        const bool ok = t->fit && t->fit->b > 0 && t->fit->r_squared >= 0.9;
        pass = pass && ok;
        if (t->fit) {
            detail += fmt("%s: rate %.4f R2 %.3f n %zu..%zu; ", t->name.c_str(), t->fit->b, t->fit->r_squared,
                          t->fit->first, t->fit->last);
        } else {
            detail += t->name + ": no fit; ";
        }
    }
    report(4, pass, detail + fmt("%zu singular, %.1f s", r.singular_hits, sec));
}

const ReturnPartition& acceptance_partition() {
    static const ReturnPartition p = [] {
        TowerConfig cfg;
        cfg.delta_prime = 0.05;
        cfg.n_max = 25;
        return build_return_partition(fixture(), NoiseStream(kSeed, kEps), cfg);
    }();
    return p;
}

void partition_certification() {
    const auto t0 = std::chrono::steady_clock::now();
    const ReturnPartition& p = acceptance_partition();
    double max_residual = 0;
    for (const Element& e : p.elements) {
        max_residual = std::max(max_residual, markov_residual(*p.family, p.noise, e, p.config.delta_prime));
    }
    bool disjoint = true;
    for (std::size_t i = 0; i < p.elements.size(); ++i) {
        const Element& e = p.elements[i];
        if (!(e.left < e.right)) disjoint = false;
        if (i + 1 < p.elements.size() && !(e.right <= p.elements[i + 1].left)) disjoint = false;
    }
    int g = 0;
    for (const Element& e : p.elements) g = std::gcd(g, e.tau);
    std::vector<double> tail;
    for (int n = 0; n <= p.horizon; ++n) tail.push_back(tail_measure(p, n));
    int p0 = p.horizon;
    for (const Element& e : p.elements) p0 = std::min(p0, e.tau);
    bool fit_ok = false;
    ExpFit fit;
    try {
        fit = fit_exponential(tail, static_cast<std::size_t>(p0));
        fit_ok = fit.b > 0 && fit.r_squared >= 0.85;
    } catch (const InsufficientData&) {
    }
    const bool pass = p.elements.size() >= 50 && max_residual <= 1e-9 && disjoint && g == 1 && fit_ok;
    report(5, pass,
           fmt("%zu elements, max Markov residual %.2e, disjoint %s, gcd %d, tail rate %.4f R2 %.3f over n %zu..%zu, "
               "uncovered %.4f, %.1f s",
               p.elements.size(), max_residual, disjoint ? "yes" : "no", g, fit.b, fit.r_squared, fit.first,
               fit.last, static_cast<double>(p.uncovered), seconds_since(t0)));
}

void semiconjugacy() {
    const FamilyPtr f = fixture();
    const NoiseStream noise(kSeed, kEps);
    TowerConfig cfg;
    const RandomTower tower(f, noise, cfg);
    std::mt19937_64 rng(kSeed + 5);
    std::uniform_real_distribution<double> u(-cfg.delta_prime, cfg.delta_prime);
    int complete = 0;
    std::size_t redrawn = 0;
    double worst = 0;
    while (complete < 1000) {
        TowerState s;
        try {
            s = tower.enter(u(rng));
        } catch (const UncoveredReturn&) {
            ++redrawn;
            continue;
        }
        double direct = s.x;
        double orbit_worst = 0;
        bool ok = true;
        for (int i = 0; i < 50; ++i) {
            try {
                s = tower_step(tower, s);
            } catch (const UncoveredReturn&) {
                ok = false;
                break;
            }
            direct = step(*f, noise.get(i), direct);
            orbit_worst = std::max(orbit_worst, std::fabs(tower.project(s) - direct));
        }
        if (!ok) {
            ++redrawn;
            continue;
        }
        ++complete;
        worst = std::max(worst, orbit_worst);
    }
    report(6, worst <= 1e-8,
           fmt("1000 orbits of 50 steps, max residual %.2e, %zu draws redrawn for uncovered returns", worst, redrawn));
}

void exact_cancellation() {
    const FamilyPtr f = fixture();
    const NoiseStream noise(kSeed, kEps);
    CorrelationParams p;
    p.workers = 8;
    double worst = 0;
    for (Method m : {Method::ulam, Method::monte_carlo}) {
        for (Direction d : {Direction::forward, Direction::backward}) {
            for (const auto& [phi, psi] : {std::pair{"one", "sign"}, std::pair{"x", "one"}, std::pair{"one", "x"}}) {
                const auto s = quenched_correlation(*f, noise, observable(phi), observable(psi), 40, m, d, p);
                for (double v : s.values) worst = std::max(worst, v);
            }
        }
    }
    report(7, worst <= 1e-10, fmt("max |C_n| %.2e over n <= 40, both displays, ulam and monte carlo", worst));
}

void decay_fit() {
    const auto t0 = std::chrono::steady_clock::now();
    const FamilyPtr f = fixture();
    const NoiseStream noise(kSeed, kEps);
    CorrelationParams p;
    p.grid = UniformGrid{2048};
    p.m_past = 200;
    p.burn_in = 5;
    p.workers = 8;
    const auto fw = quenched_correlation(*f, noise, observable("x"), observable("sign"), 40, Method::ulam,
                                         Direction::forward, p);
    const auto bw = quenched_correlation(*f, noise, observable("x"), observable("sign"), 40, Method::ulam,
                                         Direction::backward, p);
    const double sec = seconds_since(t0);
    bool pass = fw.fit && bw.fit && sec < 600;
    double rel = 1;
    if (pass) {
        rel = std::fabs(fw.fit->b - bw.fit->b) / std::max(fw.fit->b, bw.fit->b);
        pass = fw.fit->b > 0 && bw.fit->b > 0 && fw.fit->r_squared >= 0.9 && bw.fit->r_squared >= 0.9 && rel <= 0.25;
    }
    report(8, pass,
           fmt("forward rate %.4f R2 %.3f, backward rate %.4f R2 %.3f, relative gap %.3f, %.1f s",
               fw.fit ? fw.fit->b : 0.0, fw.fit ? fw.fit->r_squared : 0.0, bw.fit ? bw.fit->b : 0.0,
               bw.fit ? bw.fit->r_squared : 0.0, rel, sec));
}

void numerics_hygiene() {
    const FamilyPtr f = fixture();
    std::mt19937_64 rng(kSeed + 9);
    std::uniform_real_distribution<double> ux(0.01, 0.99);
    std::uniform_real_distribution<double> ut(-kEps, kEps);
    double worst_d = 0;
    double worst_s = 0;
    for (int i = 0; i < 10000; ++i) {
        const double x = (i % 2 ? 1 : -1) * ux(rng);
        const double t = ut(rng);
        const double h = 1e-6;
        const double fd = (evaluate(*f, t, x + h) - evaluate(*f, t, x - h)) / (2 * h);
        const double d = derivative(*f, t, x);
        worst_d = std::max(worst_d, std::fabs(fd - d) / d);
        const double k = 1e-4;
        const double dp = derivative(*f, t, x + k);
        const double dm = derivative(*f, t, x - k);
        const double d2 = (dp - dm) / (2 * k);
        const double d3 = (dp - 2 * d + dm) / (k * k);
        const double fs = d3 / d - 1.5 * (d2 / d) * (d2 / d);
        const double sw = schwarzian(*f, t, x);
        worst_s = std::max(worst_s, std::fabs(fs - sw) / std::fabs(sw));
    }

    const NoiseStream noise(kSeed, kEps);
    std::uniform_real_distribution<double> u(-1, 1);
    double worst_c = 0;
    for (int i = 0; i < 1000; ++i) {
        const double x0 = u(rng);
        if (x0 == 0) continue;
        const int n = 1 + static_cast<int>(rng() % 500);
        const int m = static_cast<int>(rng() % static_cast<unsigned>(n));
        const OrbitTrace tr = iterate(*f, noise, x0, n, 0.001, SingularPolicy::truncate);
        if (tr.truncated) continue;
        const OrbitTrace tail =
            iterate(*f, noise.shifted(m), tr.points[static_cast<std::size_t>(m)], n - m, 0.001);
        const double joined = tr.log_der[static_cast<std::size_t>(m)] + tail.log_der.back();
        worst_c = std::max(worst_c, std::fabs(joined - tr.log_der.back()) / std::max(1.0, std::fabs(tr.log_der.back())));
    }

    double worst_row = 0;
    for (double t : {-kEps, -0.0042, 0.0, 0.0077, kEps}) {
        const UlamOperator op = ulam_row_operator(*f, t, UniformGrid{2048}, 8);
        for (std::size_t i = 0; i < 2048; ++i) worst_row = std::max(worst_row, std::fabs(op.row_sum(i) - 1));
    }
    report(9, worst_d <= 1e-6 && worst_s <= 1e-4 && worst_c <= 1e-9 && worst_row <= 1e-12,
           fmt("derivative %.1e, Schwarzian %.1e, cocycle %.1e, Ulam row sums %.1e", worst_d, worst_s, worst_c,
               worst_row));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void reproducibility() {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path root = fs::temp_directory_path() / "rovella_acceptance";
    fs::remove_all(root);
    std::ostringstream log;
    std::size_t files = 0;
    std::string broken;
    for (const std::string& sub : subcommands()) {
        ExperimentConfig cfg;
        cfg.seed = kSeed;
        cfg.eps = kEps;
        cfg.workers = 1;
        cfg.output.directory = (root / sub / "w1").string();
        if (sub == "fit") cfg.fit.input = (root / "correlation" / "w1" / "correlation.csv").string();
        const RunResult first = run(sub, cfg, log);
        const RunResult again = rerun((root / sub / "w1" / "manifest.json").string(), (root / sub / "w8").string(), 8, log);
        bool same = first.exit_code == again.exit_code && !first.artifacts.empty() && again.exit_code != exit_config &&
                    first.artifacts == again.artifacts;
        for (const auto& a : first.artifacts) {
            same = same && slurp(root / sub / "w1" / a) == slurp(root / sub / "w8" / a);
            ++files;
        }
        if (!same) broken += sub + "(exit " + std::to_string(first.exit_code) + ") ";
    }
    report(10, broken.empty(),
           fmt("%zu subcommands, %zu artifacts byte-identical between 1 and 8 workers%s%s, %.1f s",
               subcommands().size(), files, broken.empty() ? "" : "; differing: ", broken.c_str(), seconds_since(t0)));
}

}  // namespace

int main() {
    oracle_equivalence();
    pliss_count();
    hyperbolic_density();
    tail_fits();
    partition_certification();
    semiconjugacy();
    exact_cancellation();
    decay_fit();
    numerics_hygiene();
    reproducibility();
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
