#include "rovella/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "rovella/conditions.hpp"
#include "rovella/errors.hpp"

namespace rovella {

namespace {

using nlohmann::json;

// Reads named fields from one object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + " has the wrong type");
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) throw ConfigError("unknown key " + path_ + "." + item.key());
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    Section root(j, "config");
    if (const json* f = root.child("family")) {
        if (!f->is_object()) throw ConfigError("config.family must be an object");
        c.family = *f;
    }
    if (const json* n = root.child("noise")) {
        Section s(*n, "noise");
        s.get("seed", c.seed);
        s.get("eps", c.eps);
        s.finish();
    }
    if (const json* h = root.child("hyperbolic")) {
        Section s(*h, "hyperbolic");
        s.get("delta", c.hyperbolic.delta);
        s.get("delta0", c.hyperbolic.delta0);
        s.get("c", c.hyperbolic.c);
        s.get("c_prime", c.hyperbolic.c_prime);
        s.get("kappa", c.hyperbolic.kappa);
        s.get("expansion_constant", c.hyperbolic.expansion_constant);
        double ignored = 0;
        s.get("lambda_prime", ignored);
        s.finish();
    }
    if (const json* o = root.child("orbit")) {
        Section s(*o, "orbit");
        s.get("x0", c.orbit.x0);
        s.get("n", c.orbit.n);
        s.finish();
    }
    if (const json* t = root.child("tails")) {
        Section s(*t, "tails");
        s.get("samples", c.tails.samples);
        s.get("n_max", c.tails.n_max);
        s.get("min_survivors", c.tails.min_survivors);
        s.finish();
    }
    if (const json* t = root.child("tower")) {
        Section s(*t, "tower");
        s.get("delta_prime", c.tower.delta_prime);
        s.get("n_max", c.tower.n_max);
        s.get("seed_grid", c.tower.seed_grid);
        s.get("require_hyperbolic", c.tower.require_hyperbolic);
        s.get("require_v_ball", c.tower.require_v_ball);
        s.get("aperiodicity_scan", c.tower.aperiodicity_scan);
        s.get("sampling_seed", c.tower.sampling_seed);
        s.get("separation_pairs", c.tower.separation_pairs);
        s.get("distortion_pairs", c.tower.distortion_pairs);
        s.get("cylinder_points", c.tower.cylinder_points);
        s.finish();
    }
    if (const json* m = root.child("measures")) {
        Section s(*m, "measures");
        s.get("grid_m", c.measures.grid_m);
        s.get("m_past", c.measures.m_past);
        s.get("adaptive", c.measures.adaptive);
        s.get("n_max", c.measures.n_max);
        s.get("phi", c.measures.phi);
        s.get("psi", c.measures.psi);
        s.get("method", c.measures.method);
        s.get("direction", c.measures.direction);
        s.get("samples", c.measures.samples);
        s.get("burn_in", c.measures.burn_in);
        s.finish();
    }
    if (const json* f = root.child("fit")) {
        Section s(*f, "fit");
        s.get("input", c.fit.input);
        s.get("column", c.fit.column);
        s.get("burn_in", c.fit.burn_in);
        s.finish();
    }
    if (const json* o = root.child("output")) {
        Section s(*o, "output");
        s.get("directory", c.output.directory);
        s.get("formats", c.output.formats);
        s.finish();
    }
    root.get("workers", c.workers);
    root.finish();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return from_json(j);
}

json ExperimentConfig::to_json() const {
    json h = hyperbolic.to_json();
    h.erase("lambda_prime");
    return {{"family", family},
            {"noise", {{"seed", seed}, {"eps", eps}}},
            {"hyperbolic", h},
            {"orbit", {{"x0", orbit.x0}, {"n", orbit.n}}},
            {"tails", {{"samples", tails.samples}, {"n_max", tails.n_max}, {"min_survivors", tails.min_survivors}}},
            {"tower",
             {{"delta_prime", tower.delta_prime},
              {"n_max", tower.n_max},
              {"seed_grid", tower.seed_grid},
              {"require_hyperbolic", tower.require_hyperbolic},
              {"require_v_ball", tower.require_v_ball},
              {"aperiodicity_scan", tower.aperiodicity_scan},
              {"sampling_seed", tower.sampling_seed},
              {"separation_pairs", tower.separation_pairs},
              {"distortion_pairs", tower.distortion_pairs},
              {"cylinder_points", tower.cylinder_points}}},
            {"measures",
             {{"grid_m", measures.grid_m},
              {"m_past", measures.m_past},
              {"adaptive", measures.adaptive},
              {"n_max", measures.n_max},
              {"phi", measures.phi},
              {"psi", measures.psi},
              {"method", measures.method},
              {"direction", measures.direction},
              {"samples", measures.samples},
              {"burn_in", measures.burn_in}}},
            {"fit", {{"input", fit.input}, {"column", fit.column}, {"burn_in", fit.burn_in}}},
            {"output", {{"directory", output.directory}, {"formats", output.formats}}},
            {"workers", workers}};
}

FamilyPtr ExperimentConfig::validate() const {
    FamilyPtr fam;
    try {
        fam = make_family(family);
    } catch (const Error& e) {
        throw ConfigError(std::string("family: ") + e.what());
    }
    if (!(eps >= 0 && eps <= fam->eps_max())) throw ConfigError("violated chain 0 <= eps <= eps_max");
    if (!(hyperbolic.c > 0 && hyperbolic.c < hyperbolic.c_prime && hyperbolic.c_prime < hyperbolic.kappa)) {
        throw ConfigError("violated chain 0 < c < c_prime < kappa");
    }
    try {
        hyperbolic.validate();
    } catch (const ParamError& e) {
        throw ConfigError(std::string("hyperbolic: ") + e.what());
    }
    const ConditionReport conditions = verify_conditions(*fam);
    const Delta0Constraints d0 = delta0_constraints(*fam, hyperbolic, conditions.distortion_constant);
    if (!(d0.expansion_lhs < d0.expansion_rhs)) {
        throw ConfigError("violated chain C' C^-1 K2 delta0 delta^(1/s) < lambda'/2 (delta0 too large)");
    }
    if (!(d0.radius_lhs < d0.radius_rhs)) {
        throw ConfigError("violated chain delta0 < (C / K2) delta^(1/s) (delta0 too large)");
    }
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (orbit.n < 0) throw ConfigError("orbit.n must be nonnegative");
    if (!(orbit.x0 != 0 && orbit.x0 >= -1 && orbit.x0 <= 1)) throw ConfigError("orbit.x0 must lie in [-1, 1] \\ {0}");
    if (tails.n_max < 1 || tails.samples == 0) throw ConfigError("tails need n_max >= 1 and samples >= 1");
    if (tower.seed_grid < 1) throw ConfigError("tower.seed_grid must be positive");
    try {
        tower_config().validate();
        correlation_params().grid.validate();
        parse_method(measures.method);
        parse_direction(measures.direction);
        if (!observable(measures.phi).holder_exponent) throw ConfigError("measures.phi must be Hölder (not sign)");
        observable(measures.psi);
    } catch (const ParamError& e) {
        throw ConfigError(e.what());
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (measures.m_past < 0 || measures.n_max < 0) throw ConfigError("measures.m_past and n_max must be nonnegative");
    for (const auto& f : output.formats) {
        if (f != "csv" && f != "json") throw ConfigError("unknown output format " + f);
    }
    return fam;
}

TowerConfig ExperimentConfig::tower_config() const {
    TowerConfig t;
    t.delta_prime = tower.delta_prime;
    t.n_max = tower.n_max;
    t.hyperbolic = hyperbolic;
    t.hyperbolic.delta0 = 2 * tower.delta_prime;
    t.require_hyperbolic = tower.require_hyperbolic;
    t.require_v_ball = tower.require_v_ball;
    t.aperiodicity_scan = tower.aperiodicity_scan;
    return t;
}

CorrelationParams ExperimentConfig::correlation_params() const {
    CorrelationParams p;
    p.grid = UniformGrid{measures.grid_m};
    p.m_past = measures.m_past;
    p.samples = measures.samples;
    p.burn_in = measures.burn_in;
    p.workers = workers;
    return p;
}

bool ExperimentConfig::wants(const std::string& format) const {
    for (const auto& f : output.formats) {
        if (f == format) return true;
    }
    return false;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace rovella
