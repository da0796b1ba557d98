#include "rovella/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rovella/conditions.hpp"
#include "rovella/csv.hpp"
#include "rovella/errors.hpp"
#include "rovella/fit.hpp"
#include "rovella/hyperbolic.hpp"
#include "rovella/measures.hpp"
#include "rovella/orbit.hpp"
#include "rovella/tails.hpp"
#include "rovella/tower.hpp"

namespace rovella {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"simulate-orbit", "verify-family",  "hyperbolic-tails",
                                                "bad-set-tails",  "build-partition", "certify-tower",
                                                "density",        "correlation",     "fit"};
    return names;
}

void apply_overrides(ExperimentConfig& c, const std::string& sub, const Overrides& o) {
    if (o.seed) c.seed = *o.seed;
    if (o.eps) c.eps = *o.eps;
    if (o.delta) c.hyperbolic.delta = *o.delta;
    if (o.c) c.hyperbolic.c = *o.c;
    if (o.c_prime) c.hyperbolic.c_prime = *o.c_prime;
    if (o.out) c.output.directory = *o.out;
    if (o.workers) c.workers = *o.workers;
    if (o.x0) c.orbit.x0 = *o.x0;
    if (o.n) c.orbit.n = *o.n;
    if (o.m_past) c.measures.m_past = *o.m_past;
    if (o.grid) c.measures.grid_m = *o.grid;
    if (o.phi) c.measures.phi = *o.phi;
    if (o.psi) c.measures.psi = *o.psi;
    if (o.method) c.measures.method = *o.method;
    if (o.direction) c.measures.direction = *o.direction;
    if (o.input) c.fit.input = *o.input;
    if (o.column) c.fit.column = *o.column;
    const bool tails = sub == "hyperbolic-tails" || sub == "bad-set-tails";
    const bool tower = sub == "build-partition" || sub == "certify-tower";
    if (o.samples) {
        if (tails) c.tails.samples = *o.samples;
        else c.measures.samples = *o.samples;
    }
    if (o.n_max) {
        if (tails) c.tails.n_max = *o.n_max;
        else if (tower) c.tower.n_max = *o.n_max;
        else if (sub == "simulate-orbit") c.orbit.n = *o.n_max;
        else c.measures.n_max = *o.n_max;
    }
}

namespace {

class Job {
public:
    Job(const ExperimentConfig& cfg, FamilyPtr family, std::ostream& log)
        : cfg_(cfg), family_(std::move(family)), noise_(cfg.seed, cfg.eps), dir_(cfg.output.directory), log_(log) {}

    int exit_code = exit_ok;
    std::string message;
    std::vector<std::string> artifacts;

    void dispatch(const std::string& sub) {
        if (sub == "simulate-orbit") simulate_orbit();
        else if (sub == "verify-family") verify_family();
        else if (sub == "hyperbolic-tails") tails(false);
        else if (sub == "bad-set-tails") tails(true);
        else if (sub == "build-partition") build_partition();
        else if (sub == "certify-tower") certify_tower();
        else if (sub == "density") density();
        else if (sub == "correlation") correlation();
        else if (sub == "fit") fit();
        else throw ConfigError("unknown subcommand " + sub);
    }

private:
    const ExperimentConfig& cfg_;
    FamilyPtr family_;
    NoiseStream noise_;
    fs::path dir_;
    std::ostream& log_;

    std::ofstream open(const std::string& name) {
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + (dir_ / name).string());
        artifacts.push_back(name);
        return out;
    }

    void write_json(const std::string& name, const json& j) {
        if (!cfg_.wants("json")) return;
        auto out = open(name);
        out << j.dump(2) << '\n';
    }

    bool csv() const { return cfg_.wants("csv"); }

    void singular_check(std::size_t hits, std::size_t orbits) {
        if (orbits > 0 && static_cast<double>(hits) > 1e-3 * static_cast<double>(orbits)) {
            exit_code = exit_numeric;
            message = "singular hits in " + std::to_string(hits) + " of " + std::to_string(orbits) + " orbits";
        }
    }

    void simulate_orbit() {
        const OrbitTrace tr = iterate(*family_, noise_, cfg_.orbit.x0, cfg_.orbit.n, cfg_.hyperbolic.delta,
                                      SingularPolicy::truncate);
        if (csv()) {
            auto out = open("orbit.csv");
            CsvWriter w(out, {"n", "omega", "x", "log_derivative", "depth", "visit"});
            for (std::size_t i = 0; i < tr.points.size(); ++i) {
                w.field(static_cast<std::uint64_t>(i))
                    .field(noise_.get(static_cast<std::int64_t>(i)))
                    .field(tr.points[i])
                    .field(tr.log_der[i])
                    .field(tr.depths[i])
                    .field(static_cast<int>(tr.visits[i]));
                w.end_row();
            }
        }
        const HyperbolicReport h = hyperbolic_times(*family_, tr, cfg_.hyperbolic);
        const int len = static_cast<int>(tr.length());
        write_json("orbit.json", {{"x0", tr.x0},
                                  {"length", len},
                                  {"truncated", tr.truncated},
                                  {"a_sum", a_sum(tr, len)},
                                  {"hyperbolic_times", h.times},
                                  {"first_hyperbolic_time", h.first ? json(*h.first) : json(nullptr)},
                                  {"hyperbolic_return_times", h.return_times},
                                  {"first_hyperbolic_return", h.first_return ? json(*h.first_return) : json(nullptr)},
                                  {"bad", h.bad}});
        singular_check(tr.truncated ? 1 : 0, 1);
    }

    void verify_family() {
        const ConditionReport rep = verify_conditions(*family_);
        const KappaEstimate kappa =
            estimate_kappa(*family_, cfg_.seed, cfg_.eps, cfg_.hyperbolic.delta, 20000, 200, cfg_.workers);
        const PreferredBinding binding = preferred_binding_period(*family_, cfg_.hyperbolic.delta);
        json j = {{"family", family_->to_json()},
                  {"conditions", rep.to_json()},
                  {"delta0_constraints",
                   delta0_constraints(*family_, cfg_.hyperbolic, rep.distortion_constant).to_json()},
                  {"kappa",
                   {{"kappa", kappa.kappa},
                    {"events", kappa.events},
                    {"samples", kappa.samples},
                    {"suggested_c", kappa.kappa / 4},
                    {"suggested_c_prime", kappa.kappa / 2}}},
                  {"preferred_binding", binding.to_json()}};
        write_json("conditions.json", j);
        if (!rep.required_pass()) {
            exit_code = exit_failure;
            message = "required family conditions fail";
        }
    }

    void tails(bool bad_set) {
        EnsembleParams p;
        p.seed = cfg_.seed;
        p.eps = cfg_.eps;
        p.samples = cfg_.tails.samples;
        p.n_max = cfg_.tails.n_max;
        p.workers = cfg_.workers;
        p.min_survivors = cfg_.tails.min_survivors;
        const EnsembleTails r = ensemble_tails(*family_, cfg_.hyperbolic, p);
        json j = {{"samples", r.samples}, {"singular_hits", r.singular_hits}, {"hyperbolic", cfg_.hyperbolic.to_json()}};
        if (bad_set) {
            if (csv()) {
                auto out = open("bad_set_tails.csv");
                CsvWriter w(out, {"n", "survivors", "total", "fraction"});
                for (std::size_t n = 0; n < r.bad_set.survivors.size(); ++n) {
                    w.field(static_cast<std::uint64_t>(n))
                        .field(static_cast<std::uint64_t>(r.bad_set.survivors[n]))
                        .field(static_cast<std::uint64_t>(r.bad_set.total))
                        .field(r.bad_set.fraction(n));
                    w.end_row();
                }
            }
            j["bad_set"] = r.bad_set.to_json();
            write_json("bad_set_tails.json", j);
        } else {
            if (csv()) {
                auto out = open("hyperbolic_tails.csv");
                CsvWriter w(out, {"n", "h_survivors", "h_fraction", "h_star_survivors", "h_star_fraction", "total"});
                for (std::size_t n = 0; n < r.first_hyperbolic.survivors.size(); ++n) {
                    w.field(static_cast<std::uint64_t>(n))
                        .field(static_cast<std::uint64_t>(r.first_hyperbolic.survivors[n]))
                        .field(r.first_hyperbolic.fraction(n))
                        .field(static_cast<std::uint64_t>(r.first_return.survivors[n]))
                        .field(r.first_return.fraction(n))
                        .field(static_cast<std::uint64_t>(r.first_hyperbolic.total));
                    w.end_row();
                }
            }
            j["first_hyperbolic_time"] = r.first_hyperbolic.to_json();
            j["first_hyperbolic_return"] = r.first_return.to_json();
            write_json("hyperbolic_tails.json", j);
        }
        singular_check(r.singular_hits, r.samples);
    }

    ReturnPartition partition() const {
        return build_return_partition(family_, noise_, cfg_.tower_config());
    }

    void build_partition() {
        const ReturnPartition part = partition();
        if (csv()) {
            auto out = open("partition.csv");
            CsvWriter w(out, {"left", "right", "tau", "branch_id"});
            for (const Element& e : part.elements) {
                w.field(e.left).field(e.right).field(e.tau).field(e.branch_id);
                w.end_row();
            }
        }
        std::vector<double> tail;
        for (int n = 0; n <= part.horizon; ++n) tail.push_back(tail_measure(part, n));
        if (csv()) {
            auto out = open("tail_measure.csv");
            CsvWriter w(out, {"n", "uncovered"});
            for (std::size_t n = 0; n < tail.size(); ++n) {
                w.field(static_cast<std::uint64_t>(n)).field(tail[n]);
                w.end_row();
            }
        }
        json fit = nullptr;
        int p0 = part.horizon;
        for (const Element& e : part.elements) p0 = std::min(p0, e.tau);
        try {
            fit = fit_exponential(tail, static_cast<std::size_t>(p0)).to_json();
        } catch (const InsufficientData&) {
        }
        double max_residual = 0;
        for (const Element& e : part.elements) max_residual = std::max(max_residual, e.markov_residual);
        write_json("partition.json", {{"config", part.config.to_json()},
                                      {"elements", part.elements.size()},
                                      {"horizon", part.horizon},
                                      {"uncovered", static_cast<double>(part.uncovered)},
                                      {"seeded_taus", part.seeded_taus},
                                      {"seeds_coprime", part.seeds_coprime},
                                      {"peak_pieces", part.peak_pieces},
                                      {"truncated", part.truncated},
                                      {"max_markov_residual", max_residual},
                                      {"tail_measure", tail},
                                      {"tail_fit", fit}});
    }

    void certify_tower() {
        const ReturnPartition part = partition();
        AxiomSampling s;
        s.seed = cfg_.tower.sampling_seed;
        s.separation_pairs = cfg_.tower.separation_pairs;
        s.distortion_pairs = cfg_.tower.distortion_pairs;
        s.cylinder_points = cfg_.tower.cylinder_points;
        const AxiomReport rep = certify_axioms(part, s);
        write_json("axioms.json", rep.to_json());
        if (!(rep.c1() && rep.c2() && rep.c3() && rep.c4() && rep.c5() && rep.c6())) {
            exit_code = exit_failure;
            message = "tower axioms not all certified";
        }
    }

    void density() {
        const UniformGrid grid{cfg_.measures.grid_m};
        json info;
        DensityVector d;
        if (cfg_.measures.adaptive) {
            AdaptiveDensity a = equivariant_density_adaptive(*family_, noise_, std::max(1, cfg_.measures.m_past), grid,
                                                             6400, cfg_.workers);
            d = std::move(a.density);
            info = {{"m_past", a.m_past},
                    {"cauchy_residual", a.cauchy_residual},
                    {"grid_error", a.grid_error},
                    {"converged", a.converged}};
        } else {
            d = equivariant_density(*family_, noise_, cfg_.measures.m_past, grid, cfg_.workers);
            info = {{"m_past", cfg_.measures.m_past}, {"grid_error", d.coarsening_error()}};
        }
        if (csv()) {
            auto out = open("density.csv");
            CsvWriter w(out, {"cell_left", "cell_right", "weight"});
            for (std::size_t i = 0; i < grid.m; ++i) {
                w.field(grid.left(i)).field(grid.right(i)).field(d.weights[i]);
                w.end_row();
            }
        }
        info["grid_m"] = grid.m;
        info["total"] = d.total();
        write_json("density.json", info);
    }

    void correlation() {
        const Observable phi = observable(cfg_.measures.phi);
        const Observable psi = observable(cfg_.measures.psi);
        const CorrelationSeries s =
            quenched_correlation(*family_, noise_, phi, psi, cfg_.measures.n_max, parse_method(cfg_.measures.method),
                                 parse_direction(cfg_.measures.direction), cfg_.correlation_params());
        if (csv()) {
            auto out = open("correlation.csv");
            CsvWriter w(out, {"n", "C_n", "direction"});
            for (std::size_t n = 0; n < s.values.size(); ++n) {
                w.field(static_cast<std::uint64_t>(n)).field(s.values[n]).field(to_string(s.direction));
                w.end_row();
            }
        }
        const ObservableNorms np = observable_norms(phi);
        const ObservableNorms ns = observable_norms(psi);
        json j = s.to_json();
        j["phi"] = {{"name", phi.name}, {"sup", np.sup}, {"holder", np.holder}};
        j["psi"] = {{"name", psi.name}, {"sup", ns.sup}, {"holder", ns.holder}};
        write_json("correlation.json", j);
    }

    void fit() {
        if (cfg_.fit.input.empty()) throw ConfigError("fit needs an input CSV (--input)");
        const CsvTable t = read_csv(cfg_.fit.input);
        std::string column = cfg_.fit.column;
        if (column.empty()) {
            column = t.has_column("C_n") ? "C_n" : t.has_column("fraction") ? "fraction" : t.header.back();
        }
        const std::size_t col = t.column(column);
        std::vector<double> series;
        for (const auto& row : t.rows) {
            try {
                series.push_back(std::stod(row[col]));
            } catch (const std::exception&) {
                throw ConfigError("non-numeric value '" + row[col] + "' in column " + column);
            }
        }
        const ExpFit f = fit_exponential(series, cfg_.fit.burn_in);
        json j = f.to_json();
        j["column"] = column;
        j["rows"] = series.size();
        write_json("fit.json", j);
    }
};

json manifest_for(const std::string& sub, const ExperimentConfig& cfg, const std::vector<std::string>& artifacts,
                  int exit_code, double wall) {
    const std::string canonical = cfg.to_json().dump();
    json files = json::array();
    for (const auto& a : artifacts) {
        std::ifstream in(fs::path(cfg.output.directory) / a, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        files.push_back({{"file", a}, {"fnv1a64", hex64(fnv1a64(buf.str()))}});
    }
    return {{"tool", "rovella"},
            {"version", kVersion},
            {"subcommand", sub},
            {"config", cfg.to_json()},
            {"config_hash", hex64(fnv1a64(canonical))},
            {"seed", cfg.seed},
            {"workers", cfg.workers},
            {"wall_time_s", wall},
            {"exit_code", exit_code},
            {"artifacts", files}};
}

}  // namespace

RunResult run(const std::string& sub, const ExperimentConfig& config, std::ostream& log) {
    RunResult res;
    const auto t0 = std::chrono::steady_clock::now();
    FamilyPtr family;
    try {
        if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end()) {
            throw ConfigError("unknown subcommand " + sub);
        }
        family = config.validate();
        fs::create_directories(config.output.directory);
    } catch (const ConfigError& e) {
        res.exit_code = exit_config;
        res.message = e.what();
        log << "error: " << e.what() << '\n';
        return res;
    } catch (const fs::filesystem_error& e) {
        res.exit_code = exit_failure;
        res.message = e.what();
        log << "error: " << e.what() << '\n';
        return res;
    }

    Job job(config, family, log);
    try {
        job.dispatch(sub);
    } catch (const ConfigError& e) {
        job.exit_code = exit_config;
        job.message = e.what();
    } catch (const SingularHit& e) {
        job.exit_code = exit_numeric;
        job.message = e.what();
    } catch (const std::exception& e) {
        job.exit_code = exit_failure;
        job.message = e.what();
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.exit_code = job.exit_code;
    res.message = job.message;
    res.artifacts = job.artifacts;
    res.manifest = manifest_for(sub, config, job.artifacts, job.exit_code, wall);
    {
        std::ofstream out(fs::path(config.output.directory) / "manifest.json", std::ios::binary | std::ios::trunc);
        out << res.manifest.dump(2) << '\n';
    }
    for (const auto& a : res.artifacts) log << "wrote " << (fs::path(config.output.directory) / a).string() << '\n';
    if (res.exit_code != exit_ok) log << "error: " << res.message << '\n';
    return res;
}

RunResult rerun(const std::string& manifest_path, const std::optional<std::string>& out,
                const std::optional<int>& workers, std::ostream& log) {
    json m;
    ExperimentConfig cfg;
    try {
        std::ifstream in(manifest_path);
        if (!in) throw ConfigError("cannot open manifest " + manifest_path);
        m = json::parse(in);
        cfg = ExperimentConfig::from_json(m.at("config"));
    } catch (const json::exception& e) {
        RunResult res;
        res.exit_code = exit_config;
        res.message = std::string("bad manifest: ") + e.what();
        log << "error: " << res.message << '\n';
        return res;
    } catch (const ConfigError& e) {
        RunResult res;
        res.exit_code = exit_config;
        res.message = e.what();
        log << "error: " << res.message << '\n';
        return res;
    }
    if (out) cfg.output.directory = *out;
    if (workers) cfg.workers = *workers;
    RunResult res = run(m.at("subcommand").get<std::string>(), cfg, log);
    if (res.exit_code != m.value("exit_code", 0)) {
        log << "error: exit code " << res.exit_code << " differs from the recorded " << m.value("exit_code", 0)
            << '\n';
        if (res.exit_code == exit_ok) res.exit_code = exit_failure;
        return res;
    }
    std::size_t mismatches = 0;
    for (const auto& a : m.at("artifacts")) {
        const auto name = a.at("file").get<std::string>();
        auto it = std::find_if(res.manifest["artifacts"].begin(), res.manifest["artifacts"].end(),
                               [&](const json& x) { return x.at("file") == name; });
        if (it == res.manifest["artifacts"].end() || (*it)["fnv1a64"] != a.at("fnv1a64")) {
            log << "mismatch: " << name << '\n';
            ++mismatches;
        }
    }
    if (mismatches > 0) {
        res.exit_code = exit_failure;
        res.message = std::to_string(mismatches) + " artifacts differ from the manifest";
    } else {
        log << "reproduced " << m.at("artifacts").size() << " artifacts\n";
    }
    return res;
}

}  // namespace rovella
