#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rovella/config.hpp"
#include "rovella/errors.hpp"
#include "rovella/runner.hpp"

namespace {

template <class T>
void optional_flag(CLI::App* app, const std::string& name, std::optional<T>& slot, const std::string& help) {
    app->add_option_function<T>(name, [&slot](const T& v) { slot = v; }, help);
}

std::string describe(const std::string& name) {
    static const std::map<std::string, std::string> text{
        {"simulate-orbit", "dump one random orbit with derivatives and return depths"},
        {"verify-family", "check the family conditions, delta0 constraints and kappa"},
        {"hyperbolic-tails", "survival of first hyperbolic time and first hyperbolic return"},
        {"bad-set-tails", "fraction of orbits in the bad set E_n"},
        {"build-partition", "build the return-time partition of the base"},
        {"certify-tower", "build the partition and check the tower axioms"},
        {"density", "equivariant density by pulling back the uniform density"},
        {"correlation", "quenched correlation series with an exponential fit"},
        {"fit", "exponential fit of a column of a CSV file"},
    };
    const auto it = text.find(name);
    return it == text.end() ? std::string() : it->second;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random Lorenz map experiments: orbits, hyperbolic times, return partitions, correlations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", rovella::kVersion);

    std::string config_path;
    rovella::Overrides o;
    for (const auto& name : rovella::subcommands()) {
        CLI::App* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config", config_path, "JSON config file");
        optional_flag(sub, "--seed", o.seed, "master seed");
        optional_flag(sub, "--eps", o.eps, "noise size");
        optional_flag(sub, "--delta", o.delta, "critical neighborhood size");
        optional_flag(sub, "--c", o.c, "bad-set threshold");
        optional_flag(sub, "--c-prime", o.c_prime, "hyperbolic-time rate");
        optional_flag(sub, "--samples", o.samples, "ensemble size");
        optional_flag(sub, "--n-max", o.n_max, "horizon");
        optional_flag(sub, "--out", o.out, "output directory");
        optional_flag(sub, "--workers", o.workers, "worker threads");
        if (name == "simulate-orbit") {
            optional_flag(sub, "--x0", o.x0, "initial point");
            optional_flag(sub, "--n", o.n, "orbit length");
        }
        if (name == "density" || name == "correlation") {
            optional_flag(sub, "--m-past", o.m_past, "pullback depth");
            optional_flag(sub, "--grid", o.grid, "number of cells");
        }
        if (name == "correlation") {
            optional_flag(sub, "--phi", o.phi, "Hölder observable");
            optional_flag(sub, "--psi", o.psi, "bounded observable");
            optional_flag(sub, "--method", o.method, "ulam or monte_carlo");
            optional_flag(sub, "--direction", o.direction, "forward or backward");
        }
        if (name == "fit") {
            optional_flag(sub, "--input", o.input, "CSV to fit");
            optional_flag(sub, "--column", o.column, "column holding the series");
        }
    }
    std::string manifest;
    std::optional<std::string> rerun_out;
    std::optional<int> rerun_workers;
    CLI::App* rerun = app.add_subcommand("rerun", "replay a manifest and compare artifacts");
    rerun->add_option("--manifest", manifest, "manifest.json of an earlier run")->required();
    optional_flag(rerun, "--out", rerun_out, "output directory");
    optional_flag(rerun, "--workers", rerun_workers, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : rovella::exit_config;
    }

    if (rerun->parsed()) {
        return rovella::rerun(manifest, rerun_out, rerun_workers, std::cerr).exit_code;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    rovella::ExperimentConfig cfg;
    try {
        if (!config_path.empty()) cfg = rovella::ExperimentConfig::load(config_path);
    } catch (const rovella::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return rovella::exit_config;
    }
    rovella::apply_overrides(cfg, name, o);
    const rovella::RunResult res = rovella::run(name, cfg, std::cerr);
    return res.exit_code;
}
