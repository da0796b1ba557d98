#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"
#include "rovella/config.hpp"
#include "rovella/csv.hpp"
#include "rovella/errors.hpp"
#include "rovella/runner.hpp"

using namespace rovella;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rovella_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentConfig small_config(const fs::path& out) {
    ExperimentConfig c;
    c.output.directory = out.string();
    c.orbit.n = 200;
    c.tails.samples = 3000;
    c.tails.n_max = 30;
    c.tower.n_max = 12;
    c.tower.separation_pairs = 50;
    c.tower.distortion_pairs = 4000;
    c.tower.cylinder_points = 50;
    c.measures.grid_m = 256;
    c.measures.m_past = 40;
    c.measures.n_max = 20;
    return c;
}

int exit_status(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("csv quoting round trip") {
    const fs::path dir = scratch("csv");
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "t.csv", std::ios::binary);
        CsvWriter w(out, {"name", "value"});
        w.field(std::string("plain")).field(1.5);
        w.end_row();
        w.field(std::string("with,comma")).field(0.1);
        w.end_row();
        w.field(std::string("say \"hi\"\nbye")).field(-2.0);
        w.end_row();
        CHECK_THROWS_AS(w.end_row(), InvalidState);
    }
    const CsvTable t = read_csv((dir / "t.csv").string());
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[1][0] == "with,comma");
    CHECK(t.rows[2][0] == "say \"hi\"\nbye");
    CHECK(std::stod(t.rows[1][1]) == 0.1);
    CHECK(csv_field("a\"b") == "\"a\"\"b\"");
    CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("hashes") {
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
    CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
}

TEST_CASE("config parsing") {
    const ExperimentConfig d;
    const ExperimentConfig round = ExperimentConfig::from_json(d.to_json());
    CHECK(round.to_json() == d.to_json());
    const ExperimentConfig partial = ExperimentConfig::from_json({{"noise", {{"seed", 9}}}});
    CHECK(partial.seed == 9);
    CHECK(partial.eps == d.eps);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"noise", {{"sead", 9}}}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"colour", 1}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"noise", {{"eps", "big"}}}}), ConfigError);
    CHECK_NOTHROW(d.validate());
}

TEST_CASE("validation names the violated chain") {
    ExperimentConfig c;
    c.hyperbolic.c_prime = c.hyperbolic.c;
    try {
        c.validate();
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("0 < c < c_prime < kappa") != std::string::npos);
    }
    ExperimentConfig e;
    e.eps = 0.5;
    CHECK_THROWS_WITH_AS(e.validate(), doctest::Contains("eps <= eps_max"), ConfigError);
    ExperimentConfig w;
    w.hyperbolic.delta0 = 0.1;
    CHECK_THROWS_WITH_AS(w.validate(), doctest::Contains("delta0"), ConfigError);
    ExperimentConfig m;
    m.measures.phi = "sign";
    CHECK_THROWS_AS(m.validate(), ConfigError);

    std::ostringstream log;
    const RunResult r = run("simulate-orbit", c, log);
    CHECK(r.exit_code == exit_config);
    CHECK(log.str().find("violated chain") != std::string::npos);
}

TEST_CASE("overrides go to the section the subcommand reads") {
    ExperimentConfig c;
    Overrides o;
    o.n_max = 17;
    o.samples = 123;
    apply_overrides(c, "hyperbolic-tails", o);
    CHECK(c.tails.n_max == 17);
    CHECK(c.tails.samples == 123);
    CHECK(c.measures.n_max == ExperimentConfig{}.measures.n_max);
    apply_overrides(c, "build-partition", o);
    CHECK(c.tower.n_max == 17);
    apply_overrides(c, "correlation", o);
    CHECK(c.measures.n_max == 17);
    CHECK(c.measures.samples == 123);
}

TEST_CASE("orbit dumps are deterministic") {
    const fs::path a = scratch("orbit_a");
    const fs::path b = scratch("orbit_b");
    std::ostringstream log;
    CHECK(run("simulate-orbit", small_config(a), log).exit_code == exit_ok);
    CHECK(run("simulate-orbit", small_config(b), log).exit_code == exit_ok);
    const std::string first = slurp(a / "orbit.csv");
    CHECK_FALSE(first.empty());
    CHECK(first == slurp(b / "orbit.csv"));
    CHECK(first.substr(0, first.find('\n')) == "n,omega,x,log_derivative,depth,visit");
}

TEST_CASE("manifests replay every subcommand") {
    for (const std::string& sub : subcommands()) {
        if (sub == "fit") continue;
        const fs::path dir = scratch("replay_" + sub);
        std::ostringstream log;
        ExperimentConfig c = small_config(dir);
        const RunResult first = run(sub, c, log);
        CHECK_MESSAGE(first.exit_code == exit_ok, sub << ": " << first.message);
        CHECK(first.manifest["config_hash"].get<std::string>().size() == 16);
        const RunResult again = rerun((dir / "manifest.json").string(), (dir / "again").string(), 3, log);
        CHECK_MESSAGE(again.exit_code == exit_ok, sub << ": " << again.message);
        for (const auto& name : first.artifacts) CHECK(slurp(dir / name) == slurp(dir / "again" / name));
    }
}

TEST_CASE("fit subcommand") {
    const fs::path dir = scratch("fit");
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "series.csv", std::ios::binary);
        CsvWriter w(out, {"n", "C_n", "direction"});
        for (int n = 0; n < 30; ++n) {
            w.field(n).field(2 * std::exp(-0.3 * n)).field(std::string("forward"));
            w.end_row();
        }
    }
    ExperimentConfig c = small_config(dir / "out");
    c.fit.input = (dir / "series.csv").string();
    std::ostringstream log;
    const RunResult r = run("fit", c, log);
    REQUIRE(r.exit_code == exit_ok);
    const auto j = nlohmann::json::parse(slurp(dir / "out" / "fit.json"));
    CHECK(j["b"].get<double>() == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(j["column"] == "C_n");
    c.fit.input.clear();
    CHECK(run("fit", c, log).exit_code == exit_config);
}

TEST_CASE("command line exit codes") {
    const std::string exe = ROVELLA_CLI_PATH;
    const fs::path dir = scratch("binary");
    CHECK(exit_status(exe + " simulate-orbit --n 50 --out " + (dir / "ok").string() + " 2>/dev/null") == 0);
    CHECK(exit_status(exe + " simulate-orbit --c-prime 0.1 --out " + (dir / "bad").string() + " 2>/dev/null") == 2);
    CHECK(exit_status(exe + " simulate-orbit --eps 0.5 --out " + (dir / "bad").string() + " 2>/dev/null") == 2);
    CHECK(exit_status(exe + " simulate-orbit --bogus 2>/dev/null >/dev/null") == 2);
    CHECK(exit_status(exe + " simulate-orbit --config /nonexistent.json 2>/dev/null") == 2);
    CHECK(exit_status(exe + " rerun --manifest " + (dir / "ok" / "manifest.json").string() + " --out " +
                      (dir / "ok2").string() + " 2>/dev/null") == 0);
    CHECK(slurp(dir / "ok" / "orbit.csv") == slurp(dir / "ok2" / "orbit.csv"));
}

}  // TEST_SUITE
