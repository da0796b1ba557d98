#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rovella/config.hpp"

namespace rovella {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_config = 2, exit_numeric = 3 };

// Command-line values that replace config entries. Flags shared by several sections
// (n_max, samples) go to the section the subcommand reads.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> eps;
    std::optional<double> delta;
    std::optional<double> c;
    std::optional<double> c_prime;
    std::optional<std::size_t> samples;
    std::optional<int> n_max;
    std::optional<std::string> out;
    std::optional<int> workers;
    std::optional<double> x0;
    std::optional<int> n;
    std::optional<int> m_past;
    std::optional<std::size_t> grid;
    std::optional<std::string> phi;
    std::optional<std::string> psi;
    std::optional<std::string> method;
    std::optional<std::string> direction;
    std::optional<std::string> input;
    std::optional<std::string> column;
};

const std::vector<std::string>& subcommands();

void apply_overrides(ExperimentConfig& config, const std::string& subcommand, const Overrides& overrides);

struct RunResult {
    int exit_code = exit_ok;
    std::string message;
    std::vector<std::string> artifacts;  // file names inside the output directory
    nlohmann::json manifest;
};

/// Validates the config, runs one subcommand and writes its artifacts plus manifest.json
/// into config.output.directory. Errors become exit codes; `log` gets one line per event.
RunResult run(const std::string& subcommand, const ExperimentConfig& config, std::ostream& log);

// Replays a manifest. The output directory and worker count may be changed; artifacts
// are compared with the recorded hashes and a mismatch is a failure.
RunResult rerun(const std::string& manifest_path, const std::optional<std::string>& out,
                const std::optional<int>& workers, std::ostream& log);

}  // namespace rovella
