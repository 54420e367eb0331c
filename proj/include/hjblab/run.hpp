#pragma once

#include "hjblab/analysis.hpp"
#include "hjblab/config.hpp"

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hjblab {

/// Exit codes of `run`.
enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_config_error = 2, exit_runtime_error = 3 };

struct RunOptions {
    std::string out_dir = "hjblab-out";
    std::optional<std::uint64_t> seed_override;
    unsigned threads = 1;
    bool strict = false;
};

/// $HJBLAB_OUT when set, else ./hjblab-out.
std::string default_out_dir();

struct CheckRecord {
    std::string name;
    bool passed = false;
    nlohmann::json detail;
};

/**
 * Record of one run: echoed config, seeds, timestamps, every artifact written
 * and every check. Artifacts and the manifest itself are written atomically.
 */
class RunManifest {
public:
    RunManifest(std::string subcommand, std::string out_dir);

    void set_config(const ScenarioConfig& config);
    void set_seed(const std::string& name, std::uint64_t seed);
    void set_threads(unsigned threads) { threads_ = threads; }

    const std::string& out_dir() const { return out_dir_; }
    std::string path(const std::string& name) const;

    void write_text(const std::string& name, const std::string& text);
    void write_json(const std::string& name, const nlohmann::json& j);
    void write_field(const std::string& name, const Field& field);

    void check(const std::string& name, bool passed, nlohmann::json detail = nlohmann::json::object());
    const std::vector<CheckRecord>& checks() const { return checks_; }
    const std::vector<std::string>& artifacts() const { return artifacts_; }
    bool passed() const;
    /// {"subcommand", "failed": [{name, detail}...]}
    nlohmann::json failures() const;

    nlohmann::json to_json() const;
    /// Stamps the stop time and writes manifest.json.
    void finish();

private:
    std::string subcommand_;
    std::string out_dir_;
    std::string started_;
    std::string finished_;
    std::chrono::steady_clock::time_point clock_;
    double wall_ = 0.0;
    unsigned threads_ = 1;
    nlohmann::json config_;
    nlohmann::json seeds_ = nlohmann::json::object();
    std::vector<std::string> warnings_;
    std::vector<std::string> artifacts_;
    std::vector<CheckRecord> checks_;
};

struct ScenarioSolution {
    Grid grid;
    ActionSet actions;
    DirectResult direct;
};

/// Direct HJB solve on the scenario grid with its action table and boundary data.
ScenarioSolution solve_scenario(const ScenarioConfig& config);
/// Feedback named by experiment.control: the solved argmin policy, or a = x for "follow".
Feedback scenario_argmin(const ScenarioConfig& config, const ScenarioSolution& solution);
SweepSpec scenario_sweep(const ScenarioConfig& config);
TruncationSpec scenario_truncation(const ScenarioConfig& config);

const std::vector<std::string>& subcommands();

/// Runs one subcommand against a prepared config, filling the manifest.
void run_scenario(const std::string& subcommand, const ScenarioConfig& config, RunManifest& manifest,
                  std::ostream& log);

/**
 * Resolves `config` (path or built-in name), runs the subcommand and writes
 * the manifest. Prints a JSON failure summary to `err` on nonzero exit.
 */
int run(const std::string& subcommand, const std::string& config, const RunOptions& options, std::ostream& out,
        std::ostream& err);

}  // namespace hjblab
