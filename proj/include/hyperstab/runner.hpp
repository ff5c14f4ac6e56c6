#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hyperstab {

struct RunConfig {
    std::string id;          // label in the summary; defaults to the experiment name
    std::string experiment;  // see experiment_names()
    std::string params = "{}";  // JSON object, experiment specific
    std::string out_dir;        // empty: no artifacts
    std::uint64_t seed = 0;
    std::string tolerances = "{}";  // JSON object of named overrides
};

// Accepts one object, an array of objects, or {"runs": [...]}.
std::vector<RunConfig> parse_run_configs(const std::string& json_text);
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_json(const RunConfig& cfg);

// Built-in presets such as "rho-paper-matrix" and "counterexample-default".
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();
std::vector<std::string> experiment_names();

struct ExperimentResult {
    std::string id;
    std::string experiment;
    std::string status = "error";  // pass | fail | inconclusive | error
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<std::pair<std::string, std::string>> notes;
    std::vector<std::string> artifacts;
    double wall_seconds = 0.0;
    std::string config_json;  // resolved configuration
    int error_code = 0;       // process exit code of the error, 0 if none
    std::string error;

    double scalar(const std::string& name) const;  // NaN if absent
};

struct RunSummary {
    std::vector<ExperimentResult> entries;

    // 0 iff nothing failed; the first error's code wins over a plain failure
    int exit_code() const;
    std::string to_json() const;
    std::string to_table() const;
    // summary.json and summary.csv
    void write(const std::string& dir) const;
};

RunSummary run(const RunConfig& cfg);
RunSummary sweep(const std::vector<RunConfig>& cfgs, unsigned threads);

// process exit code for an error kind
int exit_code_for(int error_kind);

}  // namespace hyperstab
