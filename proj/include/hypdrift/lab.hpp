#pragma once

// Experiment runner: builtin configurations, report emission and the suite.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hypdrift/config.hpp"

namespace hypdrift {

inline constexpr const char* kLabVersion = "1.0.0";

/// Version of each module, embedded in every report.
nlohmann::json module_versions();

std::vector<std::string> builtin_config_names();
/// Throws std::invalid_argument for unknown names.
ExperimentConfig builtin_config(std::string_view name);

struct RunOutput {
    int exit_code = 0;  // 0 done, 1 error, 2 inconclusive verdict
    nlohmann::json report;
    std::vector<std::string> files;  // written paths
    std::string error;
};

/// Runs the inequality report plus the optional deviation and shadow-ratio
/// blocks and writes report.json and CSV plot data into the output directory
/// (`out_dir` overrides the config). Never throws.
RunOutput run_experiment(const ExperimentConfig& config,
                         const std::optional<std::string>& out_dir = {});

/// kind: actions, measures, potentials or configs.
std::string list_text(std::string_view kind);
/// Any action, potential or builtin config; throws std::invalid_argument.
std::string describe_text(std::string_view name);

struct SuiteRow {
    std::string config;
    std::string expected;  // verdict, or "guivarch" when only the inequality is asserted
    std::string observed;
    bool guivarch_holds = false;
    int exit_code = 0;
    bool pass = false;
    std::string fingerprint;
};

std::vector<std::string> suite_config_names();
/// Runs every suite config into out_dir/<name>; `seed` replaces each master seed.
std::vector<SuiteRow> run_suite(const std::string& out_dir,
                                std::optional<std::uint64_t> seed = {});
std::string suite_table(const std::vector<SuiteRow>& rows);

}  // namespace hypdrift
