#pragma once

// Flat JSON experiment configurations with schema validation and a
// fingerprint of the canonical serialization.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hypdrift/diagnostics.hpp"
#include "hypdrift/gibbs.hpp"
#include "hypdrift/groups.hpp"
#include "hypdrift/walk.hpp"

namespace hypdrift {

/// Raised for malformed or invalid configurations; `path` names the field
/// ("$.batch") or the line and column of a parse error.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct ExperimentConfig {
    std::string name = "custom";
    std::string action = "free(2)";
    /// (generator word, weight); empty means uniform on the generators.
    std::vector<std::pair<std::string, double>> measure;

    std::string potential = "zero";  // zero | constant | plane-bump
    double potential_c = 0.0;        // constant value, or shift added to the bump
    double potential_amplitude = 1.0;
    double potential_tilt = 0.0;
    double potential_step = 0.0025;

    std::size_t n = 10'000;
    std::size_t batch = 1000;
    std::size_t fake_drift_n = 0;      // 0: same as n
    std::size_t fake_drift_batch = 0;  // 0: same as batch
    double ball_radius = 12.0;
    double window_lo = 6.0;
    double window_hi = 12.0;
    std::size_t bucket_n = 8;
    double bucket_eps = 0.25;
    double equality_sigmas = 2.0;
    double strict_sigmas = 3.0;

    double deviation_radius = 0.0;  // 0 disables the deviation report

    std::vector<std::size_t> phi_grid;  // empty disables shadow ratios
    std::size_t phi_batch = 200;
    std::size_t phi_pool = 2000;
    double shadow_radius = -1.0;  // negative: 0 on trees, 2 on the plane
    double atoms_radius = 10.0;
    double atoms_epsilon = 0.1;
    double atoms_max_tail = 100.0;

    std::uint64_t seed = 1;
    std::string out_dir = "out";

    nlohmann::json to_json() const;
    /// Canonical serialization: sorted keys, no whitespace, out_dir left out.
    std::string canonical() const;
    /// 16 hex digits of FNV-1a over the canonical serialization.
    std::string fingerprint() const;
};

/// Parses and validates; unknown keys and wrong types are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// The JSON schema accepted by parse_config.
nlohmann::json config_schema();

std::shared_ptr<const GroupAction> make_action(const ExperimentConfig& c);
WalkMeasure make_config_measure(std::shared_ptr<const GroupAction> action,
                                const ExperimentConfig& c);
Potential make_config_potential(const GroupAction& action, const ExperimentConfig& c);
InequalityParams make_inequality_params(const ExperimentConfig& c);

}  // namespace hypdrift
