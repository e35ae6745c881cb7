#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "ecg/rules.hpp"

namespace ecg {

/// Settings shared by the CLI subcommands. File values are overridden by flags.
struct RunConfig {
    std::filesystem::path data_dir;
    std::filesystem::path manifest;
    std::filesystem::path catalog;
    std::filesystem::path rule_map;
    std::filesystem::path model;
    std::filesystem::path out;
    std::filesystem::path external_predictions;
    double lambda = 1.0;
    double threshold = 0.5;
    std::optional<std::uint64_t> seed;
    double sample_rate_hz = 500.0;
    double unit_voltage_mv = 4.88e-3;
    double learning_rate = 0.5;
    std::size_t epochs = 500;
    /// "rule.<key>" entries, applied to RuleConfig.
    std::map<std::string, std::string> rule_overrides;

    /// Throws ConfigError unless lambda >= 0 and 0 < threshold < 1.
    void validate() const;
    RuleConfig rule_config() const;
};

/// Flat "key = value" file; '#' starts a comment. Throws ConfigError on
/// unknown keys or malformed lines.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
void apply_config_value(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace ecg
