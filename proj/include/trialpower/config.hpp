#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trialpower/power.hpp"
#include "trialpower/simgen.hpp"

namespace trialpower {

enum class GeneratorKind { eq1, eq1_lagged, po };

/// Everything a `power` run needs. Text form is one `key = value` per line,
/// `#` starts a comment. A `preset` key is applied before any other key
/// regardless of its position. Unknown keys are errors.
///
/// Keys: preset, generator (eq1 | eq1_lagged | po), every ScenarioParams
/// field by name, lag_mode (literal | corrected), baseline_probs (comma
/// list), or_schedule (`day:or,...`), reference_size, reference_seed,
/// n_sims, master_seed, alpha, methods (comma list, see parse_method),
/// workers, output, format (csv | text).
struct ScenarioConfig {
    GeneratorKind generator = GeneratorKind::eq1;
    ScenarioParams params;
    POScenarioParams po;
    int n_sims = 1000;
    std::optional<std::uint64_t> master_seed;
    double alpha = 0.05;
    std::vector<MethodSpec> methods = simulation_battery();
    int workers = 1;
    std::optional<std::string> output;
    std::string format = "csv";

    /// Resolved generator input; PO dynamics share params' fields.
    Scenario scenario() const;
    void validate() const;
};

std::vector<std::string> preset_names();

/// Throws ConfigError for an unknown name.
ScenarioConfig preset_config(std::string_view name);

/// Apply one key; throws ConfigError.
void apply_config_key(ScenarioConfig& config, std::string_view key, std::string_view value);

ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::string& path);

std::string_view generator_name(GeneratorKind kind);

}  // namespace trialpower
