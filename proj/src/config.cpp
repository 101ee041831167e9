#include "trialpower/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>

#include "trialpower/error.hpp"

namespace trialpower {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    text = trim(text);
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("bad value '" + std::string(text) + "' for " + std::string(key));
    }
    return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
    text = trim(text);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("bad boolean '" + std::string(text) + "' for " + std::string(key));
}

std::vector<std::string_view> split_list(std::string_view text) {
    std::vector<std::string_view> out;
    while (true) {
        const auto pos = text.find(',');
        const auto item = trim(text.substr(0, pos));
        if (!item.empty()) out.push_back(item);
        if (pos == std::string_view::npos) break;
        text.remove_prefix(pos + 1);
    }
    return out;
}

using Setter = std::function<void(ScenarioConfig&, std::string_view key, std::string_view value)>;

template <typename T>
Setter param_field(T ScenarioParams::*field) {
    return [field](ScenarioConfig& c, std::string_view key, std::string_view value) {
        if constexpr (std::is_same_v<T, bool>) {
            c.params.*field = parse_bool(key, value);
        } else {
            c.params.*field = parse_number<T>(key, value);
        }
    };
}

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"fixed_intercept", param_field(&ScenarioParams::fixed_intercept)},
        {"fixed_slope", param_field(&ScenarioParams::fixed_slope)},
        {"treatment_slope", param_field(&ScenarioParams::treatment_slope)},
        {"noise_multiplier", param_field(&ScenarioParams::noise_multiplier)},
        {"intercept_sd", param_field(&ScenarioParams::intercept_sd)},
        {"recover_slope_mean", param_field(&ScenarioParams::recover_slope_mean)},
        {"recover_slope_sd", param_field(&ScenarioParams::recover_slope_sd)},
        {"death_slope_mean", param_field(&ScenarioParams::death_slope_mean)},
        {"death_slope_sd", param_field(&ScenarioParams::death_slope_sd)},
        {"p_death_control", param_field(&ScenarioParams::p_death_control)},
        {"p_death_treatment", param_field(&ScenarioParams::p_death_treatment)},
        {"resid_sd", param_field(&ScenarioParams::resid_sd)},
        {"lagged", param_field(&ScenarioParams::lagged)},
        {"lag_day", param_field(&ScenarioParams::lag_day)},
        {"baseline_offset", param_field(&ScenarioParams::baseline_offset)},
        {"n_per_arm", param_field(&ScenarioParams::n_per_arm)},
        {"horizon_days", param_field(&ScenarioParams::horizon_days)},
        {"categories", param_field(&ScenarioParams::categories)},
        {"recovery_threshold", param_field(&ScenarioParams::recovery_threshold)},
        {"lag_mode",
         [](ScenarioConfig& c, std::string_view key, std::string_view value) {
             value = trim(value);
             if (value == "literal") {
                 c.params.lag_mode = LagMode::literal;
             } else if (value == "corrected") {
                 c.params.lag_mode = LagMode::corrected;
             } else {
                 throw ConfigError(std::string(key) + " must be literal or corrected");
             }
         }},
        {"generator",
         [](ScenarioConfig& c, std::string_view, std::string_view value) {
             value = trim(value);
             if (value == "eq1") {
                 c.generator = GeneratorKind::eq1;
             } else if (value == "eq1_lagged") {
                 c.generator = GeneratorKind::eq1_lagged;
             } else if (value == "po") {
                 c.generator = GeneratorKind::po;
             } else {
                 throw ConfigError("generator must be eq1, eq1_lagged or po");
             }
         }},
        {"baseline_probs",
         [](ScenarioConfig& c, std::string_view key, std::string_view value) {
             c.po.baseline_probs.clear();
             for (auto item : split_list(value)) c.po.baseline_probs.push_back(parse_number<double>(key, item));
         }},
        {"or_schedule",
         [](ScenarioConfig& c, std::string_view key, std::string_view value) {
             c.po.or_schedule.clear();
             for (auto item : split_list(value)) {
                 const auto colon = item.find(':');
                 if (colon == std::string_view::npos) {
                     throw ConfigError("or_schedule entries are day:odds_ratio");
                 }
                 const int day = parse_number<int>(key, item.substr(0, colon));
                 if (!c.po.or_schedule.emplace(day, parse_number<double>(key, item.substr(colon + 1))).second) {
                     throw ConfigError("or_schedule lists day " + std::to_string(day) + " twice");
                 }
             }
         }},
        {"reference_size",
         [](ScenarioConfig& c, std::string_view key, std::string_view value) {
             c.po.reference_size = parse_number<int>(key, value);
         }},
        {"reference_seed",
         [](ScenarioConfig& c, std::string_view key, std::string_view value) {
             c.po.reference_seed = parse_number<std::uint64_t>(key, value);
         }},
        {"n_sims",
         [](ScenarioConfig& c, std::string_view key, std::string_view value) {
             c.n_sims = parse_number<int>(key, value);
         }},
        {"master_seed",
         [](ScenarioConfig& c, std::string_view key, std::string_view value) {
             c.master_seed = parse_number<std::uint64_t>(key, value);
         }},
        {"alpha",
         [](ScenarioConfig& c, std::string_view key, std::string_view value) {
             c.alpha = parse_number<double>(key, value);
             for (auto& m : c.methods) m.alpha = c.alpha;
         }},
        {"methods",
         [](ScenarioConfig& c, std::string_view, std::string_view value) {
             c.methods = parse_method_list(value, c.alpha);
         }},
        {"workers",
         [](ScenarioConfig& c, std::string_view key, std::string_view value) {
             c.workers = parse_number<int>(key, value);
         }},
        {"output",
         [](ScenarioConfig& c, std::string_view, std::string_view value) {
             c.output = std::string(trim(value));
         }},
        {"format",
         [](ScenarioConfig& c, std::string_view, std::string_view value) {
             value = trim(value);
             if (value != "csv" && value != "text") throw ConfigError("format must be csv or text");
             c.format = std::string(value);
         }},
    };
    return table;
}

std::vector<double> default_baseline_probs() {
    // Admission mix on the 7-point scale: no one starts recovered or dead.
    return {0.0, 0.0, 0.13, 0.41, 0.18, 0.28, 0.0};
}

ScenarioConfig po_preset(std::map<int, double> schedule) {
    ScenarioConfig c;
    c.generator = GeneratorKind::po;
    c.params.treatment_slope = 0.0;
    c.params.p_death_treatment = c.params.p_death_control;
    c.po.baseline_probs = default_baseline_probs();
    c.po.or_schedule = std::move(schedule);
    c.methods = parse_method_list("prop_odds@14, prop_odds@28, log_rank_recovery, wilcoxon_mean_score");
    return c;
}

}  // namespace

std::string_view generator_name(GeneratorKind kind) {
    switch (kind) {
        case GeneratorKind::eq1: return "eq1";
        case GeneratorKind::eq1_lagged: return "eq1_lagged";
        case GeneratorKind::po: return "po";
    }
    return "eq1";
}

std::vector<std::string> preset_names() {
    return {"reference", "lagged",     "faster_recovery", "faster_mortality", "mortality_only",
            "null",      "scenario_a", "scenario_b",      "scenario_c"};
}

ScenarioConfig preset_config(std::string_view name) {
    ScenarioConfig c;
    if (name == "reference") return c;
    if (name == "lagged") {
        c.generator = GeneratorKind::eq1_lagged;
        c.params.lagged = true;
        return c;
    }
    if (name == "faster_recovery") {
        c.params.fixed_slope = -0.10;
        return c;
    }
    if (name == "faster_mortality") {
        c.params.death_slope_sd = 0.30;
        return c;
    }
    if (name == "mortality_only") {
        c.params.treatment_slope = 0.0;
        return c;
    }
    if (name == "null") {
        c.params.treatment_slope = 0.0;
        c.params.p_death_treatment = c.params.p_death_control;
        return c;
    }
    if (name == "scenario_a") return po_preset({{1, 1.0}, {11, 1.0}, {14, 1.0}, {21, 1.5}, {28, 1.75}});
    if (name == "scenario_b") return po_preset({{1, 1.0}, {11, 1.0}, {14, 1.25}, {21, 1.5}, {28, 1.75}});
    if (name == "scenario_c") return po_preset({{1, 1.0}, {11, 1.1}, {14, 1.15}, {21, 1.25}, {28, 1.75}});
    throw ConfigError("unknown preset '" + std::string(name) + "'");
}

void apply_config_key(ScenarioConfig& config, std::string_view key, std::string_view value) {
    const auto& table = setters();
    const auto it = table.find(trim(key));
    if (it == table.end()) throw ConfigError("unknown config key '" + std::string(trim(key)) + "'");
    it->second(config, it->first, value);
}

Scenario ScenarioConfig::scenario() const {
    if (generator == GeneratorKind::po) {
        POScenarioParams out = po;
        out.shared_dynamics = params;
        out.shared_dynamics.lagged = false;
        out.n_per_arm = params.n_per_arm;
        out.horizon_days = params.horizon_days;
        out.categories = params.categories;
        out.recovery_threshold = params.recovery_threshold;
        return out;
    }
    ScenarioParams out = params;
    out.lagged = generator == GeneratorKind::eq1_lagged || params.lagged;
    return out;
}

void ScenarioConfig::validate() const {
    if (n_sims < 1) throw ConfigError("n_sims must be at least 1");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    try {
        const auto s = scenario();
        if (const auto* p = std::get_if<POScenarioParams>(&s)) {
            p->validate();
        } else {
            std::get<ScenarioParams>(s).validate();
        }
        for (const auto& m : methods) m.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

ScenarioConfig parse_config(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::optional<std::string> preset;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view text(line);
        if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
        text = trim(text);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key(trim(text.substr(0, eq)));
        std::string value(trim(text.substr(eq + 1)));
        if (key == "preset") {
            preset = value;
        } else {
            entries.emplace_back(std::move(key), std::move(value));
        }
    }
    ScenarioConfig config = preset ? preset_config(*preset) : ScenarioConfig{};
    for (const auto& [key, value] : entries) apply_config_key(config, key, value);
    config.validate();
    return config;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return parse_config(in);
}

}  // namespace trialpower
