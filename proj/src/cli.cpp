#include "trialpower/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "trialpower/config.hpp"
#include "trialpower/dataset_io.hpp"
#include "trialpower/error.hpp"
#include "trialpower/power.hpp"
#include "trialpower/report.hpp"

namespace trialpower {

namespace {

struct ScenarioFlags {
    std::string preset;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> lag_mode;
    std::optional<double> baseline_offset;
    std::optional<int> n_per_arm;
    std::optional<int> sims;
    std::optional<int> workers;
    std::optional<double> alpha;
    std::optional<std::string> methods;
    std::optional<std::string> output;
    std::optional<std::string> format;
};

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& f) {
    auto* preset = cmd->add_option("--preset", f.preset, "Named scenario")
                       ->check(CLI::IsMember(preset_names()));
    cmd->add_option("--config", f.config_path, "key = value scenario file")->excludes(preset);
    cmd->add_option("--seed", f.seed, "Master seed (required unless the config sets master_seed)");
    cmd->add_option("--lag-mode", f.lag_mode, "Lagged model variant")
        ->check(CLI::IsMember({"literal", "corrected"}));
    cmd->add_option("--baseline-offset", f.baseline_offset, "Added to the fixed intercept");
    cmd->add_option("--n-per-arm", f.n_per_arm, "Subjects per arm");
    cmd->add_option("--output,-o", f.output, "Write to this path instead of stdout");
}

ScenarioConfig resolve_scenario(const ScenarioFlags& f) {
    ScenarioConfig config;
    if (!f.config_path.empty()) {
        config = load_config(f.config_path);
    } else if (!f.preset.empty()) {
        config = preset_config(f.preset);
    }
    if (f.lag_mode) apply_config_key(config, "lag_mode", *f.lag_mode);
    if (f.baseline_offset) config.params.baseline_offset = *f.baseline_offset;
    if (f.n_per_arm) config.params.n_per_arm = *f.n_per_arm;
    if (f.sims) config.n_sims = *f.sims;
    if (f.workers) config.workers = *f.workers;
    if (f.alpha) apply_config_key(config, "alpha", std::to_string(*f.alpha));
    if (f.methods) config.methods = parse_method_list(*f.methods, config.alpha);
    if (f.output) config.output = *f.output;
    if (f.format) config.format = *f.format;
    if (f.seed) config.master_seed = *f.seed;
    if (!config.master_seed) throw CLI::RequiredError("--seed");
    config.validate();
    return config;
}

std::vector<int> default_days(int horizon) {
    std::vector<int> days;
    for (int d : {7, 14, 21, 28}) {
        if (d <= horizon) days.push_back(d);
    }
    if (days.empty()) days.push_back(horizon);
    return days;
}

std::vector<MethodSpec> resample_battery(int horizon, double alpha) {
    std::string text;
    for (int d : default_days(horizon)) {
        text += "prop_odds@" + std::to_string(d) + ",t_test@" + std::to_string(d) + ",";
    }
    text += "cox_recovery,cox_improvement:1,cox_improvement:2,cox_death";
    return parse_method_list(text, alpha);
}

template <typename Fn>
void emit(const std::optional<std::string>& path, std::ostream& out, Fn&& write_to) {
    if (!path) {
        write_to(out);
        return;
    }
    std::ofstream file(*path, std::ios::binary);
    if (!file) throw DataError("cannot write " + *path);
    write_to(file);
    file.flush();
    if (!file) throw DataError("write failed for " + *path);
}

TrialDataset load_for_analysis(const std::string& path, int augment, std::ostream& err) {
    auto loaded = load_dataset(path, &err);
    if (augment > 1) return augment_dataset(loaded.dataset, augment);
    return std::move(loaded.dataset);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Endpoint power analysis for ordinal-outcome trials", "trialpower"};
    app.require_subcommand(1);

    ScenarioFlags sim_flags;
    std::uint32_t replicate = 0;
    auto* simulate = app.add_subcommand("simulate", "Write one simulated trial as dataset CSV");
    add_scenario_flags(simulate, sim_flags);
    simulate->add_option("--replicate", replicate, "Replicate index within the seed");

    ScenarioFlags pow_flags;
    auto* power = app.add_subcommand("power", "Monte Carlo power for a scenario");
    add_scenario_flags(power, pow_flags);
    power->add_option("--sims", pow_flags.sims, "Number of simulated trials");
    power->add_option("--workers", pow_flags.workers, "Worker threads");
    power->add_option("--alpha", pow_flags.alpha, "Two-sided level");
    power->add_option("--methods", pow_flags.methods, "Comma list, e.g. prop_odds@14,cox_recovery");
    power->add_option("--format", pow_flags.format, "csv or text")->check(CLI::IsMember({"csv", "text"}));

    std::string data_path;
    std::optional<std::uint64_t> rs_seed;
    int rs_n = 150;
    int rs_reps = 100000;
    int rs_workers = 1;
    int augment = 1;
    double rs_alpha = 0.05;
    std::optional<std::string> rs_methods;
    std::optional<std::string> rs_output;
    std::string rs_format = "csv";
    auto* resample = app.add_subcommand("resample", "Subsampling power on a dataset");
    resample->add_option("--data", data_path, "Dataset CSV")->required();
    resample->add_option("--seed", rs_seed, "Master seed")->required();
    resample->add_option("--n-per-arm", rs_n, "Subjects drawn per arm");
    resample->add_option("--reps", rs_reps, "Number of resamples");
    resample->add_option("--workers", rs_workers, "Worker threads");
    resample->add_option("--alpha", rs_alpha, "Two-sided level");
    resample->add_option("--methods", rs_methods, "Comma list of methods");
    resample->add_option("--augment", augment, "Repeat every subject this many times first");
    resample->add_option("--output,-o", rs_output, "Write to this path instead of stdout");
    resample->add_option("--format", rs_format, "csv or text")->check(CLI::IsMember({"csv", "text"}));

    std::string an_path;
    std::vector<int> an_days;
    int an_augment = 1;
    std::optional<std::string> an_output;
    std::string an_format = "text";
    auto* analyze = app.add_subcommand("analyze", "Full test panel on a dataset");
    analyze->add_option("--data", an_path, "Dataset CSV")->required();
    analyze->add_option("--days", an_days, "Fixed days for day-specific tests")->delimiter(',');
    analyze->add_option("--augment", an_augment, "Repeat every subject this many times first");
    analyze->add_option("--output,-o", an_output, "Write to this path instead of stdout");
    analyze->add_option("--format", an_format, "csv or text")->check(CLI::IsMember({"csv", "text"}));

    double hr = 0.0, ss_alpha = 0.05, ss_power = 0.8, event_rate = 0.0, allocation = 1.0;
    auto* samplesize = app.add_subcommand("samplesize", "Events and subjects for a log-rank test");
    samplesize->add_option("--hr", hr, "Hazard ratio")->required();
    samplesize->add_option("--alpha", ss_alpha, "Two-sided level");
    samplesize->add_option("--power", ss_power, "Target power");
    samplesize->add_option("--event-rate", event_rate, "Probability a subject has the event")->required();
    samplesize->add_option("--allocation", allocation, "Treatment:control ratio");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed()) {
            const auto config = resolve_scenario(sim_flags);
            const auto scenario = config.scenario();
            const TrialDataset data =
                std::holds_alternative<POScenarioParams>(scenario)
                    ? gen_trial_po(std::get<POScenarioParams>(scenario), *config.master_seed, replicate)
                    : gen_trial_eq1(std::get<ScenarioParams>(scenario), *config.master_seed, replicate);
            emit(config.output, out, [&](std::ostream& o) { write_dataset(data, o); });
        } else if (power->parsed()) {
            const auto config = resolve_scenario(pow_flags);
            const auto table = run_power_study(config.scenario(), config.methods, config.n_sims,
                                               *config.master_seed, config.workers);
            const auto format = parse_report_format(config.format);
            emit(config.output, out, [&](std::ostream& o) { write_report(table, o, format); });
        } else if (resample->parsed()) {
            const TrialDataset data = load_for_analysis(data_path, augment, err);
            const auto methods = rs_methods ? parse_method_list(*rs_methods, rs_alpha)
                                            : resample_battery(data.horizon_days, rs_alpha);
            const auto table = resample_power(data, rs_n, rs_reps, methods, *rs_seed, rs_workers);
            const auto format = parse_report_format(rs_format);
            emit(rs_output, out, [&](std::ostream& o) { write_report(table, o, format); });
        } else if (analyze->parsed()) {
            const TrialDataset data = load_for_analysis(an_path, an_augment, err);
            const auto days = an_days.empty() ? default_days(data.horizon_days) : an_days;
            const auto results = analysis_panel(data, days);
            const auto format = parse_report_format(an_format);
            emit(an_output, out, [&](std::ostream& o) { write_report(results, o, format); });
        } else if (samplesize->parsed()) {
            const auto size = schoenfeld_sample_size(hr, ss_alpha, ss_power, event_rate, allocation);
            out << "events_required," << size.events_required << '\n'
                << "total_n," << size.total_n << '\n';
        }
    } catch (const CLI::RequiredError& e) {
        err << "error: " << e.what() << " is required\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDataError;
    }
    return kExitOk;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace trialpower
