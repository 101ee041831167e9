#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trialpower/core.hpp"
#include "trialpower/inference.hpp"
#include "trialpower/simgen.hpp"

namespace trialpower {

enum class MethodKind {
    prop_odds,
    t_test,
    wilcoxon_mean_score,
    two_proportion_mortality,
    fisher_mortality,
    log_rank_recovery,
    log_rank_improvement,
    cox_recovery,
    cox_improvement,
    cox_death,
};

/// One analysis in a power study.
///
/// Text form (see parse_method): `name[@day][:k]`, e.g. `prop_odds@14`,
/// `cox_improvement:2`, `two_proportion_mortality@28`. `t_test` without a
/// day compares per-subject mean scores; `wilcoxon_mean_score@d` averages
/// through day d (default: horizon). Mortality methods default to the
/// horizon day.
struct MethodSpec {
    MethodKind kind = MethodKind::prop_odds;
    std::optional<int> day;
    int k_points = 2;
    double alpha = 0.05;

    std::string label() const;
    void validate() const;

    friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

MethodSpec parse_method(std::string_view text, double alpha = 0.05);
std::vector<MethodSpec> parse_method_list(std::string_view text, double alpha = 0.05);

/// Proportional odds at days 1, 7, 14, 28; mean score; log-rank for time to
/// 2-point improvement and recovery; Cox for time to death; day-28 mortality
/// proportions.
std::vector<MethodSpec> simulation_battery(double alpha = 0.05);

struct PowerRow {
    MethodSpec method;
    double rejection_rate = 0.0;
    double mc_se = 0.0;
    int n_sims = 0;
    int n_degenerate = 0;
};

struct PowerTable {
    std::vector<PowerRow> rows;

    const PowerRow* find(std::string_view label) const;
};

/// Subjects selected for one analysis, by arm.
struct AnalysisSample {
    std::vector<const Trajectory*> treatment;
    std::vector<const Trajectory*> control;
    int horizon_days = kDefaultHorizonDays;
    int categories = kDefaultCategories;
    int recovery_threshold = 1;
};

AnalysisSample full_sample(const TrialDataset& dataset);

/// Run one method. Estimates favour treatment when OR / rate ratio > 1 and
/// when the score mean difference (control minus treatment) is positive;
/// mortality uses treatment-minus-control risk difference and the death
/// hazard ratio. Throws DegenerateInput / UndefinedValue when undefined.
TestResult evaluate_method(const AnalysisSample& sample, const MethodSpec& method);

enum class Verdict : std::uint8_t { accept = 0, reject = 1, degenerate = 2 };

/// evaluate_method reduced to a rejection decision; never throws.
Verdict test_verdict(const AnalysisSample& sample, const MethodSpec& method) noexcept;

using Scenario = std::variant<ScenarioParams, POScenarioParams>;

/// Monte Carlo power: replicate r is generated from (master_seed, r), so the
/// table is identical for any worker count.
PowerTable run_power_study(const Scenario& scenario, std::span<const MethodSpec> methods,
                           int n_sims, std::uint64_t master_seed, int workers = 1);

/// Subsampling power: each replicate draws n_per_arm subjects per arm
/// without replacement from `dataset`.
PowerTable resample_power(const TrialDataset& dataset, int n_per_arm, int n_reps,
                          std::span<const MethodSpec> methods, std::uint64_t master_seed,
                          int workers = 1);

/// Every subject repeated `factor` times under new identifiers.
TrialDataset augment_dataset(const TrialDataset& dataset, int factor);

struct InformationSnapshot {
    int n_enrolled = 0;
    int n_with_full_followup = 0;
    int n_events_observed = 0;  // recoveries seen before the cutoff
    int n_deaths_observed = 0;
};

/// Counts available at a data freeze on `cutoff_calendar_day` when subject i
/// entered on enrollment_days[i]; follow-up is truncated to cutoff - entry.
InformationSnapshot information_snapshot(const TrialDataset& dataset, int cutoff_calendar_day,
                                         std::span<const int> enrollment_days);

/// Observed-data panel: proportional odds and t-test per day, mean-score
/// tests, time-to-event (Cox estimate with log-rank p), mortality.
std::vector<TestResult> analysis_panel(const TrialDataset& dataset, std::span<const int> days);

}  // namespace trialpower
