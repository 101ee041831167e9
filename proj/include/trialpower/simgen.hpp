#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "trialpower/core.hpp"
#include "trialpower/rng.hpp"

namespace trialpower {

enum class LagMode { literal, corrected };

/// baseline_offset that brings the reference scenario's power profile
/// closest (least squares over the nine reference rates) to its published
/// targets; chosen by a scan over [0, 6] in 0.25 steps with 1,000
/// replicates (tools/calibrate_offset).
inline constexpr double kCalibratedBaselineOffset = 4.0;

/// Random-line trajectory model. Each subject's latent severity on day d is
///
///   y_d = fixed_intercept + baseline_offset + fixed_slope*ln d
///         + treatment_slope*Z*ln d + b0 + b1*ln d + noise_multiplier*e_d
///
/// with b0 ~ N(0, intercept_sd^2), b1 drawn from the death-slope normal with
/// the arm's death probability and from the recovery-slope normal otherwise,
/// e_d ~ N(0, resid_sd^2). The reported score is floor(y_d) clamped to
/// [1, K], absorbed at 1 and K.
struct ScenarioParams {
    double fixed_intercept = 0.0;
    double fixed_slope = -0.05;
    double treatment_slope = -0.10;
    double noise_multiplier = 0.0;
    double intercept_sd = 1.5;
    double recover_slope_mean = -4.0;
    double recover_slope_sd = 0.3;
    double death_slope_mean = 7.0;
    double death_slope_sd = 0.15;
    double p_death_control = 0.10;
    double p_death_treatment = 0.05;
    double resid_sd = 0.25;
    bool lagged = false;
    int lag_day = 7;
    LagMode lag_mode = LagMode::corrected;
    /// Added to fixed_intercept. 0 keeps the published parameterization.
    double baseline_offset = 0.0;
    int n_per_arm = 400;
    int horizon_days = kDefaultHorizonDays;
    int categories = kDefaultCategories;
    int recovery_threshold = 1;

    /// Throws InvalidArgument.
    void validate() const;
};

/// Random effects for one subject. The death indicator and slope normal are
/// shared between the control and treatment mortality laws so that a
/// subject's two potential slopes differ only when the lower treatment death
/// probability rescues them.
struct SubjectDraws {
    double intercept_effect = 0.0;
    double control_law_slope = 0.0;
    double treatment_law_slope = 0.0;
    bool dies_under_control = false;
    bool dies_under_treatment = false;
    std::vector<double> residuals;  // per day; empty when noise_multiplier == 0
};

SubjectDraws draw_subject(const ScenarioParams& params, const CounterStream& stream);

/// Latent line y_1..y_D for the given arm and draws (dispatches on lagged/lag_mode).
std::vector<double> latent_path(const ScenarioParams& params, Arm arm, const SubjectDraws& draws);

/// floor, clamp to [1, K], then forward absorption from the first 1 or K.
std::vector<int> discretize_path(std::span<const double> latent, int categories);

/// Forward absorption on an integer path, in place.
void enforce_absorbing(std::span<int> scores, int categories);

Trajectory gen_trajectory_eq1(const ScenarioParams& params, Arm arm, const CounterStream& stream,
                              std::string subject_id = "s1");

Trajectory gen_trajectory_lagged(const ScenarioParams& params, Arm arm,
                                 const CounterStream& stream, std::string subject_id = "s1");

/// n_per_arm controls then n_per_arm treated subjects; subject i uses stream
/// (master_seed, replicate, i).
TrialDataset gen_trial_eq1(const ScenarioParams& params, std::uint64_t master_seed,
                           std::uint32_t replicate = 0);

/// Shift a category distribution (index 0 = best) by a common cumulative
/// odds ratio: odds(Y <= k) are multiplied by odds_ratio for every k.
std::vector<double> po_shift(std::span<const double> probs, double odds_ratio);

struct POScenarioParams {
    std::vector<double> baseline_probs;
    /// Day -> common odds ratio, carried forward to later days.
    std::map<int, double> or_schedule;
    ScenarioParams shared_dynamics;
    int n_per_arm = 400;
    int horizon_days = kDefaultHorizonDays;
    int categories = kDefaultCategories;
    int recovery_threshold = 1;
    /// Size and seed of the control-law sample used as the reference marginal.
    int reference_size = 200000;
    std::uint64_t reference_seed = 0x5EED0F0DDULL;

    void validate() const;
    double odds_ratio_on(int day) const;
};

/// Generator that enforces proportional odds between arms on every day.
/// Construction simulates the reference control-law marginals once.
class POTrialGenerator {
public:
    explicit POTrialGenerator(POScenarioParams params);

    const POScenarioParams& params() const { return params_; }

    /// Control-law trajectory for one subject stream.
    std::vector<int> control_law_scores(const CounterStream& stream) const;

    /// Day-by-day quantile map of a control-law path into the shifted
    /// marginals using latent uniform v, before absorption is re-applied.
    std::vector<int> quantile_map(std::span<const int> control_scores, double latent) const;

    /// quantile_map followed by forward absorption.
    std::vector<int> to_treatment(std::span<const int> control_scores, double latent) const;

    /// Reference cumulative distribution P(score <= k) on `day`, k = 1..K.
    std::span<const double> reference_cdf(int day) const;
    std::span<const double> treatment_cdf(int day) const;

    TrialDataset generate(std::uint64_t master_seed, std::uint32_t replicate = 0) const;

private:
    POScenarioParams params_;
    std::vector<std::vector<double>> control_cdf_;    // [day-1][k-1]
    std::vector<std::vector<double>> treatment_cdf_;  // [day-1][k-1]
};

TrialDataset gen_trial_po(const POScenarioParams& params, std::uint64_t master_seed,
                          std::uint32_t replicate = 0);

}  // namespace trialpower
