#include "trialpower/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "trialpower/error.hpp"

namespace trialpower {

namespace {

// Slot layout within a subject stream.
constexpr std::uint32_t kSlotIntercept = 0;
constexpr std::uint32_t kSlotDeath = 1;
constexpr std::uint32_t kSlotSlope = 2;
constexpr std::uint32_t kSlotBaseline = 3;
constexpr std::uint32_t kSlotBaselinePosition = 4;
constexpr std::uint32_t kSlotLatentRank = 5;
constexpr std::uint32_t kSlotResidualBase = 16;

void require(bool ok, const char* what) {
    if (!ok) throw InvalidArgument(what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::string subject_name(std::uint32_t index) { return "s" + std::to_string(index + 1); }

}  // namespace

void ScenarioParams::validate() const {
    require(is_probability(p_death_control) && is_probability(p_death_treatment),
            "death probabilities must lie in [0, 1]");
    require(intercept_sd >= 0 && recover_slope_sd >= 0 && death_slope_sd >= 0 && resid_sd >= 0,
            "standard deviations must be non-negative");
    require(categories >= 2 && categories <= 100, "categories must lie in [2, 100]");
    require(horizon_days >= 1, "horizon must be at least one day");
    require(n_per_arm >= 1, "n_per_arm must be positive");
    require(recovery_threshold >= 1 && recovery_threshold < categories,
            "recovery threshold must lie in [1, K-1]");
    require(lag_day >= 0 && lag_day < horizon_days, "lag_day must lie in [0, horizon)");
    require(std::isfinite(fixed_intercept + fixed_slope + treatment_slope + noise_multiplier +
                          baseline_offset + recover_slope_mean + death_slope_mean),
            "model coefficients must be finite");
}

SubjectDraws draw_subject(const ScenarioParams& params, const CounterStream& stream) {
    SubjectDraws draws;
    draws.intercept_effect = params.intercept_sd * stream.normal(kSlotIntercept);
    const double u = stream.uniform(kSlotDeath);
    const double z = stream.normal(kSlotSlope);
    draws.dies_under_control = u < params.p_death_control;
    draws.dies_under_treatment = u < params.p_death_treatment;
    const double death_slope = params.death_slope_mean + params.death_slope_sd * z;
    const double recover_slope = params.recover_slope_mean + params.recover_slope_sd * z;
    draws.control_law_slope = draws.dies_under_control ? death_slope : recover_slope;
    draws.treatment_law_slope = draws.dies_under_treatment ? death_slope : recover_slope;
    if (params.noise_multiplier != 0.0) {
        draws.residuals.resize(static_cast<std::size_t>(params.horizon_days));
        for (int d = 1; d <= params.horizon_days; ++d) {
            draws.residuals[static_cast<std::size_t>(d - 1)] =
                params.resid_sd * stream.normal(kSlotResidualBase + static_cast<std::uint32_t>(d));
        }
    }
    return draws;
}

std::vector<double> latent_path(const ScenarioParams& params, Arm arm, const SubjectDraws& draws) {
    const int horizon = params.horizon_days;
    const bool treated = arm == Arm::treatment;
    const double level = params.fixed_intercept + params.baseline_offset + draws.intercept_effect;
    std::vector<double> y(static_cast<std::size_t>(horizon));
    for (int d = 1; d <= horizon; ++d) {
        const double log_day = std::log(static_cast<double>(d));
        const double log_lagged =
            d > params.lag_day ? std::log(static_cast<double>(d - params.lag_day)) : 0.0;
        double v = level;
        if (!params.lagged) {
            const double slope = params.fixed_slope + (treated ? params.treatment_slope : 0.0) +
                                 (treated ? draws.treatment_law_slope : draws.control_law_slope);
            v += slope * log_day;
        } else if (params.lag_mode == LagMode::literal) {
            // Only the treated arm carries a random slope, and only after the lag.
            v += params.fixed_slope * log_day;
            if (treated) v += (params.treatment_slope + draws.treatment_law_slope) * log_lagged;
        } else {
            v += (params.fixed_slope + draws.control_law_slope) * log_day;
            if (treated) {
                v += (params.treatment_slope + draws.treatment_law_slope - draws.control_law_slope) *
                     log_lagged;
            }
        }
        if (!draws.residuals.empty()) {
            v += params.noise_multiplier * draws.residuals[static_cast<std::size_t>(d - 1)];
        }
        y[static_cast<std::size_t>(d - 1)] = v;
    }
    return y;
}

void enforce_absorbing(std::span<int> scores, int categories) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] == 1 || scores[i] == categories) {
            std::fill(scores.begin() + static_cast<std::ptrdiff_t>(i) + 1, scores.end(), scores[i]);
            return;
        }
    }
}

std::vector<int> discretize_path(std::span<const double> latent, int categories) {
    std::vector<int> scores(latent.size());
    for (std::size_t i = 0; i < latent.size(); ++i) {
        const double clamped = std::clamp(std::floor(latent[i]), 1.0, static_cast<double>(categories));
        scores[i] = static_cast<int>(clamped);
    }
    enforce_absorbing(scores, categories);
    return scores;
}

Trajectory gen_trajectory_eq1(const ScenarioParams& params, Arm arm, const CounterStream& stream,
                              std::string subject_id) {
    if (params.lagged) throw InvalidArgument("gen_trajectory_eq1 requires a non-lagged scenario");
    const auto draws = draw_subject(params, stream);
    return Trajectory(std::move(subject_id), arm,
                      discretize_path(latent_path(params, arm, draws), params.categories),
                      params.categories);
}

Trajectory gen_trajectory_lagged(const ScenarioParams& params, Arm arm,
                                 const CounterStream& stream, std::string subject_id) {
    if (!params.lagged) throw InvalidArgument("gen_trajectory_lagged requires a lagged scenario");
    const auto draws = draw_subject(params, stream);
    return Trajectory(std::move(subject_id), arm,
                      discretize_path(latent_path(params, arm, draws), params.categories),
                      params.categories);
}

TrialDataset gen_trial_eq1(const ScenarioParams& params, std::uint64_t master_seed,
                           std::uint32_t replicate) {
    params.validate();
    TrialDataset out;
    out.horizon_days = params.horizon_days;
    out.categories = params.categories;
    out.recovery_threshold = params.recovery_threshold;
    const auto n = static_cast<std::uint32_t>(params.n_per_arm);
    out.trajectories.reserve(2 * static_cast<std::size_t>(n));
    for (std::uint32_t i = 0; i < 2 * n; ++i) {
        const Arm arm = i < n ? Arm::control : Arm::treatment;
        const CounterStream stream(master_seed, replicate, i);
        const auto draws = draw_subject(params, stream);
        out.trajectories.emplace_back(
            subject_name(i), arm,
            discretize_path(latent_path(params, arm, draws), params.categories), params.categories);
    }
    return out;
}

std::vector<double> po_shift(std::span<const double> probs, double odds_ratio) {
    if (!(odds_ratio > 0.0) || !std::isfinite(odds_ratio)) {
        throw InvalidArgument("odds ratio must be positive and finite");
    }
    if (probs.empty()) throw InvalidArgument("probability vector is empty");
    double total = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw InvalidArgument("probabilities must be non-negative");
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw InvalidArgument("probabilities must sum to 1");

    std::vector<double> out(probs.size());
    double cum = 0.0;
    double prev_shifted = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        cum += probs[k];
        double shifted = 1.0;
        if (k + 1 < probs.size()) {
            const double c = std::min(cum, 1.0);
            shifted = odds_ratio * c / (1.0 + (odds_ratio - 1.0) * c);
        }
        out[k] = std::max(shifted - prev_shifted, 0.0);
        prev_shifted = shifted;
    }
    return out;
}

void POScenarioParams::validate() const {
    require(categories >= 2 && categories <= 100, "categories must lie in [2, 100]");
    require(static_cast<int>(baseline_probs.size()) == categories,
            "baseline_probs must have one entry per category");
    double total = 0.0;
    for (double p : baseline_probs) {
        require(p >= 0.0, "baseline probabilities must be non-negative");
        total += p;
    }
    require(std::fabs(total - 1.0) <= 1e-12, "baseline probabilities must sum to 1 within 1e-12");
    require(horizon_days >= 1, "horizon must be at least one day");
    require(n_per_arm >= 1, "n_per_arm must be positive");
    require(reference_size >= 1000, "reference sample must have at least 1000 subjects");
    require(recovery_threshold >= 1 && recovery_threshold < categories,
            "recovery threshold must lie in [1, K-1]");
    for (const auto& [day, ratio] : or_schedule) {
        require(day >= 1, "odds-ratio schedule days must be positive");
        require(ratio > 0.0 && std::isfinite(ratio), "odds ratios must be positive");
    }
    if (or_schedule.empty() || or_schedule.begin()->first != 1) {
        throw ConfigError("odds-ratio schedule must start at day 1");
    }
    ScenarioParams dyn = shared_dynamics;
    dyn.horizon_days = horizon_days;
    dyn.categories = categories;
    dyn.recovery_threshold = recovery_threshold;
    dyn.n_per_arm = n_per_arm;
    dyn.lagged = false;
    dyn.validate();
}

double POScenarioParams::odds_ratio_on(int day) const {
    auto it = or_schedule.upper_bound(day);
    if (it == or_schedule.begin()) {
        throw ConfigError("odds-ratio schedule does not cover day " + std::to_string(day));
    }
    return std::prev(it)->second;
}

POTrialGenerator::POTrialGenerator(POScenarioParams params) : params_(std::move(params)) {
    params_.validate();
    params_.shared_dynamics.horizon_days = params_.horizon_days;
    params_.shared_dynamics.categories = params_.categories;
    params_.shared_dynamics.lagged = false;

    const auto horizon = static_cast<std::size_t>(params_.horizon_days);
    const auto k_count = static_cast<std::size_t>(params_.categories);
    std::vector<std::vector<double>> counts(horizon, std::vector<double>(k_count, 0.0));
    for (int i = 0; i < params_.reference_size; ++i) {
        const CounterStream stream(params_.reference_seed, 0, static_cast<std::uint32_t>(i),
                                   StreamPurpose::po_reference);
        const auto scores = control_law_scores(stream);
        for (std::size_t d = 0; d < horizon; ++d) counts[d][static_cast<std::size_t>(scores[d] - 1)] += 1;
    }
    control_cdf_.resize(horizon);
    treatment_cdf_.resize(horizon);
    for (std::size_t d = 0; d < horizon; ++d) {
        std::vector<double> probs(k_count);
        for (std::size_t k = 0; k < k_count; ++k) probs[k] = counts[d][k] / params_.reference_size;
        const auto shifted = po_shift(probs, params_.odds_ratio_on(static_cast<int>(d) + 1));
        control_cdf_[d].resize(k_count);
        treatment_cdf_[d].resize(k_count);
        std::partial_sum(probs.begin(), probs.end(), control_cdf_[d].begin());
        std::partial_sum(shifted.begin(), shifted.end(), treatment_cdf_[d].begin());
        control_cdf_[d].back() = 1.0;
        treatment_cdf_[d].back() = 1.0;
    }
}

std::vector<int> POTrialGenerator::control_law_scores(const CounterStream& stream) const {
    const auto& dyn = params_.shared_dynamics;
    const auto draws = draw_subject(dyn, stream);

    const double u = stream.uniform(kSlotBaseline);
    int baseline = params_.categories;
    double cum = 0.0;
    for (int k = 1; k <= params_.categories; ++k) {
        cum += params_.baseline_probs[static_cast<std::size_t>(k - 1)];
        if (u < cum) {
            baseline = k;
            break;
        }
    }
    const double level = baseline + stream.uniform(kSlotBaselinePosition);
    const double slope = dyn.fixed_slope + draws.control_law_slope;

    std::vector<double> y(static_cast<std::size_t>(params_.horizon_days));
    for (int d = 1; d <= params_.horizon_days; ++d) {
        double v = level + slope * std::log(static_cast<double>(d));
        if (!draws.residuals.empty()) {
            v += dyn.noise_multiplier * draws.residuals[static_cast<std::size_t>(d - 1)];
        }
        y[static_cast<std::size_t>(d - 1)] = v;
    }
    return discretize_path(y, params_.categories);
}

std::vector<int> POTrialGenerator::quantile_map(std::span<const int> control_scores,
                                                double latent) const {
    std::vector<int> out(control_scores.size());
    for (std::size_t d = 0; d < control_scores.size(); ++d) {
        const auto& f = control_cdf_[d];
        const auto& g = treatment_cdf_[d];
        const auto k = static_cast<std::size_t>(control_scores[d] - 1);
        const double lo = k == 0 ? 0.0 : f[k - 1];
        const double rank = lo + latent * (f[k] - lo);
        const auto it = std::lower_bound(g.begin(), g.end(), rank);
        out[d] = static_cast<int>(std::min<std::ptrdiff_t>(it - g.begin(), params_.categories - 1)) + 1;
    }
    return out;
}

std::vector<int> POTrialGenerator::to_treatment(std::span<const int> control_scores,
                                                double latent) const {
    auto out = quantile_map(control_scores, latent);
    enforce_absorbing(out, params_.categories);
    return out;
}

std::span<const double> POTrialGenerator::reference_cdf(int day) const {
    return control_cdf_.at(static_cast<std::size_t>(day - 1));
}

std::span<const double> POTrialGenerator::treatment_cdf(int day) const {
    return treatment_cdf_.at(static_cast<std::size_t>(day - 1));
}

TrialDataset POTrialGenerator::generate(std::uint64_t master_seed, std::uint32_t replicate) const {
    TrialDataset out;
    out.horizon_days = params_.horizon_days;
    out.categories = params_.categories;
    out.recovery_threshold = params_.recovery_threshold;
    const auto n = static_cast<std::uint32_t>(params_.n_per_arm);
    out.trajectories.reserve(2 * static_cast<std::size_t>(n));
    for (std::uint32_t i = 0; i < 2 * n; ++i) {
        const CounterStream stream(master_seed, replicate, i);
        auto scores = control_law_scores(stream);
        if (i < n) {
            out.trajectories.emplace_back(subject_name(i), Arm::control, scores, params_.categories);
        } else {
            out.trajectories.emplace_back(subject_name(i), Arm::treatment,
                                          to_treatment(scores, stream.uniform(kSlotLatentRank)),
                                          params_.categories);
        }
    }
    return out;
}

TrialDataset gen_trial_po(const POScenarioParams& params, std::uint64_t master_seed,
                          std::uint32_t replicate) {
    return POTrialGenerator(params).generate(master_seed, replicate);
}

}  // namespace trialpower
