#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace trialpower {

inline constexpr int kDefaultCategories = 7;
inline constexpr int kDefaultHorizonDays = 28;

enum class Arm : std::uint8_t { control = 0, treatment = 1 };

inline int arm_index(Arm arm) { return static_cast<int>(arm); }

/// One subject's daily scores on a 1..K ordinal scale (1 = recovered,
/// K = death) over days 1..D. Days may be missing for ingested data.
///
/// Absorbing states are treated as observed through the end of follow-up: a
/// subject who reaches K, or whose last recorded score is 1, has
/// last_observed_day() == followup_days() even when no later rows exist. Absorbing states are not enforced here, since real data may
/// relapse; the simulators guarantee them.
class Trajectory {
public:
    /// Complete grid: scores[d-1] is the score at day d, D = scores.size().
    Trajectory(std::string subject_id, Arm arm, const std::vector<int>& scores,
               int categories = kDefaultCategories);

    /// Grid with gaps; scores.size() is the horizon D.
    Trajectory(std::string subject_id, Arm arm,
               const std::vector<std::optional<int>>& scores,
               int categories = kDefaultCategories);

    const std::string& subject_id() const { return subject_id_; }
    Arm arm() const { return arm_; }
    int categories() const { return categories_; }
    int horizon_days() const { return static_cast<int>(scores_.size()); }

    /// Administrative end of follow-up (== horizon unless truncated).
    int followup_days() const { return followup_days_; }

    /// Unchecked lookup, day in [1, horizon].
    std::optional<int> at(int day) const {
        const int s = scores_[static_cast<std::size_t>(day - 1)];
        if (s == 0) return std::nullopt;
        return s;
    }

    bool observed(int day) const { return scores_[static_cast<std::size_t>(day - 1)] != 0; }

    std::optional<int> first_observed_day() const;
    int last_observed_day() const;
    std::optional<int> death_day() const;
    int observation_count() const;

    /// True if the score rises after first reaching `recovery_threshold` or
    /// below, or the subject leaves K after dying.
    bool has_absorbing_violation(int recovery_threshold = 1) const;

    /// Copy with observations after `days` removed and follow-up ending there.
    Trajectory truncated(int days) const;

    /// Copy carrying a new identifier.
    Trajectory with_id(std::string subject_id) const;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;

private:
    Trajectory() = default;

    std::string subject_id_;
    Arm arm_ = Arm::control;
    int categories_ = kDefaultCategories;
    int followup_days_ = 0;
    std::vector<std::int8_t> scores_;  // 0 = not observed
};

struct TrialDataset {
    std::vector<Trajectory> trajectories;
    int horizon_days = kDefaultHorizonDays;
    int categories = kDefaultCategories;
    int recovery_threshold = 1;

    std::size_t arm_size(Arm arm) const;

    /// Checks shared K/D and threshold range. Throws InvalidArgument.
    void validate() const;

    /// validate() plus both arms non-empty. Throws DegenerateInput.
    void require_both_arms() const;
};

struct SurvivalObservation {
    int time = 0;
    bool event = false;

    friend bool operator==(const SurvivalObservation&, const SurvivalObservation&) = default;
};

/// Day d in [1, D] or InvalidArgument.
std::optional<int> score_at_day(const Trajectory& traj, int day);

/// Mean of observed scores on days 1..through_day.
double mean_score(const Trajectory& traj, int through_day);

/// First day with score <= threshold. Subjects who die at any point are
/// never recovered and are censored at their last observation day.
SurvivalObservation time_to_recovery(const Trajectory& traj, int threshold);

/// First day with score <= baseline - k_points (reaching 1 always counts),
/// baseline being the earliest observed score. Deaths censored as above.
SurvivalObservation time_to_improvement(const Trajectory& traj, int k_points);

SurvivalObservation time_to_death(const Trajectory& traj);

/// died[arm] / alive[arm], indexed by arm_index().
struct MortalityTable {
    int died[2] = {0, 0};
    int alive[2] = {0, 0};

    int total(Arm arm) const { return died[arm_index(arm)] + alive[arm_index(arm)]; }
};

MortalityTable mortality_by_day(const TrialDataset& dataset, int day);

}  // namespace trialpower
