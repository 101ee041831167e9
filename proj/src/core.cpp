#include "trialpower/core.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "trialpower/error.hpp"

namespace trialpower {

namespace {

void check_categories(int categories) {
    if (categories < 2 || categories > 100) {
        throw InvalidArgument("scale must have between 2 and 100 categories, got " +
                              std::to_string(categories));
    }
}

std::int8_t checked_score(int score, int categories, const std::string& id, std::size_t day) {
    if (score < 1 || score > categories) {
        throw InvalidArgument("subject " + id + " day " + std::to_string(day) + ": score " +
                              std::to_string(score) + " outside [1, " +
                              std::to_string(categories) + "]");
    }
    return static_cast<std::int8_t>(score);
}

}  // namespace

Trajectory::Trajectory(std::string subject_id, Arm arm, const std::vector<int>& scores,
                       int categories)
    : subject_id_(std::move(subject_id)),
      arm_(arm),
      categories_(categories),
      followup_days_(static_cast<int>(scores.size())) {
    check_categories(categories);
    if (scores.empty()) throw InvalidArgument("trajectory needs a positive horizon");
    scores_.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores_.push_back(checked_score(scores[i], categories, subject_id_, i + 1));
    }
}

Trajectory::Trajectory(std::string subject_id, Arm arm,
                       const std::vector<std::optional<int>>& scores, int categories)
    : subject_id_(std::move(subject_id)),
      arm_(arm),
      categories_(categories),
      followup_days_(static_cast<int>(scores.size())) {
    check_categories(categories);
    if (scores.empty()) throw InvalidArgument("trajectory needs a positive horizon");
    scores_.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores_.push_back(scores[i] ? checked_score(*scores[i], categories, subject_id_, i + 1)
                                    : std::int8_t{0});
    }
}

std::optional<int> Trajectory::first_observed_day() const {
    for (int d = 1; d <= followup_days_; ++d) {
        if (observed(d)) return d;
    }
    return std::nullopt;
}

std::optional<int> Trajectory::death_day() const {
    for (int d = 1; d <= followup_days_; ++d) {
        if (scores_[static_cast<std::size_t>(d - 1)] == categories_) return d;
    }
    return std::nullopt;
}

int Trajectory::last_observed_day() const {
    if (death_day()) return followup_days_;
    for (int d = followup_days_; d >= 1; --d) {
        if (observed(d)) return scores_[static_cast<std::size_t>(d - 1)] == 1 ? followup_days_ : d;
    }
    return 0;
}

int Trajectory::observation_count() const {
    return static_cast<int>(
        std::count_if(scores_.begin(), scores_.begin() + followup_days_,
                      [](std::int8_t s) { return s != 0; }));
}

bool Trajectory::has_absorbing_violation(int recovery_threshold) const {
    bool recovered = false;
    bool dead = false;
    for (int d = 1; d <= followup_days_; ++d) {
        const int s = scores_[static_cast<std::size_t>(d - 1)];
        if (s == 0) continue;
        if (dead && s != categories_) return true;
        if (recovered && s > recovery_threshold) return true;
        recovered = recovered || s <= recovery_threshold;
        dead = dead || s == categories_;
    }
    return false;
}

Trajectory Trajectory::truncated(int days) const {
    Trajectory out = *this;
    out.followup_days_ = std::clamp(days, 0, horizon_days());
    for (std::size_t i = static_cast<std::size_t>(out.followup_days_); i < out.scores_.size(); ++i) {
        out.scores_[i] = 0;
    }
    return out;
}

Trajectory Trajectory::with_id(std::string subject_id) const {
    Trajectory out = *this;
    out.subject_id_ = std::move(subject_id);
    return out;
}

std::size_t TrialDataset::arm_size(Arm arm) const {
    return static_cast<std::size_t>(std::count_if(
        trajectories.begin(), trajectories.end(), [arm](const Trajectory& t) { return t.arm() == arm; }));
}

void TrialDataset::validate() const {
    check_categories(categories);
    if (horizon_days < 1) throw InvalidArgument("horizon must be at least one day");
    if (recovery_threshold < 1 || recovery_threshold > categories - 1) {
        throw InvalidArgument("recovery threshold must lie in [1, K-1]");
    }
    for (const auto& t : trajectories) {
        if (t.categories() != categories || t.horizon_days() != horizon_days) {
            throw InvalidArgument("subject " + t.subject_id() +
                                  " does not share the dataset's scale or horizon");
        }
    }
}

void TrialDataset::require_both_arms() const {
    validate();
    if (arm_size(Arm::control) == 0 || arm_size(Arm::treatment) == 0) {
        throw DegenerateInput("both arms must contain at least one subject");
    }
}

std::optional<int> score_at_day(const Trajectory& traj, int day) {
    if (day < 1 || day > traj.horizon_days()) {
        throw InvalidArgument("day " + std::to_string(day) + " outside [1, " +
                              std::to_string(traj.horizon_days()) + "]");
    }
    return traj.at(day);
}

double mean_score(const Trajectory& traj, int through_day) {
    if (through_day < 1 || through_day > traj.horizon_days()) {
        throw InvalidArgument("through_day " + std::to_string(through_day) + " outside horizon");
    }
    const int last = std::min(through_day, traj.followup_days());
    int n = 0;
    long sum = 0;
    for (int d = 1; d <= last; ++d) {
        if (auto s = traj.at(d)) {
            sum += *s;
            ++n;
        }
    }
    if (n == 0) {
        throw UndefinedValue("subject " + traj.subject_id() + " has no scores through day " +
                             std::to_string(through_day));
    }
    return static_cast<double>(sum) / n;
}

namespace {

// First observed day whose score satisfies `hit`, unless the subject dies.
template <typename Pred>
SurvivalObservation first_good_event(const Trajectory& traj, Pred hit) {
    const int last = traj.last_observed_day();
    if (last == 0) throw UndefinedValue("subject " + traj.subject_id() + " has no observations");
    if (traj.death_day()) return {last, false};
    for (int d = 1; d <= traj.followup_days(); ++d) {
        auto s = traj.at(d);
        if (s && hit(*s)) return {d, true};
    }
    return {last, false};
}

}  // namespace

SurvivalObservation time_to_recovery(const Trajectory& traj, int threshold) {
    if (threshold < 1 || threshold > traj.categories() - 1) {
        throw InvalidArgument("recovery threshold must lie in [1, K-1]");
    }
    return first_good_event(traj, [threshold](int s) { return s <= threshold; });
}

SurvivalObservation time_to_improvement(const Trajectory& traj, int k_points) {
    if (k_points < 1) throw InvalidArgument("improvement needs k_points >= 1");
    const auto first = traj.first_observed_day();
    if (!first) throw UndefinedValue("subject " + traj.subject_id() + " has no baseline score");
    const int target = std::max(*traj.at(*first) - k_points, 1);
    return first_good_event(traj, [target](int s) { return s <= target; });
}

SurvivalObservation time_to_death(const Trajectory& traj) {
    if (auto d = traj.death_day()) return {*d, true};
    const int last = traj.last_observed_day();
    if (last == 0) throw UndefinedValue("subject " + traj.subject_id() + " has no observations");
    return {last, false};
}

MortalityTable mortality_by_day(const TrialDataset& dataset, int day) {
    if (day < 1 || day > dataset.horizon_days) {
        throw InvalidArgument("mortality day outside horizon");
    }
    MortalityTable table;
    for (const auto& t : dataset.trajectories) {
        const auto d = t.death_day();
        const int a = arm_index(t.arm());
        if (d && *d <= day) {
            ++table.died[a];
        } else {
            ++table.alive[a];
        }
    }
    return table;
}

}  // namespace trialpower
