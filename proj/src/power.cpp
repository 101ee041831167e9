#include "trialpower/power.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <thread>

#include "trialpower/error.hpp"

namespace trialpower {

namespace {

struct MethodName {
    MethodKind kind;
    std::string_view name;
};

constexpr MethodName kMethodNames[] = {
    {MethodKind::prop_odds, "prop_odds"},
    {MethodKind::t_test, "t_test"},
    {MethodKind::wilcoxon_mean_score, "wilcoxon_mean_score"},
    {MethodKind::two_proportion_mortality, "two_proportion_mortality"},
    {MethodKind::fisher_mortality, "fisher_mortality"},
    {MethodKind::log_rank_recovery, "log_rank_recovery"},
    {MethodKind::log_rank_improvement, "log_rank_improvement"},
    {MethodKind::cox_recovery, "cox_recovery"},
    {MethodKind::cox_improvement, "cox_improvement"},
    {MethodKind::cox_death, "cox_death"},
};

std::string_view method_name(MethodKind kind) {
    for (const auto& m : kMethodNames) {
        if (m.kind == kind) return m.name;
    }
    return "unknown";
}

bool uses_k_points(MethodKind kind) {
    return kind == MethodKind::log_rank_improvement || kind == MethodKind::cox_improvement;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

int parse_int(std::string_view s, std::string_view context) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("bad integer '" + std::string(s) + "' in method '" + std::string(context) + "'");
    }
    return value;
}

template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    workers = std::clamp(workers, 1, std::max(count, 1));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count && !failed; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

PowerTable aggregate(std::span<const MethodSpec> methods, const std::vector<Verdict>& verdicts,
                     int n_reps) {
    PowerTable table;
    const std::size_t m = methods.size();
    for (std::size_t j = 0; j < m; ++j) {
        int rejected = 0;
        int degenerate = 0;
        for (int r = 0; r < n_reps; ++r) {
            const Verdict v = verdicts[static_cast<std::size_t>(r) * m + j];
            rejected += v == Verdict::reject;
            degenerate += v == Verdict::degenerate;
        }
        PowerRow row;
        row.method = methods[j];
        row.n_sims = n_reps;
        row.n_degenerate = degenerate;
        row.rejection_rate = static_cast<double>(rejected) / n_reps;
        row.mc_se = std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) / n_reps);
        table.rows.push_back(row);
    }
    return table;
}

std::vector<double> day_scores(const std::vector<const Trajectory*>& arm, int day) {
    std::vector<double> out;
    out.reserve(arm.size());
    for (const auto* t : arm) {
        if (auto s = t->at(day)) out.push_back(*s);
    }
    return out;
}

std::vector<int> day_scores_int(const std::vector<const Trajectory*>& arm, int day) {
    std::vector<int> out;
    out.reserve(arm.size());
    for (const auto* t : arm) {
        if (auto s = t->at(day)) out.push_back(*s);
    }
    return out;
}

std::vector<double> mean_scores(const std::vector<const Trajectory*>& arm, int through_day) {
    std::vector<double> out;
    out.reserve(arm.size());
    for (const auto* t : arm) {
        if (t->observation_count() == 0) continue;
        try {
            out.push_back(mean_score(*t, through_day));
        } catch (const UndefinedValue&) {
        }
    }
    return out;
}

template <typename Rule>
std::vector<SurvivalObservation> endpoint(const std::vector<const Trajectory*>& arm, Rule rule) {
    std::vector<SurvivalObservation> out;
    out.reserve(arm.size());
    for (const auto* t : arm) {
        if (t->last_observed_day() == 0) continue;
        out.push_back(rule(*t));
    }
    return out;
}

int deaths_by(const std::vector<const Trajectory*>& arm, int day) {
    int n = 0;
    for (const auto* t : arm) {
        const auto d = t->death_day();
        n += d && *d <= day;
    }
    return n;
}

}  // namespace

std::string MethodSpec::label() const {
    std::string out(method_name(kind));
    if (day) out += "@" + std::to_string(*day);
    if (uses_k_points(kind)) out += ":" + std::to_string(k_points);
    return out;
}

void MethodSpec::validate() const {
    if (kind == MethodKind::prop_odds && !day) {
        throw ConfigError("prop_odds needs a day, e.g. prop_odds@14");
    }
    if (day && *day < 1) throw ConfigError("method day must be positive");
    if (uses_k_points(kind) && k_points < 1) throw ConfigError("improvement needs k >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

MethodSpec parse_method(std::string_view text, double alpha) {
    const std::string_view original = trim(text);
    std::string_view rest = original;
    MethodSpec spec;
    spec.alpha = alpha;
    std::optional<int> k;
    if (const auto colon = rest.find(':'); colon != std::string_view::npos) {
        k = parse_int(trim(rest.substr(colon + 1)), original);
        rest = rest.substr(0, colon);
    }
    if (const auto at = rest.find('@'); at != std::string_view::npos) {
        spec.day = parse_int(trim(rest.substr(at + 1)), original);
        rest = rest.substr(0, at);
    }
    rest = trim(rest);
    bool found = false;
    for (const auto& m : kMethodNames) {
        if (m.name == rest) {
            spec.kind = m.kind;
            found = true;
        }
    }
    if (!found) throw ConfigError("unknown method '" + std::string(original) + "'");
    if (k) {
        if (!uses_k_points(spec.kind)) {
            throw ConfigError("method '" + std::string(original) + "' does not take :k");
        }
        spec.k_points = *k;
    }
    spec.validate();
    return spec;
}

std::vector<MethodSpec> parse_method_list(std::string_view text, double alpha) {
    std::vector<MethodSpec> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto item = trim(text.substr(0, comma));
        if (!item.empty()) out.push_back(parse_method(item, alpha));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

std::vector<MethodSpec> simulation_battery(double alpha) {
    return parse_method_list(
        "prop_odds@1, prop_odds@7, prop_odds@14, prop_odds@28, wilcoxon_mean_score, "
        "log_rank_improvement:2, log_rank_recovery, cox_death, two_proportion_mortality@28",
        alpha);
}

const PowerRow* PowerTable::find(std::string_view label) const {
    for (const auto& row : rows) {
        if (row.method.label() == label) return &row;
    }
    return nullptr;
}

AnalysisSample full_sample(const TrialDataset& dataset) {
    AnalysisSample sample;
    sample.horizon_days = dataset.horizon_days;
    sample.categories = dataset.categories;
    sample.recovery_threshold = dataset.recovery_threshold;
    for (const auto& t : dataset.trajectories) {
        (t.arm() == Arm::treatment ? sample.treatment : sample.control).push_back(&t);
    }
    return sample;
}

TestResult evaluate_method(const AnalysisSample& sample, const MethodSpec& method) {
    method.validate();
    if (sample.treatment.empty() || sample.control.empty()) {
        throw DegenerateInput("both arms must be non-empty");
    }
    if (method.day && *method.day > sample.horizon_days) {
        throw InvalidArgument("method day " + std::to_string(*method.day) + " beyond horizon");
    }
    const int horizon_or_day = method.day.value_or(sample.horizon_days);
    TestResult result;
    switch (method.kind) {
        case MethodKind::prop_odds:
            result = fit_proportional_odds(day_scores_int(sample.treatment, *method.day),
                                           day_scores_int(sample.control, *method.day));
            break;
        case MethodKind::t_test:
            if (method.day) {
                result = t_test(day_scores(sample.control, *method.day),
                                day_scores(sample.treatment, *method.day));
            } else {
                result = t_test(mean_scores(sample.control, sample.horizon_days),
                                mean_scores(sample.treatment, sample.horizon_days));
            }
            break;
        case MethodKind::wilcoxon_mean_score:
            result = wilcoxon_rank_sum(mean_scores(sample.control, horizon_or_day),
                                       mean_scores(sample.treatment, horizon_or_day));
            break;
        case MethodKind::two_proportion_mortality:
        case MethodKind::fisher_mortality: {
            const int dt = deaths_by(sample.treatment, horizon_or_day);
            const int dc = deaths_by(sample.control, horizon_or_day);
            const int nt = static_cast<int>(sample.treatment.size());
            const int nc = static_cast<int>(sample.control.size());
            result = method.kind == MethodKind::fisher_mortality
                         ? fisher_exact(dt, nt - dt, dc, nc - dc)
                         : two_proportion_test(dt, nt, dc, nc);
            if (dt + dc == 0) {
                result.converged = false;
                result.diagnostic = "no deaths";
            }
            break;
        }
        case MethodKind::log_rank_recovery:
        case MethodKind::cox_recovery: {
            const int thr = sample.recovery_threshold;
            auto rule = [thr](const Trajectory& t) { return time_to_recovery(t, thr); };
            const auto t = endpoint(sample.treatment, rule);
            const auto c = endpoint(sample.control, rule);
            result = method.kind == MethodKind::cox_recovery ? cox_fit(t, c) : log_rank(t, c);
            break;
        }
        case MethodKind::log_rank_improvement:
        case MethodKind::cox_improvement: {
            const int k = method.k_points;
            auto rule = [k](const Trajectory& t) { return time_to_improvement(t, k); };
            const auto t = endpoint(sample.treatment, rule);
            const auto c = endpoint(sample.control, rule);
            result = method.kind == MethodKind::cox_improvement ? cox_fit(t, c) : log_rank(t, c);
            break;
        }
        case MethodKind::cox_death: {
            auto rule = [](const Trajectory& t) { return time_to_death(t); };
            result = cox_fit(endpoint(sample.treatment, rule), endpoint(sample.control, rule));
            break;
        }
    }
    result.method = method.label();
    if (method.kind == MethodKind::prop_odds || method.kind == MethodKind::t_test) {
        result.day = method.day;
    } else if (method.kind == MethodKind::two_proportion_mortality ||
               method.kind == MethodKind::fisher_mortality) {
        result.day = horizon_or_day;
    }
    return result;
}

Verdict test_verdict(const AnalysisSample& sample, const MethodSpec& method) noexcept {
    try {
        const auto r = evaluate_method(sample, method);
        if (!r.converged || std::isnan(r.p_value)) return Verdict::degenerate;
        return r.p_value < method.alpha ? Verdict::reject : Verdict::accept;
    } catch (...) {
        return Verdict::degenerate;
    }
}

PowerTable run_power_study(const Scenario& scenario, std::span<const MethodSpec> methods,
                           int n_sims, std::uint64_t master_seed, int workers) {
    if (n_sims < 1) throw InvalidArgument("n_sims must be at least 1");
    for (const auto& m : methods) m.validate();

    std::optional<POTrialGenerator> po;
    if (const auto* p = std::get_if<POScenarioParams>(&scenario)) {
        po.emplace(*p);
    } else {
        std::get<ScenarioParams>(scenario).validate();
    }

    const std::size_t m = methods.size();
    std::vector<Verdict> verdicts(static_cast<std::size_t>(n_sims) * m);
    parallel_for(n_sims, workers, [&](int r) {
        const auto rep = static_cast<std::uint32_t>(r);
        const TrialDataset data = po ? po->generate(master_seed, rep)
                                     : gen_trial_eq1(std::get<ScenarioParams>(scenario),
                                                     master_seed, rep);
        const AnalysisSample sample = full_sample(data);
        for (std::size_t j = 0; j < m; ++j) {
            verdicts[static_cast<std::size_t>(r) * m + j] = test_verdict(sample, methods[j]);
        }
    });
    return aggregate(methods, verdicts, n_sims);
}

PowerTable resample_power(const TrialDataset& dataset, int n_per_arm, int n_reps,
                          std::span<const MethodSpec> methods, std::uint64_t master_seed,
                          int workers) {
    dataset.require_both_arms();
    if (n_reps < 1) throw InvalidArgument("n_reps must be at least 1");
    if (n_per_arm < 1) throw InvalidArgument("n_per_arm must be at least 1");
    for (const auto& m : methods) m.validate();
    const AnalysisSample all = full_sample(dataset);
    if (static_cast<std::size_t>(n_per_arm) > all.treatment.size() ||
        static_cast<std::size_t>(n_per_arm) > all.control.size()) {
        throw InvalidArgument("n_per_arm exceeds an arm's size");
    }

    const std::size_t m = methods.size();
    std::vector<Verdict> verdicts(static_cast<std::size_t>(n_reps) * m);
    parallel_for(n_reps, workers, [&](int r) {
        CounterStream stream(master_seed, static_cast<std::uint32_t>(r), 0, StreamPurpose::resample);
        AnalysisSample sample;
        sample.horizon_days = all.horizon_days;
        sample.categories = all.categories;
        sample.recovery_threshold = all.recovery_threshold;
        auto draw = [&](std::vector<const Trajectory*> pool, std::vector<const Trajectory*>& out) {
            const auto n = static_cast<std::size_t>(n_per_arm);
            for (std::size_t i = 0; i < n; ++i) {
                const auto j = i + static_cast<std::size_t>(stream.next_below(pool.size() - i));
                std::swap(pool[i], pool[j]);
            }
            out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
        };
        draw(all.treatment, sample.treatment);
        draw(all.control, sample.control);
        for (std::size_t j = 0; j < m; ++j) {
            verdicts[static_cast<std::size_t>(r) * m + j] = test_verdict(sample, methods[j]);
        }
    });
    return aggregate(methods, verdicts, n_reps);
}

TrialDataset augment_dataset(const TrialDataset& dataset, int factor) {
    if (factor < 2) throw InvalidArgument("augmentation factor must be at least 2");
    TrialDataset out = dataset;
    out.trajectories.clear();
    out.trajectories.reserve(dataset.trajectories.size() * static_cast<std::size_t>(factor));
    for (int copy = 1; copy <= factor; ++copy) {
        for (const auto& t : dataset.trajectories) {
            out.trajectories.push_back(t.with_id(t.subject_id() + "#" + std::to_string(copy)));
        }
    }
    return out;
}

InformationSnapshot information_snapshot(const TrialDataset& dataset, int cutoff_calendar_day,
                                         std::span<const int> enrollment_days) {
    if (enrollment_days.size() != dataset.trajectories.size()) {
        throw InvalidArgument("need one enrollment day per subject");
    }
    InformationSnapshot snap;
    for (std::size_t i = 0; i < enrollment_days.size(); ++i) {
        const int entry = enrollment_days[i];
        if (entry < 0) throw InvalidArgument("enrollment days must be non-negative");
        if (entry > cutoff_calendar_day) continue;
        ++snap.n_enrolled;
        const int followup = cutoff_calendar_day - entry;
        const auto& traj = dataset.trajectories[i];
        if (followup >= dataset.horizon_days) ++snap.n_with_full_followup;
        if (followup < 1) continue;
        const Trajectory seen = traj.truncated(followup);
        if (seen.last_observed_day() == 0) continue;
        snap.n_events_observed += time_to_recovery(seen, dataset.recovery_threshold).event;
        snap.n_deaths_observed += time_to_death(seen).event;
    }
    return snap;
}

std::vector<TestResult> analysis_panel(const TrialDataset& dataset, std::span<const int> days) {
    dataset.require_both_arms();
    const AnalysisSample sample = full_sample(dataset);
    std::vector<TestResult> out;

    auto run = [&](const MethodSpec& spec) {
        try {
            return evaluate_method(sample, spec);
        } catch (const std::exception& e) {
            TestResult failed;
            failed.method = spec.label();
            failed.converged = false;
            failed.diagnostic = e.what();
            return failed;
        }
    };

    for (int d : days) {
        if (d < 1 || d > dataset.horizon_days) continue;
        out.push_back(run(parse_method("prop_odds@" + std::to_string(d))));
        out.push_back(run(parse_method("t_test@" + std::to_string(d))));
    }
    out.push_back(run(parse_method("t_test")));
    out.push_back(run(parse_method("wilcoxon_mean_score")));

    // Time-to-event rows: Cox estimate and interval, log-rank p-value.
    const std::pair<const char*, const char*> events[] = {
        {"cox_recovery", "log_rank_recovery"},
        {"cox_improvement:1", "log_rank_improvement:1"},
        {"cox_improvement:2", "log_rank_improvement:2"},
        {"cox_death", nullptr},
    };
    for (const auto& [cox_name, lr_name] : events) {
        TestResult row = run(parse_method(cox_name));
        const char* companion = lr_name ? lr_name : "log_rank_recovery";
        if (!lr_name) {
            // log-rank on death times
            try {
                auto rule = [](const Trajectory& t) { return time_to_death(t); };
                std::vector<SurvivalObservation> t, c;
                for (const auto* p : sample.treatment) t.push_back(rule(*p));
                for (const auto* p : sample.control) c.push_back(rule(*p));
                const auto lr = log_rank(t, c);
                row.wald_p_value = row.p_value;
                row.p_value = lr.p_value;
            } catch (const std::exception&) {
            }
        } else {
            const TestResult lr = run(parse_method(companion));
            if (lr.converged) {
                row.wald_p_value = row.p_value;
                row.p_value = lr.p_value;
            }
        }
        out.push_back(std::move(row));
    }
    out.push_back(run(parse_method("two_proportion_mortality")));
    out.push_back(run(parse_method("fisher_mortality")));
    return out;
}

}  // namespace trialpower
