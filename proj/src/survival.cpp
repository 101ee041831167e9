#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "trialpower/distributions.hpp"
#include "trialpower/error.hpp"
#include "trialpower/inference.hpp"

namespace trialpower {

int EventTable::total_events() const { return events(Arm::treatment) + events(Arm::control); }

int EventTable::events(Arm arm) const {
    const auto& v = arm == Arm::treatment ? events_treatment : events_control;
    return std::accumulate(v.begin(), v.end(), 0);
}

EventTable tabulate_events(std::span<const SurvivalObservation> treatment,
                           std::span<const SurvivalObservation> control) {
    // (time, arm, event)
    std::vector<std::tuple<int, int, bool>> entries;
    entries.reserve(treatment.size() + control.size());
    for (const auto& o : treatment) entries.emplace_back(o.time, 1, o.event);
    for (const auto& o : control) entries.emplace_back(o.time, 0, o.event);
    std::sort(entries.begin(), entries.end());

    EventTable table;
    int risk[2] = {0, 0};
    std::size_t end = entries.size();
    while (end > 0) {
        const int t = std::get<0>(entries[end - 1]);
        int events[2] = {0, 0};
        std::size_t begin = end;
        while (begin > 0 && std::get<0>(entries[begin - 1]) == t) {
            --begin;
            const auto& [time, arm, event] = entries[begin];
            ++risk[arm];
            if (event) ++events[arm];
        }
        if (events[0] + events[1] > 0) {
            table.times.push_back(t);
            table.events_treatment.push_back(events[1]);
            table.events_control.push_back(events[0]);
            table.at_risk_treatment.push_back(risk[1]);
            table.at_risk_control.push_back(risk[0]);
        }
        end = begin;
    }
    std::reverse(table.times.begin(), table.times.end());
    std::reverse(table.events_treatment.begin(), table.events_treatment.end());
    std::reverse(table.events_control.begin(), table.events_control.end());
    std::reverse(table.at_risk_treatment.begin(), table.at_risk_treatment.end());
    std::reverse(table.at_risk_control.begin(), table.at_risk_control.end());
    return table;
}

LogRankLedger log_rank_ledger(const EventTable& table) {
    LogRankLedger ledger;
    for (std::size_t i = 0; i < table.times.size(); ++i) {
        const double n1 = table.at_risk_treatment[i];
        const double n = n1 + table.at_risk_control[i];
        const double d1 = table.events_treatment[i];
        const double d = d1 + table.events_control[i];
        ledger.observed_minus_expected += d1 - d * n1 / n;
        if (n > 1) ledger.variance += d * (n1 / n) * (1.0 - n1 / n) * (n - d) / (n - 1.0);
        ledger.events += static_cast<int>(d);
    }
    return ledger;
}

TestResult log_rank(std::span<const SurvivalObservation> treatment,
                    std::span<const SurvivalObservation> control) {
    const auto ledger = log_rank_ledger(tabulate_events(treatment, control));
    if (ledger.events == 0) throw UndefinedValue("log-rank test needs at least one event");
    TestResult result;
    result.method = "log_rank";
    result.n_used = static_cast<int>(treatment.size() + control.size());
    if (!(ledger.variance > 0.0)) {
        result.statistic = 0.0;
        result.p_value = 1.0;
        result.diagnostic = "zero variance";
        return result;
    }
    const double z = ledger.observed_minus_expected / std::sqrt(ledger.variance);
    const double log_hr = ledger.observed_minus_expected / ledger.variance;
    const double se = 1.0 / std::sqrt(ledger.variance);
    result.statistic = z * z;
    result.p_value = two_sided_normal_p(z);
    result.estimate = std::exp(log_hr);
    result.ci_low = std::exp(log_hr - kZ975 * se);
    result.ci_high = std::exp(log_hr + kZ975 * se);
    return result;
}

CoxPartialLikelihood::CoxPartialLikelihood(EventTable table, CoxTies ties)
    : table_(std::move(table)), ties_(ties) {}

CoxPartialLikelihood::Terms CoxPartialLikelihood::evaluate(double beta) const {
    const double r = std::exp(beta);
    Terms t{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < table_.times.size(); ++i) {
        const double n1 = table_.at_risk_treatment[i];
        const double n0 = table_.at_risk_control[i];
        const int d1 = table_.events_treatment[i];
        const int d = d1 + table_.events_control[i];
        const double s0 = n0 + n1 * r;
        const double s1 = n1 * r;  // binary covariate: first and second moments coincide
        const double e0 = (d - d1) + d1 * r;
        const double e1 = d1 * r;
        t.loglik += d1 * beta;
        t.score += d1;
        if (ties_ == CoxTies::breslow) {
            const double m = s1 / s0;
            t.loglik -= d * std::log(s0);
            t.score -= d * m;
            t.information += d * (m - m * m);
            continue;
        }
        for (int l = 0; l < d; ++l) {
            const double f = static_cast<double>(l) / d;
            const double den = s0 - f * e0;
            const double m = (s1 - f * e1) / den;
            t.loglik -= std::log(den);
            t.score -= m;
            t.information += m - m * m;
        }
    }
    return t;
}

double CoxPartialLikelihood::log_likelihood(double beta) const { return evaluate(beta).loglik; }
double CoxPartialLikelihood::score(double beta) const { return evaluate(beta).score; }
double CoxPartialLikelihood::information(double beta) const { return evaluate(beta).information; }

TestResult cox_fit(std::span<const SurvivalObservation> treatment,
                   std::span<const SurvivalObservation> control, CoxFitOptions options) {
    TestResult result;
    result.method = "cox";
    result.n_used = static_cast<int>(treatment.size() + control.size());
    EventTable table = tabulate_events(treatment, control);
    const int events_t = table.events(Arm::treatment);
    const int events_c = table.events(Arm::control);
    if (events_t == 0 || events_c == 0) {
        result.converged = false;
        result.estimate = events_t == 0 && events_c == 0 ? kNaN
                          : events_t == 0              ? 0.0
                                                       : std::numeric_limits<double>::infinity();
        result.diagnostic = events_t == 0 && events_c == 0
                                ? "no events"
                                : std::string("infinite estimate: no events in ") +
                                      (events_t == 0 ? "treatment" : "control") + " arm";
        return result;
    }

    const CoxPartialLikelihood lik(std::move(table), options.ties);
    double beta = 0.0;
    bool converged = false;
    for (int iter = 0; iter <= options.max_iterations; ++iter) {
        const double score = lik.score(beta);
        if (std::fabs(score) < options.tolerance) {
            converged = true;
            break;
        }
        const double info = lik.information(beta);
        if (iter == options.max_iterations || !(info > 0.0) || std::fabs(beta) > 20.0) break;
        double step = std::clamp(score / info, -5.0, 5.0);
        const double ll = lik.log_likelihood(beta);
        for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
            if (lik.log_likelihood(beta + step) >= ll - 1e-12 * (1.0 + std::fabs(ll))) break;
        }
        beta += step;
    }
    if (!converged || std::fabs(beta) > 20.0) {
        result.converged = false;
        result.estimate = std::exp(beta);
        result.diagnostic = "monotone partial likelihood: no finite maximum";
        return result;
    }
    const double se = 1.0 / std::sqrt(lik.information(beta));
    result.estimate = std::exp(beta);
    result.ci_low = std::exp(beta - kZ975 * se);
    result.ci_high = std::exp(beta + kZ975 * se);
    result.statistic = beta / se;
    result.p_value = two_sided_normal_p(result.statistic);
    return result;
}

SampleSize schoenfeld_sample_size(double hazard_ratio, double alpha, double power,
                                  double event_probability, double allocation_ratio) {
    if (!(hazard_ratio > 0.0) || hazard_ratio == 1.0 || !std::isfinite(hazard_ratio)) {
        throw InvalidArgument("hazard ratio must be positive and different from 1");
    }
    if (!(alpha > 0.0 && alpha < 1.0) || !(power > 0.0 && power < 1.0)) {
        throw InvalidArgument("alpha and power must lie in (0, 1)");
    }
    if (!(event_probability > 0.0 && event_probability <= 1.0)) {
        throw InvalidArgument("event probability must lie in (0, 1]");
    }
    if (!(allocation_ratio > 0.0)) throw InvalidArgument("allocation ratio must be positive");
    const double p1 = allocation_ratio / (1.0 + allocation_ratio);
    const double p2 = 1.0 - p1;
    const double z = normal_quantile(1.0 - alpha / 2.0) + normal_quantile(power);
    const double log_hr = std::log(hazard_ratio);
    const double events = z * z / (p1 * p2 * log_hr * log_hr);
    SampleSize out;
    // Tolerance keeps exact integers from being bumped up by rounding noise.
    out.events_required = static_cast<int>(std::ceil(events - 1e-9));
    out.total_n = static_cast<int>(std::ceil(out.events_required / event_probability - 1e-9));
    return out;
}

}  // namespace trialpower
