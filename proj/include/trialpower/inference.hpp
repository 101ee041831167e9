#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trialpower/core.hpp"

namespace trialpower {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Outcome of one test. Estimates are oriented treatment vs control: odds
/// ratio of a better category, treatment-minus-control differences, and
/// treatment/control rate or hazard ratios.
struct TestResult {
    std::string method;
    double estimate = kNaN;
    double ci_low = kNaN;
    double ci_high = kNaN;
    double statistic = kNaN;
    double p_value = 1.0;
    int n_used = 0;
    std::optional<int> day;
    /// false when the estimator did not reach a finite optimum.
    bool converged = true;
    std::string diagnostic;
    /// Set when p_value comes from a companion test (e.g. log-rank p next to
    /// a Cox estimate); holds the estimator's own Wald p-value.
    std::optional<double> wald_p_value;
};

// --- proportional odds -----------------------------------------------------

/// Cumulative-logit likelihood for two groups over K' ordered categories:
/// logit P(Y <= j | z) = alpha_j + beta * z, z = 1 for treatment.
/// Parameter vector is (alpha_1, ..., alpha_{K'-1}, beta).
class ProportionalOddsLikelihood {
public:
    ProportionalOddsLikelihood(std::vector<double> treatment_counts,
                               std::vector<double> control_counts);

    int categories() const { return static_cast<int>(treatment_.size()); }
    int parameter_count() const { return categories(); }

    double log_likelihood(const Eigen::VectorXd& theta) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
    Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const;

    /// Pooled cumulative logits and beta = 0.
    Eigen::VectorXd initial_point() const;

private:
    std::vector<double> treatment_;
    std::vector<double> control_;
};

struct POFitOptions {
    double tolerance = 1e-8;
    int max_iterations = 100;
};

/// Maximum-likelihood proportional odds fit with a treatment indicator.
/// Empty categories are collapsed. Throws DegenerateInput when fewer than two
/// categories are observed or an arm is empty; separation is reported as
/// converged == false.
TestResult fit_proportional_odds(std::span<const int> treatment_scores,
                                 std::span<const int> control_scores, POFitOptions options = {});

// --- two-sample location tests --------------------------------------------

/// Mid-ranks; normal approximation with tie-corrected variance when both
/// samples have at least `exact_below` values, exact permutation
/// distribution otherwise. statistic is the standardized rank sum of x.
TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y,
                             int exact_below = 10);

/// Exact two-sided p-value of the rank-sum of x under all C(N, n_x)
/// equally likely allocations, ties handled by mid-ranks.
double wilcoxon_exact_p(std::span<const double> x, std::span<const double> y);

/// Welch by default; pooled-variance Student test when `pooled`.
TestResult t_test(std::span<const double> x, std::span<const double> y, bool pooled = false);

// --- proportions ---------------------------------------------------------

/// Pooled z test of events_t/n_t vs events_c/n_c; estimate is the risk
/// difference with an unpooled Wald interval.
TestResult two_proportion_test(int events_t, int n_t, int events_c, int n_c);

/// Two-sided Fisher exact test of [[a, b], [c, d]] (rows = arms).
/// Estimate is the sample odds ratio ad/bc.
TestResult fisher_exact(int a, int b, int c, int d);

// --- survival -------------------------------------------------------------

/// Risk-set summary at each distinct event time. Observations censored at
/// t are still at risk at t.
struct EventTable {
    std::vector<int> times;
    std::vector<int> events_treatment;
    std::vector<int> events_control;
    std::vector<int> at_risk_treatment;
    std::vector<int> at_risk_control;

    int total_events() const;
    int events(Arm arm) const;
};

EventTable tabulate_events(std::span<const SurvivalObservation> treatment,
                           std::span<const SurvivalObservation> control);

struct LogRankLedger {
    double observed_minus_expected = 0.0;  // treatment arm
    double variance = 0.0;
    int events = 0;
};

LogRankLedger log_rank_ledger(const EventTable& table);

/// Two-group log-rank test; statistic is the 1-df chi-square. estimate is the
/// one-step (Peto) hazard ratio exp((O-E)/V). Throws UndefinedValue when
/// there are no events.
TestResult log_rank(std::span<const SurvivalObservation> treatment,
                    std::span<const SurvivalObservation> control);

enum class CoxTies { efron, breslow };

/// Partial likelihood for a single binary treatment covariate.
class CoxPartialLikelihood {
public:
    CoxPartialLikelihood(EventTable table, CoxTies ties = CoxTies::efron);

    double log_likelihood(double beta) const;
    double score(double beta) const;
    double information(double beta) const;

    const EventTable& table() const { return table_; }

private:
    struct Terms {
        double loglik;
        double score;
        double information;
    };
    Terms evaluate(double beta) const;

    EventTable table_;
    CoxTies ties_;
};

struct CoxFitOptions {
    CoxTies ties = CoxTies::efron;
    double tolerance = 1e-8;
    int max_iterations = 50;
};

/// Newton-Raphson partial-likelihood fit. estimate = exp(beta), treatment vs
/// control; a rate ratio when the event is good, a hazard ratio for death.
TestResult cox_fit(std::span<const SurvivalObservation> treatment,
                   std::span<const SurvivalObservation> control, CoxFitOptions options = {});

// --- design ---------------------------------------------------------------

struct SampleSize {
    int events_required = 0;
    int total_n = 0;
};

/// Schoenfeld events for a two-sided level-alpha log-rank test;
/// allocation_ratio is treatment:control.
SampleSize schoenfeld_sample_size(double hazard_ratio, double alpha, double power,
                                  double event_probability, double allocation_ratio = 1.0);

}  // namespace trialpower
