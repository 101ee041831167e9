#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "trialpower/distributions.hpp"
#include "trialpower/error.hpp"
#include "trialpower/inference.hpp"

namespace trialpower {

namespace {

inline double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Per-cutpoint quantities for one group: cumulative probability F, its
// derivative f and second derivative f' with respect to the linear predictor.
struct Cut {
    double cdf;
    double density;
    double slope;
};

Cut cut_at(double eta) {
    const double p = logistic(eta);
    const double f = p * (1.0 - p);
    return {p, f, f * (1.0 - 2.0 * p)};
}

constexpr double kMinCellProbability = 1e-300;

}  // namespace

ProportionalOddsLikelihood::ProportionalOddsLikelihood(std::vector<double> treatment_counts,
                                                       std::vector<double> control_counts)
    : treatment_(std::move(treatment_counts)), control_(std::move(control_counts)) {
    if (treatment_.size() != control_.size() || treatment_.size() < 2) {
        throw InvalidArgument("proportional odds needs matching count vectors with >= 2 categories");
    }
}

Eigen::VectorXd ProportionalOddsLikelihood::initial_point() const {
    const int k = categories();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(k);
    double total = 0.0;
    for (int j = 0; j < k; ++j) total += treatment_[j] + control_[j];
    double cum = 0.0;
    for (int j = 0; j < k - 1; ++j) {
        cum += treatment_[j] + control_[j];
        const double p = std::clamp(cum / total, 1e-6, 1.0 - 1e-6);
        theta[j] = std::log(p / (1.0 - p));
    }
    // Keep cutpoints strictly increasing when a collapsed category is empty.
    for (int j = 1; j < k - 1; ++j) theta[j] = std::max(theta[j], theta[j - 1] + 1e-3);
    return theta;
}

double ProportionalOddsLikelihood::log_likelihood(const Eigen::VectorXd& theta) const {
    const int k = categories();
    const double beta = theta[k - 1];
    double ll = 0.0;
    for (int z = 0; z < 2; ++z) {
        const auto& counts = z == 1 ? treatment_ : control_;
        double prev = 0.0;
        for (int j = 0; j < k; ++j) {
            const double cdf = j < k - 1 ? logistic(theta[j] + beta * z) : 1.0;
            if (counts[j] > 0) ll += counts[j] * std::log(std::max(cdf - prev, kMinCellProbability));
            prev = cdf;
        }
    }
    return ll;
}

Eigen::VectorXd ProportionalOddsLikelihood::gradient(const Eigen::VectorXd& theta) const {
    const int k = categories();
    const int b = k - 1;
    const double beta = theta[b];
    Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
    for (int z = 0; z < 2; ++z) {
        const auto& counts = z == 1 ? treatment_ : control_;
        Cut lower{0.0, 0.0, 0.0};
        for (int j = 0; j < k; ++j) {
            const Cut upper = j < k - 1 ? cut_at(theta[j] + beta * z) : Cut{1.0, 0.0, 0.0};
            const double n = counts[j];
            if (n > 0) {
                const double pi = std::max(upper.cdf - lower.cdf, kMinCellProbability);
                if (j < k - 1) g[j] += n * upper.density / pi;
                if (j > 0) g[j - 1] -= n * lower.density / pi;
                g[b] += n * z * (upper.density - lower.density) / pi;
            }
            lower = upper;
        }
    }
    return g;
}

Eigen::MatrixXd ProportionalOddsLikelihood::hessian(const Eigen::VectorXd& theta) const {
    const int k = categories();
    const int b = k - 1;
    const double beta = theta[b];
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k, k);
    for (int z = 0; z < 2; ++z) {
        const auto& counts = z == 1 ? treatment_ : control_;
        Cut lower{0.0, 0.0, 0.0};
        for (int j = 0; j < k; ++j) {
            const Cut upper = j < k - 1 ? cut_at(theta[j] + beta * z) : Cut{1.0, 0.0, 0.0};
            const double n = counts[j];
            if (n > 0) {
                const double pi = std::max(upper.cdf - lower.cdf, kMinCellProbability);
                // First derivatives of the cell probability (sparse: hi, lo, beta).
                const double d_hi = upper.density;
                const double d_lo = -lower.density;
                const double d_beta = z * (upper.density - lower.density);
                const bool has_hi = j < k - 1;
                const bool has_lo = j > 0;

                auto add = [&](int r, int c, double second, double first_r, double first_c) {
                    const double v = n * (second / pi - first_r * first_c / (pi * pi));
                    h(r, c) += v;
                    if (r != c) h(c, r) += v;
                };
                if (has_hi) {
                    add(j, j, upper.slope, d_hi, d_hi);
                    add(j, b, z * upper.slope, d_hi, d_beta);
                }
                if (has_lo) {
                    add(j - 1, j - 1, -lower.slope, d_lo, d_lo);
                    add(j - 1, b, -z * lower.slope, d_lo, d_beta);
                }
                if (has_hi && has_lo) add(j, j - 1, 0.0, d_hi, d_lo);
                add(b, b, z * (upper.slope - lower.slope), d_beta, d_beta);
            }
            lower = upper;
        }
    }
    return h;
}

TestResult fit_proportional_odds(std::span<const int> treatment_scores,
                                 std::span<const int> control_scores, POFitOptions options) {
    if (treatment_scores.empty() || control_scores.empty()) {
        throw DegenerateInput("proportional odds needs both arms non-empty");
    }
    std::map<int, int> levels;
    for (int s : treatment_scores) levels.emplace(s, 0);
    for (int s : control_scores) levels.emplace(s, 0);
    if (levels.size() < 2) throw DegenerateInput("proportional odds needs >= 2 observed categories");
    int next = 0;
    for (auto& [score, index] : levels) index = next++;

    const int k = static_cast<int>(levels.size());
    std::vector<double> t_counts(static_cast<std::size_t>(k), 0.0);
    std::vector<double> c_counts(static_cast<std::size_t>(k), 0.0);
    int t_min = k, t_max = -1, c_min = k, c_max = -1;
    for (int s : treatment_scores) {
        const int i = levels[s];
        t_counts[static_cast<std::size_t>(i)] += 1;
        t_min = std::min(t_min, i);
        t_max = std::max(t_max, i);
    }
    for (int s : control_scores) {
        const int i = levels[s];
        c_counts[static_cast<std::size_t>(i)] += 1;
        c_min = std::min(c_min, i);
        c_max = std::max(c_max, i);
    }

    TestResult result;
    result.method = "prop_odds";
    result.n_used = static_cast<int>(treatment_scores.size() + control_scores.size());

    if (t_max <= c_min || c_max <= t_min) {
        result.converged = false;
        result.diagnostic = "complete separation: a category boundary splits the arms";
        return result;
    }

    const ProportionalOddsLikelihood lik(std::move(t_counts), std::move(c_counts));
    Eigen::VectorXd theta = lik.initial_point();
    double ll = lik.log_likelihood(theta);
    bool converged = false;
    for (int iter = 0; iter <= options.max_iterations; ++iter) {
        const Eigen::VectorXd g = lik.gradient(theta);
        if (g.cwiseAbs().maxCoeff() < options.tolerance) {
            converged = true;
            break;
        }
        if (iter == options.max_iterations) break;
        const Eigen::MatrixXd info = -lik.hessian(theta);
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
        const Eigen::VectorXd step = ldlt.solve(g);
        double scale = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
            const Eigen::VectorXd candidate = theta + scale * step;
            bool ordered = true;
            for (int j = 1; j < k - 1; ++j) ordered = ordered && candidate[j] > candidate[j - 1];
            if (!ordered) continue;
            const double cand_ll = lik.log_likelihood(candidate);
            if (std::isfinite(cand_ll) && cand_ll >= ll - 1e-12 * (1.0 + std::fabs(ll))) {
                theta = candidate;
                ll = cand_ll;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }

    const double beta = theta[k - 1];
    if (!converged || std::fabs(beta) > 20.0) {
        result.converged = false;
        result.diagnostic = converged ? "treatment coefficient diverging (quasi-separation)"
                                      : "Newton-Raphson did not converge";
        result.estimate = std::exp(beta);
        return result;
    }
    const Eigen::MatrixXd cov = (-lik.hessian(theta)).inverse();
    const double se = std::sqrt(cov(k - 1, k - 1));
    result.estimate = std::exp(beta);
    result.ci_low = std::exp(beta - kZ975 * se);
    result.ci_high = std::exp(beta + kZ975 * se);
    result.statistic = beta / se;
    result.p_value = two_sided_normal_p(result.statistic);
    return result;
}

}  // namespace trialpower
