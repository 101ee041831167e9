#include <algorithm>
#include <cmath>
#include <string>

#include "trialpower/distributions.hpp"
#include "trialpower/error.hpp"
#include "trialpower/inference.hpp"

namespace trialpower {

TestResult two_proportion_test(int events_t, int n_t, int events_c, int n_c) {
    if (n_t < 1 || n_c < 1) throw DegenerateInput("two-proportion test needs subjects in both arms");
    if (events_t < 0 || events_c < 0 || events_t > n_t || events_c > n_c) {
        throw InvalidArgument("event counts must lie in [0, n]");
    }
    const double pt = static_cast<double>(events_t) / n_t;
    const double pc = static_cast<double>(events_c) / n_c;
    const double pooled = static_cast<double>(events_t + events_c) / (n_t + n_c);

    TestResult result;
    result.method = "two_proportion";
    result.n_used = n_t + n_c;
    result.estimate = pt - pc;
    const double se_wald = std::sqrt(pt * (1.0 - pt) / n_t + pc * (1.0 - pc) / n_c);
    result.ci_low = result.estimate - kZ975 * se_wald;
    result.ci_high = result.estimate + kZ975 * se_wald;

    const double se0 = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n_t + 1.0 / n_c));
    if (!(se0 > 0.0)) {
        result.statistic = 0.0;
        result.p_value = 1.0;
        return result;
    }
    result.statistic = result.estimate / se0;
    result.p_value = two_sided_normal_p(result.statistic);
    return result;
}

namespace {

double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

TestResult fisher_exact(int a, int b, int c, int d) {
    if (a < 0 || b < 0 || c < 0 || d < 0) throw InvalidArgument("table counts must be non-negative");
    TestResult result;
    result.method = "fisher_exact";
    result.n_used = a + b + c + d;

    const double bc = static_cast<double>(b) * c;
    const double ad = static_cast<double>(a) * d;
    result.estimate = bc > 0 ? ad / bc : (ad > 0 ? std::numeric_limits<double>::infinity() : kNaN);
    if (a > 0 && b > 0 && c > 0 && d > 0) {
        const double se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
        result.ci_low = result.estimate * std::exp(-kZ975 * se);
        result.ci_high = result.estimate * std::exp(kZ975 * se);
    }

    const int row1 = a + b;
    const int row2 = c + d;
    const int col1 = a + c;
    const int n = row1 + row2;
    if (row1 == 0 || row2 == 0 || col1 == 0 || col1 == n) {
        result.statistic = static_cast<double>(a);
        result.p_value = 1.0;
        result.diagnostic = "zero margin";
        return result;
    }
    // X = top-left cell is hypergeometric given the margins.
    const int lo = std::max(0, col1 - row2);
    const int hi = std::min(row1, col1);
    const double log_denom = log_choose(n, col1);
    auto log_prob = [&](int x) { return log_choose(row1, x) + log_choose(row2, col1 - x) - log_denom; };
    const double observed = log_prob(a);
    // Relative tolerance for ties in probability, as in common implementations.
    const double cutoff = observed + std::log1p(1e-7);
    double p = 0.0;
    for (int x = lo; x <= hi; ++x) {
        const double lp = log_prob(x);
        if (lp <= cutoff) p += std::exp(lp);
    }
    result.statistic = static_cast<double>(a);
    result.p_value = floor_p(p);
    return result;
}

}  // namespace trialpower
