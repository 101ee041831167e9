#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "trialpower/distributions.hpp"
#include "trialpower/error.hpp"
#include "trialpower/inference.hpp"

namespace trialpower {

namespace {

struct Ranked {
    std::vector<long> doubled_rank;  // 2 * mid-rank, aligned with concatenated (x, y)
    double tie_term = 0.0;           // sum over tie groups of t^3 - t
};

Ranked rank_pooled(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size() + y.size();
    std::vector<double> values(n);
    std::copy(x.begin(), x.end(), values.begin());
    std::copy(y.begin(), y.end(), values.begin() + static_cast<std::ptrdiff_t>(x.size()));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    Ranked out;
    out.doubled_rank.resize(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // Positions i..j (0-based) share mid-rank ((i+1)+(j+1))/2.
        const long doubled = static_cast<long>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) out.doubled_rank[order[k]] = doubled;
        const double t = static_cast<double>(j - i + 1);
        out.tie_term += t * t * t - t;
        i = j + 1;
    }
    return out;
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v, double mean) {
    double ss = 0.0;
    for (double a : v) ss += (a - mean) * (a - mean);
    return ss / static_cast<double>(v.size() - 1);
}

// Exact two-sided p for the doubled rank sum `observed` of a subset of size
// m drawn from `doubled_ranks`.
double exact_rank_sum_p(const std::vector<long>& doubled_ranks, std::size_t m, long observed) {
    long max_sum = 0;
    {
        std::vector<long> sorted = doubled_ranks;
        std::sort(sorted.rbegin(), sorted.rend());
        for (std::size_t i = 0; i < m; ++i) max_sum += sorted[i];
    }
    const auto width = static_cast<std::size_t>(max_sum + 1);
    std::vector<std::vector<long double>> ways(m + 1, std::vector<long double>(width, 0.0L));
    ways[0][0] = 1.0L;
    for (long r : doubled_ranks) {
        for (std::size_t j = m; j >= 1; --j) {
            auto& dst = ways[j];
            const auto& src = ways[j - 1];
            for (long s = max_sum; s >= r; --s) {
                dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - r)];
            }
        }
    }
    const auto& dist = ways[m];
    long double total = 0.0L, lower = 0.0L, upper = 0.0L;
    for (std::size_t s = 0; s < width; ++s) {
        total += dist[s];
        if (static_cast<long>(s) <= observed) lower += dist[s];
        if (static_cast<long>(s) >= observed) upper += dist[s];
    }
    const long double p = 2.0L * std::min(lower, upper) / total;
    return static_cast<double>(std::min(p, 1.0L));
}

}  // namespace

double wilcoxon_exact_p(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw DegenerateInput("rank-sum test needs both samples non-empty");
    const Ranked ranked = rank_pooled(x, y);
    const bool use_x = x.size() <= y.size();
    const std::size_t m = use_x ? x.size() : y.size();
    const std::size_t offset = use_x ? 0 : x.size();
    long observed = 0;
    for (std::size_t i = 0; i < m; ++i) observed += ranked.doubled_rank[offset + i];
    return exact_rank_sum_p(ranked.doubled_rank, m, observed);
}

TestResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y, int exact_below) {
    if (x.empty() || y.empty()) throw DegenerateInput("rank-sum test needs both samples non-empty");
    const Ranked ranked = rank_pooled(x, y);
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    const double n = nx + ny;
    long doubled_sum = 0;
    for (std::size_t i = 0; i < x.size(); ++i) doubled_sum += ranked.doubled_rank[i];

    TestResult result;
    result.method = "wilcoxon";
    result.n_used = static_cast<int>(n);
    result.estimate = mean_of(x) - mean_of(y);

    const double w = 0.5 * static_cast<double>(doubled_sum);
    const double expected = nx * (n + 1.0) / 2.0;
    const double variance = n > 1 ? nx * ny / 12.0 * ((n + 1.0) - ranked.tie_term / (n * (n - 1.0)))
                                  : 0.0;
    if (!(variance > 1e-12)) {
        result.statistic = 0.0;
        result.p_value = 1.0;
        return result;
    }
    result.statistic = (w - expected) / std::sqrt(variance);
    if (std::min(x.size(), y.size()) >= static_cast<std::size_t>(exact_below)) {
        result.p_value = two_sided_normal_p(result.statistic);
    } else {
        result.p_value = floor_p(wilcoxon_exact_p(x, y));
        result.diagnostic = "exact permutation distribution";
    }
    return result;
}

TestResult t_test(std::span<const double> x, std::span<const double> y, bool pooled) {
    if (x.size() < 2 || y.size() < 2) throw DegenerateInput("t-test needs at least two values per arm");
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    const double mx = mean_of(x);
    const double my = mean_of(y);
    const double vx = variance_of(x, mx);
    const double vy = variance_of(y, my);

    TestResult result;
    result.method = pooled ? "t_test_pooled" : "t_test";
    result.n_used = static_cast<int>(nx + ny);
    result.estimate = mx - my;

    double se2 = 0.0;
    double df = nx + ny - 2.0;
    if (pooled) {
        const double sp2 = ((nx - 1.0) * vx + (ny - 1.0) * vy) / df;
        se2 = sp2 * (1.0 / nx + 1.0 / ny);
    } else {
        const double ax = vx / nx;
        const double ay = vy / ny;
        se2 = ax + ay;
        const double denom = ax * ax / (nx - 1.0) + ay * ay / (ny - 1.0);
        if (denom > 0.0) df = se2 * se2 / denom;
    }
    const double se = std::sqrt(se2);
    if (!(se > 0.0)) {
        result.ci_low = result.ci_high = result.estimate;
        if (result.estimate == 0.0) {
            result.statistic = 0.0;
            result.p_value = 1.0;
        } else {
            result.statistic = std::copysign(std::numeric_limits<double>::infinity(), result.estimate);
            result.p_value = kMinPValue;
        }
        return result;
    }
    const double q = student_t_quantile(0.975, df);
    result.statistic = result.estimate / se;
    result.p_value = two_sided_t_p(result.statistic, df);
    result.ci_low = result.estimate - q * se;
    result.ci_high = result.estimate + q * se;
    return result;
}

}  // namespace trialpower
