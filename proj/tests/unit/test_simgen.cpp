#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "doctest.h"
#include "trialpower/error.hpp"
#include "trialpower/simgen.hpp"

using namespace trialpower;

namespace {

SubjectDraws pinned(double intercept, double slope) {
    SubjectDraws d;
    d.intercept_effect = intercept;
    d.control_law_slope = slope;
    d.treatment_law_slope = slope;
    return d;
}

double share(const std::vector<int>& scores, int category) {
    return static_cast<double>(std::count(scores.begin(), scores.end(), category)) /
           static_cast<double>(scores.size());
}

}  // namespace

TEST_CASE("pinned draws reproduce a hand-evaluated trajectory") {
    ScenarioParams p;
    const auto y = latent_path(p, Arm::control, pinned(4.2, -4.0));
    CHECK(y[0] == doctest::Approx(4.2));
    CHECK(y[1] == doctest::Approx(4.2 - 4.05 * std::log(2.0)));
    const auto s = discretize_path(y, 7);
    CHECK(s[0] == 4);
    CHECK(s[1] == 1);
    for (std::size_t d = 1; d < s.size(); ++d) CHECK(s[d] == 1);
}

TEST_CASE("a day-1 score of 1 stays at 1 even with a death slope") {
    ScenarioParams p;
    const auto s = discretize_path(latent_path(p, Arm::control, pinned(1.0, 7.0)), 7);
    CHECK(std::all_of(s.begin(), s.end(), [](int v) { return v == 1; }));
}

TEST_CASE("a death slope forces absorption at K") {
    ScenarioParams p;
    for (double b0 : {2.0, 2.5, 4.0, 6.5}) {
        const auto s = discretize_path(latent_path(p, Arm::control, pinned(b0, 7.0)), 7);
        CHECK(std::is_sorted(s.begin(), s.end()));
        CHECK(s.back() == 7);
    }
}

TEST_CASE("scores are floored before clamping, and clamping is idempotent") {
    const std::vector<double> y{-0.5, 0.2, 3.9, 9.0};
    std::vector<double> once(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) once[i] = std::clamp(std::floor(y[i]), 1.0, 7.0);
    std::vector<double> twice(once.size());
    for (std::size_t i = 0; i < once.size(); ++i) twice[i] = std::clamp(std::floor(once[i]), 1.0, 7.0);
    CHECK(once == twice);
    CHECK(discretize_path(std::vector<double>{1.999, 3.0}, 7) == std::vector<int>{1, 1});
    CHECK(discretize_path(std::vector<double>{6.5, 7.2, 2.0}, 7) == std::vector<int>{6, 7, 7});
}

TEST_CASE("forward absorption") {
    std::vector<int> s{4, 3, 7, 2, 5};
    enforce_absorbing(s, 7);
    CHECK(s == std::vector<int>{4, 3, 7, 7, 7});
    std::vector<int> r{2, 1, 3};
    enforce_absorbing(r, 7);
    CHECK(r == std::vector<int>{2, 1, 1});
}

TEST_CASE("day-1 scores do not depend on the arm") {
    ScenarioParams p;
    p.baseline_offset = 3.0;
    for (std::uint32_t i = 0; i < 500; ++i) {
        const CounterStream stream(5, 0, i);
        const auto c = gen_trajectory_eq1(p, Arm::control, stream);
        const auto t = gen_trajectory_eq1(p, Arm::treatment, stream);
        REQUIRE(c.at(1) == t.at(1));
    }
}

TEST_CASE("generator entry points check the lag flag") {
    ScenarioParams p;
    const CounterStream stream(1, 0, 0);
    CHECK_THROWS_AS(gen_trajectory_lagged(p, Arm::control, stream), InvalidArgument);
    p.lagged = true;
    CHECK_THROWS_AS(gen_trajectory_eq1(p, Arm::control, stream), InvalidArgument);
    CHECK_NOTHROW(gen_trajectory_lagged(p, Arm::control, stream));
}

TEST_CASE("literal lag mode gives controls a fixed slope and random intercept only") {
    ScenarioParams p;
    p.lagged = true;
    p.lag_mode = LagMode::literal;
    const auto draws = pinned(2.3, -4.0);
    const auto y = latent_path(p, Arm::control, draws);
    for (int d = 1; d <= 28; ++d) {
        CHECK(y[static_cast<std::size_t>(d - 1)] == doctest::Approx(2.3 - 0.05 * std::log(d)));
    }
    const auto yt = latent_path(p, Arm::treatment, draws);
    for (int d = 1; d <= 7; ++d) CHECK(yt[static_cast<std::size_t>(d - 1)] == y[static_cast<std::size_t>(d - 1)]);
    CHECK(yt[9] == doctest::Approx(2.3 - 0.05 * std::log(10.0) + (-0.10 - 4.0) * std::log(3.0)));
}

TEST_CASE("corrected lag mode: arms coincide through the lag day") {
    ScenarioParams p;
    p.lagged = true;
    p.baseline_offset = 3.0;
    for (std::uint32_t i = 0; i < 400; ++i) {
        const CounterStream stream(8, 0, i);
        const auto c = gen_trajectory_lagged(p, Arm::control, stream);
        const auto t = gen_trajectory_lagged(p, Arm::treatment, stream);
        for (int d = 1; d <= p.lag_day; ++d) REQUIRE(c.at(d) == t.at(d));
    }
    const auto draws = pinned(3.0, -4.0);
    const auto yc = latent_path(p, Arm::control, draws);
    const auto yt = latent_path(p, Arm::treatment, draws);
    CHECK(yt[13] - yc[13] == doctest::Approx(-0.10 * std::log(7.0)));
}

TEST_CASE("po_shift") {
    const std::vector<double> base{0.2, 0.3, 0.5};
    CHECK(po_shift(base, 1.0) == std::vector<double>{0.2, 0.3, 0.5});
    const auto q = po_shift(base, 2.0);
    CHECK(q[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(q[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(q[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(po_shift(base, 0.0), InvalidArgument);
    CHECK_THROWS_AS(po_shift(base, -1.0), InvalidArgument);

    CounterStream rng(3, 0, 0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(6);
        for (auto& v : p) v = rng.next_uniform();
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto& v : p) v /= total;
        const double a = 0.25 * std::pow(16.0, rng.next_uniform());
        const double b = 0.25 * std::pow(16.0, rng.next_uniform());
        const auto ab = po_shift(po_shift(p, a), b);
        const auto direct = po_shift(p, a * b);
        for (std::size_t k = 0; k < p.size(); ++k) REQUIRE(ab[k] == doctest::Approx(direct[k]).epsilon(1e-10));

        const auto up = po_shift(p, a > 1.0 ? a : 1.0 / a);
        REQUIRE(std::accumulate(up.begin(), up.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        double cp = 0.0, cu = 0.0;
        for (std::size_t k = 0; k + 1 < p.size(); ++k) {
            cp += p[k];
            cu += up[k];
            REQUIRE(cu >= cp - 1e-12);
        }
    }
}

TEST_CASE("gen_trial_eq1 sizes and determinism") {
    ScenarioParams p;
    const auto a = gen_trial_eq1(p, 123, 4);
    CHECK(a.trajectories.size() == 800);
    CHECK(a.arm_size(Arm::control) == 400);
    for (const auto& t : a.trajectories) {
        REQUIRE(t.observation_count() == 28);
        REQUIRE_FALSE(t.has_absorbing_violation());
    }
    CHECK(gen_trial_eq1(p, 123, 4).trajectories == a.trajectories);
    CHECK(gen_trial_eq1(p, 123, 5).trajectories != a.trajectories);
    p.n_per_arm = 1;
    CHECK(gen_trial_eq1(p, 1).trajectories.size() == 2);
    p.p_death_control = 1.5;
    CHECK_THROWS_AS(gen_trial_eq1(p, 1), InvalidArgument);
}

TEST_CASE("death absorption rate matches an integration oracle") {
    // A death-destined subject dies unless day 1 already floors to score 1;
    // a recovery-destined subject dies only if day 1 is already at K.
    for (double offset : {0.0, kCalibratedBaselineOffset}) {
        ScenarioParams p;
        p.baseline_offset = offset;
        p.n_per_arm = 10000;
        const auto ds = gen_trial_eq1(p, 99);
        int died = 0;
        for (const auto& t : ds.trajectories) {
            if (t.arm() == Arm::control) died += t.death_day().has_value();
        }
        const boost::math::normal b0(offset, p.intercept_sd);
        // P(reach 7 by day 28 | start level y1) for the death slope.
        double destined = 0.0;
        const int grid = 4000;
        for (int i = 0; i < grid; ++i) {
            const double lo = 2.0 + 10.0 * i / grid;
            const double hi = 2.0 + 10.0 * (i + 1) / grid;
            const double mass = cdf(b0, hi) - cdf(b0, lo);
            const double y1 = 0.5 * (lo + hi);
            const double need = (7.0 - y1) / std::log(28.0) - p.fixed_slope;
            const boost::math::normal slope(p.death_slope_mean, p.death_slope_sd);
            destined += mass * (y1 >= 7.0 ? 1.0 : cdf(complement(slope, need)));
        }
        destined += cdf(complement(b0, 12.0));
        const double expected = p.p_death_control * destined +
                                (1.0 - p.p_death_control) * cdf(complement(b0, 7.0));
        const double se = std::sqrt(expected * (1.0 - expected) / 10000.0);
        CHECK(std::fabs(died / 10000.0 - expected) < 3.0 * se);
    }
}

TEST_CASE("proportional-odds generator") {
    POScenarioParams p;
    p.baseline_probs = {0.0, 0.0, 0.13, 0.41, 0.18, 0.28, 0.0};
    p.or_schedule = {{1, 1.0}, {11, 1.0}, {14, 1.0}, {21, 1.5}, {28, 1.75}};
    p.shared_dynamics.treatment_slope = 0.0;
    p.n_per_arm = 10000;

    CHECK(p.odds_ratio_on(13) == 1.0);
    CHECK(p.odds_ratio_on(22) == 1.5);
    CHECK(p.odds_ratio_on(40) == 1.75);

    const POTrialGenerator gen(p);
    const auto ds = gen.generate(2024);
    CHECK(ds.trajectories.size() == 20000);
    CHECK(gen.generate(2024).trajectories == ds.trajectories);

    std::vector<int> c14, t14, mapped28;
    for (std::uint32_t i = 0; i < 2 * 10000u; ++i) {
        const auto& t = ds.trajectories[i];
        REQUIRE_FALSE(t.has_absorbing_violation());
        (t.arm() == Arm::control ? c14 : t14).push_back(*t.at(14));
        if (t.arm() == Arm::treatment) {
            const CounterStream stream(2024, 0, i);
            const auto control_law = gen.control_law_scores(stream);
            mapped28.push_back(gen.quantile_map(control_law, stream.uniform(5))[27]);
        }
    }
    SUBCASE("day-14 marginals agree when the odds ratio is 1") {
        for (int k = 1; k <= 7; ++k) {
            const double pc = share(c14, k);
            const double pt = share(t14, k);
            const double pool = 0.5 * (pc + pt);
            CHECK(std::fabs(pc - pt) <= 3.0 * std::sqrt(pool * (1 - pool) * 2.0 / 10000.0) + 1e-12);
        }
    }
    SUBCASE("day-28 quantile map reproduces the shifted marginal") {
        const auto ref = gen.reference_cdf(28);
        std::vector<double> probs(7);
        for (std::size_t k = 0; k < 7; ++k) probs[k] = ref[k] - (k ? ref[k - 1] : 0.0);
        const auto target = po_shift(probs, 1.75);
        for (int k = 1; k <= 7; ++k) {
            const double q = target[static_cast<std::size_t>(k - 1)];
            const double se = std::sqrt(q * (1 - q) / 10000.0);
            CHECK(std::fabs(share(mapped28, k) - q) <= 3.0 * se + 1e-12);
        }
    }
    SUBCASE("all-ones schedule makes the arms exchangeable") {
        POScenarioParams flat = p;
        flat.or_schedule = {{1, 1.0}};
        flat.n_per_arm = 50;
        const POTrialGenerator g(flat);
        const CounterStream stream(1, 0, 0);
        const auto base = g.control_law_scores(stream);
        CHECK(g.to_treatment(base, 0.37) == base);
    }
}

TEST_CASE("proportional-odds scenario validation") {
    POScenarioParams p;
    p.baseline_probs = {0.5, 0.5};
    p.categories = 2;
    p.or_schedule = {{2, 1.5}};
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.or_schedule = {{1, 1.5}};
    CHECK_NOTHROW(p.validate());
    p.baseline_probs = {0.5, 0.6};
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p.baseline_probs = {0.5, 0.5};
    p.or_schedule = {{1, 0.0}};
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
