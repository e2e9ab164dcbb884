#include <gtest/gtest.h>

#include "rstop/rstop.hpp"

using namespace rstop;

namespace {

RoundRealization round_of(std::vector<double> x) {
    RoundRealization r;
    r.tau.resize(x.size());
    std::iota(r.tau.begin(), r.tau.end(), 0);
    r.x = std::move(x);
    return r;
}

Instance uniform01_pair() {
    const std::vector<double> v{0.0, 1.0};
    const auto d = DiscreteDist::uniform(v);
    return Instance({d, d}, OrderModel::adversarial(), ProfitKind::reward());
}

}  // namespace

TEST(RunPolicy, Examples) {
    auto out = run_policy(ThresholdPolicy::flat({0.6, 0.0}), round_of({0.7, 0.3}), ProfitKind::reward());
    EXPECT_EQ(out.index, 0u);
    EXPECT_DOUBLE_EQ(out.profit, 0.7);

    out = run_policy(ThresholdPolicy::flat({kNever, kNever}), round_of({0.7, 0.3}), ProfitKind::reward());
    EXPECT_EQ(out.index, 2u);
    EXPECT_DOUBLE_EQ(out.profit, 0.0);

    out = run_policy(ObservationRankPolicy{1}, round_of({0.5, 0.4, 0.8}), ProfitKind::best_choice());
    EXPECT_EQ(out.index, 2u);
    EXPECT_DOUBLE_EQ(out.profit, 1.0);

    out = run_policy(IndexGatePolicy{3}, round_of({0, 0, 0, 1, 0}), ProfitKind::last_success());
    EXPECT_EQ(out.index, 3u);
    EXPECT_DOUBLE_EQ(out.profit, 1.0);
}

TEST(RunPolicy, TieRules) {
    const auto r = round_of({0.5, 0.2});
    EXPECT_EQ(stop_index(ThresholdPolicy::flat({0.5, 0.0}), r), 0u);
    EXPECT_EQ(stop_index(ThresholdPolicy::flat({0.5, 0.0}, TieRule::strict), r), 1u);
}

TEST(RunPolicy, MissingPrefixIsAContractViolation) {
    RoundRealization r;
    r.x = {0.1, 0.2};
    r.tau = {1, 0};
    const ThresholdPolicy p = ThresholdPolicy::by_prefix(PrefixKeying::full_prefix, 2, {{{0}, 0.5}, {{0, 1}, 0.0}});
    EXPECT_THROW(stop_index(p, r), ContractViolation);
}

TEST(RunPolicy, WrongLengthIsAContractViolation) {
    EXPECT_THROW(stop_index(ThresholdPolicy::flat({0.5}), round_of({0.1, 0.2})), ContractViolation);
}

TEST(RunPolicy, CumulativeCost) {
    const auto r = round_of({0.0, 0.5, 1.0, 1.0});
    EXPECT_EQ(stop_index(CumulativeCostPolicy{0.0}, r), 1u);
    EXPECT_EQ(stop_index(CumulativeCostPolicy{1.5}, r), 3u);
    EXPECT_EQ(stop_index(CumulativeCostPolicy{2.5}, r), 4u);
}

TEST(ExactValue, Examples) {
    const Instance inst = uniform01_pair();
    EXPECT_DOUBLE_EQ(exact_policy_value(ThresholdPolicy::flat({0.5, 0.0}), inst), 0.75);
    EXPECT_DOUBLE_EQ(exact_policy_value(UniformPickPolicy{1}, inst), 0.5);
    const Instance pm({DiscreteDist::point_mass(0.3), DiscreteDist::point_mass(0.8)}, OrderModel::adversarial(),
                      ProfitKind::reward());
    const StoppingPolicy p = ThresholdPolicy::flat({0.5, 0.0});
    EXPECT_DOUBLE_EQ(exact_policy_value(p, pm), run_policy(p, round_of({0.3, 0.8}), pm.profit()).profit);
}

TEST(ExactValue, UniformPickDrawAverages) {
    const Instance inst({DiscreteDist::point_mass(0.2), DiscreteDist::point_mass(0.6)}, OrderModel::adversarial(),
                        ProfitKind::reward());
    EXPECT_DOUBLE_EQ(exact_policy_value(RandomizedPolicy{UniformPickDraw{2}}, inst), 0.4);
}

// The closed-form integration over the ski level matches Monte Carlo over draws.
TEST(ExactValue, SkiLevelDrawMatchesMonteCarlo) {
    const auto one = DiscreteDist::point_mass(1.0);
    const Instance inst({one, one, one, one}, OrderModel::adversarial(), ProfitKind::ski_rental(2.5));
    const double exact = exact_policy_value(RandomizedPolicy{SkiLevelDraw{2.5}}, inst);
    Rng rng(9);
    const int m = 200000;
    double s = 0.0, ss = 0.0;
    const auto r = round_of({1, 1, 1, 1});
    for (int k = 0; k < m; ++k) {
        const double v = run_policy(draw(RandomizedPolicy{SkiLevelDraw{2.5}}, rng), r, inst.profit()).profit;
        s += v;
        ss += v * v;
    }
    const double mean = s / m;
    const double se = std::sqrt((ss / m - mean * mean) / m);
    EXPECT_NEAR(exact, mean, 4 * se);
}

TEST(ExactValue, RefusesAboveCap) {
    const DiscreteDist a({0.0, 0.5, 1.0}, {0.2, 0.3, 0.5});
    const Instance inst({a, a, a, a}, OrderModel::adversarial(), ProfitKind::reward());
    EXPECT_THROW(exact_policy_value(ThresholdPolicy::flat({0, 0, 0, 0}), inst, 10), Refusal);
}

TEST(EmpiricalValue, Examples) {
    const std::vector<RoundRealization> s{round_of({0.2, 0.5}), round_of({0.4, 0.1})};
    EXPECT_DOUBLE_EQ(empirical_value(ThresholdPolicy::flat({0.0, 0.0}), s, ProfitKind::reward()), 0.3);
    EXPECT_DOUBLE_EQ(empirical_value(ThresholdPolicy::flat({kNever, kNever}), s, ProfitKind::reward()), 0.0);
    const std::span<const RoundRealization> one(s.data(), 1);
    EXPECT_DOUBLE_EQ(empirical_value(ThresholdPolicy::flat({0.3, 0.0}), one, ProfitKind::reward()), 0.5);
    EXPECT_THROW(empirical_value(ThresholdPolicy::flat({0.0, 0.0}), std::span<const RoundRealization>{}, ProfitKind::reward()),
                 ContractViolation);
}

// Weighting each enumerated outcome by its probability reproduces the exact value.
TEST(EmpiricalValue, ConsistentWithEnumeration) {
    const Instance inst = uniform01_pair();
    std::vector<RoundRealization> all;
    for_each_outcome(inst, kDefaultOutcomeCap, [&](const RoundRealization& r, double) { all.push_back(r); });
    for (double th : {0.0, 0.5, 1.0, kNever}) {
        const StoppingPolicy p = ThresholdPolicy::flat({th, 0.0});
        EXPECT_DOUBLE_EQ(empirical_value(p, all, inst.profit()), exact_policy_value(p, inst));
    }
}

TEST(Properties, FirstCrossing) {
    Rng rng(21);
    for (int k = 0; k < 2000; ++k) {
        const int n = 1 + static_cast<int>(uniform_index(rng, 6));
        std::vector<double> lv(static_cast<std::size_t>(n)), x(static_cast<std::size_t>(n));
        for (auto& v : lv) v = uniform01(rng) < 0.1 ? kNever : uniform01(rng);
        for (auto& v : x) v = uniform01(rng);
        const TieRule tie = k % 2 ? TieRule::strict : TieRule::accept_on_equal;
        const ThresholdPolicy p = ThresholdPolicy::flat(lv, tie);
        const auto r = round_of(x);
        const std::size_t s = stop_index(p, r);
        for (std::size_t j = 0; j < s; ++j) EXPECT_FALSE(p.accepts(j, x[j], r.tau));
        if (s < x.size()) EXPECT_TRUE(p.accepts(s, x[s], r.tau));
    }
}

TEST(Properties, EssentiallyThresholdAcceptsOnlyRunningMaxima) {
    Rng rng(22);
    for (int k = 0; k < 2000; ++k) {
        const int n = 1 + static_cast<int>(uniform_index(rng, 6));
        std::vector<double> lv(static_cast<std::size_t>(n)), x(static_cast<std::size_t>(n));
        for (auto& v : lv) v = 0.5 * uniform01(rng);
        for (auto& v : x) v = static_cast<double>(uniform_index(rng, 5)) / 4.0;
        const StoppingPolicy p = EssentiallyThresholdPolicy{ThresholdPolicy::flat(lv)};
        const std::size_t s = stop_index(p, round_of(x));
        if (s < x.size())
            for (std::size_t j = 0; j < s; ++j) EXPECT_LE(x[j], x[s]);
    }
}

// Moving a threshold inside an open interval between support points changes nothing.
TEST(Properties, IntervalInvariance) {
    Rng rng(23);
    for (int k = 0; k < 200; ++k) {
        const ProfitKind kind = profit_by_index(k);
        if (kind.type() == ProfitKind::Type::last_success) continue;
        const Instance inst = random_instance(rng, 3, 3, kind);
        const auto sup = support_union(inst);
        std::vector<double> cuts{-0.5};
        cuts.insert(cuts.end(), sup.begin(), sup.end());
        cuts.push_back(1.5);
        std::vector<double> a(3), b(3);
        for (std::size_t i = 0; i < 3; ++i) {
            const auto j = uniform_index(rng, cuts.size() - 1);
            const double lo = cuts[j], hi = cuts[j + 1];
            a[i] = lo + (hi - lo) * (0.01 + 0.98 * uniform01(rng));
            b[i] = lo + (hi - lo) * (0.01 + 0.98 * uniform01(rng));
        }
        EXPECT_NEAR(exact_policy_value(ThresholdPolicy::flat(a), inst), exact_policy_value(ThresholdPolicy::flat(b), inst),
                    1e-12);
    }
}
