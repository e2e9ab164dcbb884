#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

#include "rstop/core_model.hpp"
#include "rstop/enumerate.hpp"

namespace rstop {

enum class TieRule { accept_on_equal, strict };

// How a threshold is looked up from the arrival prefix tau(1..i).
enum class PrefixKeying {
    flat,          // one level per step, prefix ignored
    full_prefix,   // key = (tau(1), ..., tau(i))
    set_and_last,  // key = sorted{tau(1..i-1)} followed by tau(i); enough under random order
};

inline std::vector<int> prefix_key(PrefixKeying keying, std::span<const int> tau_prefix) {
    std::vector<int> key(tau_prefix.begin(), tau_prefix.end());
    if (keying == PrefixKeying::set_and_last && key.size() > 1) std::sort(key.begin(), key.end() - 1);
    return key;
}

struct ThresholdPolicy {
    PrefixKeying keying = PrefixKeying::flat;
    std::vector<double> levels;                  // flat keying
    std::map<std::vector<int>, double> keyed;    // otherwise
    std::vector<TieRule> ties;                   // one per step

    static ThresholdPolicy flat(std::vector<double> lv, TieRule tie = TieRule::accept_on_equal) {
        ThresholdPolicy p;
        p.ties.assign(lv.size(), tie);
        p.levels = std::move(lv);
        return p;
    }

    static ThresholdPolicy by_prefix(PrefixKeying keying, int n, std::map<std::vector<int>, double> lv,
                                     TieRule tie = TieRule::accept_on_equal) {
        expects(keying != PrefixKeying::flat, "ThresholdPolicy::by_prefix needs a prefix keying");
        ThresholdPolicy p;
        p.keying = keying;
        p.keyed = std::move(lv);
        p.ties.assign(static_cast<std::size_t>(n), tie);
        return p;
    }

    std::size_t steps() const { return ties.size(); }

    // Level for step i (0-based); tau_prefix holds tau(0..i).
    double level(std::size_t i, std::span<const int> tau_prefix) const {
        if (i >= ties.size()) throw ContractViolation("ThresholdPolicy: step beyond policy length");
        if (keying == PrefixKeying::flat) return levels[i];
        auto it = keyed.find(prefix_key(keying, tau_prefix.first(i + 1)));
        if (it == keyed.end()) throw ContractViolation("ThresholdPolicy: no threshold for arrival prefix");
        return it->second;
    }

    bool accepts(std::size_t i, double x, std::span<const int> tau_prefix) const {
        const double th = level(i, tau_prefix);
        return ties[i] == TieRule::accept_on_equal ? x >= th : x > th;
    }

    bool operator==(const ThresholdPolicy&) const = default;
};

// Rejects anything below the running maximum; otherwise defers to `inner`.
struct EssentiallyThresholdPolicy {
    ThresholdPolicy inner;
    bool operator==(const EssentiallyThresholdPolicy&) const = default;
};

// Rejects the first `cutoff` values, then accepts the first value >= their max.
struct ObservationRankPolicy {
    int cutoff = 0;
    bool operator==(const ObservationRankPolicy&) const = default;
};

// Accepts the first success (x_i == 1) at 0-based index >= gate.
struct IndexGatePolicy {
    int gate = 0;
    bool operator==(const IndexGatePolicy&) const = default;
};

// Accepts (buys) at the first i with x_1 + ... + x_i > level.
struct CumulativeCostPolicy {
    double level = 0.0;
    bool operator==(const CumulativeCostPolicy&) const = default;
};

// Accepts exactly at 0-based index `chosen`.
struct UniformPickPolicy {
    int chosen = 0;
    bool operator==(const UniformPickPolicy&) const = default;
};

using StoppingPolicy = std::variant<ThresholdPolicy, EssentiallyThresholdPolicy, ObservationRankPolicy,
                                    IndexGatePolicy, CumulativeCostPolicy, UniformPickPolicy>;

// Randomized policies, kept as distributions over deterministic ones.
struct UniformPickDraw {
    int n = 1;  // pick one of n indices uniformly
    bool operator==(const UniformPickDraw&) const = default;
};
struct SkiLevelDraw {
    double buy_cost = 1.0;  // level z on [0, b) with density e^{z/b} / (b (e - 1))
    bool operator==(const SkiLevelDraw&) const = default;
};

using RandomizedPolicy = std::variant<StoppingPolicy, UniformPickDraw, SkiLevelDraw>;

template <class P>
concept ConcretePolicy = std::is_constructible_v<StoppingPolicy, P> && !std::is_same_v<std::remove_cvref_t<P>, StoppingPolicy>;

// CDF of the ski-rental level density on [0, b).
inline double ski_level_cdf(double z, double b) {
    if (z <= 0.0) return 0.0;
    if (z >= b) return 1.0;
    return std::expm1(z / b) / (std::numbers::e - 1.0);
}

// Inverse CDF: z = b ln(1 + u (e - 1)).
inline double ski_level_from_uniform(double u, double b) {
    return b * std::log1p(u * (std::numbers::e - 1.0));
}

inline StoppingPolicy draw(const RandomizedPolicy& p, Rng& rng) {
    if (const auto* fixed = std::get_if<StoppingPolicy>(&p)) return *fixed;
    if (const auto* u = std::get_if<UniformPickDraw>(&p))
        return UniformPickPolicy{static_cast<int>(uniform_index(rng, static_cast<std::size_t>(u->n)))};
    const auto& s = std::get<SkiLevelDraw>(p);
    return CumulativeCostPolicy{ski_level_from_uniform(uniform01(rng), s.buy_cost)};
}

inline bool is_deterministic(const RandomizedPolicy& p) { return std::holds_alternative<StoppingPolicy>(p); }

namespace detail {

inline void check_policy_length(std::size_t steps, std::size_t n) {
    if (steps != n) throw ContractViolation("policy length does not match the number of values");
}

}  // namespace detail

/// First accepting step (0-based), or n when everything is rejected.
inline std::size_t stop_index(const StoppingPolicy& policy, const RoundRealization& r) {
    const std::size_t n = r.x.size();
    const std::span<const double> x = r.x;
    const std::span<const int> tau = r.tau;
    return std::visit(
        [&](const auto& p) -> std::size_t {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, ThresholdPolicy>) {
                detail::check_policy_length(p.steps(), n);
                for (std::size_t i = 0; i < n; ++i)
                    if (p.accepts(i, x[i], tau)) return i;
                return n;
            } else if constexpr (std::is_same_v<P, EssentiallyThresholdPolicy>) {
                detail::check_policy_length(p.inner.steps(), n);
                double running = -kNever;
                for (std::size_t i = 0; i < n; ++i) {
                    if (x[i] >= running && p.inner.accepts(i, x[i], tau)) return i;
                    running = std::max(running, x[i]);
                }
                return n;
            } else if constexpr (std::is_same_v<P, ObservationRankPolicy>) {
                expects(p.cutoff >= 0 && static_cast<std::size_t>(p.cutoff) <= n, "ObservationRankPolicy: cutoff > n");
                const auto k = static_cast<std::size_t>(p.cutoff);
                double ref = -kNever;
                for (std::size_t i = 0; i < k; ++i) ref = std::max(ref, x[i]);
                for (std::size_t i = k; i < n; ++i)
                    if (x[i] >= ref) return i;
                return n;
            } else if constexpr (std::is_same_v<P, IndexGatePolicy>) {
                expects(p.gate >= 0 && static_cast<std::size_t>(p.gate) <= n, "IndexGatePolicy: gate out of range");
                for (std::size_t i = static_cast<std::size_t>(p.gate); i < n; ++i)
                    if (x[i] == 1.0) return i;
                return n;
            } else if constexpr (std::is_same_v<P, CumulativeCostPolicy>) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    if ((s += x[i]) > p.level) return i;
                return n;
            } else {
                expects(p.chosen >= 0 && static_cast<std::size_t>(p.chosen) < n, "UniformPickPolicy: index out of range");
                return static_cast<std::size_t>(p.chosen);
            }
        },
        policy);
}

inline StopOutcome run_policy(const StoppingPolicy& policy, const RoundRealization& r, const ProfitKind& kind) {
    const std::size_t i = stop_index(policy, r);
    return {i, profit(kind, r.x, i)};
}

/// Exact expected profit (native units) by enumerating every outcome.
inline double exact_policy_value(const StoppingPolicy& policy, const Instance& inst,
                                 std::size_t cap = kDefaultOutcomeCap) {
    double v = 0.0;
    for_each_outcome(inst, cap, [&](const RoundRealization& r, double prob) {
        v += prob * run_policy(policy, r, inst.profit()).profit;
    });
    return v;
}

template <ConcretePolicy P>
double exact_policy_value(const P& policy, const Instance& inst, std::size_t cap = kDefaultOutcomeCap) {
    return exact_policy_value(StoppingPolicy{policy}, inst, cap);
}

/// Randomized policies are integrated over their internal distribution.
inline double exact_policy_value(const RandomizedPolicy& policy, const Instance& inst,
                                 std::size_t cap = kDefaultOutcomeCap) {
    if (const auto* fixed = std::get_if<StoppingPolicy>(&policy)) return exact_policy_value(*fixed, inst, cap);
    if (const auto* u = std::get_if<UniformPickDraw>(&policy)) {
        double v = 0.0;
        for (int k = 0; k < u->n; ++k) v += exact_policy_value(StoppingPolicy{UniformPickPolicy{k}}, inst, cap);
        return v / static_cast<double>(u->n);
    }
    // Buy at step i exactly when S_{i-1} <= z < S_i, so P(buy at i) = F(S_i) - F(S_{i-1}).
    const double b = std::get<SkiLevelDraw>(policy).buy_cost;
    double v = 0.0;
    for_each_outcome(inst, cap, [&](const RoundRealization& r, double prob) {
        double prev_s = 0.0;
        double prev_f = 0.0;
        double expected = 0.0;
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            const double s = prev_s + r.x[i];
            const double f = ski_level_cdf(s, b);
            expected += (f - prev_f) * profit(inst.profit(), r.x, i);
            prev_s = s;
            prev_f = f;
        }
        expected += (1.0 - prev_f) * profit(inst.profit(), r.x, r.x.size());
        v += prob * expected;
    });
    return v;
}

inline void check_samples(std::span<const RoundRealization> samples) {
    if (samples.empty()) throw ContractViolation("empty sample set");
    const std::size_t n = samples.front().x.size();
    for (const auto& r : samples)
        if (r.x.size() != n || r.tau.size() != n) throw ContractViolation("sample rounds disagree on n");
}

// Mean profit of a deterministic policy over sample rounds.
inline double empirical_value(const StoppingPolicy& policy, std::span<const RoundRealization> samples,
                              const ProfitKind& kind) {
    check_samples(samples);
    double s = 0.0;
    for (const auto& r : samples) s += run_policy(policy, r, kind).profit;
    return s / static_cast<double>(samples.size());
}

template <ConcretePolicy P>
double empirical_value(const P& policy, std::span<const RoundRealization> samples, const ProfitKind& kind) {
    return empirical_value(StoppingPolicy{policy}, samples, kind);
}

// Randomized policies draw fresh internal randomness for every sample.
inline double empirical_value(const RandomizedPolicy& policy, std::span<const RoundRealization> samples,
                              const ProfitKind& kind, Rng& rng) {
    if (const auto* fixed = std::get_if<StoppingPolicy>(&policy)) return empirical_value(*fixed, samples, kind);
    check_samples(samples);
    double s = 0.0;
    for (const auto& r : samples) s += run_policy(draw(policy, rng), r, kind).profit;
    return s / static_cast<double>(samples.size());
}

}  // namespace rstop
