#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rstop/core_model.hpp"
#include "rstop/policies.hpp"

namespace rstop {

enum class BaselineFamily { prophet_ss, secretary_ss, prophet_secretary, last_success_ss, ski_rental_rand };

inline BaselineFamily parse_family(std::string_view s) {
    if (s == "prophet_ss") return BaselineFamily::prophet_ss;
    if (s == "secretary_ss") return BaselineFamily::secretary_ss;
    if (s == "prophet_secretary") return BaselineFamily::prophet_secretary;
    if (s == "last_success_ss") return BaselineFamily::last_success_ss;
    if (s == "ski_rental_rand") return BaselineFamily::ski_rental_rand;
    throw ConfigError("unknown baseline family: " + std::string(s));
}

inline const char* family_name(BaselineFamily f) {
    switch (f) {
        case BaselineFamily::prophet_ss: return "prophet_ss";
        case BaselineFamily::secretary_ss: return "secretary_ss";
        case BaselineFamily::prophet_secretary: return "prophet_secretary";
        case BaselineFamily::last_success_ss: return "last_success_ss";
        case BaselineFamily::ski_rental_rand: return "ski_rental_rand";
    }
    return "?";
}

// Does the family make sense for this profit kind?
inline bool family_supports(BaselineFamily f, const ProfitKind& kind) {
    switch (f) {
        case BaselineFamily::last_success_ss: return kind.type() == ProfitKind::Type::last_success;
        case BaselineFamily::ski_rental_rand: return kind.type() == ProfitKind::Type::ski_rental;
        default: return !kind.minimizes();
    }
}

/// Flat threshold at the largest value of one sample round, accept-on-equal.
inline ThresholdPolicy prophet_single_sample(const RoundRealization& first) {
    expects(!first.x.empty(), "prophet_single_sample: empty round");
    const double m = *std::max_element(first.x.begin(), first.x.end());
    return ThresholdPolicy::flat(std::vector<double>(first.x.size(), m));
}

// Same rule; paired with the best-choice objective.
inline ThresholdPolicy adversarial_secretary_single_sample(const RoundRealization& first) {
    return prophet_single_sample(first);
}

/// Observe floor(n/e) values, then take the first one at least as large as all of them.
inline ObservationRankPolicy classical_secretary(int n) {
    expects(n >= 1, "classical_secretary: n must be positive");
    return {static_cast<int>(std::floor(static_cast<double>(n) / std::numbers::e))};
}

/// First live success after the sample's second-to-last success; with fewer
/// than two sample successes the gate opens at the first index.
inline IndexGatePolicy last_success_one_sample(const RoundRealization& sample) {
    std::vector<int> hits;
    for (std::size_t i = 0; i < sample.x.size(); ++i)
        if (sample.x[i] == 1.0) hits.push_back(static_cast<int>(i));
    if (hits.size() < 2) return {0};
    return {hits[hits.size() - 2] + 1};
}

inline CumulativeCostPolicy ski_rental_randomized(double b, Rng& rng) {
    expects(b > 0.0, "ski_rental_randomized: b must be positive");
    return {ski_level_from_uniform(uniform01(rng), b)};
}

/// g_t as a distribution over deterministic policies. `history` must hold at
/// least one round when t >= 2; only its first round is used.
inline RandomizedPolicy baseline_distribution(BaselineFamily family, long t, std::span<const RoundRealization> history,
                                              const Instance& shape) {
    expects(t >= 1, "baseline_distribution: t must be positive");
    if (family == BaselineFamily::ski_rental_rand) return SkiLevelDraw{shape.profit().buy_cost()};
    if (t == 1) {
        if (family == BaselineFamily::prophet_secretary) return StoppingPolicy{classical_secretary(shape.n())};
        return UniformPickDraw{shape.n()};
    }
    expects(!history.empty(), "baseline_distribution: round t >= 2 needs a sample round");
    const RoundRealization& first = history.front();
    switch (family) {
        case BaselineFamily::prophet_ss:
        case BaselineFamily::prophet_secretary: return StoppingPolicy{prophet_single_sample(first)};
        case BaselineFamily::secretary_ss: return StoppingPolicy{adversarial_secretary_single_sample(first)};
        case BaselineFamily::last_success_ss: return StoppingPolicy{last_success_one_sample(first)};
        case BaselineFamily::ski_rental_rand: break;
    }
    throw ContractViolation("baseline_distribution: unknown family");
}

inline StoppingPolicy baseline_for_round(BaselineFamily family, long t, std::span<const RoundRealization> history,
                                         const Instance& shape, Rng& rng) {
    return draw(baseline_distribution(family, t, history, shape), rng);
}

}  // namespace rstop
