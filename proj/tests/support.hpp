#pragma once

// Monte Carlo helpers shared by the unit tests and the acceptance binary.

#include <cmath>
#include <vector>

#include "rstop/rstop.hpp"

namespace rstop::testing {

struct McResult {
    double mean = 0.0;
    double se = 0.0;
};

inline McResult summarize(double s, double ss, long m) {
    const double md = static_cast<double>(m);
    const double mean = s / md;
    const double var = std::max(0.0, (ss - s * s / md) / (md - 1.0));
    return {mean, std::sqrt(var / md)};
}

// Profit of the family's round-t policy on a fresh round, the policy built from
// one independent sample round (t >= 2) or none (t = 1).
inline McResult mc_baseline(const Instance& inst, BaselineFamily family, long t, long trials, std::uint64_t seed) {
    Rng rng(mix64(seed));
    double s = 0.0, ss = 0.0;
    std::vector<RoundRealization> hist(1);
    for (long k = 0; k < trials; ++k) {
        hist[0] = sample_round(inst, rng);
        const std::span<const RoundRealization> h = t >= 2 ? std::span<const RoundRealization>(hist)
                                                           : std::span<const RoundRealization>{};
        const StoppingPolicy p = baseline_for_round(family, t, h, inst, rng);
        const double v = run_policy(p, sample_round(inst, rng), inst.profit()).profit;
        s += v;
        ss += v * v;
    }
    return summarize(s, ss, trials);
}

inline McResult mc_policy(const Instance& inst, const StoppingPolicy& p, long trials, std::uint64_t seed) {
    Rng rng(mix64(seed));
    double s = 0.0, ss = 0.0;
    for (long k = 0; k < trials; ++k) {
        const double v = run_policy(p, sample_round(inst, rng), inst.profit()).profit;
        s += v;
        ss += v * v;
    }
    return summarize(s, ss, trials);
}

inline Instance rents_instance(int n, double b) {
    return Instance(std::vector<DiscreteDist>(static_cast<std::size_t>(n), DiscreteDist::point_mass(1.0)),
                    OrderModel::adversarial(), ProfitKind::ski_rental(b));
}

inline Instance distinct_point_masses(int n, OrderModel order) {
    std::vector<DiscreteDist> d;
    for (int k = 0; k < n; ++k) d.push_back(DiscreteDist::point_mass((k + 1.0) / (n + 1.0)));
    return Instance(std::move(d), std::move(order), ProfitKind::best_choice());
}

}  // namespace rstop::testing

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace rstop::testing {

using Big = boost::multiprecision::cpp_bin_float_50;

// eps1 and delta1 straight from their formulas in 50-digit arithmetic.
inline Big big_eps1(long t, const ScheduleConfig& cfg) {
    using boost::multiprecision::log;
    using boost::multiprecision::sqrt;
    const Big T(t), B(cfg.B);
    if (cfg.variant == ScheduleVariant::pi_refined) {
        const Big e = boost::multiprecision::exp(Big(1));
        return Big(5) * B * log(Big(4) * e * T) / sqrt(T - 1);
    }
    return Big(6) * B * sqrt(Big(2) * Big(cfg.kappa) * log(Big(4) * T) / (T - 1));
}

inline Big big_delta1(long t, const ScheduleConfig& cfg) {
    using boost::multiprecision::pow;
    const Big T(t);
    if (cfg.variant == ScheduleVariant::pi_refined) return Big(1) / (Big(2) * T);
    if (cfg.delta1_form == Delta1Form::corollary) return Big(1) / pow(Big(2) * T, Big(cfg.kappa));
    return Big(1) / (Big(2) * pow(T, Big(cfg.kappa)));
}

inline Big big_delta(long t, const ScheduleConfig& cfg) {
    const long z = zeta(t, cfg.t0);
    Big d = big_delta1(z, cfg);
    if (z < t) {
        const Big e = big_eps1(z, cfg);
        d += Big(4) * boost::multiprecision::exp(Big(-2) * Big(t - z) * e * e / (Big(cfg.B) * Big(cfg.B)));
    }
    return d;
}

// Relative agreement to 12 significant digits (or both below 1e-300).
inline bool agrees12(double printed, const Big& exact) {
    const double x = exact.convert_to<double>();
    if (std::abs(x) < 1e-300 && std::abs(printed) < 1e-300) return true;
    char a[64], b[64];
    std::snprintf(a, sizeof a, "%.12g", printed);
    std::snprintf(b, sizeof b, "%.12g", x);
    if (std::string(a) == std::string(b)) return true;
    // a last-digit disagreement is a rounding boundary between the two roundings
    return std::abs(printed - x) <= 1e-11 * std::abs(x);
}

}  // namespace rstop::testing
