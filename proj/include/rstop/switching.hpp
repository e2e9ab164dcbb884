#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rstop/baselines.hpp"
#include "rstop/core_model.hpp"
#include "rstop/optimal_dp.hpp"
#include "rstop/policies.hpp"

namespace rstop {

enum class ScheduleVariant { general, pi_refined };
enum class Delta1Form { theorem, corollary };  // 1/(2 t^k) vs 1/(2t)^k

struct ScheduleConfig {
    int t0 = 1;
    ScheduleVariant variant = ScheduleVariant::general;
    double B = 1.0;
    long long kappa = 1;
    double scale = 1.0;
    Delta1Form delta1_form = Delta1Form::theorem;

    void validate() const {
        if (t0 < 1) throw ConfigError("schedule: t0 must be >= 1");
        if (kappa < 1) throw ConfigError("schedule: kappa must be >= 1");
        if (!(B > 0.0)) throw ConfigError("schedule: B must be positive");
        if (!(scale > 0.0)) throw ConfigError("schedule: scale must be positive");
    }
};

inline long zeta(long t, int t0) {
    expects(t >= 1 && t0 >= 1, "zeta: t and t0 must be positive");
    return std::min(t, std::max(static_cast<long>(t0) + 1, (t + 1) / 2));
}

// min(n |Pi|, 2 n!), saturating far above anything a schedule can use.
inline long long kappa_for(const Instance& inst) {
    constexpr std::size_t cap = 1'000'000'000'000ULL;
    const auto n = static_cast<std::size_t>(inst.n());
    const std::size_t support = inst.order().kind() == OrderModel::Kind::random ? factorial_capped(inst.n(), cap)
                                                                                : inst.order().support_size(inst.n(), cap);
    const std::size_t a = support > cap / n ? cap : n * support;
    const std::size_t f = factorial_capped(inst.n(), cap);
    const std::size_t b = f > cap / 2 ? cap : 2 * f;
    return static_cast<long long>(std::min(a, b));
}

/// Unscaled eps1(t); t >= 2.
inline double eps1(long t, const ScheduleConfig& cfg) {
    expects(t >= 2, "eps1: t must be at least 2");
    const double td = static_cast<double>(t);
    if (cfg.variant == ScheduleVariant::pi_refined)
        return 5.0 * cfg.B * std::log(4.0 * std::numbers::e * td) / std::sqrt(td - 1.0);
    return 6.0 * cfg.B * std::sqrt(2.0 * static_cast<double>(cfg.kappa) * std::log(4.0 * td) / (td - 1.0));
}

inline double delta1(long t, const ScheduleConfig& cfg) {
    expects(t >= 1, "delta1: t must be positive");
    const double td = static_cast<double>(t);
    if (cfg.variant == ScheduleVariant::pi_refined) return 1.0 / (2.0 * td);
    const double k = static_cast<double>(cfg.kappa);
    if (cfg.delta1_form == Delta1Form::corollary) return std::exp(-k * std::log(2.0 * td));
    return 0.5 * std::exp(-k * std::log(td));
}

// Hoeffding: P(|mean of m terms in [0,B] - expectation| > eta) <= 2 exp(-2 m eta^2 / B^2).
inline double delta0(long m, double eta, double B) {
    return 2.0 * std::exp(-2.0 * static_cast<double>(m) * eta * eta / (B * B));
}

struct ScheduleValues {
    long t = 1;
    long zeta = 1;
    double eps1_at_zeta = 0.0;  // scaled
    double delta1_at_zeta = 0.0;
    double eps_t = 0.0;
    double delta_t = 0.0;
    bool has_holdout = false;  // zeta < t
};

inline ScheduleValues schedule(long t, const ScheduleConfig& cfg) {
    expects(t >= 2, "schedule: t must be at least 2");
    ScheduleValues v;
    v.t = t;
    v.zeta = zeta(t, cfg.t0);
    const double e1 = eps1(v.zeta, cfg);
    v.eps1_at_zeta = cfg.scale * e1;
    v.delta1_at_zeta = delta1(v.zeta, cfg);
    v.eps_t = v.eps1_at_zeta;
    v.has_holdout = v.zeta < t;
    // delta0 keeps the paper's eps1: the scale knob only loosens the margin
    v.delta_t = v.delta1_at_zeta + (v.has_holdout ? 2.0 * delta0(t - v.zeta, e1, cfg.B) : 0.0);
    return v;
}

inline bool c_event(double g_hat, double h_hat, double eps_t, double delta_t, double B) {
    return g_hat + eps_t + B * delta_t <= (1.0 - delta_t) * (h_hat - eps_t);
}

// One schedule line: t, zeta, eps1(t), delta1(t), eps(t), delta(t).
inline std::string schedule_row(long t, const ScheduleConfig& cfg) {
    const ScheduleValues v = schedule(t, cfg);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%ld,%ld,%.12g,%.12g,%.12g,%.12g", t, v.zeta, cfg.scale * eps1(t, cfg), delta1(t, cfg),
                  v.eps_t, v.delta_t);
    return buf;
}

inline constexpr const char* kScheduleHeader = "t,zeta,eps1,delta1,eps,delta";

// ---------------------------------------------------------------------------

struct TraceRow {
    long t = 0;
    long zeta = 0;
    double g_hat = std::numeric_limits<double>::quiet_NaN();  // oriented units (B - cost for ski-rental)
    double h_hat = std::numeric_limits<double>::quiet_NaN();
    double eps_t = 0.0;
    double delta_t = 0.0;
    bool c_fired = false;
    bool chose_learned = false;
};

/// Replaces every threshold by the smallest support atom it admits
/// (accept-on-equal), or kNever. Two policies with equal canonical forms make
/// identical decisions on every realization whose values lie in `support`.
inline StoppingPolicy canonical_form(const StoppingPolicy& p, const std::vector<double>& support) {
    auto snap = [&](double level, TieRule tie) {
        auto it = tie == TieRule::accept_on_equal ? std::lower_bound(support.begin(), support.end(), level)
                                                  : std::upper_bound(support.begin(), support.end(), level);
        return it == support.end() ? kNever : *it;
    };
    auto fix = [&](ThresholdPolicy t) {
        if (t.keying == PrefixKeying::flat) {
            for (std::size_t i = 0; i < t.levels.size(); ++i) t.levels[i] = snap(t.levels[i], t.ties[i]);
        } else {
            for (auto& [key, lv] : t.keyed) lv = snap(lv, t.ties[key.size() - 1]);
        }
        std::fill(t.ties.begin(), t.ties.end(), TieRule::accept_on_equal);
        return t;
    };
    if (const auto* t = std::get_if<ThresholdPolicy>(&p)) return fix(*t);
    if (const auto* e = std::get_if<EssentiallyThresholdPolicy>(&p)) return EssentiallyThresholdPolicy{fix(e->inner)};
    return p;
}

inline std::vector<double> support_union(const Instance& inst) {
    std::vector<double> s;
    for (const auto& d : inst.dists())
        for (const Atom& a : d.atoms()) s.push_back(a.value);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

/// Running sum of a policy's oriented profit over history[lo, hi). When the
/// policy (canonically) and the window only slide forward, the sum is updated
/// in place; randomized policies are always re-evaluated with fresh draws.
class WindowSum {
public:
    double mean(const RandomizedPolicy& policy, const std::optional<StoppingPolicy>& canon,
                std::span<const RoundRealization> history, std::size_t lo, std::size_t hi, const ProfitKind& kind,
                Rng& rng) {
        expects(lo < hi && hi <= history.size(), "WindowSum: empty or out-of-range window");
        const int n = static_cast<int>(history.front().x.size());
        auto term = [&](const StoppingPolicy& p, const RoundRealization& r) {
            return oriented(kind, n, run_policy(p, r, kind).profit);
        };
        if (!canon) {
            valid_ = false;
            double s = 0.0;
            for (std::size_t k = lo; k < hi; ++k) s += term(draw(policy, rng), history[k]);
            return s / static_cast<double>(hi - lo);
        }
        if (valid_ && *canon == key_ && lo >= lo_ && lo <= hi_ && hi >= hi_) {
            for (std::size_t k = lo_; k < lo; ++k) sum_ -= term(key_, history[k]);
            for (std::size_t k = hi_; k < hi; ++k) sum_ += term(key_, history[k]);
        } else {
            key_ = *canon;
            sum_ = 0.0;
            for (std::size_t k = lo; k < hi; ++k) sum_ += term(key_, history[k]);
        }
        valid_ = true;
        lo_ = lo;
        hi_ = hi;
        return sum_ / static_cast<double>(hi - lo);
    }

private:
    bool valid_ = false;
    StoppingPolicy key_;
    std::size_t lo_ = 0;
    std::size_t hi_ = 0;
    double sum_ = 0.0;
};

struct Selection {
    RandomizedPolicy policy;
    TraceRow row;
};

/// h*_t. Stateful only for speed: it caches the learned marginals, the built
/// policies and hold-out sums between consecutive rounds. It assumes the
/// history is append-only across calls and that every sample value lies in
/// the support of `shape` (true for histories drawn from `shape`); any other
/// call pattern falls back to a full rebuild.
class AdaptiveSelector {
public:
    AdaptiveSelector(Instance shape, BaselineFamily family, ScheduleConfig cfg,
                     EmpiricalMode mode = EmpiricalMode::marginal_dp)
        : shape_(std::move(shape)), family_(family), cfg_(cfg), mode_(mode), support_(support_union(shape_)),
          marginals_(shape_.n(), shape_.iid()) {
        cfg_.validate();
    }

    Selection select(long t, std::span<const RoundRealization> history, Rng& rng) {
        expects(t >= 1 && history.size() == static_cast<std::size_t>(t - 1), "AdaptiveSelector: history must hold t-1 rounds");
        TraceRow row;
        row.t = t;
        if (t == 1) {
            row.zeta = 1;
            return {baseline_distribution(family_, 1, history, shape_), row};
        }
        const ScheduleValues sv = schedule(t, cfg_);
        row.zeta = sv.zeta;
        row.eps_t = sv.eps_t;
        row.delta_t = sv.delta_t;
        const auto train = static_cast<std::size_t>(sv.zeta - 1);
        rebuild(sv.zeta, history.first(train));
        if (sv.has_holdout && h_) {
            const std::size_t lo = train;
            const std::size_t hi = history.size();
            row.g_hat = g_sum_.mean(g_, g_canon_, history, lo, hi, shape_.profit(), rng);
            row.h_hat = h_sum_.mean(StoppingPolicy(*h_), h_canon_, history, lo, hi, shape_.profit(), rng);
            row.c_fired = c_event(row.g_hat, row.h_hat, sv.eps_t, sv.delta_t, cfg_.B);
        }
        row.chose_learned = row.c_fired;
        if (row.c_fired) return {StoppingPolicy(*h_), row};
        return {g_, row};
    }

    const ScheduleConfig& config() const { return cfg_; }
    // Policies compared in the most recent call.
    const RandomizedPolicy& baseline() const { return g_; }
    const std::optional<StoppingPolicy>& learned() const { return h_; }

private:
    void rebuild(long z, std::span<const RoundRealization> train) {
        if (built_zeta_ == z && train.size() == marginals_.rounds()) return;
        if (train.size() < marginals_.rounds()) marginals_ = EmpiricalMarginals(shape_.n(), shape_.iid());
        for (std::size_t k = marginals_.rounds(); k < train.size(); ++k) marginals_.add(train[k]);
        g_ = baseline_distribution(family_, z, train, shape_);
        g_canon_.reset();
        if (const auto* fixed = std::get_if<StoppingPolicy>(&g_)) g_canon_ = canonical_form(*fixed, support_);
        h_.reset();
        h_canon_.reset();
        if (!train.empty()) {
            h_ = mode_ == EmpiricalMode::marginal_dp ? optimal_policy(shape_.with_dists(marginals_.dists()))
                                                      : empirical_optimal_policy(train, shape_, mode_);
            h_canon_ = canonical_form(*h_, support_);
        }
        built_zeta_ = z;
    }

    Instance shape_;
    BaselineFamily family_;
    ScheduleConfig cfg_;
    EmpiricalMode mode_;
    std::vector<double> support_;
    EmpiricalMarginals marginals_;
    long built_zeta_ = 0;
    RandomizedPolicy g_;
    std::optional<StoppingPolicy> g_canon_;
    std::optional<StoppingPolicy> h_;
    std::optional<StoppingPolicy> h_canon_;
    WindowSum g_sum_;
    WindowSum h_sum_;
};

/// Stateless form: rebuilds everything from the history.
inline Selection adaptive_select(long t, std::span<const RoundRealization> history, const Instance& shape,
                                 BaselineFamily family, const ScheduleConfig& cfg, Rng& rng,
                                 EmpiricalMode mode = EmpiricalMode::marginal_dp) {
    AdaptiveSelector sel(shape, family, cfg, mode);
    return sel.select(t, history, rng);
}

}  // namespace rstop
