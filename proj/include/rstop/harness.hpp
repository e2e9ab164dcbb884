#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "rstop/baselines.hpp"
#include "rstop/core_model.hpp"
#include "rstop/optimal_dp.hpp"
#include "rstop/policies.hpp"
#include "rstop/switching.hpp"

namespace rstop {

enum class Selector { adaptive, baseline_only, learned_only, ftl };
enum class Estimator { realized, conditional };

inline Selector parse_selector(std::string_view s) {
    if (s == "adaptive") return Selector::adaptive;
    if (s == "baseline-only") return Selector::baseline_only;
    if (s == "learned-only") return Selector::learned_only;
    if (s == "ftl") return Selector::ftl;
    throw ConfigError("unknown selector: " + std::string(s));
}

inline const char* selector_name(Selector s) {
    switch (s) {
        case Selector::adaptive: return "adaptive";
        case Selector::baseline_only: return "baseline-only";
        case Selector::learned_only: return "learned-only";
        case Selector::ftl: return "ftl";
    }
    return "?";
}

inline Estimator parse_estimator(std::string_view s) {
    if (s == "realized") return Estimator::realized;
    if (s == "conditional") return Estimator::conditional;
    throw ConfigError("unknown estimator: " + std::string(s));
}

struct ExperimentConfig {
    Instance instance;
    long T = 1;
    long trials = 1;
    std::uint64_t seed = 0;
    Selector selector = Selector::adaptive;
    BaselineFamily family = BaselineFamily::prophet_ss;
    ScheduleConfig schedule{};
    Estimator estimator = Estimator::realized;
    EmpiricalMode mode = EmpiricalMode::marginal_dp;
    unsigned threads = 0;  // 0 = hardware concurrency; results do not depend on it

    void validate() const {
        if (T < 1) throw ConfigError("T must be >= 1");
        if (trials < 1) throw ConfigError("trials must be >= 1");
        if (!family_supports(family, instance.profit()))
            throw ConfigError(std::string("baseline family ") + family_name(family) + " does not fit profit " +
                              instance.profit().name());
        schedule.validate();
    }
};

// Schedule defaults derived from the instance: B and kappa.
inline ScheduleConfig default_schedule(const Instance& inst) {
    ScheduleConfig s;
    s.B = inst.bound();
    s.kappa = kappa_for(inst);
    return s;
}

struct RoundStats {
    long t = 0;
    double mean_profit = 0.0;
    double stderr_profit = 0.0;
    double comp_ratio = 0.0;
    double cum_regret = 0.0;
    double switch_rate = 0.0;
};

struct Report {
    std::vector<RoundStats> rounds;
    double opt_online = 0.0;
    Estimate opt_offline;
    double final_regret = 0.0;
    double final_regret_stderr = 0.0;  // across trials
    long T = 0;
    long trials = 0;
    std::uint64_t seed = 0;
    Selector selector = Selector::adaptive;
    double scale = 1.0;
};

namespace detail {

// Per-block accumulators; blocks are reduced in index order so the report is
// bit-identical for any thread count.
struct BlockAcc {
    std::vector<double> sum;
    std::vector<double> sumsq;
    std::vector<double> learned;
    double regret_sum = 0.0;
    double regret_sumsq = 0.0;
};

// Small memo of exact values of recently played policies.
class ValueMemo {
public:
    double get(const RandomizedPolicy& p, const Instance& inst) {
        for (const auto& [k, v] : slots_)
            if (k == p) return v;
        const double v = exact_policy_value(p, inst);
        if (slots_.size() == 4) slots_.erase(slots_.begin());
        slots_.emplace_back(p, v);
        return v;
    }

private:
    std::vector<std::pair<RandomizedPolicy, double>> slots_;
};

class TrialRunner {
public:
    TrialRunner(const ExperimentConfig& cfg, double opt_online)
        : cfg_(cfg), opt_online_(opt_online), support_(support_union(cfg.instance)) {}

    void run(long trial, BlockAcc& acc) {
        const Instance& inst = cfg_.instance;
        Rng env = make_stream(cfg_.seed, static_cast<std::uint64_t>(trial), Stream::environment);
        Rng pol = make_stream(cfg_.seed, static_cast<std::uint64_t>(trial), Stream::policy);
        std::vector<RoundRealization> history;
        history.reserve(static_cast<std::size_t>(cfg_.T));
        std::optional<AdaptiveSelector> adaptive;
        if (cfg_.selector == Selector::adaptive) adaptive.emplace(inst, cfg_.family, cfg_.schedule, cfg_.mode);
        EmpiricalMarginals marg(inst.n(), inst.iid());
        WindowSum g_in;
        WindowSum h_in;
        ValueMemo memo;
        double total = 0.0;

        for (long t = 1; t <= cfg_.T; ++t) {
            const std::span<const RoundRealization> past(history);
            RandomizedPolicy chosen;
            bool learned = false;
            auto learned_policy = [&]() -> StoppingPolicy {
                while (marg.rounds() < past.size()) marg.add(past[marg.rounds()]);
                if (cfg_.mode == EmpiricalMode::marginal_dp) return optimal_policy(inst.with_dists(marg.dists()));
                return empirical_optimal_policy(past, inst, cfg_.mode);
            };
            switch (cfg_.selector) {
                case Selector::adaptive: {
                    Selection s = adaptive->select(t, past, pol);
                    chosen = std::move(s.policy);
                    learned = s.row.chose_learned;
                    break;
                }
                case Selector::baseline_only: chosen = baseline_distribution(cfg_.family, t, past, inst); break;
                case Selector::learned_only:
                    if (t == 1) {
                        chosen = baseline_distribution(cfg_.family, 1, past, inst);
                    } else {
                        chosen = learned_policy();
                        learned = true;
                    }
                    break;
                case Selector::ftl: {
                    chosen = baseline_distribution(cfg_.family, t, past, inst);
                    if (t == 1) break;
                    const StoppingPolicy h = learned_policy();
                    std::optional<StoppingPolicy> g_canon;
                    if (const auto* f = std::get_if<StoppingPolicy>(&chosen)) g_canon = canonical_form(*f, support_);
                    const double g_hat = g_in.mean(chosen, g_canon, past, 0, past.size(), inst.profit(), pol);
                    const double h_hat =
                        h_in.mean(StoppingPolicy(h), canonical_form(h, support_), past, 0, past.size(), inst.profit(), pol);
                    if (h_hat > g_hat) {
                        chosen = h;
                        learned = true;
                    }
                    break;
                }
            }
            const RoundRealization r = sample_round(inst, env);
            double v;
            if (cfg_.estimator == Estimator::realized) {
                v = run_policy(draw(chosen, pol), r, inst.profit()).profit;
            } else {
                v = memo.get(canonical_randomized(chosen), inst);
            }
            const auto k = static_cast<std::size_t>(t - 1);
            acc.sum[k] += v;
            acc.sumsq[k] += v * v;
            if (learned) acc.learned[k] += 1.0;
            total += v;
            history.push_back(r);
        }
        const double regret = regret_sign() * (static_cast<double>(cfg_.T) * opt_online_ - total);
        acc.regret_sum += regret;
        acc.regret_sumsq += regret * regret;
    }

    double regret_sign() const { return cfg_.instance.profit().minimizes() ? -1.0 : 1.0; }

private:
    RandomizedPolicy canonical_randomized(const RandomizedPolicy& p) const {
        if (const auto* f = std::get_if<StoppingPolicy>(&p)) return canonical_form(*f, support_);
        return p;
    }

    const ExperimentConfig& cfg_;
    double opt_online_;
    std::vector<double> support_;
};

}  // namespace detail

inline constexpr long kTrialBlock = 64;

/// Runs cfg.trials independent repeated games of cfg.T rounds each and
/// aggregates per-round statistics. Deterministic in (cfg, seed).
inline Report run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Report rep;
    rep.opt_online = opt_online_value(cfg.instance);
    rep.opt_offline = opt_offline_value(cfg.instance);
    rep.T = cfg.T;
    rep.trials = cfg.trials;
    rep.seed = cfg.seed;
    rep.selector = cfg.selector;
    rep.scale = cfg.schedule.scale;

    const long blocks = (cfg.trials + kTrialBlock - 1) / kTrialBlock;
    const auto T = static_cast<std::size_t>(cfg.T);
    std::vector<detail::BlockAcc> acc(static_cast<std::size_t>(blocks));
    for (auto& a : acc) {
        a.sum.assign(T, 0.0);
        a.sumsq.assign(T, 0.0);
        a.learned.assign(T, 0.0);
    }
    detail::TrialRunner runner(cfg, rep.opt_online);
    std::atomic<long> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        try {
            for (long b; !failed && (b = next.fetch_add(1)) < blocks;) {
                const long end = std::min(cfg.trials, (b + 1) * kTrialBlock);
                for (long trial = b * kTrialBlock; trial < end; ++trial) runner.run(trial, acc[static_cast<std::size_t>(b)]);
            }
        } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
        }
    };
    unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<long>(workers, blocks));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    const double m = static_cast<double>(cfg.trials);
    const double sign = runner.regret_sign();
    double cum = 0.0;
    double rs = 0.0;
    double rss = 0.0;
    for (const auto& a : acc) {
        rs += a.regret_sum;
        rss += a.regret_sumsq;
    }
    for (std::size_t k = 0; k < T; ++k) {
        double s = 0.0;
        double ss = 0.0;
        double l = 0.0;
        for (const auto& a : acc) {
            s += a.sum[k];
            ss += a.sumsq[k];
            l += a.learned[k];
        }
        RoundStats st;
        st.t = static_cast<long>(k) + 1;
        st.mean_profit = s / m;
        const double var = cfg.trials > 1 ? std::max(0.0, (ss - s * s / m) / (m - 1.0)) : 0.0;
        st.stderr_profit = std::sqrt(var / m);
        st.comp_ratio = st.mean_profit / rep.opt_offline.value;
        cum += sign * (rep.opt_online - st.mean_profit);
        st.cum_regret = cum;
        st.switch_rate = l / m;
        rep.rounds.push_back(st);
    }
    rep.final_regret = cum;
    const double rvar = cfg.trials > 1 ? std::max(0.0, (rss - rs * rs / m) / (m - 1.0)) : 0.0;
    rep.final_regret_stderr = std::sqrt(rvar / m);
    return rep;
}

inline constexpr const char* kReportHeader = "t,mean_profit,stderr,comp_ratio,cum_regret,switch_rate";

inline void write_csv(std::ostream& os, const Report& rep) {
    os << kReportHeader << '\n';
    char buf[256];
    for (const auto& r : rep.rounds) {
        std::snprintf(buf, sizeof buf, "%ld,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.t, r.mean_profit, r.stderr_profit,
                      r.comp_ratio, r.cum_regret, r.switch_rate);
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// Lower-bound family on {0, 1/2, 1}.

struct LowerBoundInstances {
    Instance d0;
    Instance dplus;
    Instance dminus;
};

inline Instance lower_bound_instance(double p0, double p_half, double p1, const ProfitKind& kind) {
    const std::vector<double> v{0.0, 0.5, 1.0};
    const std::vector<double> p{p0, p_half, p1};
    const DiscreteDist d(v, p);
    return Instance({d, d}, OrderModel::adversarial(), kind);
}

inline LowerBoundInstances lower_bound_instances(double eps, const ProfitKind& kind = ProfitKind::reward()) {
    expects(eps > 0.0 && eps < 1.0 / 6.0, "lower_bound_instances: eps must lie in (0, 1/6)");
    expects(kind.type() == ProfitKind::Type::reward || kind.type() == ProfitKind::Type::best_choice,
            "lower_bound_instances: reward or best-choice only");
    const double third = 1.0 / 3.0;
    return {lower_bound_instance(third, third, third, kind), lower_bound_instance(third, third - eps, third + eps, kind),
            lower_bound_instance(third, third + eps, third - eps, kind)};
}

// h+ accepts only a first value of 1; h- accepts a first value >= 1/2.
inline StoppingPolicy lower_bound_policy(bool plus, const ProfitKind& kind) {
    ThresholdPolicy t = ThresholdPolicy::flat({plus ? 1.0 : 0.5, 0.0});
    if (kind.type() == ProfitKind::Type::best_choice) return EssentiallyThresholdPolicy{std::move(t)};
    return t;
}

// Closed-form loss of the wrong policy: (1/3 - eps) eps on D+, (1/3 + eps) eps on D-, halved for reward.
inline double lower_bound_gap(double eps, bool plus, const ProfitKind& kind) {
    const double g = (1.0 / 3.0 + (plus ? -eps : eps)) * eps;
    return kind.type() == ProfitKind::Type::reward ? g / 2.0 : g;
}

inline constexpr long kFtlCap = 5000;

/// Exact expected regret of follow-the-empirical-leader on the lower-bound
/// family with eps = 1/(8 sqrt T), environment uniform over {D+, D-}: at
/// round t play h+ iff the 1s among the t-1 past second-coordinate samples
/// are at least as many as the halves (ties half-and-half with split_ties).
inline double ftl_exact_regret(long T, const ProfitKind& kind = ProfitKind::reward(), bool split_ties = false) {
    expects(T >= 1, "ftl_exact_regret: T must be positive");
    if (T > kFtlCap) throw Refusal("ftl_exact_regret: T above cap");
    const double eps = 1.0 / (8.0 * std::sqrt(static_cast<double>(T)));
    const double third = 1.0 / 3.0;
    double regret = 0.0;
    for (bool plus : {true, false}) {
        const double p1 = third + (plus ? eps : -eps);
        const double ph = third + (plus ? -eps : eps);
        const double p0 = 1.0 - p1 - ph;
        const double gap = lower_bound_gap(eps, plus, kind);
        // law of D = #1s - #halves, offset by T
        std::vector<double> law(static_cast<std::size_t>(2 * T + 1), 0.0);
        std::vector<double> next(law.size(), 0.0);
        law[static_cast<std::size_t>(T)] = 1.0;
        for (long m = 0; m < T; ++m) {
            double below = 0.0;
            double tie = law[static_cast<std::size_t>(T)];
            for (long d = -m; d < 0; ++d) below += law[static_cast<std::size_t>(T + d)];
            const double above = std::max(0.0, 1.0 - below - tie);
            double wrong;
            if (plus) wrong = below + (split_ties ? 0.5 * tie : 0.0);
            else wrong = above + (split_ties ? 0.5 : 1.0) * tie;
            regret += 0.5 * gap * wrong;
            if (m + 1 == T) break;
            std::fill(next.begin(), next.end(), 0.0);
            for (long d = -m; d <= m; ++d) {
                const double w = law[static_cast<std::size_t>(T + d)];
                if (w == 0.0) continue;
                next[static_cast<std::size_t>(T + d + 1)] += w * p1;
                next[static_cast<std::size_t>(T + d - 1)] += w * ph;
                next[static_cast<std::size_t>(T + d)] += w * p0;
            }
            law.swap(next);
        }
    }
    return regret;
}

/// Least-squares slope of log(regret) against log(T). Nonpositive regrets are
/// dropped with a warning.
inline double fit_regret_exponent(const std::vector<std::pair<double, double>>& points) {
    expects(points.size() >= 3, "fit_regret_exponent: need at least 3 points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t k = 0;
    for (const auto& [t, r] : points) {
        if (!(r > 0.0) || !(t > 0.0)) {
            std::cerr << "warning: dropping point (T=" << t << ", regret=" << r << ") from exponent fit\n";
            continue;
        }
        const double x = std::log(t);
        const double y = std::log(r);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++k;
    }
    if (k < 2) throw ContractViolation("fit_regret_exponent: fewer than 2 usable points");
    const double kd = static_cast<double>(k);
    const double den = sxx - sx * sx / kd;
    expects(den > 0.0, "fit_regret_exponent: T values must differ");
    return (sxy - sx * sy / kd) / den;
}

// ---------------------------------------------------------------------------
// Two-coordinate instance where the single-sample baseline has linear regret:
// X1 = 1/2 surely, X2 = 1 with probability 1/2 + eps, else 0.

inline Instance counterexample_instance(double eps) {
    expects(eps > 0.0 && eps < 0.5, "counterexample_instance: eps must lie in (0, 1/2)");
    const std::vector<double> v{0.0, 1.0};
    const std::vector<double> p{0.5 - eps, 0.5 + eps};
    return Instance({DiscreteDist::point_mass(0.5), DiscreteDist(v, p)}, OrderModel::adversarial(), ProfitKind::reward());
}

// Rounds 2..T of the single-sample baseline: each loses eps with probability 1/2 - eps.
inline double counterexample_regret(double eps, long T) {
    return static_cast<double>(T - 1) * (eps / 2.0 - eps * eps);
}

}  // namespace rstop
