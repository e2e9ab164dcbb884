// Acceptance suite: one PASS/FAIL line per criterion. Every experiment uses
// seed 1, fixed before any run. Pass criterion numbers as arguments to run a
// subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rstop/rstop.hpp"
#include "support.hpp"

using namespace rstop;
using namespace rstop::testing;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Instance uniform01_pair() {
    const std::vector<double> v{0.0, 1.0};
    const auto d = DiscreteDist::uniform(v);
    return Instance({d, d}, OrderModel::adversarial(), ProfitKind::reward());
}

ExperimentConfig experiment(const Instance& inst, Selector sel, long T, long trials) {
    ExperimentConfig c{inst, T, trials, kSeed, sel};
    c.schedule = default_schedule(inst);
    return c;
}

// 1. DP threshold policies are optimal among all online policies.
Outcome threshold_optimality() {
    constexpr double kTol = 1e-10;
    constexpr double kMaxSeconds = 30.0;
    const auto t0 = Clock::now();
    double worst = 0.0;
    const auto bad = check_dp_against_brute_force(kSeed, 200, kTol, &worst);
    const double secs = seconds_since(t0);
    return {bad.empty() && secs < kMaxSeconds,
            fmt("200 instances, max |dp - brute force| = %.3g (tol %.0e), %.2f s (limit %.0f s)", worst, kTol, secs,
                kMaxSeconds)};
}

// 2. Lower-bound gaps from exact DP equal their closed forms.
Outcome lower_bound_gaps() {
    constexpr double kTol = 1e-12;
    bool ok = true;
    double worst = 0.0;
    double min_margin = 1e9;
    for (double eps : {0.05, 0.1, 0.15})
        for (const ProfitKind& kind : {ProfitKind::reward(), ProfitKind::best_choice()}) {
            const auto lb = lower_bound_instances(eps, kind);
            for (bool plus : {true, false}) {
                const Instance& env = plus ? lb.dplus : lb.dminus;
                const double gap = opt_online_value(env) - exact_policy_value(lower_bound_policy(!plus, kind), env);
                const double diff = std::abs(gap - lower_bound_gap(eps, plus, kind));
                worst = std::max(worst, diff);
                min_margin = std::min(min_margin, gap - eps / 12.0);
                ok = ok && diff <= kTol && gap >= eps / 12.0;
            }
        }
    return {ok, fmt("max |gap - closed form| = %.3g (tol %.0e), min(gap - eps/12) = %.4g", worst, kTol, min_margin)};
}

// 3. Single-sample baseline has linear regret on the counterexample.
Outcome counterexample() {
    constexpr double kTarget = 124.94;
    constexpr double kLo = 0.9, kHi = 1.1;
    constexpr double kMaxSeconds = 60.0;
    const auto t0 = Clock::now();
    ExperimentConfig c = experiment(counterexample_instance(0.25), Selector::baseline_only, 2000, 200);
    c.estimator = Estimator::conditional;
    const Report r = run_experiment(c);
    const double secs = seconds_since(t0);
    const bool ok = r.final_regret >= kLo * kTarget && r.final_regret <= kHi * kTarget && secs < kMaxSeconds;
    return {ok, fmt("regret %.2f +- %.2f (se), window [%.2f, %.2f], %.1f s", r.final_regret, r.final_regret_stderr,
                    kLo * kTarget, kHi * kTarget, secs)};
}

struct PaperScaleRuns {
    Instance inst;
    Report adaptive;
    Report baseline;
};

std::vector<PaperScaleRuns>& paper_scale_runs() {
    static std::vector<PaperScaleRuns> runs = [] {
        std::vector<PaperScaleRuns> out;
        for (const Instance& inst : {uniform01_pair(), counterexample_instance(0.25)}) {
            const Report a = run_experiment(experiment(inst, Selector::adaptive, 200, 20000));
            const Report b = run_experiment(experiment(inst, Selector::baseline_only, 200, 20000));
            out.push_back({inst, a, b});
        }
        return out;
    }();
    return runs;
}

// 4. Per-round competitive ratios of the adaptive selector.
Outcome per_round_ratio() {
    constexpr double kSigmas = 3.0;
    bool ok = true;
    std::string detail;
    for (const auto& run : paper_scale_runs()) {
        const double off = run.adaptive.opt_offline.value;
        const auto& r1 = run.adaptive.rounds[0];
        const double n = run.inst.n();
        ok = ok && r1.mean_profit >= off / n - kSigmas * r1.stderr_profit;
        double worst = 1e9;
        for (std::size_t k = 1; k < 100; ++k) {
            const auto& r = run.adaptive.rounds[k];
            worst = std::min(worst, r.mean_profit - (0.5 * off - kSigmas * r.stderr_profit));
        }
        ok = ok && worst >= 0.0;
        detail += fmt("[round 1: %.4f vs %.4f; rounds 2..100 min slack %.4f] ", r1.mean_profit, off / n, worst);
    }
    return {ok, "20000 trials x 2 instances " + detail};
}

// 5. Adaptive never does worse than the baseline it guards.
Outcome dominance() {
    constexpr double kSigmas = 3.0;
    bool ok = true;
    bool identical = true;
    double worst = 1e9;
    for (const auto& run : paper_scale_runs())
        for (std::size_t k = 0; k < 200; ++k) {
            const auto& a = run.adaptive.rounds[k];
            const auto& b = run.baseline.rounds[k];
            worst = std::min(worst, a.mean_profit - (b.mean_profit - kSigmas * b.stderr_profit));
            identical = identical && a.mean_profit == b.mean_profit && a.switch_rate == 0.0;
        }
    ok = worst >= 0.0 && identical;
    return {ok, fmt("t <= 200, min slack vs baseline - 3 sigma %.4f; traces identical: %s", worst, identical ? "yes" : "no")};
}

// 6. Scaled schedule: sublinear regret and a clear win over the baseline.
Outcome sublinear_regret() {
    constexpr double kMaxExponent = 0.9;
    constexpr double kMaxRatio = 0.6;
    constexpr double kMaxSeconds = 600.0;
    const auto t0 = Clock::now();
    const Instance inst = counterexample_instance(0.25);
    std::vector<std::pair<double, double>> pts;
    double final_adaptive = 0.0;
    std::string detail;
    for (long T : {500L, 1000L, 2000L, 4000L}) {
        ExperimentConfig c = experiment(inst, Selector::adaptive, T, 200);
        c.schedule.scale = 0.01;
        c.estimator = Estimator::conditional;
        const Report r = run_experiment(c);
        pts.emplace_back(static_cast<double>(T), r.final_regret);
        final_adaptive = r.final_regret;
        detail += fmt("R(%ld)=%.2f ", T, r.final_regret);
    }
    ExperimentConfig b = experiment(inst, Selector::baseline_only, 4000, 200);
    b.estimator = Estimator::conditional;
    const double baseline = run_experiment(b).final_regret;
    const double slope = fit_regret_exponent(pts);
    const double secs = seconds_since(t0);
    const bool ok = slope < kMaxExponent && final_adaptive <= kMaxRatio * baseline && secs < kMaxSeconds;
    return {ok, detail + fmt("exponent %.3f (< %.1f), adaptive/baseline at 4000 = %.2f/%.2f = %.3f (<= %.1f), %.0f s",
                             slope, kMaxExponent, final_adaptive, baseline, final_adaptive / baseline, kMaxRatio, secs)};
}

// 7. Follow-the-leader regret grows like sqrt(T).
Outcome ftl_sqrt() {
    constexpr double kLo = 1.7, kHi = 2.3;
    constexpr double kMaxSeconds = 60.0;
    const auto t0 = Clock::now();
    const double r100 = ftl_exact_regret(100), r400 = ftl_exact_regret(400), r1600 = ftl_exact_regret(1600);
    const double a = r400 / r100, b = r1600 / r400;
    const double secs = seconds_since(t0);
    return {a >= kLo && a <= kHi && b >= kLo && b <= kHi && secs < kMaxSeconds,
            fmt("r(400)/r(100) = %.4f, r(1600)/r(400) = %.4f, window [%.1f, %.1f], %.2f s", a, b, kLo, kHi, secs)};
}

// 8. Baseline guarantees by Monte Carlo.
Outcome baseline_guarantees() {
    constexpr long kTrials = 50000;
    constexpr double kSigmas = 3.0;
    bool ok = true;
    std::string detail;
    Rng rng(mix64(kSeed));
    double worst = 1e9;
    for (int k = 0; k < 3; ++k) {
        const Instance inst = random_instance(rng, 3, 3, ProfitKind::best_choice());
        const auto mc = mc_baseline(inst, BaselineFamily::secretary_ss, 2, kTrials, kSeed + k);
        worst = std::min(worst, mc.mean - (0.25 * opt_offline_value(inst).value - kSigmas * mc.se));
    }
    ok = ok && worst >= 0.0;
    detail += fmt("secretary_ss slack %.4f; ", worst);

    worst = 1e9;
    for (int k = 0; k < 3; ++k) {
        const Instance inst = random_instance(rng, 5, 2, ProfitKind::last_success());
        const auto mc = mc_baseline(inst, BaselineFamily::last_success_ss, 2, kTrials, kSeed + 10 + k);
        worst = std::min(worst, mc.mean - (0.25 * opt_offline_value(inst).value - kSigmas * mc.se));
    }
    ok = ok && worst >= 0.0;
    detail += fmt("last_success_ss slack %.4f; ", worst);

    const Instance sec = distinct_point_masses(10, OrderModel::random_order());
    const auto cs = mc_policy(sec, classical_secretary(10), kTrials, kSeed + 20);
    ok = ok && cs.mean >= 1.0 / std::numbers::e - 0.03;
    detail += fmt("classical secretary %.4f (>= %.4f); ", cs.mean, 1.0 / std::numbers::e - 0.03);

    const double bound = std::numbers::e / (std::numbers::e - 1.0) + 0.05;
    double worst_ratio = 0.0;
    for (int n : {2, 4, 8}) {
        const Instance inst = rents_instance(n, 4.0);
        const auto mc = mc_baseline(inst, BaselineFamily::ski_rental_rand, 3, kTrials, kSeed + 30 + n);
        worst_ratio = std::max(worst_ratio, mc.mean / opt_offline_value(inst).value);
    }
    ok = ok && worst_ratio <= bound;
    detail += fmt("ski-rental max cost ratio %.4f (<= %.4f)", worst_ratio, bound);
    return {ok, detail};
}

// 9. Exhaustive empirical argmax vs the marginal DP.
Outcome empirical_oracle() {
    Rng rng(mix64(kSeed + 9));
    int within = 0;
    bool dominance_ok = true;
    const int cases = 50;
    for (int k = 0; k < cases; ++k) {
        const OrderModel order = k % 2 ? OrderModel::random_order() : OrderModel::adversarial();
        const Instance inst = random_instance(rng, 2, 3, profit_by_index(k), order);
        const long t = 2 + static_cast<long>(uniform_index(rng, 19));
        std::vector<RoundRealization> s;
        for (long i = 0; i < t; ++i) s.push_back(sample_round(inst, rng));
        const auto m = empirical_optimal_policy(s, inst);
        const auto j = empirical_optimal_policy(s, inst, EmpiricalMode::joint_exhaustive);
        const double sgn = inst.profit().minimizes() ? -1.0 : 1.0;
        dominance_ok = dominance_ok &&
                       sgn * empirical_value(j, s, inst.profit()) >= sgn * empirical_value(m, s, inst.profit()) - 1e-12;
        const double opt = opt_online_value(inst);
        const double e = eps1(t, default_schedule(inst));
        within += std::abs(exact_policy_value(m, inst) - opt) <= e && std::abs(exact_policy_value(j, inst) - opt) <= e;
    }
    const double frac = static_cast<double>(within) / cases;
    return {dominance_ok && frac >= 0.95,
            fmt("joint >= marginal on samples: %s; both within eps1(t) of opt in %.0f%% (need 95%%)",
                dominance_ok ? "all" : "NO", 100 * frac)};
}

// 10. Printed schedule against 50-digit recomputation.
Outcome schedule_tables() {
    int checked = 0, bad = 0;
    for (auto variant : {ScheduleVariant::general, ScheduleVariant::pi_refined})
        for (auto form : {Delta1Form::theorem, Delta1Form::corollary})
            for (long t : {2L, 3L, 10L, 101L, 10000L}) {
                ScheduleConfig c;
                c.kappa = 2;
                c.variant = variant;
                c.delta1_form = form;
                std::istringstream row(schedule_row(t, c));
                std::vector<std::string> cell;
                for (std::string x; std::getline(row, x, ',');) cell.push_back(x);
                const long z = zeta(t, c.t0);
                const bool ok = cell.size() == 6 && std::stol(cell[0]) == t && std::stol(cell[1]) == z &&
                                agrees12(std::stod(cell[2]), big_eps1(t, c)) &&
                                agrees12(std::stod(cell[3]), big_delta1(t, c)) &&
                                agrees12(std::stod(cell[4]), big_eps1(z, c)) && agrees12(std::stod(cell[5]), big_delta(t, c));
                ++checked;
                bad += !ok;
                if (!ok) std::fprintf(stderr, "schedule mismatch: %s\n", schedule_row(t, c).c_str());
            }
    return {bad == 0, fmt("%d rows x 6 columns checked at 12 significant digits, %d mismatches", checked, bad)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"threshold optimality", threshold_optimality},
        {"lower-bound closed forms", lower_bound_gaps},
        {"counterexample linear regret", counterexample},
        {"per-round competitive ratio", per_round_ratio},
        {"dominance over baseline", dominance},
        {"sublinear regret, scaled schedule", sublinear_regret},
        {"sqrt(T) lower-bound oracle", ftl_sqrt},
        {"baseline guarantees", baseline_guarantees},
        {"empirical-argmax oracle", empirical_oracle},
        {"schedule arithmetic", schedule_tables},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s  %2d  %-36s %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
