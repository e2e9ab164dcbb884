// rstop: command-line front end for repeated optimal-stopping experiments.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rstop/io.hpp"
#include "rstop/rstop.hpp"

using namespace rstop;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kOracleFailure = 3;

int cmd_simulate(const std::string& path) {
    const json j = read_json_file(path);
    const auto base = std::filesystem::path(path).parent_path().string();
    LoadedExperiment le = experiment_from_json(j, base.empty() ? "." : base);
    const Report rep = run_experiment(le.cfg);

    std::optional<double> slope;
    if (le.out.fit_exponent) {
        std::vector<std::pair<double, double>> pts;
        for (long div : {8L, 4L, 2L}) {
            ExperimentConfig c = le.cfg;
            c.T = std::max(1L, le.cfg.T / div);
            pts.emplace_back(static_cast<double>(c.T), run_experiment(c).final_regret);
        }
        pts.emplace_back(static_cast<double>(rep.T), rep.final_regret);
        slope = fit_regret_exponent(pts);
    }

    std::ofstream csv_file;
    if (!le.out.csv.empty()) {
        csv_file.open(le.out.csv);
        if (!csv_file) throw ConfigError("cannot write " + le.out.csv);
    }
    std::ostream& csv = le.out.csv.empty() ? std::cout : csv_file;
    write_csv(csv, rep);

    const std::string summary = summary_json(rep, slope).dump(2);
    if (!le.out.summary.empty()) {
        std::ofstream s(le.out.summary);
        if (!s) throw ConfigError("cannot write " + le.out.summary);
        s << summary << '\n';
    } else {
        (le.out.csv.empty() ? std::cerr : std::cout) << summary << '\n';
    }
    return kOk;
}

int cmd_lower_bound(long T, std::optional<double> eps_opt) {
    if (T < 1) throw ConfigError("--T must be >= 1");
    const double eps = eps_opt ? *eps_opt : 1.0 / (8.0 * std::sqrt(static_cast<double>(T)));
    if (!(eps > 0.0 && eps < 1.0 / 6.0)) throw ConfigError("--eps must lie in (0, 1/6)");
    json out{{"T", T}, {"eps", eps}};
    for (const ProfitKind& kind : {ProfitKind::reward(), ProfitKind::best_choice()}) {
        const LowerBoundInstances lb = lower_bound_instances(eps, kind);
        json k;
        for (bool plus : {true, false}) {
            const Instance& env = plus ? lb.dplus : lb.dminus;
            const double right = exact_policy_value(lower_bound_policy(plus, kind), env);
            const double wrong = exact_policy_value(lower_bound_policy(!plus, kind), env);
            k[plus ? "dplus" : "dminus"] = {{"opt_online", opt_online_value(env)},
                                            {"right_policy", right},
                                            {"wrong_policy", wrong},
                                            {"gap", right - wrong},
                                            {"gap_closed_form", lower_bound_gap(eps, plus, kind)},
                                            {"eps_over_12", eps / 12.0}};
        }
        out[kind.name()] = k;
    }
    if (T <= kFtlCap) {
        const double r = ftl_exact_regret(T);
        out["ftl_exact_regret"] = r;
        out["ftl_regret_over_sqrt_T"] = r / std::sqrt(static_cast<double>(T));
    }
    std::cout << out.dump(2) << '\n';
    return kOk;
}

int cmd_counterexample(double eps, long T, long trials, std::uint64_t seed, double scale, const std::string& estimator) {
    const Instance inst = counterexample_instance(eps);
    ExperimentConfig cfg{inst, T, trials, seed};
    cfg.schedule = default_schedule(inst);
    cfg.schedule.scale = scale;
    cfg.estimator = parse_estimator(estimator);
    json out{{"eps", eps}, {"T", T}, {"trials", trials}, {"seed", seed}, {"scale", scale},
             {"predicted_baseline_regret", counterexample_regret(eps, T)}};
    for (Selector s : {Selector::baseline_only, Selector::adaptive}) {
        cfg.selector = s;
        const Report rep = run_experiment(cfg);
        out[selector_name(s)] = {{"final_regret", rep.final_regret},
                                 {"final_regret_stderr", rep.final_regret_stderr},
                                 {"final_switch_rate", rep.rounds.back().switch_rate}};
    }
    std::cout << out.dump(2) << '\n';
    return kOk;
}

int cmd_schedule(long t_max, const std::string& variant, double scale, int t0, std::optional<long long> kappa,
                 double B, const std::string& form) {
    ScheduleConfig cfg;
    cfg.t0 = t0;
    cfg.scale = scale;
    cfg.B = B;
    cfg.kappa = kappa.value_or(2);
    if (variant == "pi-refined") cfg.variant = ScheduleVariant::pi_refined;
    else if (variant != "general") throw ConfigError("--variant must be general or pi-refined");
    if (form == "corollary") cfg.delta1_form = Delta1Form::corollary;
    else if (form != "theorem") throw ConfigError("--delta1-form must be theorem or corollary");
    cfg.validate();
    if (t_max < 2) throw ConfigError("--t-max must be >= 2");
    std::cout << kScheduleHeader << '\n';
    for (long t = 2; t <= t_max; ++t) std::cout << schedule_row(t, cfg) << '\n';
    return kOk;
}

int cmd_verify_oracle(std::uint64_t seed) {
    double worst = 0.0;
    const auto bad = check_dp_against_brute_force(seed, 200, 1e-10, &worst);
    for (const auto& m : bad)
        std::fprintf(stderr, "mismatch on instance %d: dp=%.17g brute=%.17g\n", m.index, m.dp, m.brute);
    // ftl recursion against the lower-bound closed form at T = 1
    const double eps = 1.0 / 8.0;
    const double expect_t1 = 0.5 * lower_bound_gap(eps, false, ProfitKind::reward());
    const bool ftl_ok = std::abs(ftl_exact_regret(1) - expect_t1) <= 1e-15;
    std::printf("dp-vs-brute-force: %zu/200 mismatches, max |diff| = %.3g\n", bad.size(), worst);
    std::printf("ftl T=1 closed form: %s\n", ftl_ok ? "ok" : "FAIL");
    return bad.empty() && ftl_ok ? kOk : kOracleFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repeated optimal stopping: exact values, baselines, switching experiments"};
    app.require_subcommand(1);

    std::string config;
    auto* sim = app.add_subcommand("simulate", "Run an experiment described by a JSON config");
    sim->add_option("config", config, "Experiment config (JSON)")->required();

    long lb_T = 0;
    std::optional<double> lb_eps;
    auto* lb = app.add_subcommand("lower-bound", "Exact values and gaps of the lower-bound family");
    lb->add_option("--T", lb_T, "Horizon (sets eps = 1/(8 sqrt T) unless --eps is given)")->required();
    lb->add_option("--eps", lb_eps, "Perturbation eps in (0, 1/6)");

    double ce_eps = 0.25;
    long ce_T = 0;
    long ce_trials = 200;
    std::uint64_t ce_seed = 1;
    double ce_scale = 1.0;
    std::string ce_estimator = "conditional";
    auto* ce = app.add_subcommand("counterexample", "Single-sample baseline with linear regret");
    ce->add_option("--eps", ce_eps, "eps in (0, 1/2)")->required();
    ce->add_option("--T", ce_T, "Rounds")->required();
    ce->add_option("--trials", ce_trials, "Trials");
    ce->add_option("--seed", ce_seed, "Seed");
    ce->add_option("--scale", ce_scale, "Multiplier on eps1 for the adaptive run");
    ce->add_option("--estimator", ce_estimator, "realized | conditional");

    long t_max = 0;
    std::string variant = "general";
    double sc_scale = 1.0;
    int t0 = 1;
    std::optional<long long> kappa;
    double B = 1.0;
    std::string form = "theorem";
    auto* sc = app.add_subcommand("schedule", "Print the eps/delta schedule");
    sc->add_option("--t-max", t_max, "Last round")->required();
    sc->add_option("--variant", variant, "general | pi-refined");
    sc->add_option("--scale", sc_scale, "Multiplier on eps1");
    sc->add_option("--t0", t0, "t0 >= 1");
    sc->add_option("--kappa", kappa, "kappa (default 2)");
    sc->add_option("--B", B, "Profit bound B");
    sc->add_option("--delta1-form", form, "theorem | corollary");

    std::uint64_t vo_seed = 1;
    auto* vo = app.add_subcommand("verify-oracle", "Check the DP against brute force on random instances");
    vo->add_option("--seed", vo_seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*sim) return cmd_simulate(config);
        if (*lb) return cmd_lower_bound(lb_T, lb_eps);
        if (*ce) return cmd_counterexample(ce_eps, ce_T, ce_trials, ce_seed, ce_scale, ce_estimator);
        if (*sc) return cmd_schedule(t_max, variant, sc_scale, t0, kappa, B, form);
        if (*vo) return cmd_verify_oracle(vo_seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ContractViolation& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kConfigError;
    } catch (const Refusal& e) {
        std::cerr << "refused: " << e.what() << '\n';
        return kConfigError;
    }
    return kOk;
}
