#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rstop/core_model.hpp"
#include "rstop/harness.hpp"
#include "rstop/policies.hpp"
#include "rstop/switching.hpp"

namespace rstop {

using json = nlohmann::json;

namespace detail {

template <typename T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad field '") + key + "': " + e.what());
    }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? field<T>(j, key) : fallback;
}

inline json level_to_json(double v) { return std::isinf(v) ? json("inf") : json(v); }

inline double level_from_json(const json& j) {
    if (j.is_string() && j.get<std::string>() == "inf") return kNever;
    if (!j.is_number()) throw ConfigError("threshold level must be a number or \"inf\"");
    return j.get<double>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Instances. Permutations in files are 1-based.

inline ProfitKind profit_from_json(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "reward") return ProfitKind::reward();
        if (s == "best_choice") return ProfitKind::best_choice();
        if (s == "last_success") return ProfitKind::last_success();
        throw ConfigError("unknown profit kind: " + s);
    }
    if (j.is_object() && j.contains("ski_rental")) {
        const double b = detail::field<double>(j.at("ski_rental"), "b");
        if (!(b > 0.0)) throw ConfigError("ski_rental.b must be positive");
        return ProfitKind::ski_rental(b);
    }
    throw ConfigError("profit must be a kind name or {\"ski_rental\": {\"b\": ...}}");
}

inline json profit_to_json(const ProfitKind& k) {
    if (k.type() == ProfitKind::Type::ski_rental) return {{"ski_rental", {{"b", k.buy_cost()}}}};
    return k.name();
}

inline OrderModel order_from_json(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "adversarial") return OrderModel::adversarial();
        if (s == "random") return OrderModel::random_order();
        throw ConfigError("unknown order model: " + s);
    }
    if (j.is_object() && j.contains("explicit") && j.at("explicit").is_array()) {
        std::vector<WeightedPerm> perms;
        for (const auto& e : j.at("explicit")) {
            auto p = detail::field<std::vector<int>>(e, "perm");
            for (int& v : p) --v;
            perms.push_back({std::move(p), detail::field<double>(e, "prob")});
        }
        return OrderModel::explicit_perms(std::move(perms));
    }
    throw ConfigError("order must be \"adversarial\", \"random\" or {\"explicit\": [...]}");
}

inline json order_to_json(const OrderModel& o) {
    switch (o.kind()) {
        case OrderModel::Kind::adversarial: return "adversarial";
        case OrderModel::Kind::random: return "random";
        case OrderModel::Kind::explicit_list: {
            json list = json::array();
            for (const auto& wp : o.explicit_support()) {
                std::vector<int> p = wp.perm;
                for (int& v : p) ++v;
                list.push_back({{"perm", p}, {"prob", wp.prob}});
            }
            return {{"explicit", list}};
        }
    }
    return nullptr;
}

inline Instance instance_from_json(const json& j) {
    try {
        const auto n = detail::field<int>(j, "n");
        const json& dj = j.at("dists");
        if (!dj.is_array() || static_cast<int>(dj.size()) != n) throw ConfigError("dists must be an array of length n");
        std::vector<DiscreteDist> dists;
        for (const auto& d : dj)
            dists.emplace_back(detail::field<std::vector<double>>(d, "values"), detail::field<std::vector<double>>(d, "probs"));
        Instance inst(std::move(dists), order_from_json(j.at("order")), profit_from_json(j.at("profit")));
        if (!detail::field_or<bool>(j, "iid", true)) inst = inst.without_iid_flag();
        return inst;
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("invalid instance: ") + e.what());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid instance: ") + e.what());
    }
}

inline json instance_to_json(const Instance& inst) {
    json dists = json::array();
    for (const auto& d : inst.dists()) {
        std::vector<double> v, p;
        for (const Atom& a : d.atoms()) {
            v.push_back(a.value);
            p.push_back(a.prob);
        }
        dists.push_back({{"values", v}, {"probs", p}});
    }
    return {{"n", inst.n()}, {"profit", profit_to_json(inst.profit())}, {"order", order_to_json(inst.order())}, {"dists", dists}};
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Policies.

inline json policy_to_json(const StoppingPolicy& p) {
    auto thresholds = [](const ThresholdPolicy& t) {
        json j;
        j["ties"] = json::array();
        for (TieRule r : t.ties) j["ties"].push_back(r == TieRule::strict ? "strict" : "accept_on_equal");
        if (t.keying == PrefixKeying::flat) {
            j["keying"] = "flat";
            j["levels"] = json::array();
            for (double v : t.levels) j["levels"].push_back(detail::level_to_json(v));
        } else {
            j["keying"] = t.keying == PrefixKeying::full_prefix ? "full_prefix" : "set_and_last";
            j["keyed"] = json::array();
            for (const auto& [key, v] : t.keyed) {
                std::vector<int> k = key;
                for (int& x : k) ++x;
                j["keyed"].push_back({{"prefix", k}, {"level", detail::level_to_json(v)}});
            }
        }
        return j;
    };
    return std::visit(
        [&](const auto& q) -> json {
            using P = std::decay_t<decltype(q)>;
            if constexpr (std::is_same_v<P, ThresholdPolicy>) {
                json j = thresholds(q);
                j["type"] = "threshold";
                return j;
            } else if constexpr (std::is_same_v<P, EssentiallyThresholdPolicy>) {
                return {{"type", "essentially_threshold"}, {"inner", thresholds(q.inner)}};
            } else if constexpr (std::is_same_v<P, ObservationRankPolicy>) {
                return {{"type", "observation_rank"}, {"cutoff", q.cutoff}};
            } else if constexpr (std::is_same_v<P, IndexGatePolicy>) {
                return {{"type", "index_gate"}, {"gate", q.gate + 1}};
            } else if constexpr (std::is_same_v<P, CumulativeCostPolicy>) {
                return {{"type", "cumulative_cost"}, {"level", q.level}};
            } else {
                return {{"type", "uniform_pick"}, {"chosen", q.chosen + 1}};
            }
        },
        p);
}

inline StoppingPolicy policy_from_json(const json& j) {
    auto thresholds = [](const json& t) {
        ThresholdPolicy p;
        for (const auto& r : t.at("ties")) p.ties.push_back(r.get<std::string>() == "strict" ? TieRule::strict : TieRule::accept_on_equal);
        const auto keying = t.at("keying").get<std::string>();
        if (keying == "flat") {
            for (const auto& v : t.at("levels")) p.levels.push_back(detail::level_from_json(v));
            if (p.levels.size() != p.ties.size()) throw ConfigError("policy: levels and ties differ in length");
            return p;
        }
        if (keying == "full_prefix") p.keying = PrefixKeying::full_prefix;
        else if (keying == "set_and_last") p.keying = PrefixKeying::set_and_last;
        else throw ConfigError("policy: unknown keying " + keying);
        for (const auto& e : t.at("keyed")) {
            auto k = e.at("prefix").get<std::vector<int>>();
            for (int& x : k) --x;
            p.keyed[k] = detail::level_from_json(e.at("level"));
        }
        return p;
    };
    try {
        const auto type = detail::field<std::string>(j, "type");
        if (type == "threshold") return thresholds(j);
        if (type == "essentially_threshold") return EssentiallyThresholdPolicy{thresholds(j.at("inner"))};
        if (type == "observation_rank") return ObservationRankPolicy{detail::field<int>(j, "cutoff")};
        if (type == "index_gate") return IndexGatePolicy{detail::field<int>(j, "gate") - 1};
        if (type == "cumulative_cost") return CumulativeCostPolicy{detail::field<double>(j, "level")};
        if (type == "uniform_pick") return UniformPickPolicy{detail::field<int>(j, "chosen") - 1};
        throw ConfigError("policy: unknown type " + type);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("policy: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Experiment configs.

struct OutputSpec {
    std::string csv;      // empty = stdout
    std::string summary;  // empty = stdout, or stderr when the CSV goes to stdout
    bool fit_exponent = false;
};

struct LoadedExperiment {
    ExperimentConfig cfg;
    OutputSpec out;
};

inline LoadedExperiment experiment_from_json(const json& j, const std::string& base_dir = ".") {
    try {
        Instance inst = [&] {
            if (j.contains("instance")) {
                const json& ij = j.at("instance");
                if (ij.is_string()) {
                    std::string path = ij.get<std::string>();
                    if (!path.empty() && path.front() != '/') path = base_dir + "/" + path;
                    return instance_from_json(read_json_file(path));
                }
                return instance_from_json(ij);
            }
            throw ConfigError("missing field 'instance'");
        }();
        ScheduleConfig sched = default_schedule(inst);
        if (j.contains("schedule")) {
            const json& s = j.at("schedule");
            sched.t0 = detail::field_or<int>(s, "t0", sched.t0);
            sched.scale = detail::field_or<double>(s, "scale", sched.scale);
            sched.B = detail::field_or<double>(s, "B", sched.B);
            sched.kappa = detail::field_or<long long>(s, "kappa", sched.kappa);
            const auto variant = detail::field_or<std::string>(s, "variant", "general");
            if (variant == "pi-refined") sched.variant = ScheduleVariant::pi_refined;
            else if (variant != "general") throw ConfigError("schedule.variant must be general or pi-refined");
            const auto form = detail::field_or<std::string>(s, "delta1_form", "theorem");
            if (form == "corollary") sched.delta1_form = Delta1Form::corollary;
            else if (form != "theorem") throw ConfigError("schedule.delta1_form must be theorem or corollary");
        }
        const auto mode = detail::field_or<std::string>(j, "empirical_mode", "marginal-dp");
        EmpiricalMode em;
        if (mode == "marginal-dp") em = EmpiricalMode::marginal_dp;
        else if (mode == "joint-exhaustive") em = EmpiricalMode::joint_exhaustive;
        else throw ConfigError("empirical_mode must be marginal-dp or joint-exhaustive");

        const auto seed = detail::field_or<std::uint64_t>(j, "seed", 0);
        ExperimentConfig cfg{std::move(inst),
                             detail::field<long>(j, "T"),
                             detail::field_or<long>(j, "trials", 1),
                             seed,
                             parse_selector(detail::field_or<std::string>(j, "selector", "adaptive")),
                             parse_family(detail::field_or<std::string>(j, "family", "prophet_ss")),
                             sched,
                             parse_estimator(detail::field_or<std::string>(j, "estimator", "realized")),
                             em,
                             detail::field_or<unsigned>(j, "threads", 0)};
        cfg.validate();
        OutputSpec out{detail::field_or<std::string>(j, "output", ""), detail::field_or<std::string>(j, "summary", ""),
                       detail::field_or<bool>(j, "fit_exponent", false)};
        return {std::move(cfg), std::move(out)};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid experiment config: ") + e.what());
    }
}

inline json summary_json(const Report& rep, std::optional<double> fitted_exponent = std::nullopt) {
    json j{{"opt_online", rep.opt_online},
           {"opt_offline", rep.opt_offline.value},
           {"T", rep.T},
           {"trials", rep.trials},
           {"seed", rep.seed},
           {"selector", selector_name(rep.selector)},
           {"scale", rep.scale},
           {"final_regret", rep.final_regret}};
    if (!rep.opt_offline.exact) {
        j["opt_offline_stderr"] = rep.opt_offline.std_error;
        j["opt_offline_samples"] = rep.opt_offline.samples;
    }
    j["final_regret_stderr"] = rep.final_regret_stderr;
    if (fitted_exponent) j["fitted_exponent"] = *fitted_exponent;
    return j;
}

}  // namespace rstop
