#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "rstop/core_model.hpp"
#include "rstop/enumerate.hpp"
#include "rstop/policies.hpp"

namespace rstop {

inline constexpr std::size_t kDefaultPrefixCap = 100'000;
inline constexpr std::size_t kDefaultHistoryCap = 100'000;

// ---------------------------------------------------------------------------
// Prefix tree of the arrival-order support. Node d-deep holds tau(0..d-1);
// children are created after their parent, so reverse index order is a valid
// bottom-up traversal.

struct PrefixNode {
    std::vector<int> prefix;
    double mass = 0.0;
    std::vector<std::size_t> children;
};

class PrefixTree {
public:
    PrefixTree(const OrderModel& order, int n, std::size_t cap) {
        const auto perms = order.support(n, cap);
        nodes_.push_back({});
        for (const auto& wp : perms) {
            std::size_t cur = 0;
            nodes_[0].mass += wp.prob;
            for (int d = 0; d < n; ++d) {
                const int k = wp.perm[static_cast<std::size_t>(d)];
                std::size_t next = nodes_.size();
                for (std::size_t c : nodes_[cur].children)
                    if (nodes_[c].prefix.back() == k) next = c;
                if (next == nodes_.size()) {
                    if (nodes_.size() >= cap) throw Refusal("prefix tree exceeds cap");
                    PrefixNode child;
                    child.prefix = nodes_[cur].prefix;
                    child.prefix.push_back(k);
                    nodes_.push_back(std::move(child));
                    nodes_[cur].children.push_back(next);
                }
                nodes_[next].mass += wp.prob;
                cur = next;
            }
        }
    }

    const std::vector<PrefixNode>& nodes() const { return nodes_; }
    double cond_prob(std::size_t parent, std::size_t child) const { return nodes_[child].mass / nodes_[parent].mass; }

private:
    std::vector<PrefixNode> nodes_;
};

struct OptimalSolution {
    StoppingPolicy policy;
    double value;  // native units (expected cost for ski-rental)
};

namespace detail {

inline std::vector<bool> seen_mask(std::span<const int> prefix, int n) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int k : prefix) seen[static_cast<std::size_t>(k)] = true;
    return seen;
}

// Wraps per-node levels into a ThresholdPolicy with the cheapest keying that
// is exact for the order model.
inline ThresholdPolicy pack_levels(const Instance& inst, const PrefixTree& tree, const std::vector<double>& level) {
    const int n = inst.n();
    const auto& nodes = tree.nodes();
    if (inst.order().kind() == OrderModel::Kind::adversarial) {
        std::vector<double> flat(static_cast<std::size_t>(n));
        for (std::size_t id = 1; id < nodes.size(); ++id) flat[nodes[id].prefix.size() - 1] = level[id];
        return ThresholdPolicy::flat(std::move(flat));
    }
    const PrefixKeying keying =
        inst.order().kind() == OrderModel::Kind::random ? PrefixKeying::set_and_last : PrefixKeying::full_prefix;
    std::map<std::vector<int>, double> keyed;
    for (std::size_t id = 1; id < nodes.size(); ++id) keyed.emplace(prefix_key(keying, nodes[id].prefix), level[id]);
    return ThresholdPolicy::by_prefix(keying, n, std::move(keyed));
}

// Smallest atom such that every atom at or above it is accepted; kNever if the top atom is rejected.
inline double lowest_upward_closed(const DiscreteDist& d, const std::vector<bool>& accept) {
    double th = kNever;
    for (std::size_t a = d.size(); a-- > 0;) {
        if (!accept[a]) break;
        th = d.atoms()[a].value;
    }
    return th;
}

inline OptimalSolution solve_reward(const Instance& inst, const PrefixTree& tree) {
    const auto& nodes = tree.nodes();
    std::vector<double> cont(nodes.size(), 0.0);
    std::vector<double> level(nodes.size(), 0.0);
    for (std::size_t id = nodes.size(); id-- > 0;) {
        double v = 0.0;
        for (std::size_t c : nodes[id].children) {
            level[c] = cont[c];
            double ev = 0.0;
            for (const Atom& a : inst.dist(nodes[c].prefix.back()).atoms())
                ev += a.prob * (a.value >= level[c] ? a.value : cont[c]);
            v += tree.cond_prob(id, c) * ev;
        }
        cont[id] = v;
    }
    return {pack_levels(inst, tree, level), cont[0]};
}

inline OptimalSolution solve_last_success(const Instance& inst, const PrefixTree& tree) {
    const auto& nodes = tree.nodes();
    const int n = inst.n();
    std::vector<double> p_success(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) p_success[static_cast<std::size_t>(k)] = inst.dist(k).prob_of(1.0);
    std::vector<double> cont(nodes.size(), 0.0);
    std::vector<double> level(nodes.size(), kNever);
    for (std::size_t id = nodes.size(); id-- > 0;) {
        double v = 0.0;
        for (std::size_t c : nodes[id].children) {
            const auto seen = seen_mask(nodes[c].prefix, n);
            double none_later = 1.0;
            for (int j = 0; j < n; ++j)
                if (!seen[static_cast<std::size_t>(j)]) none_later *= 1.0 - p_success[static_cast<std::size_t>(j)];
            const bool accept = none_later >= cont[c];
            level[c] = accept ? 1.0 : kNever;
            const double p = p_success[static_cast<std::size_t>(nodes[c].prefix.back())];
            v += tree.cond_prob(id, c) * (p * (accept ? none_later : cont[c]) + (1.0 - p) * cont[c]);
        }
        cont[id] = v;
    }
    return {pack_levels(inst, tree, level), cont[0]};
}

// Costs are minimized directly: buying after seeing x_i costs b, waiting costs x_i + C(child).
inline OptimalSolution solve_ski_rental(const Instance& inst, const PrefixTree& tree) {
    const auto& nodes = tree.nodes();
    const double b = inst.profit().buy_cost();
    std::vector<double> cost(nodes.size(), 0.0);
    std::vector<double> level(nodes.size(), kNever);
    for (std::size_t id = nodes.size(); id-- > 0;) {
        double v = 0.0;
        for (std::size_t c : nodes[id].children) {
            const double th = b - cost[c];
            level[c] = th <= 0.0 ? 0.0 : (th > 1.0 ? kNever : th);
            double ev = 0.0;
            for (const Atom& a : inst.dist(nodes[c].prefix.back()).atoms())
                ev += a.prob * (a.value >= level[c] ? b : a.value + cost[c]);
            v += tree.cond_prob(id, c) * ev;
        }
        cost[id] = v;
    }
    return {pack_levels(inst, tree, level), cost[0]};
}

// State is the running maximum, indexed into the sorted union of supports
// (slot 0 = nothing observed yet). Only running maxima are ever accepted.
inline OptimalSolution solve_best_choice(const Instance& inst, const PrefixTree& tree) {
    const auto& nodes = tree.nodes();
    const int n = inst.n();
    std::vector<double> support;
    for (const auto& d : inst.dists())
        for (const Atom& a : d.atoms()) support.push_back(a.value);
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    const std::size_t states = support.size() + 1;
    auto slot_of = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(support.begin(), support.end(), v) - support.begin()) + 1;
    };

    std::vector<std::vector<double>> cont(nodes.size(), std::vector<double>(states, 0.0));
    std::vector<double> level(nodes.size(), kNever);
    for (std::size_t id = nodes.size(); id-- > 0;) {
        auto& w = cont[id];
        if (nodes[id].children.empty()) {
            // every value rejected: wins only if all values were zero
            for (std::size_t s = 1; s < states; ++s) w[s] = support[s - 1] == 0.0 ? 1.0 : 0.0;
            continue;
        }
        for (std::size_t c : nodes[id].children) {
            const auto seen = seen_mask(nodes[c].prefix, n);
            const DiscreteDist& d = inst.dist(nodes[c].prefix.back());
            std::vector<double> win_now(d.size());
            std::vector<bool> accept(d.size());
            for (std::size_t a = 0; a < d.size(); ++a) {
                const double v = d.atoms()[a].value;
                double all_below = 1.0;
                for (int j = 0; j < n; ++j)
                    if (!seen[static_cast<std::size_t>(j)]) all_below *= inst.dist(j).cdf(v);
                win_now[a] = all_below;
                accept[a] = all_below >= cont[c][slot_of(v)];
            }
            level[c] = lowest_upward_closed(d, accept);
            const double q = tree.cond_prob(id, c);
            for (std::size_t s = 0; s < states; ++s) {
                const double running = s == 0 ? -kNever : support[s - 1];
                double ev = 0.0;
                for (std::size_t a = 0; a < d.size(); ++a) {
                    const Atom& atom = d.atoms()[a];
                    if (atom.value < running) ev += atom.prob * cont[c][s];
                    else if (atom.value >= level[c]) ev += atom.prob * win_now[a];
                    else ev += atom.prob * cont[c][slot_of(atom.value)];
                }
                w[s] += q * ev;
            }
        }
    }
    return {EssentiallyThresholdPolicy{pack_levels(inst, tree, level)}, cont[0][0]};
}

}  // namespace detail

/// Optimal online policy by backward induction over the arrival-prefix tree,
/// together with its exact expected value. Reward, last-success and
/// ski-rental yield threshold policies; best-choice an essentially-threshold one.
inline OptimalSolution solve_optimal(const Instance& inst, std::size_t prefix_cap = kDefaultPrefixCap) {
    const PrefixTree tree(inst.order(), inst.n(), prefix_cap);
    switch (inst.profit().type()) {
        case ProfitKind::Type::reward: return detail::solve_reward(inst, tree);
        case ProfitKind::Type::best_choice: return detail::solve_best_choice(inst, tree);
        case ProfitKind::Type::last_success: return detail::solve_last_success(inst, tree);
        case ProfitKind::Type::ski_rental: return detail::solve_ski_rental(inst, tree);
    }
    throw ContractViolation("unknown profit kind");
}

inline StoppingPolicy optimal_policy(const Instance& inst) { return solve_optimal(inst).policy; }

inline double opt_online_value(const Instance& inst) { return solve_optimal(inst).value; }

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    bool exact = true;
    std::size_t samples = 0;  // Monte Carlo draws when !exact
};

/// E[max_i p(X, i)] (min for costs). Exact by enumeration under the cap,
/// otherwise a seeded Monte Carlo estimate with its standard error.
inline Estimate opt_offline_value(const Instance& inst, std::size_t cap = kDefaultOutcomeCap,
                                  std::size_t mc_samples = 200'000, std::uint64_t mc_seed = 0x5eed) {
    if (outcome_count(inst, cap) <= cap) {
        double v = 0.0;
        for_each_outcome(inst, cap, [&](const RoundRealization& r, double prob) {
            v += prob * offline_best(inst.profit(), r.x).profit;
        });
        return {v, 0.0, true, 0};
    }
    Rng rng(mix64(mc_seed));
    double s = 0.0;
    double s2 = 0.0;
    for (std::size_t k = 0; k < mc_samples; ++k) {
        const double v = offline_best(inst.profit(), sample_round(inst, rng).x).profit;
        s += v;
        s2 += v * v;
    }
    const double m = s / static_cast<double>(mc_samples);
    const double var = std::max(0.0, s2 / static_cast<double>(mc_samples) - m * m);
    return {m, std::sqrt(var / static_cast<double>(mc_samples)), false, mc_samples};
}

// ---------------------------------------------------------------------------
// Brute force over the full observation-history tree. Shares nothing with
// solve_optimal beyond the profit function: acceptance values are obtained by
// enumerating every completion of the history.

struct HistoryDecision {
    bool accept;
    double accept_value;    // oriented (B - cost for ski-rental)
    double continue_value;  // oriented
};

struct DecisionTree {
    std::map<std::pair<std::vector<double>, std::vector<int>>, HistoryDecision> nodes;

    bool accepts(std::span<const double> x_prefix, std::span<const int> tau_prefix) const {
        auto it = nodes.find({std::vector<double>(x_prefix.begin(), x_prefix.end()),
                              std::vector<int>(tau_prefix.begin(), tau_prefix.end())});
        if (it == nodes.end()) throw ContractViolation("DecisionTree: history not in tree");
        return it->second.accept;
    }
};

struct BruteForceResult {
    double value;  // native units
    DecisionTree tree;
};

namespace detail {

class HistorySolver {
public:
    HistorySolver(const Instance& inst, std::size_t cap)
        : inst_(inst), n_(inst.n()), perms_(inst.order().support(inst.n(), cap)), cap_(cap) {}

    BruteForceResult solve() {
        std::vector<double> x;
        std::vector<int> tau;
        const double v = continue_from(x, tau);
        const double native = inst_.profit().minimizes() ? inst_.bound() - v : v;
        return {native, std::move(tree_)};
    }

private:
    double oriented_profit(std::span<const double> x, std::size_t i) const {
        return oriented(inst_.profit(), n_, profit(inst_.profit(), x, i));
    }

    // Weights of support permutations consistent with a prefix.
    std::vector<std::pair<const WeightedPerm*, double>> consistent(std::span<const int> tau) const {
        std::vector<std::pair<const WeightedPerm*, double>> out;
        double total = 0.0;
        for (const auto& wp : perms_)
            if (std::equal(tau.begin(), tau.end(), wp.perm.begin())) {
                out.emplace_back(&wp, wp.prob);
                total += wp.prob;
            }
        for (auto& e : out) e.second /= total;
        return out;
    }

    // E[p(X, stop) | history] by enumerating completions.
    double accept_value(const std::vector<double>& x, const std::vector<int>& tau) const {
        const std::size_t stop = x.size() - 1;
        double v = 0.0;
        std::vector<double> full(static_cast<std::size_t>(n_));
        std::copy(x.begin(), x.end(), full.begin());
        for (const auto& [wp, w] : consistent(tau)) {
            complete(*wp, x.size(), full, w, [&](std::span<const double> xs, double p) { v += p * oriented_profit(xs, stop); });
        }
        return v;
    }

    template <typename Fn>
    void complete(const WeightedPerm& wp, std::size_t d, std::vector<double>& full, double p, Fn&& fn) const {
        if (d == static_cast<std::size_t>(n_)) {
            fn(std::span<const double>(full), p);
            return;
        }
        for (const Atom& a : inst_.dist(wp.perm[d]).atoms()) {
            if (a.prob <= 0.0) continue;
            full[d] = a.value;
            complete(wp, d + 1, full, p * a.prob, fn);
        }
    }

    // Optimal oriented value given the history, with every value so far rejected.
    double continue_from(std::vector<double>& x, std::vector<int>& tau) {
        if (x.size() == static_cast<std::size_t>(n_)) return oriented_profit(x, x.size());
        std::map<int, double> next;
        for (const auto& [wp, w] : consistent(tau)) next[wp->perm[tau.size()]] += w;
        double v = 0.0;
        for (const auto& [k, q] : next) {
            for (const Atom& a : inst_.dist(k).atoms()) {
                if (a.prob <= 0.0) continue;
                if (++visited_ > cap_) throw Refusal("history tree exceeds cap");
                x.push_back(a.value);
                tau.push_back(k);
                const double alpha = accept_value(x, tau);
                const double beta = continue_from(x, tau);
                const bool accept = alpha >= beta;
                tree_.nodes[{x, tau}] = {accept, alpha, beta};
                v += q * a.prob * (accept ? alpha : beta);
                x.pop_back();
                tau.pop_back();
            }
        }
        return v;
    }

    const Instance& inst_;
    int n_;
    std::vector<WeightedPerm> perms_;
    std::size_t cap_;
    std::size_t visited_ = 0;
    DecisionTree tree_;
};

}  // namespace detail

/// Exact optimal online value by backward induction over every history
/// (x_1..x_i, tau_1..tau_i); any order model. Refuses above `cap` nodes.
inline BruteForceResult brute_force_online(const Instance& inst, std::size_t cap = kDefaultHistoryCap) {
    return detail::HistorySolver(inst, cap).solve();
}

// ---------------------------------------------------------------------------
// Learning from samples.

/// Per-distribution value counts, pooled into one histogram for i.i.d. shapes.
class EmpiricalMarginals {
public:
    EmpiricalMarginals(int n, bool pooled) : n_(n), pooled_(pooled), counts_(pooled ? 1 : static_cast<std::size_t>(n)) {}

    void add(const RoundRealization& r) {
        expects(r.x.size() == static_cast<std::size_t>(n_), "EmpiricalMarginals: wrong n");
        for (std::size_t i = 0; i < r.x.size(); ++i)
            ++counts_[pooled_ ? 0 : static_cast<std::size_t>(r.tau[i])][r.x[i]];
        ++rounds_;
    }

    std::size_t rounds() const { return rounds_; }

    std::vector<DiscreteDist> dists() const {
        expects(rounds_ > 0, "EmpiricalMarginals: no samples");
        std::vector<DiscreteDist> out;
        out.reserve(static_cast<std::size_t>(n_));
        for (int k = 0; k < n_; ++k) {
            const auto& c = counts_[pooled_ ? 0 : static_cast<std::size_t>(k)];
            std::vector<double> values;
            std::vector<double> probs;
            std::size_t total = 0;
            for (const auto& [v, m] : c) total += m;
            for (const auto& [v, m] : c) {
                values.push_back(v);
                probs.push_back(static_cast<double>(m) / static_cast<double>(total));
            }
            double s = 0.0;
            for (double p : probs) s += p;
            for (double& p : probs) p /= s;
            out.emplace_back(values, probs);
        }
        return out;
    }

private:
    int n_;
    bool pooled_;
    std::vector<std::map<double, std::size_t>> counts_;
    std::size_t rounds_ = 0;
};

enum class EmpiricalMode { marginal_dp, joint_exhaustive };

inline constexpr std::size_t kJointCandidateCap = 1'000'000;

namespace detail {

inline ThresholdPolicy& inner_thresholds(StoppingPolicy& p) {
    if (auto* t = std::get_if<ThresholdPolicy>(&p)) return *t;
    return std::get<EssentiallyThresholdPolicy>(p).inner;
}

// Exact argmax of the in-sample value over threshold policies: per observed
// threshold key, the distinct observed values plus "never" cover every
// distinct output pattern on the samples.
inline StoppingPolicy joint_exhaustive(std::span<const RoundRealization> samples, const ProfitKind& kind,
                                       StoppingPolicy start) {
    ThresholdPolicy& base = inner_thresholds(start);
    const bool flat = base.keying == PrefixKeying::flat;
    std::map<std::vector<int>, std::vector<double>> slots;  // flat keying: key = {step}
    for (const auto& r : samples)
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            std::vector<int> key = flat ? std::vector<int>{static_cast<int>(i)}
                                        : prefix_key(base.keying, std::span<const int>(r.tau).first(i + 1));
            slots[key].push_back(r.x[i]);
        }
    std::vector<std::vector<int>> keys;
    std::vector<std::vector<double>> choices;
    std::size_t total = 1;
    for (auto& [key, vals] : slots) {
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        vals.push_back(kNever);
        if (total > kJointCandidateCap / vals.size() + 1) throw Refusal("joint-exhaustive search exceeds candidate cap");
        total *= vals.size();
        keys.push_back(key);
        choices.push_back(vals);
    }
    if (total > kJointCandidateCap) throw Refusal("joint-exhaustive search exceeds candidate cap");
    for (auto& t : base.ties) t = TieRule::accept_on_equal;

    std::vector<std::size_t> pick(keys.size(), 0);
    auto apply = [&](StoppingPolicy& p) {
        ThresholdPolicy& th = inner_thresholds(p);
        for (std::size_t s = 0; s < keys.size(); ++s) {
            const double lv = choices[s][pick[s]];
            if (flat) th.levels[static_cast<std::size_t>(keys[s][0])] = lv;
            else th.keyed[keys[s]] = lv;
        }
    };
    StoppingPolicy candidate = start;
    StoppingPolicy best = start;
    double best_value = -kNever;
    while (true) {
        apply(candidate);
        double v = 0.0;
        for (const auto& r : samples) v += oriented(kind, static_cast<int>(r.x.size()), run_policy(candidate, r, kind).profit);
        if (v > best_value) {
            best_value = v;
            best = candidate;
        }
        std::size_t s = 0;
        while (s < pick.size() && ++pick[s] == choices[s].size()) pick[s++] = 0;
        if (s == pick.size()) break;
    }
    return best;
}

}  // namespace detail

/// h_{D-hat}: the policy learned from samples. `shape` supplies n, the order
/// model and the profit kind; its value distributions are ignored.
inline StoppingPolicy empirical_optimal_policy(std::span<const RoundRealization> samples, const Instance& shape,
                                               EmpiricalMode mode = EmpiricalMode::marginal_dp) {
    check_samples(samples);
    expects(samples.front().x.size() == static_cast<std::size_t>(shape.n()), "empirical_optimal_policy: n mismatch");
    EmpiricalMarginals marg(shape.n(), shape.iid());
    for (const auto& r : samples) marg.add(r);
    StoppingPolicy policy = optimal_policy(shape.with_dists(marg.dists()));
    if (mode == EmpiricalMode::marginal_dp) return policy;
    return detail::joint_exhaustive(samples, shape.profit(), std::move(policy));
}

}  // namespace rstop
