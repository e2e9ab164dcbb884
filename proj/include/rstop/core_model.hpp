#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rstop/errors.hpp"
#include "rstop/rng.hpp"

namespace rstop {

inline constexpr double kProbTolerance = 1e-12;
inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct Atom {
    double value;
    double prob;
    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite distribution over [0, 1]. Atoms are kept sorted by value with no
/// duplicates; probabilities are re-normalized when the input is within
/// kProbTolerance of summing to one and rejected otherwise.
class DiscreteDist {
public:
    DiscreteDist(std::span<const double> values, std::span<const double> probs) {
        if (values.size() != probs.size() || values.empty())
            throw ContractViolation("DiscreteDist: values/probs must be non-empty and of equal length");
        double total = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) {
            if (!(values[k] >= 0.0 && values[k] <= 1.0))
                throw ContractViolation("DiscreteDist: values must lie in [0,1]");
            if (k > 0 && !(values[k] > values[k - 1]))
                throw ContractViolation("DiscreteDist: values must be strictly increasing");
            if (!(probs[k] >= 0.0)) throw ContractViolation("DiscreteDist: negative probability");
            total += probs[k];
        }
        if (std::abs(total - 1.0) > kProbTolerance)
            throw ContractViolation("DiscreteDist: probabilities do not sum to 1");
        atoms_.reserve(values.size());
        for (std::size_t k = 0; k < values.size(); ++k) atoms_.push_back({values[k], probs[k] / total});
        build_cdf();
    }

    DiscreteDist(std::initializer_list<double> values, std::initializer_list<double> probs)
        : DiscreteDist(std::span<const double>(values.begin(), values.size()),
                       std::span<const double>(probs.begin(), probs.size())) {}

    static DiscreteDist point_mass(double v) {
        const double p = 1.0;
        return DiscreteDist(std::span<const double>(&v, 1), std::span<const double>(&p, 1));
    }

    static DiscreteDist uniform(std::span<const double> values) {
        std::vector<double> probs(values.size(), 1.0 / static_cast<double>(values.size()));
        return DiscreteDist(values, probs);
    }

    // Empirical distribution of a multiset of observations.
    static DiscreteDist empirical(std::vector<double> observations) {
        expects(!observations.empty(), "DiscreteDist::empirical: no observations");
        std::sort(observations.begin(), observations.end());
        std::vector<double> values;
        std::vector<double> probs;
        const double w = 1.0 / static_cast<double>(observations.size());
        for (double v : observations) {
            if (values.empty() || v != values.back()) {
                values.push_back(v);
                probs.push_back(0.0);
            }
            probs.back() += w;
        }
        // The sum can drift by a few ulps for large samples; renormalize exactly.
        const double s = std::accumulate(probs.begin(), probs.end(), 0.0);
        for (double& p : probs) p /= s;
        return DiscreteDist(values, probs);
    }

    std::span<const Atom> atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }

    // P(X <= x)
    double cdf(double x) const {
        auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x,
                                   [](double v, const Atom& a) { return v < a.value; });
        const auto k = static_cast<std::size_t>(it - atoms_.begin());
        return k == 0 ? 0.0 : cum_[k - 1];
    }

    double prob_of(double v) const {
        for (const Atom& a : atoms_)
            if (a.value == v) return a.prob;
        return 0.0;
    }

    double mean() const {
        double m = 0.0;
        for (const Atom& a : atoms_) m += a.value * a.prob;
        return m;
    }

    bool contains(double v) const {
        return std::any_of(atoms_.begin(), atoms_.end(), [v](const Atom& a) { return a.value == v; });
    }

    double sample(Rng& rng) const {
        const double u = uniform01(rng);
        auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cum_.begin()), atoms_.size() - 1);
        return atoms_[k].value;
    }

    friend bool operator==(const DiscreteDist& a, const DiscreteDist& b) { return a.atoms_ == b.atoms_; }

private:
    void build_cdf() {
        cum_.resize(atoms_.size());
        double c = 0.0;
        for (std::size_t k = 0; k < atoms_.size(); ++k) cum_[k] = (c += atoms_[k].prob);
        cum_.back() = 1.0;
    }

    std::vector<Atom> atoms_;
    std::vector<double> cum_;
};

struct WeightedPerm {
    std::vector<int> perm;  // perm[i] = index of the distribution arriving at step i
    double prob;
};

inline bool is_permutation_of(std::span<const int> p, int n) {
    if (static_cast<int>(p.size()) != n) return false;
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int v : p) {
        if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) return false;
        seen[static_cast<std::size_t>(v)] = true;
    }
    return true;
}

// n!, saturating at `cap + 1` so callers can compare against a cap safely.
inline std::size_t factorial_capped(int n, std::size_t cap) {
    std::size_t f = 1;
    for (int k = 2; k <= n; ++k) {
        if (f > (cap + 1) / static_cast<std::size_t>(k)) return cap + 1;
        f *= static_cast<std::size_t>(k);
    }
    return f;
}

/// Arrival-order distribution Pi over permutations of [n].
class OrderModel {
public:
    enum class Kind { adversarial, random, explicit_list };

    static OrderModel adversarial() { return OrderModel(Kind::adversarial, {}); }
    static OrderModel random_order() { return OrderModel(Kind::random, {}); }
    static OrderModel explicit_perms(std::vector<WeightedPerm> perms) {
        return OrderModel(Kind::explicit_list, std::move(perms));
    }

    Kind kind() const { return kind_; }
    const std::vector<WeightedPerm>& explicit_support() const { return perms_; }

    void validate(int n) const {
        if (kind_ != Kind::explicit_list) return;
        if (perms_.empty()) throw ContractViolation("OrderModel: explicit list is empty");
        double total = 0.0;
        for (const auto& wp : perms_) {
            if (!is_permutation_of(wp.perm, n))
                throw ContractViolation("OrderModel: explicit entry is not a permutation of [n]");
            if (!(wp.prob >= 0.0)) throw ContractViolation("OrderModel: negative permutation probability");
            total += wp.prob;
        }
        if (std::abs(total - 1.0) > kProbTolerance)
            throw ContractViolation("OrderModel: permutation probabilities do not sum to 1");
    }

    // |Pi|: number of permutations with positive probability (saturating at cap + 1).
    std::size_t support_size(int n, std::size_t cap = std::numeric_limits<std::size_t>::max() - 1) const {
        switch (kind_) {
            case Kind::adversarial: return 1;
            case Kind::random: return factorial_capped(n, cap);
            case Kind::explicit_list: {
                std::vector<std::vector<int>> distinct;
                for (const auto& wp : perms_)
                    if (wp.prob > 0.0 && std::find(distinct.begin(), distinct.end(), wp.perm) == distinct.end())
                        distinct.push_back(wp.perm);
                return distinct.size();
            }
        }
        return 0;
    }

    // Full support as (perm, prob) with duplicates merged and zero-mass entries dropped.
    std::vector<WeightedPerm> support(int n, std::size_t cap) const {
        std::vector<WeightedPerm> out;
        switch (kind_) {
            case Kind::adversarial: {
                std::vector<int> id(static_cast<std::size_t>(n));
                std::iota(id.begin(), id.end(), 0);
                out.push_back({std::move(id), 1.0});
                break;
            }
            case Kind::random: {
                const std::size_t count = factorial_capped(n, cap);
                if (count > cap) throw Refusal("OrderModel: random-order support exceeds cap");
                std::vector<int> p(static_cast<std::size_t>(n));
                std::iota(p.begin(), p.end(), 0);
                const double w = 1.0 / static_cast<double>(count);
                do {
                    out.push_back({p, w});
                } while (std::next_permutation(p.begin(), p.end()));
                break;
            }
            case Kind::explicit_list: {
                double total = 0.0;
                for (const auto& wp : perms_) {
                    if (wp.prob <= 0.0) continue;
                    auto it = std::find_if(out.begin(), out.end(), [&](const WeightedPerm& o) { return o.perm == wp.perm; });
                    if (it == out.end()) out.push_back(wp);
                    else it->prob += wp.prob;
                    total += wp.prob;
                }
                for (auto& wp : out) wp.prob /= total;
                if (out.size() > cap) throw Refusal("OrderModel: explicit support exceeds cap");
                break;
            }
        }
        return out;
    }

    std::vector<int> sample(int n, Rng& rng) const {
        std::vector<int> p(static_cast<std::size_t>(n));
        std::iota(p.begin(), p.end(), 0);
        switch (kind_) {
            case Kind::adversarial: break;
            case Kind::random:
                for (std::size_t i = p.size(); i > 1; --i) std::swap(p[i - 1], p[uniform_index(rng, i)]);
                break;
            case Kind::explicit_list: {
                const double u = uniform01(rng);
                double c = 0.0;
                for (const auto& wp : perms_) {
                    c += wp.prob;
                    if (u < c) return wp.perm;
                }
                // rounding slack: last entry with positive mass
                for (auto it = perms_.rbegin(); it != perms_.rend(); ++it)
                    if (it->prob > 0.0) return it->perm;
                break;
            }
        }
        return p;
    }

private:
    OrderModel(Kind k, std::vector<WeightedPerm> perms) : kind_(k), perms_(std::move(perms)) {}

    Kind kind_;
    std::vector<WeightedPerm> perms_;
};

class ProfitKind {
public:
    enum class Type { reward, best_choice, last_success, ski_rental };

    static ProfitKind reward() { return ProfitKind(Type::reward, 0.0); }
    static ProfitKind best_choice() { return ProfitKind(Type::best_choice, 0.0); }
    static ProfitKind last_success() { return ProfitKind(Type::last_success, 0.0); }
    static ProfitKind ski_rental(double buy_cost) {
        if (!(buy_cost > 0.0) || !std::isfinite(buy_cost))
            throw ContractViolation("ProfitKind: ski-rental buy cost must be positive");
        return ProfitKind(Type::ski_rental, buy_cost);
    }

    Type type() const { return type_; }
    double buy_cost() const { return buy_cost_; }
    bool minimizes() const { return type_ == Type::ski_rental; }

    // Upper bound B on the profit (cost) of a round.
    double bound(int n) const { return minimizes() ? static_cast<double>(n) + buy_cost_ : 1.0; }

    std::string name() const {
        switch (type_) {
            case Type::reward: return "reward";
            case Type::best_choice: return "best_choice";
            case Type::last_success: return "last_success";
            case Type::ski_rental: return "ski_rental";
        }
        return "?";
    }

    friend bool operator==(const ProfitKind&, const ProfitKind&) = default;

private:
    ProfitKind(Type t, double b) : type_(t), buy_cost_(b) {}

    Type type_;
    double buy_cost_;
};

/// p(x, i) with 0-based i; i == n means every value was rejected.
/// For ski-rental this is the cost, not a profit.
inline double profit(const ProfitKind& kind, std::span<const double> x, std::size_t i) {
    const std::size_t n = x.size();
    if (i > n) throw ContractViolation("profit: stop index out of range");
    switch (kind.type()) {
        case ProfitKind::Type::reward:
            return i == n ? 0.0 : x[i];
        case ProfitKind::Type::best_choice: {
            const double best = *std::max_element(x.begin(), x.end());
            const double chosen = i == n ? 0.0 : x[i];
            return chosen == best ? 1.0 : 0.0;
        }
        case ProfitKind::Type::last_success: {
            if (i == n || x[i] != 1.0) return 0.0;
            for (std::size_t j = i + 1; j < n; ++j)
                if (x[j] == 1.0) return 0.0;
            return 1.0;
        }
        case ProfitKind::Type::ski_rental: {
            double rent = 0.0;
            for (std::size_t j = 0; j < i; ++j) rent += x[j];
            return i == n ? rent : rent + kind.buy_cost();
        }
    }
    return 0.0;
}

// Maps a native value to the maximization scale [0, B] (B - cost for ski-rental).
inline double oriented(const ProfitKind& kind, int n, double native) {
    return kind.minimizes() ? kind.bound(n) - native : native;
}

struct StopOutcome {
    std::size_t index;
    double profit;  // native units
};

// Clairvoyant best stop (argmin for ski-rental); ties go to the smallest index.
inline StopOutcome offline_best(const ProfitKind& kind, std::span<const double> x) {
    StopOutcome best{0, profit(kind, x, 0)};
    for (std::size_t i = 1; i <= x.size(); ++i) {
        const double v = profit(kind, x, i);
        if (kind.minimizes() ? v < best.profit : v > best.profit) best = {i, v};
    }
    return best;
}

struct RoundRealization {
    std::vector<double> x;  // values in arrival order
    std::vector<int> tau;   // tau[i] = distribution that produced x[i]
};

class Instance {
public:
    Instance(std::vector<DiscreteDist> dists, OrderModel order, ProfitKind profit)
        : dists_(std::move(dists)), order_(std::move(order)), profit_(profit) {
        if (dists_.empty()) throw ContractViolation("Instance: n must be at least 1");
        order_.validate(n());
        if (profit_.type() == ProfitKind::Type::last_success) {
            for (const auto& d : dists_)
                for (const Atom& a : d.atoms())
                    if (a.value != 0.0 && a.value != 1.0)
                        throw ContractViolation("Instance: last-success values must be 0 or 1");
        }
        iid_ = order_.kind() == OrderModel::Kind::adversarial &&
               std::all_of(dists_.begin(), dists_.end(), [&](const DiscreteDist& d) { return d == dists_.front(); });
    }

    int n() const { return static_cast<int>(dists_.size()); }
    const std::vector<DiscreteDist>& dists() const { return dists_; }
    const DiscreteDist& dist(int k) const { return dists_[static_cast<std::size_t>(k)]; }
    const OrderModel& order() const { return order_; }
    const ProfitKind& profit() const { return profit_; }
    double bound() const { return profit_.bound(n()); }

    // True only for identical distributions under the identity order. Can be
    // switched off (e.g. to stop pooling samples across coordinates).
    bool iid() const { return iid_; }
    Instance without_iid_flag() const {
        Instance copy = *this;
        copy.iid_ = false;
        return copy;
    }

    // Same order model and profit, different value distributions.
    Instance with_dists(std::vector<DiscreteDist> dists) const {
        if (static_cast<int>(dists.size()) != n()) throw ContractViolation("Instance::with_dists: wrong n");
        return Instance(std::move(dists), order_, profit_);
    }

private:
    std::vector<DiscreteDist> dists_;
    OrderModel order_;
    ProfitKind profit_;
    bool iid_ = false;
};

inline RoundRealization sample_round(const Instance& inst, Rng& rng) {
    const int n = inst.n();
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) y[static_cast<std::size_t>(k)] = inst.dist(k).sample(rng);
    RoundRealization r;
    r.tau = inst.order().sample(n, rng);
    r.x.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) r.x[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(r.tau[static_cast<std::size_t>(i)])];
    return r;
}

}  // namespace rstop
