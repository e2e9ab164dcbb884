#pragma once

#include <cstddef>
#include <vector>

#include "rstop/core_model.hpp"

namespace rstop {

inline constexpr std::size_t kDefaultOutcomeCap = 1'000'000;

// prod_k |supp(D_k)| * |Pi|, saturating at cap + 1.
inline std::size_t outcome_count(const Instance& inst, std::size_t cap = kDefaultOutcomeCap) {
    std::size_t count = inst.order().support_size(inst.n(), cap);
    for (const auto& d : inst.dists()) {
        if (count > (cap + 1) / d.size()) return cap + 1;
        count *= d.size();
    }
    return count;
}

/// Calls fn(const RoundRealization&, double prob) for every (value tuple,
/// permutation) pair with positive probability. Refuses above `cap` outcomes.
template <typename Fn>
void for_each_outcome(const Instance& inst, std::size_t cap, Fn&& fn) {
    if (outcome_count(inst, cap) > cap) throw Refusal("outcome enumeration exceeds cap");
    const int n = inst.n();
    const auto perms = inst.order().support(n, cap);
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    std::vector<double> y(static_cast<std::size_t>(n));
    RoundRealization r;
    r.x.resize(static_cast<std::size_t>(n));
    while (true) {
        double py = 1.0;
        for (int k = 0; k < n; ++k) {
            const Atom& a = inst.dist(k).atoms()[idx[static_cast<std::size_t>(k)]];
            y[static_cast<std::size_t>(k)] = a.value;
            py *= a.prob;
        }
        if (py > 0.0) {
            for (const auto& wp : perms) {
                r.tau = wp.perm;
                for (int i = 0; i < n; ++i)
                    r.x[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(wp.perm[static_cast<std::size_t>(i)])];
                fn(static_cast<const RoundRealization&>(r), py * wp.prob);
            }
        }
        int k = n - 1;
        while (k >= 0) {
            auto& j = idx[static_cast<std::size_t>(k)];
            if (++j < inst.dist(k).size()) break;
            j = 0;
            --k;
        }
        if (k < 0) break;
    }
}

}  // namespace rstop
