#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "rstop/core_model.hpp"
#include "rstop/optimal_dp.hpp"
#include "rstop/rng.hpp"

namespace rstop {

// Random discrete distribution with up to max_atoms atoms on a 1/8 grid, so
// ties between coordinates are common. Last-success draws a Bernoulli.
inline DiscreteDist random_dist(Rng& rng, int max_atoms, bool binary) {
    if (binary) {
        const double p = 0.05 + 0.9 * uniform01(rng);
        return DiscreteDist({0.0, 1.0}, {1.0 - p, p});
    }
    const int k = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(max_atoms)));
    std::vector<double> grid{0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0};
    for (std::size_t i = grid.size(); i > 1; --i) std::swap(grid[i - 1], grid[uniform_index(rng, i)]);
    std::vector<double> values(grid.begin(), grid.begin() + k);
    std::sort(values.begin(), values.end());
    std::vector<double> probs;
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += probs.emplace_back(0.1 + uniform01(rng));
    for (double& p : probs) p /= s;
    return DiscreteDist(values, probs);
}

inline Instance random_instance(Rng& rng, int n, int max_atoms, const ProfitKind& kind,
                                OrderModel order = OrderModel::adversarial()) {
    std::vector<DiscreteDist> d;
    for (int k = 0; k < n; ++k) d.push_back(random_dist(rng, max_atoms, kind.type() == ProfitKind::Type::last_success));
    return Instance(std::move(d), std::move(order), kind);
}

inline ProfitKind profit_by_index(int k) {
    switch (k % 4) {
        case 0: return ProfitKind::reward();
        case 1: return ProfitKind::best_choice();
        case 2: return ProfitKind::last_success();
        default: return ProfitKind::ski_rental(0.5 + 0.25 * static_cast<double>(k % 7));
    }
}

struct OracleMismatch {
    int index;
    double dp;
    double brute;
};

/// DP vs history-tree brute force on `count` seeded random adversarial
/// instances (n <= 3, <= 3 atoms, kinds cycled). Returns the worst mismatches.
inline std::vector<OracleMismatch> check_dp_against_brute_force(std::uint64_t seed, int count, double tol,
                                                                double* worst = nullptr) {
    Rng rng(mix64(seed));
    std::vector<OracleMismatch> bad;
    double w = 0.0;
    for (int i = 0; i < count; ++i) {
        const int n = 1 + static_cast<int>(uniform_index(rng, 3));
        const Instance inst = random_instance(rng, n, 3, profit_by_index(i));
        const double dp = opt_online_value(inst);
        const double bf = brute_force_online(inst).value;
        w = std::max(w, std::abs(dp - bf));
        if (!(std::abs(dp - bf) <= tol)) bad.push_back({i, dp, bf});
    }
    if (worst) *worst = w;
    return bad;
}

}  // namespace rstop
