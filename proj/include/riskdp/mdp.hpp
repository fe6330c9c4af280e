#pragma once
// Finite MDP model with per-action transition matrices, a bounded cost model
// (deterministic table or Beta-distributed with per-triple parameters),
// randomized stationary policies, and seeded trajectory simulation.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "riskdp/errors.hpp"
#include "riskdp/rng.hpp"

namespace riskdp {

enum class CostKind { Deterministic, BetaRandom };

/// Cost of a transition (i, k, j), bounded in [0, c_max]. Deterministic uses
/// `table`; BetaRandom draws c_max * Beta(alpha[i,k,j], beta[i,k,j]).
struct CostModel {
    CostKind kind = CostKind::Deterministic;
    double c_max = 1.0;
    std::vector<double> table;  // [i][k][j], Deterministic only
    std::vector<double> alpha;  // [i][k][j], BetaRandom only
    std::vector<double> beta;   // [i][k][j], BetaRandom only
};

struct MdpModel {
    int n_states = 0;
    int n_actions = 0;
    double gamma = 0.0;
    std::vector<double> transitions;  // [k][i][j] row-stochastic per (k, i)
    CostModel cost;

    double trans(int k, int i, int j) const {
        return transitions[(static_cast<std::size_t>(k) * n_states + i) * n_states + j];
    }
    std::span<const double> trans_row(int k, int i) const {
        return {transitions.data() + (static_cast<std::size_t>(k) * n_states + i) * n_states,
                static_cast<std::size_t>(n_states)};
    }
    std::size_t cost_index(int i, int k, int j) const {
        return (static_cast<std::size_t>(i) * n_actions + k) * n_states + j;
    }
    /// Upper end of the admissible value range, c_max / (1 - gamma).
    double v_max() const { return cost.c_max / (1.0 - gamma); }

    void validate(double row_tol = 1e-12) const;
};

/// Stationary randomized policy: one probability vector over actions per
/// state, stored row-major.
struct SimplexPolicy {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> weights;

    std::span<const double> row(int i) const {
        return {weights.data() + static_cast<std::size_t>(i) * n_actions,
                static_cast<std::size_t>(n_actions)};
    }
    std::span<double> row(int i) {
        return {weights.data() + static_cast<std::size_t>(i) * n_actions,
                static_cast<std::size_t>(n_actions)};
    }
    static SimplexPolicy uniform(int n_states, int n_actions);
    void validate(double tol = 1e-12) const;
};

struct Transition {
    long long t = 0;  // step index of the departing state
    int x = 0;
    int a = 0;
    int x_next = 0;
    double c = 0.0;
};

struct Dataset {
    int n_states = 0;
    int n_actions = 0;
    std::vector<Transition> transitions;

    void validate(bool require_path = false) const;
};

struct CoverageReport {
    int n_states = 0;
    int n_actions = 0;
    long long min_count = 0;
    std::vector<long long> counts;                // [i][k]
    std::vector<std::pair<int, int>> flagged;     // pairs with count < min_count
    bool covered = false;

    long long count(int i, int k) const {
        return counts[static_cast<std::size_t>(i) * n_actions + k];
    }
};

/// Random instance: transition rows from a flat Dirichlet, deterministic
/// costs uniform on [0, c_max] or Beta parameters uniform on [0.5, 5].
/// Same seed, same model, bit for bit.
MdpModel gen_random_mdp(int n_states, int n_actions, CostKind cost_kind,
                        double c_max, double gamma, std::uint64_t seed);

/// Realized cost of transition (i, k, j); always in [0, c_max].
double sample_cost(const MdpModel& model, int i, int k, int j, Rng& rng);

/// One trajectory of t_max - 1 transitions starting from x0.
Dataset simulate(const MdpModel& model, const SimplexPolicy& policy,
                 long long t_max, int x0, std::uint64_t seed);

/// Per-(state, action) visit counts with pairs under min_count flagged.
CoverageReport check_coverage(const Dataset& dataset, int n_states,
                              int n_actions, long long min_count);

/// Redistributes simplex weights so every entry is >= floor while the vector
/// still sums to 1 (waterfill: clamp low entries, rescale the rest).
std::vector<double> floor_simplex(std::vector<double> weights, double floor);

/// Exploration policy for data collection: per-state flat Dirichlet draw,
/// floored so every action keeps probability >= floor.
SimplexPolicy random_exploration_policy(int n_states, int n_actions,
                                        double floor, std::uint64_t seed);

}  // namespace riskdp
