#pragma once
// Exact dynamic programming on a known model: the risk-averse Bellman
// operator, value iteration to its fixed point, exact partial-expectation
// curves, finite-horizon nested risk evaluation of a fixed policy, and the
// brute-force benchmark comparing randomized and vertex policies.

#include <cstdint>
#include <span>
#include <vector>

#include "riskdp/mdp.hpp"
#include "riskdp/risk.hpp"
#include "riskdp/simplex_opt.hpp"

namespace riskdp {

using ValueFunction = std::vector<double>;

/// Cost laws reduced to finite equal-mass atoms per (i, k, j) cell.
/// Deterministic costs keep their single value; Beta costs are discretized
/// by quantiles at the midpoints (r + 1/2) / n for r = 0..n-1.
struct DiscretizedCosts {
    int n_states = 0;
    int n_actions = 0;
    int atoms_per_cell = 1;
    std::vector<double> atoms;  // [i][k][j][r]

    std::span<const double> cell(int i, int k, int j) const {
        const std::size_t base =
            ((static_cast<std::size_t>(i) * n_actions + k) * n_states + j) *
            atoms_per_cell;
        return {atoms.data() + base, static_cast<std::size_t>(atoms_per_cell)};
    }
    static DiscretizedCosts build(const MdpModel& model, int beta_points = 200);
};

/// Law of the one-step value C(i, A, J) + gamma v(J) under action mixture
/// lambda at state i.
DiscreteDistribution one_step_distribution(const MdpModel& model,
                                           const DiscretizedCosts& costs,
                                           const ValueFunction& v, int i,
                                           std::span<const double> lambda);

/// Exact curve q -> sum_k lambda_k sum_j T^k_ij E[(C + gamma v(j) - q)_+].
GCurve exact_g(const MdpModel& model, const DiscretizedCosts& costs,
               const ValueFunction& v, int i, std::span<const double> lambda);
GCurve exact_g(const MdpModel& model, const ValueFunction& v, int i,
               std::span<const double> lambda);

/// One application of the Bellman operator: per state, minimizes the
/// mixture risk over the simplex. Returns the new values and the per-state
/// argmin mixtures.
std::pair<ValueFunction, SimplexPolicy> bellman_apply(
    const MdpModel& model, const RiskSpec& spec, const ValueFunction& v,
    const SimplexSearch& search, const DiscretizedCosts* costs = nullptr);

struct OracleSolution {
    ValueFunction v_star;
    SimplexPolicy pi_star;
    int iterations = 0;
    double residual = 0.0;
    double tol = 0.0;
    SimplexSearch search;
};

/// Iterates v <- Sv from v = 0 until the sup-norm residual drops below tol.
/// Throws NumericalError (carrying the last residual) past max_iter.
OracleSolution value_iteration(const MdpModel& model, const RiskSpec& spec,
                               double tol, int max_iter,
                               const SimplexSearch& search);

/// Finite-horizon nested risk of the cost stream under a fixed policy:
/// the horizon-T functional applies T + 1 backward risk steps (horizon 0 is
/// the risk of the one-step cost alone).
ValueFunction nested_risk_eval(const MdpModel& model, const RiskSpec& spec,
                               const SimplexPolicy& policy, int horizon);

struct SweepReport {
    OracleSolution randomized;            // dense simplex search
    OracleSolution vertex;                // deterministic-policy benchmark
    std::vector<char> interior_strict;    // randomized beats vertices by margin
    double strict_margin = 1e-6;
};

/// The benchmark sweep: solves with the dense randomized search and with
/// vertex-only candidates, and records where an interior mixture strictly
/// beats every deterministic action.
SweepReport brute_force_policy_sweep(const MdpModel& model, const RiskSpec& spec,
                                     const SimplexSearch& search, double tol = 1e-9,
                                     int max_iter = 200);

}  // namespace riskdp
