#pragma once
// Minimization over the probability simplex shared by the exact solver and
// the learner: lattice enumeration plus Dirichlet sampling plus shrinking
// local refinement, with a deterministic lexicographic tie-break so results
// do not depend on evaluation order. Also hosts the bundle of per-action
// partial-expectation curves sampled on a common breakpoint grid, and the
// exact risk evaluation of an action mixture over such a bundle.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "riskdp/risk.hpp"

namespace riskdp {

struct SimplexSearch {
    double grid_step = 0.05;     // lattice resolution (1/grid_step rounded to int)
    int n_random = 2000;         // flat Dirichlet samples
    int refine_rounds = 3;       // local rounds around the incumbent
    double refine_radius = 0.25; // initial mixing radius, shrinks x0.25 per round
    std::uint64_t seed = 0x51D0C0DEull;

    /// Exact enumeration of the action-space corners only.
    static SimplexSearch vertices_only() {
        SimplexSearch s;
        s.grid_step = 1.0;
        s.n_random = 0;
        s.refine_rounds = 0;
        return s;
    }
    void validate() const;
};

/// All points of the simplex lattice {m / resolution : sum m = resolution}.
std::vector<std::vector<double>> simplex_lattice(int dim, double step);

struct SimplexMinResult {
    double value = 0.0;
    std::vector<double> argmin;
    long long evaluations = 0;
};

/// Minimizes `eval` over the (dim-1)-simplex. The candidate set (lattice,
/// random draws, refinement) is a deterministic function of the search
/// config, and ties are broken toward the lexicographically smallest weight
/// vector, so the result is reproducible and order-independent.
SimplexMinResult simplex_minimize(
    int dim, const SimplexSearch& search,
    const std::function<double(std::span<const double>)>& eval);

/// Per-action curves g_k evaluated on one shared strictly-increasing
/// breakpoint set covering [q_front, q_back]. For an action mixture lambda
/// the curve is sum_k lambda_k g_k, so risk evaluation only ever touches
/// this matrix.
struct CurveBundle {
    std::vector<double> q;                   // shared breakpoints
    std::vector<std::vector<double>> g;      // [action][breakpoint]
    std::vector<std::vector<double>> slope;  // [action][segment]
    bool convex = true;  // per-action curves convex in q (slopes non-decreasing)

    int n_actions() const { return static_cast<int>(g.size()); }
    void build_slopes();

    /// min over the breakpoints of q + xi^-1 * sum_k lambda_k g_k(q).
    /// Convex bundles use bisection on the mixed slope; otherwise a scan.
    double inner_min(std::span<const double> lambda, double xi) const;

    /// max over measures of the weighted sum of inner minima: the risk of
    /// the one-step value distribution under action mixture lambda.
    double policy_risk(std::span<const double> lambda, const RiskSpec& spec) const;
};

/// Bundle from explicit per-action curves: breakpoints are merged, each
/// curve is evaluated on the union, and the window [q_lo, q_hi] is imposed.
CurveBundle bundle_from_curves(const std::vector<GCurve>& per_action,
                               double q_lo, double q_hi);

}  // namespace riskdp
