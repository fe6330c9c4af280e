#include "riskdp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <boost/math/distributions/beta.hpp>

#include "riskdp/errors.hpp"

namespace riskdp {

DiscretizedCosts DiscretizedCosts::build(const MdpModel& model, int beta_points) {
    model.validate();
    DiscretizedCosts out;
    out.n_states = model.n_states;
    out.n_actions = model.n_actions;
    const std::size_t cells =
        static_cast<std::size_t>(model.n_states) * model.n_actions * model.n_states;
    if (model.cost.kind == CostKind::Deterministic) {
        out.atoms_per_cell = 1;
        out.atoms = model.cost.table;
        return out;
    }
    if (beta_points < 1)
        throw ValidationError("cost discretization needs at least one point");
    out.atoms_per_cell = beta_points;
    out.atoms.resize(cells * static_cast<std::size_t>(beta_points));
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const boost::math::beta_distribution<double> law(model.cost.alpha[cell],
                                                         model.cost.beta[cell]);
        for (int r = 0; r < beta_points; ++r) {
            const double p = (r + 0.5) / beta_points;
            out.atoms[cell * beta_points + r] =
                model.cost.c_max * boost::math::quantile(law, p);
        }
    }
    return out;
}

DiscreteDistribution one_step_distribution(const MdpModel& model,
                                           const DiscretizedCosts& costs,
                                           const ValueFunction& v, int i,
                                           std::span<const double> lambda) {
    if (i < 0 || i >= model.n_states)
        throw ValidationError("one_step_distribution: state out of range");
    if (static_cast<int>(lambda.size()) != model.n_actions)
        throw ValidationError("one_step_distribution: mixture has wrong length");
    if (static_cast<int>(v.size()) != model.n_states)
        throw ValidationError("one_step_distribution: value function has wrong length");

    DiscreteDistribution dist;
    const double atom_frac = 1.0 / costs.atoms_per_cell;
    for (int k = 0; k < model.n_actions; ++k) {
        if (lambda[k] <= 0.0) continue;
        for (int j = 0; j < model.n_states; ++j) {
            const double p = lambda[k] * model.trans(k, i, j);
            if (p <= 0.0) continue;
            const double shift = model.gamma * v[j];
            for (double c : costs.cell(i, k, j)) {
                dist.values.push_back(c + shift);
                dist.probs.push_back(p * atom_frac);
            }
        }
    }
    if (dist.values.empty()) {
        // All mixture weight sits on zero-probability rows; represent the
        // empty sum as a point mass at 0 so callers see a valid law.
        dist.values.push_back(0.0);
        dist.probs.push_back(1.0);
    }
    return dist;
}

GCurve exact_g(const MdpModel& model, const DiscretizedCosts& costs,
               const ValueFunction& v, int i, std::span<const double> lambda) {
    return curve_from_distribution(one_step_distribution(model, costs, v, i, lambda));
}

GCurve exact_g(const MdpModel& model, const ValueFunction& v, int i,
               std::span<const double> lambda) {
    const auto costs = DiscretizedCosts::build(model);
    return exact_g(model, costs, v, i, lambda);
}

namespace {

std::vector<double> delta_policy(int n_actions, int k) {
    std::vector<double> lambda(static_cast<std::size_t>(n_actions), 0.0);
    lambda[static_cast<std::size_t>(k)] = 1.0;
    return lambda;
}

CurveBundle state_bundle(const MdpModel& model, const DiscretizedCosts& costs,
                         const ValueFunction& v, int i) {
    std::vector<GCurve> per_action;
    per_action.reserve(static_cast<std::size_t>(model.n_actions));
    for (int k = 0; k < model.n_actions; ++k)
        per_action.push_back(
            exact_g(model, costs, v, i, delta_policy(model.n_actions, k)));
    return bundle_from_curves(per_action, 0.0, model.v_max());
}

}  // namespace

std::pair<ValueFunction, SimplexPolicy> bellman_apply(
    const MdpModel& model, const RiskSpec& spec, const ValueFunction& v,
    const SimplexSearch& search, const DiscretizedCosts* costs) {
    model.validate();
    spec.validate();
    search.validate();
    if (static_cast<int>(v.size()) != model.n_states)
        throw ValidationError("bellman_apply: value function has wrong length");

    DiscretizedCosts local;
    if (costs == nullptr) {
        local = DiscretizedCosts::build(model);
        costs = &local;
    }

    ValueFunction out(v.size(), 0.0);
    SimplexPolicy policy;
    policy.n_states = model.n_states;
    policy.n_actions = model.n_actions;
    policy.weights.resize(static_cast<std::size_t>(model.n_states) * model.n_actions);
    for (int i = 0; i < model.n_states; ++i) {
        const CurveBundle bundle = state_bundle(model, *costs, v, i);
        const auto result = simplex_minimize(
            model.n_actions, search,
            [&](std::span<const double> lambda) {
                return bundle.policy_risk(lambda, spec);
            });
        out[static_cast<std::size_t>(i)] = result.value;
        std::copy(result.argmin.begin(), result.argmin.end(), policy.row(i).begin());
    }
    return {std::move(out), std::move(policy)};
}

OracleSolution value_iteration(const MdpModel& model, const RiskSpec& spec,
                               double tol, int max_iter,
                               const SimplexSearch& search) {
    if (!(tol > 0.0)) throw ValidationError("value_iteration: tol must be > 0");
    const DiscretizedCosts costs = DiscretizedCosts::build(model);

    OracleSolution sol;
    sol.tol = tol;
    sol.search = search;
    ValueFunction v(static_cast<std::size_t>(model.n_states), 0.0);
    double residual = std::numeric_limits<double>::infinity();
    for (int n = 0; n < max_iter; ++n) {
        auto [next, policy] = bellman_apply(model, spec, v, search, &costs);
        residual = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i)
            residual = std::max(residual, std::abs(next[i] - v[i]));
        v = std::move(next);
        sol.iterations = n + 1;
        if (residual <= tol) {
            sol.v_star = std::move(v);
            sol.pi_star = std::move(policy);
            sol.residual = residual;
            return sol;
        }
    }
    throw NumericalError("value_iteration: no convergence after " +
                         std::to_string(max_iter) +
                         " iterations (residual " + std::to_string(residual) + ")");
}

ValueFunction nested_risk_eval(const MdpModel& model, const RiskSpec& spec,
                               const SimplexPolicy& policy, int horizon) {
    model.validate();
    spec.validate();
    policy.validate();
    if (horizon < 0) throw ValidationError("nested_risk_eval: horizon must be >= 0");
    const DiscretizedCosts costs = DiscretizedCosts::build(model);

    // Horizon T nests T + 1 one-step risks; the innermost level is the risk
    // of the terminal one-step cost.
    ValueFunction w(static_cast<std::size_t>(model.n_states), 0.0);
    for (int step = 0; step <= horizon; ++step) {
        ValueFunction next(w.size(), 0.0);
        for (int i = 0; i < model.n_states; ++i) {
            const auto dist = one_step_distribution(model, costs, w, i, policy.row(i));
            next[static_cast<std::size_t>(i)] = kusuoka_risk(dist, spec);
        }
        w = std::move(next);
    }
    return w;
}

SweepReport brute_force_policy_sweep(const MdpModel& model, const RiskSpec& spec,
                                     const SimplexSearch& search, double tol,
                                     int max_iter) {
    SweepReport report;
    report.randomized = value_iteration(model, spec, tol, max_iter, search);
    report.vertex =
        value_iteration(model, spec, tol, max_iter, SimplexSearch::vertices_only());
    report.interior_strict.resize(static_cast<std::size_t>(model.n_states));
    for (int i = 0; i < model.n_states; ++i)
        report.interior_strict[static_cast<std::size_t>(i)] =
            report.randomized.v_star[static_cast<std::size_t>(i)] <
            report.vertex.v_star[static_cast<std::size_t>(i)] - report.strict_margin;
    return report;
}

}  // namespace riskdp
