#include "riskdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace riskdp {

void MdpModel::validate(double row_tol) const {
    if (n_states < 1 || n_actions < 1)
        throw ValidationError("model needs at least one state and one action");
    if (!(gamma > 0.0) || !(gamma < 1.0))
        throw ValidationError("discount factor must lie strictly inside (0,1)");
    const std::size_t expect =
        static_cast<std::size_t>(n_actions) * n_states * n_states;
    if (transitions.size() != expect)
        throw ValidationError("transition tensor has wrong shape");
    for (int k = 0; k < n_actions; ++k)
        for (int i = 0; i < n_states; ++i) {
            double row_sum = 0.0;
            for (int j = 0; j < n_states; ++j) {
                const double p = trans(k, i, j);
                if (!(p >= 0.0))
                    throw ValidationError("transition probability negative at action " +
                                          std::to_string(k));
                row_sum += p;
            }
            if (std::abs(row_sum - 1.0) > row_tol)
                throw ValidationError("transition row not stochastic at (k=" +
                                      std::to_string(k) + ", i=" + std::to_string(i) + ")");
        }
    if (!(cost.c_max > 0.0)) throw ValidationError("c_max must be positive");
    const std::size_t cells = expect;
    switch (cost.kind) {
        case CostKind::Deterministic:
            if (cost.table.size() != cells)
                throw ValidationError("cost table has wrong shape");
            for (double c : cost.table)
                if (!(c >= 0.0) || c > cost.c_max)
                    throw ValidationError("deterministic cost outside [0, c_max]");
            break;
        case CostKind::BetaRandom:
            if (cost.alpha.size() != cells || cost.beta.size() != cells)
                throw ValidationError("cost beta parameters have wrong shape");
            for (std::size_t idx = 0; idx < cells; ++idx)
                if (!(cost.alpha[idx] > 0.0) || !(cost.beta[idx] > 0.0))
                    throw ValidationError("beta cost parameters must be positive");
            break;
    }
}

SimplexPolicy SimplexPolicy::uniform(int n_states, int n_actions) {
    SimplexPolicy p;
    p.n_states = n_states;
    p.n_actions = n_actions;
    p.weights.assign(static_cast<std::size_t>(n_states) * n_actions,
                     1.0 / n_actions);
    return p;
}

void SimplexPolicy::validate(double tol) const {
    if (n_states < 1 || n_actions < 1 ||
        weights.size() != static_cast<std::size_t>(n_states) * n_actions)
        throw ValidationError("policy has wrong shape");
    for (int i = 0; i < n_states; ++i) {
        double s = 0.0;
        for (double w : row(i)) {
            if (!(w >= 0.0)) throw ValidationError("policy weight negative");
            s += w;
        }
        if (std::abs(s - 1.0) > tol)
            throw ValidationError("policy row does not sum to 1 at state " +
                                  std::to_string(i));
    }
}

void Dataset::validate(bool require_path) const {
    if (n_states < 1 || n_actions < 1)
        throw ValidationError("dataset needs positive state/action counts");
    for (const auto& tr : transitions) {
        if (tr.x < 0 || tr.x >= n_states || tr.x_next < 0 || tr.x_next >= n_states)
            throw ValidationError("dataset state id out of range");
        if (tr.a < 0 || tr.a >= n_actions)
            throw ValidationError("dataset action id out of range");
        if (!std::isfinite(tr.c) || tr.c < 0.0)
            throw ValidationError("dataset cost invalid");
    }
    if (require_path)
        for (std::size_t t = 1; t < transitions.size(); ++t)
            if (transitions[t].x != transitions[t - 1].x_next)
                throw ValidationError("dataset records do not form a path");
}

MdpModel gen_random_mdp(int n_states, int n_actions, CostKind cost_kind,
                        double c_max, double gamma, std::uint64_t seed) {
    if (n_states < 1 || n_actions < 1)
        throw ValidationError("gen_random_mdp: dimensions must be >= 1");
    if (!(c_max > 0.0)) throw ValidationError("gen_random_mdp: c_max must be > 0");
    if (!(gamma > 0.0) || !(gamma < 1.0))
        throw ValidationError("gen_random_mdp: gamma must lie in (0,1)");

    Rng rng(seed);
    MdpModel model;
    model.n_states = n_states;
    model.n_actions = n_actions;
    model.gamma = gamma;
    model.transitions.resize(static_cast<std::size_t>(n_actions) * n_states * n_states);
    for (int k = 0; k < n_actions; ++k)
        for (int i = 0; i < n_states; ++i) {
            std::span<double> row{
                model.transitions.data() +
                    (static_cast<std::size_t>(k) * n_states + i) * n_states,
                static_cast<std::size_t>(n_states)};
            rng.dirichlet(row);
        }

    const std::size_t cells =
        static_cast<std::size_t>(n_states) * n_actions * n_states;
    model.cost.kind = cost_kind;
    model.cost.c_max = c_max;
    if (cost_kind == CostKind::Deterministic) {
        model.cost.table.resize(cells);
        for (auto& c : model.cost.table) c = rng.uniform(0.0, c_max);
    } else {
        model.cost.alpha.resize(cells);
        model.cost.beta.resize(cells);
        for (std::size_t idx = 0; idx < cells; ++idx) {
            model.cost.alpha[idx] = rng.uniform(0.5, 5.0);
            model.cost.beta[idx] = rng.uniform(0.5, 5.0);
        }
    }
    model.validate();
    return model;
}

double sample_cost(const MdpModel& model, int i, int k, int j, Rng& rng) {
    if (i < 0 || i >= model.n_states || j < 0 || j >= model.n_states ||
        k < 0 || k >= model.n_actions)
        throw ValidationError("sample_cost: id out of range");
    const std::size_t idx = model.cost_index(i, k, j);
    if (model.cost.kind == CostKind::Deterministic) return model.cost.table[idx];
    return model.cost.c_max * rng.beta(model.cost.alpha[idx], model.cost.beta[idx]);
}

Dataset simulate(const MdpModel& model, const SimplexPolicy& policy,
                 long long t_max, int x0, std::uint64_t seed) {
    model.validate();
    policy.validate();
    if (policy.n_states != model.n_states || policy.n_actions != model.n_actions)
        throw ValidationError("simulate: policy shape does not match model");
    if (t_max < 2) throw ValidationError("simulate: t_max must be >= 2");
    if (x0 < 0 || x0 >= model.n_states)
        throw ValidationError("simulate: x0 out of range");

    Rng rng(seed);
    Dataset data;
    data.n_states = model.n_states;
    data.n_actions = model.n_actions;
    data.transitions.reserve(static_cast<std::size_t>(t_max - 1));
    int x = x0;
    for (long long t = 1; t < t_max; ++t) {
        const int a = rng.discrete(policy.row(x));
        const int j = rng.discrete(model.trans_row(a, x));
        const double c = sample_cost(model, x, a, j, rng);
        data.transitions.push_back({t, x, a, j, c});
        x = j;
    }
    return data;
}

CoverageReport check_coverage(const Dataset& dataset, int n_states,
                              int n_actions, long long min_count) {
    dataset.validate();
    CoverageReport report;
    report.n_states = n_states;
    report.n_actions = n_actions;
    report.min_count = min_count;
    report.counts.assign(static_cast<std::size_t>(n_states) * n_actions, 0);
    for (const auto& tr : dataset.transitions)
        ++report.counts[static_cast<std::size_t>(tr.x) * n_actions + tr.a];
    for (int i = 0; i < n_states; ++i)
        for (int k = 0; k < n_actions; ++k)
            if (report.count(i, k) < min_count) report.flagged.emplace_back(i, k);
    report.covered = report.flagged.empty();
    return report;
}

std::vector<double> floor_simplex(std::vector<double> weights, double floor) {
    const int n = static_cast<int>(weights.size());
    if (n == 0 || floor < 0.0 || floor * n > 1.0 + 1e-12)
        throw ValidationError("floor_simplex: infeasible floor");
    std::vector<char> clamped(weights.size(), 0);
    for (int pass = 0; pass <= n; ++pass) {
        int n_clamped = 0;
        double free_sum = 0.0;
        for (int k = 0; k < n; ++k) {
            if (clamped[k])
                ++n_clamped;
            else
                free_sum += weights[k];
        }
        const int n_free = n - n_clamped;
        if (n_free == 0) break;
        const double free_mass = 1.0 - floor * n_clamped;
        bool changed = false;
        for (int k = 0; k < n; ++k) {
            if (clamped[k]) continue;
            const double scaled = free_sum > 0.0 ? weights[k] * free_mass / free_sum
                                                 : free_mass / n_free;
            if (scaled < floor) {
                clamped[k] = 1;
                changed = true;
            }
        }
        if (!changed) {
            for (int k = 0; k < n; ++k) {
                if (clamped[k])
                    weights[k] = floor;
                else
                    weights[k] = free_sum > 0.0 ? weights[k] * free_mass / free_sum
                                                : free_mass / n_free;
            }
            return weights;
        }
    }
    // Everything hit the floor; only possible when floor * n == 1.
    std::fill(weights.begin(), weights.end(), 1.0 / n);
    return weights;
}

SimplexPolicy random_exploration_policy(int n_states, int n_actions,
                                        double floor, std::uint64_t seed) {
    Rng rng(seed);
    SimplexPolicy policy;
    policy.n_states = n_states;
    policy.n_actions = n_actions;
    policy.weights.resize(static_cast<std::size_t>(n_states) * n_actions);
    for (int i = 0; i < n_states; ++i) {
        auto draw = rng.dirichlet(n_actions);
        auto floored = floor_simplex(std::move(draw), floor);
        std::copy(floored.begin(), floored.end(), policy.row(i).begin());
    }
    policy.validate(1e-9);
    // Renormalize exactly so downstream row-sum checks at 1e-12 hold.
    for (int i = 0; i < n_states; ++i) {
        auto row = policy.row(i);
        double s = 0.0;
        for (double w : row) s += w;
        for (double& w : row) w /= s;
    }
    return policy;
}

}  // namespace riskdp
