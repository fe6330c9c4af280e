#include "riskdp/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace riskdp {

namespace {

double pos(double x) { return x > 0.0 ? x : 0.0; }

struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double get() const { return sum + comp; }
};

// Least-squares projection onto non-increasing sequences (pool adjacent
// violators on the negated values).
void isotonic_nonincreasing(std::span<double> y) {
    const std::size_t n = y.size();
    std::vector<double> value(n);
    std::vector<double> weight(n);
    std::vector<std::size_t> size(n);
    std::size_t blocks = 0;
    for (std::size_t idx = 0; idx < n; ++idx) {
        value[blocks] = y[idx];
        weight[blocks] = 1.0;
        size[blocks] = 1;
        ++blocks;
        while (blocks > 1 && value[blocks - 2] < value[blocks - 1]) {
            const double w = weight[blocks - 2] + weight[blocks - 1];
            value[blocks - 2] =
                (weight[blocks - 2] * value[blocks - 2] +
                 weight[blocks - 1] * value[blocks - 1]) / w;
            weight[blocks - 2] = w;
            size[blocks - 2] += size[blocks - 1];
            --blocks;
        }
    }
    std::size_t idx = 0;
    for (std::size_t blk = 0; blk < blocks; ++blk)
        for (std::size_t r = 0; r < size[blk]; ++r) y[idx++] = value[blk];
}

}  // namespace

QGrid QGrid::uniform(int m_grid, double q_lo, double q_hi) {
    if (m_grid < 2) throw ValidationError("q-grid needs at least 2 points");
    if (!(q_lo < q_hi)) throw ValidationError("q-grid needs q_lo < q_hi");
    QGrid grid;
    grid.points.resize(static_cast<std::size_t>(m_grid));
    for (int m = 0; m < m_grid; ++m)
        grid.points[static_cast<std::size_t>(m)] =
            q_lo + (q_hi - q_lo) * m / (m_grid - 1);
    grid.points.back() = q_hi;
    return grid;
}

double QGrid::spacing() const {
    double widest = 0.0;
    for (std::size_t m = 1; m < points.size(); ++m)
        widest = std::max(widest, points[m] - points[m - 1]);
    return widest;
}

void QGrid::validate() const {
    if (points.size() < 2) throw ValidationError("q-grid needs at least 2 points");
    if (!(points.front() >= 0.0)) throw ValidationError("q-grid must start at >= 0");
    for (std::size_t m = 1; m < points.size(); ++m)
        if (!(points[m] > points[m - 1]))
            throw ValidationError("q-grid points must strictly increase");
}

EstimatedTransitions mle_transition(const Dataset& dataset, int n_states,
                                    int n_actions) {
    dataset.validate();
    if (dataset.n_states > n_states || dataset.n_actions > n_actions)
        throw ValidationError("mle_transition: dataset ids exceed given dimensions");

    EstimatedTransitions est;
    est.n_states = n_states;
    est.n_actions = n_actions;
    est.pair_counts.assign(static_cast<std::size_t>(n_states) * n_actions, 0);
    est.triple_counts.assign(
        static_cast<std::size_t>(n_states) * n_actions * n_states, 0);
    for (const auto& tr : dataset.transitions) {
        ++est.pair_counts[static_cast<std::size_t>(tr.x) * n_actions + tr.a];
        ++est.triple_counts[(static_cast<std::size_t>(tr.x) * n_actions + tr.a) *
                                n_states + tr.x_next];
    }
    est.t_hat.assign(static_cast<std::size_t>(n_actions) * n_states * n_states, 0.0);
    for (int i = 0; i < n_states; ++i)
        for (int k = 0; k < n_actions; ++k) {
            const long long total = est.pair_count(i, k);
            for (int j = 0; j < n_states; ++j) {
                const std::size_t out =
                    (static_cast<std::size_t>(k) * n_states + i) * n_states + j;
                if (total > 0) {
                    const long long hits =
                        est.triple_counts[(static_cast<std::size_t>(i) * n_actions + k) *
                                              n_states + j];
                    est.t_hat[out] = static_cast<double>(hits) / total;
                } else {
                    est.t_hat[out] = 1.0 / n_states;
                }
            }
            if (total == 0) est.unvisited.emplace_back(i, k);
        }
    return est;
}

double TableApprox::eval(int i, int k, double q) const {
    const auto& pts = grid.points;
    const auto vals = row(i, k);
    if (q <= pts.front()) return vals.front();
    if (q >= pts.back()) return vals.back();
    const auto it = std::upper_bound(pts.begin(), pts.end(), q);
    const std::size_t hi = static_cast<std::size_t>(it - pts.begin());
    const std::size_t lo = hi - 1;
    const double w = (q - pts[lo]) / (pts[hi] - pts[lo]);
    return vals[lo] + w * (vals[hi] - vals[lo]);
}

void TableApprox::check_monotone(double tol) const {
    for (int i = 0; i < n_states; ++i)
        for (int k = 0; k < n_actions; ++k) {
            const auto vals = row(i, k);
            for (std::size_t m = 1; m < vals.size(); ++m)
                if (vals[m] > vals[m - 1] + tol)
                    throw ValidationError("table surrogate increases along the grid at (" +
                                          std::to_string(i) + "," + std::to_string(k) + ")");
        }
}

double MlpApprox::eval(int i, int k, double q) const {
    double unused;
    return eval_with_qgrad(i, k, q, &unused);
}

double MlpApprox::eval_with_qgrad(int i, int k, double q, double* dq) const {
    std::vector<double> x(static_cast<std::size_t>(n_states + n_actions + 1), 0.0);
    x[static_cast<std::size_t>(i)] = 1.0;
    x[static_cast<std::size_t>(n_states + k)] = 1.0;
    x.back() = q / q_scale;
    const int q_index = n_states + n_actions;
    const double out = net.forward_with_input_grad(x, q_index, dq);
    *dq /= q_scale;
    return out;
}

double approx_eval(const GApproximator& approx, int i, int k, double q) {
    return std::visit([&](const auto& backend) { return backend.eval(i, k, q); },
                      approx);
}

const QGrid& approx_grid(const GApproximator& approx) {
    return std::visit([](const auto& backend) -> const QGrid& { return backend.grid; },
                      approx);
}

TableApprox fit_g_table(const Dataset& dataset, const ValueFunction& v_hat,
                        const QGrid& grid, double gamma, FitStats* stats) {
    dataset.validate();
    grid.validate();
    if (dataset.transitions.empty())
        throw ValidationError("fit_g_table: empty dataset");
    if (static_cast<int>(v_hat.size()) != dataset.n_states)
        throw ValidationError("fit_g_table: value function has wrong length");

    const int S = dataset.n_states, A = dataset.n_actions;
    const std::size_t m_grid = grid.points.size();

    // One-step realized values grouped by (state, action), plus a pooled
    // list as the fallback target for pairs with no data.
    std::vector<std::vector<double>> groups(static_cast<std::size_t>(S) * A);
    std::vector<double> pooled;
    pooled.reserve(dataset.transitions.size());
    for (const auto& tr : dataset.transitions) {
        const double base = tr.c + gamma * v_hat[static_cast<std::size_t>(tr.x_next)];
        groups[static_cast<std::size_t>(tr.x) * A + tr.a].push_back(base);
        pooled.push_back(base);
    }
    std::sort(pooled.begin(), pooled.end());

    TableApprox table;
    table.n_states = S;
    table.n_actions = A;
    table.grid = grid;
    table.values.assign(static_cast<std::size_t>(S) * A * m_grid, 0.0);

    KahanSum loss_sum;
    std::vector<double> suf1, suf2;
    auto fit_row = [&](const std::vector<double>& bases, std::span<double> out,
                       bool count_loss) {
        const std::size_t n = bases.size();
        suf1.assign(n + 1, 0.0);
        suf2.assign(n + 1, 0.0);
        KahanSum s1, s2;
        for (std::size_t idx = n; idx-- > 0;) {
            s1.add(bases[idx]);
            s2.add(bases[idx] * bases[idx]);
            suf1[idx] = s1.get();
            suf2[idx] = s2.get();
        }
        for (std::size_t m = 0; m < m_grid; ++m) {
            const double q = grid.points[m];
            const std::size_t idx = static_cast<std::size_t>(
                std::upper_bound(bases.begin(), bases.end(), q) - bases.begin());
            const double cnt = static_cast<double>(n - idx);
            const double sum_h = suf1[idx] - q * cnt;
            const double mean = sum_h / static_cast<double>(n);
            out[m] = mean;
            if (count_loss) {
                const double sum_h2 = suf2[idx] - 2.0 * q * suf1[idx] + q * q * cnt;
                loss_sum.add(sum_h2 - static_cast<double>(n) * mean * mean);
            }
        }
    };

    std::vector<std::pair<int, int>> uncovered;
    for (int i = 0; i < S; ++i)
        for (int k = 0; k < A; ++k) {
            auto& bases = groups[static_cast<std::size_t>(i) * A + k];
            std::span<double> out{
                table.values.data() + (static_cast<std::size_t>(i) * A + k) * m_grid,
                m_grid};
            if (bases.empty()) {
                uncovered.emplace_back(i, k);
                fit_row(pooled, out, false);
            } else {
                std::sort(bases.begin(), bases.end());
                fit_row(bases, out, true);
            }
            isotonic_nonincreasing(out);
        }

    if (stats != nullptr) {
        stats->data_loss = std::max(0.0, loss_sum.get()) /
                           (static_cast<double>(dataset.transitions.size()) *
                            static_cast<double>(m_grid));
        stats->penalty = 0.0;
        stats->uncovered = uncovered;
    }
    return table;
}

MlpApprox fit_g_mlp(const Dataset& dataset, const ValueFunction& v_hat,
                    const QGrid& grid, double gamma, const MlpHyper& hyper,
                    const MlpShape& shape, std::uint64_t seed,
                    const MlpApprox* warm_start, FitStats* stats) {
    dataset.validate();
    grid.validate();
    if (dataset.transitions.empty()) throw ValidationError("fit_g_mlp: empty dataset");
    if (static_cast<int>(v_hat.size()) != dataset.n_states)
        throw ValidationError("fit_g_mlp: value function has wrong length");
    if (hyper.epochs < 1 || hyper.minibatch < 1 || !(hyper.learning_rate > 0.0) ||
        !(hyper.beta >= 0.0))
        throw ValidationError("fit_g_mlp: bad hyperparameters");

    const int S = dataset.n_states, A = dataset.n_actions;
    const int m_grid = static_cast<int>(grid.points.size());
    const int input_dim = S + A + 1;

    MlpApprox approx;
    approx.n_states = S;
    approx.n_actions = A;
    approx.grid = grid;
    approx.q_scale = grid.points.back() > 0.0 ? grid.points.back() : 1.0;
    if (warm_start != nullptr && warm_start->net.input_dim() == input_dim &&
        warm_start->n_states == S && warm_start->n_actions == A)
        approx.net = warm_start->net;
    else
        approx.net = Mlp(input_dim, shape, derive_seed(seed, 0));

    const std::size_t n_t = dataset.transitions.size();
    std::vector<double> base(n_t);
    for (std::size_t t = 0; t < n_t; ++t)
        base[t] = dataset.transitions[t].c +
                  gamma * v_hat[static_cast<std::size_t>(dataset.transitions[t].x_next)];

    const std::size_t n_samples = n_t * static_cast<std::size_t>(m_grid);
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), std::size_t{0});

    Rng rng(derive_seed(seed, 1));
    std::vector<double> grad(approx.net.n_params());
    std::vector<double> x(static_cast<std::size_t>(input_dim), 0.0);
    // Penalty weight per step: the full objective divides by the number of
    // data terms, and each step sees one of the S*A penalty rows in turn.
    const double penalty_scale =
        hyper.beta * static_cast<double>(S) * A / static_cast<double>(n_samples);

    long long step = 0;
    double epoch_loss = 0.0;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        // Fisher-Yates with our own stream; std::shuffle is not portable.
        for (std::size_t idx = n_samples - 1; idx > 0; --idx) {
            const std::size_t pick =
                static_cast<std::size_t>(rng.uniform() * static_cast<double>(idx + 1));
            std::swap(order[idx], order[pick > idx ? idx : pick]);
        }
        KahanSum loss;
        for (std::size_t start = 0; start < n_samples;
             start += static_cast<std::size_t>(hyper.minibatch)) {
            const std::size_t stop =
                std::min(n_samples, start + static_cast<std::size_t>(hyper.minibatch));
            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t s = start; s < stop; ++s) {
                const std::size_t t = order[s] / static_cast<std::size_t>(m_grid);
                const int m = static_cast<int>(order[s] % static_cast<std::size_t>(m_grid));
                const auto& tr = dataset.transitions[t];
                std::fill(x.begin(), x.end(), 0.0);
                x[static_cast<std::size_t>(tr.x)] = 1.0;
                x[static_cast<std::size_t>(S + tr.a)] = 1.0;
                x.back() = grid.points[static_cast<std::size_t>(m)] / approx.q_scale;
                const double target = pos(base[t] - grid.points[static_cast<std::size_t>(m)]);
                const double f = approx.net.forward(x);
                const double r = f - target;
                batch_loss += r * r;
                approx.net.backward(x, 2.0 * r * inv_batch, grad);
            }
            batch_loss *= inv_batch;
            if (!std::isfinite(batch_loss))
                throw NumericalError("fit_g_mlp: non-finite loss at step " +
                                     std::to_string(step));
            if (hyper.beta > 0.0) {
                // One (state, action) penalty row per step, cycled.
                const int pair = static_cast<int>(step % (static_cast<long long>(S) * A));
                const int pi = pair / A, pk = pair % A;
                std::fill(x.begin(), x.end(), 0.0);
                x[static_cast<std::size_t>(pi)] = 1.0;
                x[static_cast<std::size_t>(S + pk)] = 1.0;
                double prev_f = 0.0;
                for (int m = 0; m < m_grid; ++m) {
                    x.back() = grid.points[static_cast<std::size_t>(m)] / approx.q_scale;
                    const double f = approx.net.forward(x);
                    if (m > 0 && f > prev_f) {
                        approx.net.backward(x, penalty_scale, grad);
                        x.back() = grid.points[static_cast<std::size_t>(m - 1)] / approx.q_scale;
                        approx.net.backward(x, -penalty_scale, grad);
                        x.back() = grid.points[static_cast<std::size_t>(m)] / approx.q_scale;
                    }
                    prev_f = f;
                }
            }
            auto& params = approx.net.weights();
            for (std::size_t p = 0; p < params.size(); ++p)
                params[p] -= hyper.learning_rate * grad[p];
            loss.add(batch_loss * static_cast<double>(stop - start));
            ++step;
        }
        epoch_loss = loss.get() / static_cast<double>(n_samples);
    }

    if (stats != nullptr) {
        stats->data_loss = epoch_loss;
        stats->uncovered.clear();
        // Full monotonicity violation mass of the trained network.
        KahanSum psi;
        for (int i = 0; i < S; ++i)
            for (int k = 0; k < A; ++k)
                for (int m = 0; m + 1 < m_grid; ++m)
                    psi.add(pos(approx.eval(i, k, grid.points[static_cast<std::size_t>(m + 1)]) -
                                approx.eval(i, k, grid.points[static_cast<std::size_t>(m)])));
        stats->penalty = psi.get();
    }
    return approx;
}

namespace {

CurveBundle table_bundle(const TableApprox& table, int i) {
    CurveBundle bundle;
    bundle.q = table.grid.points;
    bundle.g.resize(static_cast<std::size_t>(table.n_actions));
    for (int k = 0; k < table.n_actions; ++k) {
        const auto vals = table.row(i, k);
        bundle.g[static_cast<std::size_t>(k)].assign(vals.begin(), vals.end());
    }
    bundle.build_slopes();
    // Hinge means are convex in q; tolerate float wobble, fall back to a
    // full scan if a row is genuinely non-convex (e.g. loaded from a file).
    bundle.convex = true;
    for (const auto& row : bundle.slope)
        for (std::size_t s = 1; s < row.size(); ++s)
            if (row[s] < row[s - 1] - 1e-9) bundle.convex = false;
    return bundle;
}

CurveBundle mlp_bundle(const MlpApprox& approx, int i) {
    CurveBundle bundle;
    bundle.q = approx.grid.points;
    bundle.g.resize(static_cast<std::size_t>(approx.n_actions));
    for (int k = 0; k < approx.n_actions; ++k) {
        auto& row = bundle.g[static_cast<std::size_t>(k)];
        row.resize(bundle.q.size());
        for (std::size_t m = 0; m < bundle.q.size(); ++m)
            row[m] = approx.eval(i, k, bundle.q[m]);
    }
    bundle.build_slopes();
    bundle.convex = false;  // network output need not be convex in q
    return bundle;
}

/// Gradient-descent polish of min_q { q + xi^-1 sum_k lambda_k f(i,k,q) }
/// for the network backend: best grid point plus random restarts.
double polish_inner_min(const MlpApprox& approx, int i,
                        std::span<const double> lambda, double xi,
                        double grid_best, Rng& rng) {
    const double q_hi = approx.grid.points.back();
    const double q_lo = approx.grid.points.front();
    double best = grid_best;
    const int restarts = 8, steps = 60;
    const double rate = 0.05 * (q_hi - q_lo);
    for (int r = 0; r < restarts; ++r) {
        double q = rng.uniform(q_lo, q_hi);
        for (int s = 0; s < steps; ++s) {
            double slope_sum = 0.0;
            for (int k = 0; k < approx.n_actions; ++k) {
                if (lambda[static_cast<std::size_t>(k)] == 0.0) continue;
                double dq = 0.0;
                approx.eval_with_qgrad(i, k, q, &dq);
                slope_sum += lambda[static_cast<std::size_t>(k)] * dq;
            }
            q -= rate * (1.0 + slope_sum / xi);
            q = std::clamp(q, q_lo, q_hi);
        }
        double value = q;
        for (int k = 0; k < approx.n_actions; ++k)
            if (lambda[static_cast<std::size_t>(k)] != 0.0)
                value += lambda[static_cast<std::size_t>(k)] * approx.eval(i, k, q) / xi;
        best = std::min(best, value);
    }
    return best;
}

}  // namespace

std::pair<ValueFunction, SimplexPolicy> value_policy_update(
    const GApproximator& approx, const RiskSpec& spec,
    const SimplexSearch& search, double v_max, std::uint64_t polish_seed) {
    spec.validate();
    search.validate();
    const int S = std::visit([](const auto& b) { return b.n_states; }, approx);
    const int A = std::visit([](const auto& b) { return b.n_actions; }, approx);

    ValueFunction v(static_cast<std::size_t>(S), 0.0);
    SimplexPolicy policy;
    policy.n_states = S;
    policy.n_actions = A;
    policy.weights.resize(static_cast<std::size_t>(S) * A);

    for (int i = 0; i < S; ++i) {
        const CurveBundle bundle = std::visit(
            [&](const auto& backend) {
                using T = std::decay_t<decltype(backend)>;
                if constexpr (std::is_same_v<T, TableApprox>)
                    return table_bundle(backend, i);
                else
                    return mlp_bundle(backend, i);
            },
            approx);
        auto result = simplex_minimize(
            A, search,
            [&](std::span<const double> lambda) {
                return bundle.policy_risk(lambda, spec);
            });

        if (const auto* mlp = std::get_if<MlpApprox>(&approx)) {
            // Recompute the value at the recorded mixture with gradient
            // descent restarts on q in addition to the grid scan.
            Rng rng(derive_seed(polish_seed, static_cast<std::uint64_t>(i)));
            double worst = -std::numeric_limits<double>::infinity();
            for (const auto& measure : spec.measures) {
                double mixed = 0.0;
                for (const auto& atom : measure.atoms) {
                    const double grid_best = bundle.inner_min(result.argmin, atom.xi);
                    mixed += atom.weight *
                             polish_inner_min(*mlp, i, result.argmin, atom.xi,
                                              grid_best, rng);
                }
                worst = std::max(worst, mixed);
            }
            result.value = worst;
        }

        v[static_cast<std::size_t>(i)] = std::clamp(result.value, 0.0, v_max);
        std::copy(result.argmin.begin(), result.argmin.end(), policy.row(i).begin());
    }
    return {std::move(v), std::move(policy)};
}

LearnedSolution run_algorithm(const Dataset& dataset, const RiskSpec& spec,
                              const AlgoConfig& config) {
    dataset.validate();
    spec.validate();
    config.grid.validate();
    if (dataset.transitions.empty())
        throw ValidationError("run_algorithm: empty dataset");

    LearnedSolution sol;
    sol.v_hat.assign(static_cast<std::size_t>(dataset.n_states), 0.0);

    const MlpApprox* warm = nullptr;
    for (int outer = 0; outer < config.max_outer; ++outer) {
        FitStats stats;
        if (config.backend == Backend::Table) {
            sol.approx = fit_g_table(dataset, sol.v_hat, config.grid, config.gamma,
                                     &stats);
        } else {
            sol.approx = fit_g_mlp(dataset, sol.v_hat, config.grid, config.gamma,
                                   config.hyper, config.shape,
                                   derive_seed(config.seed, static_cast<std::uint64_t>(outer)),
                                   config.warm_start ? warm : nullptr, &stats);
            warm = std::get_if<MlpApprox>(&sol.approx);
        }
        if (outer == 0) sol.uncovered = stats.uncovered;

        auto [v_next, pi_next] = value_policy_update(
            sol.approx, spec, config.search, config.v_max(),
            derive_seed(config.seed, 0x9000u + static_cast<std::uint64_t>(outer)));

        double delta = 0.0;
        for (std::size_t idx = 0; idx < v_next.size(); ++idx)
            delta = std::max(delta, std::abs(v_next[idx] - sol.v_hat[idx]));
        sol.v_hat = std::move(v_next);
        sol.pi_hat = std::move(pi_next);
        sol.history.push_back({delta, stats.data_loss});
        if (delta < config.stop_tol) {
            sol.converged = true;
            break;
        }
    }
    return sol;
}

void BoundParams::validate() const {
    if (n_states < 1 || n_actions < 1)
        throw ValidationError("bound: dimensions must be >= 1");
    if (!(epsilon >= 0.0) || epsilon > 1.0)
        throw ValidationError("bound: epsilon must lie in [0,1]");
    if (!(epsilon_e > 0.0) || !(epsilon_e < 1.0))
        throw ValidationError("bound: epsilon_e must lie in (0,1)");
    if (!(b > 0.0) || !(b < 1.0)) throw ValidationError("bound: b must lie in (0,1)");
    if (ell < 1) throw ValidationError("bound: ell must be >= 1");
    if (t_max <= ell) throw ValidationError("bound: t_max must exceed ell");
    if (epsilon_theta < 0.0 || epsilon_v < 0.0)
        throw ValidationError("bound: approximation errors must be >= 0");
    if (!(gamma > 0.0) || !(gamma < 1.0))
        throw ValidationError("bound: gamma must lie in (0,1)");
    if (!(c_max > 0.0)) throw ValidationError("bound: c_max must be > 0");
    if (n < 0 || v0_gap < 0.0)
        throw ValidationError("bound: n and v0_gap must be >= 0");
}

BoundResult finite_sample_bound(const BoundParams& p) {
    p.validate();
    const double windows =
        static_cast<double>((p.t_max - 1) / p.ell);  // floor((t_max-1)/ell)
    const double term1 = std::exp(-(p.epsilon_e * p.epsilon_e / 4.0) * windows);
    const double term2 = std::exp(-(p.epsilon * p.epsilon * p.epsilon_e * p.epsilon_e /
                                    (8.0 * static_cast<double>(p.ell))) * windows);
    const double states = static_cast<double>(p.n_states);
    const double actions = static_cast<double>(p.n_actions);
    BoundResult out;
    out.prob_lower =
        std::clamp(1.0 - 3.0 * states * states * actions * (term1 + term2), 0.0, 1.0);
    out.err_upper = std::pow(p.gamma, static_cast<double>(p.n)) * p.v0_gap +
                    p.c_max * p.epsilon / (p.b * (1.0 - p.gamma) * (1.0 - p.gamma)) +
                    (p.epsilon_theta / p.b + p.epsilon_v) / (1.0 - p.gamma);
    return out;
}

double deviation_pair_bound(long long t_max, long long ell, double eps_e,
                       double epsilon, long long N) {
    if (t_max <= ell || ell < 1 || !(eps_e > 0.0) || !(epsilon > 0.0))
        throw ValidationError("deviation_pair_bound: bad parameters");
    const double windows = static_cast<double>((t_max - 1) / ell);
    if (!(static_cast<double>(N) < eps_e * windows) || N < 1) return 1.0;
    const double gap = static_cast<double>(N) - eps_e * windows;
    const double term1 = std::exp(-gap * gap / windows);
    const double term2 = 2.0 * std::exp(-epsilon * epsilon * static_cast<double>(N) *
                                        static_cast<double>(N) /
                                        (2.0 * static_cast<double>(t_max)));
    return std::min(1.0, term1 + term2);
}

double deviation_union_bound(int n_states, int n_actions, long long t_max,
                        long long ell, double eps_e, double epsilon) {
    const double windows = static_cast<double>((t_max - 1) / ell);
    const long long n_max = static_cast<long long>(std::ceil(eps_e * windows)) - 1;
    if (n_max < 1) return 1.0;
    double best = 1.0;
    for (long long N = 1; N <= n_max; ++N)
        best = std::min(best, deviation_pair_bound(t_max, ell, eps_e, epsilon, N));
    const double triples = static_cast<double>(n_states) * n_states * n_actions;
    return std::min(1.0, triples * best);
}

double measured_eps_e(const MdpModel& model, const SimplexPolicy& policy) {
    model.validate();
    policy.validate();
    double floor = std::numeric_limits<double>::infinity();
    for (int i = 0; i < model.n_states; ++i)
        for (int k = 0; k < model.n_actions; ++k) {
            // reach (i, k) one step after any current pair (i', k')
            double worst = std::numeric_limits<double>::infinity();
            for (int i2 = 0; i2 < model.n_states; ++i2)
                for (int k2 = 0; k2 < model.n_actions; ++k2)
                    worst = std::min(worst, model.trans(k2, i2, i));
            floor = std::min(floor, worst * policy.row(i)[static_cast<std::size_t>(k)]);
        }
    return floor;
}

DeviationReport deviation_bound_suite(const MdpModel& model, const SimplexPolicy& policy,
                            long long t_max, double epsilon, int n_seeds,
                            std::uint64_t master_seed) {
    if (n_seeds < 1) throw ValidationError("deviation_bound_suite: n_seeds must be >= 1");
    DeviationReport report;
    report.t_max = t_max;
    report.epsilon = epsilon;
    report.n_seeds = n_seeds;
    report.eps_e = measured_eps_e(model, policy);
    report.bound = report.eps_e > 0.0
                       ? deviation_union_bound(model.n_states, model.n_actions, t_max, 1,
                                          report.eps_e, epsilon)
                       : 1.0;
    report.vacuous = report.bound >= 1.0;

    int exceed = 0;
    report.max_devs.reserve(static_cast<std::size_t>(n_seeds));
    for (int s = 0; s < n_seeds; ++s) {
        const Dataset data =
            simulate(model, policy, t_max, 0, derive_seed(master_seed, s));
        const auto est = mle_transition(data, model.n_states, model.n_actions);
        double dev = 0.0;
        for (int k = 0; k < model.n_actions; ++k)
            for (int i = 0; i < model.n_states; ++i)
                for (int j = 0; j < model.n_states; ++j)
                    dev = std::max(dev, std::abs(est.prob(k, i, j) - model.trans(k, i, j)));
        report.max_devs.push_back(dev);
        if (dev > epsilon) ++exceed;
    }
    report.empirical_freq = static_cast<double>(exceed) / n_seeds;
    std::vector<double> sorted = report.max_devs;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    report.median_max_dev = sorted.size() % 2 == 1
                                ? sorted[mid]
                                : 0.5 * (sorted[mid - 1] + sorted[mid]);
    return report;
}

}  // namespace riskdp
