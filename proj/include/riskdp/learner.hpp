#pragma once
// Sample-based distributional learner: transition MLE, least-squares fit of
// the partial-expectation surrogate on a q-grid (closed form for the table
// backend, penalized SGD for the network backend), the value/policy update
// through the risk functional, the outer fixed-point loop, and the
// finite-sample bound calculator with its empirical companion suite.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "riskdp/mdp.hpp"
#include "riskdp/mlp.hpp"
#include "riskdp/oracle.hpp"
#include "riskdp/risk.hpp"
#include "riskdp/simplex_opt.hpp"

namespace riskdp {

struct QGrid {
    std::vector<double> points;  // strictly increasing, spanning [0, q_max]

    static QGrid uniform(int m_grid, double q_lo, double q_hi);
    double spacing() const;
    void validate() const;
};

/// Maximum-likelihood transition estimate with raw counts. Rows of
/// unvisited (state, action) pairs are filled uniformly and flagged.
struct EstimatedTransitions {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> t_hat;                    // [k][i][j]
    std::vector<long long> pair_counts;           // [i][k]
    std::vector<long long> triple_counts;         // [i][k][j]
    std::vector<std::pair<int, int>> unvisited;   // flagged (i, k) pairs

    double prob(int k, int i, int j) const {
        return t_hat[(static_cast<std::size_t>(k) * n_states + i) * n_states + j];
    }
    long long pair_count(int i, int k) const {
        return pair_counts[static_cast<std::size_t>(i) * n_actions + k];
    }
};

EstimatedTransitions mle_transition(const Dataset& dataset, int n_states,
                                    int n_actions);

/// Table surrogate: one value per (state, action, grid point), linear in q
/// between grid points and constant beyond the ends.
struct TableApprox {
    int n_states = 0;
    int n_actions = 0;
    QGrid grid;
    std::vector<double> values;  // [i][k][m]

    double at(int i, int k, int m) const {
        return values[(static_cast<std::size_t>(i) * n_actions + k) *
                          grid.points.size() +
                      m];
    }
    double eval(int i, int k, double q) const;
    std::span<const double> row(int i, int k) const {
        return {values.data() + (static_cast<std::size_t>(i) * n_actions + k) *
                                    grid.points.size(),
                grid.points.size()};
    }
    /// Non-increasing along the grid (up to tol); throws otherwise.
    void check_monotone(double tol = 1e-9) const;
};

/// Network surrogate; q enters scaled by 1 / q_scale into [0, 1].
struct MlpApprox {
    int n_states = 0;
    int n_actions = 0;
    QGrid grid;
    double q_scale = 1.0;
    Mlp net;

    double eval(int i, int k, double q) const;
    double eval_with_qgrad(int i, int k, double q, double* dq) const;
};

using GApproximator = std::variant<TableApprox, MlpApprox>;

double approx_eval(const GApproximator& approx, int i, int k, double q);
const QGrid& approx_grid(const GApproximator& approx);

struct FitStats {
    double data_loss = 0.0;       // mean squared residual over (t, m) terms
    double penalty = 0.0;         // monotonicity violation mass (network only)
    std::vector<std::pair<int, int>> uncovered;  // pairs fit from the pooled fallback
};

/// Closed-form least-squares fit of the table surrogate: each cell is the
/// empirical mean of (c_t + gamma v(x_next) - q_m)_+ over the transitions
/// at its (state, action) pair, followed by an isotonic (non-increasing)
/// projection along the grid. Pairs with no data fall back to the pooled
/// empirical distribution and are flagged in `stats`.
TableApprox fit_g_table(const Dataset& dataset, const ValueFunction& v_hat,
                        const QGrid& grid, double gamma,
                        FitStats* stats = nullptr);

struct MlpHyper {
    int epochs = 50;
    int minibatch = 256;
    double learning_rate = 1e-3;
    double beta = 1.0;  // weight of the monotonicity penalty
};

/// SGD fit of the network surrogate on the same targets, with the
/// monotonicity penalty summing positive forward differences of the network
/// along the grid for every (state, action). Deterministic for a fixed seed.
/// Throws NumericalError naming the step if the loss turns non-finite.
MlpApprox fit_g_mlp(const Dataset& dataset, const ValueFunction& v_hat,
                    const QGrid& grid, double gamma, const MlpHyper& hyper,
                    const MlpShape& shape, std::uint64_t seed,
                    const MlpApprox* warm_start = nullptr,
                    FitStats* stats = nullptr);

/// Per state, minimizes the mixture risk of the surrogate over the simplex:
/// max over measures of the weighted min_q { q + xi^-1 sum_k lambda_k
/// f(i,k,q) }. Table backends minimize q exactly over the grid; network
/// backends additionally polish the recorded argmin with multi-start
/// gradient descent on q. Values are clamped into [0, v_max].
std::pair<ValueFunction, SimplexPolicy> value_policy_update(
    const GApproximator& approx, const RiskSpec& spec,
    const SimplexSearch& search, double v_max,
    std::uint64_t polish_seed = 0x9D15EEDull);

enum class Backend { Table, Mlp };

struct AlgoConfig {
    Backend backend = Backend::Table;
    QGrid grid;
    double gamma = 0.3;
    double c_max = 1.0;
    SimplexSearch search;
    double stop_tol = 1e-4;
    int max_outer = 50;
    MlpHyper hyper;
    MlpShape shape;
    bool warm_start = true;
    std::uint64_t seed = 1;

    double v_max() const { return c_max / (1.0 - gamma); }
};

struct OuterRecord {
    double delta = 0.0;     // sup-norm step between consecutive value iterates
    double fit_loss = 0.0;  // mean squared fit residual this round
};

struct LearnedSolution {
    ValueFunction v_hat;
    SimplexPolicy pi_hat;
    GApproximator approx;
    std::vector<OuterRecord> history;
    bool converged = false;
    std::vector<std::pair<int, int>> uncovered;
};

/// The outer loop: from v = 0, alternate surrogate fitting and the
/// value/policy update until the value iterates settle below stop_tol or
/// max_outer rounds pass (the last iterate is returned flagged, not thrown).
LearnedSolution run_algorithm(const Dataset& dataset, const RiskSpec& spec,
                              const AlgoConfig& config);

struct BoundParams {
    int n_states = 0;
    int n_actions = 0;
    double epsilon_e = 0.0;  // window visitation probability, in (0,1)
    long long ell = 1;       // window length
    long long t_max = 0;     // trajectory length, > ell
    double epsilon = 0.0;    // transition estimate accuracy, in (0,1]
    double b = 0.0;          // smallest AVaR level, in (0,1)
    double epsilon_theta = 0.0;
    double epsilon_v = 0.0;
    double gamma = 0.0;
    double c_max = 0.0;
    long long n = 0;         // outer iterations
    double v0_gap = 0.0;     // sup-norm error of the initial value guess

    void validate() const;
};

struct BoundResult {
    double prob_lower = 0.0;  // clamped to [0, 1]
    double err_upper = 0.0;
};

/// The finite-sample guarantee calculator: probability that the transition
/// estimates are uniformly epsilon-accurate, and the resulting sup-norm
/// error bound on the learned value function.
BoundResult finite_sample_bound(const BoundParams& params);

/// Single-triple deviation bound: P(|t_hat - t| > epsilon) <=
/// exp(-(N - eps_e F)^2 / F) + 2 exp(-epsilon^2 N^2 / (2 t_max)) with
/// F = floor((t_max - 1) / ell), valid for any integer N < eps_e F.
double deviation_pair_bound(long long t_max, long long ell, double eps_e,
                       double epsilon, long long N);

/// Union bound over all (i, k, j) triples, minimized over admissible N.
double deviation_union_bound(int n_states, int n_actions, long long t_max,
                        long long ell, double eps_e, double epsilon);

/// One-step visitation floor of the (policy, model) chain: the smallest
/// probability, over current pairs, of hitting any given (state, action)
/// at the next step. Serves as the measured eps_e with ell = 1.
double measured_eps_e(const MdpModel& model, const SimplexPolicy& policy);

struct DeviationReport {
    long long t_max = 0;
    double epsilon = 0.0;
    int n_seeds = 0;
    double eps_e = 0.0;          // measured, ell = 1 surrogate
    double bound = 1.0;          // union bound (capped at 1)
    bool vacuous = true;         // bound >= 1
    double empirical_freq = 0.0; // fraction of seeds with max deviation > epsilon
    double median_max_dev = 0.0;
    std::vector<double> max_devs;
};

/// Empirical companion of the deviation bound: simulates n_seeds
/// trajectories, measures how often the worst transition-estimate error
/// exceeds epsilon, and reports it next to the theoretical bound.
DeviationReport deviation_bound_suite(const MdpModel& model, const SimplexPolicy& policy,
                            long long t_max, double epsilon, int n_seeds,
                            std::uint64_t master_seed);

}  // namespace riskdp
