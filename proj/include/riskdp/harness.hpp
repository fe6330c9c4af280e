#pragma once
// Experiment pipeline: per replica, generate (or load) a model, collect an
// exploration trajectory, solve the exact benchmark, run the learner, and
// report per-state relative errors plus the risk gap of the learned policy.
// Replicas run in parallel (capped by RISKDP_THREADS) with derived seeds;
// outputs are ordered by replica index and byte-stable.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskdp/learner.hpp"
#include "riskdp/mdp.hpp"
#include "riskdp/oracle.hpp"
#include "riskdp/risk.hpp"

namespace riskdp {

struct ExplorationSpec {
    enum class Kind { Uniform, RandomFloored };
    Kind kind = Kind::RandomFloored;
    double floor = 0.05;
};

struct ExperimentConfig {
    int n_states = 4;
    int n_actions = 4;
    double gamma = 0.3;
    CostKind cost_kind = CostKind::BetaRandom;
    double c_max = 1.0;
    std::optional<std::string> model_path;  // fixed model instead of per-replica draws

    std::vector<SpectralMeasure> risk_measures;  // inline, pre-normalization
    std::string risk_spec_path;                  // used when measures empty
    bool normalize_risk = false;

    ExplorationSpec exploration;
    long long t_max = 10000;
    int x0 = 0;

    int m_grid = 100;
    enum class QMaxMode { CMax, Horizon };
    QMaxMode q_max_mode = QMaxMode::CMax;  // grid on [0, c_max] or [0, c_max/(1-gamma)]
    Backend backend = Backend::Table;
    SimplexSearch search;
    double stop_tol = 1e-4;
    int max_outer = 50;
    MlpHyper hyper;
    MlpShape shape;

    double oracle_tol = 1e-9;
    int oracle_max_iter = 200;
    SimplexSearch oracle_search;

    int replicas = 10;
    std::uint64_t master_seed = 1;
    std::string out_dir;  // empty: nothing written
    int risk_gap_horizon = 40;
    double rel_err_floor = 1e-6;

    double grid_hi() const {
        return q_max_mode == QMaxMode::CMax ? c_max : c_max / (1.0 - gamma);
    }
    void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

struct ReplicaResult {
    int replica = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<double> v_hat;
    std::vector<double> v_star;
    std::vector<double> rel_err;
    double risk_gap_max = 0.0;   // max_i nested risk of learned policy - v*
    bool learner_converged = false;
    int oracle_iterations = 0;
};

struct ErrorReport {
    nlohmann::json config_echo;
    std::string config_hash;
    std::vector<std::string> notes;
    std::vector<ReplicaResult> replicas;

    std::vector<double> all_rel_errors() const;
    std::string to_csv() const;  // replica,state,v_hat,v_star,rel_err
    nlohmann::json summary() const;
};

/// |v_hat - v_star| / max(v_star, floor).
double relative_error(double v_hat, double v_star, double floor = 1e-6);

/// Runs the full pipeline; when out_dir is set, writes `errors.csv` and
/// `summary.json` there. Deterministic for a fixed config and master seed,
/// regardless of the number of worker threads.
ErrorReport run_experiment(const ExperimentConfig& config);

/// Parallelism cap from RISKDP_THREADS (defaults to hardware concurrency).
int thread_cap(int replicas);

}  // namespace riskdp
