#include "riskdp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "riskdp/io.hpp"

namespace riskdp {

void ExperimentConfig::validate() const {
    if (replicas < 1) throw ValidationError("experiment: replicas must be >= 1");
    if (n_states < 1 || n_actions < 1)
        throw ValidationError("experiment: dimensions must be >= 1");
    if (!(gamma > 0.0) || !(gamma < 1.0))
        throw ValidationError("experiment: gamma must lie in (0,1)");
    if (!(c_max > 0.0)) throw ValidationError("experiment: c_max must be > 0");
    if (t_max < 2) throw ValidationError("experiment: t_max must be >= 2");
    if (m_grid < 2) throw ValidationError("experiment: m_grid must be >= 2");
    if (risk_measures.empty() && risk_spec_path.empty())
        throw ValidationError("experiment: no risk spec given");
}

namespace {

ExplorationSpec exploration_from_json(const nlohmann::json& j) {
    ExplorationSpec spec;
    const std::string kind = j.value("kind", "random_floored");
    if (kind == "uniform")
        spec.kind = ExplorationSpec::Kind::Uniform;
    else if (kind == "random_floored")
        spec.kind = ExplorationSpec::Kind::RandomFloored;
    else
        throw ValidationError("unknown exploration kind: " + kind);
    spec.floor = j.value("floor", 0.05);
    return spec;
}

nlohmann::json exploration_to_json(const ExplorationSpec& spec) {
    return {{"kind", spec.kind == ExplorationSpec::Kind::Uniform ? "uniform"
                                                                 : "random_floored"},
            {"floor", spec.floor}};
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.n_states = j.value("n_states", c.n_states);
    c.n_actions = j.value("n_actions", c.n_actions);
    c.gamma = j.value("gamma", c.gamma);
    if (j.contains("cost")) {
        const std::string kind = j["cost"].value("kind", "beta");
        c.cost_kind = kind == "deterministic" ? CostKind::Deterministic
                                              : CostKind::BetaRandom;
        c.c_max = j["cost"].value("c_max", c.c_max);
    }
    if (j.contains("model_path")) c.model_path = j["model_path"].get<std::string>();
    c.risk_spec_path = j.value("risk_spec_path", std::string{});
    if (j.contains("risk_measures")) {
        // Inline measures use the same schema as the risk spec file.
        for (const auto& jm : j["risk_measures"]) {
            SpectralMeasure measure;
            for (const auto& atom : jm)
                measure.atoms.push_back(
                    {atom.at("xi").get<double>(), atom.at("weight").get<double>()});
            c.risk_measures.push_back(std::move(measure));
        }
    }
    c.normalize_risk = j.value("normalize", false);
    if (j.contains("exploration")) c.exploration = exploration_from_json(j["exploration"]);
    c.t_max = j.value("t_max", c.t_max);
    c.x0 = j.value("x0", 0);
    c.m_grid = j.value("m_grid", c.m_grid);
    const std::string qmode = j.value("q_max_mode", "cmax");
    if (qmode == "cmax")
        c.q_max_mode = ExperimentConfig::QMaxMode::CMax;
    else if (qmode == "horizon")
        c.q_max_mode = ExperimentConfig::QMaxMode::Horizon;
    else
        throw ValidationError("unknown q_max_mode: " + qmode);
    c.backend = j.value("backend", "table") == std::string("mlp") ? Backend::Mlp
                                                                  : Backend::Table;
    if (j.contains("search")) c.search = search_from_json(j["search"]);
    c.stop_tol = j.value("stop_tol", c.stop_tol);
    c.max_outer = j.value("max_outer", c.max_outer);
    if (j.contains("mlp")) {
        const auto& m = j["mlp"];
        c.hyper.epochs = m.value("epochs", c.hyper.epochs);
        c.hyper.minibatch = m.value("minibatch", c.hyper.minibatch);
        c.hyper.learning_rate = m.value("learning_rate", c.hyper.learning_rate);
        c.hyper.beta = m.value("beta", c.hyper.beta);
        if (m.contains("hidden")) c.shape.hidden = m["hidden"].get<std::vector<int>>();
    }
    c.oracle_tol = j.value("oracle_tol", c.oracle_tol);
    c.oracle_max_iter = j.value("oracle_max_iter", c.oracle_max_iter);
    c.oracle_search = j.contains("oracle_search") ? search_from_json(j["oracle_search"])
                                                  : c.search;
    c.replicas = j.value("replicas", c.replicas);
    c.master_seed = j.value("master_seed", c.master_seed);
    c.out_dir = j.value("out_dir", std::string{});
    c.risk_gap_horizon = j.value("risk_gap_horizon", c.risk_gap_horizon);
    c.rel_err_floor = j.value("rel_err_floor", c.rel_err_floor);
    c.validate();
    return c;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["n_states"] = c.n_states;
    j["n_actions"] = c.n_actions;
    j["gamma"] = c.gamma;
    j["cost"] = {{"kind", c.cost_kind == CostKind::Deterministic ? "deterministic"
                                                                 : "beta"},
                 {"c_max", c.c_max}};
    if (c.model_path) j["model_path"] = *c.model_path;
    if (!c.risk_spec_path.empty()) j["risk_spec_path"] = c.risk_spec_path;
    if (!c.risk_measures.empty()) {
        nlohmann::json measures = nlohmann::json::array();
        for (const auto& m : c.risk_measures) {
            nlohmann::json jm = nlohmann::json::array();
            for (const auto& atom : m.atoms)
                jm.push_back({{"xi", atom.xi}, {"weight", atom.weight}});
            measures.push_back(std::move(jm));
        }
        j["risk_measures"] = std::move(measures);
    }
    j["normalize"] = c.normalize_risk;
    j["exploration"] = exploration_to_json(c.exploration);
    j["t_max"] = c.t_max;
    j["x0"] = c.x0;
    j["m_grid"] = c.m_grid;
    j["q_max_mode"] =
        c.q_max_mode == ExperimentConfig::QMaxMode::CMax ? "cmax" : "horizon";
    j["backend"] = c.backend == Backend::Table ? "table" : "mlp";
    j["search"] = search_to_json(c.search);
    j["stop_tol"] = c.stop_tol;
    j["max_outer"] = c.max_outer;
    j["mlp"] = {{"epochs", c.hyper.epochs},
                {"minibatch", c.hyper.minibatch},
                {"learning_rate", c.hyper.learning_rate},
                {"beta", c.hyper.beta},
                {"hidden", c.shape.hidden}};
    j["oracle_tol"] = c.oracle_tol;
    j["oracle_max_iter"] = c.oracle_max_iter;
    j["oracle_search"] = search_to_json(c.oracle_search);
    j["replicas"] = c.replicas;
    j["master_seed"] = c.master_seed;
    j["out_dir"] = c.out_dir;
    j["risk_gap_horizon"] = c.risk_gap_horizon;
    j["rel_err_floor"] = c.rel_err_floor;
    return j;
}

double relative_error(double v_hat, double v_star, double floor) {
    return std::abs(v_hat - v_star) / std::max(v_star, floor);
}

std::vector<double> ErrorReport::all_rel_errors() const {
    std::vector<double> out;
    for (const auto& r : replicas)
        if (r.ok) out.insert(out.end(), r.rel_err.begin(), r.rel_err.end());
    return out;
}

std::string ErrorReport::to_csv() const {
    std::string csv = "replica,state,v_hat,v_star,rel_err\n";
    for (const auto& r : replicas) {
        if (!r.ok) continue;
        for (std::size_t i = 0; i < r.rel_err.size(); ++i) {
            csv += std::to_string(r.replica);
            csv += ',';
            csv += std::to_string(i);
            csv += ',';
            csv += format_g17(r.v_hat[i]);
            csv += ',';
            csv += format_g17(r.v_star[i]);
            csv += ',';
            csv += format_g17(r.rel_err[i]);
            csv += '\n';
        }
    }
    return csv;
}

nlohmann::json ErrorReport::summary() const {
    nlohmann::json j;
    j["config"] = config_echo;
    j["config_hash"] = config_hash;
    j["notes"] = notes;
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& r : replicas) {
        nlohmann::json jr;
        jr["replica"] = r.replica;
        jr["seed"] = r.seed;
        jr["ok"] = r.ok;
        if (!r.ok) jr["error"] = r.error;
        jr["v_hat"] = r.v_hat;
        jr["v_star"] = r.v_star;
        jr["rel_err"] = r.rel_err;
        jr["risk_gap_max"] = r.risk_gap_max;
        jr["learner_converged"] = r.learner_converged;
        jr["oracle_iterations"] = r.oracle_iterations;
        reps.push_back(std::move(jr));
    }
    j["replicas"] = std::move(reps);
    const auto errors = all_rel_errors();
    if (!errors.empty()) {
        j["rel_err_max"] = *std::max_element(errors.begin(), errors.end());
        std::vector<double> sorted = errors;
        std::sort(sorted.begin(), sorted.end());
        j["rel_err_median"] = sorted.size() % 2 == 1
                                  ? sorted[sorted.size() / 2]
                                  : 0.5 * (sorted[sorted.size() / 2 - 1] +
                                           sorted[sorted.size() / 2]);
    }
    return j;
}

int thread_cap(int replicas) {
    int cap = static_cast<int>(std::thread::hardware_concurrency());
    if (cap < 1) cap = 1;
    if (const char* env = std::getenv("RISKDP_THREADS")) {
        const int requested = std::atoi(env);
        if (requested >= 1) cap = requested;
    }
    return std::min(cap, replicas);
}

namespace {

ReplicaResult run_replica(const ExperimentConfig& config, const RiskSpec& spec,
                          const MdpModel* fixed_model, int replica) {
    ReplicaResult result;
    result.replica = replica;
    result.seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(replica));
    try {
        const MdpModel model =
            fixed_model != nullptr
                ? *fixed_model
                : gen_random_mdp(config.n_states, config.n_actions, config.cost_kind,
                                 config.c_max, config.gamma,
                                 derive_seed(result.seed, 0));
        const SimplexPolicy exploration =
            config.exploration.kind == ExplorationSpec::Kind::Uniform
                ? SimplexPolicy::uniform(model.n_states, model.n_actions)
                : random_exploration_policy(model.n_states, model.n_actions,
                                            config.exploration.floor,
                                            derive_seed(result.seed, 1));
        const Dataset data =
            simulate(model, exploration, config.t_max, config.x0,
                     derive_seed(result.seed, 2));

        const OracleSolution oracle =
            value_iteration(model, spec, config.oracle_tol, config.oracle_max_iter,
                            config.oracle_search);

        AlgoConfig algo;
        algo.backend = config.backend;
        algo.grid = QGrid::uniform(config.m_grid, 0.0, config.grid_hi());
        algo.gamma = config.gamma;
        algo.c_max = config.c_max;
        algo.search = config.search;
        algo.stop_tol = config.stop_tol;
        algo.max_outer = config.max_outer;
        algo.hyper = config.hyper;
        algo.shape = config.shape;
        algo.seed = derive_seed(result.seed, 3);
        const LearnedSolution learned = run_algorithm(data, spec, algo);

        result.v_hat = learned.v_hat;
        result.v_star = oracle.v_star;
        result.learner_converged = learned.converged;
        result.oracle_iterations = oracle.iterations;
        result.rel_err.resize(result.v_hat.size());
        for (std::size_t i = 0; i < result.v_hat.size(); ++i)
            result.rel_err[i] =
                relative_error(result.v_hat[i], result.v_star[i], config.rel_err_floor);

        const ValueFunction realized =
            nested_risk_eval(model, spec, learned.pi_hat, config.risk_gap_horizon);
        double gap = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < realized.size(); ++i)
            gap = std::max(gap, realized[i] - oracle.v_star[i]);
        result.risk_gap_max = gap;
        result.ok = true;
    } catch (const std::exception& err) {
        result.ok = false;
        result.error = err.what();
    }
    return result;
}

}  // namespace

ErrorReport run_experiment(const ExperimentConfig& config) {
    config.validate();

    ErrorReport report;
    RiskSpec spec;
    if (!config.risk_measures.empty()) {
        nlohmann::json inline_spec = nlohmann::json::array();
        for (const auto& m : config.risk_measures) {
            nlohmann::json jm = nlohmann::json::array();
            for (const auto& atom : m.atoms)
                jm.push_back({{"xi", atom.xi}, {"weight", atom.weight}});
            inline_spec.push_back(std::move(jm));
        }
        spec = risk_spec_from_json(inline_spec, config.normalize_risk, &report.notes);
    } else {
        spec = load_risk_spec(config.risk_spec_path, config.normalize_risk,
                              &report.notes);
    }

    std::optional<MdpModel> fixed_model;
    if (config.model_path) fixed_model = load_model(*config.model_path);

    report.config_echo = experiment_config_to_json(config);
    report.config_hash = hash_hex(report.config_echo.dump());
    report.notes.push_back("relative-error floor " + format_g17(config.rel_err_floor));

    report.replicas.resize(static_cast<std::size_t>(config.replicas));
    const int workers = thread_cap(config.replicas);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= config.replicas) break;
            report.replicas[static_cast<std::size_t>(r)] = run_replica(
                config, spec, fixed_model ? &*fixed_model : nullptr, r);
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        write_text_file(config.out_dir + "/errors.csv", report.to_csv());
        write_text_file(config.out_dir + "/summary.json",
                        report.summary().dump(2) + "\n");
    }
    return report;
}

}  // namespace riskdp
