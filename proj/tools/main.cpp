// Command-line front end. Subcommands map one-to-one onto library
// operations:
//   gen         random model -> JSON
//   explore     trajectory under an exploration policy -> CSV
//   solve       exact value iteration benchmark -> JSON
//   train       sample-based learner -> JSON
//   eval        learned solution vs the exact benchmark -> JSON
//   bound       finite-sample guarantee calculator -> stdout
//   experiment  full multi-replica pipeline from a config file
// Exit codes: 0 success, 1 validation/usage error, 2 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "riskdp/harness.hpp"
#include "riskdp/io.hpp"
#include "riskdp/learner.hpp"
#include "riskdp/mdp.hpp"
#include "riskdp/oracle.hpp"

namespace {

using namespace riskdp;

struct SearchFlags {
    double grid_step = 0.05;
    int n_random = 2000;
    int refine_rounds = 3;
    double refine_radius = 0.25;
    std::uint64_t seed = 0x51D0C0DEull;

    void attach(CLI::App* cmd) {
        cmd->add_option("--search-grid-step", grid_step,
                        "simplex lattice resolution");
        cmd->add_option("--search-random", n_random, "random simplex samples");
        cmd->add_option("--search-refine-rounds", refine_rounds,
                        "local refinement rounds");
        cmd->add_option("--search-refine-radius", refine_radius,
                        "initial refinement radius");
        cmd->add_option("--search-seed", seed, "simplex sampling seed");
    }
    SimplexSearch to_search() const {
        SimplexSearch s;
        s.grid_step = grid_step;
        s.n_random = n_random;
        s.refine_rounds = refine_rounds;
        s.refine_radius = refine_radius;
        s.seed = seed;
        return s;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"risk-averse MDP toolkit: exact solver, distributional learner, experiments"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a random model");
    int gen_states = 4, gen_actions = 4;
    double gen_gamma = 0.3, gen_cmax = 1.0;
    std::string gen_cost = "beta", gen_out = "model.json";
    std::uint64_t gen_seed = 1;
    gen->add_option("--states", gen_states, "number of states");
    gen->add_option("--actions", gen_actions, "number of actions");
    gen->add_option("--gamma", gen_gamma, "discount factor in (0,1)");
    gen->add_option("--cmax", gen_cmax, "cost upper bound");
    gen->add_option("--cost", gen_cost, "cost kind: deterministic|beta");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output model path")->required();

    // explore
    auto* explore = app.add_subcommand("explore", "simulate an exploration trajectory");
    std::string exp_model, exp_out = "dataset.csv", exp_policy = "random";
    long long exp_tmax = 10000;
    int exp_x0 = 0;
    double exp_floor = 0.05;
    std::uint64_t exp_seed = 1;
    explore->add_option("--model", exp_model, "model JSON path")->required();
    explore->add_option("--tmax", exp_tmax, "trajectory length");
    explore->add_option("--x0", exp_x0, "initial state");
    explore->add_option("--policy", exp_policy, "exploration policy: uniform|random");
    explore->add_option("--floor", exp_floor, "action probability floor (random policy)");
    explore->add_option("--seed", exp_seed, "simulation seed");
    explore->add_option("--out", exp_out, "output CSV path")->required();

    // solve
    auto* solve = app.add_subcommand("solve", "exact value iteration benchmark");
    std::string solve_model, solve_risk, solve_out = "oracle.json";
    bool solve_norm = false, solve_sweep = false;
    double solve_tol = 1e-9;
    int solve_max_iter = 200;
    SearchFlags solve_search;
    solve->add_option("--model", solve_model, "model JSON path")->required();
    solve->add_option("--risk", solve_risk, "risk spec JSON path")->required();
    solve->add_flag("--normalize", solve_norm, "normalize measures whose weights do not sum to 1");
    solve->add_option("--tol", solve_tol, "fixed-point tolerance");
    solve->add_option("--max-iter", solve_max_iter, "iteration cap");
    solve->add_flag("--vertex-compare", solve_sweep,
                    "also solve with vertex-only policies and report the comparison");
    solve_search.attach(solve);
    solve->add_option("--out", solve_out, "output JSON path")->required();

    // train
    auto* train = app.add_subcommand("train", "run the sample-based learner");
    std::string train_data, train_risk, train_out = "learned.json", train_backend = "table";
    std::string train_qmax = "cmax";
    int train_states = 0, train_actions = 0, train_grid = 100, train_max_outer = 50;
    double train_gamma = 0.3, train_cmax = 1.0, train_stop = 1e-4;
    std::uint64_t train_seed = 1;
    MlpHyper train_hyper;
    SearchFlags train_search;
    train->add_option("--data", train_data, "dataset CSV path")->required();
    train->add_option("--states", train_states, "number of states")->required();
    train->add_option("--actions", train_actions, "number of actions")->required();
    train->add_option("--gamma", train_gamma, "discount factor");
    train->add_option("--cmax", train_cmax, "cost upper bound");
    train->add_option("--risk", train_risk, "risk spec JSON path")->required();
    bool train_norm = false;
    train->add_flag("--normalize", train_norm, "normalize measures");
    train->add_option("--grid", train_grid, "q-grid size");
    train->add_option("--qmax", train_qmax, "grid upper end: cmax|horizon");
    train->add_option("--backend", train_backend, "surrogate backend: table|mlp");
    train->add_option("--stop-tol", train_stop, "outer-loop stopping tolerance");
    train->add_option("--max-outer", train_max_outer, "outer iteration cap");
    train->add_option("--epochs", train_hyper.epochs, "mlp epochs per round");
    train->add_option("--minibatch", train_hyper.minibatch, "mlp minibatch size");
    train->add_option("--lr", train_hyper.learning_rate, "mlp learning rate");
    train->add_option("--beta", train_hyper.beta, "mlp monotonicity penalty weight");
    train->add_option("--seed", train_seed, "training seed");
    train_search.attach(train);
    train->add_option("--out", train_out, "output JSON path")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "compare a learned solution to the exact benchmark");
    std::string eval_model, eval_risk, eval_learned, eval_oracle, eval_out = "report.json";
    bool eval_norm = false;
    double eval_tol = 1e-9;
    int eval_horizon = 40;
    SearchFlags eval_search;
    eval->add_option("--model", eval_model, "model JSON path")->required();
    eval->add_option("--risk", eval_risk, "risk spec JSON path")->required();
    eval->add_flag("--normalize", eval_norm, "normalize measures");
    eval->add_option("--learned", eval_learned, "learned solution JSON path")->required();
    eval->add_option("--oracle", eval_oracle, "oracle solution JSON path (solved if omitted)");
    eval->add_option("--tol", eval_tol, "oracle tolerance when solving");
    eval->add_option("--horizon", eval_horizon, "nested-risk horizon for the policy gap");
    eval_search.attach(eval);
    eval->add_option("--out", eval_out, "output JSON path")->required();

    // bound
    auto* bound = app.add_subcommand("bound", "finite-sample guarantee calculator");
    BoundParams bp;
    bp.n_states = 4;
    bp.n_actions = 4;
    bp.epsilon_e = 0.2;
    bp.ell = 4;
    bp.t_max = 10000;
    bp.epsilon = 0.1;
    bp.b = 0.05;
    bp.epsilon_theta = 0.01;
    bp.epsilon_v = 0.01;
    bp.gamma = 0.3;
    bp.c_max = 1.0;
    bp.n = 20;
    bp.v0_gap = 10.0 / 7.0;
    bound->add_option("--states", bp.n_states);
    bound->add_option("--actions", bp.n_actions);
    bound->add_option("--eps-e", bp.epsilon_e, "window visitation probability");
    bound->add_option("--ell", bp.ell, "window length");
    bound->add_option("--tmax", bp.t_max, "trajectory length");
    bound->add_option("--eps", bp.epsilon, "transition estimate accuracy");
    bound->add_option("--b", bp.b, "smallest AVaR level");
    bound->add_option("--eps-theta", bp.epsilon_theta, "fit accuracy");
    bound->add_option("--eps-v", bp.epsilon_v, "value update accuracy");
    bound->add_option("--gamma", bp.gamma);
    bound->add_option("--cmax", bp.c_max);
    bound->add_option("--n", bp.n, "outer iterations");
    bound->add_option("--v0-gap", bp.v0_gap, "initial value error");
    std::string bound_out;
    bound->add_option("--out", bound_out, "also write the two bounds as JSON");

    // experiment
    auto* experiment = app.add_subcommand("experiment", "multi-replica pipeline from a config file");
    std::string exp_config;
    std::string exp_outdir;
    bool exp_normalize = false;
    std::uint64_t exp_master_seed = 0;
    bool exp_seed_given = false;
    experiment->add_option("--config", exp_config, "experiment config JSON")->required();
    experiment->add_option("--out-dir", exp_outdir, "override output directory");
    experiment->add_flag("--normalize", exp_normalize, "normalize risk measures");
    experiment->add_option("--seed", exp_master_seed, "override the master seed")
        ->each([&](const std::string&) { exp_seed_given = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);  // prints message/usage
        return code == 0 ? 0 : 1;
    }

    if (gen->parsed()) {
        const auto model = gen_random_mdp(
            gen_states, gen_actions,
            gen_cost == "deterministic" ? CostKind::Deterministic : CostKind::BetaRandom,
            gen_cmax, gen_gamma, gen_seed);
        save_model(model, gen_out);
        std::cout << "model " << model_hash(model) << " -> " << gen_out << "\n";
        return 0;
    }

    if (explore->parsed()) {
        const auto model = load_model(exp_model);
        const SimplexPolicy policy =
            exp_policy == "uniform"
                ? SimplexPolicy::uniform(model.n_states, model.n_actions)
                : random_exploration_policy(model.n_states, model.n_actions,
                                            exp_floor, derive_seed(exp_seed, 1));
        const Dataset data =
            simulate(model, policy, exp_tmax, exp_x0, derive_seed(exp_seed, 2));
        save_dataset(data, exp_out);
        const auto coverage =
            check_coverage(data, model.n_states, model.n_actions, 1);
        std::cout << "dataset " << dataset_hash(data) << " -> " << exp_out
                  << " (uncovered pairs: " << coverage.flagged.size() << ")\n";
        return 0;
    }

    if (solve->parsed()) {
        const auto model = load_model(solve_model);
        std::vector<std::string> notes;
        const auto spec = load_risk_spec(solve_risk, solve_norm, &notes);
        for (const auto& note : notes) std::cerr << "note: " << note << "\n";
        auto json_out = nlohmann::json{};
        if (solve_sweep) {
            const auto sweep = brute_force_policy_sweep(
                model, spec, solve_search.to_search(), solve_tol, solve_max_iter);
            json_out = oracle_solution_to_json(sweep.randomized, model_hash(model),
                                               risk_spec_hash(spec));
            json_out["vertex_v_star"] = sweep.vertex.v_star;
            json_out["interior_strict"] = std::vector<int>(
                sweep.interior_strict.begin(), sweep.interior_strict.end());
            json_out["strict_margin"] = sweep.strict_margin;
        } else {
            const auto sol = value_iteration(model, spec, solve_tol, solve_max_iter,
                                             solve_search.to_search());
            json_out = oracle_solution_to_json(sol, model_hash(model),
                                               risk_spec_hash(spec));
        }
        if (!notes.empty()) json_out["normalization_notes"] = notes;
        write_text_file(solve_out, json_out.dump(2) + "\n");
        std::cout << "solution -> " << solve_out << "\n";
        return 0;
    }

    if (train->parsed()) {
        const Dataset data = load_dataset(train_data, train_states, train_actions);
        std::vector<std::string> notes;
        const auto spec = load_risk_spec(train_risk, train_norm, &notes);
        for (const auto& note : notes) std::cerr << "note: " << note << "\n";
        AlgoConfig config;
        config.backend = train_backend == "mlp" ? Backend::Mlp : Backend::Table;
        const double hi = train_qmax == "horizon"
                              ? train_cmax / (1.0 - train_gamma)
                              : train_cmax;
        config.grid = QGrid::uniform(train_grid, 0.0, hi);
        config.gamma = train_gamma;
        config.c_max = train_cmax;
        config.search = train_search.to_search();
        config.stop_tol = train_stop;
        config.max_outer = train_max_outer;
        config.hyper = train_hyper;
        config.seed = train_seed;
        const LearnedSolution sol = run_algorithm(data, spec, config);
        auto j = learned_solution_to_json(sol, config, dataset_hash(data),
                                          risk_spec_hash(spec));
        if (!notes.empty()) j["normalization_notes"] = notes;
        write_text_file(train_out, j.dump(2) + "\n");
        std::cout << "learned solution -> " << train_out
                  << (sol.converged ? "" : " (not converged)") << "\n";
        return 0;
    }

    if (eval->parsed()) {
        const auto model = load_model(eval_model);
        std::vector<std::string> notes;
        const auto spec = load_risk_spec(eval_risk, eval_norm, &notes);
        const auto learned =
            learned_solution_from_json(nlohmann::json::parse(read_text_file(eval_learned)));
        OracleSolution oracle;
        if (!eval_oracle.empty()) {
            oracle = oracle_solution_from_json(
                nlohmann::json::parse(read_text_file(eval_oracle)));
        } else {
            oracle = value_iteration(model, spec, eval_tol, 200,
                                     eval_search.to_search());
        }
        nlohmann::json j;
        j["model_hash"] = model_hash(model);
        j["risk_spec_hash"] = risk_spec_hash(spec);
        j["v_hat"] = learned.v_hat;
        j["v_star"] = oracle.v_star;
        std::vector<double> rel(learned.v_hat.size());
        for (std::size_t i = 0; i < rel.size(); ++i)
            rel[i] = relative_error(learned.v_hat[i], oracle.v_star[i]);
        j["rel_err"] = rel;
        const auto realized = nested_risk_eval(model, spec, learned.pi_hat, eval_horizon);
        j["policy_risk"] = realized;
        double gap = -1e300;
        for (std::size_t i = 0; i < realized.size(); ++i)
            gap = std::max(gap, realized[i] - oracle.v_star[i]);
        j["risk_gap_max"] = gap;
        if (!notes.empty()) j["normalization_notes"] = notes;
        write_text_file(eval_out, j.dump(2) + "\n");
        std::cout << "report -> " << eval_out << "\n";
        return 0;
    }

    if (bound->parsed()) {
        const auto result = finite_sample_bound(bp);
        std::printf("prob_lower_bound = %.17g\n", result.prob_lower);
        std::printf("error_upper_bound = %.17g\n", result.err_upper);
        if (!bound_out.empty())
            write_text_file(bound_out,
                            nlohmann::json{{"prob_lower_bound", result.prob_lower},
                                           {"error_upper_bound", result.err_upper}}
                                    .dump(2) + "\n");
        return 0;
    }

    if (experiment->parsed()) {
        auto config = experiment_config_from_json(
            nlohmann::json::parse(read_text_file(exp_config)));
        if (!exp_outdir.empty()) config.out_dir = exp_outdir;
        if (exp_normalize) config.normalize_risk = true;
        if (exp_seed_given) config.master_seed = exp_master_seed;
        const auto report = run_experiment(config);
        int failures = 0;
        for (const auto& r : report.replicas)
            if (!r.ok) {
                ++failures;
                std::cerr << "replica " << r.replica << " failed: " << r.error << "\n";
            }
        const auto errors = report.all_rel_errors();
        double worst = 0.0;
        for (double e : errors) worst = std::max(worst, e);
        std::cout << "experiment " << report.config_hash << ": "
                  << report.replicas.size() - failures << "/" << report.replicas.size()
                  << " replicas ok, max rel err " << worst;
        if (!config.out_dir.empty()) std::cout << " -> " << config.out_dir;
        std::cout << "\n";
        return failures == 0 ? 0 : 2;
    }

    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const riskdp::ValidationError& err) {
        std::cerr << "validation error: " << err.what() << "\n";
        return 1;
    } catch (const riskdp::NumericalError& err) {
        std::cerr << "numerical error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
