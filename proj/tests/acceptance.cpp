// Acceptance suite. Each criterion prints exactly one [PASS]/[FAIL] line;
// the process exits non-zero if any selected criterion fails.
//
//   contraction         vertex-candidate operator is a gamma-contraction
//   scalar_fixed_point  1-state chain: exact solver and learner hit 5/7
//   risk_kernel         sorted-tail, q-scan and curve routes agree
//   table_fit           closed-form table fit equals the naive loop and
//                       minimizes the empirical loss
//   bound_calculator    guarantee formulas match a high-precision reference
//   deviation_bound     empirical transition-estimate exceedance vs bound
//   nested_risk         nested evaluation of the solved policy converges
//   g_monotonicity      every curve is non-increasing and 1-Lipschitz
//   study_4x4           4x4 study: learned values track the brute-force
//                       benchmark across replicas and sample sizes

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "riskdp/harness.hpp"
#include "riskdp/io.hpp"
#include "riskdp/learner.hpp"
#include "riskdp/mdp.hpp"
#include "riskdp/oracle.hpp"
#include "riskdp/risk.hpp"

using namespace riskdp;

namespace {

std::vector<SpectralMeasure> study_measures_raw() {
    return {SpectralMeasure{{{0.2, 0.2}, {1.0, 0.8}}},
            SpectralMeasure{{{0.5, 1.0}}},
            SpectralMeasure{{{0.05, 0.1}, {0.4, 0.5}, {0.6, 0.6}}},  // sums to 1.2
            SpectralMeasure{{{0.3, 0.5}, {0.8, 0.5}}}};
}

RiskSpec study_spec(std::vector<std::string>* notes = nullptr) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& m : study_measures_raw()) {
        nlohmann::json jm = nlohmann::json::array();
        for (const auto& atom : m.atoms)
            jm.push_back({{"xi", atom.xi}, {"weight", atom.weight}});
        j.push_back(std::move(jm));
    }
    return risk_spec_from_json(j, /*normalize=*/true, notes);
}

DiscreteDistribution random_distribution(Rng& rng, int max_atoms = 10) {
    const int n = 1 + rng.uniform_int(max_atoms);
    DiscreteDistribution dist;
    dist.values.resize(static_cast<std::size_t>(n));
    for (auto& v : dist.values) v = rng.uniform(0.0, 10.0);
    dist.probs = rng.dirichlet(n);
    return dist;
}

RiskSpec random_spec(Rng& rng) {
    std::vector<SpectralMeasure> measures;
    const int n_measures = 1 + rng.uniform_int(3);
    for (int m = 0; m < n_measures; ++m) {
        const int n_atoms = 1 + rng.uniform_int(3);
        SpectralMeasure measure;
        const auto weights = rng.dirichlet(n_atoms);
        for (int a = 0; a < n_atoms; ++a)
            measure.atoms.push_back({rng.uniform(0.05, 1.0), weights[a]});
        measures.push_back(std::move(measure));
    }
    return make_risk_spec(std::move(measures));
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        out = std::max(out, std::abs(a[i] - b[i]));
    return out;
}

double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t mid = xs.size() / 2;
    return xs.size() % 2 == 1 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

// --- criteria ---------------------------------------------------------

bool criterion_contraction(std::ostream& out) {
    Rng rng(920001);
    const auto search = SimplexSearch::vertices_only();
    double worst_excess = -1.0;
    for (int rep = 0; rep < 500; ++rep) {
        const int S = 1 + rng.uniform_int(5);
        const int A = 1 + rng.uniform_int(5);
        const auto kind =
            rep % 5 == 0 ? CostKind::BetaRandom : CostKind::Deterministic;
        const auto model =
            gen_random_mdp(S, A, kind, 1.0, rng.uniform(0.1, 0.9), 500000 + rep);
        const auto spec = random_spec(rng);
        ValueFunction v(static_cast<std::size_t>(S)), w(static_cast<std::size_t>(S));
        for (auto& x : v) x = rng.uniform(0.0, model.v_max());
        for (auto& x : w) x = rng.uniform(0.0, model.v_max());
        const auto costs = DiscretizedCosts::build(model);
        const auto sv = bellman_apply(model, spec, v, search, &costs).first;
        const auto sw = bellman_apply(model, spec, w, search, &costs).first;
        const double excess =
            sup_diff(sv, sw) - model.gamma * sup_diff(v, w);
        worst_excess = std::max(worst_excess, excess);
        if (excess > 1e-12) {
            out << "model " << rep << " breaks the contraction by " << excess;
            return false;
        }
    }
    out << "500/500 within gamma*||v-v'|| + 1e-12 (worst excess "
        << worst_excess << ")";
    return true;
}

bool criterion_scalar_fixed_point(std::ostream& out) {
    MdpModel model;
    model.n_states = 1;
    model.n_actions = 1;
    model.gamma = 0.3;
    model.transitions = {1.0};
    model.cost = {CostKind::Deterministic, 1.0, {0.5}, {}, {}};
    const auto spec = study_spec();

    const auto sol = value_iteration(model, spec, 1e-12, 200,
                                     SimplexSearch::vertices_only());
    const double oracle_err = std::abs(sol.v_star[0] - 5.0 / 7.0);
    if (oracle_err > 1e-10) {
        out << "exact solver off the 5/7 fixed point by " << oracle_err;
        return false;
    }

    const auto data = simulate(model, SimplexPolicy::uniform(1, 1), 1000, 0, 424242);
    AlgoConfig config;
    config.grid = QGrid::uniform(100, 0.0, model.v_max());
    config.gamma = model.gamma;
    config.c_max = model.cost.c_max;
    config.search = SimplexSearch::vertices_only();
    const auto learned = run_algorithm(data, spec, config);
    const double learner_err = std::abs(learned.v_hat[0] - 5.0 / 7.0);
    const double budget = 2.0 * config.grid.spacing();
    out << "oracle err " << oracle_err << ", learner err " << learner_err
        << " (budget " << budget << ")";
    return learner_err <= budget;
}

bool criterion_risk_kernel(std::ostream& out) {
    Rng rng(920003);
    double worst_route = 0.0, worst_avar = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const auto dist = random_distribution(rng);
        const auto spec = random_spec(rng);
        const double direct = kusuoka_risk(dist, spec);
        const double via_curve =
            risk_from_gcurve(curve_from_distribution(dist), spec, 0.0, 12.0);
        worst_route = std::max(worst_route, std::abs(direct - via_curve));
        const double xi = rng.uniform(0.01, 1.0);
        worst_avar =
            std::max(worst_avar, std::abs(avar(dist, xi) - avar_qscan(dist, xi)));
    }
    out << "curve-vs-distribution gap " << worst_route
        << ", sorted-tail vs q-scan gap " << worst_avar;
    return worst_route <= 1e-10 && worst_avar <= 1e-10;
}

bool criterion_table_fit(std::ostream& out) {
    Rng rng(920004);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int S = 2 + rng.uniform_int(3), A = 1 + rng.uniform_int(3);
        Dataset data;
        data.n_states = S;
        data.n_actions = A;
        const int n = 100 + rng.uniform_int(900);
        for (int t = 1; t <= n; ++t)
            data.transitions.push_back({t, rng.uniform_int(S), rng.uniform_int(A),
                                        rng.uniform_int(S), rng.uniform(0.0, 1.0)});
        ValueFunction v(static_cast<std::size_t>(S));
        for (auto& x : v) x = rng.uniform(0.0, 2.0);
        const double gamma = rng.uniform(0.2, 0.8);
        const auto grid = QGrid::uniform(2 + rng.uniform_int(15), 0.0, 3.0);
        const auto table = fit_g_table(data, v, grid, gamma);

        for (int i = 0; i < S; ++i)
            for (int k = 0; k < A; ++k)
                for (std::size_t m = 0; m < grid.points.size(); ++m) {
                    const double q = grid.points[m];
                    double sum = 0.0, loss = 0.0;
                    long long count = 0;
                    for (const auto& tr : data.transitions) {
                        if (tr.x != i || tr.a != k) continue;
                        sum += std::max(
                            tr.c + gamma * v[static_cast<std::size_t>(tr.x_next)] - q,
                            0.0);
                        ++count;
                    }
                    if (count == 0) continue;
                    const double naive = sum / static_cast<double>(count);
                    const double fitted = table.at(i, k, static_cast<int>(m));
                    worst = std::max(worst, std::abs(fitted - naive));
                    if (std::abs(fitted - naive) > 1e-12) {
                        out << "fit/naive mismatch " << std::abs(fitted - naive);
                        return false;
                    }
                    for (double delta : {1e-3, -1e-3}) {
                        double base_loss = 0.0;
                        loss = 0.0;
                        for (const auto& tr : data.transitions) {
                            if (tr.x != i || tr.a != k) continue;
                            const double h = std::max(
                                tr.c + gamma * v[static_cast<std::size_t>(tr.x_next)] - q,
                                0.0);
                            base_loss += (fitted - h) * (fitted - h);
                            loss += (fitted + delta - h) * (fitted + delta - h);
                        }
                        if (loss <= base_loss) {
                            out << "perturbed loss did not increase at (" << i << ","
                                << k << "," << m << ")";
                            return false;
                        }
                    }
                }
    }
    out << "100/100 datasets: naive-loop gap " << worst
        << ", all cells strict local minima under +/-1e-3";
    return true;
}

bool criterion_bound_calculator(std::ostream& out) {
    Rng rng(920005);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        BoundParams p;
        p.n_states = 1 + rng.uniform_int(8);
        p.n_actions = 1 + rng.uniform_int(8);
        p.epsilon_e = rng.uniform(0.01, 0.9);
        p.ell = 1 + rng.uniform_int(8);
        p.t_max = p.ell + 1 + rng.uniform_int(100000);
        p.epsilon = rng.uniform(0.01, 1.0);
        p.b = rng.uniform(0.01, 0.9);
        p.epsilon_theta = rng.uniform(0.0, 0.2);
        p.epsilon_v = rng.uniform(0.0, 0.2);
        p.gamma = rng.uniform(0.05, 0.95);
        p.c_max = rng.uniform(0.1, 5.0);
        p.n = rng.uniform_int(60);
        p.v0_gap = rng.uniform(0.0, 10.0);
        const auto got = finite_sample_bound(p);

        // reference path in extended precision, written from the formulas
        const long double windows = static_cast<long double>((p.t_max - 1) / p.ell);
        const long double t1 =
            expl(-static_cast<long double>(p.epsilon_e) * p.epsilon_e / 4.0L * windows);
        const long double t2 =
            expl(-static_cast<long double>(p.epsilon) * p.epsilon * p.epsilon_e *
                 p.epsilon_e / (8.0L * p.ell) * windows);
        long double prob =
            1.0L - 3.0L * p.n_states * p.n_states * p.n_actions * (t1 + t2);
        prob = std::min(1.0L, std::max(0.0L, prob));
        long double err = powl(p.gamma, static_cast<long double>(p.n)) * p.v0_gap +
                          static_cast<long double>(p.c_max) * p.epsilon /
                              (p.b * (1.0L - p.gamma) * (1.0L - p.gamma)) +
                          (static_cast<long double>(p.epsilon_theta) / p.b +
                           p.epsilon_v) / (1.0L - p.gamma);
        const double prob_gap =
            std::abs(got.prob_lower - static_cast<double>(prob)) /
            std::max(1.0, static_cast<double>(fabsl(prob)));
        const double err_gap = std::abs(got.err_upper - static_cast<double>(err)) /
                               std::max(1.0, static_cast<double>(fabsl(err)));
        worst = std::max({worst, prob_gap, err_gap});
        if (prob_gap > 1e-12 || err_gap > 1e-12) {
            out << "formula mismatch at set " << rep << ": " << prob_gap << " / "
                << err_gap;
            return false;
        }
    }

    // monotonicity sweeps
    BoundParams p;
    p.n_states = 4;
    p.n_actions = 4;
    p.epsilon_e = 0.4;
    p.ell = 2;
    p.epsilon = 0.2;
    p.b = 0.05;
    p.epsilon_theta = 0.01;
    p.epsilon_v = 0.01;
    p.gamma = 0.3;
    p.c_max = 1.0;
    p.n = 10;
    p.v0_gap = 1.0;
    double prev_prob = -1.0;
    for (long long t = 10; t <= 10000000; t *= 10) {
        p.t_max = t;
        const double prob = finite_sample_bound(p).prob_lower;
        if (prob < prev_prob - 1e-15) {
            out << "probability bound not monotone in t_max";
            return false;
        }
        prev_prob = prob;
    }
    p.t_max = 10000;
    double prev_err = std::numeric_limits<double>::infinity();
    for (long long n : {0LL, 2LL, 5LL, 10LL, 30LL, 100LL}) {
        p.n = n;
        const double err = finite_sample_bound(p).err_upper;
        if (err > prev_err + 1e-15) {
            out << "error bound not monotone in n";
            return false;
        }
        prev_err = err;
    }
    out << "20/20 parameter sets within 1e-12 of the reference (worst "
        << worst << "), monotone sweeps pass";
    return true;
}

bool criterion_deviation_bound(std::ostream& out) {
    const auto model = gen_random_mdp(4, 4, CostKind::Deterministic, 1.0, 0.3, 777);
    const auto policy = SimplexPolicy::uniform(4, 4);
    const auto report = deviation_bound_suite(model, policy, 10000, 0.1, 200, 920006);
    out << "empirical freq " << report.empirical_freq << ", bound "
        << report.bound << (report.vacuous ? " (vacuous, reported as such)" : "")
        << ", median max dev " << report.median_max_dev;
    if (!report.vacuous && report.empirical_freq > report.bound) return false;

    // A strongly mixing two-state chain gives the bound real teeth.
    MdpModel mixing;
    mixing.n_states = 2;
    mixing.n_actions = 1;
    mixing.gamma = 0.3;
    mixing.transitions = {0.5, 0.5, 0.5, 0.5};
    mixing.cost = {CostKind::Deterministic, 1.0, {0.1, 0.2, 0.3, 0.4}, {}, {}};
    const auto sharp = deviation_bound_suite(mixing, SimplexPolicy::uniform(2, 1),
                                        200000, 0.5, 200, 920007);
    if (sharp.vacuous) {
        out << "; mixing-chain bound unexpectedly vacuous";
        return false;
    }
    return sharp.empirical_freq <= sharp.bound;
}

bool criterion_nested_risk(std::ostream& out) {
    Rng rng(920008);
    double worst_ratio = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int S = 1 + rng.uniform_int(3), A = 1 + rng.uniform_int(3);
        const auto model = gen_random_mdp(S, A, CostKind::Deterministic, 1.0,
                                          rng.uniform(0.3, 0.5), 600000 + rep);
        const auto spec = random_spec(rng);
        SimplexSearch search;
        search.n_random = 400;
        const auto sol = value_iteration(model, spec, 1e-12, 300, search);
        for (int horizon : {5, 10, 20}) {
            const auto w = nested_risk_eval(model, spec, sol.pi_star, horizon);
            const double bound = std::pow(model.gamma, horizon) * model.cost.c_max /
                                 (1.0 - model.gamma);
            const double gap = sup_diff(w, sol.v_star);
            worst_ratio = std::max(worst_ratio, gap / bound);
            if (gap > bound) {
                out << "instance " << rep << " horizon " << horizon << ": gap "
                    << gap << " exceeds " << bound;
                return false;
            }
        }
    }
    out << "20/20 instances at T in {5,10,20}; worst gap/bound ratio "
        << worst_ratio;
    return true;
}

bool criterion_g_monotonicity(std::ostream& out) {
    Rng rng(920009);
    int curves = 0, tables = 0;
    for (int rep = 0; rep < 40; ++rep) {
        const auto kind =
            rep % 2 == 0 ? CostKind::Deterministic : CostKind::BetaRandom;
        const int S = 1 + rng.uniform_int(4), A = 1 + rng.uniform_int(4);
        const auto model = gen_random_mdp(S, A, kind, 1.0, rng.uniform(0.2, 0.8),
                                          700000 + rep);
        const auto costs = DiscretizedCosts::build(model, 60);
        ValueFunction v(static_cast<std::size_t>(S));
        for (auto& x : v) x = rng.uniform(0.0, model.v_max());
        for (int i = 0; i < S; ++i) {
            const auto lambda = rng.dirichlet(A);
            const auto curve = exact_g(model, costs, v, i, lambda);
            try {
                curve.validate(1e-12);
            } catch (const ValidationError& err) {
                out << "exact curve violates shape: " << err.what();
                return false;
            }
            ++curves;
        }
        // fitted table on simulated data from the same model
        const auto data =
            simulate(model, SimplexPolicy::uniform(S, A), 600, 0, 710000 + rep);
        const auto grid = QGrid::uniform(2 + rng.uniform_int(30), 0.0, model.v_max());
        const auto table = fit_g_table(data, v, grid, model.gamma);
        for (int i = 0; i < S; ++i)
            for (int k = 0; k < A; ++k) {
                const auto row = table.row(i, k);
                for (std::size_t m = 1; m < row.size(); ++m) {
                    const double dq = grid.points[m] - grid.points[m - 1];
                    if (row[m] > row[m - 1] + 1e-12 ||
                        row[m] < row[m - 1] - dq - 1e-12) {
                        out << "fitted table violates shape at (" << i << "," << k
                            << "," << m << ")";
                        return false;
                    }
                }
                ++tables;
            }
    }
    out << curves << " exact curves and " << tables
        << " fitted rows non-increasing and 1-Lipschitz (tol 1e-12)";
    return true;
}

ExperimentConfig study_config(std::uint64_t master_seed, int replicas,
                              long long t_max) {
    ExperimentConfig config;
    config.n_states = 4;
    config.n_actions = 4;
    config.gamma = 0.3;
    config.cost_kind = CostKind::BetaRandom;
    config.c_max = 1.0;
    config.risk_measures = study_measures_raw();
    config.normalize_risk = true;
    config.t_max = t_max;
    config.m_grid = 100;
    config.q_max_mode = ExperimentConfig::QMaxMode::CMax;
    config.backend = Backend::Table;
    config.stop_tol = 1e-4;
    config.max_outer = 50;
    config.oracle_tol = 1e-9;
    config.oracle_max_iter = 200;
    config.replicas = replicas;
    config.master_seed = master_seed;
    return config;
}

bool criterion_study_4x4(std::ostream& out) {
    // Threshold protocol: ERR* is the 99th percentile of the per-state
    // relative errors over a 50-replica calibration run; the 10-replica
    // study must stay below it, and its median error must not increase as
    // the trajectory grows.
    const auto calibration = run_experiment(study_config(50331100, 50, 10000));
    std::vector<double> calib_errors = calibration.all_rel_errors();
    for (const auto& r : calibration.replicas)
        if (!r.ok) {
            out << "calibration replica " << r.replica << " failed: " << r.error;
            return false;
        }
    std::sort(calib_errors.begin(), calib_errors.end());
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(0.99 * static_cast<double>(calib_errors.size()))) - 1;
    const double err_star = calib_errors[std::min(rank, calib_errors.size() - 1)];

    const auto study = run_experiment(study_config(50331200, 10, 10000));
    double worst = 0.0;
    for (const auto& r : study.replicas) {
        if (!r.ok) {
            out << "study replica " << r.replica << " failed: " << r.error;
            return false;
        }
        for (double e : r.rel_err) worst = std::max(worst, e);
    }

    std::vector<double> medians;
    for (long long t : {1000LL, 10000LL, 100000LL}) {
        const auto sweep = run_experiment(study_config(50331200, 10, t));
        for (const auto& r : sweep.replicas)
            if (!r.ok) {
                out << "sweep replica " << r.replica << " (t_max " << t
                    << ") failed: " << r.error;
                return false;
            }
        medians.push_back(median_of(sweep.all_rel_errors()));
    }

    out << "ERR* = " << err_star << " (p99 of 200 calibration errors), study max "
        << worst << "; medians across t_max {1e3,1e4,1e5}: " << medians[0] << " "
        << medians[1] << " " << medians[2];
    if (worst >= err_star) return false;
    return medians[0] >= medians[1] && medians[1] >= medians[2];
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<std::string, std::function<bool(std::ostream&)>> criteria{
        {"contraction", criterion_contraction},
        {"scalar_fixed_point", criterion_scalar_fixed_point},
        {"risk_kernel", criterion_risk_kernel},
        {"table_fit", criterion_table_fit},
        {"bound_calculator", criterion_bound_calculator},
        {"deviation_bound", criterion_deviation_bound},
        {"nested_risk", criterion_nested_risk},
        {"g_monotonicity", criterion_g_monotonicity},
        {"study_4x4", criterion_study_4x4},
    };

    std::vector<std::string> selected;
    for (int a = 1; a < argc; ++a) {
        if (std::strcmp(argv[a], "--list") == 0) {
            for (const auto& [name, fn] : criteria) std::cout << name << "\n";
            return 0;
        }
        if (std::strcmp(argv[a], "--criterion") == 0 && a + 1 < argc)
            selected.emplace_back(argv[++a]);
    }
    if (selected.empty())
        for (const auto& [name, fn] : criteria) selected.push_back(name);

    int failures = 0;
    for (const auto& name : selected) {
        const auto it = criteria.find(name);
        if (it == criteria.end()) {
            std::cerr << "unknown criterion: " << name << "\n";
            return 1;
        }
        std::ostringstream detail;
        bool ok = false;
        try {
            ok = it->second(detail);
        } catch (const std::exception& err) {
            detail << "exception: " << err.what();
        }
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail.str()
                  << std::endl;
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
