#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "riskdp/io.hpp"
#include "riskdp/mdp.hpp"
#include "test_util.hpp"

using namespace riskdp;

TEST_CASE("random models are valid and reproducible") {
    const auto model =
        gen_random_mdp(4, 4, CostKind::BetaRandom, 1.0, 0.3, 7);
    model.validate();
    CHECK(model.n_states == 4);
    CHECK(model.n_actions == 4);
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < 4; ++i) {
            double s = 0.0;
            for (int j = 0; j < 4; ++j) s += model.trans(k, i, j);
            CHECK(std::abs(s - 1.0) <= 1e-12);
        }
    const auto again =
        gen_random_mdp(4, 4, CostKind::BetaRandom, 1.0, 0.3, 7);
    CHECK(model_to_json(model).dump() == model_to_json(again).dump());
    const auto other =
        gen_random_mdp(4, 4, CostKind::BetaRandom, 1.0, 0.3, 8);
    CHECK(model_to_json(model).dump() != model_to_json(other).dump());
}

TEST_CASE("single state single action model is the unit matrix") {
    const auto model =
        gen_random_mdp(1, 1, CostKind::Deterministic, 1.0, 0.5, 3);
    CHECK(model.trans(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("generator rejects bad arguments") {
    CHECK_THROWS_AS(gen_random_mdp(0, 2, CostKind::Deterministic, 1.0, 0.5, 1),
                    ValidationError);
    CHECK_THROWS_AS(gen_random_mdp(2, 2, CostKind::Deterministic, 1.0, 1.0, 1),
                    ValidationError);
    CHECK_THROWS_AS(gen_random_mdp(2, 2, CostKind::Deterministic, 1.0, 0.0, 1),
                    ValidationError);
    CHECK_THROWS_AS(gen_random_mdp(2, 2, CostKind::Deterministic, -1.0, 0.5, 1),
                    ValidationError);
}

TEST_CASE("deterministic costs are returned exactly") {
    MdpModel model;
    model.n_states = 1;
    model.n_actions = 1;
    model.gamma = 0.3;
    model.transitions = {1.0};
    model.cost = {CostKind::Deterministic, 1.0, {0.5}, {}, {}};
    Rng rng(1);
    for (int rep = 0; rep < 10; ++rep)
        CHECK(sample_cost(model, 0, 0, 0, rng) == 0.5);
    CHECK_THROWS_AS(sample_cost(model, 1, 0, 0, rng), ValidationError);
}

TEST_CASE("sampled costs stay inside [0, c_max] for both variants") {
    Rng rng(2);
    for (CostKind kind : {CostKind::Deterministic, CostKind::BetaRandom}) {
        const auto model = gen_random_mdp(3, 2, kind, 2.5, 0.3, 17);
        for (int rep = 0; rep < 100000; ++rep) {
            const double c = sample_cost(model, rep % 3, rep % 2, (rep / 3) % 3, rng);
            CHECK(c >= 0.0);
            CHECK(c <= 2.5);
        }
    }
}

TEST_CASE("beta cost empirical mean matches alpha/(alpha+beta)") {
    MdpModel model;
    model.n_states = 1;
    model.n_actions = 1;
    model.gamma = 0.3;
    model.transitions = {1.0};
    model.cost.kind = CostKind::BetaRandom;
    model.cost.c_max = 1.0;
    model.cost.alpha = {2.0};
    model.cost.beta = {5.0};
    Rng rng(3);
    const int n = 1000000;
    double sum = 0.0;
    for (int rep = 0; rep < n; ++rep) sum += sample_cost(model, 0, 0, 0, rng);
    const double sd = std::sqrt(2.0 * 5.0 / (49.0 * 8.0));
    CHECK(std::abs(sum / n - 2.0 / 7.0) <= 3.0 * sd / 1000.0);
}

TEST_CASE("degenerate chain produces the expected trajectory") {
    MdpModel model;
    model.n_states = 1;
    model.n_actions = 1;
    model.gamma = 0.3;
    model.transitions = {1.0};
    model.cost = {CostKind::Deterministic, 1.0, {0.5}, {}, {}};
    const auto data = simulate(model, SimplexPolicy::uniform(1, 1), 4, 0, 9);
    REQUIRE(data.transitions.size() == 3);
    for (const auto& tr : data.transitions) {
        CHECK(tr.x == 0);
        CHECK(tr.x_next == 0);
        CHECK(tr.c == 0.5);
    }
    CHECK(data.transitions.front().t == 1);
    CHECK(data.transitions.back().t == 3);
}

TEST_CASE("simulation is seed-deterministic and forms a path") {
    const auto model = gen_random_mdp(4, 3, CostKind::BetaRandom, 1.0, 0.3, 21);
    const auto policy = SimplexPolicy::uniform(4, 3);
    const auto a = simulate(model, policy, 500, 0, 77);
    const auto b = simulate(model, policy, 500, 0, 77);
    CHECK(dataset_to_csv(a) == dataset_to_csv(b));
    a.validate(/*require_path=*/true);
    CHECK_THROWS_AS(simulate(model, policy, 1, 0, 1), ValidationError);
    CHECK_THROWS_AS(simulate(model, policy, 10, 9, 1), ValidationError);
}

TEST_CASE("visit counts are balanced under uniform exploration") {
    // 4x4 instance, uniform policy, t_max = 10000: across 100 seeds the
    // (state, action) visit counts should rarely spread by more than 5x.
    const auto model = gen_random_mdp(4, 4, CostKind::Deterministic, 1.0, 0.3, 5);
    const auto policy = SimplexPolicy::uniform(4, 4);
    int outliers = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const auto data = simulate(model, policy, 10000, 0, derive_seed(1000, seed));
        const auto report = check_coverage(data, 4, 4, 1);
        const auto [lo, hi] =
            std::minmax_element(report.counts.begin(), report.counts.end());
        if (*lo == 0 || static_cast<double>(*hi) / *lo > 5.0) ++outliers;
    }
    CHECK(outliers <= 5);
}

TEST_CASE("study-scale runs cover every pair comfortably") {
    const auto model = gen_random_mdp(4, 4, CostKind::Deterministic, 1.0, 0.3, 6);
    const auto policy = SimplexPolicy::uniform(4, 4);
    int good = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const auto data = simulate(model, policy, 10000, 0, derive_seed(2000, seed));
        const auto report = check_coverage(data, 4, 4, 100);
        if (report.covered) ++good;
    }
    CHECK(good >= 95);
}

TEST_CASE("coverage report flags missing pairs") {
    Dataset data;
    data.n_states = 2;
    data.n_actions = 2;
    data.transitions = {{1, 0, 0, 1, 0.1}, {2, 1, 0, 0, 0.2}};
    const auto report = check_coverage(data, 2, 2, 1);
    CHECK_FALSE(report.covered);
    CHECK(report.count(0, 0) == 1);
    CHECK(report.count(1, 0) == 1);
    CHECK(report.count(0, 1) == 0);
    REQUIRE(report.flagged.size() == 2);
    CHECK(report.flagged[0] == std::pair<int, int>{0, 1});

    MdpModel model;
    model.n_states = 1;
    model.n_actions = 1;
    model.gamma = 0.3;
    model.transitions = {1.0};
    model.cost = {CostKind::Deterministic, 1.0, {0.5}, {}, {}};
    const auto chain = simulate(model, SimplexPolicy::uniform(1, 1), 5, 0, 1);
    CHECK(check_coverage(chain, 1, 1, 1).covered);
}

TEST_CASE("empirical transition frequencies obey the Hoeffding envelope") {
    // For pairs with N >= 200 visits, the worst per-target deviation should
    // stay below sqrt(ln(2/delta) / (2N)) in all but a delta fraction of
    // (seed, pair) samples.
    const auto model = gen_random_mdp(3, 3, CostKind::Deterministic, 1.0, 0.3, 8);
    const auto policy = SimplexPolicy::uniform(3, 3);
    const double delta = 0.05;
    int samples = 0, violations = 0;
    for (int seed = 0; seed < 60; ++seed) {
        const auto data = simulate(model, policy, 20000, 0, derive_seed(3000, seed));
        std::vector<long long> pair_n(9, 0);
        std::vector<long long> triple_n(27, 0);
        for (const auto& tr : data.transitions) {
            ++pair_n[static_cast<std::size_t>(tr.x) * 3 + tr.a];
            ++triple_n[(static_cast<std::size_t>(tr.x) * 3 + tr.a) * 3 + tr.x_next];
        }
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) {
                const long long n = pair_n[static_cast<std::size_t>(i) * 3 + k];
                if (n < 200) continue;
                const double bound = std::sqrt(std::log(2.0 / delta) / (2.0 * n));
                double worst = 0.0;
                for (int j = 0; j < 3; ++j) {
                    const double freq =
                        static_cast<double>(
                            triple_n[(static_cast<std::size_t>(i) * 3 + k) * 3 + j]) / n;
                    worst = std::max(worst, std::abs(freq - model.trans(k, i, j)));
                }
                ++samples;
                if (worst > bound) ++violations;
            }
    }
    REQUIRE(samples >= 400);
    CHECK(static_cast<double>(violations) / samples <= delta);
}

TEST_CASE("floored exploration policies keep every action alive") {
    const auto policy = random_exploration_policy(5, 4, 0.05, 99);
    policy.validate(1e-12);
    for (int i = 0; i < 5; ++i)
        for (double w : policy.row(i)) CHECK(w >= 0.05 - 1e-12);

    auto floored = floor_simplex({0.9, 0.06, 0.03, 0.01}, 0.05);
    double sum = 0.0;
    for (double w : floored) {
        CHECK(w >= 0.05 - 1e-15);
        sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(floor_simplex({0.5, 0.5}, 0.6), ValidationError);
}

TEST_CASE("model serialization round-trips bit for bit") {
    for (CostKind kind : {CostKind::Deterministic, CostKind::BetaRandom}) {
        const auto model = gen_random_mdp(3, 4, kind, 1.7, 0.42, 12345);
        const auto back = model_from_json(model_to_json(model));
        CHECK(back.gamma == model.gamma);
        CHECK(back.transitions == model.transitions);
        CHECK(back.cost.table == model.cost.table);
        CHECK(back.cost.alpha == model.cost.alpha);
        CHECK(back.cost.beta == model.cost.beta);
        CHECK(model_hash(back) == model_hash(model));
    }
}

TEST_CASE("dataset CSV round-trips bit for bit") {
    const auto model = gen_random_mdp(3, 2, CostKind::BetaRandom, 1.0, 0.3, 31);
    const auto data = simulate(model, SimplexPolicy::uniform(3, 2), 200, 0, 5);
    const auto csv = dataset_to_csv(data);
    const auto back = dataset_from_csv(csv, 3, 2);
    REQUIRE(back.transitions.size() == data.transitions.size());
    for (std::size_t idx = 0; idx < data.transitions.size(); ++idx) {
        CHECK(back.transitions[idx].t == data.transitions[idx].t);
        CHECK(back.transitions[idx].x == data.transitions[idx].x);
        CHECK(back.transitions[idx].a == data.transitions[idx].a);
        CHECK(back.transitions[idx].x_next == data.transitions[idx].x_next);
        CHECK(back.transitions[idx].c == data.transitions[idx].c);
    }
    CHECK(dataset_to_csv(back) == csv);
}
