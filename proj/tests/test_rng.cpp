#include <doctest.h>

#include <cmath>
#include <vector>

#include "riskdp/rng.hpp"

using namespace riskdp;

TEST_CASE("same seed reproduces the same stream") {
    Rng a(123), b(123);
    for (int rep = 0; rep < 1000; ++rep) CHECK(a.next() == b.next());
}

TEST_CASE("derived seeds are distinct per index") {
    CHECK(derive_seed(7, 0) != derive_seed(7, 1));
    CHECK(derive_seed(7, 0) != derive_seed(8, 0));
    CHECK(derive_seed(7, 0) == derive_seed(7, 0));
}

TEST_CASE("uniform stays inside the unit interval") {
    Rng rng(1);
    for (int rep = 0; rep < 100000; ++rep) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("dirichlet draws live on the simplex") {
    Rng rng(2);
    for (int rep = 0; rep < 1000; ++rep) {
        const auto w = rng.dirichlet(4);
        double s = 0.0;
        for (double x : w) {
            CHECK(x >= 0.0);
            s += x;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("beta(2,5) sample mean matches 2/7 to Monte Carlo accuracy") {
    Rng rng(3);
    const int n = 1000000;
    double sum = 0.0;
    for (int rep = 0; rep < n; ++rep) sum += rng.beta(2.0, 5.0);
    const double mean = sum / n;
    const double sd = std::sqrt(2.0 * 5.0 / (49.0 * 8.0));
    CHECK(std::abs(mean - 2.0 / 7.0) <= 3.0 * sd / 1000.0);
}

TEST_CASE("beta(1,1) behaves like a uniform draw") {
    Rng rng(4);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int rep = 0; rep < n; ++rep) {
        const double x = rng.beta(1.0, 1.0);
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.03));
}

TEST_CASE("gamma sampling has the right first moment") {
    Rng rng(5);
    for (double alpha : {0.4, 1.0, 2.5, 7.0}) {
        const int n = 200000;
        double sum = 0.0;
        for (int rep = 0; rep < n; ++rep) sum += rng.gamma(alpha);
        CHECK(sum / n == doctest::Approx(alpha).epsilon(0.02));
    }
    CHECK_THROWS_AS(rng.gamma(0.0), ValidationError);
}

TEST_CASE("discrete sampling follows the given probabilities") {
    Rng rng(6);
    const std::vector<double> probs{0.2, 0.5, 0.3};
    std::vector<int> counts(3, 0);
    const int n = 100000;
    for (int rep = 0; rep < n; ++rep) ++counts[rng.discrete(probs)];
    for (int idx = 0; idx < 3; ++idx)
        CHECK(static_cast<double>(counts[idx]) / n ==
              doctest::Approx(probs[idx]).epsilon(0.05));
}
