#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "brq/quadrature.hpp"
#include "brq/rng.hpp"
#include "brq/search.hpp"

using namespace brq;

TEST_CASE("adaptive quadrature on smooth integrands") {
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
          Catch::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::exp(-x); }, 0.0, 50.0) ==
          Catch::Approx(1.0).epsilon(1e-10));
    // Heavy-tailed-ish peak away from the midpoint.
    CHECK(integrate([](double x) { return 1.0 / (1.0 + 100.0 * x * x); }, -5.0, 5.0) ==
          Catch::Approx(0.2 * std::atan(50.0)).epsilon(1e-8));
    CHECK(integrate([](double) { return 1.0; }, 1.0, 1.0) == 0.0);
}

TEST_CASE("gauss-legendre exactness") {
    GaussLegendre gl(8);
    double sw = 0.0;
    for (double w : gl.w) sw += w;
    CHECK(sw == Catch::Approx(2.0).epsilon(1e-14));
    // Degree-15 polynomial integrated exactly by an 8-point rule.
    CHECK(gl.apply([](double x) { return std::pow(x, 14.0); }, -1.0, 1.0) ==
          Catch::Approx(2.0 / 15.0).epsilon(1e-12));
    CHECK(gl.apply([](double x) { return std::exp(x); }, 0.0, 1.0) ==
          Catch::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
}

TEST_CASE("golden section and bisection") {
    const double xm = golden_section_max(
        [](double x) { return -(x - 0.3) * (x - 0.3); }, 0.0, 1.0, 1e-10);
    CHECK(xm == Catch::Approx(0.3).margin(1e-8));
    const double root =
        bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-12);
    CHECK(root == Catch::Approx(std::sqrt(2.0)).margin(1e-10));
    CHECK_THROWS_AS(bisect([](double x) { return x * x + 1.0; }, 0.0, 1.0, 1e-6),
                    std::invalid_argument);
}

TEST_CASE("counter rng determinism and substreams") {
    CounterRng a = CounterRng::for_episode(42, 7);
    CounterRng b = CounterRng::for_episode(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    // Distinct episodes produce distinct streams.
    CounterRng c = CounterRng::for_episode(42, 8);
    CHECK(CounterRng::for_episode(42, 7).next_u64() != c.next_u64());

    CounterRng u = CounterRng::for_episode(1, 1);
    double mean = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double v = u.next_uniform();
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
        mean += v;
    }
    mean /= n;
    CHECK(mean == Catch::Approx(0.5).margin(4.0 / std::sqrt(12.0 * n)));
}
