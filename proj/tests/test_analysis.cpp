#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "brq/analysis.hpp"
#include "brq/mc.hpp"

using namespace brq;

namespace {

// Exponential integral E1(x) for x > 0; independent oracle for the Rayleigh
// ergodic capacity C_erg = e^{1/G} E1(1/G) / (2 ln 2). Series for small x,
// continued fraction (Lentz) for large x.
double expint_e1(double x) {
    REQUIRE(x > 0.0);
    if (x <= 1.0) {
        const double euler = 0.5772156649015328606;
        double sum = -euler - std::log(x);
        double term = 1.0;
        for (int k = 1; k <= 60; ++k) {
            term *= -x / k;
            sum -= term / k;
        }
        return sum;
    }
    double b = x + 1.0, c = 1e300, d = 1.0 / b, f = d;
    for (int k = 1; k <= 200; ++k) {
        const double a = -static_cast<double>(k) * k;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return f * std::exp(-x);
}

} // namespace

TEST_CASE("ergodic capacity") {
    const Channel pm = Channel::point_mass(3.0);
    CHECK(ergodic_capacity(pm) == Catch::Approx(1.0).margin(1e-8));

    const Channel ch10 = Channel::rayleigh(10.0);
    const double oracle = std::exp(0.1) * expint_e1(0.1) / (2.0 * M_LN2);
    CHECK(ergodic_capacity(ch10) == Catch::Approx(oracle).margin(1e-6));

    CHECK(ergodic_capacity(Channel::rayleigh(31.62)) > ergodic_capacity(ch10));
}

TEST_CASE("brq threshold and throughput") {
    const Channel ch1 = Channel::rayleigh(1.0);
    CHECK(brq_threshold(ch1, 2.0) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(brq_threshold(ch1, 1.0 + 1e-9) == Catch::Approx(0.0).margin(1e-8));
    CHECK_THROWS_AS(brq_threshold(ch1, 1.0), std::domain_error);
    for (double T : {1.5, 3.0, 10.0})
        CHECK(ch1.cdf(brq_threshold(ch1, T)) == Catch::Approx(1.0 - 1.0 / T).margin(1e-10));

    const Channel ch = Channel::rayleigh(10.0);
    const double c_erg = ergodic_capacity(ch);
    CHECK(eta_brq(ch, 1e6) == Catch::Approx(c_erg).epsilon(1e-3));
    CHECK(eta_brq(ch, 1.0 + 1e-6) == Catch::Approx(0.0).margin(1e-4));

    // Two-term assembly: eta - C(h_T)/T equals the integral term.
    const double T = 2.5;
    const double h_t = brq_threshold(ch, T);
    const double body =
        integrate([&](double h) { return ch.pdf(h) * capacity(h); }, 0.0, h_t, 1e-10);
    CHECK(eta_brq(ch, T) - capacity(h_t) / T == Catch::Approx(body).margin(1e-10));

    // Nondecreasing in T, bounded by ergodic capacity.
    double prev = 0.0;
    for (double t : {1.2, 1.5, 2.0, 3.0, 5.0, 10.0, 50.0}) {
        const double e = eta_brq(ch, t);
        CHECK(e >= prev - 1e-12);
        CHECK(e <= c_erg + 1e-9);
        prev = e;
    }
}

TEST_CASE("optimality condition and concavity certificate") {
    const Channel ch = Channel::rayleigh(10.0);
    for (double h : {0.0, 0.5, 1.0, 5.0, 20.0})
        CHECK(brq_optimality_lhs(ch, h) ==
              Catch::Approx(1.0 / (1.0 + h)).margin(1e-9));
    CHECK(brq_optimality_lhs(Channel::rayleigh(1.0), 0.0) ==
          Catch::Approx(1.0).margin(1e-12));

    for (double T : {1.2, 2.0, 5.0, 20.0}) {
        const double d2 = t_eta_second_derivative(ch, T);
        CHECK(d2 <= 0.0);
        const double s = 1e-3;
        auto te = [&](double t) { return t * eta_brq(ch, t); };
        const double fd = (te(T + s) - 2.0 * te(T) + te(T - s)) / (s * s);
        CHECK(d2 == Catch::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("harq outage probabilities") {
    const Channel ch = Channel::rayleigh(10.0);
    const CapacityLaw cap(ch);
    CHECK(harq_outage(ch, 1, 1.3) == Catch::Approx(cap.cdf(1.3)).epsilon(1e-12));
    CHECK(harq_outage(ch, 3, 0.0) == 0.0);

    // Monotone in m (down) and R (up).
    CHECK(harq_outage(ch, 2, 2.0) <= harq_outage(ch, 1, 2.0));
    CHECK(harq_outage(ch, 3, 2.0) <= harq_outage(ch, 2, 2.0));
    CHECK(harq_outage(ch, 2, 1.0) <= harq_outage(ch, 2, 2.0));

    // m=2 against direct Monte Carlo of C(H1)+C(H2).
    const std::size_t n = 1000000;
    std::size_t hits = 0;
    for (std::size_t e = 0; e < n; ++e) {
        CounterRng rng = CounterRng::for_episode(5, e);
        if (capacity(ch.sample(rng)) + capacity(ch.sample(rng)) < 2.0) ++hits;
    }
    const double p_mc = static_cast<double>(hits) / n;
    const double se = std::sqrt(p_mc * (1.0 - p_mc) / n);
    CHECK(std::abs(harq_outage(ch, 2, 2.0) - p_mc) <= 3.0 * se);

    // Grid doubling self-check.
    CHECK(std::abs(harq_outage(ch, 2, 2.0, 4096) - harq_outage(ch, 2, 2.0, 8192)) < 1e-6);
}

TEST_CASE("harq expected decoding time") {
    const Channel ch = Channel::rayleigh(10.0);
    CHECK(harq_expected_tau(ch, 0.0) == 1.0);
    double prev = 1.0;
    for (double R : {0.5, 1.0, 1.5, 2.0, 2.5}) {
        const double t = harq_expected_tau(ch, R);
        CHECK(t >= prev - 1e-12);
        prev = t;
    }

    const RenewalEstimate est =
        estimate(RatePolicy::harq_inr(2.0), ch, 100000, 11, 1);
    CHECK(std::abs(est.mean_tau - harq_expected_tau(ch, 2.0)) <=
          3.0 * est.mean_tau_se);

    const HarqExpectedTau detail = harq_expected_tau_detailed(ch, 2.0);
    CHECK(detail.tail_bound <= 1e-6);
    CHECK(detail.terms >= 2);
}

TEST_CASE("harq-inr constrained throughput") {
    const Channel ch = Channel::rayleigh(10.0);
    const TradeoffPoint at1 = eta_harq_inr(ch, 1.0);
    CHECK(at1.throughput == 0.0);

    const double c_erg = ergodic_capacity(ch);
    const TradeoffPoint large = eta_harq_inr(ch, 1000.0);
    CHECK(std::abs(large.throughput - c_erg) <= 0.05 * c_erg);

    for (double T : {1.5, 2.0, 3.0, 5.0}) {
        const TradeoffPoint pt = eta_harq_inr(ch, T);
        CHECK(pt.avg_decoding_time <= T + 1e-3);
        CHECK(pt.throughput <= eta_brq(ch, T));
    }
}
