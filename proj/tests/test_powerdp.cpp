#include <catch_amalgamated.hpp>

#include <cmath>

#include "brq/powerdp.hpp"

using namespace brq;

namespace {

PowerDpOptions fast_opts() {
    PowerDpOptions o;
    o.grid_nodes = 256;
    o.gl_order = 12;
    o.rho_scan = 32;
    return o;
}

} // namespace

TEST_CASE("boundary and limit behaviour") {
    const Channel ch = Channel::rayleigh(10.0);
    PowerDpOptions abl = fast_opts();
    abl.force_unit_power = true;
    const ValueFunctionGrid g = value_iterate(ch, 0.5, 1.0, abl);
    CHECK(g(-1.0) == 0.0);
    CHECK(g(0.0) == 0.0);
    // One slot suffices almost surely as u -> 0+ at unit power.
    CHECK(g(g.u[1]) == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("value iteration is monotone and converges to a fixed point") {
    const Channel ch = Channel::rayleigh(10.0);
    const double R = CapacityLaw(ch).quantile(0.6);
    PowerDp dp(ch, 0.7, R, fast_opts());

    std::vector<double> prev = dp.grid().value;
    for (int sweep = 0; sweep < 3; ++sweep) {
        dp.bellman_backup();
        for (std::size_t i = 0; i < prev.size(); ++i)
            REQUIRE(dp.grid().value[i] >= prev[i] - 1e-12);
        prev = dp.grid().value;
    }
    dp.solve();

    // Residual: one more backup moves nothing.
    prev = dp.grid().value;
    const double change = dp.bellman_backup();
    CHECK(change <= 1e-6);

    // J nondecreasing in u; powers positive.
    const auto& g = dp.grid();
    for (std::size_t i = 1; i < g.u.size(); ++i) {
        CHECK(g.value[i] >= g.value[i - 1] - 1e-9);
        CHECK(g.rho_star[i] > 0.0);
    }
}

TEST_CASE("unit-power ablation reproduces the harq renewal function") {
    const Channel ch = Channel::rayleigh(10.0);
    const double R = CapacityLaw(ch).quantile(0.6);
    PowerDpOptions abl; // default (fine) grid for the quantitative check
    abl.force_unit_power = true;
    const double j1 = value_iterate(ch, 0.3, R, abl).value.back();
    const double j2 = value_iterate(ch, 1.7, R, abl).value.back();
    const double tau = harq_expected_tau(ch, R);
    CHECK(j1 == Catch::Approx(tau).margin(1e-3)); // lambda terms cancel at rho=1
    CHECK(j2 == Catch::Approx(tau).margin(1e-3));
}

TEST_CASE("dual solve and extracted policy") {
    const Channel ch = Channel::rayleigh(10.0);
    const double R = CapacityLaw(ch).quantile(0.6);
    const DualSolution sol = dual_solve(ch, R, fast_opts());
    CHECK(sol.lambda_star > 0.0);
    CHECK(sol.expected_tau <= harq_expected_tau(ch, R) + 1e-3);

    const PowerPolicyStats st = simulate_power_policy(ch, sol.grid, 100000, 77);
    CHECK(st.power_per_slot <= 1.0 + 5e-3);
    CHECK(std::abs(st.mean_tau - sol.expected_tau) <= 0.02 * sol.expected_tau);
}

TEST_CASE("constrained throughput dominates plain harq-inr") {
    const Channel ch = Channel::rayleigh(10.0);
    PowerDpOptions o = fast_opts();
    const double T = 2.5;
    const TradeoffPoint p = eta_harq_inr_p(ch, T, o);
    const TradeoffPoint plain = eta_harq_inr(ch, T);
    CHECK(p.avg_decoding_time <= T + 1e-2);
    CHECK(p.throughput >= plain.throughput - 1e-4);
    CHECK(p.throughput <= eta_brq(ch, T));
    CHECK(p.throughput <= ergodic_capacity(ch) + 1e-9);
}

TEST_CASE("zero-outage dual closed forms") {
    const Channel ch = Channel::rayleigh(10.0);
    const CapacityLaw cap(ch);
    const double T = 3.0;
    const double lambda = zero_outage_lambda_for_T(ch, T);
    const ZeroOutageDual dual = zero_outage_dual(ch, lambda);
    // The inner maximizer should sit at F_C^{-1}(1 - 1/T).
    CHECK(dual.r_A == Catch::Approx(cap.quantile(1.0 - 1.0 / T)).epsilon(1e-3));

    // Fixed point of the full-CSIT Bellman operator is linear: V = A - u.
    const std::vector<double> V = full_csit_value_iteration(ch, lambda, dual.r_A, 512);
    const double h = dual.r_A / static_cast<double>(V.size() - 1);
    double sup = 0.0;
    for (std::size_t i = 0; i < V.size(); ++i)
        sup = std::max(sup, std::abs(V[i] - (dual.A - static_cast<double>(i) * h)));
    CHECK(sup <= 0.005 * dual.A);
}

TEST_CASE("argument validation") {
    const Channel ch = Channel::rayleigh(10.0);
    CHECK_THROWS_AS(value_iterate(ch, 0.0, 1.0, fast_opts()), std::invalid_argument);
    CHECK_THROWS_AS(value_iterate(ch, 0.5, -1.0, fast_opts()), std::invalid_argument);
    CHECK_THROWS_AS(eta_harq_inr_p(ch, 0.5, fast_opts()), std::domain_error);
}
