#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "brq/analysis.hpp"
#include "brq/protocols.hpp"

using namespace brq;

namespace {

struct VecStream {
    std::vector<double> gains;
    std::size_t i = 0;
    double next() { return gains.at(i++); }
};

} // namespace

TEST_CASE("unresolved information bookkeeping") {
    std::vector<double> rates{0.5, 0.3, 0.2};
    std::vector<double> gains{gain_from_capacity(0.7), gain_from_capacity(0.1),
                              gain_from_capacity(0.4)};
    CHECK(unresolved(rates, gains, 2, 1) == 0.0); // empty-sum convention
    CHECK(unresolved(rates, gains, 1, 1) == Catch::Approx(-0.2).margin(1e-12));
    // Telescoping u_{k,t} = u_{1,t} - u_{1,k-1}.
    const double lhs = unresolved(rates, gains, 2, 3);
    const double rhs = unresolved(rates, gains, 1, 3) - unresolved(rates, gains, 1, 1);
    CHECK(lhs == Catch::Approx(rhs).margin(1e-12));
    CHECK_THROWS_AS(unresolved(rates, gains, 0, 1), std::out_of_range);
    CHECK_THROWS_AS(unresolved(rates, gains, 1, 4), std::out_of_range);
}

TEST_CASE("per-slot rate rules") {
    const double h_t = 2.0;
    CHECK(brq_rate(1, 0.0, h_t) == Catch::Approx(capacity(h_t)));
    CHECK(brq_rate(2, 0.0, h_t) == 0.0);
    CHECK(brq_rate(2, h_t, h_t) == Catch::Approx(capacity(h_t)));

    const double r = 0.4;
    CHECK(ems_feedback(-0.1, r, 3) == -1);
    CHECK(ems_feedback(0.3 * r, r, 3) == 2);
    CHECK(ems_feedback(3.0 * r, r, 3) == 0);
    CHECK(ems_rate(1, 0, r, 3) == Catch::Approx(3.0 * r));
    CHECK(ems_rate(2, -1, r, 3) == 0.0);
    CHECK(ems_rate(2, 2, r, 3) == Catch::Approx(2.0 * r));
    CHECK_THROWS_AS(ems_rate(2, 5, r, 3), std::invalid_argument);

    CHECK(harq_inr_rate(1, 1.3) == 1.3);
    CHECK(harq_inr_rate(2, 1.3) == 0.0);
    CHECK(harq_inr_rate(17, 1.3) == 0.0);
}

TEST_CASE("single-slot stops") {
    const RatePolicy brq_pol = RatePolicy::brq(2.0);
    VecStream s1{{3.0}};
    const EpisodeTrace t1 = run_episode(brq_pol, s1);
    CHECK(t1.tau == 1);
    CHECK(t1.cum_rate == Catch::Approx(capacity(2.0)));

    const RatePolicy hq = RatePolicy::harq_inr(0.9);
    VecStream s2{{gain_from_capacity(0.95)}};
    const EpisodeTrace t2 = run_episode(hq, s2);
    CHECK(t2.tau == 1);
    CHECK(t2.cum_rate == Catch::Approx(0.9));
}

TEST_CASE("decodability invariants over random episodes") {
    const Channel ch = Channel::rayleigh(10.0);
    const double h_t = brq_threshold(ch, 2.0);
    const RatePolicy brq_pol = RatePolicy::brq(h_t);
    const RatePolicy ems_pol = RatePolicy::ems(0.35, 3);

    for (std::size_t e = 0; e < 10000; ++e) {
        ChannelGainStream gs(ch, CounterRng::for_episode(99, e));
        const EpisodeTrace tr = run_episode(brq_pol, gs);
        REQUIRE(tr.max_unresolved_at_stop <= 1e-9);
        // BRQ identity u_{1,tau} = C(h_T) - C(H_tau).
        const double u1 = unresolved(tr.rates, tr.gains, 1, tr.tau);
        REQUIRE(std::abs(u1 - (capacity(h_t) - capacity(tr.gains.back()))) <= 1e-12);
    }

    std::set<int> symbols;
    for (std::size_t e = 0; e < 10000; ++e) {
        ChannelGainStream gs(ch, CounterRng::for_episode(100, e));
        const EpisodeTrace tr = run_episode(ems_pol, gs);
        REQUIRE(tr.max_unresolved_at_stop <= 1e-9);
        for (int v : tr.feedback) symbols.insert(v);
        // Trajectory band: u + next rate in (r(f-1), r*f] while running.
        double u = 0.0;
        for (std::size_t t = 1; t <= tr.tau; ++t) {
            u += tr.rates[t - 1] - capacity(tr.gains[t - 1]);
            if (t < tr.tau) {
                const double band = u + tr.rates[t];
                REQUIRE(band > 0.35 * 2 - 1e-12);
                REQUIRE(band <= 0.35 * 3 + 1e-12);
            }
        }
    }
    CHECK(symbols.size() <= 4); // feedback cost f+1
}

TEST_CASE("ems f=1 reduces to harq-inr on shared gain streams") {
    const Channel ch = Channel::rayleigh(10.0);
    const double r = 1.1;
    for (std::size_t e = 0; e < 2000; ++e) {
        const auto draws = [&] {
            std::vector<double> g;
            ChannelGainStream gs(ch, CounterRng::for_episode(17, e));
            for (int i = 0; i < 64; ++i) g.push_back(gs.next());
            return g;
        }();
        VecStream a{draws}, b{draws};
        const EpisodeTrace ems = run_episode(RatePolicy::ems(r, 1), a);
        const EpisodeTrace harq = run_episode(RatePolicy::harq_inr(r), b);
        REQUIRE(ems.tau == harq.tau);
        REQUIRE(ems.cum_rate == Catch::Approx(harq.cum_rate).margin(1e-12));
    }
}

TEST_CASE("runaway episodes raise instead of truncating") {
    // Point-mass channel where EMS(r=1, f=2) stalls: after slot 1 the
    // feedback pins the rate to 0 while u stays positive forever.
    const Channel pm = Channel::point_mass(1.0);
    ChannelGainStream gs(pm, CounterRng::for_episode(1, 0));
    CHECK_THROWS_AS(run_episode(RatePolicy::ems(1.0, 2), gs, 1000), RunawayEpisode);
}

TEST_CASE("policy validation") {
    CHECK_THROWS_AS(RatePolicy::brq(0.0), std::invalid_argument);
    CHECK_THROWS_AS(RatePolicy::ems(0.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(RatePolicy::ems(0.5, 0), std::invalid_argument);
    CHECK_THROWS_AS(RatePolicy::harq_inr(-1.0), std::invalid_argument);
}
