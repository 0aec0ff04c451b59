#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "brq/analysis.hpp"
#include "brq/channel.hpp"
#include "brq/protocols.hpp"
#include "brq/rng.hpp"

namespace brq {

// Renewal-reward summary of a batch of simulated episodes.
struct RenewalEstimate {
    std::size_t n_episodes = 0;
    std::uint64_t master_seed = 0;
    double mean_reward = 0.0;
    double mean_reward_se = 0.0;
    double mean_tau = 0.0;
    double mean_tau_se = 0.0;
    double throughput = 0.0;
    double throughput_se = 0.0;
    // Worst-case invariant residuals across all episodes (order-independent).
    double max_decodability_residual = -std::numeric_limits<double>::infinity();
    double max_brq_identity_error = 0.0;
};

namespace mc_detail {

// Per-block moment sums. Blocks have a fixed episode range, so the partial
// sums depend only on (policy, channel, seed); workers merely race to produce
// them and the final reduce walks blocks in index order, which makes the
// result bit-identical for any worker count.
struct BlockSums {
    double r = 0.0, tau = 0.0, rr = 0.0, tt = 0.0, rt = 0.0;
    double max_resid = -std::numeric_limits<double>::infinity();
    double max_brq_err = 0.0;
};

inline constexpr std::size_t kBlockEpisodes = 4096;

inline BlockSums run_block(const RatePolicy& policy, const Channel& ch,
                           std::uint64_t seed, std::size_t first, std::size_t last) {
    BlockSums s;
    for (std::size_t e = first; e < last; ++e) {
        ChannelGainStream stream(ch, CounterRng::for_episode(seed, e));
        const EpisodeTrace tr = run_episode(policy, stream);
        const double r = tr.cum_rate, t = static_cast<double>(tr.tau);
        s.r += r;
        s.tau += t;
        s.rr += r * r;
        s.tt += t * t;
        s.rt += r * t;
        s.max_resid = std::max(s.max_resid, tr.max_unresolved_at_stop);
        if (policy.kind == RatePolicy::Kind::Brq) {
            const double u1 = unresolved(tr.rates, tr.gains, 1, tr.tau);
            const double expected =
                capacity(policy.h_threshold) - capacity(tr.gains.back());
            s.max_brq_err = std::max(s.max_brq_err, std::abs(u1 - expected));
        }
    }
    return s;
}

} // namespace mc_detail

// Runs n_episodes renewal episodes on per-episode substreams. The ratio
// estimator's standard error uses the delta method:
//   Var(r_bar/tau_bar) ~ (s_rr - 2 eta s_rt + eta^2 s_tt) / (n tau_bar^2)
// with s_** the sample (co)variances of per-episode (reward, tau).
inline RenewalEstimate estimate(const RatePolicy& policy, const Channel& ch,
                                std::size_t n_episodes, std::uint64_t master_seed,
                                unsigned workers = 1) {
    if (n_episodes < 1) throw std::invalid_argument("estimate: n_episodes >= 1");
    if (workers < 1) workers = 1;

    const std::size_t n_blocks =
        (n_episodes + mc_detail::kBlockEpisodes - 1) / mc_detail::kBlockEpisodes;
    std::vector<mc_detail::BlockSums> blocks(n_blocks);

    auto do_block = [&](std::size_t b) {
        const std::size_t first = b * mc_detail::kBlockEpisodes;
        const std::size_t last = std::min(n_episodes, first + mc_detail::kBlockEpisodes);
        blocks[b] = mc_detail::run_block(policy, ch, master_seed, first, last);
    };

    if (workers == 1 || n_blocks == 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) do_block(b);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::exception_ptr error;
        std::mutex error_mu;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                try {
                    for (std::size_t b = next.fetch_add(1); b < n_blocks;
                         b = next.fetch_add(1))
                        do_block(b);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(error_mu);
                    if (!error) error = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }

    mc_detail::BlockSums total;
    for (const auto& b : blocks) { // fixed index order: deterministic rounding
        total.r += b.r;
        total.tau += b.tau;
        total.rr += b.rr;
        total.tt += b.tt;
        total.rt += b.rt;
        total.max_resid = std::max(total.max_resid, b.max_resid);
        total.max_brq_err = std::max(total.max_brq_err, b.max_brq_err);
    }

    RenewalEstimate est;
    est.n_episodes = n_episodes;
    est.master_seed = master_seed;
    const double n = static_cast<double>(n_episodes);
    est.mean_reward = total.r / n;
    est.mean_tau = total.tau / n;
    const double s_rr = std::max(0.0, total.rr / n - est.mean_reward * est.mean_reward);
    const double s_tt = std::max(0.0, total.tt / n - est.mean_tau * est.mean_tau);
    const double s_rt = total.rt / n - est.mean_reward * est.mean_tau;
    est.mean_reward_se = std::sqrt(s_rr / n);
    est.mean_tau_se = std::sqrt(s_tt / n);
    est.throughput = est.mean_reward / est.mean_tau;
    const double var_eta =
        (s_rr - 2.0 * est.throughput * s_rt + est.throughput * est.throughput * s_tt) /
        (n * est.mean_tau * est.mean_tau);
    est.throughput_se = std::sqrt(std::max(0.0, var_eta));
    est.max_decodability_residual = total.max_resid;
    est.max_brq_identity_error = total.max_brq_err;
    return est;
}

// Statistical comparison of a Monte Carlo estimate against an analytic
// prediction; pass iff both z-scores are within 3.
struct Verdict {
    double z_throughput = 0.0;
    double z_tau = 0.0;
    bool pass = false;
};

inline Verdict compare(const RenewalEstimate& est, const TradeoffPoint& pred) {
    Verdict v;
    const double se_eta = std::max(est.throughput_se, 1e-300);
    const double se_tau = std::max(est.mean_tau_se, 1e-300);
    v.z_throughput = (est.throughput - pred.throughput) / se_eta;
    v.z_tau = (est.mean_tau - pred.avg_decoding_time) / se_tau;
    if (est.throughput == pred.throughput) v.z_throughput = 0.0;
    if (est.mean_tau == pred.avg_decoding_time) v.z_tau = 0.0;
    v.pass = std::abs(v.z_throughput) <= 3.0 && std::abs(v.z_tau) <= 3.0;
    return v;
}

} // namespace brq
