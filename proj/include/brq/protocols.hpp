#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "brq/channel.hpp"
#include "brq/rng.hpp"

namespace brq {

struct RunawayEpisode : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Slot-indexed rate selection + feedback + stopping rule.
struct RatePolicy {
    enum class Kind { Brq, EmsFinite, HarqInr };

    Kind kind;
    double h_threshold = 0.0; // Brq: minimal decodable gain h_T
    double r = 0.0;           // EmsFinite: rate quantum; HarqInr: first-slot rate
    int f = 0;                // EmsFinite: feedback alphabet is [-1, f-1], cost f+1

    static RatePolicy brq(double h_threshold) {
        if (!(h_threshold > 0.0)) throw std::invalid_argument("brq: h_T must be positive");
        return {Kind::Brq, h_threshold, 0.0, 0};
    }
    static RatePolicy ems(double r, int f) {
        if (!(r > 0.0) || f < 1) throw std::invalid_argument("ems: need r > 0 and f >= 1");
        return {Kind::EmsFinite, 0.0, r, f};
    }
    static RatePolicy harq_inr(double rate) {
        if (!(rate > 0.0)) throw std::invalid_argument("harq_inr: R must be positive");
        return {Kind::HarqInr, 0.0, rate, 0};
    }
};

// u_{k,t} = sum_{i=k}^{t} (r_i - C(h_i)); zero for t < k (empty sum).
inline double unresolved(std::span<const double> rates, std::span<const double> gains,
                         std::size_t k, std::size_t t) {
    if (k < 1 || t > rates.size() || t > gains.size())
        throw std::out_of_range("unresolved: slot index out of range");
    double u = 0.0;
    for (std::size_t i = k; i <= t; ++i) u += rates[i - 1] - capacity(gains[i - 1]);
    return u;
}

// BRQ rate selection: fixed C(h_T) in slot 1, then exactly the IR needed for
// the previous slot plus new bits, which totals min{C(v), C(h_T)}.
inline double brq_rate(std::size_t t, double v, double h_threshold) {
    if (t < 1) throw std::invalid_argument("brq_rate: t >= 1");
    const double cap_t = capacity(h_threshold);
    if (t == 1) return cap_t;
    return std::min(capacity(v), cap_t);
}

// Finite-feedback symbol: -1 acknowledges (u <= 0); otherwise the floor
// quantization of the unresolved information in units of r.
// The quantization lands in [0, f-1] whenever 0 < u <= r*f; clamp so that
// floating-point noise at the band edges cannot leak an out-of-range symbol.
inline int ems_feedback(double u, double r, int f) {
    if (u <= 0.0) return -1;
    const int v = static_cast<int>(std::floor(static_cast<double>(f) - u / r));
    return std::clamp(v, 0, f - 1);
}

// Rate from the previous feedback symbol: r*f in slot 1, zero after an ACK,
// otherwise min{r(f-1), r*v}.
inline double ems_rate(std::size_t t, int v, double r, int f) {
    if (t < 1) throw std::invalid_argument("ems_rate: t >= 1");
    if (t == 1) return r * static_cast<double>(f);
    if (v == -1) return 0.0;
    if (v < -1 || v > f - 1) throw std::invalid_argument("ems_rate: invalid feedback symbol");
    return std::min(r * static_cast<double>(f - 1), r * static_cast<double>(v));
}

// HARQ-INR appends no new message rate after the first slot.
inline double harq_inr_rate(std::size_t t, double rate) {
    if (t < 1) throw std::invalid_argument("harq_inr_rate: t >= 1");
    return t == 1 ? rate : 0.0;
}

// One renewal episode.
struct EpisodeTrace {
    std::vector<double> gains;
    std::vector<double> rates;
    std::vector<int> feedback;
    std::size_t tau = 0;
    double cum_rate = 0.0;
    double max_unresolved_at_stop = 0.0; // max_k u_{k,tau}
};

inline constexpr std::size_t kEpisodeSlotCap = 1000000;

// Runs one episode of the policy against a gain stream. GainStream must
// expose double next(). The decodability residual max_k u_{k,tau} is the
// maximum suffix sum of (r_i - C(h_i)).
template <class GainStream>
EpisodeTrace run_episode(const RatePolicy& policy, GainStream&& gains,
                         std::size_t slot_cap = kEpisodeSlotCap) {
    EpisodeTrace trace;
    double u = 0.0; // u_{1,t}
    double prev_gain = 0.0;
    int prev_fb = 0;

    for (std::size_t t = 1;; ++t) {
        if (t > slot_cap)
            throw RunawayEpisode("episode exceeded the slot cap; check policy parameters");

        double rate = 0.0;
        switch (policy.kind) {
            case RatePolicy::Kind::Brq:
                rate = brq_rate(t, prev_gain, policy.h_threshold);
                break;
            case RatePolicy::Kind::EmsFinite:
                rate = ems_rate(t, prev_fb, policy.r, policy.f);
                break;
            case RatePolicy::Kind::HarqInr:
                rate = harq_inr_rate(t, policy.r);
                break;
        }

        const double h = gains.next();
        u += rate - capacity(h);
        trace.gains.push_back(h);
        trace.rates.push_back(rate);
        trace.cum_rate += rate;

        bool stop = false;
        switch (policy.kind) {
            case RatePolicy::Kind::Brq:
                stop = policy.h_threshold < h;
                trace.feedback.push_back(stop ? -1 : 0);
                prev_gain = h;
                break;
            case RatePolicy::Kind::EmsFinite: {
                prev_fb = ems_feedback(u, policy.r, policy.f);
                trace.feedback.push_back(prev_fb);
                stop = prev_fb == -1;
                break;
            }
            case RatePolicy::Kind::HarqInr:
                stop = u <= 0.0;
                trace.feedback.push_back(stop ? -1 : 0);
                break;
        }
        if (stop) {
            trace.tau = t;
            break;
        }
    }

    double suffix = 0.0, max_suffix = -std::numeric_limits<double>::infinity();
    for (std::size_t i = trace.tau; i >= 1; --i) {
        suffix += trace.rates[i - 1] - capacity(trace.gains[i - 1]);
        max_suffix = std::max(max_suffix, suffix);
    }
    trace.max_unresolved_at_stop = max_suffix;
    return trace;
}

// Gain stream backed by a channel and a counter-based substream.
class ChannelGainStream {
public:
    ChannelGainStream(const Channel& ch, CounterRng rng) : ch_(&ch), rng_(rng) {}
    double next() { return ch_->sample(rng_); }

private:
    const Channel* ch_;
    CounterRng rng_;
};

} // namespace brq
