#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "brq/channel.hpp"
#include "brq/quadrature.hpp"
#include "brq/search.hpp"

namespace brq {

// One point on a protocol's throughput / average-decoding-time trade-off.
struct TradeoffPoint {
    std::string protocol;
    double param = 0.0; // h_T, R, or r (with f carried separately)
    int f = 0;
    double avg_decoding_time = 0.0;
    double throughput = 0.0;
};

// E[C(H)], integrated in the probability domain so that tabulated and
// degenerate laws are handled with the same route as smooth densities.
inline double ergodic_capacity(const Channel& ch) {
    const double p_hi = 1.0 - 1e-12;
    return integrate([&](double p) { return capacity(ch.quantile(p)); }, 0.0, p_hi, 1e-10);
}

// h_T = F_H^{-1}(1 - 1/T); the BRQ stopping threshold whose expected
// decoding time is exactly T = 1/(1 - F_H(h_T)).
inline double brq_threshold(const Channel& ch, double T) {
    if (!(T > 1.0)) throw std::domain_error("brq_threshold: T must exceed 1");
    return ch.quantile(1.0 - 1.0 / T);
}

// eta_BRQ(T) = int_0^{h_T} P_H(h) C(h) dh + C(h_T)/T.
inline double eta_brq(const Channel& ch, double T) {
    const double h_t = brq_threshold(ch, T);
    const double body =
        integrate([&](double h) { return ch.pdf(h) * capacity(h); }, 0.0, h_t, 1e-9);
    return body + capacity(h_t) / T;
}

// LHS of the optimality condition P_H/(1-F_H) + 1/(1+h) + P_H'/P_H >= 0.
// For Rayleigh the hazard and score terms cancel, leaving 1/(1+h).
inline double brq_optimality_lhs(const Channel& ch, double h) {
    if (h < 0.0) throw std::domain_error("brq_optimality_lhs: negative gain");
    const double p = ch.pdf(h);
    if (!(p > 0.0)) throw std::domain_error("brq_optimality_lhs: density vanishes");
    return p / (1.0 - ch.cdf(h)) + 1.0 / (1.0 + h) + ch.pdf_derivative(h) / p;
}

// Second derivative of T * eta_BRQ(T) with respect to T. Nonpositive
// everywhere iff the optimality condition holds; certifies concavity.
inline double t_eta_second_derivative(const Channel& ch, double T) {
    const double h = brq_threshold(ch, T);
    const double p = ch.pdf(h);
    if (!(p > 0.0)) throw std::domain_error("t_eta_second_derivative: density vanishes");
    const double dp = ch.pdf_derivative(h);
    const double T3 = T * T * T, T4 = T3 * T;
    const double s = -1.0 / ((1.0 + h) * T3 * p)
                     - 1.0 / ((1.0 + h) * (1.0 + h) * T4 * p * p)
                     - dp / ((1.0 + h) * T4 * p * p * p);
    return s / (2.0 * M_LN2);
}

// Iterated grid convolution of P_C truncated to [0, R]. The grid holds the
// density of sum_{k<=m} C(H_k) at uniform nodes; mass beyond R never feeds
// back into values below R, so the truncation is exact up to discretization.
class CapacitySumConvolver {
public:
    CapacitySumConvolver(const Channel& ch, double rate_cap, std::size_t cells = 4096)
        : cap_(ch), R_(rate_cap), n_(cells), h_(rate_cap / static_cast<double>(cells)) {
        pc_.resize(n_ + 1);
        for (std::size_t i = 0; i <= n_; ++i) pc_[i] = cap_.pdf(static_cast<double>(i) * h_);
        density_ = pc_;
        m_ = 1;
    }

    std::size_t order() const { return m_; }

    // Pr{sum of the current m capacities < R}.
    double outage() const { return trapezoid(density_); }

    // Convolves the current density with one more copy of P_C.
    void step() {
        std::vector<double> next(n_ + 1, 0.0);
        for (std::size_t i = 1; i <= n_; ++i) {
            double s = 0.5 * (pc_[0] * density_[i] + pc_[i] * density_[0]);
            for (std::size_t j = 1; j < i; ++j) s += pc_[j] * density_[i - j];
            next[i] = s * h_;
        }
        density_ = std::move(next);
        ++m_;
    }

private:
    double trapezoid(const std::vector<double>& v) const {
        double s = 0.5 * (v.front() + v.back());
        for (std::size_t i = 1; i < n_; ++i) s += v[i];
        return s * h_;
    }

    CapacityLaw cap_;
    double R_;
    std::size_t n_;
    double h_;
    std::vector<double> pc_;
    std::vector<double> density_;
    std::size_t m_ = 1;
};

// p_out^m(R) = Pr{sum_{k=1}^m C(H_k) < R}.
inline double harq_outage(const Channel& ch, std::size_t m, double R,
                          std::size_t cells = 4096) {
    if (m < 1) throw std::invalid_argument("harq_outage: m >= 1");
    if (R < 0.0) throw std::domain_error("harq_outage: negative rate");
    if (R == 0.0) return 0.0;
    if (m == 1) return CapacityLaw(ch).cdf(R);
    CapacitySumConvolver conv(ch, R, cells);
    for (std::size_t k = 1; k < m; ++k) conv.step();
    return conv.outage();
}

struct HarqExpectedTau {
    double value = 1.0;
    std::size_t terms = 0;     // m* at truncation
    double tail_bound = 0.0;   // geometric bound added for the dropped tail
};

// E[tau] = 1 + sum_{m>=1} p_out^m(R), truncated once the summand falls below
// 1e-9 with a geometric tail bound q/(1-q) appended.
inline HarqExpectedTau harq_expected_tau_detailed(const Channel& ch, double R,
                                                  std::size_t cells = 4096) {
    if (R < 0.0) throw std::domain_error("harq_expected_tau: negative rate");
    HarqExpectedTau out;
    if (R == 0.0) return out;
    CapacitySumConvolver conv(ch, R, cells);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t m = 1; m <= 100000; ++m) {
        const double p = conv.outage();
        out.value += p;
        out.terms = m;
        if (p < 1e-9) {
            if (prev > 0.0 && p > 0.0) {
                const double q = p / prev;
                if (q < 1.0) out.tail_bound = p * q / (1.0 - q);
            }
            out.value += out.tail_bound;
            return out;
        }
        if (m > 4 && p >= prev)
            throw std::runtime_error("harq_expected_tau: outage series fails to decay");
        prev = p;
        conv.step();
    }
    throw std::runtime_error("harq_expected_tau: series truncation limit reached");
}

inline double harq_expected_tau(const Channel& ch, double R, std::size_t cells = 4096) {
    return harq_expected_tau_detailed(ch, R, cells).value;
}

// Hybrid E[tau](R) evaluator. The truncated convolution series loses grid
// resolution once R spans many renewals, so beyond an anchor rate the
// elementary renewal theorem takes over: E[tau](R) - R/C_erg converges, and
// the linear extension from the anchor is accurate to o(1) there.
class HarqTauEvaluator {
public:
    explicit HarqTauEvaluator(const Channel& ch)
        : ch_(&ch), c_erg_(ergodic_capacity(ch)), r_anchor_(48.0 * c_erg_) {}

    double operator()(double R) const {
        if (R <= r_anchor_) return harq_expected_tau(*ch_, R);
        if (anchor_tau_ < 0.0) anchor_tau_ = harq_expected_tau(*ch_, r_anchor_);
        return anchor_tau_ + (R - r_anchor_) / c_erg_;
    }

private:
    const Channel* ch_;
    double c_erg_;
    double r_anchor_;
    mutable double anchor_tau_ = -1.0;
};

// Largest first-slot rate whose expected decoding time stays within T.
// E[tau](R) is nondecreasing in R, so this is a bisection on the boundary.
inline double harq_rate_for_tau(const Channel& ch, double T, double r_hi) {
    const HarqTauEvaluator tau(ch);
    if (tau(r_hi) <= T) return r_hi;
    return bisect([&](double r) { return tau(r) - T; }, 1e-9, r_hi, 1e-7 * r_hi);
}

// Maximal HARQ-INR throughput subject to E[tau] <= T.
inline TradeoffPoint eta_harq_inr(const Channel& ch, double T) {
    if (!(T >= 1.0)) throw std::domain_error("eta_harq_inr: T must be >= 1");
    TradeoffPoint pt;
    pt.protocol = "harq-inr";
    if (T == 1.0) {
        pt.avg_decoding_time = 1.0;
        return pt; // only R -> 0 is feasible under full-support fading
    }
    const HarqTauEvaluator tau(ch);
    const double r_hi = capacity(ch.quantile(1.0 - 1.0 / T)) * T * 2.0;
    const double r_max = harq_rate_for_tau(ch, T, r_hi);
    const double r_opt = golden_section_max(
        [&](double r) { return r / tau(r); }, 1e-6, r_max, 1e-7 * r_max);
    pt.param = r_opt;
    pt.avg_decoding_time = tau(r_opt);
    pt.throughput = r_opt / pt.avg_decoding_time;
    return pt;
}

} // namespace brq
