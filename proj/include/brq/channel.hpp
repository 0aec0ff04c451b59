#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "brq/quadrature.hpp"
#include "brq/rng.hpp"

namespace brq {

// Per-slot capacity of a gain h at unit transmit power, in bits per channel
// use: C(h) = (1/2) log2(1+h).
inline double capacity(double h) {
    if (h < 0.0) throw std::domain_error("capacity: negative gain");
    return 0.5 * std::log1p(h) / M_LN2;
}

// Inverse of capacity: the gain needed to support rate c. expm1 keeps full
// relative precision for tiny rates, where 2^{2c} - 1 would cancel.
inline double gain_from_capacity(double c) {
    if (c < 0.0) throw std::domain_error("gain_from_capacity: negative rate");
    return std::expm1(2.0 * c * M_LN2);
}

inline double snr_db_to_gamma(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

enum class Fading { Rayleigh, TabulatedInverseCdf };

// Fading law of the slot gains. Immutable after construction; sampling state
// lives in per-episode CounterRng substreams, so a single Channel can be
// shared across workers.
class Channel {
public:
    static Channel rayleigh(double gamma) {
        if (!(gamma > 0.0)) throw std::invalid_argument("rayleigh: gamma must be positive");
        Channel c;
        c.family_ = Fading::Rayleigh;
        c.gamma_ = gamma;
        return c;
    }

    static Channel rayleigh_db(double snr_db) { return rayleigh(snr_db_to_gamma(snr_db)); }

    // Quantile table at uniform probabilities p_i = i/(n-1), i = 0..n-1.
    // Values must be nondecreasing; at least 4097 knots for non-degenerate
    // laws used in quantitative work (a shorter table is allowed only when
    // every knot is identical, i.e. a point mass).
    static Channel tabulated(std::vector<double> quantiles) {
        if (quantiles.size() < 2)
            throw std::invalid_argument("tabulated: need at least two knots");
        if (!std::is_sorted(quantiles.begin(), quantiles.end()))
            throw std::invalid_argument("tabulated: quantile table must be monotone");
        const bool degenerate = quantiles.front() == quantiles.back();
        if (!degenerate && quantiles.size() < 4097)
            throw std::invalid_argument("tabulated: need >= 4097 knots");
        Channel c;
        c.family_ = Fading::TabulatedInverseCdf;
        c.table_ = std::move(quantiles);
        double mean = 0.0;
        for (double v : c.table_) mean += v;
        c.gamma_ = mean / static_cast<double>(c.table_.size());
        return c;
    }

    static Channel point_mass(double h) { return tabulated({h, h}); }

    Fading family() const { return family_; }
    double gamma() const { return gamma_; }

    double pdf(double h) const {
        if (h < 0.0) return 0.0;
        if (family_ == Fading::Rayleigh) return std::exp(-h / gamma_) / gamma_;
        // Slope of the piecewise-linear cdf, smoothed over one knot spacing.
        const double dp = 1.0 / static_cast<double>(table_.size() - 1);
        const double eps = std::max(1e-9, dp * (table_.back() - table_.front()));
        return (cdf(h + eps) - cdf(std::max(0.0, h - eps))) /
               (h + eps - std::max(0.0, h - eps));
    }

    // d/dh of pdf; needed by the optimality condition and the concavity
    // certificate.
    double pdf_derivative(double h) const {
        if (family_ == Fading::Rayleigh) return -pdf(h) / gamma_;
        const double eps = 1e-4 * (1.0 + h);
        return (pdf(h + eps) - pdf(std::max(0.0, h - eps))) /
               (h + eps - std::max(0.0, h - eps));
    }

    double cdf(double h) const {
        if (family_ == Fading::Rayleigh)
            return h <= 0.0 ? 0.0 : -std::expm1(-h / gamma_);
        if (h < table_.front()) return 0.0;
        if (h >= table_.back()) return 1.0;
        // Inverse of the piecewise-linear quantile map.
        const auto it = std::upper_bound(table_.begin(), table_.end(), h);
        const std::size_t j = static_cast<std::size_t>(it - table_.begin());
        const double lo = table_[j - 1], hi = table_[j];
        const double dp = 1.0 / static_cast<double>(table_.size() - 1);
        const double frac = hi > lo ? (h - lo) / (hi - lo) : 1.0;
        return (static_cast<double>(j - 1) + frac) * dp;
    }

    double quantile(double p) const {
        if (p < 0.0 || p >= 1.0) throw std::domain_error("quantile: p must be in [0, 1)");
        if (family_ == Fading::Rayleigh) return -gamma_ * std::log1p(-p);
        const double s = p * static_cast<double>(table_.size() - 1);
        const std::size_t j = std::min(static_cast<std::size_t>(s), table_.size() - 2);
        const double frac = s - static_cast<double>(j);
        return table_[j] + frac * (table_[j + 1] - table_[j]);
    }

    // Practical upper end of the support for quadrature purposes.
    double support_hi() const { return quantile(1.0 - 1e-12); }

    double sample(CounterRng& rng) const { return quantile(rng.next_uniform()); }

    std::vector<double> sample_gains(std::uint64_t seed, std::size_t count) const {
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) {
            CounterRng rng = CounterRng::for_episode(seed, i);
            out[i] = sample(rng);
        }
        return out;
    }

private:
    Channel() = default;
    Fading family_ = Fading::Rayleigh;
    double gamma_ = 1.0;
    std::vector<double> table_;
};

// View of a Channel in the rate domain: the law of C(H).
class CapacityLaw {
public:
    explicit CapacityLaw(const Channel& ch) : ch_(&ch) {}

    // F_C(r) = F_H(2^{2r} - 1), exact composition.
    double cdf(double r) const {
        if (r < 0.0) throw std::domain_error("cap_cdf: negative rate");
        return ch_->cdf(gain_from_capacity(r));
    }

    // Change of variables h = 2^{2c} - 1 gives dh/dc = 2^{2c} * 2 ln 2, so
    // P_C(c) = P_H(2^{2c} - 1) * 2^{2c+1} ln 2.
    double pdf(double c) const {
        if (c < 0.0) throw std::domain_error("cap_pdf: negative rate");
        const double g = std::exp2(2.0 * c);
        return ch_->pdf(g - 1.0) * g * 2.0 * M_LN2;
    }

    double quantile(double p) const { return capacity(ch_->quantile(p)); }

    double support_hi() const { return capacity(ch_->support_hi()); }

    const Channel& channel() const { return *ch_; }

private:
    const Channel* ch_;
};

} // namespace brq
