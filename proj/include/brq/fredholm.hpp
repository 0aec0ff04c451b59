#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "brq/analysis.hpp"
#include "brq/channel.hpp"
#include "brq/quadrature.hpp"
#include "brq/search.hpp"

namespace brq {

// Composite rate-feedback map: the rate the transmitter picks next slot as a
// function of the current unresolved information, r * min{f-1, floor(f - u/r)}.
// Piecewise constant, equal to r(f-j) on ((j-1)r, jr].
inline double composite_rate_feedback(double u, double r, int f) {
    if (u < 0.0 || u > r * f * (1.0 + 1e-12))
        throw std::domain_error("composite_rate_feedback: u outside [0, r*f]");
    const double up = std::max(u, 0.0);
    // Clamp against floating-point noise at the band edges (cf. ems_feedback).
    const double fl =
        std::clamp(std::floor(static_cast<double>(f) - up / r), 0.0,
                   static_cast<double>(f - 1));
    return r * std::min(static_cast<double>(f - 1), fl);
}

// A function on [0, r*f] sampled on a breakpoint-aligned grid: f segments of
// m+1 nodes each, duplicating the interior breakpoints j*r so that the jump
// of the composite rate-feedback map sits exactly between two nodes.
// Piecewise-linear interpolation within a segment; at a breakpoint the
// right-closed segment owns the value.
class GriddedFunction {
public:
    GriddedFunction(double r, int f, std::size_t nodes_per_segment)
        : r_(r), f_(f), m_(nodes_per_segment), h_(r / static_cast<double>(nodes_per_segment)),
          values_(static_cast<std::size_t>(f) * (nodes_per_segment + 1), 0.0) {}

    double r() const { return r_; }
    int f() const { return f_; }
    std::size_t nodes_per_segment() const { return m_; }
    double spacing() const { return h_; }
    std::size_t size() const { return values_.size(); }

    double node_u(std::size_t idx) const {
        const std::size_t seg = idx / (m_ + 1), k = idx % (m_ + 1);
        return (static_cast<double>(seg) * m_ + static_cast<double>(k)) * h_;
    }

    double& operator[](std::size_t idx) { return values_[idx]; }
    double operator[](std::size_t idx) const { return values_[idx]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    // Evaluation; u in [0, r*f] (tiny negatives clamp to 0).
    double operator()(double u) const {
        if (u <= 0.0) return values_[0];
        int seg = static_cast<int>(std::ceil(u / r_ - 1e-13)) - 1;
        seg = std::min(std::max(seg, 0), f_ - 1);
        double x = (u - static_cast<double>(seg) * r_) / h_;
        x = std::min(std::max(x, 0.0), static_cast<double>(m_));
        const std::size_t k = std::min(static_cast<std::size_t>(x), m_ - 1);
        const double frac = x - static_cast<double>(k);
        const std::size_t base = static_cast<std::size_t>(seg) * (m_ + 1);
        return values_[base + k] * (1.0 - frac) + values_[base + k + 1] * frac;
    }

private:
    double r_;
    int f_;
    std::size_t m_;
    double h_;
    std::vector<double> values_;
};

namespace fredholm_detail {

// Shared Nystrom discretization of x(u) = source(u) + int_0^{u+rv(u)}
// P_C(y) x(u + rv(u) - y) dy on the breakpoint-aligned grid. All nodes and
// all shifted arguments u + rv(u) live on the common lattice of spacing h,
// so the kernel needs P_C only at lattice points.
struct Discretization {
    double r;
    int f;
    std::size_t m;         // intervals per segment
    double h;
    std::vector<double> pc; // P_C at lattice points 0..f*m

    Discretization(const Channel& ch, double r_in, int f_in, std::size_t nodes_total) {
        r = r_in;
        f = f_in;
        m = std::max<std::size_t>(32, nodes_total / static_cast<std::size_t>(f));
        h = r / static_cast<double>(m);
        const CapacityLaw cap(ch);
        pc.resize(static_cast<std::size_t>(f) * m + 1);
        for (std::size_t d = 0; d < pc.size(); ++d)
            pc[d] = cap.pdf(static_cast<double>(d) * h);
    }

    std::size_t n_unknowns() const { return static_cast<std::size_t>(f) * (m + 1); }

    // Lattice position (in units of h) of node idx.
    std::size_t lattice(std::size_t idx) const {
        const std::size_t seg = idx / (m + 1), k = idx % (m + 1);
        return seg * m + k;
    }

    // Trapezoid weight (in units of h) of node idx when integrating over
    // [0, L*h] across the duplicated grid; L must be a lattice index >= 1.
    // Each boundary copy carries the half-weight of its own segment.
    double weight(std::size_t idx, std::size_t L) const {
        const std::size_t seg = idx / (m + 1), k = idx % (m + 1);
        const std::size_t pos = seg * m + k;
        if (pos > L) return 0.0;
        if (pos == L) return k == 0 ? 0.0 : 0.5; // a right copy starts past the range
        if (k == 0 || k == m) return 0.5;
        return 1.0;
    }

    Eigen::MatrixXd kernel() const {
        const std::size_t n = n_unknowns();
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t seg_i = i / (m + 1);
            // rv on segment j (0-based) is r*(f-1-j); shifted upper limit in
            // lattice units:
            const std::size_t shift = (static_cast<std::size_t>(f) - 1 - seg_i) * m;
            const std::size_t L = lattice(i) + shift; // a(u_i) / h
            if (L == 0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t pos_j = lattice(j);
                if (pos_j > L) continue;
                K(i, j) = weight(j, L) * h * pc[L - pos_j];
            }
        }
        return K;
    }
};

} // namespace fredholm_detail

struct EmsSolveOptions {
    std::size_t nodes_total = 2048;
};

// Solves the renewal integral equation with the given source term
// (expected-future-rates when source = rv, renewal count when source = 1).
inline GriddedFunction solve_ems_equation(const Channel& ch, double r, int f,
                                          bool source_is_rate,
                                          const EmsSolveOptions& opt = {}) {
    if (!(r > 0.0) || f < 1) throw std::invalid_argument("solve_ems_equation: bad (r, f)");
    const CapacityLaw cap(ch);
    if (cap.cdf(r * f) >= 1.0 - 1e-12)
        throw std::domain_error("solve_ems_equation: F_C(r*f) = 1, episodes never terminate");

    fredholm_detail::Discretization disc(ch, r, f, opt.nodes_total);
    const std::size_t n = disc.n_unknowns();
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - disc.kernel();
    Eigen::VectorXd b(n);
    GriddedFunction g(r, f, disc.m);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t seg = i / (disc.m + 1);
        b(static_cast<Eigen::Index>(i)) =
            source_is_rate ? r * static_cast<double>(f - 1 - static_cast<int>(seg)) : 1.0;
    }
    Eigen::VectorXd x = A.partialPivLu().solve(b);
    for (std::size_t i = 0; i < n; ++i) g[i] = x(static_cast<Eigen::Index>(i));
    return g;
}

inline GriddedFunction solve_W(const Channel& ch, double r, int f,
                               const EmsSolveOptions& opt = {}) {
    return solve_ems_equation(ch, r, f, true, opt);
}

inline GriddedFunction solve_M(const Channel& ch, double r, int f,
                               const EmsSolveOptions& opt = {}) {
    return solve_ems_equation(ch, r, f, false, opt);
}

// Residual of the integral equation at an off-node probe point, using
// adaptive quadrature against the interpolant. The integrand is split at the
// images of the interior breakpoints.
inline double ems_equation_residual(const Channel& ch, const GriddedFunction& g, double u,
                                    bool source_is_rate) {
    const CapacityLaw cap(ch);
    const double r = g.r();
    const int f = g.f();
    const double a = u + composite_rate_feedback(u, r, f);
    const double source = source_is_rate ? composite_rate_feedback(u, r, f) : 1.0;
    double integral = 0.0;
    double lo = 0.0;
    std::vector<double> cuts;
    for (int j = f - 1; j >= 1; --j) {
        const double c = a - static_cast<double>(j) * r;
        if (c > 0.0 && c < a) cuts.push_back(c);
    }
    cuts.push_back(a);
    for (double hi : cuts) {
        integral += integrate([&](double x) { return cap.pdf(x) * g(a - x); }, lo, hi, 1e-10);
        lo = hi;
    }
    return g(u) - source - integral;
}

// Row-sum norm of the discretized kernel; bounded by F_C(r*f) + grid error.
inline double ems_kernel_row_norm(const Channel& ch, double r, int f,
                                  const EmsSolveOptions& opt = {}) {
    fredholm_detail::Discretization disc(ch, r, f, opt.nodes_total);
    const Eigen::MatrixXd K = disc.kernel();
    return K.cwiseAbs().rowwise().sum().maxCoeff();
}

// Throughput / average-decoding-time of the EMS-(f+1) protocol from the
// solved integral equations: E[cum rate] = rf + W(rf), E[tau] = M(rf).
inline TradeoffPoint ems_metrics(const Channel& ch, double r, int f,
                                 const EmsSolveOptions& opt = {}) {
    const GriddedFunction W = solve_W(ch, r, f, opt);
    const GriddedFunction M = solve_M(ch, r, f, opt);
    TradeoffPoint pt;
    pt.protocol = "ems";
    pt.param = r;
    pt.f = f;
    const double rf = r * static_cast<double>(f);
    pt.avg_decoding_time = M(rf);
    pt.throughput = (rf + W(rf)) / M(rf);
    return pt;
}

// Finds r such that the EMS-(f+1) average decoding time hits target_T.
inline double ems_rate_for_tau(const Channel& ch, int f, double target_T,
                               const EmsSolveOptions& opt = {}) {
    if (!(target_T > 1.0)) throw std::domain_error("ems_rate_for_tau: T must exceed 1");
    auto tau_of = [&](double r) {
        return solve_M(ch, r, f, opt)(r * static_cast<double>(f));
    };
    double r_lo = 1e-4, r_hi = 0.25;
    while (tau_of(r_hi) < target_T) {
        r_hi *= 2.0;
        if (r_hi > 1e3) throw std::runtime_error("ems_rate_for_tau: bracket expansion failed");
    }
    return bisect([&](double r) { return tau_of(r) - target_T; }, r_lo, r_hi, 1e-4 * r_hi);
}

} // namespace brq
