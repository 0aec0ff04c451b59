#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "brq/analysis.hpp"
#include "brq/channel.hpp"
#include "brq/protocols.hpp"
#include "brq/quadrature.hpp"
#include "brq/rng.hpp"
#include "brq/search.hpp"

namespace brq {

struct PowerDpOptions {
    std::size_t grid_nodes = 1024;
    int gl_order = 24;         // quadrature order for the stage integral
    int rho_scan = 64;         // coarse log-grid size for the power search
    double rho_lo = 1e-6;
    double rho_hi = 64.0;
    double rho_rel_tol = 1e-6; // golden-section refinement of rho
    double sweep_tol = 1e-7;   // sup-norm stop for value iteration
    std::size_t max_sweeps = 10000;
    bool force_unit_power = false; // ablation: rho == 1 everywhere
};

// Value function J_lambda on an unresolved-information grid over [0, R],
// with the per-node minimizing power. J = 0 at and below u = 0.
struct ValueFunctionGrid {
    double lambda = 0.0;
    double rate = 0.0; // R
    std::vector<double> u;
    std::vector<double> value;
    std::vector<double> rho_star;

    double operator()(double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= u.back()) return value.back();
        const auto it = std::upper_bound(u.begin(), u.end(), x);
        const std::size_t j = static_cast<std::size_t>(it - u.begin());
        const double frac = (x - u[j - 1]) / (u[j] - u[j - 1]);
        return value[j - 1] * (1.0 - frac) + value[j] * frac;
    }

    double rho_at(double x) const {
        if (x <= u.front()) return rho_star.empty() ? 1.0 : rho_star.front();
        if (x >= u.back()) return rho_star.back();
        const auto it = std::upper_bound(u.begin(), u.end(), x);
        const std::size_t j = static_cast<std::size_t>(it - u.begin());
        const double frac = (x - u[j - 1]) / (u[j] - u[j - 1]);
        return rho_star[j - 1] * (1.0 - frac) + rho_star[j] * frac;
    }
};

namespace powerdp_detail {

// Grid on [0, R] clustered geometrically toward 0, where J bends.
inline std::vector<double> make_grid(double R, std::size_t n) {
    std::vector<double> u(n);
    const double alpha = 4.0;
    const double denom = std::expm1(alpha);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n - 1);
        u[i] = R * std::expm1(alpha * s) / denom;
    }
    u.front() = 0.0;
    u.back() = R;
    return u;
}

} // namespace powerdp_detail

class PowerDp {
public:
    PowerDp(const Channel& ch, double lambda, double R, PowerDpOptions opts = {})
        : ch_(ch), opts_(opts), gl_(opts.gl_order) {
        if (!(lambda > 0.0) || !(R > 0.0))
            throw std::invalid_argument("PowerDp: need lambda > 0 and R > 0");
        grid_.lambda = lambda;
        grid_.rate = R;
        grid_.u = powerdp_detail::make_grid(R, opts.grid_nodes);
        grid_.value.assign(grid_.u.size(), 0.0);
        grid_.rho_star.assign(grid_.u.size(), 1.0);
        rho_candidates_.resize(static_cast<std::size_t>(opts.rho_scan));
        const double lr = std::log(opts.rho_lo), hr = std::log(opts.rho_hi);
        for (int i = 0; i < opts.rho_scan; ++i)
            rho_candidates_[static_cast<std::size_t>(i)] =
                std::exp(lr + (hr - lr) * static_cast<double>(i) /
                                   static_cast<double>(opts.rho_scan - 1));
    }

    const ValueFunctionGrid& grid() const { return grid_; }
    ValueFunctionGrid& grid() { return grid_; }

    // Re-targets the dual multiplier while keeping the current values as a
    // warm start; the fixed point is unique, so convergence is unaffected.
    void set_lambda(double lambda) {
        if (!(lambda > 0.0)) throw std::invalid_argument("set_lambda: lambda > 0");
        grid_.lambda = lambda;
    }

    // One Gauss-Seidel sweep of the Bellman operator in ascending u; returns
    // the sup-norm change.
    double bellman_backup() {
        double sup = 0.0;
        const std::size_t n = grid_.u.size();
        for (std::size_t i = 1; i < n; ++i) {
            const double u = grid_.u[i];
            const double h_max = gain_from_capacity(u); // C(h*rho) = u at rho*h = h_max

            // The gain integral int_0^{h_max/rho} P_H(h) J(u - C(h rho)) dh is
            // evaluated through the substitution x = C(h rho) composed with
            // the probability transform p = F_H(h): the integrand becomes
            // J(u - C(F_H^{-1}(p) rho)) over p in [0, F_H(h_max/rho)], which
            // keeps a single Gauss rule accurate for every power level (for
            // small rho the capacity-domain kernel concentrates in a boundary
            // layer near x = 0 that a fixed rule would miss).
            auto q_of_rho = [&](double rho) {
                const double p_max = ch_.cdf(h_max / rho);
                double s = 0.0;
                const double c = 0.5 * p_max, m = 0.5 * p_max;
                for (std::size_t k = 0; k < gl_.x.size(); ++k) {
                    const double p = c + m * gl_.x[k];
                    s += gl_.w[k] * grid_(u - capacity(ch_.quantile(p) * rho));
                }
                return 1.0 + grid_.lambda * (rho - 1.0) + s * m;
            };

            double best_rho = 1.0, best_q;
            if (opts_.force_unit_power) {
                best_q = q_of_rho(1.0);
            } else {
                std::size_t best_idx = 0;
                best_q = std::numeric_limits<double>::infinity();
                for (std::size_t r = 0; r < rho_candidates_.size(); ++r) {
                    const double q = q_of_rho(rho_candidates_[r]);
                    if (q < best_q) { // strict: ties toward smaller rho
                        best_q = q;
                        best_idx = r;
                    }
                }
                const double lo = rho_candidates_[best_idx > 0 ? best_idx - 1 : 0];
                const double hi =
                    rho_candidates_[std::min(best_idx + 1, rho_candidates_.size() - 1)];
                best_rho = golden_section_min(
                    [&](double lg) { return q_of_rho(std::exp(lg)); }, std::log(lo),
                    std::log(hi), opts_.rho_rel_tol);
                best_rho = std::exp(best_rho);
                best_q = std::min(best_q, q_of_rho(best_rho));
                if (q_of_rho(rho_candidates_[best_idx]) <= best_q) {
                    best_rho = rho_candidates_[best_idx];
                    best_q = q_of_rho(best_rho);
                }
            }
            sup = std::max(sup, std::abs(best_q - grid_.value[i]));
            grid_.value[i] = best_q;
            grid_.rho_star[i] = best_rho;
        }
        if (!grid_.rho_star.empty() && grid_.u.size() > 1)
            grid_.rho_star[0] = grid_.rho_star[1];
        return sup;
    }

    // Iterates to the fixed point; throws if the sweep budget is exhausted.
    void solve() {
        for (std::size_t it = 0; it < opts_.max_sweeps; ++it) {
            if (bellman_backup() < opts_.sweep_tol) return;
        }
        throw std::runtime_error("PowerDp: value iteration did not converge");
    }

private:
    const Channel& ch_;
    PowerDpOptions opts_;
    GaussLegendre gl_;
    ValueFunctionGrid grid_;
    std::vector<double> rho_candidates_;
};

inline ValueFunctionGrid value_iterate(const Channel& ch, double lambda, double R,
                                       PowerDpOptions opts = {}) {
    PowerDp dp(ch, lambda, R, opts);
    dp.solve();
    return dp.grid();
}

struct DualSolution {
    double lambda_star = 0.0;
    double expected_tau = 0.0; // J* = max_lambda J_lambda(R)
    ValueFunctionGrid grid;
};

// Maximizes the concave dual J_lambda(R) over lambda, expanding the upper
// bracket by doubling until the dual turns down. A single PowerDp instance is
// reused across probes so each solve warm-starts from the previous fixed
// point (the fixed point is unique, so the start only affects speed).
inline DualSolution dual_solve(const Channel& ch, double R, PowerDpOptions opts = {},
                               double lambda_tol = 1e-3) {
    PowerDp dp(ch, 1.0, R, opts);
    auto dual = [&](double lambda) {
        dp.set_lambda(lambda);
        dp.solve();
        return dp.grid().value.back();
    };
    // The dual is only proper on lambda < 1: beyond it the stage cost
    // 1 + lambda(rho - 1) turns negative at small rho and the minimization
    // is unbounded (never decode, spend no power), so the bracket is capped.
    constexpr double kLambdaCap = 0.999;
    double lo = 1e-6, hi = 0.25;
    double d_hi = dual(hi);
    double d_prev = dual(hi * 0.5);
    int expansions = 0;
    while (d_hi >= d_prev && hi < kLambdaCap) {
        d_prev = d_hi;
        hi = std::min(hi * 2.0, kLambdaCap);
        d_hi = dual(hi);
        if (++expansions > 16)
            throw std::runtime_error("dual_solve: bracket expansion beyond 2^16");
    }
    const double lambda_star =
        golden_section_max(dual, lo, hi, lambda_tol * std::max(1.0, hi));
    DualSolution sol;
    sol.lambda_star = lambda_star;
    dual(lambda_star);
    sol.grid = dp.grid();
    sol.expected_tau = sol.grid.value.back();
    return sol;
}

// Monte Carlo run of the extracted power policy: returns empirical mean
// decoding time and mean power per slot E[sum rho]/E[tau].
struct PowerPolicyStats {
    double mean_tau = 0.0;
    double mean_tau_se = 0.0;
    double power_per_slot = 0.0;
};

inline PowerPolicyStats simulate_power_policy(const Channel& ch, const ValueFunctionGrid& g,
                                              std::size_t n_episodes,
                                              std::uint64_t master_seed) {
    double sum_tau = 0.0, sum_tau2 = 0.0, sum_rho = 0.0;
    for (std::size_t e = 0; e < n_episodes; ++e) {
        CounterRng rng = CounterRng::for_episode(master_seed, e);
        double info = g.rate;
        std::size_t tau = 0;
        while (info > 0.0) {
            if (++tau > kEpisodeSlotCap)
                throw RunawayEpisode("power policy episode exceeded the slot cap");
            const double rho = g.rho_at(info);
            sum_rho += rho;
            info -= capacity(ch.sample(rng) * rho);
        }
        sum_tau += static_cast<double>(tau);
        sum_tau2 += static_cast<double>(tau) * static_cast<double>(tau);
    }
    PowerPolicyStats st;
    const double n = static_cast<double>(n_episodes);
    st.mean_tau = sum_tau / n;
    st.mean_tau_se = std::sqrt(std::max(0.0, sum_tau2 / n - st.mean_tau * st.mean_tau) / n);
    st.power_per_slot = sum_rho / sum_tau;
    return st;
}

// Throughput of power-adapted HARQ-INR under E[tau] <= T.
inline TradeoffPoint eta_harq_inr_p(const Channel& ch, double T, PowerDpOptions opts = {}) {
    if (!(T >= 1.0)) throw std::domain_error("eta_harq_inr_p: T must be >= 1");
    TradeoffPoint pt;
    pt.protocol = "harq-inr-p";
    if (T == 1.0) {
        pt.avg_decoding_time = 1.0;
        return pt;
    }
    auto tau_of = [&](double R) { return dual_solve(ch, R, opts).expected_tau; };
    double r_hi = capacity(ch.quantile(1.0 - 1.0 / T)) * T * 2.0;
    while (tau_of(r_hi) < T) r_hi *= 2.0;
    const double r_max =
        bisect([&](double R) { return tau_of(R) - T; }, 1e-6, r_hi, 1e-3 * r_hi);
    const double r_opt = golden_section_max(
        [&](double R) { return R / tau_of(R); }, 0.5 * r_max, r_max, 3e-3 * r_max);
    DualSolution sol = dual_solve(ch, r_opt, opts);
    pt.param = r_opt;
    pt.avg_decoding_time = sol.expected_tau;
    pt.throughput = r_opt / sol.expected_tau;
    return pt;
}

// ---------------------------------------------------------------------------
// Full-CSIT zero-outage dynamic program. Its fixed point is linear, A - u,
// which provides an analytic anchor for the value-iteration machinery.

// Mean capacity restricted below r: int_0^r x P_C(x) dx.
inline double mean_capacity_below(const Channel& ch, double r) {
    const CapacityLaw cap(ch);
    return integrate([&](double x) { return x * cap.pdf(x); }, 0.0, r, 1e-10);
}

struct ZeroOutageDual {
    double A = 0.0;   // max_r { r + (Cbar(r) - F_C(r) lambda) / (1 - F_C(r)) }
    double r_A = 0.0; // maximizer
};

inline ZeroOutageDual zero_outage_dual(const Channel& ch, double lambda) {
    const CapacityLaw cap(ch);
    auto objective = [&](double r) {
        const double fc = cap.cdf(r);
        return r + (mean_capacity_below(ch, r) - fc * lambda) / (1.0 - fc);
    };
    double hi = cap.quantile(1.0 - 1e-4);
    const double r_A = golden_section_max(objective, 1e-9, hi, 1e-9 * hi);
    return {objective(r_A), r_A};
}

// Dual multiplier whose inner maximizer is r_A = F_C^{-1}(1 - 1/T);
// stationarity of the objective above gives the closed form.
inline double zero_outage_lambda_for_T(const Channel& ch, double T) {
    const CapacityLaw cap(ch);
    const double r_A = capacity(brq_threshold(ch, T));
    const double fc = cap.cdf(r_A);
    const double pc = cap.pdf(r_A);
    return r_A * (1.0 - fc) + mean_capacity_below(ch, r_A) + (1.0 - fc) * (1.0 - fc) / pc;
}

// Value iteration for V(u) = max_{rbar >= u} { rbar - u +
// int_0^rbar P_C(x) V(rbar - x) dx - lambda F_C(rbar) } on [0, r_cap].
// The bracketed term is independent of u, so each sweep evaluates it once
// per candidate rbar and takes suffix maxima.
inline std::vector<double> full_csit_value_iteration(const Channel& ch, double lambda,
                                                     double r_cap, std::size_t n_nodes,
                                                     double tol = 1e-10) {
    const CapacityLaw cap(ch);
    const double h = r_cap / static_cast<double>(n_nodes - 1);
    std::vector<double> pc(n_nodes), fc(n_nodes), v(n_nodes, 0.0);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        const double x = static_cast<double>(i) * h;
        pc[i] = cap.pdf(x);
        fc[i] = cap.cdf(x);
    }
    std::vector<double> psi(n_nodes);
    for (std::size_t it = 0; it < 100000; ++it) {
        for (std::size_t k = 0; k < n_nodes; ++k) {
            double integral = 0.0;
            if (k >= 1) {
                integral = 0.5 * (pc[0] * v[k] + pc[k] * v[0]);
                for (std::size_t j = 1; j < k; ++j) integral += pc[j] * v[k - j];
                integral *= h;
            }
            psi[k] = static_cast<double>(k) * h + integral - lambda * fc[k];
        }
        for (std::size_t k = n_nodes - 1; k-- > 0;) psi[k] = std::max(psi[k], psi[k + 1]);
        double sup = 0.0;
        for (std::size_t i = 0; i < n_nodes; ++i) {
            const double nv = psi[i] - static_cast<double>(i) * h;
            sup = std::max(sup, std::abs(nv - v[i]));
            v[i] = nv;
        }
        if (sup < tol) return v;
    }
    throw std::runtime_error("full_csit_value_iteration: did not converge");
}

} // namespace brq
