#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace brq {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace quad_detail {

// Gauss-Kronrod 7-15 pair on [-1, 1]. Abscissae are symmetric; only the
// nonnegative half is tabulated.
constexpr double kKronrodX[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kKronrodW[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kGaussW[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F>
void gk15(const F& f, double a, double b, double& value, double& error) {
    const double c = 0.5 * (a + b);
    const double m = 0.5 * (b - a);
    double g7 = 0.0, k15 = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = m * kKronrodX[i];
        double y = f(c + dx);
        if (i < 7) y += f(c - dx);
        k15 += kKronrodW[i] * y;
        if (i % 2 == 1) g7 += kGaussW[i / 2] * y;
    }
    value = k15 * m;
    error = std::abs((k15 - g7) * m);
}

template <class F>
double adapt(const F& f, double a, double b, double tol, int depth, double* err_out) {
    double v, e;
    gk15(f, a, b, v, e);
    if (e <= tol || depth >= 48) {
        if (depth >= 48 && e > tol * 1e3)
            throw QuadratureError("adaptive quadrature failed to converge");
        if (err_out) *err_out += e;
        return v;
    }
    const double c = 0.5 * (a + b);
    return adapt(f, a, c, 0.5 * tol, depth + 1, err_out) +
           adapt(f, c, b, 0.5 * tol, depth + 1, err_out);
}

} // namespace quad_detail

// Adaptive Gauss-Kronrod integration of f over [a, b].
template <class F>
double integrate(const F& f, double a, double b, double rel_tol = 1e-9) {
    if (!(b > a)) return 0.0;
    double coarse, err;
    quad_detail::gk15(f, a, b, coarse, err);
    const double tol = std::max(std::abs(coarse) * rel_tol, 1e-300);
    if (err <= tol) return coarse;
    double accum_err = 0.0;
    return quad_detail::adapt(f, a, b, tol, 0, &accum_err);
}

// Gauss-Legendre nodes/weights on [-1, 1], computed by Newton iteration on
// the Legendre polynomial roots.
struct GaussLegendre {
    std::vector<double> x;
    std::vector<double> w;

    explicit GaussLegendre(int n) : x(n), w(n) {
        for (int i = 0; i < n; ++i) {
            double xi = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = xi;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2 * k - 1) * xi * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
                const double dx = p1 / dp;
                xi -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            x[i] = xi;
            w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
        }
    }

    // Integrates f over [a, b] with the fixed rule.
    template <class F>
    double apply(const F& f, double a, double b) const {
        const double c = 0.5 * (a + b), m = 0.5 * (b - a);
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(c + m * x[i]);
        return s * m;
    }
};

} // namespace brq
