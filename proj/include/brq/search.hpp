#pragma once

#include <cmath>
#include <stdexcept>

namespace brq {

// Golden-section maximization of a unimodal function on [a, b].
// Ties are broken toward the left end of the final bracket.
template <class F>
double golden_section_max(const F& f, double a, double b, double tol) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 >= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

template <class F>
double golden_section_min(const F& f, double a, double b, double tol) {
    return golden_section_max([&](double x) { return -f(x); }, a, b, tol);
}

// Bisection for g(x) = 0 on [a, b]; requires a sign change.
template <class F>
double bisect(const F& g, double a, double b, double tol) {
    double ga = g(a), gb = g(b);
    if (ga == 0.0) return a;
    if (gb == 0.0) return b;
    if ((ga > 0.0) == (gb > 0.0))
        throw std::invalid_argument("bisect: no sign change on bracket");
    while (b - a > tol) {
        const double c = 0.5 * (a + b);
        const double gc = g(c);
        if (gc == 0.0) return c;
        if ((gc > 0.0) == (ga > 0.0)) {
            a = c;
            ga = gc;
        } else {
            b = c;
        }
    }
    return 0.5 * (a + b);
}

} // namespace brq
