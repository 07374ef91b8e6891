#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "warped/errors.hpp"

namespace warped {

/// Bisection on a bracketing interval [lo, hi] with f(lo)*f(hi) <= 0.
/// Refines to absolute tolerance `xtol` in x.
template <class F>
double bisect(F&& f, double lo, double hi, double flo, double fhi, double xtol) {
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) throw SolverError("bisect: interval does not bracket a root");
    for (int iter = 0; iter < 400 && hi - lo > xtol; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

template <class F>
double bisect(F&& f, double lo, double hi, double xtol) {
    return bisect(f, lo, hi, f(lo), f(hi), xtol);
}

/// Golden-section minimization of f on [a, b]; returns (argmin, min).
template <class F>
std::pair<double, double> golden_section_min(F&& f, double a, double b, double xtol) {
    const double invphi = 0.6180339887498948482;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > xtol) {
        if (f1 <= f2) {
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
    return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

/// Locates the transversal (sign-change) roots of a continuous function on a
/// uniform grid of n+1 samples over [lo, hi]. A sample with |f| <= zero_tol
/// that does not separate opposite signs is a non-transversal zero and raises
/// IncompleteSpectrumError, so tangential (double) roots are never merged into
/// a single crossing silently.
template <class F>
std::vector<double> scan_transversal_roots(F&& f, double lo, double hi, int n,
                                           double xtol, double zero_tol) {
    if (n < 1) throw ConfigError("scan_transversal_roots: need n >= 1");
    std::vector<double> roots;
    double xl = lo, fl = f(lo);
    for (int i = 1; i <= n; ++i) {
        const double xr = lo + (hi - lo) * i / n;
        const double fr = f(xr);
        if (std::abs(fr) <= zero_tol && i < n) {
            // Grid point lands on (or near) a zero: classify by the neighbours.
            const double xn = lo + (hi - lo) * (i + 1) / n;
            const double fn = f(xn);
            if (fl * fn < 0.0) {
                roots.push_back(bisect(f, xl, xn, fl, fn, xtol));
            } else {
                auto [xm, fm] = golden_section_min([&](double x) { return std::abs(f(x)); }, xl, xn, xtol);
                if (std::abs(fm) <= zero_tol)
                    throw IncompleteSpectrumError(
                        "non-transversal mismatch root near x=" + std::to_string(xm));
            }
            xl = xn;
            fl = fn;
            ++i;
            continue;
        }
        if (fl * fr < 0.0) roots.push_back(bisect(f, xl, xr, fl, fr, xtol));
        xl = xr;
        fl = fr;
    }
    return roots;
}

} // namespace warped
