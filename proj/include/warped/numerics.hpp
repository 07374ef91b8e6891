#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "warped/errors.hpp"

namespace warped {

// 16-point Gauss-Legendre rule on [-1, 1] (positive half; the rule is symmetric).
inline constexpr std::array<double, 8> kGl16Nodes = {
    0.09501250983763744019, 0.28160355077925891323, 0.45801677765722738634,
    0.61787624440264374845, 0.75540440835500303390, 0.86563120238783174388,
    0.94457502307323257608, 0.98940093499164993260};
inline constexpr std::array<double, 8> kGl16Weights = {
    0.18945061045506849629, 0.18260341504492358887, 0.16915651939500253819,
    0.14959598881657673208, 0.12462897125553387205, 0.09515851168249278481,
    0.06225352393864789286, 0.02715245941175409485};

/// 16-point Gauss-Legendre quadrature of f over [a, b].
template <class F>
double gauss_legendre_16(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t k = 0; k < 8; ++k) {
        const double dx = half * kGl16Nodes[k];
        sum += kGl16Weights[k] * (f(mid - dx) + f(mid + dx));
    }
    return half * sum;
}

/// Composite 16-point Gauss-Legendre over [a, b] split into `panels` equal panels.
template <class F>
double integrate_gl16(F&& f, double a, double b, int panels) {
    if (panels < 1) throw ConfigError("integrate_gl16: panels must be >= 1");
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
        sum += gauss_legendre_16(f, a + p * h, a + (p + 1) * h);
    }
    return sum;
}

/// Composite 16-point Gauss-Legendre with one panel per interval of `grid`.
template <class F>
double integrate_gl16_on_grid(F&& f, std::span<const double> grid) {
    if (grid.size() < 2) throw ConfigError("integrate_gl16_on_grid: need at least 2 grid points");
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (grid[i + 1] > grid[i]) sum += gauss_legendre_16(f, grid[i], grid[i + 1]);
    }
    return sum;
}

/// Cubic Hermite segment on [x0, x1] from endpoint values and derivatives.
struct HermiteSegment {
    double x0, x1, f0, f1, d0, d1;

    double value(double x) const {
        const double h = x1 - x0;
        const double t = (x - x0) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 +
               (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * h * d1;
    }
    double deriv(double x) const {
        const double h = x1 - x0;
        const double t = (x - x0) / h;
        const double t2 = t * t;
        return ((6 * t2 - 6 * t) * f0 + (3 * t2 - 4 * t + 1) * h * d0 +
                (-6 * t2 + 6 * t) * f1 + (3 * t2 - 2 * t) * h * d1) / h;
    }
};

/// 17-significant-digit decimal form (round-trip safe for binary64).
/// Locale independent.
inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                             std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

inline bool nearly_equal(double a, double b, double rel, double abs = 0.0) {
    return std::abs(a - b) <= abs + rel * std::max(std::abs(a), std::abs(b));
}

} // namespace warped
