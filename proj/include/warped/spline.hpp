#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "warped/errors.hpp"
#include "warped/numerics.hpp"

namespace warped {

namespace detail {
inline std::size_t spline_interval(const std::vector<double>& x, double xq) {
    // Index i with x[i] <= xq <= x[i+1], clamped to the valid range.
    auto it = std::upper_bound(x.begin(), x.end(), xq);
    std::size_t i = (it == x.begin()) ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    if (i + 1 >= x.size()) i = x.size() - 2;
    return i;
}
} // namespace detail

/// Piecewise-cubic Hermite interpolant from knot values and first derivatives.
/// C^1, local, fourth-order accurate for smooth data.
class HermiteSpline {
public:
    HermiteSpline() = default;
    HermiteSpline(std::vector<double> x, std::vector<double> y, std::vector<double> dy)
        : x_(std::move(x)), y_(std::move(y)), dy_(std::move(dy)) {
        if (x_.size() < 2 || x_.size() != y_.size() || x_.size() != dy_.size())
            throw ConfigError("HermiteSpline: need >= 2 knots with matching value/derivative arrays");
        for (std::size_t i = 0; i + 1 < x_.size(); ++i)
            if (!(x_[i] < x_[i + 1])) throw ConfigError("HermiteSpline: knots must be strictly increasing");
    }

    double value(double xq) const { return segment(xq).value(xq); }
    double deriv(double xq) const { return segment(xq).deriv(xq); }

    double front() const { return x_.front(); }
    double back() const { return x_.back(); }
    const std::vector<double>& knots() const { return x_; }

private:
    HermiteSegment segment(double xq) const {
        const std::size_t i = detail::spline_interval(x_, xq);
        return {x_[i], x_[i + 1], y_[i], y_[i + 1], dy_[i], dy_[i + 1]};
    }
    std::vector<double> x_, y_, dy_;
};

/// Natural cubic spline (zero second derivative at the ends).
class NaturalCubicSpline {
public:
    NaturalCubicSpline() = default;
    NaturalCubicSpline(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 3 || y_.size() != n)
            throw ConfigError("NaturalCubicSpline: need >= 3 knots with matching values");
        for (std::size_t i = 0; i + 1 < n; ++i)
            if (!(x_[i] < x_[i + 1])) throw ConfigError("NaturalCubicSpline: knots must be strictly increasing");

        // Tridiagonal solve for interior second derivatives.
        m_.assign(n, 0.0);
        std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
        diag[0] = 1.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hl = x_[i] - x_[i - 1];
            const double hr = x_[i + 1] - x_[i];
            diag[i] = 2.0 * (hl + hr);
            upper[i] = hr;
            rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl);
        }
        diag[n - 1] = 1.0;
        // Forward elimination (lower diagonal at row i is h_{i-1} for interior rows).
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double hl = x_[i] - x_[i - 1];
            const double w = hl / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
            if (i == 1) break;
        }
    }

    double value(double xq) const {
        const std::size_t i = detail::spline_interval(x_, xq);
        const double h = x_[i + 1] - x_[i];
        const double a = (x_[i + 1] - xq) / h;
        const double b = (xq - x_[i]) / h;
        return a * y_[i] + b * y_[i + 1] +
               ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
    }
    double deriv(double xq) const {
        const std::size_t i = detail::spline_interval(x_, xq);
        const double h = x_[i + 1] - x_[i];
        const double a = (x_[i + 1] - xq) / h;
        const double b = (xq - x_[i]) / h;
        return (y_[i + 1] - y_[i]) / h +
               ((3 * b * b - 1) * m_[i + 1] - (3 * a * a - 1) * m_[i]) * h / 6.0;
    }
    double second_deriv(double xq) const {
        const std::size_t i = detail::spline_interval(x_, xq);
        const double h = x_[i + 1] - x_[i];
        const double a = (x_[i + 1] - xq) / h;
        const double b = (xq - x_[i]) / h;
        return a * m_[i] + b * m_[i + 1];
    }

    double front() const { return x_.front(); }
    double back() const { return x_.back(); }

private:
    std::vector<double> x_, y_, m_;
};

} // namespace warped
