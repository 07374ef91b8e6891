#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "warped/errors.hpp"

namespace warped {

/// Adaptive Dormand-Prince 5(4) integration of a two-component linear system,
/// with 5th-order dense output between accepted steps and automatic rescaling
/// of the state when it threatens to overflow (the systems here are linear, so
/// a common factor changes nothing but the reported magnitude).
struct OdeOptions {
    double rtol = 1e-10;
    double abstol = 1e-12;
    double dense_spacing = 0.0;     // > 0: emit interpolated samples at most this far apart
    double rescale_threshold = 1e150;
    double initial_step = 0.0;      // 0: automatic
};

using OdeState = std::array<double, 2>;

/// Sink contract:
///   void sample(double x, const OdeState& y);   // called in march order, x0 first
///   void rescale(double factor);                // all previously emitted samples
///                                               // must be multiplied by factor
namespace detail {

struct NullSink {
    void sample(double, const OdeState&) {}
    void rescale(double) {}
};

} // namespace detail

/// Integrates y' = rhs(x, y) from x0 to x1 (either direction).
/// Returns the final state, scaled by 2^(-*log2_scale) relative to the true
/// solution; *log2_scale accumulates the rescaling exponent.
template <class Rhs, class Sink>
OdeState integrate_ode(Rhs&& rhs, OdeState y, double x0, double x1,
                       const OdeOptions& opt, Sink&& sink, int* log2_scale) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    // Hairer's dense-output coefficients for DOPRI5.
    static constexpr double d1 = -12715105075.0 / 11282082432.0,
                            d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0,
                            d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0,
                            d7 = 69997945.0 / 29380423.0;

    if (log2_scale) *log2_scale = 0;
    if (x0 == x1) {
        sink.sample(x0, y);
        return y;
    }
    const double dir = (x1 > x0) ? 1.0 : -1.0;
    const double span = std::abs(x1 - x0);

    OdeState k1 = rhs(x0, y);
    double h;
    if (opt.initial_step > 0.0) {
        h = dir * std::min(opt.initial_step, span);
    } else {
        // Crude starting step from the first derivative scale; the controller
        // corrects it within a few steps.
        double d0 = std::max(std::abs(y[0]), std::abs(y[1]));
        double d1n = std::max(std::abs(k1[0]), std::abs(k1[1]));
        h = dir * std::min(span / 100.0, (d1n > 0.0) ? std::max(1e-10, 0.01 * (d0 + 1.0) / d1n)
                                                     : span / 100.0);
    }

    double x = x0;
    sink.sample(x, y);
    int total_scale = 0;
    bool last = false;

    for (long step = 0; step < 10'000'000; ++step) {
        if (std::abs(h) < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
            throw SolverError("ODE step size underflow at r=" + std::to_string(x));
        if ((x + h - x1) * dir >= 0.0) {
            h = x1 - x;
            last = true;
        }

        OdeState y2{y[0] + h * a21 * k1[0], y[1] + h * a21 * k1[1]};
        OdeState k2 = rhs(x + c2 * h, y2);
        OdeState y3{y[0] + h * (a31 * k1[0] + a32 * k2[0]),
                    y[1] + h * (a31 * k1[1] + a32 * k2[1])};
        OdeState k3 = rhs(x + c3 * h, y3);
        OdeState y4{y[0] + h * (a41 * k1[0] + a42 * k2[0] + a43 * k3[0]),
                    y[1] + h * (a41 * k1[1] + a42 * k2[1] + a43 * k3[1])};
        OdeState k4 = rhs(x + c4 * h, y4);
        OdeState y5{y[0] + h * (a51 * k1[0] + a52 * k2[0] + a53 * k3[0] + a54 * k4[0]),
                    y[1] + h * (a51 * k1[1] + a52 * k2[1] + a53 * k3[1] + a54 * k4[1])};
        OdeState k5 = rhs(x + c5 * h, y5);
        OdeState y6{y[0] + h * (a61 * k1[0] + a62 * k2[0] + a63 * k3[0] + a64 * k4[0] + a65 * k5[0]),
                    y[1] + h * (a61 * k1[1] + a62 * k2[1] + a63 * k3[1] + a64 * k4[1] + a65 * k5[1])};
        OdeState k6 = rhs(x + h, y6);
        OdeState ynew{y[0] + h * (b1 * k1[0] + b3 * k3[0] + b4 * k4[0] + b5 * k5[0] + b6 * k6[0]),
                      y[1] + h * (b1 * k1[1] + b3 * k3[1] + b4 * k4[1] + b5 * k5[1] + b6 * k6[1])};
        OdeState k7 = rhs(x + h, ynew);

        double err = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                   e6 * k6[i] + e7 * k7[i]);
            const double sc = opt.abstol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += (ei / sc) * (ei / sc);
        }
        err = std::sqrt(0.5 * err);

        if (err <= 1.0) {
            // Accepted: emit dense samples strictly inside the step, then the endpoint.
            if (opt.dense_spacing > 0.0) {
                const int m = static_cast<int>(std::abs(h) / opt.dense_spacing);
                if (m >= 1) {
                    // rcont coefficients (Hairer, DOPRI5 CONTD5).
                    OdeState rc1 = y;
                    OdeState rc2{ynew[0] - y[0], ynew[1] - y[1]};
                    OdeState rc3{h * k1[0] - rc2[0], h * k1[1] - rc2[1]};
                    OdeState rc4{rc2[0] - h * k7[0] - rc3[0], rc2[1] - h * k7[1] - rc3[1]};
                    OdeState rc5{
                        h * (d1 * k1[0] + d3 * k3[0] + d4 * k4[0] + d5 * k5[0] + d6 * k6[0] + d7 * k7[0]),
                        h * (d1 * k1[1] + d3 * k3[1] + d4 * k4[1] + d5 * k5[1] + d6 * k6[1] + d7 * k7[1])};
                    for (int j = 1; j <= m; ++j) {
                        const double th = static_cast<double>(j) / (m + 1);
                        const double th1 = 1.0 - th;
                        OdeState yi;
                        for (int i = 0; i < 2; ++i)
                            yi[i] = rc1[i] + th * (rc2[i] + th1 * (rc3[i] + th * (rc4[i] + th1 * rc5[i])));
                        sink.sample(x + th * h, yi);
                    }
                }
            }
            x += h;
            y = ynew;
            k1 = k7; // FSAL
            sink.sample(x, y);

            const double mag = std::max(std::abs(y[0]), std::abs(y[1]));
            if (mag > opt.rescale_threshold) {
                int ex = 0;
                std::frexp(mag, &ex);
                const double factor = std::ldexp(1.0, -ex);
                y[0] *= factor;
                y[1] *= factor;
                k1[0] *= factor;
                k1[1] *= factor;
                total_scale += ex;
                sink.rescale(factor);
            }
            if (last) break;
            const double fac = std::clamp(0.9 * std::pow(err > 1e-30 ? err : 1e-30, -0.2), 0.2, 5.0);
            h *= fac;
        } else {
            last = false;
            const double fac = std::max(0.2, 0.9 * std::pow(err, -0.2));
            h *= fac;
        }
    }
    if (log2_scale) *log2_scale = total_scale;
    return y;
}

template <class Rhs>
OdeState integrate_ode(Rhs&& rhs, OdeState y, double x0, double x1, const OdeOptions& opt,
                       int* log2_scale = nullptr) {
    detail::NullSink sink;
    return integrate_ode(rhs, y, x0, x1, opt, sink, log2_scale);
}

} // namespace warped
