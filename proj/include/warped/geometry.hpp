#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "warped/errors.hpp"
#include "warped/fiber.hpp"
#include "warped/numerics.hpp"
#include "warped/root_find.hpp"
#include "warped/spline.hpp"

namespace warped {

namespace detail {

struct WarpImpl {
    virtual ~WarpImpl() = default;
    virtual double value(double r) const = 0;
    virtual double deriv(double r) const = 0;
    virtual double second_deriv(double r) const = 0;
    virtual bool has_second_deriv() const { return true; }
    virtual double domain_lo() const { return -std::numeric_limits<double>::infinity(); }
    virtual double domain_hi() const { return std::numeric_limits<double>::infinity(); }
};

struct ConstantWarp final : WarpImpl {
    double c;
    explicit ConstantWarp(double c_) : c(c_) {}
    double value(double) const override { return c; }
    double deriv(double) const override { return 0.0; }
    double second_deriv(double) const override { return 0.0; }
};

struct TabulatedWarp final : WarpImpl {
    NaturalCubicSpline a, ad;
    std::optional<NaturalCubicSpline> add;
    double lo, hi;

    TabulatedWarp(std::vector<double> r, std::vector<double> av, std::vector<double> adv,
                  std::optional<std::vector<double>> addv) {
        if (r.size() < 4) throw ConfigError("tabulated warp: need at least 4 samples");
        lo = r.front();
        hi = r.back();
        a = NaturalCubicSpline(r, std::move(av));
        ad = NaturalCubicSpline(r, std::move(adv));
        if (addv) add = NaturalCubicSpline(r, std::move(*addv));
    }
    double value(double r) const override { return a.value(r); }
    double deriv(double r) const override { return ad.value(r); }
    double second_deriv(double r) const override {
        if (!add) throw ConfigError("tabulated warp: no second-derivative samples supplied");
        return add->value(r);
    }
    bool has_second_deriv() const override { return add.has_value(); }
    double domain_lo() const override { return lo; }
    double domain_hi() const override { return hi; }
};

struct AdsWarp final : WarpImpl {
    double kP, K, E;
    double s_hat, s_max, r_max;
    double window; // width of the u-substitution window in s

    HermiteSpline s_of_r;       // arc length -> area radius
    HermiteSpline r_of_u;       // window:   u = sqrt(s - s_hat) -> r
    HermiteSpline r_of_s_outer; // past the window: s -> r

    // F(s) - F(s_hat) in cancellation-free form; s_hat is the root by fiat.
    double radicand(double s) const {
        return (s - s_hat) * (2.0 * K / (s * s_hat) + E * (s + s_hat));
    }

    double value(double r) const override { return s_of_r.value(clamp_r(r)); }
    double deriv(double r) const override {
        return std::sqrt(std::max(0.0, radicand(s_of_r.value(clamp_r(r)))));
    }
    double second_deriv(double r) const override {
        const double s = s_of_r.value(clamp_r(r));
        return K / (s * s) + E * s;
    }
    double domain_lo() const override { return 0.0; }
    double domain_hi() const override { return r_max; }

    double clamp_r(double r) const {
        const double tol = 1e-9 * std::max(1.0, r_max);
        if (r < -tol || r > r_max + tol)
            throw ConfigError("ads warp: evaluation outside [0, r_max]");
        return std::clamp(r, 0.0, r_max);
    }

    double radial_of_s(double s) const {
        const double tol = 1e-9 * std::max(1.0, s_max);
        if (s < s_hat - tol || s > s_max + tol)
            throw ConfigError("ads warp: area radius outside [s_hat, s_max]");
        s = std::clamp(s, s_hat, s_max);
        if (s <= s_hat + window) return r_of_u.value(std::sqrt(s - s_hat));
        return r_of_s_outer.value(s);
    }
};

} // namespace detail

/// Warping function alpha with evaluation contract alpha(r), alpha'(r),
/// alpha''(r) on its domain. Immutable; copies are cheap.
class WarpFunction {
public:
    static WarpFunction constant(double c) {
        if (!(c > 0.0)) throw ConfigError("constant warp: value must be positive");
        return WarpFunction(std::make_shared<detail::ConstantWarp>(c));
    }

    /// Caller-supplied samples of (r, alpha, alpha', alpha''); each column is
    /// interpolated independently by a cubic spline. The second-derivative
    /// column may be omitted, in which case curvature evaluation is refused.
    static WarpFunction tabulated(std::vector<double> r, std::vector<double> a,
                                  std::vector<double> ad,
                                  std::optional<std::vector<double>> add = std::nullopt) {
        auto impl = std::make_shared<detail::TabulatedWarp>(std::move(r), std::move(a),
                                                            std::move(ad), std::move(add));
        // alpha > 0 over the whole interval, not just at the samples.
        for (int i = 0; i <= 512; ++i) {
            const double x = impl->lo + (impl->hi - impl->lo) * i / 512.0;
            if (!(impl->value(x) > 0.0))
                throw ConfigError("tabulated warp: alpha must stay positive on the interval");
        }
        return WarpFunction(std::move(impl));
    }

    /// Anti-de Sitter Schwarzschild warp in the arc-length coordinate
    /// r(s) = int_{s_hat}^{s} dt / sqrt(kP - 2K/t + E t^2), where s_hat is the
    /// largest positive root of the radicand. The integrable inverse-sqrt
    /// singularity at s_hat is removed by the substitution s = s_hat + u^2 on
    /// an initial window; composite Gauss-Legendre handles the rest.
    static WarpFunction ads_schwarzschild(double kP, double K, double E, double s_max);

    double value(double r) const { return impl_->value(r); }
    double deriv(double r) const { return impl_->deriv(r); }
    double second_deriv(double r) const { return impl_->second_deriv(r); }
    bool has_second_deriv() const { return impl_->has_second_deriv(); }
    double domain_lo() const { return impl_->domain_lo(); }
    double domain_hi() const { return impl_->domain_hi(); }

    bool is_constant() const { return dynamic_cast<const detail::ConstantWarp*>(impl_.get()) != nullptr; }
    const detail::AdsWarp* ads_data() const {
        return dynamic_cast<const detail::AdsWarp*>(impl_.get());
    }

private:
    explicit WarpFunction(std::shared_ptr<const detail::WarpImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const detail::WarpImpl> impl_;
};

/// Warped product ((r1, r2) x P, dr^2 + alpha(r)^2 g_P). Immutable after
/// construction; operations are pure and safe for concurrent reads.
class WarpedGeometry {
public:
    WarpedGeometry(int n, double r1, double r2, WarpFunction alpha, FiberSpec fiber)
        : n_(n), r1_(r1), r2_(r2), alpha_(std::move(alpha)), fiber_(std::move(fiber)) {
        if (n_ < 3) throw ConfigError("WarpedGeometry: dimension n must be >= 3");
        if (!(r1_ < r2_) || !std::isfinite(r1_) || !std::isfinite(r2_))
            throw ConfigError("WarpedGeometry: need finite r1 < r2");
        const double tol = 1e-9 * std::max(1.0, std::abs(r2_ - r1_));
        if (r1_ < alpha_.domain_lo() - tol || r2_ > alpha_.domain_hi() + tol)
            throw ConfigError("WarpedGeometry: [r1, r2] exceeds the warp function domain");
        for (int i = 0; i <= 512; ++i) {
            const double r = r1_ + (r2_ - r1_) * i / 512.0;
            if (!(alpha_.value(r) > 0.0))
                throw ConfigError("WarpedGeometry: alpha must be positive on [r1, r2]");
        }
        if (fiber_.dim() != n_ - 1)
            throw ConfigError("WarpedGeometry: fiber dimension must be n - 1");
    }

    int n() const { return n_; }
    double r1() const { return r1_; }
    double r2() const { return r2_; }
    const WarpFunction& alpha() const { return alpha_; }
    const FiberSpec& fiber() const { return fiber_; }

    /// sup of alpha over [a, b], by dense sampling (exact for the constant and
    /// monotone warps used here).
    double alpha_max(double a, double b) const {
        double m = 0.0;
        for (int i = 0; i <= 2048; ++i)
            m = std::max(m, alpha_.value(a + (b - a) * i / 2048.0));
        return m;
    }

    void require_inside(double r, const char* what) const {
        const double tol = 1e-9 * std::max(1.0, r2_ - r1_);
        if (r < r1_ - tol || r > r2_ + tol)
            throw ConfigError(std::string(what) + ": coordinate outside [r1, r2]");
    }

private:
    int n_;
    double r1_, r2_;
    WarpFunction alpha_;
    FiberSpec fiber_;
};

/// Scalar curvature of the warped metric at radius r:
/// R(g) = (n-1)/alpha^2 * (R_P - ((n-2) alpha'^2 + 2 alpha'' alpha)).
inline double scalar_curvature(const WarpedGeometry& geom, double r) {
    geom.require_inside(r, "scalar_curvature");
    const double a = geom.alpha().value(r);
    const double ad = geom.alpha().deriv(r);
    const double add = geom.alpha().second_deriv(r);
    const int n = geom.n();
    return (n - 1) / (a * a) * (geom.fiber().curvature() - ((n - 2) * ad * ad + 2.0 * add * a));
}

/// Constant mean curvature of the slice {gamma} x P with respect to the
/// inward normal: H(gamma) = -(n-1) alpha'(gamma) / alpha(gamma).
inline double mean_curvature(const WarpedGeometry& geom, double gamma) {
    const double tol = 1e-9 * std::max(1.0, geom.r2() - geom.r1());
    if (gamma <= geom.r1() || gamma > geom.r2() + tol)
        throw ConfigError("mean_curvature: gamma must lie in (r1, r2]");
    const double a = geom.alpha().value(gamma);
    return -(geom.n() - 1) * geom.alpha().deriv(gamma) / a;
}

struct ConstScalarReport {
    bool constant;
    double value;         // mean over the sample grid
    double max_deviation; // max |R - mean|
};

/// Samples the scalar curvature on a dense grid and reports whether it is
/// constant to within tol.
inline ConstScalarReport verify_constant_scalar(const WarpedGeometry& geom, double tol,
                                                int grid = 801) {
    if (!(tol > 0.0)) throw ConfigError("verify_constant_scalar: tol must be positive");
    if (grid < 2) throw ConfigError("verify_constant_scalar: grid too small");
    std::vector<double> samples(grid);
    double mean = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double r = geom.r1() + (geom.r2() - geom.r1()) * i / (grid - 1);
        samples[i] = scalar_curvature(geom, r);
        mean += samples[i];
    }
    mean /= grid;
    double dev = 0.0;
    for (double v : samples) dev = std::max(dev, std::abs(v - mean));
    return {dev <= tol, mean, dev};
}

inline WarpFunction WarpFunction::ads_schwarzschild(double kP, double K, double E, double s_max) {
    if (!(K > 0.0)) throw ConfigError("ads_schwarzschild: mass K must be positive");
    if (E < 0.0) throw ConfigError("ads_schwarzschild: cosmological constant E must be >= 0");

    auto F = [&](double s) { return kP - 2.0 * K / s + E * s * s; };
    auto Fp = [&](double s) { return 2.0 * K / (s * s) + 2.0 * E * s; };

    // F is strictly increasing on s > 0 with F(0+) = -inf, so the positive
    // root, when it exists, is unique and simple.
    double hi = 1.0;
    int guard = 0;
    while (F(hi) <= 0.0) {
        hi *= 2.0;
        if (++guard > 600) throw ConfigError("ads_schwarzschild: no positive root of the radicand");
    }
    double lo = hi * 0.5;
    while (F(lo) > 0.0) {
        lo *= 0.5;
        if (lo < 1e-300) throw ConfigError("ads_schwarzschild: no positive root of the radicand");
    }
    double s_hat = bisect(F, lo, hi, 1e-14 * std::max(1.0, hi));
    for (int it = 0; it < 4; ++it) s_hat -= F(s_hat) / Fp(s_hat);
    if (!(Fp(s_hat) > 1e-12))
        throw ConfigError("ads_schwarzschild: radicand root is not simple");
    if (!(s_max > s_hat))
        throw ConfigError("ads_schwarzschild: s_max must exceed the horizon radius s_hat");

    auto impl = std::make_shared<detail::AdsWarp>();
    impl->kP = kP;
    impl->K = K;
    impl->E = E;
    impl->s_hat = s_hat;
    impl->s_max = s_max;
    impl->window = std::min(s_max - s_hat, std::max(0.25 * s_hat, 0.25 * (s_max - s_hat)));

    const auto& w = *impl;
    // In-window integrand after s = s_hat + u^2: the sqrt singularity cancels.
    auto gu = [&w](double u) {
        const double s = w.s_hat + u * u;
        return 2.0 / std::sqrt(2.0 * w.K / (s * w.s_hat) + w.E * (s + w.s_hat));
    };
    auto gs = [&w](double s) { return 1.0 / std::sqrt(w.radicand(s)); };

    std::vector<double> r_samp, s_samp, dsdr_samp;
    std::vector<double> u_win, r_win, drdu_win;
    const int n_win = 1200;
    const double u_max = std::sqrt(impl->window);
    double r = 0.0, u_prev = 0.0;
    r_samp.push_back(0.0);
    s_samp.push_back(s_hat);
    dsdr_samp.push_back(0.0);
    u_win.push_back(0.0);
    r_win.push_back(0.0);
    drdu_win.push_back(gu(0.0));
    for (int i = 1; i <= n_win; ++i) {
        const double u = u_max * i / n_win;
        r += gauss_legendre_16(gu, u_prev, u);
        const double s = s_hat + u * u;
        r_samp.push_back(r);
        s_samp.push_back(s);
        dsdr_samp.push_back(std::sqrt(std::max(0.0, impl->radicand(s))));
        u_win.push_back(u);
        r_win.push_back(r);
        drdu_win.push_back(gu(u));
        u_prev = u;
    }

    std::vector<double> s_out, r_out, drds_out;
    const double s_win_end = s_hat + impl->window;
    if (s_max > s_win_end * (1.0 + 1e-14)) {
        const int n_out = 2400;
        double s_prev = s_win_end;
        s_out.push_back(s_prev);
        r_out.push_back(r);
        drds_out.push_back(gs(s_prev));
        for (int i = 1; i <= n_out; ++i) {
            const double s = s_win_end + (s_max - s_win_end) * i / n_out;
            r += gauss_legendre_16(gs, s_prev, s);
            r_samp.push_back(r);
            s_samp.push_back(s);
            dsdr_samp.push_back(std::sqrt(std::max(0.0, impl->radicand(s))));
            s_out.push_back(s);
            r_out.push_back(r);
            drds_out.push_back(gs(s));
            s_prev = s;
        }
    }
    impl->r_max = r;

    impl->s_of_r = HermiteSpline(r_samp, s_samp, dsdr_samp);
    impl->r_of_u = HermiteSpline(u_win, r_win, drdu_win);
    // When the window covers the whole range, radial_of_s never consults the
    // outer spline, so it may stay empty.
    if (!s_out.empty()) impl->r_of_s_outer = HermiteSpline(s_out, r_out, drds_out);
    return WarpFunction(std::move(impl));
}

/// Spatial Anti-de Sitter Schwarzschild slice in arc-length gauge: n = 3,
/// r1 = 0 at the horizon, round two-sphere fiber with curvature constant kP.
inline WarpedGeometry ads_schwarzschild(double kP, double K, double E, double s_max) {
    if (!(kP > 0.0))
        throw ConfigError("ads_schwarzschild: round-sphere fiber requires kP > 0");
    WarpFunction alpha = WarpFunction::ads_schwarzschild(kP, K, E, s_max);
    const auto* data = alpha.ads_data();
    // Scale chosen so the fiber curvature constant equals kP: unit S^2 has
    // scalar curvature 2, so g_P = (2/kP) g_unit.
    FiberSpec fiber = FiberSpec::round_sphere(2, 2.0 / kP);
    return WarpedGeometry(3, 0.0, data->r_max, std::move(alpha), std::move(fiber));
}

} // namespace warped
