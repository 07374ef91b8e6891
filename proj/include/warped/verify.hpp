#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "warped/errors.hpp"
#include "warped/geometry.hpp"
#include "warped/numerics.hpp"
#include "warped/rigidity.hpp"
#include "warped/root_find.hpp"
#include "warped/slp.hpp"
#include "warped/spectrum.hpp"

namespace warped::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    double residual = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct VerifyOptions {
    SolverOptions solver;
    std::uint64_t seed = 0x5eed2024;
};

/// Closed-form shooting mismatch for constant-alpha problems:
/// f'' = (beta/c^2 - G - t) f with f(0) = 1, f'(0) = -(J1 + t); returns
/// f'(L) - (J2 + t) f(L). Evaluated symbolically, independent of the ODE
/// integration path.
inline double characteristic_mismatch(double L, double c, double beta, double g, double j1,
                                      double j2, double t) {
    const double q = beta / (c * c) - g - t;
    const double s = -(j1 + t);
    double f, fp;
    if (q < 0.0) {
        const double w = std::sqrt(-q);
        f = std::cos(w * L) + s * std::sin(w * L) / w;
        fp = -w * std::sin(w * L) + s * std::cos(w * L);
    } else if (q == 0.0) {
        f = 1.0 + s * L;
        fp = s;
    } else {
        const double w = std::sqrt(q);
        f = std::cosh(w * L) + s * std::sinh(w * L) / w;
        fp = w * std::sinh(w * L) + s * std::cosh(w * L);
    }
    return fp - (j2 + t) * f;
}

/// First `count` roots of the closed-form characteristic function, scanned on
/// a dense grid above the a priori floor and bisected to 1e-12.
inline std::vector<double> characteristic_roots(double L, double c, double beta, double g,
                                                double j1, double j2, int count) {
    auto D = [&](double t) { return characteristic_mismatch(L, c, beta, g, j1, j2, t); };
    const double floor_bound = -(std::max(0.0, g) + std::max({0.0, j1, j2})) - 0.75;
    const double base = std::pow(std::numbers::pi / L, 2);
    double hi = floor_bound + base * (count + 3.0) * (count + 3.0) + 10.0;
    std::vector<double> roots =
        scan_transversal_roots(D, floor_bound, hi, 20000 * count, 1e-12, 0.0);
    if (static_cast<int>(roots.size()) < count)
        throw SolverError("characteristic_roots: dense scan found too few roots");
    roots.resize(count);
    return roots;
}

namespace detail {

struct ProblemGen {
    std::mt19937_64 rng;
    explicit ProblemGen(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    }

    /// Random problem over the preset warps (constant / tabulated cosh / AdS)
    /// with constant or sinusoidal potential and J1, J2 in [-3, 3].
    MixedProblem random_problem(bool sinusoidal_allowed = true) {
        const int which = static_cast<int>(rng() % 3);
        WarpFunction alpha = WarpFunction::constant(1.0);
        double r1 = 0.0, r2 = 1.0;
        int n = 3;
        if (which == 0) {
            alpha = WarpFunction::constant(uniform(0.5, 2.0));
            r1 = uniform(-1.0, 0.5);
            r2 = r1 + uniform(0.6, 2.2);
            n = 3 + static_cast<int>(rng() % 3);
        } else if (which == 1) {
            // cosh-shaped tabulated warp
            std::vector<double> rs, a, ad, add;
            r1 = 0.0;
            r2 = uniform(0.8, 1.8);
            for (int i = 0; i <= 128; ++i) {
                const double r = r1 + (r2 - r1) * i / 128.0;
                rs.push_back(r);
                a.push_back(std::cosh(r));
                ad.push_back(std::sinh(r));
                add.push_back(std::cosh(r));
            }
            alpha = WarpFunction::tabulated(rs, a, ad, add);
            n = 3;
        } else {
            const double K = uniform(0.5, 2.0);
            alpha = WarpFunction::ads_schwarzschild(1.0, K, 0.0, 2.0 * K + uniform(1.0, 3.0));
            r1 = 0.0;
            r2 = 0.8 * alpha.domain_hi();
            n = 3;
        }
        const double beta = uniform(0.0, 6.0);
        const double j1 = uniform(-3.0, 3.0);
        const double j2 = uniform(-3.0, 3.0);
        if (sinusoidal_allowed && rng() % 2 == 0) {
            const double g0 = uniform(-2.0, 2.0);
            const double g1 = uniform(-1.5, 1.5);
            const double k = uniform(0.5, 4.0);
            const double phase = uniform(0.0, 6.28);
            return MixedProblem::with_potential(
                n, r1, r2, alpha, beta,
                [g0, g1, k, phase](double r) { return g0 + g1 * std::sin(k * r + phase); }, j1,
                j2);
        }
        return MixedProblem::with_constant_potential(n, r1, r2, alpha, beta, uniform(-2.0, 2.0),
                                                     j1, j2);
    }

    /// Random smooth trial function with exact derivatives, sampled uniformly.
    RadialSolution random_trial(double r1, double r2, int samples = 513) {
        double a0 = uniform(-1.0, 1.0);
        std::vector<double> ak(3), bk(3);
        for (int k = 0; k < 3; ++k) {
            ak[k] = uniform(-1.0, 1.0);
            bk[k] = uniform(-1.0, 1.0);
        }
        if (std::abs(a0) < 0.05) a0 = 0.3; // keep the trial away from zero
        const double L = r2 - r1;
        RadialSolution t;
        for (int i = 0; i < samples; ++i) {
            const double r = r1 + L * i / (samples - 1);
            const double x = (r - r1) / L;
            double f = a0, fd = 0.0;
            for (int k = 1; k <= 3; ++k) {
                const double w = k * std::numbers::pi;
                f += ak[k - 1] * std::cos(w * x) + bk[k - 1] * std::sin(w * x);
                fd += (-ak[k - 1] * std::sin(w * x) + bk[k - 1] * std::cos(w * x)) * w / L;
            }
            t.grid.push_back(r);
            t.values.push_back(f);
            t.derivative_values.push_back(fd);
        }
        return t;
    }
};

} // namespace detail

inline CheckResult check_lower_bound(const VerifyOptions& opt) {
    detail::ProblemGen gen(opt.seed + 1);
    double worst = -1e300;
    for (int trial = 0; trial < 12; ++trial) {
        const MixedProblem p = gen.random_problem();
        const double bound = lower_bound(p);
        for (const auto& e : find_eigenvalues(p, 3, std::nullopt, opt.solver))
            worst = std::max(worst, bound - e.value);
    }
    return {"lower_bound", worst <= 1e-9, worst, 1e-9,
            "max(bound - eigenvalue) over randomized problems"};
}

inline CheckResult check_nodal_count(const VerifyOptions& opt) {
    detail::ProblemGen gen(opt.seed + 2);
    int worst = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const MixedProblem p = gen.random_problem();
        const auto evs = find_eigenvalues(p, 4, std::nullopt, opt.solver);
        for (std::size_t j = 0; j < evs.size(); ++j)
            worst = std::max(worst, std::abs(evs[j].solution.node_count - static_cast<int>(j)));
    }
    return {"nodal_count", worst == 0, static_cast<double>(worst), 0.5,
            "max |node_count - (j-1)| over randomized problems"};
}

inline CheckResult check_monotonicity(const VerifyOptions& opt) {
    detail::ProblemGen gen(opt.seed + 3);
    double worst = -1e300;
    for (int trial = 0; trial < 3; ++trial) {
        MixedProblem p = gen.random_problem(false);
        double prev = -1e300;
        for (int step = 0; step < 6; ++step) {
            p.beta = 1.5 * step;
            const double first = find_eigenvalues(p, 1, std::nullopt, opt.solver).front().value;
            if (step > 0) worst = std::max(worst, prev - first);
            prev = first;
        }
    }
    return {"monotonicity", worst <= 1e-9, worst, 1e-9,
            "max first-eigenvalue drop along an increasing fiber ladder"};
}

inline CheckResult check_rayleigh(const VerifyOptions& opt) {
    detail::ProblemGen gen(opt.seed + 4);
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const MixedProblem p = gen.random_problem();
        const auto evs = find_eigenvalues(p, 1, std::nullopt, opt.solver);
        const double first = evs.front().value;
        worst = std::max(worst, std::abs(rayleigh_quotient(p, evs.front().solution) - first));
        for (int k = 0; k < 20; ++k) {
            const RadialSolution t = gen.random_trial(p.r1, p.r2);
            const double q = rayleigh_quotient(p, t);
            worst = std::max(worst, first - q); // quotient must stay above the minimum
        }
    }
    return {"rayleigh", worst <= 1e-6, worst, 1e-6,
            "max of |RQ(eigenfunction) - eigenvalue| and (min - RQ(trial))"};
}

inline CheckResult check_quadratic_form(const VerifyOptions& opt) {
    const WarpedGeometry geom = ads_schwarzschild(1.0, 1.0, 0.0, 6.0);
    const double gamma = 0.6 * geom.r2();
    const JacobiProblem jp = jacobi_problem(geom, gamma);
    ConstraintConstants cc;
    try {
        cc = compute_ab(geom.n(), jp.scalar_curvature, jp.mean_curvature,
                        slab_volume(geom, gamma), slab_area(geom, gamma));
    } catch (const DegenerateConstantsError&) {
        cc = degenerate_constants(slab_volume(geom, gamma), slab_area(geom, gamma));
    }
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        MixedProblem p = jp.for_fiber_mode(fiber_eigenvalue(geom.fiber(), i));
        auto evs = find_eigenvalues(p, 2, std::nullopt, opt.solver);
        for (auto& e : evs) {
            e.fiber_index = i;
            const auto qf = quadratic_form_terms(geom, gamma, e, cc);
            worst = std::max(worst, std::abs(qf.residual) / (1.0 + std::abs(e.value)));
        }
    }
    return {"quadratic_form", worst <= 1e-6, worst, 1e-6,
            "max |Q - (n-2)(n-1)/2 mu E| / (1 + |mu|) on the Schwarzschild slab"};
}

inline CheckResult check_oracle(const VerifyOptions& opt) {
    detail::ProblemGen gen(opt.seed + 6);
    double worst = 0.0;
    for (int trial = 0; trial < 4; ++trial) {
        const double c = gen.uniform(0.5, 2.0);
        const double L = gen.uniform(0.7, 1.8);
        const double beta = gen.uniform(0.0, 4.0);
        const double g = gen.uniform(-1.5, 1.5);
        const double j1 = gen.uniform(-2.0, 2.0);
        const double j2 = gen.uniform(-2.0, 2.0);
        const MixedProblem p = MixedProblem::with_constant_potential(
            3, 0.0, L, WarpFunction::constant(c), beta, g, j1, j2);
        const auto exact = characteristic_roots(L, c, beta, g, j1, j2, 5);
        const auto evs = find_eigenvalues(p, 5, std::nullopt, opt.solver);
        for (int k = 0; k < 5; ++k)
            worst = std::max(worst, std::abs(evs[k].value - exact[k]) /
                                        std::max(1.0, std::abs(exact[k])));
    }
    return {"oracle", worst <= 1e-8, worst, 1e-8,
            "max relative error against the closed-form characteristic roots"};
}

inline std::vector<std::string> default_checks() {
    return {"lower_bound", "nodal_count", "monotonicity", "rayleigh", "quadratic_form", "oracle"};
}

inline CheckResult run_check(const std::string& name, const VerifyOptions& opt) {
    try {
        if (name == "lower_bound") return check_lower_bound(opt);
        if (name == "nodal_count") return check_nodal_count(opt);
        if (name == "monotonicity") return check_monotonicity(opt);
        if (name == "rayleigh") return check_rayleigh(opt);
        if (name == "quadratic_form") return check_quadratic_form(opt);
        if (name == "oracle") return check_oracle(opt);
    } catch (const Error& err) {
        return {name, false, std::numeric_limits<double>::quiet_NaN(), 0.0,
                std::string("solver failure: ") + err.what()};
    }
    throw ConfigError("verify: unknown check '" + name + "'");
}

inline std::vector<CheckResult> run_checks(const std::vector<std::string>& names,
                                           const VerifyOptions& opt) {
    std::vector<CheckResult> out;
    out.reserve(names.size());
    for (const auto& name : names) out.push_back(run_check(name, opt));
    return out;
}

} // namespace warped::verify
