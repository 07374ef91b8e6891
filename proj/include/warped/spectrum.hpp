#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "warped/errors.hpp"
#include "warped/fiber.hpp"
#include "warped/geometry.hpp"
#include "warped/numerics.hpp"
#include "warped/parallel.hpp"
#include "warped/slp.hpp"

namespace warped {

/// Constraint data (a, b, lambda) of a * Vol(M) + b * Area(Sigma_2) = 1
/// together with the slab volume and boundary area. `degenerate` marks the
/// R = H = 0 case where only the ratio a : b is meaningful.
struct ConstraintConstants {
    double a = 0.0;
    double b = 0.0;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double volume = 0.0;
    double area = 0.0;
    bool degenerate = false;
};

/// Solves a V + b A = 1 and (n-1) b R = 2 n a H for prescribed curvatures.
/// Throws DegenerateConstantsError when R = H = 0 (the constants are then
/// determined only up to the homogeneous ratio) and ConfigError when the sign
/// configuration forces a < 0.
inline ConstraintConstants compute_ab(int n, double R, double H, double V, double A,
                                      double zero_tol = 1e-10) {
    if (!(V > 0.0) || !(A > 0.0)) throw ConfigError("compute_ab: V and A must be positive");
    if (n < 3) throw ConfigError("compute_ab: n must be >= 3");
    const bool r_zero = std::abs(R) <= zero_tol;
    const bool h_zero = std::abs(H) <= zero_tol;
    ConstraintConstants c;
    c.volume = V;
    c.area = A;
    if (r_zero && h_zero)
        throw DegenerateConstantsError(
            "compute_ab: R = H = 0 leaves (a, b) determined only up to ratio");
    if (h_zero) {
        c.b = 0.0;
        c.a = 1.0 / V;
        c.lambda = R * (n - 2) / (static_cast<double>(n) * c.a);
        return c;
    }
    if (r_zero) {
        c.a = 0.0;
        c.b = 1.0 / A;
        c.lambda = H * 2.0 * (n - 2) / ((n - 1) * c.b);
        return c;
    }
    // a = (n-1) R b / (2 n H), substituted into a V + b A = 1.
    const double ratio = (n - 1) * R / (2.0 * n * H);
    const double denom = ratio * V + A;
    if (std::abs(denom) < 1e-300)
        throw ConfigError("compute_ab: constraint system is singular for these curvatures");
    c.b = 1.0 / denom;
    c.a = ratio * c.b;
    if (c.a < -zero_tol)
        throw ConfigError("compute_ab: sign configuration forces a < 0");
    c.a = std::max(0.0, c.a);
    c.lambda = (c.a != 0.0) ? R * (n - 2) / (static_cast<double>(n) * c.a)
                            : H * 2.0 * (n - 2) / ((n - 1) * c.b);
    return c;
}

inline ConstraintConstants degenerate_constants(double V, double A) {
    ConstraintConstants c;
    c.volume = V;
    c.area = A;
    c.degenerate = true;
    return c;
}

/// Vol(M) of the slab [r1, gamma] x P.
inline double slab_volume(const WarpedGeometry& geom, double gamma, int panels = 256) {
    geom.require_inside(gamma, "slab_volume");
    const int m = geom.n() - 1;
    auto w = [&](double r) { return detail::ipow(geom.alpha().value(r), m); };
    return geom.fiber().volume() * integrate_gl16(w, geom.r1(), gamma, panels);
}

/// Area of the outer boundary slice {gamma} x P.
inline double slab_area(const WarpedGeometry& geom, double gamma) {
    geom.require_inside(gamma, "slab_area");
    return geom.fiber().volume() * detail::ipow(geom.alpha().value(gamma), geom.n() - 1);
}

/// Full mixed-problem spectrum over the first fiber modes.
struct SpectrumTable {
    std::vector<Eigenpair> entries; // sorted by (value, fiber_index, radial_index)
    int cutoff_i0 = 0;              // modes i > cutoff_i0 are positive by criterion
    double floor = 0.0;             // a priori lower bound used for the search
    std::vector<int> skipped_modes; // fiber modes not solved in fast mode
};

struct AssembleOptions {
    bool fast = false; // skip solving modes above the positivity cutoff
    SolverOptions solver;
};

namespace detail {

/// Smallest i0 >= -1 with beta_i / alpha_max^2 > sup G for every i > i0.
/// `betas` must contain enough eigenvalues to witness the crossing; returns
/// the index of the last failing mode, or fallback when it cannot be
/// certified from the available list.
inline int positivity_cutoff(const std::vector<FiberEigenvalue>& betas, double alpha_max,
                             double sup_g, int fallback) {
    const double bound = sup_g * alpha_max * alpha_max;
    for (int i = static_cast<int>(betas.size()) - 1; i >= 0; --i) {
        if (!(betas[i].value > bound)) return i;
    }
    if (!betas.empty()) return -1; // even the zero mode clears the bound
    return fallback;
}

} // namespace detail

/// Builds the radial problem of fiber mode i on the slab [r1, gamma].
inline MixedProblem radial_problem(const WarpedGeometry& geom, double gamma, double beta,
                                   std::function<double(double)> g, double sup_g, double j1,
                                   double j2) {
    MixedProblem p{geom.n(),  geom.r1(), gamma, geom.alpha(), beta,
                   std::move(g), sup_g,     j1,    j2};
    p.validate();
    return p;
}

/// Assembles the spectrum {beta^i_j} over the first `fiber_count` fiber modes
/// with `radial_count` radial eigenvalues each, merged and sorted. Fiber modes
/// are solved by independent workers and merged deterministically. In fast
/// mode the modes above the positivity cutoff are recorded as skipped instead
/// of solved (they are positive by criterion).
inline SpectrumTable assemble(const WarpedGeometry& geom, double gamma,
                              std::function<double(double)> G, double j1, double j2,
                              int fiber_count, int radial_count,
                              const AssembleOptions& opt = {}) {
    if (fiber_count < 1 || radial_count < 1)
        throw ConfigError("assemble: fiber_count and radial_count must be >= 1");
    const double tol = 1e-9 * std::max(1.0, geom.r2() - geom.r1());
    if (gamma <= geom.r1() || gamma > geom.r2() + tol)
        throw ConfigError("assemble: gamma must lie in (r1, r2]");

    // sup G at solver grid resolution (exact for the constant potentials used
    // by the rigidity analyses).
    double sup_g = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 2048; ++i)
        sup_g = std::max(sup_g, G(geom.r1() + (gamma - geom.r1()) * i / 2048.0));

    const double a_max = geom.alpha_max(geom.r1(), gamma);

    // Fetch enough fiber eigenvalues to certify the cutoff.
    int want = fiber_count;
    std::vector<FiberEigenvalue> betas = eigenvalues(geom.fiber(), want);
    const double bound = sup_g * a_max * a_max;
    while (!(betas.back().value > bound) && want < geom.fiber().available_count() &&
           want < (1 << 20)) {
        want = std::min(want * 2, geom.fiber().available_count());
        betas = eigenvalues(geom.fiber(), want);
    }
    const int cutoff = detail::positivity_cutoff(betas, a_max, sup_g, fiber_count - 1);

    SpectrumTable table;
    table.cutoff_i0 = cutoff;

    std::vector<std::vector<Eigenpair>> per_mode(fiber_count);
    std::vector<int> solve_modes;
    for (int i = 0; i < fiber_count; ++i) {
        if (opt.fast && i > cutoff)
            table.skipped_modes.push_back(i);
        else
            solve_modes.push_back(i);
    }

    double floor_value = 0.0;
    if (!solve_modes.empty()) {
        MixedProblem p0 = radial_problem(geom, gamma, betas[0].value, G, sup_g, j1, j2);
        floor_value = lower_bound(p0);
    }
    table.floor = floor_value;

    parallel_for_index(solve_modes.size(), [&](std::size_t k) {
        const int i = solve_modes[k];
        MixedProblem p = radial_problem(geom, gamma, betas[i].value, G, sup_g, j1, j2);
        auto evs = find_eigenvalues(p, radial_count, std::nullopt, opt.solver);
        for (auto& e : evs) e.fiber_index = i;
        per_mode[i] = std::move(evs);
    });

    for (auto& mode : per_mode)
        for (auto& e : mode) table.entries.push_back(std::move(e));
    std::sort(table.entries.begin(), table.entries.end(), [](const Eigenpair& x, const Eigenpair& y) {
        if (x.value != y.value) return x.value < y.value;
        if (x.fiber_index != y.fiber_index) return x.fiber_index < y.fiber_index;
        return x.radial_index < y.radial_index;
    });
    return table;
}

/// Linearized-constraint integrals of a radial eigenfunction:
///   iv     = int alpha^{n-1} f dr over [r1, gamma]
///   iv_abs = int alpha^{n-1} |f| dr  (size of the cancellation in iv)
///   ia     = f(gamma) alpha(gamma)^{n-1}
///   ia_abs = sup|f| alpha(gamma)^{n-1}.
struct AdmissibilityIntegrals {
    double iv, iv_abs, ia, ia_abs;
};

inline AdmissibilityIntegrals admissibility_integrals(const Eigenpair& pair,
                                                      const WarpedGeometry& geom, double gamma) {
    if (pair.solution.grid.size() < 2)
        throw ConfigError("admissibility: eigenpair carries no sampled eigenfunction");
    const int m = geom.n() - 1;
    HermiteSpline f(pair.solution.grid, pair.solution.values, pair.solution.derivative_values);
    auto integrand = [&](double r) { return detail::ipow(geom.alpha().value(r), m) * f.value(r); };
    auto abs_integrand = [&](double r) {
        return detail::ipow(geom.alpha().value(r), m) * std::abs(f.value(r));
    };
    const std::span<const double> grid(pair.solution.grid);
    AdmissibilityIntegrals out{};
    out.iv = integrate_gl16_on_grid(integrand, grid);
    out.iv_abs = integrate_gl16_on_grid(abs_integrand, grid);
    const double ap = detail::ipow(geom.alpha().value(gamma), m);
    out.ia = pair.solution.values.back() * ap;
    double f_sup = 0.0;
    for (double v : pair.solution.values) f_sup = std::max(f_sup, std::abs(v));
    out.ia_abs = f_sup * ap;
    return out;
}

/// Ratio-only admissibility for the degenerate R = H = 0 case: the condition
/// (na/2) I_V + ((n-1)b/2) I_A = 0 is homogeneous in (a, b), so it either
/// holds for every ratio, for exactly one critical ratio a : b >= 0, or for
/// none.
struct RatioAdmissibility {
    enum class Kind { AllRatios, CriticalRatio, NoRatio } kind;
    double critical_a_to_b = std::numeric_limits<double>::quiet_NaN();
};

inline RatioAdmissibility admissible_ratio_family(const Eigenpair& pair,
                                                  const WarpedGeometry& geom, double gamma,
                                                  double tol = 1e-7) {
    const auto ints = admissibility_integrals(pair, geom, gamma);
    const int n = geom.n();
    const double u = 0.5 * n * ints.iv;       // coefficient of a
    const double v = 0.5 * (n - 1) * ints.ia; // coefficient of b
    const double u_scale = 0.5 * n * ints.iv_abs;
    const double v_scale = 0.5 * (n - 1) * ints.ia_abs;
    const bool u_zero = std::abs(u) <= tol * std::max(u_scale, 1e-300);
    const bool v_zero = std::abs(v) <= tol * std::max(v_scale, 1e-300);
    RatioAdmissibility out{RatioAdmissibility::Kind::NoRatio, {}};
    if (u_zero && v_zero) {
        out.kind = RatioAdmissibility::Kind::AllRatios;
        return out;
    }
    if (u_zero || v_zero) {
        out.kind = RatioAdmissibility::Kind::CriticalRatio;
        out.critical_a_to_b = u_zero ? std::numeric_limits<double>::infinity() : 0.0;
        return out;
    }
    if (u * v < 0.0) {
        out.kind = RatioAdmissibility::Kind::CriticalRatio;
        out.critical_a_to_b = -v / u;
        return out;
    }
    return out;
}

/// Whether the eigenpair satisfies the linearized constraint
/// (na/2) int alpha^{n-1} f_R dr + ((n-1)b/2) f_R(gamma) alpha(gamma)^{n-1} = 0.
/// Nonzero fiber modes integrate to zero over P and are always admissible.
/// The test is relative to the magnitude of the two terms, and invariant
/// under (a, b) -> (c a, c b).
inline bool admissible(const Eigenpair& pair, const ConstraintConstants& constants,
                       const WarpedGeometry& geom, double gamma, double tol = 1e-7) {
    if (pair.fiber_index >= 1) return true;
    if (constants.degenerate)
        return admissible_ratio_family(pair, geom, gamma, tol).kind !=
               RatioAdmissibility::Kind::NoRatio;
    const auto ints = admissibility_integrals(pair, geom, gamma);
    const int n = geom.n();
    const double value =
        0.5 * n * constants.a * ints.iv + 0.5 * (n - 1) * constants.b * ints.ia;
    const double scale = 0.5 * n * std::abs(constants.a) * ints.iv_abs +
                         0.5 * (n - 1) * std::abs(constants.b) * ints.ia_abs;
    return std::abs(value) <= tol * std::max(scale, 1e-300);
}

} // namespace warped
