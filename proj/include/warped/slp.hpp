#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "warped/errors.hpp"
#include "warped/geometry.hpp"
#include "warped/numerics.hpp"
#include "warped/ode.hpp"
#include "warped/root_find.hpp"
#include "warped/spline.hpp"

namespace warped {

struct SolverOptions {
    double ode_rel = 1e-10;
    double ode_abs = 1e-12;
    double root_tol = 1e-10;   // absolute bisection tolerance in the trial eigenvalue
    double floor_margin = 0.5; // search starts this far below the a priori bound
    double ceiling = std::numeric_limits<double>::quiet_NaN(); // NaN: automatic
    int max_rescan_depth = 6;
    int min_dense_samples = 512;
};

/// Radial Sturm-Liouville data of the separated mixed problem on [r1, r2]:
///   -(1/alpha^{n-1}) (alpha^{n-1} f')' + (beta/alpha^2) f = (G + t) f
///   -f'(r1) = (J1 + t) f(r1),   f'(r2) = (J2 + t) f(r2)
/// where t is the spectral parameter (it appears in the equation and in both
/// boundary conditions).
struct MixedProblem {
    int n = 3;
    double r1 = 0.0, r2 = 1.0;
    WarpFunction alpha = WarpFunction::constant(1.0);
    double beta = 0.0;
    std::function<double(double)> potential = [](double) { return 0.0; };
    double potential_sup = 0.0; // sup G over [r1, r2]
    double j1 = 0.0, j2 = 0.0;

    static MixedProblem with_constant_potential(int n, double r1, double r2,
                                                WarpFunction alpha, double beta, double g,
                                                double j1, double j2) {
        MixedProblem p{n, r1, r2, std::move(alpha), beta,
                       [g](double) { return g; }, g, j1, j2};
        p.validate();
        return p;
    }

    /// sup G is sampled on a dense uniform grid (exact for the constant
    /// potentials of the rigidity use-case).
    static MixedProblem with_potential(int n, double r1, double r2, WarpFunction alpha,
                                       double beta, std::function<double(double)> g,
                                       double j1, double j2, int sup_samples = 2049) {
        double sup = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < sup_samples; ++i)
            sup = std::max(sup, g(r1 + (r2 - r1) * i / (sup_samples - 1)));
        MixedProblem p{n, r1, r2, std::move(alpha), beta, std::move(g), sup, j1, j2};
        p.validate();
        return p;
    }

    void validate() const {
        if (n < 2) throw ConfigError("MixedProblem: n must be >= 2");
        if (!(r1 < r2)) throw ConfigError("MixedProblem: need r1 < r2");
        if (beta < 0.0) throw ConfigError("MixedProblem: beta must be nonnegative");
        for (int i = 0; i <= 64; ++i)
            if (!(alpha.value(r1 + (r2 - r1) * i / 64.0) > 0.0))
                throw ConfigError("MixedProblem: alpha must be positive on [r1, r2]");
    }
};

/// Sampled radial solution. `values` and `derivative_values` share `grid`;
/// node_count is the number of strict sign changes of `values` strictly
/// between the endpoints. When overflow rescaling kicked in during
/// integration, all samples carry the common factor 2^(-scale_log2).
struct RadialSolution {
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<double> derivative_values;
    int node_count = 0;
    int scale_log2 = 0;
};

struct Eigenpair {
    int fiber_index = 0;
    int radial_index = 1; // node_count + 1 (Sturm indexing)
    double value = 0.0;
    RadialSolution solution;
    bool admissible = false;
};

namespace detail {

inline double ipow(double x, int k) {
    double r = 1.0;
    while (k > 0) {
        if (k & 1) r *= x;
        x *= x;
        k >>= 1;
    }
    return r;
}

inline int count_sign_changes(const std::vector<double>& v) {
    int count = 0;
    int prev = 0;
    for (double x : v) {
        const int s = (x > 0.0) - (x < 0.0);
        if (s == 0) continue;
        if (prev != 0 && s != prev) ++count;
        prev = s;
    }
    return count;
}

struct DenseSink {
    std::vector<double> xs, fs, vs;
    void sample(double x, const OdeState& y) {
        xs.push_back(x);
        fs.push_back(y[0]);
        vs.push_back(y[1]);
    }
    void rescale(double factor) {
        for (auto& f : fs) f *= factor;
        for (auto& v : vs) v *= factor;
    }
};

inline OdeOptions ode_options(const MixedProblem& p, double trial, const SolverOptions& opt,
                              bool dense) {
    OdeOptions o;
    o.rtol = opt.ode_rel;
    o.abstol = opt.ode_abs;
    if (dense) {
        const double span = p.r2 - p.r1;
        const double omega = std::sqrt(std::max(1.0, p.potential_sup + trial));
        const double osc_spacing = 0.25 * std::numbers::pi / omega;
        o.dense_spacing = std::min(span / opt.min_dense_samples, osc_spacing);
    }
    return o;
}

struct EndState {
    double f, fp;
    int scale_log2;
};

/// Integrates the shooting IVP and returns only the endpoint state.
inline EndState shoot_endpoint(const MixedProblem& p, double trial, const SolverOptions& opt) {
    const int m = p.n - 1;
    auto rhs = [&](double x, const OdeState& y) -> OdeState {
        const double a = p.alpha.value(x);
        const double ap = ipow(a, m);
        return {y[1] / ap, ap * (p.beta / (a * a) - p.potential(x) - trial) * y[0]};
    };
    const double ap1 = ipow(p.alpha.value(p.r1), m);
    OdeState y{1.0, ap1 * (-(p.j1 + trial))};
    int scale = 0;
    y = integrate_ode(rhs, y, p.r1, p.r2, ode_options(p, trial, opt, false), &scale);
    const double ap2 = ipow(p.alpha.value(p.r2), m);
    return {y[0], y[1] / ap2, scale};
}

} // namespace detail

/// A priori lower bound on every eigenvalue: -(G+ + J+), with
/// G+ = max(0, sup G) and J+ = max(0, J1, J2).
inline double lower_bound(const MixedProblem& p) {
    return -(std::max(0.0, p.potential_sup) + std::max({0.0, p.j1, p.j2}));
}

/// Integrates the initial-value problem with f(r1) = 1 and
/// f'(r1) = -(J1 + trial), returning the densely sampled solution.
inline RadialSolution shoot(const MixedProblem& p, double trial, const SolverOptions& opt = {}) {
    const int m = p.n - 1;
    auto rhs = [&](double x, const OdeState& y) -> OdeState {
        const double a = p.alpha.value(x);
        const double ap = detail::ipow(a, m);
        return {y[1] / ap, ap * (p.beta / (a * a) - p.potential(x) - trial) * y[0]};
    };
    const double ap1 = detail::ipow(p.alpha.value(p.r1), m);
    OdeState y{1.0, ap1 * (-(p.j1 + trial))};
    detail::DenseSink sink;
    int scale = 0;
    integrate_ode(rhs, y, p.r1, p.r2, detail::ode_options(p, trial, opt, true), sink, &scale);

    RadialSolution sol;
    sol.grid = std::move(sink.xs);
    sol.values = std::move(sink.fs);
    sol.derivative_values.resize(sol.grid.size());
    for (std::size_t i = 0; i < sol.grid.size(); ++i)
        sol.derivative_values[i] = sink.vs[i] / detail::ipow(p.alpha.value(sol.grid[i]), m);
    sol.node_count = detail::count_sign_changes(sol.values);
    sol.scale_log2 = scale;
    return sol;
}

/// Shooting mismatch D(trial) = f'(r2) - (J2 + trial) f(r2). Vanishes exactly
/// at the eigenvalues. Reported in the solver's common 2^-k scaling, which
/// preserves signs and roots.
inline double mismatch(const MixedProblem& p, double trial, const SolverOptions& opt = {}) {
    const auto end = detail::shoot_endpoint(p, trial, opt);
    return end.fp - (p.j2 + trial) * end.f;
}

namespace detail {

struct EigenSearch {
    const MixedProblem& p;
    const SolverOptions& opt;
    double running_scale = 0.0; // largest |D| seen, for zero-landing detection

    double eval(double t) {
        const double d = mismatch(p, t, opt);
        running_scale = std::max(running_scale, std::abs(d));
        return d;
    }

    double refine_root(double lo, double hi, double flo, double fhi) {
        auto f = [this](double t) { return eval(t); };
        double root = bisect(f, lo, hi, flo, fhi, opt.root_tol);
        // One guarded Newton polish with a finite-difference derivative.
        const double h = std::max(100.0 * opt.root_tol, 1e-8 * (1.0 + std::abs(root)));
        const double d0 = eval(root);
        const double dp = (eval(root + h) - eval(root - h)) / (2.0 * h);
        if (std::isfinite(dp) && dp != 0.0) {
            const double polished = root - d0 / dp;
            if (polished > lo && polished < hi) root = polished;
        }
        return root;
    }

    /// Resolves a pair of nearly coincident roots inside (lo, hi) whose net
    /// sign change cancels on any coarse grid (they arise when the trial
    /// parameter in the Robin data balances the interior growth rate; the
    /// splitting shrinks like sech of the slab width). Locates the |D| dip by
    /// golden section, then walks a delta ladder until the opposite-sign
    /// point between the two crossings appears. Returns both roots, or
    /// nothing when the pair is unresolvable at root_tol (a double root).
    std::vector<double> resolve_cluster(double lo, double hi) {
        const double d_lo = eval(lo), d_hi = eval(hi);
        if (d_lo * d_hi < 0.0) {
            return {refine_root(lo, hi, d_lo, d_hi)};
        }
        const double outer_sign = (d_lo > 0.0) ? 1.0 : -1.0;
        auto absf = [this](double t) { return std::abs(eval(t)); };
        // Coarse argmin seed keeps the golden section on the global dip.
        double seed = lo, seed_val = std::abs(d_lo);
        for (int i = 1; i < 128; ++i) {
            const double t = lo + (hi - lo) * i / 128.0;
            const double v = absf(t);
            if (v < seed_val) {
                seed = t;
                seed_val = v;
            }
        }
        const double cell = (hi - lo) / 128.0;
        const auto [tc, dmin] = golden_section_min(absf, std::max(lo, seed - cell),
                                                   std::min(hi, seed + cell), 0.25 * opt.root_tol);
        const double scale = std::max(std::abs(d_lo), std::abs(d_hi));
        if (!(dmin < 1e-6 * scale)) return {}; // no dip, nothing hidden here
        for (double delta = 4.0 * opt.root_tol; delta < 0.5 * (hi - lo); delta *= 2.0) {
            for (double t_in : {tc - delta, tc + delta}) {
                if (t_in <= lo || t_in >= hi) continue;
                const double d_in = eval(t_in);
                if (d_in * outer_sign < 0.0) {
                    return {refine_root(lo, t_in, d_lo, d_in),
                            refine_root(t_in, hi, d_in, d_hi)};
                }
            }
        }
        return {};
    }

    /// Sign-change roots inside (lo, hi): uniform grids of increasing
    /// resolution first, then targeted cluster resolution on the gaps between
    /// whatever the grids produced.
    std::vector<double> rescan(double lo, double hi, int need, int depth) {
        auto f = [this](double t) { return eval(t); };
        const double ztol = 1e-13 * std::max(running_scale, 1e-280);
        std::vector<double> roots;
        for (int d = depth; d < std::min(opt.max_rescan_depth, 3); ++d) {
            const int n = 64 << (3 * d);
            roots = scan_transversal_roots(f, lo, hi, n, opt.root_tol, ztol);
            if (static_cast<int>(roots.size()) >= need) return roots;
        }
        // Hidden even-multiplicity clusters: search every gap.
        std::vector<double> edges{lo};
        for (double r : roots) edges.push_back(r);
        edges.push_back(hi);
        std::vector<double> all = roots;
        for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
            const double a = edges[k] + 4.0 * opt.root_tol;
            const double b = edges[k + 1] - 4.0 * opt.root_tol;
            if (!(a < b)) continue;
            for (double t : resolve_cluster(a, b)) {
                bool dup = false;
                for (double known : all)
                    if (std::abs(known - t) <= 4.0 * opt.root_tol) dup = true;
                if (!dup) all.push_back(t);
            }
        }
        std::sort(all.begin(), all.end());
        return all;
    }
};

/// Shared search core: marches the mismatch upward over [start, limit],
/// brackets sign changes, refines roots, and certifies completeness by
/// Sturm node counts. Stops once max_count roots are in hand.
inline std::vector<Eigenpair> search_eigenvalues(const MixedProblem& p, double start,
                                                 double limit, int max_count, bool base_known,
                                                 const SolverOptions& opt) {
    const double span = p.r2 - p.r1;
    const double base_gap = std::pow(std::numbers::pi / span, 2);

    detail::EigenSearch search{p, opt};
    std::vector<Eigenpair> found;

    auto verify_chain = [&]() {
        for (std::size_t i = 1; i < found.size(); ++i) {
            if (found[i].solution.node_count != found[i - 1].solution.node_count + 1)
                throw IncompleteSpectrumError(
                    "node-count gap persists between eigenvalues " +
                    format_double(found[i - 1].value) + " and " + format_double(found[i].value));
        }
    };

    auto solve_at = [&](double t) {
        Eigenpair pair;
        pair.value = t;
        pair.solution = shoot(p, t, opt);
        pair.radial_index = pair.solution.node_count + 1;
        return pair;
    };

    auto add_root = [&](double t) {
        Eigenpair pair = solve_at(t);
        const int expected =
            found.empty() ? (base_known ? 0 : pair.solution.node_count)
                          : found.back().solution.node_count + 1;
        if (pair.solution.node_count < expected)
            throw IncompleteSpectrumError("node count regressed at eigenvalue " +
                                          format_double(t));
        if (pair.solution.node_count > expected) {
            const double lo = found.empty() ? start : found.back().value + opt.root_tol;
            const int need = pair.solution.node_count - expected;
            std::vector<double> extra = search.rescan(lo, t - opt.root_tol, need, 0);
            for (double te : extra) {
                bool dup = false;
                for (const auto& g : found)
                    if (std::abs(g.value - te) <= 4.0 * opt.root_tol) dup = true;
                if (!dup) found.push_back(solve_at(te));
            }
            found.push_back(std::move(pair));
            std::sort(found.begin(), found.end(),
                      [](const Eigenpair& a, const Eigenpair& b) { return a.value < b.value; });
            verify_chain();
            if (base_known && found.front().solution.node_count != 0)
                throw IncompleteSpectrumError("missing ground eigenvalue below " +
                                              format_double(found.front().value));
            return;
        }
        found.push_back(std::move(pair));
    };

    double t_prev = start;
    double d_prev = search.eval(t_prev);
    while (static_cast<int>(found.size()) < max_count && t_prev < limit) {
        const double step =
            std::max(0.45 * base_gap * (2.0 * found.size() + 1.0), 1e-3 * (1.0 + std::abs(t_prev)));
        const double t_next = std::min(t_prev + step, limit);
        double d_next = search.eval(t_next);

        const double ztol = 1e-13 * std::max(search.running_scale, 1e-280);
        if (std::abs(d_next) <= ztol && t_next < limit) {
            // Grid landed on (or next to) a root: classify by a probe.
            const double delta = std::max(8.0 * opt.root_tol, 1e-3 * (t_next - t_prev));
            const double d_lo = search.eval(t_next - delta);
            const double d_hi = search.eval(t_next + delta);
            if (d_lo * d_hi < 0.0) {
                add_root(search.refine_root(t_next - delta, t_next + delta, d_lo, d_hi));
            } else {
                auto [tm, dm] = golden_section_min(
                    [&](double t) { return std::abs(search.eval(t)); }, t_next - delta,
                    t_next + delta, opt.root_tol);
                if (std::abs(dm) <= ztol)
                    throw IncompleteSpectrumError("non-transversal mismatch root near trial " +
                                                  format_double(tm));
                d_next = search.eval(t_next);
            }
        } else if (d_prev * d_next < 0.0) {
            add_root(search.refine_root(t_prev, t_next, d_prev, d_next));
        }
        t_prev = t_next;
        d_prev = d_next;
    }
    return found;
}

} // namespace detail

/// Finds the `count` smallest eigenvalues above the a priori floor (or inside
/// `window` when given), strictly ordered, each with its radial solution.
/// Completeness is certified through Sturm node counts: consecutive
/// eigenfunctions must gain exactly one interior sign change; any gap triggers
/// a finer re-scan and, if it persists, IncompleteSpectrumError.
inline std::vector<Eigenpair> find_eigenvalues(const MixedProblem& p, int count,
                                               std::optional<std::pair<double, double>> window = {},
                                               const SolverOptions& opt = {}) {
    if (count < 1) throw ConfigError("find_eigenvalues: count must be >= 1");
    const double floor_bound = lower_bound(p);
    double start = floor_bound - opt.floor_margin;
    const double span = p.r2 - p.r1;
    const double base_gap = std::pow(std::numbers::pi / span, 2);
    double limit;
    if (window) {
        if (!(window->first < window->second))
            throw ConfigError("find_eigenvalues: invalid search window");
        start = std::max(start, window->first);
        limit = window->second;
    } else if (std::isnan(opt.ceiling)) {
        limit = start + opt.floor_margin + base_gap * (count + 3.0) * (count + 3.0) +
                10.0 * (1.0 + std::abs(floor_bound));
    } else {
        limit = opt.ceiling;
    }

    auto found = detail::search_eigenvalues(p, start, limit, count, !window.has_value(), opt);
    if (static_cast<int>(found.size()) < count)
        throw SolverError("find_eigenvalues: only " + std::to_string(found.size()) + " of " +
                          std::to_string(count) + " eigenvalues found below ceiling " +
                          format_double(limit));
    found.resize(count);
    return found;
}

/// All eigenvalues strictly below `ceiling_value` (possibly none), with the
/// same completeness certification as find_eigenvalues.
inline std::vector<Eigenpair> find_eigenvalues_below(const MixedProblem& p, double ceiling_value,
                                                     const SolverOptions& opt = {}) {
    const double start = lower_bound(p) - opt.floor_margin;
    if (!(ceiling_value > start)) return {};
    return detail::search_eigenvalues(p, start, ceiling_value, INT32_MAX, true, opt);
}

/// Rayleigh quotient of a sampled trial function in the D/E form whose
/// minimizer over H^1 is the first eigenvalue:
///   [ int alpha^{n-1} (f'^2 + (beta/alpha^2 - G) f^2) dr
///     - J1 alpha^{n-1}(r1) f(r1)^2 - J2 alpha^{n-1}(r2) f(r2)^2 ]
///   / [ int alpha^{n-1} f^2 dr + alpha^{n-1}(r1) f(r1)^2 + alpha^{n-1}(r2) f(r2)^2 ].
inline double rayleigh_quotient(const MixedProblem& p, const std::vector<double>& grid,
                                const std::vector<double>& values,
                                const std::vector<double>& derivative_values) {
    if (grid.size() < 2 || grid.size() != values.size() || grid.size() != derivative_values.size())
        throw ConfigError("rayleigh_quotient: inconsistent sample arrays");
    const double tol = 1e-9 * std::max(1.0, p.r2 - p.r1);
    if (grid.front() > p.r1 + tol || grid.back() < p.r2 - tol)
        throw ConfigError("rayleigh_quotient: samples do not cover [r1, r2]");

    HermiteSpline f(grid, values, derivative_values);
    const int m = p.n - 1;
    auto ap = [&](double r) { return detail::ipow(p.alpha.value(r), m); };

    auto dirichlet = [&](double r) {
        const double a = p.alpha.value(r);
        const double fv = f.value(r);
        const double fd = f.deriv(r);
        return detail::ipow(a, m) * (fd * fd + (p.beta / (a * a) - p.potential(r)) * fv * fv);
    };
    auto mass = [&](double r) {
        const double fv = f.value(r);
        return ap(r) * fv * fv;
    };
    const double i_d = integrate_gl16_on_grid(dirichlet, std::span<const double>(grid));
    const double i_m = integrate_gl16_on_grid(mass, std::span<const double>(grid));

    const double f1 = values.front(), f2 = values.back();
    const double b1 = ap(p.r1) * f1 * f1, b2 = ap(p.r2) * f2 * f2;
    const double num = i_d - p.j1 * b1 - p.j2 * b2;
    const double den = i_m + b1 + b2;
    if (!(den > 1e-300)) throw ConfigError("rayleigh_quotient: trial function is identically zero");
    return num / den;
}

inline double rayleigh_quotient(const MixedProblem& p, const RadialSolution& sol) {
    return rayleigh_quotient(p, sol.grid, sol.values, sol.derivative_values);
}

} // namespace warped
