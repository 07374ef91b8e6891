#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "warped/rigidity.hpp"

using namespace warped;

namespace {

// Constant-alpha geometry with R = 2 R_P / c^2 (n = 3) and H = 0 everywhere.
WarpedGeometry flat_geometry(double c, double r2, FiberSpec fiber) {
    return WarpedGeometry(3, 0.0, r2, WarpFunction::constant(c), std::move(fiber));
}

// Positive-R synthetic: alpha = 1, fiber curvature 2 => R = 4, G = R/2 = 2.
// Fiber eigenvalues 0 and 1 sit below G alpha^2 = 2, eigenvalue 7 above it,
// so the cutoff is i0 = 1 and the two detectors have closed forms
//   D_0(gamma) = w0 sin(w0 gamma), w0 = sqrt(2),
//   D_1(gamma) = w1 sin(w1 gamma), w1 = 1.
WarpedGeometry positive_r_geometry(double r2) {
    return flat_geometry(1.0, r2,
                         FiberSpec::explicit_spectrum(2, 2.0, 1.0, {{0.0, 1}, {1.0, 5}, {7.0, 3}}));
}

std::vector<double> uniform_grid(const WarpedGeometry& geom, int count, double lo_frac = 0.03,
                                 double hi_frac = 0.97) {
    std::vector<double> grid;
    const double span = geom.r2() - geom.r1();
    for (int k = 0; k < count; ++k)
        grid.push_back(geom.r1() + span * (lo_frac + (hi_frac - lo_frac) * k / (count - 1)));
    return grid;
}

} // namespace

// ---------------------------------------------------------------------------
// jacobi_problem

TEST(JacobiProblem, ConventionCoefficients) {
    const auto geom = ads_schwarzschild(1.0, 1.0, 1.0, 6.0); // R = -6
    const double gamma = 0.5 * geom.r2();
    const double h = mean_curvature(geom, gamma);

    const auto bif = jacobi_problem(geom, gamma, Convention::PerBifvariation);
    EXPECT_NEAR(bif.base.potential(0.1), -3.0, 1e-8);
    EXPECT_NEAR(bif.base.j2, h / 2.0, 1e-12);
    EXPECT_DOUBLE_EQ(bif.base.j1, 0.0);

    const auto s52 = jacobi_problem(geom, gamma, Convention::PerSection52);
    EXPECT_NEAR(s52.base.potential(0.1), -6.0, 1e-8);
    EXPECT_NEAR(s52.base.j2, h, 1e-12);
    EXPECT_DOUBLE_EQ(s52.base.j1, 0.0);

    // The convention switch changes G and J2 by exactly the factor n - 1.
    EXPECT_NEAR(s52.base.potential(0.3), (geom.n() - 1) * bif.base.potential(0.3), 1e-10);
    EXPECT_NEAR(s52.base.j2, (geom.n() - 1) * bif.base.j2, 1e-12);
}

TEST(JacobiProblem, SchwarzschildHasZeroPotential) {
    const auto geom = ads_schwarzschild(1.0, 1.0, 0.0, 8.0); // R = 0
    const auto jp = jacobi_problem(geom, 0.6 * geom.r2());
    EXPECT_NEAR(jp.base.potential(1.0), 0.0, 1e-9);
    EXPECT_NEAR(jp.base.potential(1.0), 0.0, 1e-9);
}

TEST(JacobiProblem, RejectsNonMinimalInnerSlice) {
    // cosh warp has alpha'(r1) = sinh(0.3) != 0 on [0.3, 1.3].
    std::vector<double> r, a, ad, add;
    for (int i = 0; i <= 120; ++i) {
        const double x = 0.3 + i / 120.0;
        r.push_back(x);
        a.push_back(std::cosh(x));
        ad.push_back(std::sinh(x));
        add.push_back(std::cosh(x));
    }
    const WarpedGeometry geom(3, 0.3, 1.3, WarpFunction::tabulated(r, a, ad, add),
                              FiberSpec::explicit_spectrum(2, -1.0, 1.0, {{0.0, 1}}));
    EXPECT_THROW(jacobi_problem(geom, 1.0), SolverError);
}

// ---------------------------------------------------------------------------
// detector

TEST(Detector, FlatZeroMode) {
    // alpha = 1, R = 0 (flat torus fiber), beta = 0: the constant function
    // solves the mu = 0 system exactly, so D = 0 at every gamma.
    const auto geom = flat_geometry(1.0, 2.0, FiberSpec::flat_torus({1.0, 1.0}));
    for (double gamma : {0.5, 1.2, 1.9})
        EXPECT_NEAR(detector(geom, gamma, 0.0), 0.0, 1e-10);
}

TEST(Detector, ClosedFormOnPositiveR) {
    // Backward solve from gamma with f(gamma)=1, f'(gamma)=0 gives
    // f = cos(w (r - gamma)), hence D = w sin(w gamma).
    const auto geom = positive_r_geometry(4.0);
    for (double gamma : {0.8, 1.7, 3.1}) {
        const double w0 = std::sqrt(2.0);
        EXPECT_NEAR(detector(geom, gamma, 0.0), w0 * std::sin(w0 * gamma), 1e-8);
        EXPECT_NEAR(detector(geom, gamma, 1.0), std::sin(gamma), 1e-8);
    }
}

TEST(Detector, WronskianRelationToForwardMismatch) {
    // Backward detector and forward mismatch at trial 0 compute the same root
    // condition; the constant SL Wronskian ties their values together:
    //   alpha(r1)^{n-1} D_bwd = -alpha(gamma)^{n-1} D_fwd.
    const auto geom = ads_schwarzschild(1.0, 1.0, 0.0, 8.0);
    const double gamma = 0.55 * geom.r2();
    const double beta1 = fiber_eigenvalue(geom.fiber(), 1);
    const auto jp = jacobi_problem(geom, gamma);

    const double d_bwd = detector(geom, gamma, beta1);
    const double d_fwd = mismatch(jp.for_fiber_mode(beta1), 0.0);
    EXPECT_GT(std::abs(d_bwd), 1e-6);

    const int m = geom.n() - 1;
    const double ap1 = std::pow(geom.alpha().value(geom.r1()), m);
    const double ap2 = std::pow(geom.alpha().value(gamma), m);
    EXPECT_NEAR(ap1 * d_bwd, -ap2 * d_fwd, 1e-8 * (1.0 + std::abs(ap2 * d_fwd)));
}

TEST(Detector, AgreesWithSpectrumZero) {
    // Where find_eigenvalues reports a zero eigenvalue, the detector vanishes.
    const auto geom = positive_r_geometry(4.0);
    const double gamma = std::numbers::pi; // D_1 root: zero eigenvalue for mode 1
    const auto jp = jacobi_problem(geom, gamma);
    const auto evs = find_eigenvalues(jp.for_fiber_mode(1.0), 2);
    double closest = 1e300;
    for (const auto& e : evs) closest = std::min(closest, std::abs(e.value));
    EXPECT_LT(closest, 1e-7);
    EXPECT_LT(std::abs(detector(geom, gamma, 1.0)), 1e-7);
}

// ---------------------------------------------------------------------------
// scan

TEST(Scan, SchwarzschildIsRigidByTheorem) {
    const auto geom = ads_schwarzschild(1.0, 1.0, 0.0, 8.0);
    const auto grid = uniform_grid(geom, 8);
    const auto report = scan(geom, grid, 3, Convention::PerBifvariation, true);
    ASSERT_EQ(report.records.size(), grid.size());
    for (const auto& rec : report.records) {
        EXPECT_EQ(rec.classification, Classification::RigidByTheorem) << "gamma " << rec.gamma;
        EXPECT_LT(rec.mean_curvature, 0.0);
        EXPECT_GT(rec.min_admissible_eigenvalue, 0.0);
        EXPECT_EQ(rec.negative_admissible_count, 0);
        EXPECT_TRUE(rec.zero_modes.empty());
    }
    EXPECT_TRUE(report.detector_roots.empty());
}

TEST(Scan, NegativeFiberConstantAlphaIsRigid) {
    // Constant alpha with R_P < 0: R < 0 and H = 0, rigid by the theorem.
    const auto geom = flat_geometry(
        1.0, 2.0, FiberSpec::explicit_spectrum(2, -1.0, 1.0, {{0.0, 1}, {1.0, 2}, {3.0, 2}}));
    const auto report = scan(geom, uniform_grid(geom, 5), 2);
    for (const auto& rec : report.records)
        EXPECT_EQ(rec.classification, Classification::RigidByTheorem);
    EXPECT_NEAR(report.scalar_curvature, -2.0, 1e-9);
}

TEST(Scan, PositiveRDetectorRootsAgainstOracle) {
    // D_0 has roots at gamma = k pi / sqrt(2); D_1 at gamma = k pi.
    const auto geom = positive_r_geometry(4.0);
    const auto grid = uniform_grid(geom, 14, 0.05, 0.95);
    const auto report = scan(geom, grid, 2, Convention::PerBifvariation, false);

    const double root0 = std::numbers::pi / std::sqrt(2.0);
    const double root1 = std::numbers::pi;
    bool saw_mode1_root = false;
    for (const auto& root : report.detector_roots) {
        if (root.fiber_index == 0) {
            const double nearest =
                std::round(root.gamma / root0) * root0;
            EXPECT_NEAR(root.gamma, nearest, 1e-6);
        } else {
            saw_mode1_root = true;
            EXPECT_NEAR(root.gamma, root1, 1e-6);
        }
    }
    EXPECT_TRUE(saw_mode1_root);

    // Admissible zero crossings (mode >= 1) mark their bracketing grid points.
    bool candidate_near_pi = false;
    for (const auto& rec : report.records) {
        if (std::abs(rec.gamma - root1) < 0.5 &&
            rec.classification == Classification::DegeneracyCandidate)
            candidate_near_pi = true;
    }
    EXPECT_TRUE(candidate_near_pi);
}

TEST(Scan, GridValidation) {
    const auto geom = ads_schwarzschild(1.0, 1.0, 0.0, 6.0);
    EXPECT_THROW(scan(geom, {}, 2), ConfigError);
    EXPECT_THROW(scan(geom, {0.5, 0.4}, 2), ConfigError);
    EXPECT_THROW(scan(geom, {geom.r2() + 1.0}, 2), ConfigError);
    EXPECT_THROW(scan(geom, {geom.r1()}, 2), ConfigError);
}

TEST(Scan, TheoremConsistencyFullSolve) {
    // Wherever the theorem hypotheses hold, the solved admissible spectrum is
    // positive (rigid presets).
    for (const auto& geom :
         {ads_schwarzschild(1.0, 1.0, 0.0, 7.0), ads_schwarzschild(1.0, 1.0, 1.0, 5.0)}) {
        const auto report = scan(geom, uniform_grid(geom, 4), 2, Convention::PerBifvariation, true);
        for (const auto& rec : report.records) {
            EXPECT_EQ(rec.classification, Classification::RigidByTheorem);
            EXPECT_GT(rec.min_admissible_eigenvalue, 0.0);
            EXPECT_EQ(rec.negative_admissible_count, 0);
        }
    }
}

TEST(Scan, FlatFamilyIsRigidNumerically) {
    // R = H = 0 (flat torus fiber): the theorem does not apply; the zero mode
    // is inadmissible and the solved admissible spectrum is positive.
    const auto geom = flat_geometry(1.0, 2.0, FiberSpec::flat_torus({1.0, 1.0}));
    const auto report = scan(geom, uniform_grid(geom, 4), 2, Convention::PerBifvariation, true);
    for (const auto& rec : report.records) {
        EXPECT_TRUE(rec.constants.degenerate);
        EXPECT_EQ(rec.classification, Classification::RigidNumerically) << "gamma " << rec.gamma;
        EXPECT_GT(rec.min_admissible_eigenvalue, 0.0);
    }
}

// ---------------------------------------------------------------------------
// quadratic_form

TEST(QuadraticForm, EigenpairResidualVanishes) {
    const auto geom = ads_schwarzschild(1.0, 1.0, 0.0, 6.0);
    const double gamma = 0.5 * geom.r2();
    const auto jp = jacobi_problem(geom, gamma);
    const auto constants = compute_ab(3, 0.0, jp.mean_curvature, slab_volume(geom, gamma),
                                      slab_area(geom, gamma));
    for (int i = 0; i < 3; ++i) {
        auto evs = find_eigenvalues(jp.for_fiber_mode(fiber_eigenvalue(geom.fiber(), i)), 2);
        for (auto& e : evs) {
            e.fiber_index = i;
            const auto qf = quadratic_form_terms(geom, gamma, e, constants);
            EXPECT_LT(std::abs(qf.residual), 1e-6 * (1.0 + std::abs(e.value)))
                << "mode " << i << " value " << e.value;
            EXPECT_GT(qf.e, 0.0);
        }
    }
}

TEST(QuadraticForm, ZeroEigenvalueGivesZeroQ) {
    // Flat slab: the constant mode has mu = 0, so Q itself must vanish.
    const auto geom = flat_geometry(1.0, 1.0, FiberSpec::flat_torus({1.0, 1.0}));
    const auto jp = jacobi_problem(geom, 0.8);
    auto evs = find_eigenvalues(jp.for_fiber_mode(0.0), 1);
    ASSERT_LT(std::abs(evs[0].value), 1e-8);
    const auto qf =
        quadratic_form_terms(geom, 0.8, evs[0], degenerate_constants(1.0, 1.0));
    EXPECT_LT(std::abs(qf.q), 1e-6);
    EXPECT_GT(qf.e, 0.0);
}

TEST(QuadraticForm, ConstantTrialOnFlatSlab) {
    // Hand-built constant pair on the flat slab: every Q term vanishes.
    const auto geom = flat_geometry(1.0, 1.0, FiberSpec::flat_torus({1.0, 1.0}));
    Eigenpair pair;
    pair.fiber_index = 0;
    pair.value = 0.0;
    for (int i = 0; i <= 32; ++i) {
        pair.solution.grid.push_back(i / 32.0 * 0.8);
        pair.solution.values.push_back(1.0);
        pair.solution.derivative_values.push_back(0.0);
    }
    const auto qf = quadratic_form_terms(geom, 0.8, pair, degenerate_constants(1.0, 1.0));
    EXPECT_NEAR(qf.q, 0.0, 1e-12);
    EXPECT_GT(qf.e, 0.0);
}
