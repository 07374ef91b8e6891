#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "warped/errors.hpp"
#include "warped/io.hpp"
#include "warped/verify.hpp"

namespace warped::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvariantFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitSolverError = 3;

namespace detail {

inline ConstraintConstants slab_constants(const WarpedGeometry& geom, double gamma,
                                          double curvature_zero_tol = 1e-10) {
    const double R = verify_constant_scalar(geom, 1e300).value;
    const double H = mean_curvature(geom, gamma);
    const double V = slab_volume(geom, gamma);
    const double A = slab_area(geom, gamma);
    try {
        return compute_ab(geom.n(), R, H, V, A, curvature_zero_tol);
    } catch (const DegenerateConstantsError&) {
        return degenerate_constants(V, A);
    }
}

inline int cmd_spectrum(const io::RunConfig& cfg, const std::string& out_dir) {
    if (!cfg.spectrum) throw ConfigError("spectrum: config has no 'spectrum' block");
    const auto& sc = *cfg.spectrum;
    const WarpedGeometry geom = io::build_geometry(cfg);

    double g_value, j1, j2;
    if (sc.jacobi_potential) {
        RigidityOptions ropt = cfg.tolerances.rigidity();
        const JacobiProblem jp = jacobi_problem(geom, sc.gamma, sc.convention, ropt);
        g_value = jp.base.potential(geom.r1());
        j1 = jp.base.j1;
        j2 = jp.base.j2;
    } else {
        g_value = sc.potential;
        j1 = sc.j1;
        j2 = sc.j2;
    }

    AssembleOptions opt;
    opt.fast = sc.fast;
    opt.solver = cfg.tolerances.solver();
    SpectrumTable table =
        assemble(geom, sc.gamma, [g_value](double) { return g_value; }, j1, j2, sc.fiber_count,
                 sc.radial_count, opt);

    const ConstraintConstants constants = slab_constants(geom, sc.gamma);
    for (auto& e : table.entries)
        e.admissible = admissible(e, constants, geom, sc.gamma, cfg.tolerances.admissibility_tol);

    std::filesystem::create_directories(out_dir);
    const auto csv_path = std::filesystem::path(out_dir) / "spectrum.csv";
    const auto meta_path = std::filesystem::path(out_dir) / "spectrum_meta.json";
    io::write_file(csv_path.string(), io::spectrum_csv(table));
    io::write_file(meta_path.string(),
                   io::spectrum_sidecar(table, sc.gamma, cfg.tolerances).dump(2) + "\n");
    std::printf("spectrum: %zu entries (cutoff_i0 = %d, floor = %s)\n", table.entries.size(),
                table.cutoff_i0, format_double(table.floor).c_str());
    std::printf("wrote %s and %s\n", csv_path.string().c_str(), meta_path.string().c_str());
    return kExitOk;
}

inline int cmd_scan(const io::RunConfig& cfg, const std::string& out_dir) {
    if (!cfg.scan) throw ConfigError("scan: config has no 'scan' block");
    const auto& sc = *cfg.scan;
    const WarpedGeometry geom = io::build_geometry(cfg);

    RigidityOptions opt = cfg.tolerances.rigidity();
    const RigidityReport report =
        scan(geom, sc.grid.values, sc.fiber_count, sc.convention, sc.full_solve, opt);

    std::filesystem::create_directories(out_dir);
    const auto csv_path = std::filesystem::path(out_dir) / "scan.csv";
    const auto meta_path = std::filesystem::path(out_dir) / "scan_meta.json";
    io::write_file(csv_path.string(), io::scan_csv(report));
    io::write_file(meta_path.string(), io::scan_sidecar(report, cfg.tolerances).dump(2) + "\n");

    int candidates = 0;
    for (const auto& r : report.records)
        if (r.classification == Classification::DegeneracyCandidate) ++candidates;
    std::printf("scan: %zu gamma points, R = %s, %d degeneracy candidate(s)\n",
                report.records.size(), format_double(report.scalar_curvature).c_str(), candidates);
    std::printf("wrote %s and %s\n", csv_path.string().c_str(), meta_path.string().c_str());
    return kExitOk;
}

inline int cmd_verify(const io::RunConfig& cfg) {
    std::vector<std::string> names = verify::default_checks();
    if (cfg.verify && cfg.verify->explicit_selection) names = cfg.verify->checks;
    if (names.empty()) {
        std::printf("0 checks\n");
        return kExitOk;
    }
    verify::VerifyOptions opt;
    opt.solver = cfg.tolerances.solver();
    int failed = 0;
    std::size_t index = 0;
    for (const auto& name : names) {
        const auto res = verify::run_check(name, opt);
        ++index;
        std::printf("[%2zu/%zu] %-16s %-4s residual=%-12s threshold=%-10s %s\n", index,
                    names.size(), res.name.c_str(), res.passed ? "PASS" : "FAIL",
                    format_double(res.residual).c_str(), format_double(res.threshold).c_str(),
                    res.detail.c_str());
        if (!res.passed) ++failed;
    }
    std::printf("%zu checks, %zu passed, %d failed\n", names.size(), names.size() - failed,
                failed);
    return failed == 0 ? kExitOk : kExitInvariantFailure;
}

} // namespace detail

/// Entry point shared by the binary and the test suite.
inline int run(const std::vector<std::string>& args) {
    CLI::App app{"mixed-eigenvalue spectra and rigidity scans on warped product slabs",
                 "warped-rigidity"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";

    auto* spectrum_cmd = app.add_subcommand("spectrum", "eigenvalue table of one slab");
    spectrum_cmd->add_option("--config", config_path, "JSON config path")->required();
    spectrum_cmd->add_option("--out", out_dir, "output directory");

    auto* scan_cmd = app.add_subcommand("scan", "rigidity classification over a gamma grid");
    scan_cmd->add_option("--config", config_path, "JSON config path")->required();
    scan_cmd->add_option("--out", out_dir, "output directory");

    auto* verify_cmd = app.add_subcommand("verify", "run the library invariant checks");
    verify_cmd->add_option("--config", config_path, "JSON config path (optional)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    }

    try {
        io::RunConfig cfg;
        if (!config_path.empty())
            cfg = io::load_config(config_path);
        if (spectrum_cmd->parsed()) return detail::cmd_spectrum(cfg, out_dir);
        if (scan_cmd->parsed()) return detail::cmd_scan(cfg, out_dir);
        if (verify_cmd->parsed()) return detail::cmd_verify(cfg);
        throw ConfigError("no subcommand given");
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return kExitSolverError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolverError;
    }
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace warped::cli
