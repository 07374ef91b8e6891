#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "warped/cli.hpp"
#include "warped/io.hpp"

using namespace warped;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("warped_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_temp(const fs::path& dir, const std::string& name, const std::string& content) {
    const fs::path p = dir / name;
    std::ofstream out(p);
    out << content;
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kBenchmarkConfig = R"({
  "geometry": {"preset": "constant", "alpha": 1.0, "n": 3, "r1": 0.0, "r2": 1.0},
  "fiber": {"type": "round_sphere", "dim": 2, "scale": 1.0},
  "spectrum": {"gamma": 1.0, "fiber_count": 2, "radial_count": 2,
    "potential": 0.0, "J1": 0.0, "J2": 0.0}
})";

const char* kScanConfig = R"({
  "geometry": {"preset": "ads_schwarzschild", "kP": 1.0, "K": 1.0, "E": 0.0, "s_max": 6.0},
  "scan": {"gamma_grid": {"start": 0.5, "stop": 5.5, "count": 4},
    "fiber_count": 2, "convention": "bifvariation", "full_solve": false}
})";

} // namespace

TEST(Config, StrictParsingRejectsUnknownKeys) {
    const auto j = io::json::parse(R"({"geometry": {"preset": "constant"}, "typo_key": 1})");
    try {
        io::parse_config(j);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("typo_key"), std::string::npos);
    }
}

TEST(Config, NestedUnknownKeyNamed) {
    const auto j = io::json::parse(
        R"({"geometry": {"preset": "constant", "alpha": 1.0, "n": 3, "r1": 0, "r2": 1, "bogus": 2},
            "fiber": {"type": "round_sphere"}})");
    const auto cfg = io::parse_config(j);
    try {
        io::build_geometry(cfg);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
    }
}

TEST(Config, TolerancesValidated) {
    const auto j = io::json::parse(
        R"({"geometry": {"preset": "constant", "alpha": 1, "n": 3, "r1": 0, "r2": 1},
            "tolerances": {"ode_rel": -1.0}})");
    EXPECT_THROW(io::parse_config(j), ConfigError);
}

TEST(Config, GammaGridForms) {
    const auto lin = io::parse_gamma_grid(io::json::parse(R"({"start": 1.0, "stop": 2.0, "count": 3})"));
    EXPECT_EQ(lin.values, (std::vector<double>{1.0, 1.5, 2.0}));
    const auto exp = io::parse_gamma_grid(io::json::parse(R"({"values": [0.3, 0.9]})"));
    EXPECT_EQ(exp.values, (std::vector<double>{0.3, 0.9}));
    EXPECT_THROW(io::parse_gamma_grid(io::json::parse(R"({"values": []})")), ConfigError);
    EXPECT_THROW(io::parse_gamma_grid(io::json::parse(R"({"start": 2.0, "stop": 1.0, "count": 3})")),
                 ConfigError);
}

TEST(Config, TabulatedWarpFile) {
    const auto dir = temp_dir("tab");
    const auto path = write_temp(dir, "warp.json", R"({"samples": [
      [0.0, 1.0, 0.0, 0.1], [0.4, 1.01, 0.05, 0.1], [0.8, 1.04, 0.1, 0.1], [1.2, 1.09, 0.15, 0.1]
    ]})");
    const auto warp = io::load_tabulated_warp(path.string());
    EXPECT_NEAR(warp.value(0.4), 1.01, 1e-12);
    EXPECT_TRUE(warp.has_second_deriv());
    fs::remove_all(dir);
}

TEST(Cli, SpectrumBenchmarkFirstRow) {
    const auto dir = temp_dir("spectrum");
    const auto cfg = write_temp(dir, "cfg.json", kBenchmarkConfig);
    const int code = cli::run({"spectrum", "--config", cfg.string(), "--out", dir.string()});
    EXPECT_EQ(code, 0);
    const std::string csv = read_file(dir / "spectrum.csv");
    std::istringstream lines(csv);
    std::string header, first;
    std::getline(lines, header);
    std::getline(lines, first);
    EXPECT_EQ(header, "fiber_index,radial_index,eigenvalue,node_count,admissible");
    // Zero eigenvalue of the constant mode, inadmissible.
    EXPECT_EQ(first.substr(0, 4), "0,1,");
    EXPECT_NE(first.find(",0,false"), std::string::npos);
    const double ev = std::stod(first.substr(4));
    EXPECT_LT(std::abs(ev), 1e-8);
    fs::remove_all(dir);
}

TEST(Cli, MalformedConfigExitsTwo) {
    const auto dir = temp_dir("bad");
    const auto cfg = write_temp(dir, "bad.json", "{ not json");
    EXPECT_EQ(cli::run({"spectrum", "--config", cfg.string(), "--out", dir.string()}), 2);
    const auto cfg2 = write_temp(dir, "unknown.json",
                                 R"({"geometry": {"preset": "constant"}, "wrong": 1})");
    EXPECT_EQ(cli::run({"spectrum", "--config", cfg2.string(), "--out", dir.string()}), 2);
    fs::remove_all(dir);
}

TEST(Cli, ScanGridOutsideRangeExitsTwo) {
    const auto dir = temp_dir("badgrid");
    const auto cfg = write_temp(dir, "cfg.json", R"({
      "geometry": {"preset": "ads_schwarzschild", "kP": 1.0, "K": 1.0, "E": 0.0, "s_max": 6.0},
      "scan": {"gamma_grid": {"values": [0.5, 99.0]}, "fiber_count": 2}
    })");
    EXPECT_EQ(cli::run({"scan", "--config", cfg.string(), "--out", dir.string()}), 2);
    fs::remove_all(dir);
}

TEST(Cli, ScanSchwarzschildAllRigid) {
    const auto dir = temp_dir("scan");
    const auto cfg = write_temp(dir, "cfg.json", kScanConfig);
    EXPECT_EQ(cli::run({"scan", "--config", cfg.string(), "--out", dir.string()}), 0);
    const std::string csv = read_file(dir / "scan.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line); // header
    int rows = 0;
    while (std::getline(lines, line)) {
        EXPECT_NE(line.find("RigidByTheorem"), std::string::npos) << line;
        ++rows;
    }
    EXPECT_EQ(rows, 4);
    fs::remove_all(dir);
}

TEST(Cli, DeterministicCsvAcrossRuns) {
    const auto dir1 = temp_dir("det1");
    const auto dir2 = temp_dir("det2");
    const auto cfg1 = write_temp(dir1, "cfg.json", kBenchmarkConfig);
    const auto cfg2 = write_temp(dir2, "cfg.json", kBenchmarkConfig);
    ASSERT_EQ(cli::run({"spectrum", "--config", cfg1.string(), "--out", dir1.string()}), 0);
    ASSERT_EQ(cli::run({"spectrum", "--config", cfg2.string(), "--out", dir2.string()}), 0);
    EXPECT_EQ(read_file(dir1 / "spectrum.csv"), read_file(dir2 / "spectrum.csv"));
    EXPECT_EQ(read_file(dir1 / "spectrum_meta.json"), read_file(dir2 / "spectrum_meta.json"));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST(Cli, SidecarRoundTripIsExact) {
    const auto dir = temp_dir("roundtrip");
    const auto cfg = write_temp(dir, "cfg.json", kBenchmarkConfig);
    ASSERT_EQ(cli::run({"spectrum", "--config", cfg.string(), "--out", dir.string()}), 0);
    const auto sidecar = io::json::parse(read_file(dir / "spectrum_meta.json"));

    // Recompute the same table in process and compare bit-for-bit.
    const auto parsed = io::load_config(cfg.string());
    const auto geom = io::build_geometry(parsed);
    const auto& sc = *parsed.spectrum;
    SpectrumTable table = assemble(
        geom, sc.gamma, [&](double) { return sc.potential; }, sc.j1, sc.j2, sc.fiber_count,
        sc.radial_count);
    const auto constants = cli::detail::slab_constants(geom, sc.gamma);
    for (auto& e : table.entries)
        e.admissible = admissible(e, constants, geom, sc.gamma, parsed.tolerances.admissibility_tol);

    ASSERT_EQ(sidecar["entries"].size(), table.entries.size());
    for (std::size_t k = 0; k < table.entries.size(); ++k) {
        const auto& je = sidecar["entries"][k];
        const auto& e = table.entries[k];
        EXPECT_EQ(je["fiber_index"].get<int>(), e.fiber_index);
        EXPECT_EQ(je["radial_index"].get<int>(), e.radial_index);
        EXPECT_EQ(je["eigenvalue"].get<double>(), e.value); // bitwise
        EXPECT_EQ(je["node_count"].get<int>(), e.solution.node_count);
        EXPECT_EQ(je["admissible"].get<bool>(), e.admissible);
    }
    EXPECT_EQ(sidecar["floor"].get<double>(), table.floor);
    EXPECT_EQ(sidecar["cutoff_i0"].get<int>(), table.cutoff_i0);
    fs::remove_all(dir);
}

TEST(Cli, AdsSpectrumAllPositive) {
    const auto dir = temp_dir("adsspec");
    const auto cfg = write_temp(dir, "cfg.json", R"({
      "geometry": {"preset": "ads_schwarzschild", "kP": 1.0, "K": 1.0, "E": 0.0, "s_max": 6.0},
      "spectrum": {"gamma": 4.0, "fiber_count": 2, "radial_count": 2, "potential": "jacobi"}
    })");
    ASSERT_EQ(cli::run({"spectrum", "--config", cfg.string(), "--out", dir.string()}), 0);
    std::istringstream lines(read_file(dir / "spectrum.csv"));
    std::string line;
    std::getline(lines, line); // header
    int rows = 0;
    while (std::getline(lines, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const double ev = std::stod(line.substr(c2 + 1));
        EXPECT_GT(ev, 0.0) << line;
        ++rows;
    }
    EXPECT_EQ(rows, 4);
    fs::remove_all(dir);
}

TEST(Cli, ScanSidecarRoundTrip) {
    const auto dir = temp_dir("scanmeta");
    const auto cfg = write_temp(dir, "cfg.json", kScanConfig);
    ASSERT_EQ(cli::run({"scan", "--config", cfg.string(), "--out", dir.string()}), 0);
    const auto sidecar = io::json::parse(read_file(dir / "scan_meta.json"));

    const auto parsed = io::load_config(cfg.string());
    const auto geom = io::build_geometry(parsed);
    const auto& sc = *parsed.scan;
    const auto report = scan(geom, sc.grid.values, sc.fiber_count, sc.convention, sc.full_solve,
                             parsed.tolerances.rigidity());
    ASSERT_EQ(sidecar["records"].size(), report.records.size());
    for (std::size_t k = 0; k < report.records.size(); ++k) {
        const auto& jr = sidecar["records"][k];
        const auto& r = report.records[k];
        EXPECT_EQ(jr["gamma"].get<double>(), r.gamma);           // bitwise
        EXPECT_EQ(jr["H"].get<double>(), r.mean_curvature);      // bitwise
        EXPECT_EQ(jr["a"].get<double>(), r.constants.a);
        EXPECT_EQ(jr["b"].get<double>(), r.constants.b);
        EXPECT_EQ(jr["cutoff_i0"].get<int>(), r.cutoff_i0);
        EXPECT_EQ(jr["classification"].get<std::string>(), to_string(r.classification));
    }
    EXPECT_EQ(sidecar["scalar_curvature"].get<double>(), report.scalar_curvature);
    fs::remove_all(dir);
}

TEST(Cli, DegradedTolerancesFailRayleighWithExitOne) {
    const auto dir = temp_dir("degraded");
    const auto cfg = write_temp(dir, "cfg.json", R"({
      "geometry": {"preset": "constant", "alpha": 1.0, "n": 3, "r1": 0.0, "r2": 1.0},
      "fiber": {"type": "round_sphere"},
      "tolerances": {"ode_rel": 1e-2, "ode_abs": 1e-4},
      "verify": {"checks": ["rayleigh"]}
    })");
    EXPECT_EQ(cli::run({"verify", "--config", cfg.string()}), 1);
    fs::remove_all(dir);
}

TEST(Cli, VerifyEmptySelection) {
    const auto dir = temp_dir("verify0");
    const auto cfg = write_temp(dir, "cfg.json", R"({
      "geometry": {"preset": "constant", "alpha": 1.0, "n": 3, "r1": 0.0, "r2": 1.0},
      "fiber": {"type": "round_sphere"},
      "verify": {"checks": []}
    })");
    EXPECT_EQ(cli::run({"verify", "--config", cfg.string()}), 0);
    fs::remove_all(dir);
}

TEST(Cli, VerifyUnknownCheckExitsTwo) {
    const auto dir = temp_dir("verifybad");
    const auto cfg = write_temp(dir, "cfg.json", R"({
      "geometry": {"preset": "constant", "alpha": 1.0, "n": 3, "r1": 0.0, "r2": 1.0},
      "verify": {"checks": ["no_such_check"]}
    })");
    EXPECT_EQ(cli::run({"verify", "--config", cfg.string()}), 2);
    fs::remove_all(dir);
}

TEST(Cli, MissingSubcommandOrConfig) {
    EXPECT_EQ(cli::run(std::vector<std::string>{}), 2);
    EXPECT_EQ(cli::run({"spectrum"}), 2);
    EXPECT_EQ(cli::run({"spectrum", "--config", "/nonexistent/path.json"}), 2);
}
