#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "warped/errors.hpp"
#include "warped/fiber.hpp"
#include "warped/geometry.hpp"
#include "warped/numerics.hpp"
#include "warped/rigidity.hpp"
#include "warped/slp.hpp"
#include "warped/spectrum.hpp"

namespace warped::io {

using json = nlohmann::json;

namespace detail {

inline void check_keys(const json& obj, const std::string& context,
                       std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(context + ": expected a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) ok = true;
        if (!ok) throw ConfigError(context + ": unknown key '" + it.key() + "'");
    }
}

inline const json& require(const json& obj, const std::string& context, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(context + ": missing key '" + key + "'");
    return *it;
}

inline double number(const json& v, const std::string& context) {
    if (!v.is_number()) throw ConfigError(context + ": expected a number");
    return v.get<double>();
}

inline int integer(const json& v, const std::string& context) {
    if (!v.is_number_integer()) throw ConfigError(context + ": expected an integer");
    return v.get<int>();
}

inline std::string text(const json& v, const std::string& context) {
    if (!v.is_string()) throw ConfigError(context + ": expected a string");
    return v.get<std::string>();
}

} // namespace detail

struct ToleranceConfig {
    double ode_rel = 1e-10;
    double ode_abs = 1e-12;
    double root_tol = 1e-10;
    double detector_tol = 1e-6;
    double admissibility_tol = 1e-7;

    SolverOptions solver() const {
        SolverOptions s;
        s.ode_rel = ode_rel;
        s.ode_abs = ode_abs;
        s.root_tol = root_tol;
        return s;
    }
    RigidityOptions rigidity() const {
        RigidityOptions r;
        r.solver = solver();
        r.detector_tol = detector_tol;
        r.admissibility_tol = admissibility_tol;
        return r;
    }
};

struct GammaGridConfig {
    std::vector<double> values; // resolved explicit list
};

struct SpectrumCommandConfig {
    double gamma = 0.0;
    int fiber_count = 1;
    int radial_count = 1;
    bool fast = false;
    bool jacobi_potential = true; // potential derived from the Jacobi operator
    double potential = 0.0;       // constant G when not jacobi
    double j1 = 0.0, j2 = 0.0;    // used when not jacobi
    Convention convention = Convention::PerBifvariation;
};

struct ScanCommandConfig {
    GammaGridConfig grid;
    int fiber_count = 4;
    Convention convention = Convention::PerBifvariation;
    bool full_solve = false;
};

struct VerifyCommandConfig {
    std::vector<std::string> checks;
    bool explicit_selection = false;
};

struct RunConfig {
    json geometry;
    std::optional<json> fiber_override;
    ToleranceConfig tolerances;
    std::optional<SpectrumCommandConfig> spectrum;
    std::optional<ScanCommandConfig> scan;
    std::optional<VerifyCommandConfig> verify;
};

inline Convention parse_convention(const json& v, const std::string& context) {
    const std::string s = detail::text(v, context);
    if (s == "bifvariation") return Convention::PerBifvariation;
    if (s == "section52") return Convention::PerSection52;
    throw ConfigError(context + ": convention must be 'bifvariation' or 'section52'");
}

inline FiberSpec parse_fiber(const json& f) {
    const std::string ctx = "fiber";
    const std::string type = detail::text(detail::require(f, ctx, "type"), ctx + ".type");
    if (type == "round_sphere") {
        detail::check_keys(f, ctx, {"type", "dim", "scale"});
        const int dim = f.contains("dim") ? detail::integer(f["dim"], ctx + ".dim") : 2;
        const double scale =
            f.contains("scale") ? detail::number(f["scale"], ctx + ".scale") : 1.0;
        return FiberSpec::round_sphere(dim, scale);
    }
    if (type == "flat_torus") {
        detail::check_keys(f, ctx, {"type", "lengths"});
        const json& ls = detail::require(f, ctx, "lengths");
        if (!ls.is_array() || ls.empty()) throw ConfigError(ctx + ".lengths: expected an array");
        std::vector<double> lengths;
        for (const auto& v : ls) lengths.push_back(detail::number(v, ctx + ".lengths"));
        return FiberSpec::flat_torus(std::move(lengths));
    }
    if (type == "explicit") {
        detail::check_keys(f, ctx, {"type", "dim", "curvature", "volume", "eigenvalues"});
        const int dim = detail::integer(detail::require(f, ctx, "dim"), ctx + ".dim");
        const double curv =
            detail::number(detail::require(f, ctx, "curvature"), ctx + ".curvature");
        const double vol = detail::number(detail::require(f, ctx, "volume"), ctx + ".volume");
        const json& evs = detail::require(f, ctx, "eigenvalues");
        if (!evs.is_array()) throw ConfigError(ctx + ".eigenvalues: expected an array");
        std::vector<FiberEigenvalue> list;
        for (const auto& pair : evs) {
            if (!pair.is_array() || pair.size() != 2)
                throw ConfigError(ctx + ".eigenvalues: expected [value, multiplicity] pairs");
            list.push_back({detail::number(pair[0], ctx + ".eigenvalues"),
                            detail::integer(pair[1], ctx + ".eigenvalues")});
        }
        return FiberSpec::explicit_spectrum(dim, curv, vol, std::move(list));
    }
    throw ConfigError(ctx + ".type: unknown fiber type '" + type + "'");
}

/// Tabulated warp file: {"samples": [[r, alpha, alpha', alpha''?], ...]}.
inline WarpFunction load_tabulated_warp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("tabulated warp: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("tabulated warp '" + path + "': " + e.what());
    }
    detail::check_keys(j, "tabulated warp file", {"samples"});
    const json& rows = detail::require(j, "tabulated warp file", "samples");
    if (!rows.is_array() || rows.size() < 4)
        throw ConfigError("tabulated warp file: need an array of at least 4 samples");
    std::vector<double> r, a, ad, add;
    bool has_add = true;
    for (const auto& row : rows) {
        if (!row.is_array() || (row.size() != 3 && row.size() != 4))
            throw ConfigError("tabulated warp file: each sample must be [r, a, a', a''?]");
        r.push_back(detail::number(row[0], "samples"));
        a.push_back(detail::number(row[1], "samples"));
        ad.push_back(detail::number(row[2], "samples"));
        if (row.size() == 4)
            add.push_back(detail::number(row[3], "samples"));
        else
            has_add = false;
    }
    if (has_add) return WarpFunction::tabulated(r, a, ad, add);
    return WarpFunction::tabulated(r, a, ad);
}

inline GammaGridConfig parse_gamma_grid(const json& g) {
    const std::string ctx = "scan.gamma_grid";
    GammaGridConfig out;
    if (g.contains("values")) {
        detail::check_keys(g, ctx, {"values"});
        const json& vs = g["values"];
        if (!vs.is_array() || vs.empty())
            throw ConfigError(ctx + ".values: expected a nonempty array");
        for (const auto& v : vs) out.values.push_back(detail::number(v, ctx + ".values"));
        return out;
    }
    detail::check_keys(g, ctx, {"start", "stop", "count"});
    const double start = detail::number(detail::require(g, ctx, "start"), ctx + ".start");
    const double stop = detail::number(detail::require(g, ctx, "stop"), ctx + ".stop");
    const int count = detail::integer(detail::require(g, ctx, "count"), ctx + ".count");
    if (count < 1) throw ConfigError(ctx + ".count: must be >= 1");
    if (!(start < stop)) throw ConfigError(ctx + ": need start < stop");
    for (int i = 0; i < count; ++i)
        out.values.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
    return out;
}

inline RunConfig parse_config(const json& j) {
    detail::check_keys(j, "config", {"geometry", "fiber", "tolerances", "spectrum", "scan", "verify"});
    RunConfig cfg;
    cfg.geometry = detail::require(j, "config", "geometry");

    if (j.contains("fiber")) cfg.fiber_override = j["fiber"];

    if (j.contains("tolerances")) {
        const json& t = j["tolerances"];
        detail::check_keys(t, "tolerances",
                           {"ode_rel", "ode_abs", "root_tol", "detector_tol", "admissibility_tol"});
        auto grab = [&](const char* key, double& field) {
            if (t.contains(key)) {
                field = detail::number(t[key], std::string("tolerances.") + key);
                if (!(field > 0.0))
                    throw ConfigError(std::string("tolerances.") + key + ": must be positive");
            }
        };
        grab("ode_rel", cfg.tolerances.ode_rel);
        grab("ode_abs", cfg.tolerances.ode_abs);
        grab("root_tol", cfg.tolerances.root_tol);
        grab("detector_tol", cfg.tolerances.detector_tol);
        grab("admissibility_tol", cfg.tolerances.admissibility_tol);
    }

    if (j.contains("spectrum")) {
        const json& s = j["spectrum"];
        detail::check_keys(s, "spectrum",
                           {"gamma", "fiber_count", "radial_count", "fast", "potential", "J1",
                            "J2", "convention"});
        SpectrumCommandConfig sc;
        sc.gamma = detail::number(detail::require(s, "spectrum", "gamma"), "spectrum.gamma");
        sc.fiber_count =
            detail::integer(detail::require(s, "spectrum", "fiber_count"), "spectrum.fiber_count");
        sc.radial_count = detail::integer(detail::require(s, "spectrum", "radial_count"),
                                          "spectrum.radial_count");
        if (sc.fiber_count < 1 || sc.radial_count < 1)
            throw ConfigError("spectrum: fiber_count and radial_count must be >= 1");
        if (s.contains("fast")) {
            if (!s["fast"].is_boolean()) throw ConfigError("spectrum.fast: expected a boolean");
            sc.fast = s["fast"].get<bool>();
        }
        if (s.contains("convention"))
            sc.convention = parse_convention(s["convention"], "spectrum.convention");
        if (s.contains("potential")) {
            const json& g = s["potential"];
            if (g.is_string()) {
                if (g.get<std::string>() != "jacobi")
                    throw ConfigError("spectrum.potential: expected a number or 'jacobi'");
                sc.jacobi_potential = true;
            } else {
                sc.jacobi_potential = false;
                sc.potential = detail::number(g, "spectrum.potential");
                sc.j1 = detail::number(detail::require(s, "spectrum", "J1"), "spectrum.J1");
                sc.j2 = detail::number(detail::require(s, "spectrum", "J2"), "spectrum.J2");
            }
        }
        cfg.spectrum = sc;
    }

    if (j.contains("scan")) {
        const json& s = j["scan"];
        detail::check_keys(s, "scan", {"gamma_grid", "fiber_count", "convention", "full_solve"});
        ScanCommandConfig sc;
        sc.grid = parse_gamma_grid(detail::require(s, "scan", "gamma_grid"));
        if (s.contains("fiber_count"))
            sc.fiber_count = detail::integer(s["fiber_count"], "scan.fiber_count");
        if (sc.fiber_count < 1) throw ConfigError("scan.fiber_count: must be >= 1");
        if (s.contains("convention"))
            sc.convention = parse_convention(s["convention"], "scan.convention");
        if (s.contains("full_solve")) {
            if (!s["full_solve"].is_boolean())
                throw ConfigError("scan.full_solve: expected a boolean");
            sc.full_solve = s["full_solve"].get<bool>();
        }
        cfg.scan = sc;
    }

    if (j.contains("verify")) {
        const json& v = j["verify"];
        detail::check_keys(v, "verify", {"checks"});
        VerifyCommandConfig vc;
        if (v.contains("checks")) {
            const json& cs = v["checks"];
            if (!cs.is_array()) throw ConfigError("verify.checks: expected an array");
            vc.explicit_selection = true;
            for (const auto& c : cs) vc.checks.push_back(detail::text(c, "verify.checks"));
        }
        cfg.verify = vc;
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

/// Builds the geometry described by the config, applying the fiber override
/// when present.
inline WarpedGeometry build_geometry(const RunConfig& cfg) {
    const json& g = cfg.geometry;
    const std::string ctx = "geometry";
    const std::string preset = detail::text(detail::require(g, ctx, "preset"), ctx + ".preset");
    std::optional<FiberSpec> fiber;
    if (cfg.fiber_override) fiber = parse_fiber(*cfg.fiber_override);

    if (preset == "ads_schwarzschild") {
        detail::check_keys(g, ctx, {"preset", "kP", "K", "E", "s_max"});
        const double kP = g.contains("kP") ? detail::number(g["kP"], ctx + ".kP") : 1.0;
        const double K = detail::number(detail::require(g, ctx, "K"), ctx + ".K");
        const double E = detail::number(detail::require(g, ctx, "E"), ctx + ".E");
        const double s_max = detail::number(detail::require(g, ctx, "s_max"), ctx + ".s_max");
        WarpedGeometry geom = ads_schwarzschild(kP, K, E, s_max);
        if (fiber)
            return WarpedGeometry(geom.n(), geom.r1(), geom.r2(), geom.alpha(), *fiber);
        return geom;
    }
    if (preset == "constant") {
        detail::check_keys(g, ctx, {"preset", "alpha", "n", "r1", "r2"});
        const double alpha = detail::number(detail::require(g, ctx, "alpha"), ctx + ".alpha");
        const int n = detail::integer(detail::require(g, ctx, "n"), ctx + ".n");
        const double r1 = detail::number(detail::require(g, ctx, "r1"), ctx + ".r1");
        const double r2 = detail::number(detail::require(g, ctx, "r2"), ctx + ".r2");
        if (!fiber) throw ConfigError("geometry: the constant preset requires a fiber block");
        return WarpedGeometry(n, r1, r2, WarpFunction::constant(alpha), *fiber);
    }
    if (preset == "tabulated") {
        detail::check_keys(g, ctx, {"preset", "path", "n", "r1", "r2"});
        const std::string path = detail::text(detail::require(g, ctx, "path"), ctx + ".path");
        const int n = detail::integer(detail::require(g, ctx, "n"), ctx + ".n");
        WarpFunction alpha = load_tabulated_warp(path);
        const double r1 =
            g.contains("r1") ? detail::number(g["r1"], ctx + ".r1") : alpha.domain_lo();
        const double r2 =
            g.contains("r2") ? detail::number(g["r2"], ctx + ".r2") : alpha.domain_hi();
        if (!fiber) throw ConfigError("geometry: the tabulated preset requires a fiber block");
        return WarpedGeometry(n, r1, r2, std::move(alpha), *fiber);
    }
    throw ConfigError("geometry.preset: unknown preset '" + preset + "'");
}

// ---------------------------------------------------------------------------
// Serialization

inline json tolerances_json(const ToleranceConfig& t) {
    return json{{"ode_rel", t.ode_rel},
                {"ode_abs", t.ode_abs},
                {"root_tol", t.root_tol},
                {"detector_tol", t.detector_tol},
                {"admissibility_tol", t.admissibility_tol}};
}

inline std::string spectrum_csv(const SpectrumTable& table) {
    std::string out = "fiber_index,radial_index,eigenvalue,node_count,admissible\n";
    for (const auto& e : table.entries) {
        out += std::to_string(e.fiber_index) + ',' + std::to_string(e.radial_index) + ',' +
               format_double(e.value) + ',' + std::to_string(e.solution.node_count) + ',' +
               (e.admissible ? "true" : "false") + '\n';
    }
    return out;
}

inline json spectrum_sidecar(const SpectrumTable& table, double gamma,
                             const ToleranceConfig& tolerances) {
    json entries = json::array();
    for (const auto& e : table.entries) {
        entries.push_back(json{{"fiber_index", e.fiber_index},
                               {"radial_index", e.radial_index},
                               {"eigenvalue", e.value},
                               {"node_count", e.solution.node_count},
                               {"admissible", e.admissible}});
    }
    return json{{"command", "spectrum"},
                {"gamma", gamma},
                {"floor", table.floor},
                {"cutoff_i0", table.cutoff_i0},
                {"skipped_modes", table.skipped_modes},
                {"tolerances", tolerances_json(tolerances)},
                {"entries", entries}};
}

inline std::string scan_csv(const RigidityReport& report) {
    std::string out =
        "gamma,H,a,b,lambda,cutoff_i0,min_detector_abs,min_admissible_eigenvalue,"
        "negative_admissible_count,classification\n";
    for (const auto& r : report.records) {
        double min_det = std::numeric_limits<double>::quiet_NaN();
        for (const auto& d : r.detectors)
            if (std::isnan(min_det) || std::abs(d.value) < min_det) min_det = std::abs(d.value);
        out += format_double(r.gamma) + ',' + format_double(r.mean_curvature) + ',' +
               format_double(r.constants.a) + ',' + format_double(r.constants.b) + ',' +
               format_double(r.constants.lambda) + ',' + std::to_string(r.cutoff_i0) + ',' +
               format_double(min_det) + ',' + format_double(r.min_admissible_eigenvalue) + ',' +
               std::to_string(r.negative_admissible_count) + ',' +
               to_string(r.classification) + '\n';
    }
    return out;
}

inline json scan_sidecar(const RigidityReport& report, const ToleranceConfig& tolerances) {
    json gammas = json::array();
    for (const auto& r : report.records) gammas.push_back(r.gamma);

    int max_modes = 0;
    for (const auto& r : report.records)
        max_modes = std::max(max_modes, static_cast<int>(r.detectors.size()));
    json detectors = json::array();
    for (int i = 0; i < max_modes; ++i) {
        json values = json::array();
        for (const auto& r : report.records) {
            if (i < static_cast<int>(r.detectors.size()))
                values.push_back(r.detectors[i].value);
            else
                values.push_back(nullptr);
        }
        detectors.push_back(json{{"fiber_index", i}, {"values_by_gamma", values}});
    }

    json roots = json::array();
    for (const auto& root : report.detector_roots)
        roots.push_back(json{{"fiber_index", root.fiber_index},
                             {"gamma", root.gamma},
                             {"bracket", json::array({root.bracket_lo, root.bracket_hi})}});

    json records = json::array();
    for (const auto& r : report.records) {
        records.push_back(json{{"gamma", r.gamma},
                               {"H", r.mean_curvature},
                               {"a", r.constants.a},
                               {"b", r.constants.b},
                               {"lambda", r.constants.lambda},
                               {"volume", r.constants.volume},
                               {"area", r.constants.area},
                               {"degenerate_constants", r.constants.degenerate},
                               {"cutoff_i0", r.cutoff_i0},
                               {"min_admissible_eigenvalue", r.min_admissible_eigenvalue},
                               {"negative_admissible_count", r.negative_admissible_count},
                               {"zero_modes", r.zero_modes},
                               {"classification", to_string(r.classification)}});
    }

    return json{{"command", "scan"},
                {"convention", to_string(report.convention)},
                {"full_solve", report.full_solve},
                {"scalar_curvature", report.scalar_curvature},
                {"tolerances", tolerances_json(tolerances)},
                {"gammas", gammas},
                {"detectors", detectors},
                {"detector_roots", roots},
                {"records", records}};
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << content;
}

} // namespace warped::io
