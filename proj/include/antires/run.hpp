#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "antires/analysis.hpp"
#include "antires/cavity_modes.hpp"
#include "antires/dipole.hpp"
#include "antires/errors.hpp"
#include "antires/geometry.hpp"
#include "antires/lindblad.hpp"
#include "antires/steady_state.hpp"

namespace antires {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Run configuration (JSON, schema 1). All rates are in units of kappa, all
// lengths in units of lambda_e. See the README for the full field reference.
// ---------------------------------------------------------------------------

struct GeometrySpec {
    enum class Kind { chain, grid, explicit_positions } kind = Kind::chain;
    int n = 1;
    int rows = 1, cols = 1;
    double d = 0.1;
    Eigen::Vector3d axis{1.0, 0.0, 0.0};
    std::vector<Eigen::Vector3d> positions;
};

struct CouplingSpec {
    enum class Kind { pattern, custom, tem, eigenmode } kind = Kind::pattern;
    Pattern pattern = Pattern::uniform;
    std::vector<double> custom;
    TemMode mode;
};

struct CavitySpec {
    bool auto_tune = false;
    double offset = 0.0;  // omega_e - omega_c [kappa]
    std::optional<std::pair<double, double>> bracket;
};

struct ScanSpec {
    double min = -1.0, max = 1.0;
    int points = 1001;
    SweepMode mode = SweepMode::both;
};

struct SweepSpec {
    enum class Parameter { none, spacing, tem_order } parameter = Parameter::none;
    std::vector<double> spacings;
    std::vector<int> orders;
};

struct OracleSpec {
    bool enabled = false;
    OracleConfig cfg;
    std::vector<double> etas{1e-3};
};

struct OutputSpec {
    std::string csv = "spectrum.csv";
    std::string summary = "summary.json";
    bool plot_data = false;
};

struct RunConfig {
    GeometrySpec geometry;
    Eigen::Vector3d dipole_orientation{0.0, 1.0, 0.0};
    double gamma = 0.025;
    double g = 0.02;  // coupling rate; reference coupling g_ref for TEM profiles
    double eta = 1.0;
    GVariant g_variant = GVariant::standard;
    bool zero_omega = false;
    CouplingSpec coupling;
    CavitySpec cavity;
    ScanSpec scan;
    SweepSpec sweep;
    OracleSpec oracle;
    OutputSpec output;

    json echo;             // canonical config as parsed
    std::string hash_hex;  // FNV-1a of the canonical dump

    static RunConfig from_json(const json& j);
    static RunConfig from_file(const std::filesystem::path& path);
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hash_hex_of(const json& j) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

[[noreturn]] inline void config_fail(const std::string& where, const std::string& what) {
    throw ConfigError("config error at '" + where + "': " + what);
}

inline const json& require_field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) config_fail(where, std::string("missing field '") + key + "'");
    return j.at(key);
}

inline double require_number(const json& j, const char* key, const std::string& where) {
    const json& v = require_field(j, key, where);
    if (!v.is_number()) config_fail(where + "." + key, "expected a number");
    return v.get<double>();
}

inline int require_int(const json& j, const char* key, const std::string& where) {
    const json& v = require_field(j, key, where);
    if (!v.is_number_integer()) config_fail(where + "." + key, "expected an integer");
    return v.get<int>();
}

inline Eigen::Vector3d parse_vec3(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) config_fail(where, "expected an array of 3 numbers");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

// Fixed 12-significant-digit formatting; byte-reproducible across runs.
inline std::string fmt12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericalError("cannot open '" + tmp.string() + "' for writing");
        out << content;
    }
    fs::rename(tmp, path);
}

}  // namespace detail

inline RunConfig RunConfig::from_json(const json& j) {
    using detail::config_fail;
    using detail::parse_vec3;
    using detail::require_field;
    using detail::require_int;
    using detail::require_number;

    RunConfig cfg;
    if (!j.is_object()) config_fail("<root>", "expected a JSON object");
    if (!j.contains("schema") || j.at("schema") != 1)
        config_fail("schema", "expected the value 1");

    // geometry
    {
        const json& g = require_field(j, "geometry", "<root>");
        const std::string type = require_field(g, "type", "geometry").get<std::string>();
        if (type == "chain") {
            cfg.geometry.kind = GeometrySpec::Kind::chain;
            cfg.geometry.n = require_int(g, "n", "geometry");
            cfg.geometry.d = require_number(g, "d", "geometry");
            if (g.contains("axis")) cfg.geometry.axis = parse_vec3(g.at("axis"), "geometry.axis");
        } else if (type == "grid") {
            cfg.geometry.kind = GeometrySpec::Kind::grid;
            cfg.geometry.rows = require_int(g, "rows", "geometry");
            cfg.geometry.cols = require_int(g, "cols", "geometry");
            cfg.geometry.d = require_number(g, "d", "geometry");
        } else if (type == "explicit") {
            cfg.geometry.kind = GeometrySpec::Kind::explicit_positions;
            const json& pos = require_field(g, "positions", "geometry");
            if (!pos.is_array() || pos.empty())
                config_fail("geometry.positions", "expected a non-empty array");
            for (size_t i = 0; i < pos.size(); ++i)
                cfg.geometry.positions.push_back(
                    parse_vec3(pos[i], "geometry.positions[" + std::to_string(i) + "]"));
        } else {
            config_fail("geometry.type", "unknown geometry '" + type + "'");
        }
    }

    if (j.contains("dipole_orientation")) {
        cfg.dipole_orientation = parse_vec3(j.at("dipole_orientation"), "dipole_orientation");
        if (cfg.dipole_orientation.norm() < 1e-12)
            config_fail("dipole_orientation", "zero vector");
        cfg.dipole_orientation.normalize();
    }

    // rates
    {
        const json& r = require_field(j, "rates", "<root>");
        cfg.gamma = require_number(r, "gamma", "rates");
        cfg.g = require_number(r, "g", "rates");
        if (!(cfg.gamma > 0.0)) config_fail("rates.gamma", "must be positive");
    }
    if (j.contains("eta")) {
        cfg.eta = j.at("eta").get<double>();
        if (cfg.eta < 0.0) config_fail("eta", "must be non-negative");
    }
    if (j.contains("g_variant")) {
        const std::string v = j.at("g_variant").get<std::string>();
        if (v == "standard")
            cfg.g_variant = GVariant::standard;
        else if (v == "as_printed")
            cfg.g_variant = GVariant::as_printed;
        else
            config_fail("g_variant", "expected 'standard' or 'as_printed'");
    }
    if (j.contains("zero_omega")) cfg.zero_omega = j.at("zero_omega").get<bool>();

    // coupling (exactly one source, selected by type)
    {
        const json& c = require_field(j, "coupling", "<root>");
        const std::string type = require_field(c, "type", "coupling").get<std::string>();
        if (type == "pattern") {
            cfg.coupling.kind = CouplingSpec::Kind::pattern;
            const std::string p = require_field(c, "pattern", "coupling").get<std::string>();
            if (p == "uniform")
                cfg.coupling.pattern = Pattern::uniform;
            else if (p == "alternating")
                cfg.coupling.pattern = Pattern::alternating;
            else
                config_fail("coupling.pattern", "expected 'uniform' or 'alternating'");
        } else if (type == "custom") {
            cfg.coupling.kind = CouplingSpec::Kind::custom;
            const json& vals = require_field(c, "values", "coupling");
            if (!vals.is_array()) config_fail("coupling.values", "expected an array");
            for (const auto& v : vals) cfg.coupling.custom.push_back(v.get<double>());
        } else if (type == "tem") {
            cfg.coupling.kind = CouplingSpec::Kind::tem;
            cfg.coupling.mode.m = require_int(c, "m", "coupling");
            cfg.coupling.mode.n = require_int(c, "n", "coupling");
            cfg.coupling.mode.w = require_number(c, "w", "coupling");
            if (c.contains("offset")) {
                const json& o = c.at("offset");
                if (!o.is_array() || o.size() != 2)
                    config_fail("coupling.offset", "expected an array of 2 numbers");
                cfg.coupling.mode.offset = {o[0].get<double>(), o[1].get<double>()};
            }
        } else if (type == "eigenmode") {
            cfg.coupling.kind = CouplingSpec::Kind::eigenmode;
        } else {
            config_fail("coupling.type", "unknown coupling '" + type + "'");
        }
    }

    // cavity: exactly one of offset / auto_tune
    if (j.contains("cavity")) {
        const json& c = j.at("cavity");
        const bool has_offset = c.contains("offset");
        const bool has_tune = c.contains("auto_tune");
        if (has_offset == has_tune)
            config_fail("cavity", "exactly one of 'offset' and 'auto_tune' is required");
        if (has_offset) cfg.cavity.offset = c.at("offset").get<double>();
        if (has_tune) {
            cfg.cavity.auto_tune = true;
            const json& t = c.at("auto_tune");
            if (t.contains("bracket")) {
                const json& b = t.at("bracket");
                if (!b.is_array() || b.size() != 2)
                    config_fail("cavity.auto_tune.bracket", "expected [lo, hi]");
                cfg.cavity.bracket = {{b[0].get<double>(), b[1].get<double>()}};
            }
        }
    }

    if (j.contains("scan")) {
        const json& s = j.at("scan");
        cfg.scan.min = require_number(s, "min", "scan");
        cfg.scan.max = require_number(s, "max", "scan");
        cfg.scan.points = require_int(s, "points", "scan");
        if (!(cfg.scan.max > cfg.scan.min)) config_fail("scan", "max must exceed min");
        if (cfg.scan.points < 2) config_fail("scan.points", "need at least 2 points");
        if (s.contains("mode")) {
            const std::string m = s.at("mode").get<std::string>();
            if (m == "sweep_both")
                cfg.scan.mode = SweepMode::both;
            else if (m == "sweep_laser")
                cfg.scan.mode = SweepMode::laser;
            else
                config_fail("scan.mode", "expected 'sweep_both' or 'sweep_laser'");
        }
        if (cfg.scan.mode == SweepMode::both &&
            (cfg.cavity.auto_tune || cfg.cavity.offset != 0.0))
            config_fail("scan.mode",
                        "sweep_both pins the cavity to the laser; use sweep_laser with a "
                        "cavity offset or auto_tune");
    }

    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        const std::string p = require_field(s, "parameter", "sweep").get<std::string>();
        if (p == "spacing") {
            cfg.sweep.parameter = SweepSpec::Parameter::spacing;
            for (const auto& v : require_field(s, "values", "sweep")) {
                cfg.sweep.spacings.push_back(v.get<double>());
                if (!(cfg.sweep.spacings.back() > 0.0))
                    config_fail("sweep.values", "spacings must be positive");
            }
        } else if (p == "tem_order") {
            cfg.sweep.parameter = SweepSpec::Parameter::tem_order;
            for (const auto& v : require_field(s, "orders", "sweep"))
                cfg.sweep.orders.push_back(v.get<int>());
        } else {
            config_fail("sweep.parameter", "expected 'spacing' or 'tem_order'");
        }
    }

    if (j.contains("oracle")) {
        const json& o = j.at("oracle");
        cfg.oracle.enabled = true;
        if (o.contains("n_max")) cfg.oracle.cfg.n_max = o.at("n_max").get<int>();
        if (o.contains("method")) {
            const std::string m = o.at("method").get<std::string>();
            if (m == "null_space")
                cfg.oracle.cfg.method = SteadyMethod::null_space;
            else if (m == "time_integration")
                cfg.oracle.cfg.method = SteadyMethod::time_integration;
            else
                config_fail("oracle.method", "expected 'null_space' or 'time_integration'");
        }
        if (o.contains("t_final")) cfg.oracle.cfg.t_final = o.at("t_final").get<double>();
        if (o.contains("tol")) cfg.oracle.cfg.tol = o.at("tol").get<double>();
        if (o.contains("etas")) {
            cfg.oracle.etas.clear();
            for (const auto& v : o.at("etas")) cfg.oracle.etas.push_back(v.get<double>());
            if (cfg.oracle.etas.empty()) config_fail("oracle.etas", "must be non-empty");
        }
    }

    if (j.contains("output")) {
        const json& o = j.at("output");
        if (o.contains("csv")) cfg.output.csv = o.at("csv").get<std::string>();
        if (o.contains("summary")) cfg.output.summary = o.at("summary").get<std::string>();
        if (o.contains("plot_data")) cfg.output.plot_data = o.at("plot_data").get<bool>();
    }

    cfg.echo = j;
    cfg.hash_hex = detail::hash_hex_of(j);
    return cfg;
}

inline RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return from_json(j);
}

// ---------------------------------------------------------------------------
// Model assembly
// ---------------------------------------------------------------------------

struct BuiltSystem {
    EmitterArray array;
    SystemModel model;     // delta_c left at 0; scans place the cavity per point
    double offset = 0.0;   // omega_e - omega_c used for sweep_laser scans
    bool auto_tuned = false;
    double tuned_delta = 0.0;
    double gtg = 0.0;
    double lambda_min = 0.0;
};

inline EmitterArray build_array(const RunConfig& cfg) {
    EmitterArray array;
    switch (cfg.geometry.kind) {
        case GeometrySpec::Kind::chain:
            array = make_chain(cfg.geometry.n, cfg.geometry.d, cfg.gamma, cfg.geometry.axis);
            break;
        case GeometrySpec::Kind::grid:
            array = make_grid(cfg.geometry.rows, cfg.geometry.cols, cfg.geometry.d, cfg.gamma);
            break;
        case GeometrySpec::Kind::explicit_positions:
            array.positions = cfg.geometry.positions;
            array.gamma = cfg.gamma;
            break;
    }
    array.dipole_orientation = cfg.dipole_orientation;
    validate(array);
    return array;
}

inline CouplingVector build_coupling(const RunConfig& cfg, const EmitterArray& array,
                                     const CouplingMatrices& matrices) {
    switch (cfg.coupling.kind) {
        case CouplingSpec::Kind::pattern:
            return coupling_vector_pattern(array.size(), cfg.g, cfg.coupling.pattern);
        case CouplingSpec::Kind::custom:
            return coupling_vector_custom(array.size(), cfg.coupling.custom);
        case CouplingSpec::Kind::tem:
            return coupling_vector_tem(array, cfg.coupling.mode, cfg.g);
        case CouplingSpec::Kind::eigenmode:
            return coupling_vector_eigenmode(matrices, cfg.g);
    }
    throw ConfigError("unreachable coupling kind");
}

inline BuiltSystem build_system(const RunConfig& cfg) {
    BuiltSystem built;
    built.array = build_array(cfg);
    CouplingMatrices matrices = build_coupling_matrices(built.array, cfg.g_variant);
    if (cfg.zero_omega) matrices.omega.setZero();
    built.model.couplings = matrices;
    built.model.g_vec = build_coupling(cfg, built.array, matrices);
    built.model.cavity.eta = cfg.eta;
    built.gtg = built.model.g_vec.norm_squared();
    built.lambda_min = gamma_eigenmodes(matrices).lambdas[0];
    validate(built.model);

    if (cfg.cavity.auto_tune) {
        if (cfg.cavity.bracket) {
            built.tuned_delta =
                solve_cavity_tuning(built.model, cfg.cavity.bracket->first,
                                    cfg.cavity.bracket->second);
        } else {
            built.tuned_delta = best_tuned_point(built.model).delta_e;
        }
        built.auto_tuned = true;
        built.offset = built.tuned_delta;
    } else {
        built.offset = cfg.cavity.offset;
    }
    return built;
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

inline std::string spectrum_csv(const RunConfig& cfg, const BuiltSystem& built,
                                const ScanResult& scan) {
    using detail::fmt12;
    std::ostringstream out;
    out << "# antires spectrum\n";
    out << "# schema: 1\n";
    out << "# config_hash: " << cfg.hash_hex << "\n";
    out << "# mode: " << (scan.mode == SweepMode::both ? "sweep_both" : "sweep_laser") << "\n";
    out << "# offset: " << fmt12(scan.offset) << "\n";
    out << "# n: " << built.model.size() << "\n";
    out << "# config: " << cfg.echo.dump() << "\n";
    out << "delta_over_kappa,re_t,im_t,T,phase,phase_rel,delta_eff,gamma_eff,c_eff,"
           "condition_flag\n";
    for (const auto& p : scan.points) {
        out << fmt12(p.delta) << ',' << fmt12(p.t.real()) << ',' << fmt12(p.t.imag()) << ','
            << fmt12(p.T) << ',' << fmt12(p.phase) << ',' << fmt12(p.phase_rel) << ','
            << fmt12(p.delta_eff) << ',' << fmt12(p.gamma_eff) << ',' << fmt12(p.c_eff) << ','
            << static_cast<int>(p.flag) << "\n";
    }
    return out.str();
}

inline json spectrum_summary(const RunConfig& cfg, const BuiltSystem& built,
                             const ScanResult& scan) {
    json summary;
    summary["schema"] = 1;
    summary["config_hash"] = cfg.hash_hex;
    summary["n"] = built.model.size();
    summary["gtg"] = built.gtg;
    summary["lambda_min"] = built.lambda_min;
    summary["c_opt"] = built.lambda_min > 0.0 ? built.gtg / built.lambda_min : 0.0;
    summary["offset"] = built.offset;
    summary["auto_tuned"] = built.auto_tuned;
    if (built.auto_tuned) summary["delta"] = built.tuned_delta;
    if (built.model.g_vec.near_zero())
        summary["warnings"] = json::array({"coupling vector is numerically zero"});

    const auto profile = background_subtracted(scan);
    int dip = -1;
    for (size_t i = 0; i < profile.size(); ++i) {
        if (scan.points[i].flag == PointFlag::failed) continue;
        if (dip < 0 || profile[i].second > profile[dip].second) dip = static_cast<int>(i);
    }
    if (dip >= 0) {
        const auto& p = scan.points[dip];
        json d;
        d["delta"] = p.delta;
        d["T"] = p.T;
        d["depth"] = profile[dip].second;
        d["c_eff"] = p.c_eff;
        d["gamma_eff"] = p.gamma_eff;
        d["delta_eff"] = p.delta_eff;
        summary["dip"] = d;
    }
    try {
        const auto fit = fit_lorentzian(profile);
        json f;
        f["s"] = fit.s;
        f["beta"] = fit.beta;
        f["s_center"] = fit.s_center;
        f["beta_curvature"] = fit.beta_curvature;
        f["center"] = fit.center;
        f["residual"] = fit.residual;
        f["iterations"] = fit.iterations;
        summary["fit"] = f;
    } catch (const std::exception& e) {
        summary["fit"] = nullptr;
        summary["fit_error"] = e.what();
    }
    return summary;
}

struct RunArtifacts {
    std::filesystem::path csv;
    std::filesystem::path summary;
    json summary_json;
};

/// Scan per the config and write the spectrum CSV plus the JSON summary.
inline RunArtifacts run_spectrum(const RunConfig& cfg, const std::filesystem::path& out_dir,
                                 int threads = 1) {
    const BuiltSystem built = build_system(cfg);
    const auto grid = linspace(cfg.scan.min, cfg.scan.max, cfg.scan.points);
    const SweepMode mode = cfg.scan.mode;
    const ScanResult scan = scan_spectrum(built.model, grid, mode, built.offset, threads);

    RunArtifacts artifacts;
    artifacts.csv = out_dir / cfg.output.csv;
    artifacts.summary = out_dir / cfg.output.summary;
    detail::write_atomic(artifacts.csv, spectrum_csv(cfg, built, scan));
    artifacts.summary_json = spectrum_summary(cfg, built, scan);
    detail::write_atomic(artifacts.summary, artifacts.summary_json.dump(2) + "\n");

    if (cfg.output.plot_data) {
        std::ostringstream t_data, phase_data;
        for (const auto& p : scan.points) {
            t_data << detail::fmt12(p.delta) << ' ' << detail::fmt12(p.T) << "\n";
            phase_data << detail::fmt12(p.delta) << ' ' << detail::fmt12(p.phase_rel) << "\n";
        }
        detail::write_atomic(out_dir / (cfg.output.csv + ".T.dat"), t_data.str());
        detail::write_atomic(out_dir / (cfg.output.csv + ".phase.dat"), phase_data.str());
    }
    return artifacts;
}

/// Solve the cavity tuning only; returns the summary that is also written.
inline json run_tune(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    RunConfig tuned = cfg;
    if (!tuned.cavity.auto_tune) {
        tuned.cavity.auto_tune = true;  // tune even when the config fixes an offset
        tuned.cavity.bracket.reset();
    }
    const BuiltSystem built = build_system(tuned);
    json summary;
    summary["schema"] = 1;
    summary["config_hash"] = cfg.hash_hex;
    summary["delta"] = built.tuned_delta;
    summary["offset"] = built.offset;
    summary["gtg"] = built.gtg;
    summary["lambda_min"] = built.lambda_min;
    const auto resp = effective_response(built.model, built.tuned_delta);
    summary["gamma_eff"] = resp.gamma_eff;
    summary["c_eff"] = effective_cooperativity(built.model, built.tuned_delta);
    detail::write_atomic(out_dir / cfg.output.summary, summary.dump(2) + "\n");
    return summary;
}

/// Cooperativity sweep over the chain spacing or the transverse mode order.
/// Each sample reports C_eff at its most subradiant reachable resonance and the
/// idealized bound C_opt.
inline RunArtifacts run_cooperativity(const RunConfig& cfg, const std::filesystem::path& out_dir,
                                      int threads = 1) {
    if (cfg.sweep.parameter == SweepSpec::Parameter::none)
        throw ConfigError("cooperativity runs need a 'sweep' block");
    using detail::fmt12;
    std::ostringstream out;
    out << "# antires cooperativity sweep\n";
    out << "# schema: 1\n";
    out << "# config_hash: " << cfg.hash_hex << "\n";
    out << "# config: " << cfg.echo.dump() << "\n";

    json rows = json::array();
    auto eval_model = [&](const RunConfig& point_cfg) {
        const BuiltSystem built = build_system(point_cfg);
        const auto best = best_tuned_point(built.model);
        const double c_opt =
            optimal_cooperativity(built.model.g_vec, built.model.couplings, 1.0);
        json row;
        row["c_eff"] = best.c_eff;
        row["c_opt"] = c_opt;
        row["gtg"] = built.gtg;
        row["lambda_min"] = built.lambda_min;
        row["delta_e"] = best.delta_e;
        row["gamma_eff"] = best.gamma_eff;
        return row;
    };

    if (cfg.sweep.parameter == SweepSpec::Parameter::spacing) {
        if (cfg.geometry.kind == GeometrySpec::Kind::explicit_positions)
            throw ConfigError("spacing sweeps need a chain or grid geometry");
        out << "d,c_eff,c_opt,gtg,lambda_min,delta_e,gamma_eff\n";
        const int n_vals = static_cast<int>(cfg.sweep.spacings.size());
        std::vector<json> results(n_vals);
        parallel_for(n_vals, threads, [&](int i) {
            RunConfig point = cfg;
            point.geometry.d = cfg.sweep.spacings[i];
            results[i] = eval_model(point);
        });
        for (int i = 0; i < n_vals; ++i) {
            json& row = results[i];
            row["d"] = cfg.sweep.spacings[i];
            out << fmt12(cfg.sweep.spacings[i]) << ',' << fmt12(row["c_eff"].get<double>()) << ','
                << fmt12(row["c_opt"].get<double>()) << ',' << fmt12(row["gtg"].get<double>())
                << ',' << fmt12(row["lambda_min"].get<double>()) << ','
                << fmt12(row["delta_e"].get<double>()) << ','
                << fmt12(row["gamma_eff"].get<double>()) << "\n";
            rows.push_back(row);
        }
    } else {
        if (cfg.coupling.kind != CouplingSpec::Kind::tem)
            throw ConfigError("tem_order sweeps need a 'tem' coupling block");
        out << "m,c_eff,c_opt,gtg,lambda_min,delta_e,gamma_eff\n";
        const int n_vals = static_cast<int>(cfg.sweep.orders.size());
        std::vector<json> results(n_vals);
        parallel_for(n_vals, threads, [&](int i) {
            RunConfig point = cfg;
            point.coupling.mode.m = cfg.sweep.orders[i];
            results[i] = eval_model(point);
        });
        for (int i = 0; i < n_vals; ++i) {
            json& row = results[i];
            row["m"] = cfg.sweep.orders[i];
            out << cfg.sweep.orders[i] << ',' << fmt12(row["c_eff"].get<double>()) << ','
                << fmt12(row["c_opt"].get<double>()) << ',' << fmt12(row["gtg"].get<double>())
                << ',' << fmt12(row["lambda_min"].get<double>()) << ','
                << fmt12(row["delta_e"].get<double>()) << ','
                << fmt12(row["gamma_eff"].get<double>()) << "\n";
            rows.push_back(row);
        }
    }

    RunArtifacts artifacts;
    artifacts.csv = out_dir / cfg.output.csv;
    artifacts.summary = out_dir / cfg.output.summary;
    detail::write_atomic(artifacts.csv, out.str());
    json summary;
    summary["schema"] = 1;
    summary["config_hash"] = cfg.hash_hex;
    summary["rows"] = rows;
    artifacts.summary_json = summary;
    detail::write_atomic(artifacts.summary, summary.dump(2) + "\n");
    return artifacts;
}

/// Full-numerics comparison table over the scan grid and the configured drives.
inline RunArtifacts run_oracle(const RunConfig& cfg, const std::filesystem::path& out_dir,
                               int threads = 1) {
    if (!cfg.oracle.enabled) throw ConfigError("oracle runs need an 'oracle' block");
    const BuiltSystem built = build_system(cfg);
    const auto grid = linspace(cfg.scan.min, cfg.scan.max, cfg.scan.points);
    const auto rows = compare_linearization(built.model, grid, cfg.oracle.etas, cfg.oracle.cfg,
                                            cfg.scan.mode, built.offset, threads);
    using detail::fmt12;
    std::ostringstream out;
    out << "# antires oracle comparison\n";
    out << "# schema: 1\n";
    out << "# config_hash: " << cfg.hash_hex << "\n";
    out << "# config: " << cfg.echo.dump() << "\n";
    out << "delta_over_kappa,eta,T_exact,T_linear,abs_diff,max_excitation\n";
    double worst = 0.0;
    for (const auto& r : rows) {
        out << fmt12(r.delta) << ',' << fmt12(r.eta) << ',' << fmt12(r.t_exact) << ','
            << fmt12(r.t_linear) << ',' << fmt12(r.abs_diff) << ',' << fmt12(r.max_excitation)
            << "\n";
        if (r.eta == cfg.oracle.etas.front()) worst = std::max(worst, r.abs_diff);
    }
    RunArtifacts artifacts;
    artifacts.csv = out_dir / cfg.output.csv;
    artifacts.summary = out_dir / cfg.output.summary;
    detail::write_atomic(artifacts.csv, out.str());
    json summary;
    summary["schema"] = 1;
    summary["config_hash"] = cfg.hash_hex;
    summary["max_abs_diff_weakest_drive"] = worst;
    summary["etas"] = cfg.oracle.etas;
    artifacts.summary_json = summary;
    detail::write_atomic(artifacts.summary, summary.dump(2) + "\n");
    return artifacts;
}

// ---------------------------------------------------------------------------
// Fitting an existing spectrum CSV
// ---------------------------------------------------------------------------

struct ParsedSpectrum {
    SweepMode mode = SweepMode::both;
    double offset = 0.0;
    std::vector<std::pair<double, double>> delta_T;
};

inline ParsedSpectrum parse_spectrum_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open spectrum file '" + path.string() + "'");
    ParsedSpectrum parsed;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# mode: ", 0) == 0)
                parsed.mode = (line.substr(8) == "sweep_both") ? SweepMode::both : SweepMode::laser;
            if (line.rfind("# offset: ", 0) == 0) parsed.offset = std::stod(line.substr(10));
            continue;
        }
        if (!header_seen) {  // column header row
            if (line.rfind("delta_over_kappa", 0) != 0)
                throw ConfigError("'" + path.string() + "' is not an antires spectrum CSV");
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
        if (cells.size() < 10)
            throw ConfigError("malformed spectrum row: '" + line + "'");
        if (static_cast<int>(cells[9]) == static_cast<int>(PointFlag::failed)) continue;
        parsed.delta_T.emplace_back(cells[0], cells[3]);
    }
    if (parsed.delta_T.empty()) throw ConfigError("no data rows in '" + path.string() + "'");
    return parsed;
}

/// Re-fit the antiresonance of a previously written spectrum CSV.
inline json run_fit(const std::filesystem::path& csv_path) {
    const ParsedSpectrum parsed = parse_spectrum_csv(csv_path);
    std::vector<std::pair<double, double>> profile;
    profile.reserve(parsed.delta_T.size());
    for (const auto& [delta, T] : parsed.delta_T) {
        const double delta_c = (parsed.mode == SweepMode::both) ? delta : delta - parsed.offset;
        profile.emplace_back(delta, 1.0 / (delta_c * delta_c + 1.0) - T);
    }
    const auto fit = fit_lorentzian(profile);
    json out;
    out["schema"] = 1;
    out["source"] = csv_path.string();
    out["s"] = fit.s;
    out["beta"] = fit.beta;
    out["s_center"] = fit.s_center;
    out["beta_curvature"] = fit.beta_curvature;
    out["center"] = fit.center;
    out["residual"] = fit.residual;
    out["iterations"] = fit.iterations;
    return out;
}

}  // namespace antires
