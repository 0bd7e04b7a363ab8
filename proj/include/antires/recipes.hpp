#pragma once

#include <string>
#include <vector>

#include "antires/run.hpp"

namespace antires {

// Bundled demonstration scenarios, runnable via `antires figure <id>`:
//   1   single-emitter antiresonance and phase switch (g = kappa/10 = 2 gamma)
//   2   10-emitter chain: untuned scan, tuned scan, and symmetry-matched scan
//   3   cooperativity vs spacing with the idealized C_opt reference
//   4   cooperativity vs transverse mode order, plus tuned spectra at m = 21 and m = 0
//   a1  full master-equation numerics vs the linear theory for a subradiant 4-chain
inline const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"1", "2", "3", "4", "a1"};
    return ids;
}

inline json figure_recipe(const std::string& id) {
    if (id == "1") {
        return json::parse(R"({
            "schema": 1,
            "geometry": {"type": "chain", "n": 1, "d": 0.1},
            "rates": {"gamma": 0.05, "g": 0.1},
            "coupling": {"type": "pattern", "pattern": "uniform"},
            "scan": {"min": -1.0, "max": 1.0, "points": 4001, "mode": "sweep_both"},
            "output": {"csv": "fig1_spectrum.csv", "summary": "fig1_summary.json", "plot_data": true}
        })");
    }
    if (id == "2ab") {
        return json::parse(R"({
            "schema": 1,
            "geometry": {"type": "chain", "n": 10, "d": 0.08},
            "rates": {"gamma": 0.025, "g": 0.02},
            "coupling": {"type": "pattern", "pattern": "alternating"},
            "cavity": {"offset": 0.0},
            "scan": {"min": -0.45, "max": 0.45, "points": 8001, "mode": "sweep_laser"},
            "output": {"csv": "fig2ab_spectrum.csv", "summary": "fig2ab_summary.json", "plot_data": true}
        })");
    }
    if (id == "2cd") {
        return json::parse(R"({
            "schema": 1,
            "geometry": {"type": "chain", "n": 10, "d": 0.08},
            "rates": {"gamma": 0.025, "g": 0.02},
            "coupling": {"type": "pattern", "pattern": "alternating"},
            "cavity": {"auto_tune": {}},
            "scan": {"min": -0.45, "max": 0.45, "points": 8001, "mode": "sweep_laser"},
            "output": {"csv": "fig2cd_spectrum.csv", "summary": "fig2cd_summary.json", "plot_data": true}
        })");
    }
    if (id == "2ef") {
        return json::parse(R"({
            "schema": 1,
            "geometry": {"type": "chain", "n": 10, "d": 0.08},
            "rates": {"gamma": 0.025, "g": 0.02},
            "coupling": {"type": "eigenmode"},
            "cavity": {"auto_tune": {}},
            "scan": {"min": -0.45, "max": 0.45, "points": 8001, "mode": "sweep_laser"},
            "output": {"csv": "fig2ef_spectrum.csv", "summary": "fig2ef_summary.json", "plot_data": true}
        })");
    }
    if (id == "3") {
        json j = json::parse(R"({
            "schema": 1,
            "geometry": {"type": "chain", "n": 10, "d": 0.1},
            "rates": {"gamma": 0.025, "g": 0.03333333333333333},
            "coupling": {"type": "pattern", "pattern": "alternating"},
            "sweep": {"parameter": "spacing", "values": []},
            "output": {"csv": "fig3_cooperativity.csv", "summary": "fig3_summary.json"}
        })");
        for (int i = 0; i <= 95; ++i) j["sweep"]["values"].push_back(0.05 + 0.01 * i);
        return j;
    }
    if (id == "4") {
        json j = json::parse(R"({
            "schema": 1,
            "geometry": {"type": "chain", "n": 10, "d": 0.2},
            "rates": {"gamma": 0.025, "g": 0.03333333333333333},
            "coupling": {"type": "tem", "m": 0, "n": 0, "w": 1.0},
            "sweep": {"parameter": "tem_order", "orders": []},
            "output": {"csv": "fig4_cooperativity.csv", "summary": "fig4_summary.json"}
        })");
        for (int m = 0; m <= 25; ++m) j["sweep"]["orders"].push_back(m);
        return j;
    }
    if (id == "a1") {
        return json::parse(R"({
            "schema": 1,
            "geometry": {"type": "chain", "n": 4, "d": 0.02},
            "rates": {"gamma": 0.025, "g": 0.05},
            "zero_omega": true,
            "coupling": {"type": "pattern", "pattern": "alternating"},
            "scan": {"min": -2.0, "max": 2.0, "points": 101, "mode": "sweep_both"},
            "oracle": {"n_max": 3, "method": "null_space", "etas": [0.001, 0.1, 0.5]},
            "output": {"csv": "figa1_oracle.csv", "summary": "figa1_summary.json"}
        })");
    }
    throw ConfigError("unknown figure id '" + id + "'; available: 1, 2, 3, 4, a1");
}

/// Runs one bundled scenario into out_dir. Figure 2 produces its three panel
/// scans; figure 4 adds tuned comparison spectra for m = 21 and m = 0.
inline void run_figure(const std::string& id, const std::filesystem::path& out_dir,
                       int threads = 1) {
    if (id == "1") {
        run_spectrum(RunConfig::from_json(figure_recipe("1")), out_dir, threads);
    } else if (id == "2") {
        for (const char* panel : {"2ab", "2cd", "2ef"})
            run_spectrum(RunConfig::from_json(figure_recipe(panel)), out_dir, threads);
    } else if (id == "3") {
        run_cooperativity(RunConfig::from_json(figure_recipe("3")), out_dir, threads);
    } else if (id == "4") {
        const RunConfig sweep_cfg = RunConfig::from_json(figure_recipe("4"));
        run_cooperativity(sweep_cfg, out_dir, threads);
        for (const int m : {21, 0}) {
            // Tuned spectrum around the targeted resonance of this mode order.
            RunConfig point = sweep_cfg;
            point.sweep = SweepSpec{};
            point.coupling.mode.m = m;
            point.cavity.auto_tune = true;
            const BuiltSystem built = build_system(point);
            point.cavity.auto_tune = false;
            point.cavity.offset = built.tuned_delta;
            point.scan.min = built.tuned_delta - 0.03;
            point.scan.max = built.tuned_delta + 0.03;
            point.scan.points = 4001;
            point.scan.mode = SweepMode::laser;
            point.output.csv = "fig4_spectrum_m" + std::to_string(m) + ".csv";
            point.output.summary = "fig4_summary_m" + std::to_string(m) + ".json";
            point.output.plot_data = true;
            point.echo["figure_panel"] = "m=" + std::to_string(m);
            point.hash_hex = detail::hash_hex_of(point.echo);
            run_spectrum(point, out_dir, threads);
        }
    } else if (id == "a1") {
        run_oracle(RunConfig::from_json(figure_recipe("a1")), out_dir, threads);
    } else {
        throw ConfigError("unknown figure id '" + id + "'; available: 1, 2, 3, 4, a1");
    }
}

}  // namespace antires
