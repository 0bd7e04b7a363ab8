// Command-line front end: scans, cavity tuning, cooperativity sweeps, fits of
// existing spectra, master-equation comparisons and bundled demo scenarios.

#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "antires/recipes.hpp"
#include "antires/run.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const antires::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const antires::ConstructionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"antiresonance spectroscopy of dipole-coupled emitter arrays in a driven cavity"};
    app.require_subcommand(1);

    std::string config_path, csv_path, out_dir = ".", figure_id;
    int threads = 1;
    unsigned seed = 0;  // accepted for interface stability; all runs are deterministic
    bool emit_config = false;

    auto add_common = [&](CLI::App* cmd, bool with_config) {
        if (with_config)
            cmd->add_option("--config", config_path, "JSON run configuration")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--threads", threads, "worker threads for scan points");
        cmd->add_option("--seed", seed, "unused; runs are deterministic");
    };

    CLI::App* spectrum = app.add_subcommand("spectrum", "scan the transmission spectrum");
    add_common(spectrum, true);
    CLI::App* tune = app.add_subcommand("tune", "solve the cavity tuning delta_eff = 0");
    add_common(tune, true);
    CLI::App* coop =
        app.add_subcommand("cooperativity", "sweep C_eff/C_opt over spacing or mode order");
    add_common(coop, true);
    CLI::App* fit = app.add_subcommand("fit", "fit the antiresonance of an existing CSV");
    fit->add_option("--csv", csv_path, "spectrum CSV produced by `spectrum`")->required();
    fit->add_option("--out", out_dir, "output directory");
    CLI::App* oracle =
        app.add_subcommand("oracle", "compare the exact master equation to the linear theory");
    add_common(oracle, true);
    CLI::App* figure = app.add_subcommand("figure", "run a bundled demo scenario");
    figure->add_option("id", figure_id, "one of: 1, 2, 3, 4, a1")->required();
    figure->add_option("--out", out_dir, "output directory");
    figure->add_option("--threads", threads, "worker threads");
    figure->add_flag("--emit-config", emit_config, "print the scenario config and exit");

    CLI11_PARSE(app, argc, argv);
    antires::limit_blas_threads_for_parallel(threads);

    const std::filesystem::path out(out_dir);
    if (spectrum->parsed()) {
        return guarded([&] {
            const auto cfg = antires::RunConfig::from_file(config_path);
            const auto artifacts = antires::run_spectrum(cfg, out, threads);
            std::cout << artifacts.summary_json.dump(2) << "\n";
            return kExitOk;
        });
    }
    if (tune->parsed()) {
        return guarded([&] {
            const auto cfg = antires::RunConfig::from_file(config_path);
            std::cout << antires::run_tune(cfg, out).dump(2) << "\n";
            return kExitOk;
        });
    }
    if (coop->parsed()) {
        return guarded([&] {
            const auto cfg = antires::RunConfig::from_file(config_path);
            const auto artifacts = antires::run_cooperativity(cfg, out, threads);
            std::cout << "wrote " << artifacts.csv.string() << "\n";
            return kExitOk;
        });
    }
    if (fit->parsed()) {
        return guarded([&] {
            const auto result = antires::run_fit(csv_path);
            antires::detail::write_atomic(out / "fit.json", result.dump(2) + "\n");
            std::cout << result.dump(2) << "\n";
            return kExitOk;
        });
    }
    if (oracle->parsed()) {
        return guarded([&] {
            const auto cfg = antires::RunConfig::from_file(config_path);
            const auto artifacts = antires::run_oracle(cfg, out, threads);
            std::cout << artifacts.summary_json.dump(2) << "\n";
            return kExitOk;
        });
    }
    if (figure->parsed()) {
        return guarded([&] {
            if (emit_config) {
                std::cout << antires::figure_recipe(figure_id == "2" ? "2cd" : figure_id).dump(2)
                          << "\n";
                return kExitOk;
            }
            antires::run_figure(figure_id, out, threads);
            std::cout << "figure " << figure_id << " artifacts written to " << out.string()
                      << "\n";
            return kExitOk;
        });
    }
    return kExitConfig;
}
