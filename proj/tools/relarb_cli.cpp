#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace app = relarb::app;

int main(int argc, char** argv)
{
    CLI::App cli{"Optimal relative arbitrage in volatility-stabilized markets"};
    cli.require_subcommand(1);

    app::Inputs inputs;
    std::string configPath;
    std::string preset;
    std::string seed;
    unsigned threads = 0;
    std::string outDir = ".";

    const char* names[] = {"surface", "upath", "boundary", "euler_compare", "bsde"};
    const char* blurbs[] = {
        "u(T, x) on a mesh of (x1, x2)",
        "u(T - t, X(t)) along one driving trajectory",
        "boundary hitting of the auxiliary process",
        "Euler vs Bessel positivity failures",
        "penalized BSDE ladder",
    };
    for (int i = 0; i < 5; ++i) {
        CLI::App* sub = cli.add_subcommand(names[i], blurbs[i]);
        sub->add_option("--config", configPath, "config file (key = value)");
        sub->add_option("--preset", preset, "preset name from presets/");
        sub->add_option("--seed", seed, "master seed, overrides the config");
        sub->add_option("--threads", threads, "worker threads, 0 = all cores");
        sub->add_option("--out", outDir, "output directory");
    }

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : app::kExitConfig;
    }

    const std::string command = cli.get_subcommands().front()->get_name();
    if (!configPath.empty()) {
        inputs.configPath = configPath;
    }
    if (!preset.empty()) {
        inputs.preset = preset;
    }
    if (!seed.empty()) {
        inputs.seed = seed;
    }

    try {
        relarb::app::Config cfg = app::load_inputs(inputs);
        app::RunOptions opt;
        opt.outDir = outDir;
        opt.threads = relarb::resolve_threads(threads);
        for (const auto& path : app::run_command(command, cfg, opt)) {
            std::cout << path.string() << '\n';
        }
        return app::kExitOk;
    } catch (const relarb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return app::kExitConfig;
    } catch (const relarb::DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return app::kExitConfig;
    } catch (const relarb::BudgetExceeded& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return app::kExitNumerical;
    } catch (const relarb::RegressionIllConditioned& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return app::kExitNumerical;
    } catch (const relarb::SingularMatrix& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return app::kExitNumerical;
    } catch (const relarb::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return app::kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return app::kExitIo;
    }
}
