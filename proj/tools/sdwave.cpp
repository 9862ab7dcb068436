// sdwave: simulate, sweep, toy and verify runs of the constrained strongly
// damped wave equation. Exit codes: 0 all checks pass, 1 a check failed,
// 2 configuration or I/O error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sdw/cli.hpp"

namespace {

int report(const sdw::RunManifest& m) {
    for (const auto& c : m.verdicts)
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  value=" << c.value << "  tol=" << c.tolerance
                  << (c.detail.empty() ? "" : "  (" + c.detail + ")") << '\n';
    std::cout << "config " << m.config_hash << ": " << (m.all_pass() ? "all checks pass" : "checks failed") << '\n';
    return m.exit_code();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constrained strongly damped wave equation toolkit"};
    app.require_subcommand(1);
    std::string config, out = "out", eps;
    std::optional<std::uint64_t> seed;

    auto* sim = app.add_subcommand("simulate", "run one configuration and check it");
    sim->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out, "output directory");
    sim->add_option("--seed", seed, "seed for random subdifferential candidates");

    auto* sweep = app.add_subcommand("sweep", "epsilon-continuation sweep");
    sweep->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sweep->add_option("--eps", eps, "comma-separated, strictly decreasing epsilon list");
    sweep->add_option("--out", out, "output root; runs go under a directory named by config hash");
    sweep->add_option("--seed", seed, "seed for random subdifferential candidates");

    auto* toy = app.add_subcommand("toy", "single-node run against the closed-form solutions");
    toy->add_option("--config", config, "JSON toy configuration (default: built-in)");
    toy->add_option("--out", out, "output directory");

    auto* verify = app.add_subcommand("verify", "re-run all checks on stored artifacts");
    verify->add_option("--out", out, "run directory to verify")->required();
    verify->add_option("--seed", seed, "seed for random subdifferential candidates");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help lands here with code 0; any usage error is a config error
        return app.exit(e) == 0 ? sdw::kExitPass : sdw::kExitError;
    }

    try {
        if (*sim) return report(sdw::cmd_simulate(config, out, seed));
        if (*sweep) return report(sdw::cmd_sweep(config, eps.empty() ? std::vector<double>{} : sdw::parse_eps_list(eps), out, seed));
        if (*toy) return report(sdw::cmd_toy(config.empty() ? std::nullopt : std::optional<std::filesystem::path>(config), out));
        if (*verify) return report(sdw::cmd_verify(out, seed));
    } catch (const sdw::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return sdw::kExitError;
    } catch (const sdw::MissingArtifact& e) {
        std::cerr << "missing artifact: " << e.what() << '\n';
        return sdw::kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return sdw::kExitError;
    }
    return sdw::kExitError;
}
