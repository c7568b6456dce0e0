// edns: run, verify and probe the exponentially damped Navier-Stokes solver.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "edns/commands.hpp"

namespace fs = std::filesystem;

namespace {

edns::RunConfig config_near(const std::string& explicit_path, const fs::path& ledger) {
    if (!explicit_path.empty()) return edns::load_config(explicit_path);
    const fs::path beside = ledger.parent_path() / "run.cfg";
    if (fs::exists(beside)) return edns::load_config(beside);
    throw edns::ConfigError("no --config given and no run.cfg next to " + ledger.string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudo-spectral damped Navier-Stokes solver and energy-inequality verifier"};
    app.require_subcommand(1);

    std::string config_path, out_dir, suite = "all", ledger_path, u0_path, columns = "t";
    std::optional<std::uint64_t> seed;
    std::size_t trials = 1000000;
    std::optional<double> delta;

    auto* run = app.add_subcommand("run", "integrate, write the ledger and checkpoints, verify");
    run->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory (overrides output_dir)");
    run->add_option("--seed", seed, "master seed (overrides seed)");

    auto* verify = app.add_subcommand("verify", "re-check inequalities on a persisted ledger");
    verify->add_option("ledger", ledger_path, "ledger CSV")->required()->check(CLI::ExistingFile);
    verify->add_option("u0", u0_path, "initial-state checkpoint")->required()->check(CLI::ExistingFile);
    verify->add_option("--config", config_path, "configuration (default: run.cfg beside the ledger)");

    auto* lemmas = app.add_subcommand("lemmas", "randomized falsification campaigns for the lemmas");
    lemmas->add_option("--suite", suite, "lemma4, lemma44, c2k, gronwall or all")
        ->check(CLI::IsMember({"lemma4", "lemma44", "c2k", "gronwall", "all"}));
    lemmas->add_option("--trials", trials, "trials per suite (gronwall uses trials/1000 witnesses)");
    lemmas->add_option("--seed", seed, "master seed");

    auto* stability = app.add_subcommand("stability", "perturbed-pair stability experiment");
    stability->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
    stability->add_option("--delta", delta, "perturbation size (overrides stability.delta)");
    stability->add_option("--seed", seed, "perturbation seed (overrides stability.seed)");

    auto* plot = app.add_subcommand("plotdata", "tab-separated columns and inequality series");
    plot->add_option("ledger", ledger_path, "ledger CSV")->required()->check(CLI::ExistingFile);
    plot->add_option("--columns", columns, "comma-separated ledger columns");
    plot->add_option("--config", config_path, "configuration (default: run.cfg beside the ledger)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? edns::kExitPass : edns::kExitError;
    }

    try {
        if (run->parsed()) {
            edns::RunConfig cfg = edns::load_config(config_path);
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            if (seed) cfg.seed = *seed;
            return edns::cmd_run(cfg, std::cout);
        }
        if (verify->parsed()) return edns::cmd_verify(ledger_path, u0_path, config_near(config_path, ledger_path), std::cout);
        if (lemmas->parsed()) return edns::cmd_lemmas(suite, trials, seed.value_or(0), std::cout);
        if (stability->parsed()) {
            const edns::RunConfig cfg = edns::load_config(config_path);
            return edns::cmd_stability(cfg, delta.value_or(cfg.stability_delta), seed.value_or(cfg.perturbation_seed()),
                                       std::cout);
        }
        if (plot->parsed()) {
            std::vector<std::string> cols;
            std::string item;
            std::istringstream ss(columns);
            while (std::getline(ss, item, ',')) cols.push_back(item);
            return edns::cmd_plotdata(ledger_path, cols, config_near(config_path, ledger_path), std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return edns::kExitError;
    }
    return edns::kExitError;
}
