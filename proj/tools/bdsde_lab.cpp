// Batch experiment runner for the BDSDE laboratory.
//
// Usage: bdsde_lab --config experiment.json [--out DIR] [--seed N] [--quiet]
//
// Exit status: 0 on success, 2 on a checked failure (assumption violation,
// comparison failure, non-convergence), 1 on error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "bdsde/config.hpp"
#include "bdsde/runner.hpp"
#include "bdsde/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{std::string(bdsde::kVersion) +
                 " — infinite-horizon BDSDE numerical laboratory"};
    std::string config_path;
    bdsde::RunOptions opts;
    opts.out_dir = "out";
    std::int64_t seed_flag = -1;
    app.add_option("--config", config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--out", opts.out_dir, "output directory (default ./out)");
    app.add_option("--seed", seed_flag, "override mc.seed from the config");
    app.add_flag("--quiet", opts.quiet, "suppress progress chatter");
    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream in(config_path, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        bdsde::ExperimentConfig cfg = bdsde::parse_config(buf.str());
        if (seed_flag >= 0) opts.seed_override = static_cast<std::uint64_t>(seed_flag);
        return bdsde::run(std::move(cfg), opts);
    } catch (const bdsde::ParseError& e) {
        std::cerr << "config parse error: " << e.what() << "\n";
        return 1;
    } catch (const bdsde::ValidationError& e) {
        std::cerr << "config validation error: " << e.what() << "\n";
        return 1;
    } catch (const bdsde::IllegalVariable& e) {
        std::cerr << "expression error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
