#include <iostream>

#include <CLI11.hpp>

#include "mrc/app.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Mean-reverting correlation toolkit"};
    app.require_subcommand(1);
    mrc::CliRequest req;
    std::uint64_t seed = 0;
    for (const auto& name : mrc::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", req.config_path, "JSON run configuration or manifest");
        sub->add_option("--seed", seed, "overrides the configured seed");
        sub->add_option("--out", req.out_dir, "output directory")->capture_default_str();
        sub->add_option("--workers", req.workers, "worker threads (0: all cores); results do not depend on it")
            ->check(CLI::NonNegativeNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    req.command = app.get_subcommands().front()->get_name();
    if (app.get_subcommands().front()->count("--seed")) req.seed = seed;
    return mrc::run_cli(req, std::cerr);
}
