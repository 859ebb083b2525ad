#include <CLI11.hpp>
#include <string>

#include "dnull/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"double-null initial-data verification suite"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int grid = 0;
    long long seed = -1;

    std::vector<CLI::App*> subs;
    for (const std::string& name : dnull::known_commands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--out", out_dir, "output directory (overrides config and DNULL_OUT_DIR)");
        sub->add_option("--grid", grid, "radial grid nodes override");
        sub->add_option("--seed", seed, "seed override");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    for (CLI::App* sub : subs)
        if (sub->parsed()) return dnull::run_cli(sub->get_name(), config_path, out_dir, grid, seed);
    return 2;
}
