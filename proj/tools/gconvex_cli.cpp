#include "gconvex/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

int main(int argc, char** argv)
{
    CLI::App app{"Sublinear expectation experiments: G-heat, G-BSDE and G-convexity"};
    app.require_subcommand(1);

    const std::map<std::string, std::string> help = {
        {"gexp", "G-expectation of phi(B_t) by the G-heat scheme"},
        {"gbsde", "solve a Markovian G-BSDE and report Y, Z, eta and K"},
        {"convexity", "scan the pointwise G-convexity condition for h"},
        {"jensen", "compare E[h(phi)] with h(E[phi]) over horizons"},
        {"replimit", "difference quotients against the generator formula"},
        {"oracle-check", "cross-check the PDE with the tree and path oracles"},
    };
    std::string config_path;
    std::string out_dir = ".";
    for (const std::string& name : gconvex::command_names()) {
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("--config", config_path, "experiment configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : gconvex::kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    return gconvex::run_cli(command, config_path, out_dir, std::cerr);
}
