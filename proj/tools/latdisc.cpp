// latdisc command line front end.
#include <chrono>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "latdisc/cli.hpp"
#include "latdisc/error.hpp"

int main(int argc, char** argv) {
    using namespace latdisc;
    CLI::App app{"Lattice points in dilated convex bodies: counts, discrepancy, Fourier checks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "latdisc_out";
    unsigned threads = 1;
    long long budget = 0;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
    app.add_option("--budget", budget, "maximum stored gauge events")->check(CLI::PositiveNumber);
    app.add_option("--set", sets, "override a config key: key=value");

    // Per-command shortcuts for the common keys; each maps to `<command>.<key>`.
    struct Flag {
        const char* name;
        const char* key;
        const char* help;
    };
    const std::map<std::string, std::vector<Flag>> flags = {
        {"count", {{"--body", "body", "body descriptor"}, {"--t", "t", "dilation"}, {"--lo", "lo", "also write jumps on (lo, t]"}}},
        {"msd", {{"--body", "body", ""}, {"--R", "R", "window start"}, {"--h", "h", "window length"}, {"--relative", "relative", "true/false"}}},
        {"sweep", {{"--body", "body", ""}, {"--R", "R", "grid, e.g. 2^4..2^11"}, {"--window", "window", "full | short | fixed:<h>"}, {"--relative", "relative", "true/false"}}},
        {"mollify", {{"--body", "body", ""}, {"--t", "t", ""}, {"--eps", "eps", ""}, {"--sandwich-t", "sandwich_t", "grid for the sandwich check"}}},
        {"poisson-check", {{"--body", "body", ""}, {"--t", "t", ""}, {"--eps", "eps", ""}, {"--K", "K", "truncation radius"}}},
        {"fourier-scan", {{"--body", "body", ""}, {"--radii", "radii", "e.g. log:1..1000:200"}, {"--directions", "directions", ""}}},
        {"rotate-scan", {{"--body", "body", ""}, {"--angles", "angles", "e.g. 0,golden,atan:3/7"}, {"--K", "K", ""}, {"--R", "R", ""}, {"--eps", "eps", ""}}},
        {"diag", {{"--body", "body", ""}, {"--tau", "tau", ""}, {"--eps", "eps", ""}}},
    };
    std::map<std::string, std::map<std::string, std::string>> given;
    for (const auto& name : command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->set_help_flag("--help", "Print this help message and exit");
        sub->fallthrough();
        for (const auto& f : flags.at(name)) sub->add_option(f.name, given[name][f.key], f.help);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    const auto start = std::chrono::steady_clock::now();
    Config cfg;
    try {
        if (!config_path.empty()) cfg = Config::load(config_path);
        for (const auto& [key, value] : given[command])
            if (!value.empty()) cfg.set(command + "." + key, value);
        if (budget > 0) cfg.set("budget", std::to_string(budget));
        for (const auto& s : sets) cfg.set_assignment(s);
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    RunContext ctx;
    ctx.out_dir = out_dir;
    ctx.threads = threads;
    ctx.out = &std::cout;
    const int rc = run_command(command, cfg, ctx, std::cerr);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "wall time %.3f s\n", wall);
    return rc;
}
