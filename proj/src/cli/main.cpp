#include "hjblab/run.hpp"

#include <iostream>
#include <string>

#include <CLI11.hpp>

int main(int argc, char** argv)
{
    CLI::App app{"hjblab: controlled-diffusion HJB experiments with measurable drift"};
    app.require_subcommand(1, 1);

    std::string config;
    hjblab::RunOptions options;
    options.out_dir = hjblab::default_out_dir();
    std::uint64_t seed = 0;

    const auto add_common = [&](CLI::App* sub, bool needs_config) {
        if (needs_config) {
            sub->add_option("config_path", config, "Scenario file or built-in scenario name");
            sub->add_option("--config,-c", config, "Scenario file or built-in scenario name");
        }
        sub->add_option("--out,-o", options.out_dir, "Output directory (default: $HJBLAB_OUT or ./hjblab-out)");
        sub->add_option("--seed-override", seed, "Replace the Monte Carlo seed of the config");
        sub->add_option("--threads,-j", options.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--strict", options.strict, "Treat config warnings as errors");
    };

    const std::map<std::string, std::string> help{
        {"solve-hjb", "Solve the HJB equation directly"},
        {"policy-iter", "Run policy iteration and compare with the direct solver"},
        {"verify", "Monte Carlo verification inequalities"},
        {"dpp-check", "Dynamic programming residuals"},
        {"mollify-sweep", "Value gaps along a mollification ladder"},
        {"truncation-study", "Countable action sets through truncations"},
        {"simulate", "Simulate the cost of one feedback"},
        {"counterexample", "Closed-form strict-gap report"},
        {"catalog", "List coefficient families and built-in scenarios"},
        {"selftest", "Run the acceptance battery"},
    };
    for (const auto& name : hjblab::subcommands())
        add_common(app.add_subcommand(name, help.at(name)), name != "catalog" && name != "selftest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hjblab::exit_config_error;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed-override"))
        options.seed_override = seed;
    return hjblab::run(sub->get_name(), config, options, std::cout, std::cerr);
}
