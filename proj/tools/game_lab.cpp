#include "gamelab/commands.hpp"
#include "gamelab/errors.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericError = 3;

struct Options {
    std::string config;
    std::string out;
    std::string format;
};

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw gamelab::ConfigError("cannot open output file '" + path + "'");
    f << text;
    if (!f.flush())
        throw gamelab::ConfigError("failed writing output file '" + path + "'");
}

} // namespace

int main(int argc, char** argv)
{
    using namespace gamelab;

    CLI::App app{"Equilibrium and stability lab for ALOHA and power-control games with altruism"};
    app.require_subcommand(1);

    Options opt;
    const std::map<std::string, std::string> descriptions{
        {"nep", "Interior equilibria with residuals, criteria, eigenvalues and classifications"},
        {"simulate", "Integrate the response dynamics; trajectory CSV"},
        {"sweep-alpha", "Stability of each equilibrium across altruism levels"},
        {"contour", "Lyapunov function on a grid"},
        {"basin", "Attractor label for each grid start"},
    };
    for (const auto& [name, help] : descriptions) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config, "Scenario JSON file")->required();
        sub->add_option("--out", opt.out, "Output file (default: standard output)");
        sub->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const Scenario scenario = load_scenario(opt.config);
        const unsigned threads = thread_budget();
        const std::string fmt = opt.format.empty() ? (command == "nep" ? "json" : "csv") : opt.format;
        const OutputFormat format = fmt == "json" ? OutputFormat::Json : OutputFormat::Csv;

        CommandResult result;
        if (command == "nep")
            result = cmd_nep(scenario, format);
        else if (command == "simulate")
            result = cmd_simulate(scenario, format);
        else if (command == "sweep-alpha")
            result = cmd_sweep(scenario, format, threads);
        else if (command == "contour")
            result = cmd_contour(scenario, format);
        else
            result = cmd_basin(scenario, format, threads);

        // nep always echoes its report; the rest write one artifact.
        if (!opt.out.empty())
            write_file(opt.out, result.text);
        if (opt.out.empty() || command == "nep")
            std::cout << result.text << std::flush;
        for (const auto& note : result.notes)
            std::cerr << command << ": " << note << '\n';
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << command << ": config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        std::cerr << command << ": numeric failure: " << e.what() << '\n';
        return kNumericError;
    } catch (const std::exception& e) {
        std::cerr << command << ": numeric failure: " << e.what() << '\n';
        return kNumericError;
    }
}
