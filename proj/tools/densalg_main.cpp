#include "densalg/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

// Built-in demo fixtures.
const char* kSturmScenario = R"json({
  "chart": [{"name": "x", "parity": "even"}],
  "weight": 2,
  "parity": "even",
  "S": [["1"]],
  "gamma": ["0"],
  "theta": "0",
  "change": {"names": ["y"], "forward": ["x^2"]},
  "commands": ["sturm-demo", "transform"]
})json";

const char* kBvScenario = R"json({
  "chart": [{"name": "x", "parity": "even"}, {"name": "xi", "parity": "odd"}],
  "weight": 0,
  "parity": "odd",
  "S": [["0", "1"], ["1", "0"]],
  "gamma": ["0", "-2*x"],
  "theta": "0",
  "log_density": "x^2",
  "commands": ["build-pencil", "bracket-roundtrip", "jacobi", "delta-squared", "bv-master"]
})json";

int run(const densalg::Scenario& s, const std::string& format, const std::string& only) {
    densalg::Report rep = densalg::run_scenario(s, only);
    if (!only.empty() && rep.results.empty()) {
        std::cerr << "error: no command named '" << only << "' in the scenario\n";
        return 2;
    }
    if (format == "json") densalg::print_report_json(rep, std::cout);
    else densalg::print_report_text(rep, std::cout);
    return rep.all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"densalg: exact checker for brackets, pencils and operators on densities"};
    app.require_subcommand(1);

    std::string scenario_path, format = "text", only;
    CLI::App* check = app.add_subcommand("check", "run the checks of a scenario file");
    check->add_option("scenario", scenario_path, "scenario file (JSON)")->required();
    check->add_option("--report", format, "report format")
        ->check(CLI::IsMember({"text", "json"}));
    check->add_option("--only", only, "run a single command by name");

    std::string demo_name;
    CLI::App* demo = app.add_subcommand("demo", "run a built-in demonstration");
    demo->add_option("name", demo_name, "demo name: sturm | bv")->required();
    demo->add_option("--report", format, "report format")
        ->check(CLI::IsMember({"text", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (check->parsed()) {
            return run(densalg::load_scenario_file(scenario_path), format, only);
        }
        if (demo->parsed()) {
            if (demo_name == "sturm")
                return run(densalg::parse_scenario(kSturmScenario, "demo:sturm"), format, "");
            if (demo_name == "bv")
                return run(densalg::parse_scenario(kBvScenario, "demo:bv"), format, "");
            std::cerr << "unknown demo '" << demo_name << "'\n";
            return 2;
        }
    } catch (const densalg::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
