#pragma once

#include "densalg/geometry.hpp"

#include <iosfwd>

namespace densalg {

struct Command {
    std::string name;
    std::map<std::string, std::string> params; // raw strings from the file
};

// A chart, bracket data, optional log-density and coordinate change, and a
// command list, loaded from a structured scenario file.
struct Scenario {
    ChartPtr chart;
    BracketData data;
    std::optional<ScalarExpr> log_density;
    std::optional<CoordChange> change;
    std::vector<Command> commands;
    std::string source_name;
};

struct CommandResult {
    std::string command;
    std::string status; // pass | fail | error
    std::string detail;
    std::vector<std::string> residuals;
    long long ms = 0;
};

struct Report {
    std::string scenario;
    std::string fixture_echo;
    std::vector<CommandResult> results;
    bool all_pass = true;
};

// Parses the JSON scenario document; throws densalg::error with a message
// on syntax or validation problems.
Scenario parse_scenario(const std::string& text, const std::string& source_name);
Scenario load_scenario_file(const std::string& path);

// Executes the commands (optionally only the named one). Command-level
// failures are captured per entry and never abort the siblings.
Report run_scenario(const Scenario& s, const std::string& only = "");

void print_report_text(const Report& r, std::ostream& os);
void print_report_json(const Report& r, std::ostream& os);

} // namespace densalg
