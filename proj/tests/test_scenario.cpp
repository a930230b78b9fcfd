#include "test_support.hpp"

#include "densalg/scenario.hpp"

#include <doctest.h>

#include <sstream>

using namespace densalg;
using namespace densalg::test;

namespace {

const char* kF1 = R"json({
  "chart": [{"name": "x", "parity": "even"}],
  "weight": 0,
  "parity": "even",
  "S": [["1"]],
  "gamma": ["-2*x"],
  "theta": "0",
  "change": {"names": ["y"], "forward": ["2*x"], "inverse": ["y/2"]},
  "commands": ["build-pencil", "bracket-roundtrip", "transform",
               {"run": "recover", "w0": "2"},
               {"run": "decompose", "w0": "2"},
               {"run": "cocycle", "gamma0": "[\"0\"]", "gamma1": "[\"x\"]",
                "gamma2": "[\"x^2\"]"}]
})json";

const char* kF2Broken = R"json({
  "chart": [{"name": "x", "parity": "even"}, {"name": "xi", "parity": "odd"}],
  "weight": 0,
  "parity": "odd",
  "S": [["0", "1"], ["1", "0"]],
  "gamma": ["xi", "x^2"],
  "theta": "0",
  "commands": ["jacobi"]
})json";

} // namespace

TEST_CASE("scenario parsing") {
    Scenario s = parse_scenario(kF1, "f1");
    CHECK(s.chart->size() == 1);
    CHECK(s.data.weight == 0);
    CHECK(s.data.eps == Parity::even);
    CHECK(equals(s.data.S[0][0], ScalarExpr::constant(s.chart, Rational(1))));
    CHECK(equals(s.data.gamma[0], Rational(-2) * ScalarExpr::coordinate(s.chart, 0)));
    CHECK(s.data.theta.is_zero());
    CHECK(s.commands.size() == 6);
    REQUIRE(s.change.has_value());
    CHECK(equals(s.change->jacobian, ScalarExpr::constant(s.chart, Rational(2))));
}

TEST_CASE("scenario validation errors") {
    CHECK_THROWS_WITH_AS(parse_scenario(R"({"chart": []})", "bad"),
                         doctest::Contains("chart"), error);
    // malformed expression with position info
    CHECK_THROWS_WITH_AS(
        parse_scenario(R"({"chart": [{"name":"x","parity":"even"}], "S": [["x+*2"]]})", "bad"),
        doctest::Contains("col"), error);
    // undeclared coordinate
    CHECK_THROWS_WITH_AS(
        parse_scenario(R"({"chart": [{"name":"x","parity":"even"}], "S": [["q"]]})", "bad"),
        doctest::Contains("undeclared"), error);
    // odd coordinate in an even slot: theta of an even bracket must be even
    CHECK_THROWS_WITH_AS(
        parse_scenario(R"({"chart": [{"name":"x","parity":"even"},
                                      {"name":"xi","parity":"odd"}],
                           "parity": "even", "theta": "xi"})",
                       "bad"),
        doctest::Contains("parity"), error);
    // broken JSON
    CHECK_THROWS_AS(parse_scenario("{", "bad"), error);
}

TEST_CASE("running the F1 scenario passes every check") {
    Scenario s = parse_scenario(kF1, "f1");
    Report rep = run_scenario(s);
    CHECK(rep.all_pass);
    CHECK(rep.results.size() == 6);
    for (const auto& r : rep.results) CHECK(r.status == "pass");
    // determinism modulo the timing fields
    Report rep2 = run_scenario(s);
    REQUIRE(rep2.results.size() == rep.results.size());
    for (std::size_t i = 0; i < rep.results.size(); ++i) {
        CHECK(rep.results[i].command == rep2.results[i].command);
        CHECK(rep.results[i].status == rep2.results[i].status);
        CHECK(rep.results[i].detail == rep2.results[i].detail);
        CHECK(rep.results[i].residuals == rep2.results[i].residuals);
    }
}

TEST_CASE("broken gamma fails the jacobi command with a residual echo") {
    Scenario s = parse_scenario(kF2Broken, "f2-broken");
    Report rep = run_scenario(s);
    CHECK(!rep.all_pass);
    REQUIRE(rep.results.size() == 1);
    CHECK(rep.results[0].status == "fail");
    bool has_nonzero = false;
    for (const auto& line : rep.results[0].residuals)
        if (line.find("= 0") == std::string::npos) has_nonzero = true;
    CHECK(has_nonzero);
}

TEST_CASE("empty command list is an empty passing report") {
    Scenario s = parse_scenario(
        R"({"chart": [{"name":"x","parity":"even"}], "S": [["1"]], "commands": []})", "empty");
    Report rep = run_scenario(s);
    CHECK(rep.all_pass);
    CHECK(rep.results.empty());
}

TEST_CASE("command errors are captured per entry without aborting siblings") {
    Scenario s = parse_scenario(
        R"({"chart": [{"name":"x","parity":"even"}], "S": [["1"]],
            "commands": ["jacobi", "build-pencil"]})",
        "mixed");
    Report rep = run_scenario(s);
    REQUIRE(rep.results.size() == 2);
    CHECK(rep.results[0].status == "error"); // even brackets reject the Jacobi check
    CHECK(rep.results[1].status == "pass");
    CHECK(!rep.all_pass);
}

TEST_CASE("only filter selects a single command") {
    Scenario s = parse_scenario(kF1, "f1");
    Report rep = run_scenario(s, "bracket-roundtrip");
    REQUIRE(rep.results.size() == 1);
    CHECK(rep.results[0].command == "bracket-roundtrip");
}

TEST_CASE("reports serialize to text and json") {
    Scenario s = parse_scenario(kF2Broken, "f2-broken");
    Report rep = run_scenario(s);
    std::ostringstream text, json;
    print_report_text(rep, text);
    print_report_json(rep, json);
    CHECK(text.str().find("[FAIL] jacobi") != std::string::npos);
    CHECK(json.str().find("\"status\": \"fail\"") != std::string::npos);
    CHECK(json.str().find("\"all_pass\": false") != std::string::npos);
}
