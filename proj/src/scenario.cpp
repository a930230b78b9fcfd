#include "densalg/scenario.hpp"
#include "densalg/parser.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

namespace densalg {

using nlohmann::json;

namespace {

Rational parse_rational_field(const json& j, const char* what) {
    if (j.is_number_integer()) return Rational(static_cast<long>(j.get<long long>()));
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        try {
            Rational q(s);
            q.canonicalize();
            return q;
        } catch (const std::exception&) {
            throw error(std::string(what) + ": cannot parse rational '" + s + "'");
        }
    }
    throw error(std::string(what) + ": expected an integer or a rational string");
}

Parity parse_parity_field(const json& j, const char* what) {
    std::string s = j.get<std::string>();
    if (s == "even") return Parity::even;
    if (s == "odd") return Parity::odd;
    throw error(std::string(what) + ": parity must be \"even\" or \"odd\"");
}

ScalarExpr parse_expr_field(const json& j, const ChartPtr& chart, const std::string& what) {
    if (!j.is_string()) throw error(what + ": expected an expression string");
    try {
        return parse_expression(j.get<std::string>(), chart);
    } catch (const error& e) {
        throw error(what + ": " + e.what());
    }
}

} // namespace

Scenario parse_scenario(const std::string& text, const std::string& source_name) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw error("scenario: " + std::string(e.what()));
    }
    Scenario s;
    s.source_name = source_name;
    if (!doc.contains("chart") || !doc["chart"].is_array() || doc["chart"].empty())
        throw error("scenario: missing chart declaration");
    std::vector<std::string> names;
    std::vector<Parity> parities;
    for (const auto& c : doc["chart"]) {
        names.push_back(c.at("name").get<std::string>());
        parities.push_back(parse_parity_field(c.at("parity"), "chart"));
    }
    s.chart = make_chart(names, parities);
    std::size_t n = s.chart->size();

    Rational lambda = doc.contains("weight") ? parse_rational_field(doc["weight"], "weight")
                                             : Rational(0);
    Parity eps = doc.contains("parity") ? parse_parity_field(doc["parity"], "parity")
                                        : Parity::even;
    s.data = BracketData::zero(s.chart, lambda, eps);
    if (doc.contains("S")) {
        const auto& S = doc["S"];
        if (!S.is_array() || S.size() != n) throw error("scenario: S must be an n x n matrix");
        for (std::size_t a = 0; a < n; ++a) {
            if (!S[a].is_array() || S[a].size() != n)
                throw error("scenario: S must be an n x n matrix");
            for (std::size_t b = 0; b < n; ++b)
                s.data.S[a][b] = parse_expr_field(S[a][b], s.chart, "S entry");
        }
    }
    if (doc.contains("gamma")) {
        const auto& g = doc["gamma"];
        if (!g.is_array() || g.size() != n) throw error("scenario: gamma must have n entries");
        for (std::size_t a = 0; a < n; ++a)
            s.data.gamma[a] = parse_expr_field(g[a], s.chart, "gamma entry");
    }
    if (doc.contains("theta"))
        s.data.theta = parse_expr_field(doc["theta"], s.chart, "theta");
    try {
        s.data.validate();
    } catch (const error& e) {
        throw error("scenario: " + std::string(e.what()));
    }
    if (doc.contains("log_density"))
        s.log_density = parse_expr_field(doc["log_density"], s.chart, "log_density");

    if (doc.contains("change")) {
        const auto& ch = doc["change"];
        std::vector<std::string> new_names;
        if (ch.contains("names")) {
            for (const auto& nm : ch["names"]) new_names.push_back(nm.get<std::string>());
        } else {
            new_names = names;
        }
        if (new_names.size() != n) throw error("scenario: change.names must have n entries");
        ChartPtr to = make_chart(new_names, parities);
        const auto& fw = ch.at("forward");
        if (!fw.is_array() || fw.size() != n)
            throw error("scenario: change.forward must have n entries");
        std::vector<ScalarExpr> forward;
        for (std::size_t i = 0; i < n; ++i)
            forward.push_back(parse_expr_field(fw[i], s.chart, "change.forward"));
        std::optional<std::vector<ScalarExpr>> inverse;
        if (ch.contains("inverse") && !ch["inverse"].is_null()) {
            std::vector<ScalarExpr> inv;
            for (std::size_t i = 0; i < n; ++i)
                inv.push_back(parse_expr_field(ch["inverse"][i], to, "change.inverse"));
            inverse = std::move(inv);
        }
        std::optional<ScalarExpr> jac;
        if (ch.contains("jacobian") && !ch["jacobian"].is_null())
            jac = parse_expr_field(ch["jacobian"], s.chart, "change.jacobian");
        s.change = make_coord_change(s.chart, to, std::move(forward), std::move(inverse), jac);
    }

    if (doc.contains("commands")) {
        for (const auto& c : doc["commands"]) {
            Command cmd;
            if (c.is_string()) {
                cmd.name = c.get<std::string>();
            } else {
                cmd.name = c.at("run").get<std::string>();
                for (auto it = c.begin(); it != c.end(); ++it) {
                    if (it.key() == "run") continue;
                    if (it->is_string()) cmd.params[it.key()] = it->get<std::string>();
                    else cmd.params[it.key()] = it->dump();
                }
            }
            s.commands.push_back(std::move(cmd));
        }
    }
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

namespace {

struct CommandContext {
    const Scenario& s;
    CommandResult& out;

    void pass(const std::string& detail = "") {
        out.status = "pass";
        out.detail = detail;
    }
    void fail(const std::string& detail) {
        out.status = "fail";
        out.detail = detail;
    }
    void residual(const std::string& label, const std::string& value) {
        out.residuals.push_back(label + " = " + value);
    }
};

void cmd_build_pencil(CommandContext& c) {
    DiffOp op = canonical_pencil(c.s.data);
    bool self_adjoint = equals(adjoint(op), op);
    bool kills_unit = apply(op, Density::unit(c.s.chart)).is_zero();
    bool quadratic = op.max_wpow() <= 2 && op.pencil_order() <= 2;
    bool generates = true;
    auto probes = bracket_probe_densities(c.s.chart);
    for (std::size_t i = 0; i < probes.size() && generates; i += 7)
        for (std::size_t j = 1; j < probes.size() && generates; j += 9) {
            Density lhs = generated_bracket(op, probes[i], probes[j]);
            Density rhs = long_bracket_eval(c.s.data, probes[i], probes[j]);
            if (!(lhs == rhs)) {
                generates = false;
                c.residual("generation defect", (lhs - rhs).str());
            }
        }
    c.out.detail = "pencil: " + op.str();
    if (self_adjoint && kills_unit && quadratic && generates) c.pass(c.out.detail);
    else
        c.fail(std::string("self_adjoint=") + (self_adjoint ? "yes" : "no") +
               " kills_unit=" + (kills_unit ? "yes" : "no") +
               " quadratic=" + (quadratic ? "yes" : "no") +
               " generates=" + (generates ? "yes" : "no"));
}

void cmd_bracket_roundtrip(CommandContext& c) {
    DiffOp op = canonical_pencil(c.s.data);
    BracketData back = bracket_from_operator(op);
    if (back == c.s.data) {
        c.pass("bracket_from_operator o canonical_pencil = id");
        return;
    }
    for (std::size_t a = 0; a < back.gamma.size(); ++a) {
        for (std::size_t b = 0; b < back.gamma.size(); ++b)
            if (!equals(back.S[a][b], c.s.data.S[a][b]))
                c.residual("S defect", (back.S[a][b] - c.s.data.S[a][b]).str());
        if (!equals(back.gamma[a], c.s.data.gamma[a]))
            c.residual("gamma defect", (back.gamma[a] - c.s.data.gamma[a]).str());
    }
    if (!equals(back.theta, c.s.data.theta))
        c.residual("theta defect", (back.theta - c.s.data.theta).str());
    c.fail("round trip altered the data");
}

void cmd_jacobi(CommandContext& c) {
    auto r = check_jacobi_equations(c.s.data);
    const char* labels[4] = {"(S,S)-2lSg", "(S,g)-lSth", "(S,th)+(g,g)-lgth", "(g,th)"};
    bool all_zero = true;
    for (int i = 0; i < 4; ++i) {
        c.residual(labels[i], r[static_cast<std::size_t>(i)].str());
        if (!r[static_cast<std::size_t>(i)].is_zero()) all_zero = false;
    }
    if (!all_zero) {
        c.fail("nonzero Jacobi residual");
        return;
    }
    // cross-check: the cyclic sums vanish on probe triples
    auto probes = bracket_probe_densities(c.s.chart);
    for (std::size_t i = 0; i < probes.size(); i += 11)
        for (std::size_t j = 3; j < probes.size(); j += 13)
            for (std::size_t k = 7; k < probes.size(); k += 17)
                for (Parity pi : {Parity::even, Parity::odd})
                    for (Parity pj : {Parity::even, Parity::odd})
                        for (Parity pk : {Parity::even, Parity::odd}) {
                            Density a = probes[i].parity_part(pi);
                            Density b = probes[j].parity_part(pj);
                            Density e = probes[k].parity_part(pk);
                            if (a.is_zero() || b.is_zero() || e.is_zero()) continue;
                            Density cyc = cyclic_jacobi_residual(c.s.data, a, b, e);
                            if (!cyc.is_zero()) {
                                c.residual("cyclic sum", cyc.str());
                                c.fail("residuals vanish but a cyclic sum does not");
                                return;
                            }
                        }
    c.pass("all four residuals vanish; cyclic sums vanish on probe triples");
}

void cmd_delta_squared(CommandContext& c) {
    DiffOp op = canonical_pencil(c.s.data);
    DeltaSquaredReport rep = classify_delta_squared(op);
    bool jacobi_ok = true;
    for (const auto& r : check_jacobi_equations(c.s.data))
        if (!r.is_zero()) jacobi_ok = false;
    std::string detail;
    bool ok;
    if (rep.is_zero) {
        detail = "Delta^2 = 0 (master equation holds)";
        ok = jacobi_ok;
    } else if (rep.order <= 1) {
        detail = "Delta^2 = Lie_X, X = (";
        for (std::size_t a = 0; a < rep.m_vector_field.size(); ++a) {
            if (a) detail += ", ";
            detail += rep.m_vector_field[a].str();
        }
        detail += ")";
        ok = jacobi_ok && rep.divergence_free && rep.lie_form && rep.poisson_field;
    } else {
        detail = "ord Delta^2 = " + std::to_string(rep.order);
        if (rep.order3_symbol) c.residual("order-3 symbol", rep.order3_symbol->str());
        ok = !jacobi_ok;
    }
    if (ok) c.pass(detail);
    else c.fail(detail + " (inconsistent with the Jacobi residuals)");
}

void cmd_transform(CommandContext& c) {
    if (!c.s.change) throw error("transform: scenario declares no coordinate change");
    const CoordChange& ch = *c.s.change;
    BracketData moved = transform_bracket_data(c.s.data, ch);
    DiffOp lhs = canonical_pencil_in_frame(moved, ch);
    DiffOp rhs = transform_operator(canonical_pencil(c.s.data), ch);
    for (std::size_t a = 0; a < moved.gamma.size(); ++a)
        c.residual("gamma'[" + std::to_string(a) + "] (pullback)", moved.gamma[a].str());
    c.residual("theta' (pullback)", moved.theta.str());
    if (equals(lhs, rhs)) c.pass("canonical pencil commutes with the change of coordinates");
    else c.fail("naturality violated: " + (lhs - rhs).str());
}

void cmd_cocycle(CommandContext& c, const Command& cmd) {
    auto get_conn = [&](const std::string& key) {
        auto it = cmd.params.find(key);
        if (it == cmd.params.end()) throw error("cocycle: missing parameter '" + key + "'");
        json arr = json::parse(it->second);
        ConnectionOnVol conn{c.s.chart, {}};
        for (const auto& e : arr)
            conn.gamma_lower.push_back(parse_expression(e.get<std::string>(), c.s.chart));
        if (conn.gamma_lower.size() != c.s.chart->size())
            throw error("cocycle: connection has wrong length");
        return conn;
    };
    ConnectionOnVol g0 = get_conn("gamma0"), g1 = get_conn("gamma1"), g2 = get_conn("gamma2");
    ScalarExpr c01 = bv_cocycle(c.s.data.S, g0, g1);
    ScalarExpr c12 = bv_cocycle(c.s.data.S, g1, g2);
    ScalarExpr c02 = bv_cocycle(c.s.data.S, g0, g2);
    ScalarExpr defect = c01 + c12 - c02;
    c.residual("c(g0,g1)", c01.str());
    c.residual("c(g1,g2)", c12.str());
    c.residual("c(g0,g2)", c02.str());
    if (defect.is_zero()) c.pass("cocycle additivity holds");
    else c.fail("additivity defect: " + defect.str());
}

void cmd_recover(CommandContext& c, const Command& cmd) {
    Rational w0(2);
    if (auto it = cmd.params.find("w0"); it != cmd.params.end()) {
        Rational q(it->second);
        q.canonicalize();
        w0 = q;
    }
    ScalarExpr A = c.s.log_density ? *c.s.log_density : ScalarExpr::zero(c.s.chart);
    DiffOp pencil = canonical_pencil(c.s.data);
    DiffOp slice = specialize(pencil, w0);
    DiffOp rec = recover_pencil(slice, w0, A);
    bool round = equals(rec, pencil);
    ScalarExpr A2 = A + power(ScalarExpr::coordinate(c.s.chart, 0), 2);
    bool indep = equals(recover_pencil(slice, w0, A2), rec);
    c.residual("recovered", rec.str());
    if (round && indep) {
        c.pass("pencil recovered from its w0-slice, independent of the gauge");
    } else if (!round) {
        c.residual("difference", (rec - pencil).str());
        c.fail("recovered pencil differs");
    } else {
        c.fail("recovery depends on the auxiliary volume form");
    }
}

void cmd_decompose(CommandContext& c, const Command& cmd) {
    Rational w0(2);
    if (auto it = cmd.params.find("w0"); it != cmd.params.end()) {
        Rational q(it->second);
        q.canonicalize();
        w0 = q;
    }
    ScalarExpr A = c.s.log_density ? *c.s.log_density : ScalarExpr::zero(c.s.chart);
    DiffOp slice = specialize(canonical_pencil(c.s.data), w0);
    OperatorDecomposition dec = decompose_operator(slice, w0, A);
    for (std::size_t a = 0; a < dec.Q.size(); ++a)
        c.residual("Q[" + std::to_string(a) + "]", dec.Q[a].str());
    c.residual("f", dec.f.str());
    // rebuild L = Delta^LB + Lie_Q + f
    auto eps = slice.parity();
    const ChartPtr& chart = c.s.chart;
    DiffOp lb = specialize(
        canonical_pencil(lb_pencil_from_volume(chart, c.s.data.S, A, Rational(0), *eps)), w0);
    DiffOp lie(chart, Rational(0));
    ScalarExpr divQ = ScalarExpr::zero(chart);
    for (std::size_t a = 0; a < dec.Q.size(); ++a) {
        lie.add_term({static_cast<int>(a)}, 0, dec.Q[a]);
        ScalarExpr t = differentiate(dec.Q[a], static_cast<int>(a));
        if (chart->parity(static_cast<int>(a)) == Parity::odd && *eps == Parity::even) t = -t;
        divQ = divQ + t;
    }
    lie.add_term({}, 0, w0 * divQ);
    DiffOp rebuilt = lb + lie + DiffOp::multiplication(Rational(0), dec.f);
    if (equals(rebuilt, slice)) {
        c.pass("L = Delta^LB + Lie_Q + f, recomposition exact");
    } else {
        c.residual("difference", (rebuilt - slice).str());
        c.fail("recomposition differs");
    }
}

void cmd_bv_master(CommandContext& c) {
    if (!c.s.log_density) throw error("bv-master: scenario declares no log_density");
    Density residual = bv_master_check(c.s.data, *c.s.log_density);
    DeltaSquaredReport rep = classify_delta_squared(canonical_pencil(c.s.data));
    c.residual("Delta_{1/2}(rho^{1/2}) / rho^{1/2}", residual.str());
    bool agree = residual.is_zero() == rep.is_zero;
    if (!agree) {
        c.fail("master-equation tests disagree between the two code paths");
        return;
    }
    if (residual.is_zero()) {
        c.pass("master equation holds; Delta^2 = 0 confirmed");
        return;
    }
    // generic case: the residual is the Hamiltonian of the Poisson field
    bool matches = false;
    if (rep.X) {
        Density h = Density::monomial(Rational(0), residual.component(Rational(1, 2)));
        Derivation grad_h = grad_derivation(c.s.data, h);
        matches = grad_h == *rep.X;
    }
    if (matches) c.pass("residual generates the Poisson field of Delta^2 = Lie_X");
    else c.fail("residual does not match the Delta^2 Hamiltonian");
}

void cmd_sturm(CommandContext& c) {
    if (!c.s.change) throw error("sturm-demo: scenario declares no coordinate change");
    if (c.s.data.weight != 2) throw error("sturm-demo: weight must be 2");
    SturmReport rep = sturm_liouville_demo(c.s.data.S[0][0], c.s.data.gamma[0], c.s.data.theta,
                                           *c.s.change);
    c.residual("U", rep.potential.str());
    c.residual("U' (data route, pullback)", rep.potential_new.str());
    c.residual("U' (conjugation oracle)", rep.potential_oracle.str());
    c.residual("schwarzian", rep.schwarzian.str());
    bool agree = equals(rep.potential_new, rep.potential_oracle);
    std::string conv = rep.sign_convention > 0   ? "U' = (y_x)^-2 (U + S/2)"
                       : rep.sign_convention < 0 ? "U' = (y_x)^-2 (U - S/2)"
                                                 : "no single-sign relation";
    if (agree) c.pass("both routes agree; " + conv);
    else c.fail("transformation routes disagree");
}

} // namespace

Report run_scenario(const Scenario& s, const std::string& only) {
    Report rep;
    rep.scenario = s.source_name;
    {
        std::ostringstream echo;
        echo << "chart:";
        for (std::size_t i = 0; i < s.chart->size(); ++i)
            echo << " " << s.chart->name(static_cast<int>(i)) << "("
                 << parity_name(s.chart->parity(static_cast<int>(i))) << ")";
        echo << "; weight " << to_string(s.data.weight) << ", " << parity_name(s.data.eps);
        rep.fixture_echo = echo.str();
    }
    for (const Command& cmd : s.commands) {
        if (!only.empty() && cmd.name != only) continue;
        CommandResult res;
        res.command = cmd.name;
        CommandContext ctx{s, res};
        auto start = std::chrono::steady_clock::now();
        try {
            if (cmd.name == "build-pencil") cmd_build_pencil(ctx);
            else if (cmd.name == "bracket-roundtrip") cmd_bracket_roundtrip(ctx);
            else if (cmd.name == "jacobi") cmd_jacobi(ctx);
            else if (cmd.name == "delta-squared") cmd_delta_squared(ctx);
            else if (cmd.name == "transform") cmd_transform(ctx);
            else if (cmd.name == "recover") cmd_recover(ctx, cmd);
            else if (cmd.name == "decompose") cmd_decompose(ctx, cmd);
            else if (cmd.name == "bv-master") cmd_bv_master(ctx);
            else if (cmd.name == "sturm-demo") cmd_sturm(ctx);
            else if (cmd.name == "cocycle") cmd_cocycle(ctx, cmd);
            else throw error("unknown command '" + cmd.name + "'");
        } catch (const std::exception& e) {
            res.status = "error";
            res.detail = e.what();
        }
        auto end = std::chrono::steady_clock::now();
        res.ms = std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();
        if (res.status != "pass") rep.all_pass = false;
        rep.results.push_back(std::move(res));
    }
    return rep;
}

void print_report_text(const Report& r, std::ostream& os) {
    os << "scenario: " << r.scenario << "\n" << r.fixture_echo << "\n";
    for (const auto& res : r.results) {
        os << "[" << (res.status == "pass" ? "PASS" : res.status == "fail" ? "FAIL" : "ERROR")
           << "] " << res.command << " (" << res.ms << " ms)";
        if (!res.detail.empty()) os << " " << res.detail;
        os << "\n";
        for (const auto& line : res.residuals) os << "        " << line << "\n";
    }
    os << (r.all_pass ? "all checks passed" : "CHECKS FAILED") << "\n";
}

void print_report_json(const Report& r, std::ostream& os) {
    json doc;
    doc["scenario"] = r.scenario;
    doc["fixture"] = r.fixture_echo;
    doc["all_pass"] = r.all_pass;
    doc["results"] = json::array();
    for (const auto& res : r.results) {
        json jr;
        jr["command"] = res.command;
        jr["status"] = res.status;
        jr["detail"] = res.detail;
        jr["residuals"] = res.residuals;
        jr["ms"] = res.ms;
        doc["results"].push_back(jr);
    }
    os << doc.dump(2) << "\n";
}

} // namespace densalg
