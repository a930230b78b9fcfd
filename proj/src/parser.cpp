#include "densalg/parser.hpp"

#include <cctype>

namespace densalg {

namespace {

struct Parser {
    const std::string& text;
    const ChartPtr& chart;
    std::size_t pos = 0;
    int line = 1, col = 1;

    [[noreturn]] void fail(const std::string& msg) const {
        throw error("line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + msg);
    }

    void advance() {
        if (pos < text.size()) {
            if (text[pos] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++pos;
        }
    }

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) advance();
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            advance();
            return true;
        }
        return false;
    }

    Rational parse_integer() {
        skip_ws();
        bool neg = false;
        if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
            neg = text[pos] == '-';
            advance();
        }
        if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
            fail("expected an integer");
        std::string digits;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            digits += text[pos];
            advance();
        }
        Rational q(digits);
        return neg ? Rational(-q) : q;
    }

    ScalarExpr parse_primary() {
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of expression");
        char c = text[pos];
        if (c == '(') {
            advance();
            ScalarExpr e = parse_sum();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            return ScalarExpr::constant(chart, parse_integer());
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string name;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
                name += text[pos];
                advance();
            }
            int idx = chart->index_of(name);
            if (idx < 0) fail("undeclared coordinate '" + name + "'");
            return ScalarExpr::coordinate(chart, idx);
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    ScalarExpr parse_factor() {
        if (accept('-')) return -parse_factor();
        ScalarExpr e = parse_primary();
        while (peek() == '^') {
            advance();
            Rational k = parse_integer();
            if (!is_integer(k)) fail("exponent must be an integer");
            long e_int = k.get_num().get_si();
            try {
                e = power(e, e_int);
            } catch (const error& ex) {
                fail(ex.what());
            }
        }
        return e;
    }

    ScalarExpr parse_term() {
        ScalarExpr e = parse_factor();
        for (;;) {
            if (accept('*')) {
                e = e * parse_factor();
            } else if (accept('/')) {
                ScalarExpr d = parse_factor();
                try {
                    e = divide(e, d);
                } catch (const error& ex) {
                    fail(ex.what());
                }
            } else {
                return e;
            }
        }
    }

    ScalarExpr parse_sum() {
        ScalarExpr e = parse_term();
        for (;;) {
            if (accept('+')) e = e + parse_term();
            else if (accept('-')) e = e - parse_term();
            else return e;
        }
    }
};

} // namespace

ScalarExpr parse_expression(const std::string& text, const ChartPtr& chart) {
    Parser p{text, chart};
    ScalarExpr e = p.parse_sum();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    return e;
}

} // namespace densalg
