#pragma once

#include "densalg/scalar.hpp"

namespace densalg {

// Parses the expression grammar: rational literals, coordinate names,
// unary minus, + - * /, integer powers ^n, parentheses. Reports syntax
// errors with line and column.
ScalarExpr parse_expression(const std::string& text, const ChartPtr& chart);

} // namespace densalg
