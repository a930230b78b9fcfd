#pragma once

#include "densalg/chart.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace densalg {

// Exponent vector over all chart coordinates; odd positions stay zero
// (odd generators live in the OddWord part of a ScalarExpr term).
using Expo = std::vector<int>;

// Sparse multivariate polynomial over Q in the even coordinates of a chart.
struct Poly {
    std::map<Expo, Rational> terms; // no zero coefficients

    bool is_zero() const { return terms.empty(); }
    bool is_one() const;
    bool is_constant() const;
    Rational constant_value() const; // requires is_constant()
    int degree() const;              // total degree, -1 for zero

    bool operator==(const Poly& o) const { return terms == o.terms; }
};

Poly poly_zero();
Poly poly_const(std::size_t nvars, const Rational& c);
Poly poly_var(std::size_t nvars, int i);
Poly poly_add(const Poly& a, const Poly& b);
Poly poly_sub(const Poly& a, const Poly& b);
Poly poly_neg(const Poly& a);
Poly poly_mul(const Poly& a, const Poly& b);
Poly poly_scale(const Poly& a, const Rational& c);
Poly poly_pow(const Poly& a, int k);
Poly poly_derivative(const Poly& a, int var);
// Exact multivariate division; returns the quotient iff b divides a.
std::optional<Poly> poly_exact_divide(const Poly& a, const Poly& b);

// Unreduced rational function num/den: equality is decided by
// cross-multiplication, so reduction matters only for size control.
struct RatFn {
    Poly num;
    Poly den; // nonzero; normalized monic in the leading coefficient

    bool is_zero() const { return num.is_zero(); }
};

RatFn ratfn_zero();
RatFn ratfn_const(std::size_t nvars, const Rational& c);
RatFn ratfn_make(Poly num, Poly den);
RatFn ratfn_add(const RatFn& a, const RatFn& b);
RatFn ratfn_sub(const RatFn& a, const RatFn& b);
RatFn ratfn_neg(const RatFn& a);
RatFn ratfn_mul(const RatFn& a, const RatFn& b);
RatFn ratfn_recip(const RatFn& a);
RatFn ratfn_scale(const RatFn& a, const Rational& c);
RatFn ratfn_derivative(const RatFn& a, int var);
bool ratfn_equal(const RatFn& a, const RatFn& b);

// Strictly increasing list of odd coordinate indices (square-free word).
using OddWord = std::vector<int>;

// Graded-commutative scalar: sum over odd-generator words of rational
// functions in the even coordinates. The coefficient ring for the engine.
class ScalarExpr {
public:
    ScalarExpr() = default;
    explicit ScalarExpr(ChartPtr chart) : chart_(std::move(chart)) {}

    static ScalarExpr zero(const ChartPtr& chart);
    static ScalarExpr constant(const ChartPtr& chart, const Rational& c);
    static ScalarExpr coordinate(const ChartPtr& chart, int i);
    static ScalarExpr from_ratfn(const ChartPtr& chart, RatFn r);

    const ChartPtr& chart() const { return chart_; }
    const std::map<OddWord, RatFn>& terms() const { return terms_; }

    bool is_zero() const { return terms_.empty(); }
    // Parity of a nonzero homogeneous expression; nullopt when mixed.
    // Zero counts as having every parity.
    std::optional<Parity> parity() const;
    bool has_parity(Parity p) const;
    ScalarExpr parity_part(Parity p) const;

    // Word parity of a single term = number of odd generators mod 2.
    void add_term(const OddWord& w, const RatFn& c);

    ScalarExpr body() const; // empty-word part
    ScalarExpr soul() const; // nilpotent remainder

    std::string str() const;

    bool operator==(const ScalarExpr& o) const { return equals(*this, o); }

    friend ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b);
    friend ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b);
    friend ScalarExpr operator-(const ScalarExpr& a);
    friend ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b);
    friend ScalarExpr operator*(const Rational& c, const ScalarExpr& a);

    friend bool equals(const ScalarExpr& a, const ScalarExpr& b);

private:
    ChartPtr chart_;
    std::map<OddWord, RatFn> terms_; // no zero entries
};

// Left partial derivative with Koszul signs.
ScalarExpr differentiate(const ScalarExpr& a, int coord);
ScalarExpr differentiate(const ScalarExpr& a, const std::string& coord);

// Multiplicative inverse; requires an invertible body (soul handled by
// nilpotent expansion). Throws when the body vanishes identically.
ScalarExpr inverse(const ScalarExpr& a);
ScalarExpr divide(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr power(const ScalarExpr& a, long k);

// Simultaneous parity-preserving substitution. Unmapped coordinates must
// not occur in `a` unless target == a.chart() (then they map to themselves).
// Targets live on `target`; the result does too.
ScalarExpr substitute(const ScalarExpr& a,
                      const std::vector<std::optional<ScalarExpr>>& images,
                      const ChartPtr& target);
// Convenience for same-chart substitution maps keyed by name.
ScalarExpr substitute(const ScalarExpr& a,
                      const std::map<std::string, ScalarExpr>& images);

} // namespace densalg
