#pragma once

#include "densalg/scalar.hpp"

#include <map>

namespace densalg {

// Element of the algebra of densities: finite sum over rational weights w
// of coefficient terms psi_w(x) t^w, t the formal volume element.
class Density {
public:
    Density() = default;
    explicit Density(ChartPtr chart) : chart_(std::move(chart)) {}

    static Density zero(const ChartPtr& chart);
    static Density unit(const ChartPtr& chart); // 1 at weight 0
    static Density monomial(const Rational& w, const ScalarExpr& coeff);

    const ChartPtr& chart() const { return chart_; }
    const std::map<Rational, ScalarExpr>& comps() const { return comps_; }

    bool is_zero() const { return comps_.empty(); }
    ScalarExpr component(const Rational& w) const;
    void add_component(const Rational& w, const ScalarExpr& c);

    std::optional<Parity> parity() const;
    bool has_parity(Parity p) const;
    Density parity_part(Parity p) const;

    // t d/dt: multiplies each component by its weight.
    Density weight_operator() const;

    std::string str() const;

    bool operator==(const Density& o) const { return equals(*this, o); }

    friend Density operator+(const Density& a, const Density& b);
    friend Density operator-(const Density& a, const Density& b);
    friend Density operator-(const Density& a);
    friend Density operator*(const Density& a, const Density& b);
    friend Density operator*(const ScalarExpr& c, const Density& a);
    friend Density operator*(const Rational& c, const Density& a);
    friend bool equals(const Density& a, const Density& b);

private:
    ChartPtr chart_;
    std::map<Rational, ScalarExpr> comps_; // no zero entries
};

// Weight-1 component of the product: the integrand realizing the residue
// scalar product Res(t^{-2} psi chi) before integration over M.
Density residue_pairing(const Density& psi, const Density& chi);

// Vector field on the extended manifold: t^lambda (X^a d_a + X_0 w_hat).
struct Derivation {
    ChartPtr chart;
    std::vector<ScalarExpr> coords; // X^a
    ScalarExpr wpart;               // X_0
    Rational weight;                // lambda

    static Derivation zero(const ChartPtr& chart, const Rational& lambda);
    bool is_zero() const;
    std::optional<Parity> parity() const;
    bool operator==(const Derivation& o) const;
    std::string str() const;
};

Density derivation_apply(const Derivation& X, const Density& psi);
Density divergence(const Derivation& X);

// Unique split X = X_free + phi * w_hat with div X_free = 0 (lambda != 1).
// phi is returned as the weight-lambda density (1/(lambda-1)) div X.
std::pair<Derivation, Density> decompose_derivation(const Derivation& X);

} // namespace densalg
