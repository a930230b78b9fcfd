#pragma once

#include "densalg/density.hpp"

#include <compare>

namespace densalg {

// Key of a normal-form term: ordered derivative word (coordinate indices,
// canonically sorted) and a power of the weight operator w_hat.
struct OpKey {
    std::vector<int> word;
    int wpow = 0;
    auto operator<=>(const OpKey&) const = default;
};

// Normal-ordered differential operator on the algebra of densities:
// sum of terms  coeff(x) . d_{a_1}...d_{a_k} . w_hat^m, shifting weights
// by the operator weight lambda.
class DiffOp {
public:
    DiffOp() = default;
    DiffOp(ChartPtr chart, Rational weight)
        : chart_(std::move(chart)), weight_(std::move(weight)) {}

    static DiffOp zero(const ChartPtr& chart, const Rational& weight);
    // Multiplication by a weight-homogeneous density.
    static DiffOp multiplication(const Rational& w, const ScalarExpr& coeff);
    static DiffOp multiplication(const Density& psi); // requires homogeneous weight
    static DiffOp partial(const ChartPtr& chart, int coord);
    static DiffOp weight_op(const ChartPtr& chart); // w_hat

    const ChartPtr& chart() const { return chart_; }
    const Rational& weight() const { return weight_; }
    const std::map<OpKey, ScalarExpr>& terms() const { return terms_; }

    // Adds coeff * word * w_hat^wpow, canonically sorting the word.
    void add_term(std::vector<int> word, int wpow, const ScalarExpr& coeff);

    bool is_zero() const { return terms_.empty(); }
    std::optional<Parity> parity() const;
    bool has_parity(Parity p) const;
    DiffOp parity_part(Parity p) const;

    ScalarExpr coefficient(const std::vector<int>& word, int wpow) const;

    // Longest derivative word (order on a fixed-weight slice); -1 for zero.
    int slice_order() const;
    // Order counting w_hat as first order (the algebraic order on the
    // algebra of densities); -1 for zero.
    int pencil_order() const;
    int max_wpow() const;

    std::string str() const;

    bool operator==(const DiffOp& o) const { return equals(*this, o); }

    friend DiffOp operator+(const DiffOp& a, const DiffOp& b);
    friend DiffOp operator-(const DiffOp& a, const DiffOp& b);
    friend DiffOp operator-(const DiffOp& a);
    friend DiffOp operator*(const Rational& c, const DiffOp& a);
    friend bool equals(const DiffOp& a, const DiffOp& b);

private:
    ChartPtr chart_;
    Rational weight_ = Rational(0);
    std::map<OpKey, ScalarExpr> terms_; // no zero entries
};

Density apply(const DiffOp& op, const Density& psi);
DiffOp compose(const DiffOp& a, const DiffOp& b);
// Graded commutator a b - (-1)^{ab} b a.
DiffOp commutator(const DiffOp& a, const DiffOp& b);
// Formal adjoint for the residue scalar product.
DiffOp adjoint(const DiffOp& a);
// Substitutes the number w0 for w_hat.
DiffOp specialize(const DiffOp& pencil, const Rational& w0);
// Left multiplication of the operator by a scalar coefficient.
DiffOp scalar_multiple(const ScalarExpr& c, const DiffOp& a);

// Conversions with derivations of the density algebra.
DiffOp to_diffop(const Derivation& X);
Derivation derivation_from_diffop(const DiffOp& op);
Derivation derivation_commutator(const Derivation& X, const Derivation& Y);
// Canonical divergence via div X = -(X + X*); must agree with divergence().
Density divergence_via_adjoint(const Derivation& X);

// Default probe densities for the commutator order test: coordinate
// monomials of degree <= 2, t^{+-1}, and mixed t x terms. Symbolic
// commutators over this family expose every coefficient of an operator
// because [Delta, psi.] depends on psi only through finitely many
// derivatives, and monomials of degree <= 2 plus the weight direction t
// make all of these independent.
std::vector<Density> default_probes(const ChartPtr& chart);

// Least n such that all (n+1)-fold commutators with multiplications by the
// probes vanish identically; checked against the syntactic pencil order.
int grothendieck_order(const DiffOp& op, const std::vector<Density>& probes);

// k-fold iterated commutator bracket applied to the unit density.
Density polarization_bracket(const DiffOp& op, const std::vector<Density>& args);
Density polarization_bracket(const DiffOp& op, int k, const std::vector<Density>& args);

// Integration-by-parts witness: a vector V^a with
//   <op psi, chi> - (-1)^{op psi} <psi, op* chi> = sum_a d_a V^a
// at the level of weight-1 integrands.
std::vector<ScalarExpr> pairing_defect_witness(const DiffOp& op, const Density& psi,
                                               const Density& chi);

// div Delta = -(Delta - (-1)^k Delta*) for k = pencil order: drops the
// order by one and squares to zero; its top part is the subprincipal data.
DiffOp operator_divergence(const DiffOp& op);

} // namespace densalg
