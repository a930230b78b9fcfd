#pragma once

#include "densalg/diffop.hpp"
#include "densalg/phase.hpp"

#include <array>

namespace densalg {

// Coefficient data (S^{ab}, gamma^a, theta) of a long bracket of weight
// lambda and parity eps on the algebra of densities.
struct BracketData {
    ChartPtr chart;
    std::vector<std::vector<ScalarExpr>> S;
    std::vector<ScalarExpr> gamma;
    ScalarExpr theta;
    Rational weight; // lambda
    Parity eps;

    static BracketData zero(const ChartPtr& chart, const Rational& lambda, Parity eps);
    // Checks graded symmetry of S and the parity pattern of all entries.
    void validate() const;
    bool operator==(const BracketData& o) const;
};

// {psi; chi} for the double pencil of brackets.
Density long_bracket_eval(const BracketData& data, const Density& psi, const Density& chi);

// The unique self-adjoint generating operator with Delta(1) = 0.
DiffOp canonical_pencil(const BracketData& data);

// Reads the bracket off a generating operator of pencil order <= 2 by
// evaluating it on coordinate densities.
BracketData bracket_from_operator(const DiffOp& op);

// The defect of the Leibniz rule: Delta(psi chi) - Delta psi . chi
// - (-1)^{psi eps} psi . Delta chi + Delta(1) psi chi.
Density generated_bracket(const DiffOp& op, const Density& psi, const Density& chi);

// Projects any order <= 2 generator onto the canonical one:
// Delta'' - Delta''(1) with Delta'' = (Delta' + Delta'*)/2.
DiffOp symmetrize_operator(const DiffOp& op);

// The derivation {psi; .} for weight- and parity-homogeneous psi.
Derivation grad_derivation(const BracketData& data, const Density& psi);

// Master Hamiltonian t^lambda (S^{ab}p_b p_a + 2t gamma^a p_a p_t
// + t^2 theta p_t^2)/2 on T*\hat M.
PhaseFn master_hamiltonian(const BracketData& data);

// S, gamma, theta as Hamiltonians on T*M.
PhaseFn hamiltonian_S(const BracketData& data);
PhaseFn hamiltonian_gamma(const BracketData& data);
PhaseFn hamiltonian_theta(const BracketData& data);

// The four residuals whose vanishing is the Jacobi identity for an odd
// long bracket of weight lambda:
//   (S,S) - 2 lambda S gamma,   (S,gamma) - lambda S theta,
//   (S,theta) + (gamma,gamma) - lambda gamma theta,   (gamma,theta).
// Rejects even brackets: no even symmetric bracket admits a Jacobi
// identity (all triple brackets would vanish).
std::array<PhaseFn, 4> check_jacobi_equations(const BracketData& data);

// Cyclic-form residual (-1)^{ac}{{a,b},c} + cyclic on homogeneous probes.
Density cyclic_jacobi_residual(const BracketData& data, const Density& a, const Density& b,
                               const Density& c);

struct DeltaSquaredReport {
    DiffOp delta_squared;
    int order = -1;     // pencil order of Delta^2
    bool is_zero = false; // the BV master-equation case
    // populated when order <= 1:
    std::optional<Derivation> X;
    bool divergence_free = false;
    bool lie_form = false;      // Delta^2 equals the generalized Lie derivative of X^a
    bool poisson_field = false; // the M-vector field preserves the bracket
    std::vector<ScalarExpr> m_vector_field;
    // populated when order == 3: the obstruction symbol
    std::optional<PhaseFn> order3_symbol;
};

// Hierarchy classifier for Delta^2 = [Delta,Delta]/2 of an odd canonical
// pencil (Delta* = Delta, Delta(1) = 0).
DeltaSquaredReport classify_delta_squared(const DiffOp& pencil);

// Residual Delta{a,b} + {Delta a, b} + (-1)^{a}{a, Delta b}: the Leibniz
// defect of Delta^2, zero for all probes iff ord Delta^2 <= 1.
Density derivation_of_bracket_residual(const DiffOp& op, const BracketData& data,
                                       const Density& a, const Density& b);

// Homogeneous symbol: the order-k derivative words read as momenta.
PhaseFn symbol_part(const DiffOp& op, int k);

// Probe densities for the bracket identity checks: coordinate monomials of
// degree <= 3 at weights {0, 1/2, 1, -1/2, 2}. Every identity checked is
// polynomial in the probe coefficients and their derivatives, so passing on
// this generating family decides it for all densities.
std::vector<Density> bracket_probe_densities(const ChartPtr& chart);

} // namespace densalg
