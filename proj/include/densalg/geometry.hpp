#pragma once

#include "densalg/bracket.hpp"

namespace densalg {

// Coordinate change x^{a'} = x^{a'}(x) between charts of matching parity
// signature. Transformed objects are kept in pullback form: components
// relative to the primed frame, expressed as functions of the unprimed
// coordinates. When a rational inverse map is supplied it is verified and
// can be used to push expressions onto the new chart.
struct CoordChange {
    ChartPtr from;
    ChartPtr to;
    std::vector<ScalarExpr> forward;                  // over `from`
    std::optional<std::vector<ScalarExpr>> inverse;   // over `to`
    std::vector<std::vector<ScalarExpr>> jac;         // jac[a][b'] = d_a x^{b'}
    std::vector<std::vector<ScalarExpr>> jac_inv;     // jac_inv[a'][a]
    ScalarExpr jacobian;                              // J = Dx'/Dx over `from`
    std::vector<ScalarExpr> dlogJ;                    // d_a J / J
};

CoordChange make_coord_change(const ChartPtr& from, const ChartPtr& to,
                              std::vector<ScalarExpr> forward,
                              std::optional<std::vector<ScalarExpr>> inverse = std::nullopt,
                              std::optional<ScalarExpr> jacobian = std::nullopt);
CoordChange identity_change(const ChartPtr& chart);

// Pullback of the primed-frame derivative: d_{a'} f = jac_inv[a'][a] d_a f.
ScalarExpr frame_derivative(const CoordChange& ch, int aprime, const ScalarExpr& f);
// Pushes a pullback expression onto the new chart (needs the inverse map).
ScalarExpr push_expression(const CoordChange& ch, const ScalarExpr& f);

// Gaussian elimination over the scalar ring; pivots need invertible bodies.
std::vector<std::vector<ScalarExpr>> matrix_inverse(const std::vector<std::vector<ScalarExpr>>& m,
                                                    const ChartPtr& chart);

// Displayed transformation laws of (S, gamma, theta); pullback components.
// The weight must be an integer for J^{-lambda} to stay rational.
BracketData transform_bracket_data(const BracketData& data, const CoordChange& ch);
// Same data pushed onto the new chart (requires the inverse map).
BracketData push_bracket_data(const BracketData& pullback, const CoordChange& ch);

// Direct conjugation J^{-(w+lambda)} Delta_w J^{w}: the independent oracle
// for the transformation laws, again in pullback form.
DiffOp transform_operator(const DiffOp& pencil, const CoordChange& ch);

// Canonical pencil formula evaluated with primed-frame derivatives on
// pullback data; for the identity change this is canonical_pencil.
DiffOp canonical_pencil_in_frame(const BracketData& pullback_data, const CoordChange& ch);

// Connection on volume forms, nabla_a rho = (d_a + gamma_a) rho.
struct ConnectionOnVol {
    ChartPtr chart;
    std::vector<ScalarExpr> gamma_lower;
};

// Transformation law gamma_{a'} = (gamma_a + d_a log J) dx^a/dx^{a'},
// in pullback form.
ConnectionOnVol transform_connection(const ConnectionOnVol& conn, const CoordChange& ch);

// Subprincipal data of an order <= 2 operator on w0-densities read as an
// upper connection; w0 = 1/2 is rejected (the subprincipal symbol is then a
// vector field and defines no connection).
std::vector<ScalarExpr> extract_upper_connection(const DiffOp& L, const Rational& w0);

// Laplace-Beltrami bracket data from a log-density A (rho = e^A):
// gamma^a = -S^{ab} d_b A, theta = S^{ab} d_b A d_a A.
BracketData lb_pencil_from_volume(const ChartPtr& chart,
                                  const std::vector<std::vector<ScalarExpr>>& S,
                                  const ScalarExpr& A, const Rational& lambda, Parity eps);
// Independent oracle: rho^{w-1} d_a (rho S^{ab} d_b (rho^{-w} .)) expanded
// through exponential conjugation, as a pencil.
DiffOp lb_pencil_direct(const ChartPtr& chart, const std::vector<std::vector<ScalarExpr>>& S,
                        const ScalarExpr& A, const Rational& lambda, Parity eps);

// gamma^a = S^{ab} gamma_b, theta = gamma^a gamma_a.
BracketData pencil_from_connection(const std::vector<std::vector<ScalarExpr>>& S,
                                   const ConnectionOnVol& conn, const Rational& lambda,
                                   Parity eps);

// Conjugation e^{-B} o op o e^{B} for even B, through derivative twisting.
DiffOp conjugate_by_exp(const DiffOp& op, const ScalarExpr& B);

struct PencilShift {
    BracketData shifted;
    DiffOp difference; // X(2 w_hat + lambda - 1)/2 + div(X) w_hat / 2
};

// Change of gamma, theta with S fixed; the displayed operator difference.
PencilShift pencil_shift(const BracketData& data, const std::vector<ScalarExpr>& X,
                         const ScalarExpr& xi);

// L = Delta^{LB}_{w0} + Lie_Q + f relative to the volume form e^A.
struct OperatorDecomposition {
    std::vector<ScalarExpr> Q;
    ScalarExpr f;
};
OperatorDecomposition decompose_operator(const DiffOp& L, const Rational& w0,
                                         const ScalarExpr& A);

// Unique canonical pencil through L at w0 (w0 outside {0, 1/2, 1});
// independent of the auxiliary volume form.
DiffOp recover_pencil(const DiffOp& L, const Rational& w0, const ScalarExpr& A);

// Flatness Hamiltonian D gamma = (S, gamma^a p_a); zero iff the upper
// connection is flat. Odd S only.
PhaseFn flatness_check(const ChartPtr& chart, const std::vector<std::vector<ScalarExpr>>& S,
                       const std::vector<ScalarExpr>& gamma_upper, Parity eps);

// Two-connection scalar d_a(g1^a - g0^a) - (g0+g1)_a (g1-g0)^a / 2 over a
// shared S; additive in its arguments. Even charts.
ScalarExpr bv_cocycle(const std::vector<std::vector<ScalarExpr>>& S, const ConnectionOnVol& g0,
                      const ConnectionOnVol& g1);

struct ActionCheck {
    enum class Status { ok, twisted, theta_mismatch };
    Status status = Status::ok;
    std::optional<ScalarExpr> action; // A with gamma_a = -d_a A, when found
    std::string detail;
};

// Theorem on existence of an action: for nondegenerate odd S at weight 0,
// Jacobi data must come from a (possibly twisted) volume form.
ActionCheck existence_of_action_check(const BracketData& data);

// Residual Delta_{1/2}(rho^{1/2}) computed by exponential conjugation;
// zero iff Delta^2 = 0 (the master equation).
Density bv_master_check(const BracketData& data, const ScalarExpr& A);

struct SturmReport {
    ScalarExpr potential;          // U in the original coordinate
    ScalarExpr potential_new;      // U' via transformed bracket data (pullback)
    ScalarExpr potential_oracle;   // U' via direct operator conjugation
    ScalarExpr schwarzian;         // y_xxx/y_x - 3/2 (y_xx/y_x)^2
    int sign_convention = 0;       // +1 / -1 when U' = (y_x)^{-2}(U +- S/2), else 0
    bool tensorial = false;        // schwarzian vanishes and U' = (y_x)^{-2} U
};

// Weight-2 one-dimensional pencil s d^2 + (s_x + (2w+1)gamma) d + w gamma_x
// + w(w+1) theta, specialized at w = -1/2 into a Sturm-Liouville operator.
SturmReport sturm_liouville_demo(const ScalarExpr& s, const ScalarExpr& gamma,
                                 const ScalarExpr& theta, const CoordChange& ch);

} // namespace densalg
