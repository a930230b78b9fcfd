#include "test_support.hpp"

#include <doctest.h>

using namespace densalg;
using namespace densalg::test;

namespace {

PhaseFn random_phase(Rng& rng, const ChartPtr& base, int max_mom = 2) {
    PhaseFn out = PhaseFn::zero(base);
    const ChartPtr& ext = out.ext_chart();
    int terms = static_cast<int>(rng.intval(1, 2));
    for (int t = 0; t < terms; ++t) {
        ScalarExpr coeff = rng.scalar(ext, max_mom);
        PhaseKey k{Rational(rng.intval(-1, 2)), static_cast<int>(rng.intval(0, 2))};
        PhaseFn piece = PhaseFn::zero(base);
        piece.add_term(k, coeff);
        out = out + piece;
    }
    return out;
}

} // namespace

TEST_CASE("canonical bracket normalization") {
    ChartPtr c = chart_super11();
    for (int i = 0; i < 2; ++i) {
        PhaseFn p = PhaseFn::momentum(c, i);
        for (int j = 0; j < 2; ++j) {
            PhaseFn x = PhaseFn::coordinate(c, j);
            PhaseFn br = canonical_bracket(p, x);
            if (i == j) CHECK(br == PhaseFn::constant(c, Rational(1)));
            else CHECK(br.is_zero());
        }
    }
    // (p_t, t) = 1 and the weight operator action (t p_t, t) = t
    PhaseFn pt = PhaseFn::pt(c);
    PhaseFn t = PhaseFn::t_power(c, Rational(1));
    CHECK(canonical_bracket(pt, t) == PhaseFn::constant(c, Rational(1)));
    CHECK(canonical_bracket(t * pt, t) == t);
}

TEST_CASE("odd symplectic master Hamiltonian squares to zero") {
    ChartPtr c = chart_super11();
    PhaseFn S = PhaseFn::momentum(c, 1) * PhaseFn::momentum(c, 0); // p_xi p_x
    CHECK(canonical_bracket(S, S).is_zero());
}

TEST_CASE("property: antisymmetry, Leibniz and Jacobi") {
    Rng rng(79);
    for (ChartPtr c : {chart_super11(), chart_even1()}) {
        for (int it = 0; it < 8; ++it) {
            PhaseFn F = random_phase(rng, c), G = random_phase(rng, c), H = random_phase(rng, c);
            for (Parity pf : {Parity::even, Parity::odd}) {
                PhaseFn Fp = F.parity_part(pf);
                for (Parity pg : {Parity::even, Parity::odd}) {
                    PhaseFn Gp = G.parity_part(pg);
                    Rational s(sign_if_odd(pf, pg));
                    CHECK(canonical_bracket(Fp, Gp) ==
                          Rational(-1) * (s * canonical_bracket(Gp, Fp)));
                    // derivation property in the second slot
                    CHECK(canonical_bracket(Fp, Gp * H) ==
                          canonical_bracket(Fp, Gp) * H + s * (Gp * canonical_bracket(Fp, H)));
                    for (Parity ph : {Parity::even, Parity::odd}) {
                        PhaseFn Hp = H.parity_part(ph);
                        PhaseFn lhs = canonical_bracket(Fp, canonical_bracket(Gp, Hp));
                        PhaseFn rhs =
                            canonical_bracket(canonical_bracket(Fp, Gp), Hp) +
                            s * canonical_bracket(Gp, canonical_bracket(Fp, Hp));
                        CHECK(lhs == rhs);
                    }
                }
            }
        }
    }
}

TEST_CASE("double bracket reproduces the displayed bracket of functions") {
    // ((S, f), g) = S^{ab} d_b f d_a g (-1)^{a f} pins every sign choice
    Rng rng(83);
    for (ChartPtr c : {chart_super11(), chart_super12()}) {
        for (Parity eps : {Parity::odd, Parity::even}) {
            BracketData d = rng.bracket_data(c, Rational(0), eps);
            PhaseFn S = hamiltonian_S(d);
            for (int it = 0; it < 6; ++it) {
                ScalarExpr f = rng.scalar(c, 2);
                ScalarExpr g = rng.scalar(c, 2);
                PhaseFn lhs = canonical_bracket(canonical_bracket(S, PhaseFn::from_scalar(c, f)),
                                                PhaseFn::from_scalar(c, g));
                ScalarExpr expect = ScalarExpr::zero(c);
                for (std::size_t a = 0; a < c->size(); ++a) {
                    for (std::size_t b = 0; b < c->size(); ++b) {
                        for (Parity pf : {Parity::even, Parity::odd}) {
                            ScalarExpr fp = f.parity_part(pf);
                            ScalarExpr term = d.S[a][b] *
                                              differentiate(fp, static_cast<int>(b)) *
                                              differentiate(g, static_cast<int>(a));
                            if (sign_if_odd(c->parity(static_cast<int>(a)), pf) < 0)
                                term = -term;
                            expect = expect + term;
                        }
                    }
                }
                CHECK(lhs == PhaseFn::from_scalar(c, expect));
            }
        }
    }
}

TEST_CASE("master Hamiltonian assembly") {
    // zero data
    ChartPtr c1 = chart_even1();
    CHECK(master_hamiltonian(BracketData::zero(c1, Rational(0), Parity::even)).is_zero());
    // fixture F1: 1/2 p_x^2 + t gamma p_x p_t with gamma = -2x
    BracketData f1 = fixture_f1();
    PhaseFn px = PhaseFn::momentum(c1, 0);
    PhaseFn expect = Rational(1, 2) * (px * px) +
                     PhaseFn::from_scalar(c1, f1.gamma[0]) * px * PhaseFn::pt(c1) *
                         PhaseFn::t_power(c1, Rational(1));
    CHECK(master_hamiltonian(f1) == expect);
    // weight 2, s = 1: t^2 p_x^2 / 2
    BracketData f3 = fixture_f3(ScalarExpr::constant(c1, Rational(1)),
                                ScalarExpr::zero(c1), ScalarExpr::zero(c1));
    CHECK(master_hamiltonian(f3) ==
          Rational(1, 2) * (PhaseFn::t_power(c1, Rational(2)) * px * px));
}

TEST_CASE("D is a differential on an odd Poisson phase space") {
    ChartPtr c = chart_super11();
    PhaseFn S = PhaseFn::momentum(c, 1) * PhaseFn::momentum(c, 0);
    CHECK(apply_D(S, PhaseFn::constant(c, Rational(5))).is_zero());
    Rng rng(89);
    for (int it = 0; it < 10; ++it) {
        PhaseFn F = random_phase(rng, c);
        CHECK(apply_D(S, apply_D(S, F)).is_zero());
    }
    // D(-D(A)) = 0 for any even A
    for (int it = 0; it < 6; ++it) {
        PhaseFn A = PhaseFn::from_scalar(c, rng.scalar(c, 3, Parity::even));
        CHECK(apply_D(S, Rational(-1) * apply_D(S, A)).is_zero());
    }
}
