#include "test_support.hpp"

#include <doctest.h>

using namespace densalg;
using namespace densalg::test;

namespace {

Derivation scale_derivation(const Density& a, const Derivation& X) {
    // (a X)(psi) = a . X(psi) for weight-homogeneous a
    REQUIRE(a.comps().size() == 1);
    const auto& [u, f] = *a.comps().begin();
    Derivation out = Derivation::zero(X.chart, X.weight + u);
    for (std::size_t i = 0; i < X.coords.size(); ++i) out.coords[i] = f * X.coords[i];
    out.wpart = f * X.wpart;
    return out;
}

} // namespace

TEST_CASE("density multiplication adds weights") {
    ChartPtr c = chart_even1();
    ScalarExpr one = ScalarExpr::constant(c, Rational(1));
    Density h = Density::monomial(Rational(1, 2), one);
    Density prod = h * h;
    CHECK(prod.comps().size() == 1);
    CHECK(equals(prod.component(Rational(1)), one));
    Rng rng(3);
    Density psi = rng.density(c);
    CHECK(psi * Density::unit(c) == psi);
}

TEST_CASE("density product expands bilinearly") {
    ChartPtr c = chart_super11();
    Rng rng(5);
    for (int it = 0; it < 10; ++it) {
        Density a = rng.density(c), b = rng.density(c), d = rng.density(c);
        CHECK((a + b) * d == a * d + b * d);
        // oracle: expand component by component
        Density expect = Density::zero(c);
        for (const auto& [wa, ca] : a.comps())
            for (const auto& [wb, cb] : d.comps())
                expect = expect + Density::monomial(wa + wb, ca * cb);
        CHECK(a * d == expect);
    }
}

TEST_CASE("residue pairing selects complementary weights") {
    ChartPtr c = chart_even1();
    ScalarExpr x = ScalarExpr::coordinate(c, 0);
    ScalarExpr one = ScalarExpr::constant(c, Rational(1));
    // weights 1/3 and 2/3 pair into the weight-1 integrand
    Density a = Density::monomial(Rational(1, 3), x);
    Density b = Density::monomial(Rational(2, 3), x + one);
    CHECK(equals(residue_pairing(a, b).component(Rational(1)), x * (x + one)));
    // equal weights 1/3, 1/3 pair to zero
    CHECK(residue_pairing(a, a).is_zero());
    // mixed sum: only the complementary pairs survive
    Density psi = Density::monomial(Rational(0), x) + Density::monomial(Rational(1), one);
    Density chi = Density::monomial(Rational(1), x * x) + Density::monomial(Rational(0), x);
    CHECK(equals(residue_pairing(psi, chi).component(Rational(1)), x * x * x + x));
}

TEST_CASE("residue pairing invariance") {
    ChartPtr c = chart_super11();
    Rng rng(7);
    for (int it = 0; it < 10; ++it) {
        Density a = rng.density(c), b = rng.density(c), d = rng.density(c);
        CHECK(residue_pairing(a * b, d) == residue_pairing(a, b * d));
    }
}

TEST_CASE("weight operator and coordinate derivations") {
    ChartPtr c = chart_even1();
    ScalarExpr x = ScalarExpr::coordinate(c, 0);
    Rng rng(9);
    Density psi = rng.density(c);
    Derivation what = Derivation::zero(c, Rational(0));
    what.wpart = ScalarExpr::constant(c, Rational(1));
    Density t3psi = Density::monomial(Rational(3), psi.component(Rational(0)) + x);
    CHECK(derivation_apply(what, t3psi) == Rational(3) * t3psi);

    Derivation xd = Derivation::zero(c, Rational(0));
    xd.coords[0] = x;
    Density x2 = Density::monomial(Rational(0), x * x);
    CHECK(derivation_apply(xd, x2) == Density::monomial(Rational(0), Rational(2) * (x * x)));
}

TEST_CASE("derivations satisfy the Leibniz rule") {
    ChartPtr c = chart_super11();
    Rng rng(11);
    for (int it = 0; it < 12; ++it) {
        for (Parity px : {Parity::even, Parity::odd}) {
            Derivation X = rng.derivation(c, Rational(it % 3), px);
            Density a = rng.density(c), b = rng.density(c);
            Density lhs = derivation_apply(X, a * b);
            Density rhs = Density::zero(c);
            for (Parity pa : {Parity::even, Parity::odd}) {
                Density ap = a.parity_part(pa);
                rhs = rhs + derivation_apply(X, ap) * b +
                      Rational(sign_if_odd(px, pa)) * (ap * derivation_apply(X, b));
            }
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("divergence of the basic derivations") {
    ChartPtr c = chart_even1();
    ScalarExpr x = ScalarExpr::coordinate(c, 0);
    Derivation xd = Derivation::zero(c, Rational(0));
    xd.coords[0] = x;
    CHECK(divergence(xd) ==
          Density::monomial(Rational(0), ScalarExpr::constant(c, Rational(1))));
    Derivation what = Derivation::zero(c, Rational(0));
    what.wpart = ScalarExpr::constant(c, Rational(1));
    CHECK(divergence(what) ==
          Density::monomial(Rational(0), ScalarExpr::constant(c, Rational(-1))));
}

TEST_CASE("generalized Lie derivations are divergence-free") {
    Rng rng(13);
    for (ChartPtr c : {chart_even2(), chart_super11()}) {
        for (const Rational& lambda : {Rational(0), Rational(2), Rational(-1)}) {
            for (Parity p : {Parity::even, Parity::odd}) {
                Derivation X = rng.derivation(c, lambda, p);
                // pin the w_hat part to the divergence-free value
                ScalarExpr divc = ScalarExpr::zero(c);
                for (std::size_t a = 0; a < c->size(); ++a) {
                    ScalarExpr t = differentiate(X.coords[a], static_cast<int>(a));
                    if (c->parity(static_cast<int>(a)) == Parity::odd && p == Parity::even)
                        t = -t;
                    divc = divc + t;
                }
                X.wpart = (Rational(-1) / (lambda - 1)) * divc;
                CHECK(divergence(X).is_zero());
            }
        }
    }
}

TEST_CASE("adjoint route to the divergence") {
    ChartPtr c = chart_even1();
    Derivation dx = Derivation::zero(c, Rational(0));
    dx.coords[0] = ScalarExpr::constant(c, Rational(1));
    CHECK(divergence_via_adjoint(dx).is_zero());
    // w_hat* = 1 - w_hat gives div w_hat = -1
    Derivation what = Derivation::zero(c, Rational(0));
    what.wpart = ScalarExpr::constant(c, Rational(1));
    CHECK(divergence_via_adjoint(what) ==
          Density::monomial(Rational(0), ScalarExpr::constant(c, Rational(-1))));
}

TEST_CASE("two divergence code paths agree") {
    Rng rng(17);
    for (ChartPtr c : {chart_even1(), chart_super11(), chart_super12()}) {
        for (int it = 0; it < 8; ++it) {
            for (Parity p : {Parity::even, Parity::odd}) {
                Derivation X = rng.derivation(c, Rational(it - 1), p);
                CHECK(divergence(X) == divergence_via_adjoint(X));
            }
        }
    }
}

TEST_CASE("divergence module property") {
    Rng rng(19);
    ChartPtr c = chart_super11();
    for (int it = 0; it < 10; ++it) {
        for (Parity px : {Parity::even, Parity::odd}) {
            for (Parity pa : {Parity::even, Parity::odd}) {
                Derivation X = rng.derivation(c, Rational(it % 2), px);
                Density a =
                    Density::monomial(rat(rng.intval(-1, 2), 2), rng.scalar(c, 2, pa));
                if (a.is_zero()) continue;
                Density lhs = divergence(scale_derivation(a, X));
                Density rhs = a * divergence(X) +
                              Rational(sign_if_odd(pa, px)) * derivation_apply(X, a);
                CHECK(lhs == rhs);
            }
        }
    }
}

// Zero curvature of the canonical divergence. The sign of the second term
// follows from expanding div[D1,D2] = [div D1,D2] + [D1,div D2] for
// derivations with div = -(X + X*): for multiplication operators,
// [X, M_d] = M_{X(d)} and [M_d, Y] = -(-1)^{dY} M_{Y(d)}.
TEST_CASE("flatness of the canonical divergence") {
    Rng rng(23);
    ChartPtr c = chart_super11();
    for (int it = 0; it < 8; ++it) {
        for (Parity px : {Parity::even, Parity::odd}) {
            for (Parity py : {Parity::even, Parity::odd}) {
                Derivation X = rng.derivation(c, Rational(it % 3 - 1), px);
                Derivation Y = rng.derivation(c, Rational(1 - it % 2), py);
                Density lhs = divergence(derivation_commutator(X, Y));
                Density rhs = derivation_apply(X, divergence(Y)) -
                              Rational(sign_if_odd(px, py)) *
                                  derivation_apply(Y, divergence(X));
                CHECK(lhs == rhs);
            }
        }
    }
}

TEST_CASE("derivation commutators") {
    ChartPtr c = chart_even1();
    ScalarExpr x = ScalarExpr::coordinate(c, 0);
    Derivation dx = Derivation::zero(c, Rational(0));
    dx.coords[0] = ScalarExpr::constant(c, Rational(1));
    Derivation xd = Derivation::zero(c, Rational(0));
    xd.coords[0] = x;
    CHECK(derivation_commutator(dx, xd) == dx);
    // [w_hat, X] = lambda X for homogeneous X
    Derivation what = Derivation::zero(c, Rational(0));
    what.wpart = ScalarExpr::constant(c, Rational(1));
    Rng rng(29);
    for (const Rational& lambda : {Rational(0), Rational(2), Rational(-1)}) {
        Derivation X = rng.derivation(c, lambda, Parity::even);
        Derivation expect = Derivation::zero(c, lambda);
        for (std::size_t i = 0; i < c->size(); ++i) expect.coords[i] = lambda * X.coords[i];
        expect.wpart = lambda * X.wpart;
        CHECK(derivation_commutator(what, X) == expect);
    }
}

TEST_CASE("decomposition into divergence-free part plus w_hat multiple") {
    ChartPtr c = chart_even1();
    ScalarExpr x = ScalarExpr::coordinate(c, 0);
    ScalarExpr one = ScalarExpr::constant(c, Rational(1));
    Derivation X = Derivation::zero(c, Rational(0));
    X.coords[0] = x;
    X.wpart = one;
    auto [xfree, phi] = decompose_derivation(X);
    CHECK(xfree == X);
    CHECK(phi.is_zero());

    Derivation what = Derivation::zero(c, Rational(0));
    what.wpart = one;
    auto [wfree, wphi] = decompose_derivation(what);
    CHECK(wfree.is_zero());
    CHECK(wphi == Density::monomial(Rational(0), one));

    Derivation bad = Derivation::zero(c, Rational(1));
    bad.coords[0] = x;
    CHECK_THROWS_AS(decompose_derivation(bad), error);
}

TEST_CASE("decomposition round-trips on random derivations") {
    Rng rng(31);
    for (ChartPtr c : {chart_even2(), chart_super11()}) {
        for (const Rational& lambda : {Rational(0), Rational(2), Rational(-1)}) {
            for (int it = 0; it < 6; ++it) {
                for (Parity p : {Parity::even, Parity::odd}) {
                    Derivation X = rng.derivation(c, lambda, p);
                    auto [xfree, phi] = decompose_derivation(X);
                    CHECK(divergence(xfree).is_zero());
                    Derivation back = xfree;
                    back.wpart = back.wpart + phi.component(lambda);
                    CHECK(back == X);
                }
            }
        }
    }
}
