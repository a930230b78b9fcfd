#pragma once

#include "densalg/bracket.hpp"
#include "densalg/geometry.hpp"

#include <random>

namespace densalg::test {

inline ChartPtr chart_even1() { return make_chart({"x"}, {Parity::even}); }
inline ChartPtr chart_super11() { return make_chart({"x", "xi"}, {Parity::even, Parity::odd}); }
inline ChartPtr chart_even2() { return make_chart({"x", "y"}, {Parity::even, Parity::even}); }
inline ChartPtr chart_super12() {
    return make_chart({"x", "xi", "eta"}, {Parity::even, Parity::odd, Parity::odd});
}

// Deterministic generator for the property-style checks.
struct Rng {
    std::mt19937_64 gen;
    explicit Rng(unsigned seed = 20240901u) : gen(seed) {}

    long intval(long lo, long hi) {
        std::uniform_int_distribution<long> d(lo, hi);
        return d(gen);
    }

    Rational rational() {
        long den = intval(1, 3);
        return rat(intval(-4, 4), den);
    }

    // Random polynomial-coefficient scalar of bounded degree; optionally of
    // a fixed parity.
    ScalarExpr scalar(const ChartPtr& chart, int max_deg = 2,
                      std::optional<Parity> parity = std::nullopt) {
        ScalarExpr out = ScalarExpr::zero(chart);
        std::vector<int> evens, odds;
        for (std::size_t i = 0; i < chart->size(); ++i)
            (chart->parity(static_cast<int>(i)) == Parity::even ? evens : odds)
                .push_back(static_cast<int>(i));
        int terms = static_cast<int>(intval(1, 3));
        for (int t = 0; t < terms; ++t) {
            ScalarExpr piece = ScalarExpr::constant(chart, rational());
            int deg = static_cast<int>(intval(0, max_deg));
            for (int d = 0; d < deg && !evens.empty(); ++d) {
                int v = evens[static_cast<std::size_t>(intval(0, static_cast<long>(evens.size()) - 1))];
                piece = piece * ScalarExpr::coordinate(chart, v);
            }
            // sprinkle odd generators, respecting the requested parity
            int want_odd = 0;
            if (!odds.empty()) {
                if (parity) want_odd = (*parity == Parity::odd) ? 1 : (intval(0, 1) ? 2 : 0);
                else want_odd = static_cast<int>(intval(0, std::min<std::size_t>(2, odds.size())));
            } else if (parity && *parity == Parity::odd) {
                piece = ScalarExpr::zero(chart);
            }
            if (want_odd > static_cast<int>(odds.size())) want_odd = parity ? 1 : 0;
            for (int k = 0; k < want_odd; ++k)
                piece = piece * ScalarExpr::coordinate(chart, odds[static_cast<std::size_t>(k)]);
            out = out + piece;
        }
        if (parity) out = out.parity_part(*parity);
        return out;
    }

    Density density(const ChartPtr& chart, int max_deg = 2,
                    std::optional<Parity> parity = std::nullopt) {
        static const Rational weights[] = {Rational(0), Rational(1, 2), Rational(1),
                                           Rational(-1, 2), Rational(2)};
        Density out = Density::zero(chart);
        int terms = static_cast<int>(intval(1, 2));
        for (int t = 0; t < terms; ++t)
            out = out + Density::monomial(weights[intval(0, 4)], scalar(chart, max_deg, parity));
        return out;
    }

    Derivation derivation(const ChartPtr& chart, const Rational& weight, Parity parity) {
        Derivation X = Derivation::zero(chart, weight);
        for (std::size_t a = 0; a < chart->size(); ++a)
            X.coords[a] = scalar(chart, 2, parity + chart->parity(static_cast<int>(a)));
        X.wpart = scalar(chart, 2, parity);
        return X;
    }

    // Random bracket data with the correct parity pattern.
    BracketData bracket_data(const ChartPtr& chart, const Rational& lambda, Parity eps,
                             int max_deg = 1) {
        BracketData d = BracketData::zero(chart, lambda, eps);
        std::size_t n = chart->size();
        for (std::size_t a = 0; a < n; ++a) {
            Parity pa = chart->parity(static_cast<int>(a));
            for (std::size_t b = a; b < n; ++b) {
                Parity pb = chart->parity(static_cast<int>(b));
                ScalarExpr e = scalar(chart, max_deg, eps + pa + pb);
                if (a == b && sign_if_odd(pa, pb) < 0) {
                    // diagonal entries with S^{aa} = -S^{aa} must vanish
                    e = ScalarExpr::zero(chart);
                }
                d.S[a][b] = e;
                d.S[b][a] = sign_if_odd(pa, pb) < 0 ? -e : e;
            }
            d.gamma[a] = scalar(chart, max_deg, eps + pa);
        }
        d.theta = scalar(chart, max_deg, eps);
        d.validate();
        return d;
    }
};

// Fixture F1: even line, S = 1, T = x so gamma = -2x, theta = 0.
inline BracketData fixture_f1() {
    ChartPtr chart = chart_even1();
    BracketData d = BracketData::zero(chart, Rational(0), Parity::even);
    d.S[0][0] = ScalarExpr::constant(chart, Rational(1));
    d.gamma[0] = Rational(-2) * ScalarExpr::coordinate(chart, 0);
    d.theta = ScalarExpr::zero(chart);
    d.validate();
    return d;
}

// Fixture F2: odd symplectic R^{1|1} with the canonical odd tensor;
// gamma and theta from the log-density A when supplied.
inline BracketData fixture_f2(const ScalarExpr& A) {
    ChartPtr chart = A.chart();
    std::vector<std::vector<ScalarExpr>> S(2, std::vector<ScalarExpr>(2, ScalarExpr::zero(chart)));
    S[0][1] = ScalarExpr::constant(chart, Rational(1));
    S[1][0] = ScalarExpr::constant(chart, Rational(1));
    return lb_pencil_from_volume(chart, S, A, Rational(0), Parity::odd);
}

inline BracketData fixture_f2_flat() {
    ChartPtr chart = chart_super11();
    return fixture_f2(ScalarExpr::zero(chart));
}

// Fixture F3: one even coordinate, weight 2 (the Sturm-Liouville family).
inline BracketData fixture_f3(const ScalarExpr& s, const ScalarExpr& gamma,
                              const ScalarExpr& theta) {
    BracketData d = BracketData::zero(s.chart(), Rational(2), Parity::even);
    d.S[0][0] = s;
    d.gamma[0] = gamma;
    d.theta = theta;
    d.validate();
    return d;
}

} // namespace densalg::test
