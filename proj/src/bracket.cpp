#include "densalg/bracket.hpp"

namespace densalg {

BracketData BracketData::zero(const ChartPtr& chart, const Rational& lambda, Parity eps) {
    BracketData d;
    d.chart = chart;
    d.S.assign(chart->size(), std::vector<ScalarExpr>(chart->size(), ScalarExpr::zero(chart)));
    d.gamma.assign(chart->size(), ScalarExpr::zero(chart));
    d.theta = ScalarExpr::zero(chart);
    d.weight = lambda;
    d.eps = eps;
    return d;
}

void BracketData::validate() const {
    std::size_t n = chart->size();
    if (S.size() != n || gamma.size() != n) throw error("bracket data has wrong dimensions");
    for (std::size_t a = 0; a < n; ++a) {
        Parity pa = chart->parity(static_cast<int>(a));
        if (S[a].size() != n) throw error("bracket data has wrong dimensions");
        for (std::size_t b = 0; b < n; ++b) {
            Parity pb = chart->parity(static_cast<int>(b));
            if (!S[a][b].has_parity(eps + pa + pb))
                throw error("S entry has wrong parity");
            // graded symmetry S^{ab} = (-1)^{ab} S^{ba}
            ScalarExpr rhs = sign_if_odd(pa, pb) < 0 ? -S[b][a] : S[b][a];
            if (!equals(S[a][b], rhs)) throw error("S is not graded-symmetric");
        }
        if (!gamma[a].has_parity(eps + pa)) throw error("gamma entry has wrong parity");
    }
    if (!theta.has_parity(eps)) throw error("theta has wrong parity");
}

bool BracketData::operator==(const BracketData& o) const {
    require_same_chart(chart, o.chart);
    if (weight != o.weight || eps != o.eps) return false;
    for (std::size_t a = 0; a < chart->size(); ++a) {
        for (std::size_t b = 0; b < chart->size(); ++b)
            if (!equals(S[a][b], o.S[a][b])) return false;
        if (!equals(gamma[a], o.gamma[a])) return false;
    }
    return equals(theta, o.theta);
}

namespace {

// {psi t^{w1}; chi t^{w2}} on weight- and parity-homogeneous inputs.
Density long_bracket_homog(const BracketData& d, const Rational& w1, const ScalarExpr& psi,
                           Parity ppsi, const Rational& w2, const ScalarExpr& chi) {
    const ChartPtr& chart = d.chart;
    std::size_t n = chart->size();
    ScalarExpr acc = ScalarExpr::zero(chart);
    for (std::size_t a = 0; a < n; ++a) {
        Parity pa = chart->parity(static_cast<int>(a));
        int sgn = sign_if_odd(pa, ppsi);
        ScalarExpr da_chi = differentiate(chi, static_cast<int>(a));
        for (std::size_t b = 0; b < n; ++b) {
            ScalarExpr t = d.S[a][b] * differentiate(psi, static_cast<int>(b)) * da_chi;
            acc = acc + (sgn < 0 ? -t : t);
        }
        ScalarExpr g1 = d.gamma[a] * (w2 * (differentiate(psi, static_cast<int>(a)) * chi));
        ScalarExpr g2 = d.gamma[a] * (w1 * (psi * da_chi));
        acc = acc + g1 + (sgn < 0 ? -g2 : g2);
    }
    acc = acc + (w1 * w2) * (d.theta * (psi * chi));
    return Density::monomial(w1 + w2 + d.weight, acc);
}

} // namespace

Density long_bracket_eval(const BracketData& data, const Density& psi, const Density& chi) {
    require_same_chart(data.chart, psi.chart());
    require_same_chart(data.chart, chi.chart());
    Density out = Density::zero(data.chart);
    for (const auto& [w1, c1] : psi.comps()) {
        for (Parity p : {Parity::even, Parity::odd}) {
            ScalarExpr part = c1.parity_part(p);
            if (part.is_zero()) continue;
            for (const auto& [w2, c2] : chi.comps())
                out = out + long_bracket_homog(data, w1, part, p, w2, c2);
        }
    }
    return out;
}

DiffOp canonical_pencil(const BracketData& data) {
    data.validate();
    const ChartPtr& chart = data.chart;
    std::size_t n = chart->size();
    const Rational& lambda = data.weight;
    Rational half(1, 2);
    DiffOp op(chart, lambda);
    for (std::size_t a = 0; a < n; ++a) {
        int ai = static_cast<int>(a);
        // 1/2 S^{ab} d_b d_a
        for (std::size_t b = 0; b < n; ++b)
            op.add_term({static_cast<int>(b), ai}, 0, half * data.S[a][b]);
        // 1/2 (d_b S^{ba} (-1)^{b(eps+1)}) d_a
        ScalarExpr divS = ScalarExpr::zero(chart);
        for (std::size_t b = 0; b < n; ++b) {
            ScalarExpr t = differentiate(data.S[b][a], static_cast<int>(b));
            if (chart->parity(static_cast<int>(b)) == Parity::odd && data.eps == Parity::even)
                t = -t;
            divS = divS + t;
        }
        op.add_term({ai}, 0, half * divS);
        // 1/2 (2 w_hat + lambda - 1) gamma^a d_a
        op.add_term({ai}, 1, data.gamma[a]);
        op.add_term({ai}, 0, (half * (lambda - 1)) * data.gamma[a]);
    }
    // 1/2 w_hat d_a gamma^a (-1)^{a(eps+1)}
    ScalarExpr divG = ScalarExpr::zero(chart);
    for (std::size_t a = 0; a < n; ++a) {
        ScalarExpr t = differentiate(data.gamma[a], static_cast<int>(a));
        if (chart->parity(static_cast<int>(a)) == Parity::odd && data.eps == Parity::even)
            t = -t;
        divG = divG + t;
    }
    op.add_term({}, 1, half * divG);
    // 1/2 w_hat (w_hat + lambda - 1) theta
    op.add_term({}, 2, half * data.theta);
    op.add_term({}, 1, (half * (lambda - 1)) * data.theta);
    return op;
}

Density generated_bracket(const DiffOp& op, const Density& psi, const Density& chi) {
    auto eps = op.parity();
    if (!eps) throw error("generated_bracket: operator must be parity-homogeneous");
    Density out = Density::zero(op.chart());
    Density d1 = apply(op, Density::unit(op.chart()));
    for (Parity p : {Parity::even, Parity::odd}) {
        Density psip = psi.parity_part(p);
        if (psip.is_zero()) continue;
        Density prod = psip * chi;
        Density term = apply(op, prod) - apply(op, psip) * chi + d1 * prod;
        Density mixed = psip * apply(op, chi);
        term = term - Rational(sign_if_odd(p, *eps)) * mixed;
        out = out + term;
    }
    return out;
}

BracketData bracket_from_operator(const DiffOp& op) {
    if (op.pencil_order() > 2)
        throw error("bracket_from_operator: operator order exceeds 2, the defect of the "
                    "Leibniz rule is not a bracket");
    auto eps = op.parity();
    if (!eps) throw error("bracket_from_operator: operator must be parity-homogeneous");
    const ChartPtr& chart = op.chart();
    std::size_t n = chart->size();
    const Rational& lambda = op.weight();
    BracketData d = BracketData::zero(chart, lambda, *eps);
    auto coord = [&](std::size_t i) {
        return Density::monomial(Rational(0), ScalarExpr::coordinate(chart, static_cast<int>(i)));
    };
    Density t = Density::monomial(Rational(1), ScalarExpr::constant(chart, Rational(1)));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b)
            d.S[a][b] = generated_bracket(op, coord(a), coord(b)).component(lambda);
        d.gamma[a] = generated_bracket(op, coord(a), t).component(lambda + 1);
    }
    d.theta = generated_bracket(op, t, t).component(lambda + 2);
    d.validate();
    return d;
}

DiffOp symmetrize_operator(const DiffOp& op) {
    if (op.pencil_order() > 2)
        throw error("symmetrize_operator: operator order exceeds 2");
    Rational half(1, 2);
    DiffOp sym = half * (op + adjoint(op));
    Density unit_image = apply(sym, Density::unit(op.chart()));
    DiffOp out = sym;
    for (const auto& [w, c] : unit_image.comps()) {
        if (w != op.weight()) throw internal_error("unit image has unexpected weight");
        out = out - DiffOp::multiplication(w, c);
    }
    return out;
}

Derivation grad_derivation(const BracketData& data, const Density& psi) {
    if (psi.comps().size() != 1)
        throw error("grad_derivation: density must be weight-homogeneous");
    const auto& [w, f] = *psi.comps().begin();
    auto pf = f.parity();
    if (!pf) throw error("grad_derivation: density must be parity-homogeneous");
    const ChartPtr& chart = data.chart;
    std::size_t n = chart->size();
    Derivation X = Derivation::zero(chart, w + data.weight);
    for (std::size_t a = 0; a < n; ++a) {
        ScalarExpr acc = data.gamma[a] * (w * f);
        for (std::size_t b = 0; b < n; ++b)
            acc = acc + data.S[a][b] * differentiate(f, static_cast<int>(b));
        if (sign_if_odd(chart->parity(static_cast<int>(a)), *pf) < 0) acc = -acc;
        X.coords[a] = acc;
    }
    ScalarExpr w0 = data.theta * (w * f);
    for (std::size_t a = 0; a < n; ++a)
        w0 = w0 + data.gamma[a] * differentiate(f, static_cast<int>(a));
    X.wpart = w0;
    return X;
}

PhaseFn master_hamiltonian(const BracketData& data) {
    const ChartPtr& chart = data.chart;
    std::size_t n = chart->size();
    Rational half(1, 2);
    PhaseFn out = PhaseFn::zero(chart);
    PhaseFn pt = PhaseFn::pt(chart);
    for (std::size_t a = 0; a < n; ++a) {
        PhaseFn pa = PhaseFn::momentum(chart, static_cast<int>(a));
        for (std::size_t b = 0; b < n; ++b) {
            PhaseFn pb = PhaseFn::momentum(chart, static_cast<int>(b));
            out = out + half * (PhaseFn::from_scalar(chart, data.S[a][b]) * pb * pa);
        }
        out = out + PhaseFn::from_scalar(chart, data.gamma[a]) * pa * pt *
                        PhaseFn::t_power(chart, Rational(1));
    }
    out = out + half * (PhaseFn::from_scalar(chart, data.theta) * pt * pt *
                        PhaseFn::t_power(chart, Rational(2)));
    if (data.weight != 0) out = out * PhaseFn::t_power(chart, data.weight);
    return out;
}

PhaseFn hamiltonian_S(const BracketData& data) {
    const ChartPtr& chart = data.chart;
    Rational half(1, 2);
    PhaseFn out = PhaseFn::zero(chart);
    for (std::size_t a = 0; a < chart->size(); ++a) {
        PhaseFn pa = PhaseFn::momentum(chart, static_cast<int>(a));
        for (std::size_t b = 0; b < chart->size(); ++b) {
            PhaseFn pb = PhaseFn::momentum(chart, static_cast<int>(b));
            out = out + half * (PhaseFn::from_scalar(chart, data.S[a][b]) * pb * pa);
        }
    }
    return out;
}

PhaseFn hamiltonian_gamma(const BracketData& data) {
    const ChartPtr& chart = data.chart;
    PhaseFn out = PhaseFn::zero(chart);
    for (std::size_t a = 0; a < chart->size(); ++a)
        out = out + PhaseFn::from_scalar(chart, data.gamma[a]) *
                        PhaseFn::momentum(chart, static_cast<int>(a));
    return out;
}

PhaseFn hamiltonian_theta(const BracketData& data) {
    return PhaseFn::from_scalar(data.chart, data.theta);
}

std::array<PhaseFn, 4> check_jacobi_equations(const BracketData& data) {
    if (data.eps == Parity::even)
        throw error("check_jacobi_equations: even symmetric brackets admit no Jacobi "
                    "identity (all triple brackets would vanish)");
    data.validate();
    const Rational& l = data.weight;
    PhaseFn S = hamiltonian_S(data);
    PhaseFn g = hamiltonian_gamma(data);
    PhaseFn th = hamiltonian_theta(data);
    std::array<PhaseFn, 4> r{
        canonical_bracket(S, S) - (Rational(2) * l) * (S * g),
        canonical_bracket(S, g) - l * (S * th),
        canonical_bracket(S, th) + canonical_bracket(g, g) - l * (g * th),
        canonical_bracket(g, th),
    };
    return r;
}

Density cyclic_jacobi_residual(const BracketData& data, const Density& a, const Density& b,
                               const Density& c) {
    auto pa = a.parity(), pb = b.parity(), pc = c.parity();
    if (!pa || !pb || !pc)
        throw error("cyclic_jacobi_residual: probes must be parity-homogeneous");
    auto term = [&](const Density& x, const Density& y, const Density& z, Parity px, Parity pz) {
        Density v = long_bracket_eval(data, long_bracket_eval(data, x, y), z);
        return Rational(sign_if_odd(px, pz)) * v;
    };
    return term(a, b, c, *pa, *pc) + term(c, a, b, *pc, *pb) + term(b, c, a, *pb, *pa);
}

PhaseFn symbol_part(const DiffOp& op, int k) {
    const ChartPtr& chart = op.chart();
    PhaseFn out = PhaseFn::zero(chart);
    for (const auto& [key, coeff] : op.terms()) {
        if (static_cast<int>(key.word.size()) != k) continue;
        PhaseFn term = PhaseFn::from_scalar(chart, coeff);
        for (int g : key.word) term = term * PhaseFn::momentum(chart, g);
        out = out + term;
    }
    return out;
}

DeltaSquaredReport classify_delta_squared(const DiffOp& pencil) {
    auto par = pencil.parity();
    if (!par || *par != Parity::odd)
        throw error("classify_delta_squared: operator must be odd");
    if (!equals(adjoint(pencil), pencil))
        throw error("classify_delta_squared: operator must be self-adjoint");
    if (!apply(pencil, Density::unit(pencil.chart())).is_zero())
        throw error("classify_delta_squared: operator must kill the unit");

    DeltaSquaredReport rep;
    rep.delta_squared = compose(pencil, pencil); // odd Delta: Delta^2 = [Delta,Delta]/2
    rep.order = rep.delta_squared.pencil_order();
    rep.is_zero = rep.delta_squared.is_zero();
    if (rep.is_zero) {
        rep.order = -1;
        return rep;
    }
    if (rep.order == 3) rep.order3_symbol = symbol_part(rep.delta_squared, 3);
    if (rep.order > 1) return rep;

    Derivation X = derivation_from_diffop(rep.delta_squared);
    rep.X = X;
    rep.divergence_free = divergence(X).is_zero();
    rep.m_vector_field = X.coords;
    // Delta^2 must be the generalized Lie derivative of the vector density
    // X^a: its w_hat part is pinned by divergence-freeness (weight != 1).
    if (X.weight != 1) {
        auto xpar = X.parity();
        Derivation lie = X;
        ScalarExpr divc = ScalarExpr::zero(pencil.chart());
        for (std::size_t a = 0; a < X.coords.size(); ++a) {
            ScalarExpr t = differentiate(X.coords[a], static_cast<int>(a));
            if (pencil.chart()->parity(static_cast<int>(a)) == Parity::odd && xpar &&
                *xpar == Parity::even)
                t = -t;
            divc = divc + t;
        }
        lie.wpart = (Rational(-1) / (X.weight - 1)) * divc;
        rep.lie_form = (X == lie);
    }
    // Poisson condition for the M-vector field against the bracket of Delta
    BracketData data = bracket_from_operator(pencil);
    PhaseFn xpf = PhaseFn::zero(pencil.chart());
    for (std::size_t a = 0; a < X.coords.size(); ++a)
        xpf = xpf + PhaseFn::from_scalar(pencil.chart(), X.coords[a]) *
                        PhaseFn::momentum(pencil.chart(), static_cast<int>(a));
    rep.poisson_field = canonical_bracket(xpf, hamiltonian_S(data)).is_zero();
    return rep;
}

Density derivation_of_bracket_residual(const DiffOp& op, const BracketData& data,
                                       const Density& a, const Density& b) {
    auto pa = a.parity();
    if (!pa) throw error("derivation_of_bracket_residual: probe must be parity-homogeneous");
    // For an odd Delta with Delta(1) = 0, expanding the generated bracket
    // gives Delta{a,b} + {Delta a,b} + (-1)^a {a,Delta b}
    //     = Delta^2(ab) - Delta^2(a) b - a Delta^2(b),
    // the Leibniz defect of Delta^2; it vanishes for all a, b exactly when
    // ord Delta^2 <= 1.
    Density lhs = apply(op, long_bracket_eval(data, a, b));
    Density r1 = long_bracket_eval(data, apply(op, a), b);
    Density r2 = long_bracket_eval(data, a, apply(op, b));
    return lhs + r1 + Rational(*pa == Parity::odd ? -1 : 1) * r2;
}

std::vector<Density> bracket_probe_densities(const ChartPtr& chart) {
    std::vector<ScalarExpr> monos;
    monos.push_back(ScalarExpr::constant(chart, Rational(1)));
    std::size_t n = chart->size();
    for (std::size_t i = 0; i < n; ++i) {
        ScalarExpr xi = ScalarExpr::coordinate(chart, static_cast<int>(i));
        monos.push_back(xi);
        for (std::size_t j = i; j < n; ++j) {
            ScalarExpr xj = ScalarExpr::coordinate(chart, static_cast<int>(j));
            ScalarExpr m2 = xi * xj;
            if (m2.is_zero()) continue;
            monos.push_back(m2);
            for (std::size_t k = j; k < n; ++k) {
                ScalarExpr m3 = m2 * ScalarExpr::coordinate(chart, static_cast<int>(k));
                if (!m3.is_zero()) monos.push_back(m3);
            }
        }
    }
    std::vector<Rational> weights{Rational(0), Rational(1, 2), Rational(1), Rational(-1, 2),
                                  Rational(2)};
    std::vector<Density> out;
    for (const Rational& w : weights)
        for (const ScalarExpr& m : monos) out.push_back(Density::monomial(w, m));
    return out;
}

} // namespace densalg
