#include "densalg/phase.hpp"

namespace densalg {

ChartPtr phase_chart(const ChartPtr& base) {
    std::vector<std::string> names = base->names;
    std::vector<Parity> parities = base->parities;
    for (std::size_t i = 0; i < base->size(); ++i) {
        std::string pname = "p_" + base->names[i];
        if (base->index_of(pname) >= 0)
            throw error("coordinate name '" + pname + "' collides with a momentum name");
        names.push_back(pname);
        parities.push_back(base->parities[i]);
    }
    return make_chart(std::move(names), std::move(parities));
}

PhaseFn PhaseFn::zero(const ChartPtr& base) { return PhaseFn(base, phase_chart(base)); }

PhaseFn PhaseFn::constant(const ChartPtr& base, const Rational& c) {
    PhaseFn out = zero(base);
    out.add_term(PhaseKey{Rational(0), 0}, ScalarExpr::constant(out.ext_, c));
    return out;
}

PhaseFn PhaseFn::from_scalar(const ChartPtr& base, const ScalarExpr& f) {
    PhaseFn out = zero(base);
    require_same_chart(f.chart(), base);
    // base coordinates sit at the same indices inside the extended chart
    std::vector<std::optional<ScalarExpr>> images(base->size());
    for (std::size_t i = 0; i < base->size(); ++i)
        images[i] = ScalarExpr::coordinate(out.ext_, static_cast<int>(i));
    out.add_term(PhaseKey{Rational(0), 0}, substitute(f, images, out.ext_));
    return out;
}

PhaseFn PhaseFn::coordinate(const ChartPtr& base, int i) {
    PhaseFn out = zero(base);
    out.add_term(PhaseKey{Rational(0), 0}, ScalarExpr::coordinate(out.ext_, i));
    return out;
}

PhaseFn PhaseFn::momentum(const ChartPtr& base, int i) {
    PhaseFn out = zero(base);
    out.add_term(PhaseKey{Rational(0), 0},
                 ScalarExpr::coordinate(out.ext_, static_cast<int>(base->size()) + i));
    return out;
}

PhaseFn PhaseFn::t_power(const ChartPtr& base, const Rational& k) {
    PhaseFn out = zero(base);
    out.add_term(PhaseKey{k, 0}, ScalarExpr::constant(out.ext_, Rational(1)));
    return out;
}

PhaseFn PhaseFn::pt(const ChartPtr& base) {
    PhaseFn out = zero(base);
    out.add_term(PhaseKey{Rational(0), 1}, ScalarExpr::constant(out.ext_, Rational(1)));
    return out;
}

void PhaseFn::add_term(const PhaseKey& k, const ScalarExpr& c) {
    if (c.is_zero()) return;
    auto it = terms_.find(k);
    if (it == terms_.end()) {
        terms_.emplace(k, c);
    } else {
        it->second = it->second + c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

ScalarExpr PhaseFn::coefficient(const Rational& tpow, int ptpow) const {
    auto it = terms_.find(PhaseKey{tpow, ptpow});
    if (it == terms_.end()) return ScalarExpr::zero(ext_);
    return it->second;
}

std::optional<Parity> PhaseFn::parity() const {
    if (terms_.empty()) return Parity::even;
    std::optional<Parity> p;
    for (const auto& [k, c] : terms_) {
        auto q = c.parity();
        if (!q) return std::nullopt;
        if (!p) p = q;
        else if (*p != *q) return std::nullopt;
    }
    return p;
}

PhaseFn PhaseFn::parity_part(Parity p) const {
    PhaseFn out(base_, ext_);
    for (const auto& [k, c] : terms_) out.add_term(k, c.parity_part(p));
    return out;
}

PhaseFn operator+(const PhaseFn& a, const PhaseFn& b) {
    require_same_chart(a.ext_, b.ext_);
    PhaseFn out = a;
    for (const auto& [k, c] : b.terms_) out.add_term(k, c);
    return out;
}

PhaseFn operator-(const PhaseFn& a) {
    PhaseFn out = a;
    for (auto& [k, c] : out.terms_) c = -c;
    return out;
}

PhaseFn operator-(const PhaseFn& a, const PhaseFn& b) { return a + (-b); }

PhaseFn operator*(const PhaseFn& a, const PhaseFn& b) {
    require_same_chart(a.ext_, b.ext_);
    PhaseFn out(a.base_, a.ext_);
    for (const auto& [ka, ca] : a.terms_)
        for (const auto& [kb, cb] : b.terms_)
            out.add_term(PhaseKey{ka.tpow + kb.tpow, ka.ptpow + kb.ptpow}, ca * cb);
    return out;
}

PhaseFn operator*(const Rational& c, const PhaseFn& a) {
    PhaseFn out(a.base_, a.ext_);
    if (c == 0) return out;
    for (const auto& [k, v] : a.terms_) out.add_term(k, c * v);
    return out;
}

bool equals(const PhaseFn& a, const PhaseFn& b) {
    require_same_chart(a.ext_, b.ext_);
    if (a.terms_.size() != b.terms_.size()) return false;
    auto it = a.terms_.begin();
    auto jt = b.terms_.begin();
    for (; it != a.terms_.end(); ++it, ++jt) {
        if (!(it->first == jt->first)) return false;
        if (!equals(it->second, jt->second)) return false;
    }
    return true;
}

std::string PhaseFn::str() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [k, c] : terms_) {
        if (!first) out += " + ";
        first = false;
        out += "(" + c.str() + ")";
        if (k.tpow != 0) out += "*t^(" + to_string(k.tpow) + ")";
        if (k.ptpow == 1) out += "*p_t";
        else if (k.ptpow > 1) out += "*p_t^" + std::to_string(k.ptpow);
    }
    return out;
}

namespace {

PhaseFn dd_coordinate(const PhaseFn& F, int i) {
    PhaseFn out(F.base_chart(), F.ext_chart());
    for (const auto& [k, c] : F.terms()) out.add_term(k, differentiate(c, i));
    return out;
}

PhaseFn dd_momentum(const PhaseFn& F, int i) {
    return dd_coordinate(F, static_cast<int>(F.base_chart()->size()) + i);
}

PhaseFn dd_t(const PhaseFn& F) {
    PhaseFn out(F.base_chart(), F.ext_chart());
    for (const auto& [k, c] : F.terms()) {
        if (k.tpow == 0) continue;
        out.add_term(PhaseKey{k.tpow - 1, k.ptpow}, k.tpow * c);
    }
    return out;
}

PhaseFn dd_pt(const PhaseFn& F) {
    PhaseFn out(F.base_chart(), F.ext_chart());
    for (const auto& [k, c] : F.terms()) {
        if (k.ptpow == 0) continue;
        out.add_term(PhaseKey{k.tpow, k.ptpow - 1}, Rational(k.ptpow) * c);
    }
    return out;
}

PhaseFn bracket_homog(const PhaseFn& F, Parity pf, const PhaseFn& G) {
    const ChartPtr& base = F.base_chart();
    PhaseFn out(base, F.ext_chart());
    for (std::size_t a = 0; a < base->size(); ++a) {
        int ai = static_cast<int>(a);
        Parity pa = base->parity(ai);
        // (-1)^{a(F+1)} dF/dp_a dG/dx^a  -  (-1)^{a F} dF/dx^a dG/dp_a
        PhaseFn t1 = dd_momentum(F, ai) * dd_coordinate(G, ai);
        if (pa == Parity::odd && (pf + Parity::odd) == Parity::odd) t1 = -t1;
        PhaseFn t2 = dd_coordinate(F, ai) * dd_momentum(G, ai);
        if (pa == Parity::odd && pf == Parity::odd) t2 = -t2;
        out = out + t1 - t2;
    }
    out = out + dd_pt(F) * dd_t(G) - dd_t(F) * dd_pt(G);
    return out;
}

} // namespace

PhaseFn canonical_bracket(const PhaseFn& F, const PhaseFn& G) {
    require_same_chart(F.ext_chart(), G.ext_chart());
    PhaseFn out(F.base_chart(), F.ext_chart());
    for (Parity pf : {Parity::even, Parity::odd}) {
        PhaseFn Fp = F.parity_part(pf);
        if (Fp.is_zero()) continue;
        out = out + bracket_homog(Fp, pf, G);
    }
    return out;
}

PhaseFn apply_D(const PhaseFn& S, const PhaseFn& F) { return canonical_bracket(S, F); }

} // namespace densalg
