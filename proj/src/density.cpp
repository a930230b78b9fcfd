#include "densalg/density.hpp"

namespace densalg {

Density Density::zero(const ChartPtr& chart) { return Density(chart); }

Density Density::unit(const ChartPtr& chart) {
    Density d(chart);
    d.comps_[Rational(0)] = ScalarExpr::constant(chart, Rational(1));
    return d;
}

Density Density::monomial(const Rational& w, const ScalarExpr& coeff) {
    Density d(coeff.chart());
    if (!coeff.is_zero()) d.comps_[w] = coeff;
    return d;
}

ScalarExpr Density::component(const Rational& w) const {
    auto it = comps_.find(w);
    if (it != comps_.end()) return it->second;
    return ScalarExpr::zero(chart_);
}

void Density::add_component(const Rational& w, const ScalarExpr& c) {
    if (c.is_zero()) return;
    auto it = comps_.find(w);
    if (it == comps_.end()) {
        comps_.emplace(w, c);
    } else {
        it->second = it->second + c;
        if (it->second.is_zero()) comps_.erase(it);
    }
}

std::optional<Parity> Density::parity() const {
    if (comps_.empty()) return Parity::even;
    std::optional<Parity> p;
    for (const auto& [w, c] : comps_) {
        auto q = c.parity();
        if (!q) return std::nullopt;
        if (!p) p = q;
        else if (*p != *q) return std::nullopt;
    }
    return p;
}

bool Density::has_parity(Parity p) const {
    if (comps_.empty()) return true;
    auto q = parity();
    return q && *q == p;
}

Density Density::parity_part(Parity p) const {
    Density out(chart_);
    for (const auto& [w, c] : comps_) out.add_component(w, c.parity_part(p));
    return out;
}

Density Density::weight_operator() const {
    Density out(chart_);
    for (const auto& [w, c] : comps_) out.add_component(w, w * c);
    return out;
}

Density operator+(const Density& a, const Density& b) {
    require_same_chart(a.chart_, b.chart_);
    Density out = a;
    for (const auto& [w, c] : b.comps_) out.add_component(w, c);
    return out;
}

Density operator-(const Density& a) {
    Density out = a;
    for (auto& [w, c] : out.comps_) c = -c;
    return out;
}

Density operator-(const Density& a, const Density& b) { return a + (-b); }

Density operator*(const Density& a, const Density& b) {
    require_same_chart(a.chart_, b.chart_);
    Density out(a.chart_);
    for (const auto& [wa, ca] : a.comps_)
        for (const auto& [wb, cb] : b.comps_) out.add_component(wa + wb, ca * cb);
    return out;
}

Density operator*(const ScalarExpr& c, const Density& a) {
    Density out(a.chart_);
    for (const auto& [w, k] : a.comps_) out.add_component(w, c * k);
    return out;
}

Density operator*(const Rational& c, const Density& a) {
    Density out(a.chart_);
    if (c == 0) return out;
    for (const auto& [w, k] : a.comps_) out.add_component(w, c * k);
    return out;
}

bool equals(const Density& a, const Density& b) {
    require_same_chart(a.chart_, b.chart_);
    if (a.comps_.size() != b.comps_.size()) return false;
    auto it = a.comps_.begin();
    auto jt = b.comps_.begin();
    for (; it != a.comps_.end(); ++it, ++jt) {
        if (it->first != jt->first) return false;
        if (!equals(it->second, jt->second)) return false;
    }
    return true;
}

std::string Density::str() const {
    if (comps_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [w, c] : comps_) {
        if (!first) out += " + ";
        first = false;
        out += "(" + c.str() + ")*t^(" + to_string(w) + ")";
    }
    return out;
}

Density residue_pairing(const Density& psi, const Density& chi) {
    Density prod = psi * chi;
    return Density::monomial(Rational(1), prod.component(Rational(1)));
}

// ---------------------------------------------------------------- Derivation

Derivation Derivation::zero(const ChartPtr& chart, const Rational& lambda) {
    Derivation X;
    X.chart = chart;
    X.coords.assign(chart->size(), ScalarExpr::zero(chart));
    X.wpart = ScalarExpr::zero(chart);
    X.weight = lambda;
    return X;
}

bool Derivation::is_zero() const {
    for (const auto& c : coords)
        if (!c.is_zero()) return false;
    return wpart.is_zero();
}

std::optional<Parity> Derivation::parity() const {
    // X^a carries parity X + a, the w_hat part carries the parity of X
    std::optional<Parity> p;
    for (std::size_t a = 0; a < coords.size(); ++a) {
        if (coords[a].is_zero()) continue;
        auto q = coords[a].parity();
        if (!q) return std::nullopt;
        Parity cand = *q + chart->parity(static_cast<int>(a));
        if (!p) p = cand;
        else if (*p != cand) return std::nullopt;
    }
    if (!wpart.is_zero()) {
        auto q = wpart.parity();
        if (!q) return std::nullopt;
        if (!p) p = *q;
        else if (*p != *q) return std::nullopt;
    }
    if (!p) return Parity::even;
    return p;
}

bool Derivation::operator==(const Derivation& o) const {
    require_same_chart(chart, o.chart);
    if (weight != o.weight && !(is_zero() && o.is_zero())) return false;
    for (std::size_t a = 0; a < coords.size(); ++a)
        if (!equals(coords[a], o.coords[a])) return false;
    return equals(wpart, o.wpart);
}

std::string Derivation::str() const {
    std::string out = "t^(" + to_string(weight) + ")*(";
    bool first = true;
    for (std::size_t a = 0; a < coords.size(); ++a) {
        if (coords[a].is_zero()) continue;
        if (!first) out += " + ";
        first = false;
        out += "(" + coords[a].str() + ")*d_" + chart->name(static_cast<int>(a));
    }
    if (!wpart.is_zero()) {
        if (!first) out += " + ";
        first = false;
        out += "(" + wpart.str() + ")*w";
    }
    if (first) out += "0";
    return out + ")";
}

Density derivation_apply(const Derivation& X, const Density& psi) {
    require_same_chart(X.chart, psi.chart());
    Density out(X.chart);
    for (const auto& [w, c] : psi.comps()) {
        ScalarExpr acc = ScalarExpr::zero(X.chart);
        for (std::size_t a = 0; a < X.coords.size(); ++a)
            acc = acc + X.coords[a] * differentiate(c, static_cast<int>(a));
        acc = acc + w * (X.wpart * c);
        out.add_component(w + X.weight, acc);
    }
    return out;
}

Density divergence(const Derivation& X) {
    auto p = X.parity();
    if (!p) throw error("divergence: derivation must have homogeneous parity");
    ScalarExpr acc = ScalarExpr::zero(X.chart);
    for (std::size_t a = 0; a < X.coords.size(); ++a) {
        ScalarExpr d = differentiate(X.coords[a], static_cast<int>(a));
        // sign (-1)^{a(X+1)}
        if (X.chart->parity(static_cast<int>(a)) == Parity::odd && (*p + Parity::odd) == Parity::odd)
            d = -d;
        acc = acc + d;
    }
    acc = acc + (X.weight - 1) * X.wpart;
    return Density::monomial(X.weight, acc);
}

std::pair<Derivation, Density> decompose_derivation(const Derivation& X) {
    if (X.weight == 1)
        throw error("decompose_derivation: weight 1 is excluded");
    Density divX = divergence(X);
    Rational inv = Rational(1) / (X.weight - 1);
    Density phi = inv * divX;
    Derivation free = X;
    free.wpart = X.wpart - inv * divX.component(X.weight);
    if (!divergence(free).is_zero())
        throw internal_error("decompose_derivation: divergence-free part fails check");
    return {free, phi};
}

} // namespace densalg
