#include "densalg/diffop.hpp"

#include <algorithm>

namespace densalg {

namespace {

// Sorts a derivative word into canonical (ascending) order.
// Returns the Koszul sign, or 0 when an odd derivative repeats.
int canonical_sort(std::vector<int>& word, const Chart& chart) {
    int sign = 1;
    for (std::size_t i = 1; i < word.size(); ++i) {
        for (std::size_t j = i; j > 0 && word[j] < word[j - 1]; --j) {
            if (chart.parity(word[j]) == Parity::odd && chart.parity(word[j - 1]) == Parity::odd)
                sign = -sign;
            std::swap(word[j], word[j - 1]);
        }
    }
    for (std::size_t i = 1; i < word.size(); ++i)
        if (word[i] == word[i - 1] && chart.parity(word[i]) == Parity::odd) return 0;
    return sign;
}

Parity word_parity(const std::vector<int>& word, const Chart& chart) {
    int p = 0;
    for (int a : word)
        if (chart.parity(a) == Parity::odd) p ^= 1;
    return Parity(p);
}

Rational binom(int n, int k) {
    Rational out(1);
    for (int i = 0; i < k; ++i) out *= rat(n - i, i + 1);
    return out;
}

} // namespace

DiffOp DiffOp::zero(const ChartPtr& chart, const Rational& weight) { return DiffOp(chart, weight); }

DiffOp DiffOp::multiplication(const Rational& w, const ScalarExpr& coeff) {
    DiffOp out(coeff.chart(), w);
    out.add_term({}, 0, coeff);
    return out;
}

DiffOp DiffOp::multiplication(const Density& psi) {
    if (psi.comps().size() != 1)
        throw error("multiplication operator needs a weight-homogeneous density");
    const auto& [w, c] = *psi.comps().begin();
    return multiplication(w, c);
}

DiffOp DiffOp::partial(const ChartPtr& chart, int coord) {
    DiffOp out(chart, Rational(0));
    out.add_term({coord}, 0, ScalarExpr::constant(chart, Rational(1)));
    return out;
}

DiffOp DiffOp::weight_op(const ChartPtr& chart) {
    DiffOp out(chart, Rational(0));
    out.add_term({}, 1, ScalarExpr::constant(chart, Rational(1)));
    return out;
}

void DiffOp::add_term(std::vector<int> word, int wpow, const ScalarExpr& coeff) {
    if (coeff.is_zero()) return;
    if (wpow < 0) throw internal_error("negative power of the weight operator");
    int sign = canonical_sort(word, *chart_);
    if (sign == 0) return;
    ScalarExpr c = sign < 0 ? -coeff : coeff;
    OpKey key{std::move(word), wpow};
    auto it = terms_.find(key);
    if (it == terms_.end()) {
        terms_.emplace(std::move(key), std::move(c));
    } else {
        it->second = it->second + c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

std::optional<Parity> DiffOp::parity() const {
    if (terms_.empty()) return Parity::even;
    std::optional<Parity> p;
    for (const auto& [k, c] : terms_) {
        auto q = c.parity();
        if (!q) return std::nullopt;
        Parity cand = *q + word_parity(k.word, *chart_);
        if (!p) p = cand;
        else if (*p != cand) return std::nullopt;
    }
    return p;
}

bool DiffOp::has_parity(Parity p) const {
    if (terms_.empty()) return true;
    auto q = parity();
    return q && *q == p;
}

DiffOp DiffOp::parity_part(Parity p) const {
    DiffOp out(chart_, weight_);
    for (const auto& [k, c] : terms_)
        out.add_term(k.word, k.wpow, c.parity_part(p + word_parity(k.word, *chart_)));
    return out;
}

ScalarExpr DiffOp::coefficient(const std::vector<int>& word, int wpow) const {
    std::vector<int> w = word;
    int sign = canonical_sort(w, *chart_);
    if (sign == 0) return ScalarExpr::zero(chart_);
    auto it = terms_.find(OpKey{w, wpow});
    if (it == terms_.end()) return ScalarExpr::zero(chart_);
    return sign < 0 ? -it->second : it->second;
}

int DiffOp::slice_order() const {
    int d = -1;
    for (const auto& [k, c] : terms_) d = std::max(d, static_cast<int>(k.word.size()));
    return d;
}

int DiffOp::pencil_order() const {
    int d = -1;
    for (const auto& [k, c] : terms_) d = std::max(d, static_cast<int>(k.word.size()) + k.wpow);
    return d;
}

int DiffOp::max_wpow() const {
    int d = 0;
    for (const auto& [k, c] : terms_) d = std::max(d, k.wpow);
    return d;
}

DiffOp operator+(const DiffOp& a, const DiffOp& b) {
    require_same_chart(a.chart_, b.chart_);
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.weight_ != b.weight_) throw error("cannot add operators of different weights");
    DiffOp out = a;
    for (const auto& [k, c] : b.terms_) out.add_term(k.word, k.wpow, c);
    return out;
}

DiffOp operator-(const DiffOp& a) {
    DiffOp out = a;
    for (auto& [k, c] : out.terms_) c = -c;
    return out;
}

DiffOp operator-(const DiffOp& a, const DiffOp& b) { return a + (-b); }

DiffOp operator*(const Rational& c, const DiffOp& a) {
    DiffOp out(a.chart_, a.weight_);
    if (c == 0) return out;
    for (const auto& [k, v] : a.terms_) out.terms_.emplace(k, c * v);
    return out;
}

DiffOp scalar_multiple(const ScalarExpr& c, const DiffOp& a) {
    DiffOp out(a.chart(), a.weight());
    for (const auto& [k, v] : a.terms()) out.add_term(k.word, k.wpow, c * v);
    return out;
}

bool equals(const DiffOp& a, const DiffOp& b) {
    require_same_chart(a.chart_, b.chart_);
    if (a.is_zero() && b.is_zero()) return true;
    if (a.weight_ != b.weight_) return false;
    if (a.terms_.size() != b.terms_.size()) return false;
    auto it = a.terms_.begin();
    auto jt = b.terms_.begin();
    for (; it != a.terms_.end(); ++it, ++jt) {
        if (it->first != jt->first) return false;
        if (!equals(it->second, jt->second)) return false;
    }
    return true;
}

Density apply(const DiffOp& op, const Density& psi) {
    require_same_chart(op.chart(), psi.chart());
    Density out(op.chart());
    for (const auto& [key, coeff] : op.terms()) {
        for (const auto& [w, f] : psi.comps()) {
            ScalarExpr g = rat_pow(w, key.wpow) * f;
            for (auto it = key.word.rbegin(); it != key.word.rend(); ++it)
                g = differentiate(g, *it);
            out.add_component(w + op.weight(), coeff * g);
        }
    }
    return out;
}

namespace {

// Expands  d_word o M_c  into a sum of M_{c_i} o d_{W_i} by the Leibniz
// rule, peeling the innermost (rightmost) derivative each step.
void normal_order_rec(const std::vector<int>& word, std::size_t remaining, const ScalarExpr& c,
                      const Chart& chart,
                      std::vector<std::pair<ScalarExpr, std::vector<int>>>& out,
                      std::vector<int>& suffix_rev) {
    if (c.is_zero()) return;
    if (remaining == 0) {
        out.emplace_back(c, std::vector<int>(suffix_rev.rbegin(), suffix_rev.rend()));
        return;
    }
    int a = word[remaining - 1];
    // d_a o M_c = M_{d_a c} + (-1)^{a c} M_c o d_a
    normal_order_rec(word, remaining - 1, differentiate(c, a), chart, out, suffix_rev);
    for (Parity p : {Parity::even, Parity::odd}) {
        ScalarExpr part = c.parity_part(p);
        if (part.is_zero()) continue;
        if (chart.parity(a) == Parity::odd && p == Parity::odd) part = -part;
        suffix_rev.push_back(a);
        normal_order_rec(word, remaining - 1, part, chart, out, suffix_rev);
        suffix_rev.pop_back();
    }
}

std::vector<std::pair<ScalarExpr, std::vector<int>>>
normal_order(const std::vector<int>& word, const ScalarExpr& c, const Chart& chart) {
    std::vector<std::pair<ScalarExpr, std::vector<int>>> out;
    std::vector<int> suffix_rev;
    normal_order_rec(word, word.size(), c, chart, out, suffix_rev);
    return out;
}

} // namespace

DiffOp compose(const DiffOp& a, const DiffOp& b) {
    require_same_chart(a.chart(), b.chart());
    DiffOp out(a.chart(), a.weight() + b.weight());
    for (const auto& [ka, ca] : a.terms()) {
        // w_hat in `a` sees the argument weight shifted by b's weight:
        // w_hat^m o t^{mu} = t^{mu} (w_hat + mu)^m
        std::vector<Rational> shifted(static_cast<std::size_t>(ka.wpow) + 1);
        for (int j = 0; j <= ka.wpow; ++j)
            shifted[static_cast<std::size_t>(j)] =
                binom(ka.wpow, j) * rat_pow(b.weight(), ka.wpow - j);
        for (const auto& [kb, cb] : b.terms()) {
            for (auto& [ci, wi] : normal_order(ka.word, cb, *a.chart())) {
                std::vector<int> word = wi;
                word.insert(word.end(), kb.word.begin(), kb.word.end());
                ScalarExpr coeff = ca * ci;
                for (int j = 0; j <= ka.wpow; ++j) {
                    if (shifted[static_cast<std::size_t>(j)] == 0) continue;
                    out.add_term(word, j + kb.wpow, shifted[static_cast<std::size_t>(j)] * coeff);
                }
            }
        }
    }
    return out;
}

DiffOp commutator(const DiffOp& a, const DiffOp& b) {
    DiffOp out = DiffOp::zero(a.chart(), a.weight() + b.weight());
    for (Parity pa : {Parity::even, Parity::odd}) {
        DiffOp ap = a.parity_part(pa);
        if (ap.is_zero()) continue;
        for (Parity pb : {Parity::even, Parity::odd}) {
            DiffOp bp = b.parity_part(pb);
            if (bp.is_zero()) continue;
            DiffOp ab = compose(ap, bp);
            DiffOp ba = compose(bp, ap);
            out = out + (ab - Rational(sign_if_odd(pa, pb)) * ba);
        }
    }
    return out;
}

DiffOp adjoint(const DiffOp& a) {
    const Rational& lambda = a.weight();
    DiffOp out(a.chart(), lambda);
    const Chart& chart = *a.chart();
    for (const auto& [key, coeff] : a.terms()) {
        int nodd = 0;
        for (int g : key.word)
            if (chart.parity(g) == Parity::odd) ++nodd;
        // (d_{a_1}...d_{a_k})* = (-1)^k (word reversal Koszul sign) d_{a_k}...d_{a_1}
        int sign = (key.word.size() % 2 == 0) ? 1 : -1;
        if ((nodd * (nodd - 1) / 2) % 2 == 1) sign = -sign;
        std::vector<int> rev(key.word.rbegin(), key.word.rend());
        for (Parity p : {Parity::even, Parity::odd}) {
            ScalarExpr part = coeff.parity_part(p);
            if (part.is_zero()) continue;
            int s = sign;
            if (p == Parity::odd && nodd % 2 == 1) s = -s; // swap M_c past the word
            auto pieces = normal_order(rev, part, chart);
            // w_hat^m goes to (1 - lambda - w_hat)^m after pulling t^lambda out front
            for (int j = 0; j <= key.wpow; ++j) {
                Rational cj = binom(key.wpow, j) * rat_pow(Rational(1) - lambda, key.wpow - j);
                if (j % 2 == 1) cj = -cj;
                if (cj == 0) continue;
                if (s < 0) cj = -cj;
                for (const auto& [ci, wi] : pieces) out.add_term(wi, j, cj * ci);
            }
        }
    }
    return out;
}

DiffOp specialize(const DiffOp& pencil, const Rational& w0) {
    DiffOp out(pencil.chart(), pencil.weight());
    for (const auto& [key, coeff] : pencil.terms())
        out.add_term(key.word, 0, rat_pow(w0, key.wpow) * coeff);
    return out;
}

std::string DiffOp::str() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [k, c] : terms_) {
        if (!first) out += " + ";
        first = false;
        out += "(" + c.str() + ")";
        for (int g : k.word) out += "*d_" + chart_->name(g);
        if (k.wpow == 1) out += "*w";
        else if (k.wpow > 1) out += "*w^" + std::to_string(k.wpow);
    }
    if (weight_ != 0) out = "t^(" + to_string(weight_) + ") * [" + out + "]";
    return out;
}

// ------------------------------------------------------- derivations

DiffOp to_diffop(const Derivation& X) {
    DiffOp out(X.chart, X.weight);
    for (std::size_t a = 0; a < X.coords.size(); ++a)
        out.add_term({static_cast<int>(a)}, 0, X.coords[a]);
    out.add_term({}, 1, X.wpart);
    return out;
}

Derivation derivation_from_diffop(const DiffOp& op) {
    Derivation X = Derivation::zero(op.chart(), op.weight());
    for (const auto& [k, c] : op.terms()) {
        if (k.word.empty() && k.wpow == 1) X.wpart = c;
        else if (k.word.size() == 1 && k.wpow == 0)
            X.coords[static_cast<std::size_t>(k.word[0])] = c;
        else
            throw internal_error("operator is not a derivation of the density algebra");
    }
    return X;
}

Derivation derivation_commutator(const Derivation& X, const Derivation& Y) {
    return derivation_from_diffop(commutator(to_diffop(X), to_diffop(Y)));
}

Density divergence_via_adjoint(const Derivation& X) {
    DiffOp op = to_diffop(X);
    DiffOp sum = op + adjoint(op);
    for (const auto& [k, c] : sum.terms())
        if (!k.word.empty() || k.wpow != 0)
            throw internal_error("X + X* is not of order zero");
    return Density::monomial(X.weight, -sum.coefficient({}, 0));
}

// ------------------------------------------------------- order probes

std::vector<Density> default_probes(const ChartPtr& chart) {
    std::vector<Density> out;
    std::size_t n = chart->size();
    auto coord = [&](std::size_t i) { return ScalarExpr::coordinate(chart, static_cast<int>(i)); };
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(Density::monomial(Rational(0), coord(i)));
        for (std::size_t j = i; j < n; ++j) {
            ScalarExpr prod = coord(i) * coord(j);
            if (!prod.is_zero()) out.push_back(Density::monomial(Rational(0), prod));
        }
    }
    ScalarExpr one = ScalarExpr::constant(chart, Rational(1));
    out.push_back(Density::monomial(Rational(1), one));
    out.push_back(Density::monomial(Rational(-1), one));
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(Density::monomial(Rational(1), coord(i)));
    return out;
}

int grothendieck_order(const DiffOp& op, const std::vector<Density>& probes) {
    if (op.is_zero()) return -1;
    int syntactic = op.pencil_order();
    std::vector<DiffOp> current{op};
    for (int n = 0; n <= syntactic + 1; ++n) {
        std::vector<DiffOp> next;
        bool all_zero = true;
        for (const DiffOp& o : current) {
            for (const Density& p : probes) {
                DiffOp c = commutator(o, DiffOp::multiplication(p));
                if (!c.is_zero()) {
                    all_zero = false;
                    next.push_back(std::move(c));
                }
            }
        }
        if (all_zero) {
            if (n != syntactic)
                throw internal_error(
                    "commutator order disagrees with syntactic order: normalization bug");
            return n;
        }
        current = std::move(next);
    }
    throw internal_error("commutator order exceeds syntactic order: normalization bug");
}

namespace {

Density polarization_rec(const DiffOp& op, const std::vector<Density>& args, std::size_t i) {
    if (i == args.size()) return apply(op, Density::unit(op.chart()));
    Density out = Density::zero(op.chart());
    for (const auto& [w, c] : args[i].comps()) {
        for (Parity p : {Parity::even, Parity::odd}) {
            ScalarExpr part = c.parity_part(p);
            if (part.is_zero()) continue;
            DiffOp next = commutator(op, DiffOp::multiplication(w, part));
            out = out + polarization_rec(next, args, i + 1);
        }
    }
    return out;
}

} // namespace

Density polarization_bracket(const DiffOp& op, const std::vector<Density>& args) {
    if (args.empty()) throw error("polarization bracket needs at least one argument");
    return polarization_rec(op, args, 0);
}

Density polarization_bracket(const DiffOp& op, int k, const std::vector<Density>& args) {
    if (k < 1 || static_cast<std::size_t>(k) != args.size())
        throw error("polarization bracket: argument count does not match k");
    return polarization_bracket(op, args);
}

DiffOp operator_divergence(const DiffOp& op) {
    int k = op.pencil_order();
    DiffOp adj = adjoint(op);
    return (k % 2 == 0) ? adj - op : Rational(-1) * (op + adj);
}

// ------------------------------------------------------- adjoint witness

namespace {

// Right-normal form of  M_c o d_word: a sum of d_{W_i} o M_{c_i} with the
// coefficients strictly to the right of the derivatives.
void right_normal_order(const ScalarExpr& c, const std::vector<int>& word, std::size_t from,
                        const Chart& chart,
                        std::vector<std::pair<std::vector<int>, ScalarExpr>>& out,
                        std::vector<int>& prefix) {
    if (c.is_zero()) return;
    if (from == word.size()) {
        out.emplace_back(prefix, c);
        return;
    }
    int a = word[from];
    // M_c o d_a = (-1)^{a c} ( d_a o M_c  -  M_{d_a c} )
    for (Parity p : {Parity::even, Parity::odd}) {
        ScalarExpr part = c.parity_part(p);
        if (part.is_zero()) continue;
        int s = (chart.parity(a) == Parity::odd && p == Parity::odd) ? -1 : 1;
        ScalarExpr moved = s < 0 ? -part : part;
        prefix.push_back(a);
        right_normal_order(moved, word, from + 1, chart, out, prefix);
        prefix.pop_back();
        ScalarExpr dropped = differentiate(part, a);
        right_normal_order(s < 0 ? dropped : -dropped, word, from + 1, chart, out, prefix);
    }
}

Density diff_density(const Density& d, int coord) {
    Density out(d.chart());
    for (const auto& [w, c] : d.comps()) out.add_component(w, differentiate(c, coord));
    return out;
}

// One integration-by-parts move per derivative; accumulates the boundary
// terms d_a(...) into the witness V.
void ibp_chain(const std::vector<int>& word, std::size_t from, const Density& g,
               const Density& v, int sign, std::vector<ScalarExpr>& V) {
    if (from == word.size()) return;
    int a = word[from];
    Density h = g;
    for (std::size_t j = word.size(); j > from + 1; --j) h = diff_density(h, word[j - 1]);
    ScalarExpr boundary = (h * v).component(Rational(1));
    V[static_cast<std::size_t>(a)] =
        V[static_cast<std::size_t>(a)] + (sign < 0 ? -boundary : boundary);
    auto hp = h.parity();
    if (!hp) throw internal_error("ibp: non-homogeneous intermediate density");
    int next_sign = -sign;
    if (g.chart()->parity(a) == Parity::odd && *hp == Parity::odd) next_sign = -next_sign;
    ibp_chain(word, from + 1, g, diff_density(v, a), next_sign, V);
}

} // namespace

std::vector<ScalarExpr> pairing_defect_witness(const DiffOp& op, const Density& psi,
                                               const Density& chi) {
    require_same_chart(op.chart(), psi.chart());
    require_same_chart(op.chart(), chi.chart());
    const ChartPtr& chart = op.chart();
    std::vector<ScalarExpr> V(chart->size(), ScalarExpr::zero(chart));

    for (const auto& [key, coeff] : op.terms()) {
        std::vector<std::pair<std::vector<int>, ScalarExpr>> rnf;
        std::vector<int> prefix;
        right_normal_order(coeff, key.word, 0, *chart, rnf, prefix);
        for (const auto& [word, c] : rnf) {
            for (const auto& [w, f] : psi.comps()) {
                ScalarExpr g0 = c * (rat_pow(w, key.wpow) * f);
                Density g = Density::monomial(w + op.weight(), g0);
                for (Parity pg : {Parity::even, Parity::odd}) {
                    Density gp = g.parity_part(pg);
                    if (gp.is_zero()) continue;
                    for (Parity pv : {Parity::even, Parity::odd}) {
                        Density vp = chi.parity_part(pv);
                        if (vp.is_zero()) continue;
                        ibp_chain(word, 0, gp, vp, 1, V);
                    }
                }
            }
        }
    }

    auto op_par = op.parity();
    auto psi_par = psi.parity();
    if (!op_par || !psi_par)
        throw error("pairing_defect_witness: operator and density must be parity-homogeneous");
    Density lhs = residue_pairing(apply(op, psi), chi);
    Density rhs = residue_pairing(psi, apply(adjoint(op), chi));
    Density defect = lhs - Rational(sign_if_odd(*op_par, *psi_par)) * rhs;
    ScalarExpr divV = ScalarExpr::zero(chart);
    for (std::size_t a = 0; a < V.size(); ++a)
        divV = divV + differentiate(V[a], static_cast<int>(a));
    if (!equals(defect.component(Rational(1)), divV))
        throw internal_error("integration-by-parts witness fails to certify adjointness");
    return V;
}

} // namespace densalg
