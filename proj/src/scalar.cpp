#include "densalg/scalar.hpp"

#include <algorithm>

namespace densalg {

ChartPtr make_chart(std::vector<std::string> names, std::vector<Parity> parities) {
    if (names.empty()) throw error("chart needs at least one coordinate");
    if (names.size() != parities.size()) throw error("chart: names/parities length mismatch");
    for (std::size_t i = 0; i < names.size(); ++i)
        for (std::size_t j = i + 1; j < names.size(); ++j)
            if (names[i] == names[j]) throw error("chart: duplicate coordinate name '" + names[i] + "'");
    return std::make_shared<Chart>(Chart{std::move(names), std::move(parities)});
}

// ---------------------------------------------------------------- Poly

bool Poly::is_constant() const {
    if (terms.empty()) return true;
    if (terms.size() != 1) return false;
    const auto& e = terms.begin()->first;
    return std::all_of(e.begin(), e.end(), [](int k) { return k == 0; });
}

bool Poly::is_one() const { return is_constant() && constant_value() == 1; }

Rational Poly::constant_value() const {
    if (terms.empty()) return Rational(0);
    return terms.begin()->second;
}

int Poly::degree() const {
    int d = -1;
    for (const auto& [e, c] : terms) {
        int t = 0;
        for (int k : e) t += k;
        d = std::max(d, t);
    }
    return d;
}

Poly poly_zero() { return Poly{}; }

Poly poly_const(std::size_t nvars, const Rational& c) {
    Poly p;
    if (c != 0) p.terms[Expo(nvars, 0)] = c;
    return p;
}

Poly poly_var(std::size_t nvars, int i) {
    Poly p;
    Expo e(nvars, 0);
    e.at(static_cast<std::size_t>(i)) = 1;
    p.terms[e] = Rational(1);
    return p;
}

Poly poly_add(const Poly& a, const Poly& b) {
    Poly out = a;
    for (const auto& [e, c] : b.terms) {
        auto it = out.terms.find(e);
        if (it == out.terms.end()) {
            out.terms.emplace(e, c);
        } else {
            it->second += c;
            if (it->second == 0) out.terms.erase(it);
        }
    }
    return out;
}

Poly poly_neg(const Poly& a) {
    Poly out = a;
    for (auto& [e, c] : out.terms) c = -c;
    return out;
}

Poly poly_sub(const Poly& a, const Poly& b) { return poly_add(a, poly_neg(b)); }

Poly poly_scale(const Poly& a, const Rational& c) {
    Poly out;
    if (c == 0) return out;
    for (const auto& [e, k] : a.terms) out.terms[e] = k * c;
    return out;
}

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ea, ca] : a.terms) {
        for (const auto& [eb, cb] : b.terms) {
            Expo e(ea.size());
            for (std::size_t i = 0; i < ea.size(); ++i) e[i] = ea[i] + eb[i];
            auto it = out.terms.find(e);
            if (it == out.terms.end()) {
                Rational c = ca * cb;
                if (c != 0) out.terms.emplace(std::move(e), std::move(c));
            } else {
                it->second += ca * cb;
                if (it->second == 0) out.terms.erase(it);
            }
        }
    }
    return out;
}

Poly poly_pow(const Poly& a, int k) {
    if (k < 0) throw error("poly_pow: negative exponent");
    Poly out;
    bool have = false;
    Poly base = a;
    while (k > 0) {
        if (k & 1) {
            out = have ? poly_mul(out, base) : base;
            have = true;
        }
        k >>= 1;
        if (k) base = poly_mul(base, base);
    }
    if (!have) {
        // x^0 = 1; need the arity, recover it from a term if any
        std::size_t n = a.terms.empty() ? 0 : a.terms.begin()->first.size();
        return poly_const(n, Rational(1));
    }
    return out;
}

Poly poly_derivative(const Poly& a, int var) {
    Poly out;
    for (const auto& [e, c] : a.terms) {
        int k = e.at(static_cast<std::size_t>(var));
        if (k == 0) continue;
        Expo e2 = e;
        e2[static_cast<std::size_t>(var)] = k - 1;
        Rational c2 = c * k;
        auto it = out.terms.find(e2);
        if (it == out.terms.end()) out.terms.emplace(std::move(e2), std::move(c2));
        else it->second += c2;
    }
    for (auto it = out.terms.begin(); it != out.terms.end();)
        it = (it->second == 0) ? out.terms.erase(it) : std::next(it);
    return out;
}

std::optional<Poly> poly_exact_divide(const Poly& a, const Poly& b) {
    if (b.is_zero()) return std::nullopt;
    if (a.is_zero()) return Poly{};
    Poly q, r = a;
    const auto lb = std::prev(b.terms.end()); // lex-leading term of divisor
    while (!r.is_zero()) {
        const auto lr = std::prev(r.terms.end());
        Expo e(lr->first.size());
        for (std::size_t i = 0; i < e.size(); ++i) {
            e[i] = lr->first[i] - lb->first[i];
            if (e[i] < 0) return std::nullopt;
        }
        Rational c = lr->second / lb->second;
        Poly piece;
        piece.terms[e] = c;
        q = poly_add(q, piece);
        r = poly_sub(r, poly_mul(piece, b));
    }
    return q;
}

// ---------------------------------------------------------------- RatFn

namespace {

// Cancels the shared monomial content and rescales to a monic denominator.
RatFn ratfn_normalize(Poly num, Poly den) {
    if (den.is_zero()) throw error("rational function with zero denominator");
    if (num.is_zero()) {
        std::size_t n = den.terms.begin()->first.size();
        return RatFn{poly_zero(), poly_const(n, Rational(1))};
    }
    // monomial content shared by numerator and denominator
    Expo mina = num.terms.begin()->first, tmp;
    auto accmin = [](Expo& acc, const Poly& p) {
        for (const auto& [e, c] : p.terms)
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = std::min(acc[i], e[i]);
    };
    accmin(mina, num);
    accmin(mina, den);
    bool any = std::any_of(mina.begin(), mina.end(), [](int k) { return k > 0; });
    if (any) {
        auto strip = [&](const Poly& p) {
            Poly out;
            for (const auto& [e, c] : p.terms) {
                Expo e2 = e;
                for (std::size_t i = 0; i < e2.size(); ++i) e2[i] -= mina[i];
                out.terms.emplace(std::move(e2), c);
            }
            return out;
        };
        num = strip(num);
        den = strip(den);
    }
    if (auto q = poly_exact_divide(num, den)) {
        std::size_t n = den.terms.begin()->first.size();
        return RatFn{std::move(*q), poly_const(n, Rational(1))};
    }
    Rational lead = std::prev(den.terms.end())->second;
    if (lead != 1) {
        num = poly_scale(num, 1 / lead);
        den = poly_scale(den, 1 / lead);
    }
    return RatFn{std::move(num), std::move(den)};
}

} // namespace

RatFn ratfn_zero() { return RatFn{poly_zero(), poly_const(0, Rational(1))}; }

RatFn ratfn_const(std::size_t nvars, const Rational& c) {
    return RatFn{poly_const(nvars, c), poly_const(nvars, Rational(1))};
}

RatFn ratfn_make(Poly num, Poly den) { return ratfn_normalize(std::move(num), std::move(den)); }

RatFn ratfn_add(const RatFn& a, const RatFn& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.den == b.den) return ratfn_normalize(poly_add(a.num, b.num), a.den);
    return ratfn_normalize(poly_add(poly_mul(a.num, b.den), poly_mul(b.num, a.den)),
                           poly_mul(a.den, b.den));
}

RatFn ratfn_neg(const RatFn& a) { return RatFn{poly_neg(a.num), a.den}; }

RatFn ratfn_sub(const RatFn& a, const RatFn& b) { return ratfn_add(a, ratfn_neg(b)); }

RatFn ratfn_mul(const RatFn& a, const RatFn& b) {
    if (a.is_zero() || b.is_zero()) return ratfn_zero();
    if (auto q = poly_exact_divide(a.num, b.den))
        return ratfn_normalize(poly_mul(*q, b.num), a.den);
    if (auto q = poly_exact_divide(b.num, a.den))
        return ratfn_normalize(poly_mul(a.num, *q), b.den);
    return ratfn_normalize(poly_mul(a.num, b.num), poly_mul(a.den, b.den));
}

RatFn ratfn_recip(const RatFn& a) {
    if (a.is_zero()) throw error("division by zero rational function");
    return ratfn_normalize(a.den, a.num);
}

RatFn ratfn_scale(const RatFn& a, const Rational& c) {
    if (c == 0) return ratfn_zero();
    return RatFn{poly_scale(a.num, c), a.den};
}

RatFn ratfn_derivative(const RatFn& a, int var) {
    Poly dn = poly_derivative(a.num, var);
    Poly dd = poly_derivative(a.den, var);
    if (dd.is_zero()) return ratfn_normalize(std::move(dn), a.den);
    return ratfn_normalize(poly_sub(poly_mul(dn, a.den), poly_mul(a.num, dd)),
                           poly_mul(a.den, a.den));
}

bool ratfn_equal(const RatFn& a, const RatFn& b) {
    if (a.is_zero() || b.is_zero()) return a.is_zero() && b.is_zero();
    return poly_mul(a.num, b.den) == poly_mul(b.num, a.den);
}

// ---------------------------------------------------------------- ScalarExpr

ScalarExpr ScalarExpr::zero(const ChartPtr& chart) { return ScalarExpr(chart); }

ScalarExpr ScalarExpr::constant(const ChartPtr& chart, const Rational& c) {
    ScalarExpr e(chart);
    if (c != 0) e.terms_[OddWord{}] = ratfn_const(chart->size(), c);
    return e;
}

ScalarExpr ScalarExpr::coordinate(const ChartPtr& chart, int i) {
    if (i < 0 || static_cast<std::size_t>(i) >= chart->size()) throw error("coordinate index out of range");
    ScalarExpr e(chart);
    if (chart->parity(i) == Parity::even) {
        e.terms_[OddWord{}] = RatFn{poly_var(chart->size(), i),
                                    poly_const(chart->size(), Rational(1))};
    } else {
        e.terms_[OddWord{i}] = ratfn_const(chart->size(), Rational(1));
    }
    return e;
}

ScalarExpr ScalarExpr::from_ratfn(const ChartPtr& chart, RatFn r) {
    ScalarExpr e(chart);
    if (!r.is_zero()) e.terms_[OddWord{}] = std::move(r);
    return e;
}

void ScalarExpr::add_term(const OddWord& w, const RatFn& c) {
    if (c.is_zero()) return;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (chart_->parity(w[i]) != Parity::odd) throw internal_error("odd word contains even coordinate");
        if (i + 1 < w.size() && w[i] >= w[i + 1]) throw internal_error("odd word not strictly increasing");
    }
    auto it = terms_.find(w);
    if (it == terms_.end()) {
        terms_.emplace(w, c);
    } else {
        it->second = ratfn_add(it->second, c);
        if (it->second.is_zero()) terms_.erase(it);
    }
}

std::optional<Parity> ScalarExpr::parity() const {
    if (terms_.empty()) return Parity::even;
    Parity p = parity_of_int(static_cast<int>(terms_.begin()->first.size()));
    for (const auto& [w, c] : terms_)
        if (parity_of_int(static_cast<int>(w.size())) != p) return std::nullopt;
    return p;
}

bool ScalarExpr::has_parity(Parity p) const {
    if (terms_.empty()) return true; // zero has every parity
    auto q = parity();
    return q && *q == p;
}

ScalarExpr ScalarExpr::parity_part(Parity p) const {
    ScalarExpr out(chart_);
    for (const auto& [w, c] : terms_)
        if (parity_of_int(static_cast<int>(w.size())) == p) out.terms_.emplace(w, c);
    return out;
}

ScalarExpr ScalarExpr::body() const {
    ScalarExpr out(chart_);
    auto it = terms_.find(OddWord{});
    if (it != terms_.end()) out.terms_.emplace(it->first, it->second);
    return out;
}

ScalarExpr ScalarExpr::soul() const {
    ScalarExpr out(chart_);
    for (const auto& [w, c] : terms_)
        if (!w.empty()) out.terms_.emplace(w, c);
    return out;
}

ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b) {
    require_same_chart(a.chart_, b.chart_);
    ScalarExpr out = a;
    for (const auto& [w, c] : b.terms_) out.add_term(w, c);
    return out;
}

ScalarExpr operator-(const ScalarExpr& a) {
    ScalarExpr out = a;
    for (auto& [w, c] : out.terms_) c = ratfn_neg(c);
    return out;
}

ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b) { return a + (-b); }

namespace {

// Merge two strictly increasing odd words; Koszul sign counts the swaps of
// odd generators. Returns nullopt when a generator repeats (square = 0).
std::optional<std::pair<OddWord, int>> merge_words(const OddWord& a, const OddWord& b) {
    OddWord out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    int sign = 1;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return std::nullopt;
        if (a[i] < b[j]) {
            out.push_back(a[i++]);
        } else {
            // b[j] passes the remaining |a|-i odd generators
            if ((a.size() - i) % 2 == 1) sign = -sign;
            out.push_back(b[j++]);
        }
    }
    while (i < a.size()) out.push_back(a[i++]);
    while (j < b.size()) out.push_back(b[j++]);
    return std::make_pair(std::move(out), sign);
}

} // namespace

ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b) {
    require_same_chart(a.chart_, b.chart_);
    ScalarExpr out(a.chart_);
    for (const auto& [wa, ca] : a.terms_) {
        for (const auto& [wb, cb] : b.terms_) {
            auto merged = merge_words(wa, wb);
            if (!merged) continue;
            RatFn c = ratfn_mul(ca, cb);
            if (merged->second < 0) c = ratfn_neg(c);
            out.add_term(merged->first, c);
        }
    }
    return out;
}

ScalarExpr operator*(const Rational& c, const ScalarExpr& a) {
    ScalarExpr out(a.chart_);
    if (c == 0) return out;
    for (const auto& [w, k] : a.terms_) out.terms_.emplace(w, ratfn_scale(k, c));
    return out;
}

bool equals(const ScalarExpr& a, const ScalarExpr& b) {
    require_same_chart(a.chart_, b.chart_);
    if (a.terms_.size() != b.terms_.size()) return false;
    auto it = a.terms_.begin();
    auto jt = b.terms_.begin();
    for (; it != a.terms_.end(); ++it, ++jt) {
        if (it->first != jt->first) return false;
        if (!ratfn_equal(it->second, jt->second)) return false;
    }
    return true;
}

ScalarExpr differentiate(const ScalarExpr& a, int coord) {
    const ChartPtr& chart = a.chart();
    if (coord < 0 || static_cast<std::size_t>(coord) >= chart->size())
        throw error("differentiate: unknown coordinate");
    ScalarExpr out(chart);
    if (chart->parity(coord) == Parity::even) {
        for (const auto& [w, c] : a.terms()) out.add_term(w, ratfn_derivative(c, coord));
    } else {
        for (const auto& [w, c] : a.terms()) {
            auto pos = std::find(w.begin(), w.end(), coord);
            if (pos == w.end()) continue;
            OddWord rest;
            rest.reserve(w.size() - 1);
            for (int g : w)
                if (g != coord) rest.push_back(g);
            // left derivative: bring the generator to the front first
            int sign = (std::distance(w.begin(), pos) % 2 == 0) ? 1 : -1;
            out.add_term(rest, sign < 0 ? ratfn_neg(c) : c);
        }
    }
    return out;
}

ScalarExpr differentiate(const ScalarExpr& a, const std::string& coord) {
    int i = a.chart()->index_of(coord);
    if (i < 0) throw error("differentiate: unknown coordinate '" + coord + "'");
    return differentiate(a, i);
}

ScalarExpr inverse(const ScalarExpr& a) {
    const ChartPtr& chart = a.chart();
    auto it = a.terms().find(OddWord{});
    if (it == a.terms().end())
        throw error("inverse: expression has identically zero body");
    ScalarExpr binv = ScalarExpr::from_ratfn(chart, ratfn_recip(it->second));
    ScalarExpr soul = a.soul();
    if (soul.is_zero()) return binv;
    // (b+n)^{-1} = b^{-1} sum (-n b^{-1})^j, finite by nilpotence
    std::size_t nodd = 0;
    for (std::size_t i = 0; i < chart->size(); ++i)
        if (chart->parity(static_cast<int>(i)) == Parity::odd) ++nodd;
    ScalarExpr u = -(soul * binv);
    ScalarExpr acc = ScalarExpr::constant(chart, Rational(1));
    ScalarExpr upow = ScalarExpr::constant(chart, Rational(1));
    for (std::size_t j = 1; j <= nodd; ++j) {
        upow = upow * u;
        if (upow.is_zero()) break;
        acc = acc + upow;
    }
    return binv * acc;
}

ScalarExpr divide(const ScalarExpr& a, const ScalarExpr& b) { return a * inverse(b); }

ScalarExpr power(const ScalarExpr& a, long k) {
    if (k < 0) return power(inverse(a), -k);
    ScalarExpr out = ScalarExpr::constant(a.chart(), Rational(1));
    for (long i = 0; i < k; ++i) out = out * a;
    return out;
}

namespace {

ScalarExpr poly_substitute(const Poly& p, const std::vector<ScalarExpr>& images,
                           const ChartPtr& target) {
    ScalarExpr out = ScalarExpr::zero(target);
    std::vector<std::map<int, ScalarExpr>> cache(images.size());
    auto image_pow = [&](std::size_t i, int k) -> const ScalarExpr& {
        auto [it, fresh] = cache[i].try_emplace(k);
        if (fresh) it->second = power(images[i], k);
        return it->second;
    };
    for (const auto& [e, c] : p.terms) {
        ScalarExpr term = ScalarExpr::constant(target, c);
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e[i] != 0) term = term * image_pow(i, e[i]);
        out = out + term;
    }
    return out;
}

} // namespace

ScalarExpr substitute(const ScalarExpr& a,
                      const std::vector<std::optional<ScalarExpr>>& images,
                      const ChartPtr& target) {
    const ChartPtr& chart = a.chart();
    if (images.size() != chart->size()) throw error("substitute: image list has wrong length");
    std::vector<ScalarExpr> img;
    img.reserve(chart->size());
    for (std::size_t i = 0; i < chart->size(); ++i) {
        if (images[i]) {
            require_same_chart(images[i]->chart(), target);
            if (!images[i]->has_parity(chart->parity(static_cast<int>(i))))
                throw error("substitute: parity-violating substitution for '" +
                            chart->name(static_cast<int>(i)) + "'");
            img.push_back(*images[i]);
        } else {
            int j = target->index_of(chart->name(static_cast<int>(i)));
            if (j < 0 || target->parity(j) != chart->parity(static_cast<int>(i)))
                throw error("substitute: no image for coordinate '" +
                            chart->name(static_cast<int>(i)) + "'");
            img.push_back(ScalarExpr::coordinate(target, j));
        }
    }
    ScalarExpr out = ScalarExpr::zero(target);
    for (const auto& [w, c] : a.terms()) {
        ScalarExpr num = poly_substitute(c.num, img, target);
        ScalarExpr den = poly_substitute(c.den, img, target);
        ScalarExpr coeff;
        try {
            coeff = num * inverse(den);
        } catch (const error&) {
            throw error("substitute: denominator becomes identically zero");
        }
        ScalarExpr term = coeff;
        for (int g : w) term = term * img[static_cast<std::size_t>(g)];
        out = out + term;
    }
    return out;
}

ScalarExpr substitute(const ScalarExpr& a, const std::map<std::string, ScalarExpr>& images) {
    const ChartPtr& chart = a.chart();
    std::vector<std::optional<ScalarExpr>> vec(chart->size());
    for (const auto& [name, expr] : images) {
        int i = chart->index_of(name);
        if (i < 0) throw error("substitute: unknown coordinate '" + name + "'");
        vec[static_cast<std::size_t>(i)] = expr;
    }
    return substitute(a, vec, chart);
}

// ---------------------------------------------------------------- printing

namespace {

std::string rational_abs_str(const Rational& q) {
    Rational a = q < 0 ? Rational(-q) : q;
    return a.get_str();
}

std::string mono_str(const Expo& e, const Chart& chart) {
    std::string out;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        if (!out.empty()) out += "*";
        out += chart.names[i];
        if (e[i] != 1) out += "^" + std::to_string(e[i]);
    }
    return out;
}

std::string poly_str(const Poly& p, const Chart& chart) {
    if (p.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (auto it = p.terms.rbegin(); it != p.terms.rend(); ++it) {
        const auto& [e, c] = *it;
        std::string m = mono_str(e, chart);
        std::string piece;
        Rational ac = c < 0 ? Rational(-c) : c;
        if (m.empty()) piece = rational_abs_str(c);
        else if (ac == 1) piece = m;
        else piece = rational_abs_str(c) + "*" + m;
        if (first) {
            out += (c < 0 ? "-" : "") + piece;
            first = false;
        } else {
            out += (c < 0 ? " - " : " + ") + piece;
        }
    }
    return out;
}

} // namespace

std::string ScalarExpr::str() const {
    if (terms_.empty()) return "0";
    const Chart& chart = *chart_;
    std::string out;
    bool first = true;
    for (const auto& [w, c] : terms_) {
        std::string word;
        for (int g : w) {
            if (!word.empty()) word += "*";
            word += chart.names[static_cast<std::size_t>(g)];
        }
        std::string piece;
        bool minus = false;
        if (c.den.is_one()) {
            if (w.empty()) {
                piece = poly_str(c.num, chart);
            } else if (c.num.is_constant()) {
                Rational k = c.num.constant_value();
                minus = k < 0;
                Rational ak = k < 0 ? Rational(-k) : k;
                piece = (ak == 1) ? word : rational_abs_str(k) + "*" + word;
            } else if (c.num.terms.size() == 1) {
                const auto& [e, k] = *c.num.terms.begin();
                minus = k < 0;
                Rational ak = k < 0 ? Rational(-k) : k;
                std::string m = mono_str(e, chart);
                piece = (ak == 1 ? m : rational_abs_str(k) + "*" + m) + "*" + word;
            } else {
                piece = "(" + poly_str(c.num, chart) + ")*" + word;
            }
        } else {
            piece = "(" + poly_str(c.num, chart) + ")/(" + poly_str(c.den, chart) + ")";
            if (!w.empty()) piece += "*" + word;
        }
        if (first) {
            out += (minus ? "-" : "") + piece;
            first = false;
        } else {
            out += (minus ? " - " : " + ") + piece;
        }
    }
    return out;
}

} // namespace densalg
