#include "densalg/geometry.hpp"

#include <algorithm>

namespace densalg {

namespace {

bool body_invertible(const ScalarExpr& e) {
    return !e.body().is_zero();
}

long integer_weight(const Rational& w, const char* who) {
    if (!is_integer(w)) throw error(std::string(who) + ": requires an integer weight");
    return w.get_num().get_si();
}

// Determinant of a matrix with even entries (they commute).
ScalarExpr determinant_even(std::vector<std::vector<ScalarExpr>> m, const ChartPtr& chart) {
    std::size_t n = m.size();
    ScalarExpr det = ScalarExpr::constant(chart, Rational(1));
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = n;
        for (std::size_t r = k; r < n; ++r)
            if (body_invertible(m[r][k])) { piv = r; break; }
        if (piv == n) throw error("determinant: no invertible pivot");
        if (piv != k) {
            std::swap(m[piv], m[k]);
            det = -det;
        }
        det = det * m[k][k];
        ScalarExpr inv = inverse(m[k][k]);
        for (std::size_t r = k + 1; r < n; ++r) {
            ScalarExpr f = m[r][k] * inv;
            for (std::size_t c = k; c < n; ++c) m[r][c] = m[r][c] - f * m[k][c];
        }
    }
    return det;
}

ScalarExpr berezinian(const std::vector<std::vector<ScalarExpr>>& jac, const ChartPtr& from,
                      const ChartPtr& to) {
    std::vector<std::size_t> even_rows, odd_rows, even_cols, odd_cols;
    for (std::size_t i = 0; i < from->size(); ++i)
        (from->parity(static_cast<int>(i)) == Parity::even ? even_rows : odd_rows).push_back(i);
    for (std::size_t j = 0; j < to->size(); ++j)
        (to->parity(static_cast<int>(j)) == Parity::even ? even_cols : odd_cols).push_back(j);
    auto block = [&](const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
        std::vector<std::vector<ScalarExpr>> out(rows.size(),
                                                 std::vector<ScalarExpr>(cols.size(),
                                                                         ScalarExpr::zero(from)));
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j) out[i][j] = jac[rows[i]][cols[j]];
        return out;
    };
    auto A = block(even_rows, even_cols);
    if (odd_rows.empty()) return determinant_even(A, from);
    auto B = block(even_rows, odd_cols);
    auto C = block(odd_rows, even_cols);
    auto D = block(odd_rows, odd_cols);
    auto Dinv = matrix_inverse(D, from);
    // Schur complement A - B D^{-1} C, entries even
    std::size_t ne = even_rows.size(), no = odd_rows.size();
    for (std::size_t i = 0; i < ne; ++i)
        for (std::size_t j = 0; j < ne; ++j) {
            ScalarExpr acc = ScalarExpr::zero(from);
            for (std::size_t r = 0; r < no; ++r)
                for (std::size_t s = 0; s < no; ++s)
                    acc = acc + B[i][r] * Dinv[r][s] * C[s][j];
            A[i][j] = A[i][j] - acc;
        }
    return determinant_even(A, from) * inverse(determinant_even(D, from));
}

DiffOp retag_weight(const DiffOp& op, const Rational& weight) {
    DiffOp out(op.chart(), weight);
    for (const auto& [k, c] : op.terms()) out.add_term(k.word, k.wpow, c);
    return out;
}

// Right-multiplication by a polynomial in w_hat (applied at argument weight).
DiffOp times_wpoly(const DiffOp& op, const std::vector<Rational>& coeffs) {
    DiffOp out(op.chart(), op.weight());
    for (const auto& [k, c] : op.terms())
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            if (coeffs[j] == 0) continue;
            out.add_term(k.word, k.wpow + static_cast<int>(j), coeffs[j] * c);
        }
    return out;
}

} // namespace

std::vector<std::vector<ScalarExpr>> matrix_inverse(const std::vector<std::vector<ScalarExpr>>& m,
                                                    const ChartPtr& chart) {
    std::size_t n = m.size();
    for (const auto& row : m)
        if (row.size() != n) throw error("matrix_inverse: matrix is not square");
    std::vector<std::vector<ScalarExpr>> a = m;
    std::vector<std::vector<ScalarExpr>> e(n, std::vector<ScalarExpr>(n, ScalarExpr::zero(chart)));
    for (std::size_t i = 0; i < n; ++i) e[i][i] = ScalarExpr::constant(chart, Rational(1));
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = n;
        for (std::size_t r = k; r < n; ++r)
            if (body_invertible(a[r][k])) { piv = r; break; }
        if (piv == n) throw error("matrix_inverse: matrix is singular");
        if (piv != k) {
            std::swap(a[piv], a[k]);
            std::swap(e[piv], e[k]);
        }
        ScalarExpr inv = inverse(a[k][k]);
        for (std::size_t c = 0; c < n; ++c) {
            a[k][c] = inv * a[k][c];
            e[k][c] = inv * e[k][c];
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == k || a[r][k].is_zero()) continue;
            ScalarExpr f = a[r][k];
            for (std::size_t c = 0; c < n; ++c) {
                a[r][c] = a[r][c] - f * a[k][c];
                e[r][c] = e[r][c] - f * e[k][c];
            }
        }
    }
    // guard: two-sided inverse over the graded ring
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            ScalarExpr acc = ScalarExpr::zero(chart);
            for (std::size_t k = 0; k < n; ++k) acc = acc + m[i][k] * e[k][j];
            ScalarExpr expect =
                i == j ? ScalarExpr::constant(chart, Rational(1)) : ScalarExpr::zero(chart);
            if (!equals(acc, expect)) throw internal_error("matrix_inverse: verification failed");
        }
    return e;
}

CoordChange make_coord_change(const ChartPtr& from, const ChartPtr& to,
                              std::vector<ScalarExpr> forward,
                              std::optional<std::vector<ScalarExpr>> inverse_map,
                              std::optional<ScalarExpr> jacobian) {
    std::size_t n = from->size();
    if (to->size() != n) throw error("coordinate change must preserve the dimension");
    for (std::size_t i = 0; i < n; ++i)
        if (from->parity(static_cast<int>(i)) != to->parity(static_cast<int>(i)))
            throw error("coordinate change must preserve the parity signature");
    if (forward.size() != n) throw error("coordinate change: wrong number of components");
    for (std::size_t i = 0; i < n; ++i) {
        require_same_chart(forward[i].chart(), from);
        if (!forward[i].has_parity(to->parity(static_cast<int>(i))))
            throw error("coordinate change component has wrong parity");
    }
    CoordChange ch;
    ch.from = from;
    ch.to = to;
    ch.forward = std::move(forward);
    ch.jac.assign(n, std::vector<ScalarExpr>(n, ScalarExpr::zero(from)));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t bp = 0; bp < n; ++bp)
            ch.jac[a][bp] = differentiate(ch.forward[bp], static_cast<int>(a));
    ch.jac_inv = matrix_inverse(ch.jac, from);
    if (jacobian) {
        require_same_chart(jacobian->chart(), from);
        ch.jacobian = *jacobian;
    } else {
        ch.jacobian = berezinian(ch.jac, from, to);
    }
    if (!body_invertible(ch.jacobian) || !ch.jacobian.has_parity(Parity::even))
        throw error("coordinate change has a non-invertible Jacobian");
    ScalarExpr jinv = inverse(ch.jacobian);
    ch.dlogJ.reserve(n);
    for (std::size_t a = 0; a < n; ++a)
        ch.dlogJ.push_back(differentiate(ch.jacobian, static_cast<int>(a)) * jinv);
    if (inverse_map) {
        if (inverse_map->size() != n) throw error("inverse map: wrong number of components");
        std::vector<std::optional<ScalarExpr>> inv_images(n), fwd_images(n);
        for (std::size_t i = 0; i < n; ++i) {
            require_same_chart((*inverse_map)[i].chart(), to);
            inv_images[i] = (*inverse_map)[i];
            fwd_images[i] = ch.forward[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            ScalarExpr round1 = substitute(ch.forward[i], inv_images, to);
            if (!equals(round1, ScalarExpr::coordinate(to, static_cast<int>(i))))
                throw error("forward o inverse is not the identity");
            ScalarExpr round2 = substitute((*inverse_map)[i], fwd_images, from);
            if (!equals(round2, ScalarExpr::coordinate(from, static_cast<int>(i))))
                throw error("inverse o forward is not the identity");
        }
        ch.inverse = std::move(inverse_map);
    }
    return ch;
}

CoordChange identity_change(const ChartPtr& chart) {
    std::vector<ScalarExpr> fwd;
    for (std::size_t i = 0; i < chart->size(); ++i)
        fwd.push_back(ScalarExpr::coordinate(chart, static_cast<int>(i)));
    return make_coord_change(chart, chart, fwd, fwd, ScalarExpr::constant(chart, Rational(1)));
}

ScalarExpr frame_derivative(const CoordChange& ch, int aprime, const ScalarExpr& f) {
    require_same_chart(f.chart(), ch.from);
    ScalarExpr out = ScalarExpr::zero(ch.from);
    for (std::size_t a = 0; a < ch.from->size(); ++a)
        out = out + ch.jac_inv[static_cast<std::size_t>(aprime)][a] *
                        differentiate(f, static_cast<int>(a));
    return out;
}

ScalarExpr push_expression(const CoordChange& ch, const ScalarExpr& f) {
    if (!ch.inverse) throw error("push_expression: no inverse map supplied");
    std::vector<std::optional<ScalarExpr>> images(ch.from->size());
    for (std::size_t i = 0; i < ch.from->size(); ++i) images[i] = (*ch.inverse)[i];
    return substitute(f, images, ch.to);
}

BracketData transform_bracket_data(const BracketData& data, const CoordChange& ch) {
    require_same_chart(data.chart, ch.from);
    data.validate();
    long lam = integer_weight(data.weight, "transform_bracket_data");
    ScalarExpr jml = power(ch.jacobian, -lam);
    std::size_t n = ch.from->size();
    BracketData out = BracketData::zero(ch.from, data.weight, data.eps);
    for (std::size_t ap = 0; ap < n; ++ap) {
        Parity pap = ch.to->parity(static_cast<int>(ap));
        for (std::size_t bp = 0; bp < n; ++bp) {
            Parity pbp = ch.to->parity(static_cast<int>(bp));
            ScalarExpr acc = ScalarExpr::zero(ch.from);
            for (std::size_t a = 0; a < n; ++a) {
                Parity pa = ch.from->parity(static_cast<int>(a));
                for (std::size_t b = 0; b < n; ++b) {
                    ScalarExpr t = data.S[a][b] * ch.jac[b][bp] * ch.jac[a][ap];
                    // (-1)^{b'(a'+a)}
                    if (pbp == Parity::odd && (pap + pa) == Parity::odd) t = -t;
                    acc = acc + t;
                }
            }
            out.S[ap][bp] = jml * acc;
        }
        ScalarExpr gacc = ScalarExpr::zero(ch.from);
        for (std::size_t a = 0; a < n; ++a) {
            ScalarExpr base = data.gamma[a];
            for (std::size_t b = 0; b < n; ++b) base = base + data.S[a][b] * ch.dlogJ[b];
            gacc = gacc + base * ch.jac[a][ap];
        }
        out.gamma[ap] = jml * gacc;
    }
    ScalarExpr th = data.theta;
    for (std::size_t a = 0; a < n; ++a) {
        th = th + Rational(2) * (data.gamma[a] * ch.dlogJ[a]);
        for (std::size_t b = 0; b < n; ++b)
            th = th + data.S[a][b] * ch.dlogJ[b] * ch.dlogJ[a];
    }
    out.theta = jml * th;
    out.validate();
    return out;
}

BracketData push_bracket_data(const BracketData& pullback, const CoordChange& ch) {
    BracketData out = BracketData::zero(ch.to, pullback.weight, pullback.eps);
    std::size_t n = ch.to->size();
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) out.S[a][b] = push_expression(ch, pullback.S[a][b]);
        out.gamma[a] = push_expression(ch, pullback.gamma[a]);
    }
    out.theta = push_expression(ch, pullback.theta);
    out.validate();
    return out;
}

ConnectionOnVol transform_connection(const ConnectionOnVol& conn, const CoordChange& ch) {
    require_same_chart(conn.chart, ch.from);
    std::size_t n = ch.from->size();
    ConnectionOnVol out{ch.from, std::vector<ScalarExpr>(n, ScalarExpr::zero(ch.from))};
    for (std::size_t ap = 0; ap < n; ++ap) {
        ScalarExpr acc = ScalarExpr::zero(ch.from);
        for (std::size_t a = 0; a < n; ++a)
            acc = acc + (conn.gamma_lower[a] + ch.dlogJ[a]) * ch.jac_inv[ap][a];
        out.gamma_lower[ap] = acc;
    }
    return out;
}

DiffOp transform_operator(const DiffOp& pencil, const CoordChange& ch) {
    require_same_chart(pencil.chart(), ch.from);
    long lam = integer_weight(pencil.weight(), "transform_operator");
    ScalarExpr jml = power(ch.jacobian, -lam);
    DiffOp out(ch.from, Rational(0));
    for (const auto& [key, coeff] : pencil.terms()) {
        DiffOp piece = DiffOp::multiplication(Rational(0), coeff * jml);
        for (int a : key.word) {
            // J^{-w} d_a J^{w} = d_a + w_hat (d_a J / J)
            DiffOp twisted(ch.from, Rational(0));
            twisted.add_term({a}, 0, ScalarExpr::constant(ch.from, Rational(1)));
            twisted.add_term({}, 1, ch.dlogJ[static_cast<std::size_t>(a)]);
            piece = compose(piece, twisted);
        }
        if (key.wpow > 0) {
            DiffOp wp(ch.from, Rational(0));
            wp.add_term({}, key.wpow, ScalarExpr::constant(ch.from, Rational(1)));
            piece = compose(piece, wp);
        }
        out = out + piece;
    }
    return retag_weight(out, pencil.weight());
}

DiffOp canonical_pencil_in_frame(const BracketData& data, const CoordChange& ch) {
    require_same_chart(data.chart, ch.from);
    std::size_t n = ch.from->size();
    const Rational& lambda = data.weight;
    Rational half(1, 2);
    auto dhat_op = [&](std::size_t ap) {
        DiffOp d(ch.from, Rational(0));
        for (std::size_t a = 0; a < n; ++a)
            d.add_term({static_cast<int>(a)}, 0, ch.jac_inv[ap][a]);
        return d;
    };
    DiffOp acc(ch.from, Rational(0));
    ScalarExpr divG = ScalarExpr::zero(ch.from);
    for (std::size_t ap = 0; ap < n; ++ap) {
        Parity pap = ch.to->parity(static_cast<int>(ap));
        DiffOp da = dhat_op(ap);
        for (std::size_t bp = 0; bp < n; ++bp)
            acc = acc + compose(DiffOp::multiplication(Rational(0), half * data.S[ap][bp]),
                                compose(dhat_op(bp), da));
        ScalarExpr divS = ScalarExpr::zero(ch.from);
        for (std::size_t bp = 0; bp < n; ++bp) {
            ScalarExpr t = frame_derivative(ch, static_cast<int>(bp), data.S[bp][ap]);
            if (ch.to->parity(static_cast<int>(bp)) == Parity::odd && data.eps == Parity::even)
                t = -t;
            divS = divS + t;
        }
        acc = acc + compose(DiffOp::multiplication(Rational(0), half * divS), da);
        acc = acc + times_wpoly(compose(DiffOp::multiplication(Rational(0), data.gamma[ap]), da),
                                {half * (lambda - 1), Rational(1)});
        ScalarExpr t = frame_derivative(ch, static_cast<int>(ap), data.gamma[ap]);
        if (pap == Parity::odd && data.eps == Parity::even) t = -t;
        divG = divG + t;
    }
    acc.add_term({}, 1, half * divG);
    acc.add_term({}, 2, half * data.theta);
    acc.add_term({}, 1, (half * (lambda - 1)) * data.theta);
    return retag_weight(acc, lambda);
}

std::vector<ScalarExpr> extract_upper_connection(const DiffOp& L, const Rational& w0) {
    if (w0 == Rational(1, 2))
        throw error("extract_upper_connection: at w0 = 1/2 the subprincipal symbol is a "
                    "vector field and defines no upper connection");
    if (L.max_wpow() != 0)
        throw error("extract_upper_connection: expects an operator on a fixed weight slice");
    if (L.slice_order() > 2) throw error("extract_upper_connection: order exceeds 2");
    auto eps = L.parity();
    if (!eps) throw error("extract_upper_connection: operator must be parity-homogeneous");
    const ChartPtr& chart = L.chart();
    std::size_t n = chart->size();
    auto coord = [&](std::size_t i) {
        return Density::monomial(Rational(0), ScalarExpr::coordinate(chart, static_cast<int>(i)));
    };
    Rational c = Rational(1) / (Rational(2) * w0 - 1);
    std::vector<ScalarExpr> out;
    out.reserve(n);
    for (std::size_t a = 0; a < n; ++a) {
        ScalarExpr acc = Rational(2) * L.coefficient({static_cast<int>(a)}, 0);
        for (std::size_t b = 0; b < n; ++b) {
            ScalarExpr sba =
                generated_bracket(L, coord(b), coord(a)).component(L.weight());
            ScalarExpr t = differentiate(sba, static_cast<int>(b));
            if (chart->parity(static_cast<int>(b)) == Parity::odd && *eps == Parity::even)
                t = -t;
            acc = acc - t;
        }
        out.push_back(c * acc);
    }
    return out;
}

BracketData lb_pencil_from_volume(const ChartPtr& chart,
                                  const std::vector<std::vector<ScalarExpr>>& S,
                                  const ScalarExpr& A, const Rational& lambda, Parity eps) {
    if (!A.has_parity(Parity::even)) throw error("log-density must be even");
    std::size_t n = chart->size();
    BracketData out = BracketData::zero(chart, lambda, eps);
    out.S = S;
    std::vector<ScalarExpr> dA;
    for (std::size_t a = 0; a < n; ++a) dA.push_back(differentiate(A, static_cast<int>(a)));
    for (std::size_t a = 0; a < n; ++a) {
        ScalarExpr acc = ScalarExpr::zero(chart);
        for (std::size_t b = 0; b < n; ++b) acc = acc + S[a][b] * dA[b];
        out.gamma[a] = -acc;
    }
    ScalarExpr th = ScalarExpr::zero(chart);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) th = th + S[a][b] * dA[b] * dA[a];
    out.theta = th;
    out.validate();
    return out;
}

DiffOp lb_pencil_direct(const ChartPtr& chart, const std::vector<std::vector<ScalarExpr>>& S,
                        const ScalarExpr& A, const Rational& lambda, Parity eps) {
    if (lambda != 0) throw error("lb_pencil_direct: implemented for weight zero");
    if (!A.has_parity(Parity::even)) throw error("log-density must be even");
    std::size_t n = chart->size();
    Rational half(1, 2);
    std::vector<ScalarExpr> dA;
    for (std::size_t a = 0; a < n; ++a) dA.push_back(differentiate(A, static_cast<int>(a)));
    DiffOp out(chart, Rational(0));
    ScalarExpr one = ScalarExpr::constant(chart, Rational(1));
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            // rho^{w-1} d_a ( rho S^{ab} d_b ( rho^{-w} . ) ) with rho = e^A:
            // (d_a + (1 - w_hat) d_a A) o M_{S^{ab}} o (d_b - w_hat d_b A)
            DiffOp left(chart, Rational(0));
            left.add_term({static_cast<int>(a)}, 0, one);
            left.add_term({}, 0, dA[a]);
            left.add_term({}, 1, -dA[a]);
            DiffOp right(chart, Rational(0));
            right.add_term({static_cast<int>(b)}, 0, one);
            right.add_term({}, 1, -dA[b]);
            DiffOp piece =
                compose(left, compose(DiffOp::multiplication(Rational(0), S[a][b]), right));
            Rational c = half;
            if (chart->parity(static_cast<int>(a)) == Parity::odd && eps == Parity::even)
                c = -c;
            out = out + c * piece;
        }
    }
    return out;
}

BracketData pencil_from_connection(const std::vector<std::vector<ScalarExpr>>& S,
                                   const ConnectionOnVol& conn, const Rational& lambda,
                                   Parity eps) {
    const ChartPtr& chart = conn.chart;
    std::size_t n = chart->size();
    BracketData out = BracketData::zero(chart, lambda, eps);
    out.S = S;
    for (std::size_t a = 0; a < n; ++a) {
        ScalarExpr acc = ScalarExpr::zero(chart);
        for (std::size_t b = 0; b < n; ++b) acc = acc + S[a][b] * conn.gamma_lower[b];
        out.gamma[a] = acc;
    }
    ScalarExpr th = ScalarExpr::zero(chart);
    for (std::size_t a = 0; a < n; ++a) th = th + out.gamma[a] * conn.gamma_lower[a];
    out.theta = th;
    out.validate();
    return out;
}

DiffOp conjugate_by_exp(const DiffOp& op, const ScalarExpr& B) {
    if (!B.has_parity(Parity::even)) throw error("conjugate_by_exp: exponent must be even");
    const ChartPtr& chart = op.chart();
    DiffOp out(chart, Rational(0));
    for (const auto& [key, coeff] : op.terms()) {
        DiffOp piece = DiffOp::multiplication(Rational(0), coeff);
        for (int a : key.word) {
            DiffOp twisted(chart, Rational(0));
            twisted.add_term({a}, 0, ScalarExpr::constant(chart, Rational(1)));
            twisted.add_term({}, 0, differentiate(B, a));
            piece = compose(piece, twisted);
        }
        if (key.wpow > 0) {
            DiffOp wp(chart, Rational(0));
            wp.add_term({}, key.wpow, ScalarExpr::constant(chart, Rational(1)));
            piece = compose(piece, wp);
        }
        out = out + piece;
    }
    return retag_weight(out, op.weight());
}

PencilShift pencil_shift(const BracketData& data, const std::vector<ScalarExpr>& X,
                         const ScalarExpr& xi) {
    data.validate();
    const ChartPtr& chart = data.chart;
    std::size_t n = chart->size();
    if (X.size() != n) throw error("pencil_shift: wrong number of components");
    PencilShift out{data, DiffOp::zero(chart, data.weight)};
    for (std::size_t a = 0; a < n; ++a) out.shifted.gamma[a] = data.gamma[a] + X[a];
    out.shifted.theta = data.theta + xi;
    out.shifted.validate();
    Rational half(1, 2);
    Derivation B;
    B.chart = chart;
    B.coords = X;
    B.wpart = half * xi;
    B.weight = data.weight;
    DiffOp first = times_wpoly(to_diffop(B), {half * (data.weight - 1), Rational(1)});
    out.difference = first;
    Density divB = divergence(B);
    if (!divB.is_zero())
        out.difference =
            out.difference + times_wpoly(DiffOp::multiplication(divB), {Rational(0), half});
    return out;
}

OperatorDecomposition decompose_operator(const DiffOp& L, const Rational& w0,
                                         const ScalarExpr& A) {
    if (L.weight() != 0) throw error("decompose_operator: expects a weight-zero operator");
    if (L.max_wpow() != 0)
        throw error("decompose_operator: expects an operator on a fixed weight slice");
    if (L.slice_order() > 2) throw error("decompose_operator: order exceeds 2");
    auto eps = L.parity();
    if (!eps) throw error("decompose_operator: operator must be parity-homogeneous");
    const ChartPtr& chart = L.chart();
    std::size_t n = chart->size();
    auto coord = [&](std::size_t i) {
        return Density::monomial(Rational(0), ScalarExpr::coordinate(chart, static_cast<int>(i)));
    };
    std::vector<std::vector<ScalarExpr>> S(n, std::vector<ScalarExpr>(n, ScalarExpr::zero(chart)));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            S[a][b] = generated_bracket(L, coord(a), coord(b)).component(Rational(0));
    std::vector<ScalarExpr> dA;
    for (std::size_t a = 0; a < n; ++a) dA.push_back(differentiate(A, static_cast<int>(a)));
    OperatorDecomposition out;
    out.Q.reserve(n);
    Rational half(1, 2);
    for (std::size_t a = 0; a < n; ++a) {
        ScalarExpr acc = Rational(2) * L.coefficient({static_cast<int>(a)}, 0);
        for (std::size_t b = 0; b < n; ++b) {
            ScalarExpr t = differentiate(S[b][a], static_cast<int>(b));
            if (chart->parity(static_cast<int>(b)) == Parity::odd && *eps == Parity::even)
                t = -t;
            acc = acc - t;
        }
        // Gamma^a = S^{ab} Gamma_b with Gamma_b = -d_b A
        ScalarExpr gup = ScalarExpr::zero(chart);
        for (std::size_t b = 0; b < n; ++b) gup = gup - S[a][b] * dA[b];
        acc = acc - (Rational(2) * w0 - 1) * gup;
        out.Q.push_back(half * acc);
    }
    DiffOp lb = specialize(canonical_pencil(lb_pencil_from_volume(chart, S, A, Rational(0), *eps)),
                           w0);
    DiffOp lie(chart, Rational(0));
    ScalarExpr divQ = ScalarExpr::zero(chart);
    for (std::size_t a = 0; a < n; ++a) {
        lie.add_term({static_cast<int>(a)}, 0, out.Q[a]);
        ScalarExpr t = differentiate(out.Q[a], static_cast<int>(a));
        if (chart->parity(static_cast<int>(a)) == Parity::odd && *eps == Parity::even) t = -t;
        divQ = divQ + t;
    }
    lie.add_term({}, 0, w0 * divQ);
    DiffOp rest = L - lb - lie;
    for (const auto& [k, c] : rest.terms())
        if (!k.word.empty() || k.wpow != 0)
            throw internal_error("decompose_operator: zeroth-order remainder expected");
    out.f = rest.coefficient({}, 0);
    return out;
}

DiffOp recover_pencil(const DiffOp& L, const Rational& w0, const ScalarExpr& A) {
    if (w0 == 0 || w0 == 1 || w0 == Rational(1, 2))
        throw error("recover_pencil: w0 in {0, 1/2, 1} is singular, no unique pencil exists");
    auto eps = L.parity();
    if (!eps) throw error("recover_pencil: operator must be parity-homogeneous");
    OperatorDecomposition dec = decompose_operator(L, w0, A);
    const ChartPtr& chart = L.chart();
    std::size_t n = chart->size();
    std::vector<std::vector<ScalarExpr>> S(n, std::vector<ScalarExpr>(n, ScalarExpr::zero(chart)));
    auto coord = [&](std::size_t i) {
        return Density::monomial(Rational(0), ScalarExpr::coordinate(chart, static_cast<int>(i)));
    };
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            S[a][b] = generated_bracket(L, coord(a), coord(b)).component(Rational(0));
    DiffOp out = canonical_pencil(lb_pencil_from_volume(chart, S, A, Rational(0), *eps));
    Rational c1 = Rational(1) / (Rational(2) * w0 - 1);
    Rational c2 = Rational(1) / (w0 * (w0 - 1));
    ScalarExpr divQ = ScalarExpr::zero(chart);
    for (std::size_t a = 0; a < n; ++a) {
        out.add_term({static_cast<int>(a)}, 1, (Rational(2) * c1) * dec.Q[a]);
        out.add_term({static_cast<int>(a)}, 0, (-c1) * dec.Q[a]);
        ScalarExpr t = differentiate(dec.Q[a], static_cast<int>(a));
        if (chart->parity(static_cast<int>(a)) == Parity::odd && *eps == Parity::even) t = -t;
        divQ = divQ + t;
    }
    out.add_term({}, 2, (Rational(2) * c1) * divQ);
    out.add_term({}, 1, (-c1) * divQ);
    out.add_term({}, 2, c2 * dec.f);
    out.add_term({}, 1, (-c2) * dec.f);
    return out;
}

PhaseFn flatness_check(const ChartPtr& chart, const std::vector<std::vector<ScalarExpr>>& S,
                       const std::vector<ScalarExpr>& gamma_upper, Parity eps) {
    if (eps != Parity::odd)
        throw error("flatness_check: curvature needs an odd bracket; for an even S the "
                    "commutator of covectors is not defined");
    BracketData d = BracketData::zero(chart, Rational(0), eps);
    d.S = S;
    d.gamma = gamma_upper;
    d.validate();
    return canonical_bracket(hamiltonian_S(d), hamiltonian_gamma(d));
}

ScalarExpr bv_cocycle(const std::vector<std::vector<ScalarExpr>>& S, const ConnectionOnVol& g0,
                      const ConnectionOnVol& g1) {
    const ChartPtr& chart = g0.chart;
    for (std::size_t i = 0; i < chart->size(); ++i)
        if (chart->parity(static_cast<int>(i)) == Parity::odd)
            throw error("bv_cocycle: implemented for purely even charts");
    std::size_t n = chart->size();
    auto raise = [&](const std::vector<ScalarExpr>& low) {
        std::vector<ScalarExpr> up(n, ScalarExpr::zero(chart));
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) up[a] = up[a] + S[a][b] * low[b];
        return up;
    };
    auto up0 = raise(g0.gamma_lower);
    auto up1 = raise(g1.gamma_lower);
    ScalarExpr out = ScalarExpr::zero(chart);
    Rational half(1, 2);
    for (std::size_t a = 0; a < n; ++a) {
        out = out + differentiate(up1[a] - up0[a], static_cast<int>(a));
        out = out - half * ((g0.gamma_lower[a] + g1.gamma_lower[a]) * (up1[a] - up0[a]));
    }
    return out;
}

namespace {

// Rational antiderivative in one variable; null when a log term would be
// needed or the denominator shape is unsupported.
std::optional<ScalarExpr> antidifferentiate(const ScalarExpr& g, int var) {
    const ChartPtr& chart = g.chart();
    if (chart->parity(var) == Parity::odd) {
        // the integrand must not contain the odd variable itself
        for (const auto& [w, c] : g.terms())
            if (std::find(w.begin(), w.end(), var) != w.end()) return std::nullopt;
        return ScalarExpr::coordinate(chart, var) * g;
    }
    ScalarExpr out = ScalarExpr::zero(chart);
    for (const auto& [word, rf] : g.terms()) {
        // denominator must be var^m * (var-free part)
        int m = -1;
        for (const auto& [e, c] : rf.den.terms) {
            int k = e[static_cast<std::size_t>(var)];
            if (m == -1) m = k;
            else if (m != k) return std::nullopt;
        }
        Poly denfree;
        for (const auto& [e, c] : rf.den.terms) {
            Expo e2 = e;
            e2[static_cast<std::size_t>(var)] = 0;
            denfree.terms[e2] = c;
        }
        RatFn acc = ratfn_const(chart->size(), Rational(0));
        for (const auto& [e, c] : rf.num.terms) {
            int k = e[static_cast<std::size_t>(var)] - m;
            if (k == -1) return std::nullopt; // log term
            Expo e2 = e;
            e2[static_cast<std::size_t>(var)] = std::max(0, k + 1);
            Poly num;
            num.terms[e2] = c / Rational(k + 1);
            RatFn piece = ratfn_make(num, denfree);
            if (k + 1 < 0) {
                Poly varpow;
                Expo ev(chart->size(), 0);
                ev[static_cast<std::size_t>(var)] = -(k + 1);
                varpow.terms[ev] = Rational(1);
                piece = ratfn_make(piece.num, poly_mul(piece.den, varpow));
            }
            acc = ratfn_add(acc, piece);
        }
        ScalarExpr term = ScalarExpr::from_ratfn(chart, acc);
        for (int gidx : word) term = term * ScalarExpr::coordinate(chart, gidx);
        out = out + term;
    }
    return out;
}

} // namespace

ActionCheck existence_of_action_check(const BracketData& data) {
    if (data.eps != Parity::odd)
        throw error("existence_of_action_check: the bracket must be odd");
    if (data.weight != 0)
        throw error("existence_of_action_check: implemented at weight zero");
    data.validate();
    const ChartPtr& chart = data.chart;
    std::size_t n = chart->size();
    std::vector<std::vector<ScalarExpr>> omega;
    try {
        omega = matrix_inverse(data.S, chart);
    } catch (const error&) {
        throw error("existence_of_action_check: S is degenerate");
    }
    auto residuals = check_jacobi_equations(data);
    if (!residuals[0].is_zero())
        throw error("existence_of_action_check: (S,S) != 0, the bracket of functions is "
                    "not a Poisson bracket");
    if (!residuals[1].is_zero())
        throw error("existence_of_action_check: the upper connection is not flat");
    std::vector<ScalarExpr> gamma_low(n, ScalarExpr::zero(chart));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            gamma_low[a] = gamma_low[a] + omega[a][b] * data.gamma[b];
    ActionCheck out;
    ScalarExpr A = ScalarExpr::zero(chart);
    for (std::size_t a = 0; a < n; ++a) {
        ScalarExpr target = -gamma_low[a] - differentiate(A, static_cast<int>(a));
        auto piece = antidifferentiate(target, static_cast<int>(a));
        if (!piece) {
            out.status = ActionCheck::Status::twisted;
            out.detail = "gamma_" + chart->name(static_cast<int>(a)) +
                         " has no rational antiderivative: closed but not exact in this chart";
            return out;
        }
        A = A + *piece;
    }
    for (std::size_t a = 0; a < n; ++a) {
        if (!equals(differentiate(A, static_cast<int>(a)), -gamma_low[a])) {
            out.status = ActionCheck::Status::twisted;
            out.detail = "gradient reconstruction is inconsistent";
            return out;
        }
    }
    ScalarExpr gg = ScalarExpr::zero(chart);
    for (std::size_t a = 0; a < n; ++a) gg = gg + data.gamma[a] * gamma_low[a];
    if (!equals(data.theta, gg)) {
        out.status = ActionCheck::Status::theta_mismatch;
        out.action = A;
        out.detail = "theta differs from gamma^a gamma_a";
        return out;
    }
    out.status = ActionCheck::Status::ok;
    out.action = A;
    return out;
}

Density bv_master_check(const BracketData& data, const ScalarExpr& A) {
    if (data.eps != Parity::odd) throw error("bv_master_check: the bracket must be odd");
    BracketData lb = lb_pencil_from_volume(data.chart, data.S, A, data.weight, data.eps);
    if (!(data == lb))
        throw error("bv_master_check: data does not come from the volume form e^A");
    DiffOp half_op = specialize(canonical_pencil(data), Rational(1, 2));
    DiffOp twisted = conjugate_by_exp(half_op, Rational(1, 2) * A);
    return apply(twisted, Density::monomial(Rational(1, 2),
                                            ScalarExpr::constant(data.chart, Rational(1))));
}

SturmReport sturm_liouville_demo(const ScalarExpr& s, const ScalarExpr& gamma,
                                 const ScalarExpr& theta, const CoordChange& ch) {
    const ChartPtr& chart = ch.from;
    if (chart->size() != 1 || chart->parity(0) != Parity::even)
        throw error("sturm_liouville_demo: needs a single even coordinate");
    if (!body_invertible(s)) throw error("sturm_liouville_demo: s must be invertible");
    BracketData data = BracketData::zero(chart, Rational(2), Parity::even);
    data.S[0][0] = s;
    data.gamma[0] = gamma;
    data.theta = theta;
    data.validate();
    Rational minus_half(-1, 2);
    DiffOp op2 = Rational(2) * canonical_pencil(data);
    SturmReport rep;
    rep.potential = -specialize(op2, minus_half).coefficient({}, 0);
    BracketData moved = transform_bracket_data(data, ch);
    DiffOp op2_frame = Rational(2) * canonical_pencil_in_frame(moved, ch);
    rep.potential_new = -specialize(op2_frame, minus_half).coefficient({}, 0);
    DiffOp op2_conj = transform_operator(op2, ch);
    rep.potential_oracle = -specialize(op2_conj, minus_half).coefficient({}, 0);
    ScalarExpr y = ch.forward[0];
    ScalarExpr yx = differentiate(y, 0);
    ScalarExpr yxx = differentiate(yx, 0);
    ScalarExpr yxxx = differentiate(yxx, 0);
    ScalarExpr yx_inv = inverse(yx);
    rep.schwarzian = yxxx * yx_inv - Rational(3, 2) * power(yxx * yx_inv, 2);
    ScalarExpr factor = power(yx_inv, 2);
    ScalarExpr plus = factor * (rep.potential + Rational(1, 2) * rep.schwarzian);
    ScalarExpr minus = factor * (rep.potential - Rational(1, 2) * rep.schwarzian);
    if (equals(rep.potential_new, plus)) rep.sign_convention = +1;
    else if (equals(rep.potential_new, minus)) rep.sign_convention = -1;
    rep.tensorial = rep.schwarzian.is_zero() && equals(rep.potential_new, factor * rep.potential);
    return rep;
}

} // namespace densalg
