#pragma once

#include "densalg/density.hpp"

namespace densalg {

// Chart of T*M: base coordinates followed by their conjugate momenta
// p_<name>, the momentum of an odd coordinate being odd.
ChartPtr phase_chart(const ChartPtr& base);

struct PhaseKey {
    Rational tpow;
    int ptpow = 0;
    bool operator<(const PhaseKey& o) const {
        if (tpow != o.tpow) return tpow < o.tpow;
        return ptpow < o.ptpow;
    }
    bool operator==(const PhaseKey& o) const = default;
};

// Function on T*\hat M: polynomial in the momenta p_a and p_t with
// ScalarExpr coefficients, times powers of t.
class PhaseFn {
public:
    PhaseFn() = default;
    PhaseFn(ChartPtr base, ChartPtr ext) : base_(std::move(base)), ext_(std::move(ext)) {}

    static PhaseFn zero(const ChartPtr& base);
    static PhaseFn constant(const ChartPtr& base, const Rational& c);
    // Embeds a base-chart scalar as a function on T*M.
    static PhaseFn from_scalar(const ChartPtr& base, const ScalarExpr& f);
    static PhaseFn coordinate(const ChartPtr& base, int i);
    static PhaseFn momentum(const ChartPtr& base, int i);
    static PhaseFn t_power(const ChartPtr& base, const Rational& k);
    static PhaseFn pt(const ChartPtr& base);

    const ChartPtr& base_chart() const { return base_; }
    const ChartPtr& ext_chart() const { return ext_; }
    const std::map<PhaseKey, ScalarExpr>& terms() const { return terms_; }

    void add_term(const PhaseKey& k, const ScalarExpr& c);
    ScalarExpr coefficient(const Rational& tpow, int ptpow) const;

    bool is_zero() const { return terms_.empty(); }
    std::optional<Parity> parity() const;
    PhaseFn parity_part(Parity p) const;

    std::string str() const;

    bool operator==(const PhaseFn& o) const { return equals(*this, o); }

    friend PhaseFn operator+(const PhaseFn& a, const PhaseFn& b);
    friend PhaseFn operator-(const PhaseFn& a, const PhaseFn& b);
    friend PhaseFn operator-(const PhaseFn& a);
    friend PhaseFn operator*(const PhaseFn& a, const PhaseFn& b);
    friend PhaseFn operator*(const Rational& c, const PhaseFn& a);
    friend bool equals(const PhaseFn& a, const PhaseFn& b);

private:
    ChartPtr base_; // M
    ChartPtr ext_;  // x's and p's
    std::map<PhaseKey, ScalarExpr> terms_;
};

// Graded canonical Poisson bracket on T*\hat M, normalized so that
// (p_a, x^b) = delta_a^b and (p_t, t) = 1, and so that ((S, f), g)
// reproduces S^{ab} d_b f d_a g (-1)^{a f} for S = 1/2 S^{ab} p_b p_a.
PhaseFn canonical_bracket(const PhaseFn& F, const PhaseFn& G);

PhaseFn apply_D(const PhaseFn& S, const PhaseFn& F);

} // namespace densalg
