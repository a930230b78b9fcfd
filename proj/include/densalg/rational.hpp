#pragma once

#include <gmpxx.h>
#include <string>
#include <stdexcept>

namespace densalg {

// Exact rational coefficients everywhere; no floating point in the engine.
using Rational = mpq_class;

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Signals an internal consistency violation (two code paths disagreeing),
// as opposed to bad user input.
struct internal_error : std::logic_error {
    using std::logic_error::logic_error;
};

inline Rational rat(long num, long den = 1) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

inline Rational rat_pow(const Rational& base, long k) {
    if (k == 0) return Rational(1);
    if (k < 0) {
        if (base == 0) throw error("rational: division by zero in negative power");
        return Rational(1) / rat_pow(base, -k);
    }
    Rational out(1);
    for (long i = 0; i < k; ++i) out *= base;
    return out;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline bool is_integer(const Rational& q) { return q.get_den() == 1; }

} // namespace densalg
