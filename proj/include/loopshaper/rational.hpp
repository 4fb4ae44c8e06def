#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "loopshaper/errors.hpp"
#include "loopshaper/polynomial.hpp"

namespace loopshaper {

// Real-coefficient rational function of the complex frequency s.
// No pole-zero cancellation is ever performed: compositions keep the
// full un-cancelled numerator/denominator so that stability can be
// judged on the complete characteristic polynomial.
struct RationalTF {
    Polynomial num;
    Polynomial den{Polynomial::one()};

    RationalTF() = default;
    RationalTF(Polynomial n, Polynomial d) : num(std::move(n)), den(std::move(d)) {
        if (den.is_zero()) throw DegenerateResult("RationalTF: denominator is identically zero");
    }

    static RationalTF constant(double k) { return {Polynomial{k}, Polynomial::one()}; }
    static RationalTF zero() { return {Polynomial::zero(), Polynomial::one()}; }

    bool is_zero() const { return num.is_zero(); }
    bool proper() const { return num.is_zero() || num.degree() <= den.degree(); }
    bool strictly_proper() const { return num.is_zero() || num.degree() < den.degree(); }
    int relative_degree() const { return den.degree() - num.degree(); }

    Complex eval(Complex s) const {
        const Complex d = den.eval(s);
        if (std::abs(d) < kDenFloor) throw PoleOnGrid("RationalTF: |den(s)| below numerical floor");
        return num.eval(s) / d;
    }
    // Frequency response at s = j*omega.
    Complex eval_jw(double omega) const { return eval(Complex(0.0, omega)); }

    RationalTF inverse() const {
        if (num.is_zero()) throw DegenerateResult("RationalTF: inverse of zero");
        return {den, num};
    }

    static constexpr double kDenFloor = 1e-300;
};

enum class CombineMode { kSeries, kParallel, kNegativeFeedback };

inline RationalTF series(const RationalTF& a, const RationalTF& b) {
    return {a.num * b.num, a.den * b.den};
}

inline RationalTF parallel(const RationalTF& a, const RationalTF& b) {
    return {a.num * b.den + b.num * a.den, a.den * b.den};
}

// a / (1 + a*b); zero numerator short-circuits so that K = 0 yields 0.
inline RationalTF negative_feedback(const RationalTF& a, const RationalTF& b) {
    Polynomial den = a.den * b.den + a.num * b.num;
    if (den.is_zero()) throw DegenerateResult("negative_feedback: closed-loop denominator is identically zero");
    return {a.num * b.den, std::move(den)};
}

inline RationalTF combine(const RationalTF& a, const RationalTF& b, CombineMode mode) {
    switch (mode) {
        case CombineMode::kSeries: return series(a, b);
        case CombineMode::kParallel: return parallel(a, b);
        case CombineMode::kNegativeFeedback: return negative_feedback(a, b);
    }
    throw Error("combine: bad mode");
}

inline RationalTF operator*(const RationalTF& a, const RationalTF& b) { return series(a, b); }
inline RationalTF operator*(double t, const RationalTF& a) { return {t * a.num, a.den}; }
inline RationalTF operator+(const RationalTF& a, const RationalTF& b) { return parallel(a, b); }
inline RationalTF operator-(const RationalTF& a, const RationalTF& b) { return parallel(a, -1.0 * b); }

}  // namespace loopshaper
