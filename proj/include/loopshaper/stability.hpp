#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "loopshaper/polynomial.hpp"
#include "loopshaper/rational.hpp"

namespace loopshaper {

// ============================================================================
// Routh-Hurwitz stability test
// ============================================================================
// True iff every root of p lies strictly in the open left half plane.
// A zero in the first column with a nonzero remainder row is handled by the
// epsilon substitution; an all-zero row implies roots symmetric about the
// origin and therefore a closed-RHP root, so the test returns false directly.
inline bool is_hurwitz(const Polynomial& p) {
    if (p.is_zero()) throw DegenerateInput("is_hurwitz: zero polynomial");
    const int n = p.degree();
    if (n < 1) throw DegenerateInput("is_hurwitz: degree must be >= 1");

    // Normalize so the leading coefficient is +1.
    std::vector<double> a(p.coeffs());
    const double lead = a.back();
    for (double& c : a) c /= lead;

    // All coefficients of a Hurwitz polynomial are positive; a zero or
    // negative coefficient settles the question without the table.
    for (double c : a) {
        if (c < 0.0) return false;
        if (c == 0.0) return false;
    }
    if (n <= 1) return true;

    const double scale = *std::max_element(a.begin(), a.end());
    const double eps = 1e-30 * scale;

    // rows[0] = s^n coefficients, rows[1] = s^(n-1), descending powers.
    std::size_t width = static_cast<std::size_t>(n) / 2 + 1;
    std::vector<double> r0(width, 0.0), r1(width, 0.0);
    for (int k = n; k >= 0; k -= 2) r0[static_cast<std::size_t>((n - k) / 2)] = a[static_cast<std::size_t>(k)];
    for (int k = n - 1; k >= 0; k -= 2) r1[static_cast<std::size_t>((n - 1 - k) / 2)] = a[static_cast<std::size_t>(k)];

    std::vector<double> first_col;
    first_col.push_back(r0[0]);

    for (int row = 1; row < n; ++row) {
        bool all_zero = std::all_of(r1.begin(), r1.end(), [](double x) { return x == 0.0; });
        if (all_zero) return false;  // symmetric root pattern, not strictly LHP
        if (r1[0] == 0.0) r1[0] = eps;
        first_col.push_back(r1[0]);

        std::vector<double> r2(width, 0.0);
        for (std::size_t j = 0; j + 1 < width; ++j) r2[j] = (r1[0] * r0[j + 1] - r0[0] * r1[j + 1]) / r1[0];
        r0 = r1;
        r1 = r2;
    }
    first_col.push_back(r1[0] == 0.0 ? eps : r1[0]);

    for (double v : first_col)
        if (!(v > 0.0)) return false;
    return true;
}

// ============================================================================
// Polynomial roots: balanced companion matrix + one Newton polish
// ============================================================================
inline std::vector<Complex> roots(const Polynomial& p) {
    if (p.is_zero()) throw DegenerateInput("roots: zero polynomial");
    const int n = p.degree();
    if (n < 1) throw DegenerateInput("roots: degree must be >= 1");

    const std::vector<double>& a = p.coeffs();
    const double an = a.back();

    // Scale the variable s = alpha*z so the companion matrix of q(z) is
    // balanced; alpha is the Cauchy-style root radius bound.
    double alpha = 0.0;
    for (int k = 0; k < n; ++k) {
        const double ratio = std::abs(a[static_cast<std::size_t>(k)] / an);
        if (ratio > 0.0) alpha = std::max(alpha, std::pow(ratio, 1.0 / static_cast<double>(n - k)));
    }
    if (alpha == 0.0) alpha = 1.0;

    // Monic coefficients of q(z) = p(alpha*z) / (an*alpha^n).
    std::vector<double> b(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k)
        b[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(k)] / an * std::pow(alpha, static_cast<double>(k - n));

    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -b[static_cast<std::size_t>(i)];

    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
    std::vector<Complex> out(static_cast<std::size_t>(n));
    const Polynomial dp = p.derivative();
    for (int i = 0; i < n; ++i) {
        Complex r = alpha * es.eigenvalues()(i);
        const Complex d = dp.eval(r);
        if (std::abs(d) > 0.0) {
            const Complex step = p.eval(r) / d;
            if (std::isfinite(step.real()) && std::isfinite(step.imag())) r -= step;
        }
        out[static_cast<std::size_t>(i)] = r;
    }
    std::sort(out.begin(), out.end(), [](const Complex& x, const Complex& y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    });
    return out;
}

// Relative residual |p(r)| / sum_k |a_k||r|^k, the scale-free accuracy measure
// used by the root-quality contracts.
inline double root_residual(const Polynomial& p, Complex r) {
    double scale = 0.0, rk = 1.0;
    const double ar = std::abs(r);
    for (double c : p.coeffs()) {
        scale += std::abs(c) * rk;
        rk *= ar;
    }
    if (scale == 0.0) scale = 1.0;
    return std::abs(p.eval(r)) / scale;
}

// ============================================================================
// Minimum-phase reflection
// ============================================================================
// Replaces every numerator root with positive real part by its mirror image
// and fixes the gain sign so |result(jw)| == |tf(jw)| for all w (the all-pass
// factor is removed).
inline RationalTF minimum_phase_reflect(const RationalTF& tf) {
    if (tf.num.is_zero() || tf.num.degree() == 0) return tf;
    std::vector<Complex> zs = roots(tf.num);
    bool any = false;
    for (Complex& z : zs) {
        if (z.real() > 0.0) {
            z = Complex(-z.real(), z.imag());
            any = true;
        }
    }
    if (!any) return tf;

    // Rebuild the numerator from reflected roots, pairing conjugates into
    // real quadratics.
    Polynomial num = Polynomial{tf.num.leading()};
    std::vector<bool> used(zs.size(), false);
    constexpr double kPairTol = 1e-8;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        if (used[i]) continue;
        const Complex z = zs[i];
        if (std::abs(z.imag()) <= kPairTol * (1.0 + std::abs(z))) {
            num = num * Polynomial{-z.real(), 1.0};
        } else {
            std::size_t j = i + 1;
            for (; j < zs.size(); ++j)
                if (!used[j] && std::abs(zs[j] - std::conj(z)) <= 1e-6 * (1.0 + std::abs(z))) break;
            if (j < zs.size()) used[j] = true;
            num = num * Polynomial{std::norm(z), -2.0 * z.real(), 1.0};
        }
        used[i] = true;
    }

    // The reflected polynomial has the same |.| on the j-axis up to sign of
    // the leading coefficient convention; align the sign with the DC (or
    // lowest nonzero) coefficient of the magnitude-equivalent original.
    RationalTF out{num, tf.den};
    const double w_probe = 1.0;
    const Complex orig_n = tf.num.eval(Complex(0.0, w_probe));
    const Complex refl_n = out.num.eval(Complex(0.0, w_probe));
    if (std::abs(refl_n) > 0.0) {
        const double ratio = std::abs(orig_n) / std::abs(refl_n);
        out.num = ratio * out.num;
        // Match sign at s=0 so the DC gain keeps the original sign.
        const double o0 = tf.num.eval(0.0), r0 = out.num.eval(0.0);
        if (o0 * r0 < 0.0) out.num = -1.0 * out.num;
    }
    return out;
}

}  // namespace loopshaper
