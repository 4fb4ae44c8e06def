#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "loopshaper/errors.hpp"

namespace loopshaper {

using Complex = std::complex<double>;

// Real polynomial in ascending powers of s: coeffs[k] multiplies s^k.
// Trailing zero coefficients are trimmed on construction so that the
// highest-index coefficient is nonzero unless the polynomial is zero.
class Polynomial {
public:
    Polynomial() : coeffs_{0.0} {}
    Polynomial(std::initializer_list<double> c) : coeffs_(c) { trim(); }
    explicit Polynomial(std::vector<double> c) : coeffs_(std::move(c)) { trim(); }

    static Polynomial zero() { return Polynomial(); }
    static Polynomial one() { return Polynomial{1.0}; }
    // s^k
    static Polynomial monomial(int k, double coeff = 1.0) {
        std::vector<double> c(static_cast<std::size_t>(k) + 1, 0.0);
        c.back() = coeff;
        return Polynomial(std::move(c));
    }

    const std::vector<double>& coeffs() const { return coeffs_; }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }

    // Coefficient of s^k; zero beyond the stored degree.
    double operator[](int k) const {
        return (k >= 0 && k < static_cast<int>(coeffs_.size())) ? coeffs_[static_cast<std::size_t>(k)] : 0.0;
    }

    double leading() const { return coeffs_.back(); }

    Complex eval(Complex s) const {
        Complex acc(0.0, 0.0);
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
        return acc;
    }
    double eval(double x) const {
        double acc = 0.0;
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    Polynomial derivative() const {
        if (degree() == 0) return zero();
        std::vector<double> d(coeffs_.size() - 1);
        for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = coeffs_[k] * static_cast<double>(k);
        return Polynomial(std::move(d));
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = a[static_cast<int>(k)] + b[static_cast<int>(k)];
        return Polynomial(std::move(c));
    }
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
        std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = a[static_cast<int>(k)] - b[static_cast<int>(k)];
        return Polynomial(std::move(c));
    }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.is_zero() || b.is_zero()) return zero();
        std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
        return Polynomial(std::move(c));
    }
    friend Polynomial operator*(double t, const Polynomial& a) {
        std::vector<double> c = a.coeffs_;
        for (double& x : c) x *= t;
        return Polynomial(std::move(c));
    }
    friend Polynomial operator*(const Polynomial& a, double t) { return t * a; }
    Polynomial operator-() const { return -1.0 * (*this); }

    // Multiply by s^k (k >= 0).
    Polynomial shifted(int k) const {
        if (is_zero()) return zero();
        std::vector<double> c(coeffs_.size() + static_cast<std::size_t>(k), 0.0);
        std::copy(coeffs_.begin(), coeffs_.end(), c.begin() + k);
        return Polynomial(std::move(c));
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (double c : coeffs_) m = std::max(m, std::abs(c));
        return m;
    }

    bool all_finite() const {
        return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return std::isfinite(c); });
    }

private:
    void trim() {
        if (coeffs_.empty()) coeffs_ = {0.0};
        while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
    }

    std::vector<double> coeffs_;
};

}  // namespace loopshaper
