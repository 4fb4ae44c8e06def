#pragma once

#include <Eigen/Dense>
#include <complex>

#include "loopshaper/polynomial.hpp"
#include "loopshaper/rational.hpp"

namespace loopshaper {

// SISO state-space realization (controllable canonical form).
struct StateSpace {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double D = 0.0;

    int order() const { return static_cast<int>(A.rows()); }

    Complex eval_jw(double omega) const {
        const int n = order();
        if (n == 0) return Complex(D, 0.0);
        Eigen::MatrixXcd M = Complex(0.0, omega) * Eigen::MatrixXcd::Identity(n, n) - A.cast<Complex>();
        Eigen::VectorXcd x = M.partialPivLu().solve(B.cast<Complex>());
        return (C.cast<Complex>() * x)(0) + D;
    }
};

inline StateSpace realize(const RationalTF& tf) {
    if (!tf.proper()) throw ImproperTransferFunction("realize: transfer function must be proper");
    const int n = tf.den.degree();
    const double dn = tf.den.leading();

    StateSpace ss;
    if (n == 0) {
        ss.A.resize(0, 0);
        ss.B.resize(0);
        ss.C.resize(0);
        ss.D = tf.num[0] / dn;
        return ss;
    }

    // Monic denominator; strictly proper remainder after pulling out D.
    std::vector<double> d(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) d[static_cast<std::size_t>(k)] = tf.den[k] / dn;
    double D = 0.0;
    std::vector<double> r(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) r[static_cast<std::size_t>(k)] = tf.num[k] / dn;
    if (tf.num.degree() == n) {
        D = tf.num[n] / dn;
        for (int k = 0; k < n; ++k) r[static_cast<std::size_t>(k)] -= D * d[static_cast<std::size_t>(k)];
    }

    ss.A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) ss.A(i, i + 1) = 1.0;
    for (int j = 0; j < n; ++j) ss.A(n - 1, j) = -d[static_cast<std::size_t>(j)];
    ss.B = Eigen::VectorXd::Zero(n);
    ss.B(n - 1) = 1.0;
    ss.C = Eigen::RowVectorXd::Zero(n);
    for (int j = 0; j < n; ++j) ss.C(j) = r[static_cast<std::size_t>(j)];
    ss.D = D;
    return ss;
}

}  // namespace loopshaper
