#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <json.hpp>

#include "loopshaper/errors.hpp"

namespace loopshaper {

// ============================================================================
// Conic program over rotated second-order cones
// ============================================================================
// Each block encodes the exact cone reduction of a 2x2 or 3x3 Hermitian LMI
// with scalar corners:
//   [[a, b*], [b, g*I]] >= 0   <=>   a >= 0, g >= 0, sum_k |b_k|^2 <= a*g.

struct AffineScalar {
    Eigen::VectorXd coeff;  // one entry per decision variable
    double constant = 0.0;

    AffineScalar() = default;
    explicit AffineScalar(int nvars) : coeff(Eigen::VectorXd::Zero(nvars)) {}

    double eval(const Eigen::VectorXd& x) const { return coeff.dot(x) + constant; }
    double max_abs() const { return std::max(coeff.size() ? coeff.cwiseAbs().maxCoeff() : 0.0, std::abs(constant)); }
};

struct AffineComplex {
    AffineScalar re, im;

    AffineComplex() = default;
    explicit AffineComplex(int nvars) : re(nvars), im(nvars) {}

    std::complex<double> eval(const Eigen::VectorXd& x) const { return {re.eval(x), im.eval(x)}; }
    double max_abs() const { return std::max(re.max_abs(), im.max_abs()); }
};

struct ConeBlock {
    AffineScalar a;
    AffineScalar g;
    std::vector<AffineComplex> b;
};

struct ConicProgram {
    int nvars = 0;
    Eigen::VectorXd objective;
    std::vector<ConeBlock> cones;
    // Optional per-variable box bounds (+-inf when absent). Equal bounds fix
    // a variable, which the solver eliminates before the interior-point run.
    Eigen::VectorXd lower, upper;

    explicit ConicProgram(int n = 0)
        : nvars(n),
          objective(Eigen::VectorXd::Zero(n)),
          lower(Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity())),
          upper(Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity())) {}
};

// Feasibility test form of the Schur-reduced Hermitian block; this is the
// reference the eigenvalue oracle is checked against.
inline bool reduce_hermitian_block(double a, const std::vector<std::complex<double>>& b, double gamma,
                                   double tol = 0.0) {
    if (!(a >= -tol) || !(gamma >= -tol)) return false;
    double bb = 0.0;
    for (const auto& bk : b) bb += std::norm(bk);
    const double scale = std::max({1.0, std::abs(a * gamma), bb});
    return bb <= a * gamma + tol * scale;
}

// Worst normalized cone violation over all blocks:
// max(0, sum|b|^2 - a*g, -a, -g) / block scale.
inline double residuals(const ConicProgram& p, const Eigen::VectorXd& x) {
    double worst = 0.0;
    for (const ConeBlock& blk : p.cones) {
        const double a = blk.a.eval(x);
        const double g = blk.g.eval(x);
        double bb = 0.0;
        for (const auto& bk : blk.b) bb += std::norm(bk.eval(x));
        const double scale = std::max({1.0, std::abs(a * g), bb});
        const double viol = std::max({0.0, bb - a * g, -a, -g});
        worst = std::max(worst, viol / scale);
    }
    return worst;
}

inline nlohmann::json to_json(const AffineScalar& a) {
    return nlohmann::json{{"coeff", std::vector<double>(a.coeff.data(), a.coeff.data() + a.coeff.size())},
                          {"constant", a.constant}};
}

inline nlohmann::json to_json(const ConicProgram& p) {
    nlohmann::json jc = nlohmann::json::array();
    for (const ConeBlock& blk : p.cones) {
        nlohmann::json jb = nlohmann::json::array();
        for (const auto& bk : blk.b) jb.push_back({{"re", to_json(bk.re)}, {"im", to_json(bk.im)}});
        jc.push_back({{"a", to_json(blk.a)}, {"g", to_json(blk.g)}, {"b", jb}});
    }
    std::vector<double> lo(p.lower.data(), p.lower.data() + p.lower.size());
    std::vector<double> hi(p.upper.data(), p.upper.data() + p.upper.size());
    for (double& v : lo)
        if (!std::isfinite(v)) v = -1e308;
    for (double& v : hi)
        if (!std::isfinite(v)) v = 1e308;
    return nlohmann::json{{"nvars", p.nvars},
                          {"objective", std::vector<double>(p.objective.data(), p.objective.data() + p.objective.size())},
                          {"cones", jc},
                          {"lower", lo},
                          {"upper", hi}};
}

}  // namespace loopshaper
