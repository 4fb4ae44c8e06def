#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "loopshaper/conic.hpp"
#include "loopshaper/errors.hpp"

namespace loopshaper {

// ============================================================================
// Primal-dual interior-point solver for second-order cone programs
// ============================================================================
// Standard form:  min c'x  s.t.  s = h - G x,  s in K = R+^l x Q^d1 x ... ,
// solved in the homogeneous self-dual embedding with Nesterov-Todd scaling
// and Mehrotra predictor-corrector steps. Problems here are tiny in the
// variable dimension (<= ~10) and moderate in rows, so each Newton system
// is reduced to a dense n-by-n normal equation.

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };

struct Solution {
    Eigen::VectorXd x;
    double objective_value = 0.0;
    SolveStatus status = SolveStatus::NumericalFailure;
    double max_cone_residual = 0.0;
    int iterations = 0;
    std::string message;
};

namespace socp_detail {

// The normal-equations reduction squares the cone conditioning (~1/mu near
// convergence), which exhausts double precision around 1e-7 relative
// accuracy. The interior-point core therefore runs in extended precision.
using Real = long double;
using RVec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using RMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

struct ConeLayout {
    int lin = 0;                // leading rows in the nonnegative orthant
    std::vector<int> soc_dims;  // then one SOC per entry
    int rows() const {
        int m = lin;
        for (int d : soc_dims) m += d;
        return m;
    }
    int degree() const { return lin + static_cast<int>(soc_dims.size()); }
};

// Nesterov-Todd scaling data per SOC plus diagonal scalings for the
// nonnegative orthant.
struct Scalings {
    RVec lin_w2;  // s_i / z_i
    struct Soc {
        Real eta = 1.0;  // W = eta * Wbar
        RVec wbar;
    };
    std::vector<Soc> socs;
};

class Cone {
public:
    explicit Cone(ConeLayout lay) : lay_(std::move(lay)) {}

    int rows() const { return lay_.rows(); }
    int degree() const { return lay_.degree(); }

    RVec identity() const {
        RVec e = RVec::Zero(rows());
        e.head(lay_.lin).setOnes();
        int at = lay_.lin;
        for (int d : lay_.soc_dims) {
            e(at) = 1.0;
            at += d;
        }
        return e;
    }

    // Largest violation of interior membership; negative means inside with
    // that margin.
    Real margin(const RVec& v) const {
        Real m = -std::numeric_limits<Real>::infinity();
        for (int i = 0; i < lay_.lin; ++i) m = std::max(m, -v(i));
        int at = lay_.lin;
        for (int d : lay_.soc_dims) {
            m = std::max(m, v.segment(at + 1, d - 1).norm() - v(at));
            at += d;
        }
        return m;
    }

    bool update_scalings(const RVec& s, const RVec& z, Scalings& W, RVec& lambda) const {
        W.lin_w2.resize(lay_.lin);
        for (int i = 0; i < lay_.lin; ++i) {
            if (!(s(i) > 0.0L) || !(z(i) > 0.0L)) return false;
            W.lin_w2(i) = s(i) / z(i);
            lambda(i) = std::sqrt(s(i) * z(i));
        }
        W.socs.resize(lay_.soc_dims.size());
        int at = lay_.lin;
        for (std::size_t k = 0; k < lay_.soc_dims.size(); ++k) {
            const int d = lay_.soc_dims[k];
            const auto sk = s.segment(at, d);
            const auto zk = z.segment(at, d);
            const Real sres = sk(0) * sk(0) - sk.tail(d - 1).squaredNorm();
            const Real zres = zk(0) * zk(0) - zk.tail(d - 1).squaredNorm();
            if (!(sres > 0.0L) || !(zres > 0.0L) || !(sk(0) > 0.0L) || !(zk(0) > 0.0L)) return false;
            const Real snorm = std::sqrt(sres), znorm = std::sqrt(zres);
            const RVec sb = sk / snorm, zb = zk / znorm;
            const Real gamma = std::sqrt(0.5L * (1.0L + sb.dot(zb)));
            auto& sc = W.socs[k];
            sc.eta = std::sqrt(snorm / znorm);
            sc.wbar.resize(d);
            sc.wbar(0) = (0.5L / gamma) * (sb(0) + zb(0));
            sc.wbar.tail(d - 1) = (0.5L / gamma) * (sb.tail(d - 1) - zb.tail(d - 1));
            // lambda = W z
            const Real zeta = sc.wbar.tail(d - 1).dot(zk.tail(d - 1));
            lambda(at) = sc.eta * (sc.wbar(0) * zk(0) + zeta);
            lambda.segment(at + 1, d - 1) =
                sc.eta * (zk.tail(d - 1) + (zk(0) + zeta / (1.0L + sc.wbar(0))) * sc.wbar.tail(d - 1));
            at += d;
        }
        return true;
    }

    // y = W v
    RVec apply_W(const Scalings& W, const RVec& v) const {
        RVec y(rows());
        y.head(lay_.lin) = W.lin_w2.cwiseSqrt().cwiseProduct(v.head(lay_.lin));
        int at = lay_.lin;
        for (std::size_t k = 0; k < lay_.soc_dims.size(); ++k) {
            const int d = lay_.soc_dims[k];
            const auto& sc = W.socs[k];
            const auto vk = v.segment(at, d);
            const Real zeta = sc.wbar.tail(d - 1).dot(vk.tail(d - 1));
            y(at) = sc.eta * (sc.wbar(0) * vk(0) + zeta);
            y.segment(at + 1, d - 1) =
                sc.eta * (vk.tail(d - 1) + (vk(0) + zeta / (1.0L + sc.wbar(0))) * sc.wbar.tail(d - 1));
            at += d;
        }
        return y;
    }

    // y = W^{-1} v  (J-conjugate of apply_W)
    RVec apply_Winv(const Scalings& W, const RVec& v) const {
        RVec y(rows());
        y.head(lay_.lin) = v.head(lay_.lin).cwiseQuotient(W.lin_w2.cwiseSqrt());
        int at = lay_.lin;
        for (std::size_t k = 0; k < lay_.soc_dims.size(); ++k) {
            const int d = lay_.soc_dims[k];
            const auto& sc = W.socs[k];
            const auto vk = v.segment(at, d);
            const Real zeta = sc.wbar.tail(d - 1).dot(vk.tail(d - 1));
            y(at) = (sc.wbar(0) * vk(0) - zeta) / sc.eta;
            y.segment(at + 1, d - 1) =
                (vk.tail(d - 1) + (-vk(0) + zeta / (1.0L + sc.wbar(0))) * sc.wbar.tail(d - 1)) / sc.eta;
            at += d;
        }
        return y;
    }

    // y = W^{-2} v, with W^{-2} = eta^{-2} (2 (J wbar)(J wbar)' - J).
    RVec apply_Winv2(const Scalings& W, const RVec& v) const {
        RVec y(rows());
        y.head(lay_.lin) = v.head(lay_.lin).cwiseQuotient(W.lin_w2);
        int at = lay_.lin;
        for (std::size_t k = 0; k < lay_.soc_dims.size(); ++k) {
            const int d = lay_.soc_dims[k];
            const auto& sc = W.socs[k];
            const auto vk = v.segment(at, d);
            const Real dot_jw_v = sc.wbar(0) * vk(0) - sc.wbar.tail(d - 1).dot(vk.tail(d - 1));
            const Real eta2 = sc.eta * sc.eta;
            y(at) = (2.0L * sc.wbar(0) * dot_jw_v - vk(0)) / eta2;
            y.segment(at + 1, d - 1) = (-2.0L * dot_jw_v * sc.wbar.tail(d - 1) + vk.tail(d - 1)) / eta2;
            at += d;
        }
        return y;
    }

    // Jordan product u o v.
    RVec prod(const RVec& u, const RVec& v) const {
        RVec y(rows());
        y.head(lay_.lin) = u.head(lay_.lin).cwiseProduct(v.head(lay_.lin));
        int at = lay_.lin;
        for (int d : lay_.soc_dims) {
            const auto uk = u.segment(at, d);
            const auto vk = v.segment(at, d);
            y(at) = uk.dot(vk);
            y.segment(at + 1, d - 1) = uk(0) * vk.tail(d - 1) + vk(0) * uk.tail(d - 1);
            at += d;
        }
        return y;
    }

    // Solve lambda o u = v for u.
    RVec solve_prod(const RVec& lambda, const RVec& v) const {
        RVec u(rows());
        u.head(lay_.lin) = v.head(lay_.lin).cwiseQuotient(lambda.head(lay_.lin));
        int at = lay_.lin;
        for (int d : lay_.soc_dims) {
            const auto lk = lambda.segment(at, d);
            const auto vk = v.segment(at, d);
            const Real det = lk(0) * lk(0) - lk.tail(d - 1).squaredNorm();
            const Real u0 = (lk(0) * vk(0) - lk.tail(d - 1).dot(vk.tail(d - 1))) / det;
            u(at) = u0;
            u.segment(at + 1, d - 1) = (vk.tail(d - 1) - u0 * lk.tail(d - 1)) / lk(0);
            at += d;
        }
        return u;
    }

    // Largest step t so that v + t*dv stays in the cone (capped at 1e18).
    Real max_step(const RVec& v, const RVec& dv) const {
        Real t = 1e18L;
        for (int i = 0; i < lay_.lin; ++i)
            if (dv(i) < 0.0L) t = std::min(t, -v(i) / dv(i));
        int at = lay_.lin;
        for (int d : lay_.soc_dims) {
            const auto vk = v.segment(at, d);
            const auto dk = dv.segment(at, d);
            // (v0+t d0)^2 - |v1+t d1|^2 >= 0 with v0+t d0 >= 0.
            const Real a = dk(0) * dk(0) - dk.tail(d - 1).squaredNorm();
            const Real b = 2.0L * (vk(0) * dk(0) - vk.tail(d - 1).dot(dk.tail(d - 1)));
            const Real c = vk(0) * vk(0) - vk.tail(d - 1).squaredNorm();
            Real tq = 1e18L;
            const Real disc = b * b - 4.0L * a * c;
            if (a < 0.0L) {
                // c > 0 inside the cone, so exactly one root lies ahead.
                const Real sq = std::sqrt(std::max<Real>(0.0L, disc));
                const Real r1 = (-b + sq) / (2.0L * a);
                const Real r2 = (-b - sq) / (2.0L * a);
                for (Real r : {r1, r2})
                    if (r > 0.0L) tq = std::min(tq, r);
            } else if (disc >= 0.0L && b < 0.0L) {
                const Real sq = std::sqrt(disc);
                const Real r = (a == 0.0L) ? -c / b : (2.0L * c) / (-b + sq);
                if (r > 0.0L) tq = std::min(tq, r);
            }
            if (dk(0) < 0.0L) tq = std::min(tq, -vk(0) / dk(0));
            t = std::min(t, tq);
            at += d;
        }
        return t;
    }

private:
    ConeLayout lay_;
};

struct StandardForm {
    Eigen::MatrixXd G;
    Eigen::VectorXd h, c;
    ConeLayout layout;
};

inline Solution solve_standard(const StandardForm& sf, double tol, int max_iters) {
    const int n = static_cast<int>(sf.c.size());
    const int m = static_cast<int>(sf.h.size());
    const Cone cone(sf.layout);
    Solution sol;
    sol.x = Eigen::VectorXd::Zero(n);

    if (m == 0) {
        sol.status = (sf.c.norm() == 0.0) ? SolveStatus::Optimal : SolveStatus::NumericalFailure;
        sol.message = "no constraints";
        return sol;
    }

    const RMat G = sf.G.cast<Real>();
    const RVec h = sf.h.cast<Real>();
    const RVec c = sf.c.cast<Real>();
    const Real rtol = static_cast<Real>(tol);

    // --- Initialization: least-squares primal/dual points shifted into K.
    RMat GtG = G.transpose() * G;
    GtG.diagonal().array() += 1e-14L * (1.0L + GtG.diagonal().maxCoeff());
    Eigen::LDLT<RMat> ls(GtG);
    RVec x = ls.solve(G.transpose() * h);
    const RVec r0 = h - G * x;
    const Real alpha_p = cone.margin(r0);
    RVec s = (alpha_p < 0.0L) ? r0 : (r0 + (1.0L + alpha_p) * cone.identity()).eval();

    const RVec xd = ls.solve(-c);
    RVec z = G * xd;
    const Real alpha_d = cone.margin(z);
    if (alpha_d >= 0.0L) z += (1.0L + alpha_d) * cone.identity();

    Real tau = 1.0L, kappa = 1.0L;
    const Real degree = static_cast<Real>(cone.degree()) + 1.0L;

    Scalings W;
    RVec lambda(m);

    const Real hnorm = std::max<Real>(1.0L, h.norm());
    const Real cnorm = std::max<Real>(1.0L, c.norm());
    const Real gscale = std::max<Real>(1.0L, G.cwiseAbs().maxCoeff());

    // Iterates can degrade once the complementarity measure reaches the
    // conditioning floor of the normal equations; the best point seen is
    // kept and returned if the strict tolerance was never met exactly.
    struct Best {
        RVec x;
        Real metric = std::numeric_limits<Real>::infinity();
        Real pcost = 0.0L;
    } best;
    int stall = 0;

    auto finish = [&](const std::string& why) {
        if (best.metric <= 10.0L * rtol) {
            sol.status = SolveStatus::Optimal;
            sol.message = "reduced-accuracy optimum (" + why + ")";
            sol.x = best.x.cast<double>();
            sol.objective_value = static_cast<double>(best.pcost);
        } else {
            sol.status = SolveStatus::NumericalFailure;
            sol.message = why;
            if (best.metric < std::numeric_limits<Real>::infinity()) {
                sol.x = best.x.cast<double>();
                sol.objective_value = static_cast<double>(best.pcost);
            }
        }
    };

    Eigen::LDLT<RMat> kkt;

    // Reduced Newton solve of [0 G'; G -W^2] (dx, dz) = (bx, bz):
    // (G' W^-2 G) dx = bx + G' W^-2 bz; dz = W^-2 (G dx - bz).
    auto solve_kkt = [&](const RVec& bx, const RVec& bz, RVec& dx, RVec& dz) {
        const RVec rhs = bx + G.transpose() * cone.apply_Winv2(W, bz);
        dx = kkt.solve(rhs);
        const RVec resid = rhs - (G.transpose() * cone.apply_Winv2(W, G * dx));
        dx += kkt.solve(resid);
        dz = cone.apply_Winv2(W, G * dx - bz);
    };

    for (int iter = 0; iter < max_iters; ++iter) {
        sol.iterations = iter;

        // --- Convergence checks on the de-homogenized point.
        const RVec xs = x / tau, ss = s / tau, zs = z / tau;
        const Real pres = (G * xs + ss - h).norm() / hnorm;
        const Real dres = (G.transpose() * zs + c).norm() / cnorm;
        const Real pcost = c.dot(xs), dcost = -h.dot(zs);
        const Real gap = ss.dot(zs);
        const Real relgap = gap / std::max({(Real)1.0L, std::abs(pcost), std::abs(dcost)});
#ifdef LOOPSHAPER_SOCP_TRACE
        std::fprintf(stderr, "it=%3d pres=%9.2Le dres=%9.2Le relgap=%9.2Le tau=%9.2Le kappa=%9.2Le pcost=%9.2Le\n",
                     iter, pres, dres, relgap, tau, kappa, pcost);
#endif
        if (pres <= rtol && dres <= rtol && relgap <= rtol) {
            sol.x = xs.cast<double>();
            sol.objective_value = static_cast<double>(pcost);
            sol.status = SolveStatus::Optimal;
            return sol;
        }
        const Real metric = std::max({pres, dres, relgap});
        if (metric < 0.999L * best.metric) {
            best.metric = metric;
            best.x = xs;
            best.pcost = pcost;
            stall = 0;
        } else if (++stall >= (best.metric <= 10.0L * rtol ? 3 : 10)) {
            finish("progress stalled");
            return sol;
        }

        // Certificates from the self-dual embedding: tau -> 0 with kappa > 0
        // yields either a primal-infeasibility certificate z (G'z = 0,
        // h'z < 0) or an unboundedness certificate x (Gx + s = 0, c'x < 0).
        const Real hz = h.dot(z);
        const Real cx = c.dot(x);
        const bool tau_collapsed = tau <= rtol * std::max<Real>(1.0L, kappa);
        if (hz < 0.0L) {
            const Real pinf = (G.transpose() * z).norm() / (-hz);
            if (pinf <= rtol * gscale || (tau_collapsed && pinf <= std::sqrt(rtol) * gscale)) {
                sol.status = SolveStatus::Infeasible;
                sol.message = "primal infeasibility certificate";
                sol.x = xs.cast<double>();
                return sol;
            }
        }
        if (cx < 0.0L) {
            const Real dinf = (G * x + s).norm() / (-cx);
            if (dinf <= rtol * gscale || (tau_collapsed && dinf <= std::sqrt(rtol) * gscale)) {
                sol.status = SolveStatus::NumericalFailure;
                sol.message = "dual infeasibility certificate (objective unbounded below)";
                sol.x = xs.cast<double>();
                return sol;
            }
        }

        // --- NT scaling at the current point.
        if (!cone.update_scalings(s, z, W, lambda)) {
            finish("iterate left the cone interior");
            return sol;
        }
        const Real mu = (lambda.squaredNorm() + tau * kappa) / degree;

        RMat M = RMat::Zero(n, n);
        for (int j = 0; j < n; ++j) M.col(j) = G.transpose() * cone.apply_Winv2(W, G.col(j));
        M = 0.5L * (M + M.transpose()).eval();
        M.diagonal().array() += 1e-16L * (1.0L + M.diagonal().cwiseAbs().maxCoeff());
        kkt.compute(M);
        if (kkt.info() != Eigen::Success) {
            finish("KKT factorization failed");
            return sol;
        }

        // Static solve used for the tau elimination.
        RVec x1, z1;
        solve_kkt(-c, h, x1, z1);

        const RVec r_dual = G.transpose() * z + c * tau;
        const RVec r_pri = s + G * x - h * tau;
        const Real r_gap = kappa + c.dot(x) + h.dot(z);

        auto direction = [&](Real sigma, const RVec& comp_rhs, Real kap_rhs, RVec& dx, RVec& dz, RVec& ds,
                             Real& dtau, Real& dkappa) {
            const Real oms = 1.0L - sigma;
            const RVec wls = cone.apply_W(W, cone.solve_prod(lambda, comp_rhs));
            const RVec bz = -oms * r_pri - wls;
            RVec x2, z2;
            solve_kkt(-oms * r_dual, bz, x2, z2);
            const Real denom = c.dot(x1) + h.dot(z1) - kappa / tau;
            dtau = (-oms * r_gap - c.dot(x2) - h.dot(z2) - kap_rhs / tau) / denom;
            dx = x2 + dtau * x1;
            dz = z2 + dtau * z1;
            ds = wls - cone.apply_W(W, cone.apply_W(W, dz));
            dkappa = (kap_rhs - kappa * dtau) / tau;
        };

        // Affine (predictor) direction.
        RVec dxa, dza, dsa;
        Real dtaua, dkappaa;
        direction(0.0L, -cone.prod(lambda, lambda), -tau * kappa, dxa, dza, dsa, dtaua, dkappaa);

        Real alpha = cone.max_step(s, dsa);
        alpha = std::min(alpha, cone.max_step(z, dza));
        if (dtaua < 0.0L) alpha = std::min(alpha, -tau / dtaua);
        if (dkappaa < 0.0L) alpha = std::min(alpha, -kappa / dkappaa);
        alpha = std::min<Real>(alpha, 1.0L);
        const Real sigma = std::pow(1.0L - alpha, 3);

        // Combined direction with the Mehrotra second-order correction.
        const RVec corr = cone.prod(cone.apply_Winv(W, dsa), cone.apply_W(W, dza));
        RVec comp_rhs = -cone.prod(lambda, lambda) - corr;
        comp_rhs += sigma * mu * cone.identity();
        const Real kap_rhs = -tau * kappa + sigma * mu - dtaua * dkappaa;

        RVec dx, dz, ds;
        Real dtau, dkappa;
        direction(sigma, comp_rhs, kap_rhs, dx, dz, ds, dtau, dkappa);

        Real step = cone.max_step(s, ds);
        step = std::min(step, cone.max_step(z, dz));
        if (dtau < 0.0L) step = std::min(step, -tau / dtau);
        if (dkappa < 0.0L) step = std::min(step, -kappa / dkappa);
        step = std::min(0.99L * step, 1.0L);
        if (!(step > 0.0L) || !std::isfinite(static_cast<double>(step))) {
            finish("step size collapsed");
            return sol;
        }

        x += step * dx;
        z += step * dz;
        s += step * ds;
        tau += step * dtau;
        kappa += step * dkappa;
    }

    finish("maximum interior-point iterations reached");
    return sol;
}

}  // namespace socp_detail

// Solve a rotated-cone program. Variables fixed by equal bounds are
// eliminated; each block is rescaled so its data is O(1);
// block (a, g, b) maps to the standard cone row group
// (a+g, a-g, 2 Re b_1, 2 Im b_1, ...).
inline Solution solve(const ConicProgram& p, double tol = 1e-8, int max_iters = 200) {
    using socp_detail::StandardForm;
    const int n_all = p.nvars;

    std::vector<int> var_map(static_cast<std::size_t>(n_all), -1);
    Eigen::VectorXd fixed = Eigen::VectorXd::Zero(n_all);
    int n = 0;
    for (int j = 0; j < n_all; ++j) {
        const double lo = p.lower.size() ? p.lower(j) : -std::numeric_limits<double>::infinity();
        const double hi = p.upper.size() ? p.upper(j) : std::numeric_limits<double>::infinity();
        if (std::isfinite(lo) && lo == hi) {
            fixed(j) = lo;
        } else {
            var_map[static_cast<std::size_t>(j)] = n++;
        }
    }

    auto reduce_scalar = [&](const AffineScalar& a, double scale) {
        Eigen::VectorXd coeff = Eigen::VectorXd::Zero(n);
        double constant = a.constant;
        for (int j = 0; j < n_all; ++j) {
            const double cj = a.coeff(j);
            if (cj == 0.0) continue;
            if (var_map[static_cast<std::size_t>(j)] >= 0)
                coeff(var_map[static_cast<std::size_t>(j)]) = cj / scale;
            else
                constant += cj * fixed(j);
        }
        constant /= scale;
        return std::make_pair(coeff, constant);
    };

    StandardForm sf;
    std::vector<double> box_h;
    std::vector<Eigen::VectorXd> box_g;
    for (int j = 0; j < n_all; ++j) {
        const int jj = var_map[static_cast<std::size_t>(j)];
        if (jj < 0) continue;
        const double lo = p.lower.size() ? p.lower(j) : -std::numeric_limits<double>::infinity();
        const double hi = p.upper.size() ? p.upper(j) : std::numeric_limits<double>::infinity();
        if (std::isfinite(lo)) {
            Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
            g(jj) = -1.0;
            box_g.push_back(g);
            box_h.push_back(-lo);
        }
        if (std::isfinite(hi)) {
            Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
            g(jj) = 1.0;
            box_g.push_back(g);
            box_h.push_back(hi);
        }
    }

    sf.layout.lin = static_cast<int>(box_g.size());
    int m = sf.layout.lin;
    for (const ConeBlock& blk : p.cones) {
        const int d = 2 + 2 * static_cast<int>(blk.b.size());
        sf.layout.soc_dims.push_back(d);
        m += d;
    }

    sf.G.resize(m, n);
    sf.h.resize(m);
    int row = 0;
    for (std::size_t i = 0; i < box_g.size(); ++i) {
        sf.G.row(row) = box_g[i].transpose();
        sf.h(row) = box_h[i];
        ++row;
    }
    for (const ConeBlock& blk : p.cones) {
        // Block scale: dividing the b entries by t and the a entry by t^2
        // leaves the rotated cone unchanged.
        double bmax = 0.0;
        for (const auto& bk : blk.b) bmax = std::max(bmax, bk.max_abs());
        const double t = std::max({1.0, bmax, std::sqrt(blk.a.max_abs())});
        auto [ac, a0] = reduce_scalar(blk.a, t * t);
        auto [gc, g0] = reduce_scalar(blk.g, 1.0);
        // Row 0: a+g; row 1: a-g; then (2Re b, 2Im b)/t.
        sf.G.row(row) = -(ac + gc).transpose();
        sf.h(row) = a0 + g0;
        sf.G.row(row + 1) = -(ac - gc).transpose();
        sf.h(row + 1) = a0 - g0;
        int at = row + 2;
        for (const auto& bk : blk.b) {
            auto [rc, r0] = reduce_scalar(bk.re, t);
            auto [ic, i0] = reduce_scalar(bk.im, t);
            sf.G.row(at) = -2.0 * rc.transpose();
            sf.h(at) = 2.0 * r0;
            sf.G.row(at + 1) = -2.0 * ic.transpose();
            sf.h(at + 1) = 2.0 * i0;
            at += 2;
        }
        row = at;
    }

    sf.c = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n_all; ++j)
        if (var_map[static_cast<std::size_t>(j)] >= 0) sf.c(var_map[static_cast<std::size_t>(j)]) = p.objective(j);

    // Column equilibration: decision variables can span many orders of
    // magnitude (polynomial coefficients vs. a gamma level), which starves
    // the Newton systems of accuracy. Solve in scaled coordinates.
    Eigen::VectorXd colscale = Eigen::VectorXd::Ones(n);
    for (int j = 0; j < n; ++j) {
        const double m_col = sf.G.col(j).cwiseAbs().maxCoeff();
        if (m_col > 0.0) colscale(j) = 1.0 / m_col;
    }
    sf.G = sf.G * colscale.asDiagonal();
    sf.c = colscale.asDiagonal() * sf.c;

    Solution inner = socp_detail::solve_standard(sf, tol, max_iters);
    if (inner.x.size() == n) inner.x = colscale.asDiagonal() * inner.x;

    Solution out;
    out.status = inner.status;
    out.iterations = inner.iterations;
    out.message = inner.message;
    out.x = Eigen::VectorXd::Zero(n_all);
    for (int j = 0; j < n_all; ++j) {
        const int jj = var_map[static_cast<std::size_t>(j)];
        out.x(j) = (jj >= 0) ? inner.x(jj) : fixed(j);
    }
    out.objective_value = p.objective.dot(out.x);
    out.max_cone_residual = residuals(p, out.x);
    return out;
}

}  // namespace loopshaper
