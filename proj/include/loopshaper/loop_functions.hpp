#pragma once

#include <string>
#include <vector>

#include "loopshaper/errors.hpp"
#include "loopshaper/grid.hpp"
#include "loopshaper/norms.hpp"
#include "loopshaper/parallel.hpp"
#include "loopshaper/plant_models.hpp"
#include "loopshaper/polynomial.hpp"
#include "loopshaper/rational.hpp"
#include "loopshaper/stability.hpp"

namespace loopshaper {

// ============================================================================
// Controller parameterizations
// ============================================================================

// Type-III compensator coefficients. The realized compensator is
// K(s) = X(s) / (s*Y(s)): the integrator is folded into the augmented plant
// during synthesis, and Y is kept monic to pin the coefficient scale.
struct CompensatorParams {
    Polynomial X;
    Polynomial Y;

    CompensatorParams() : X(Polynomial::zero()), Y(Polynomial::one()) {}
    CompensatorParams(Polynomial x, Polynomial y) : X(std::move(x)), Y(std::move(y)) {
        if (Y.is_zero()) throw DegenerateInput("CompensatorParams: Y is zero");
        if (Y.leading() != 1.0) {
            const double lead = Y.leading();
            X = (1.0 / lead) * X;
            Y = (1.0 / lead) * Y;
        }
    }

    // Split K = X/(s*Y) of a published controller whose denominator carries
    // one pole at the origin.
    static CompensatorParams from_controller(const RationalTF& K) {
        if (K.den[0] != 0.0) throw DegenerateInput("from_controller: denominator has no integrator factor");
        std::vector<double> y(K.den.coeffs().begin() + 1, K.den.coeffs().end());
        return CompensatorParams(K.num, Polynomial(std::move(y)));
    }

    RationalTF controller() const { return RationalTF{X, Y.shifted(1)}; }
    // K' = X/Y, the compensator seen by the integrator-augmented plant.
    RationalTF k_prime() const { return RationalTF{X, Y}; }
};

// Q-filter coefficients, Q = N/M with M monic and deg(N) < deg(M).
struct FilterParams {
    Polynomial N;
    Polynomial M;

    FilterParams() : N(Polynomial::zero()), M(Polynomial::one()) {}
    FilterParams(Polynomial n, Polynomial m) : N(std::move(n)), M(std::move(m)) {
        if (M.is_zero()) throw DegenerateInput("FilterParams: M is zero");
        if (M.leading() != 1.0) {
            const double lead = M.leading();
            N = (1.0 / lead) * N;
            M = (1.0 / lead) * M;
        }
        if (!N.is_zero() && N.degree() > M.degree())
            throw DegenerateInput("FilterParams: Q must be proper (deg N <= deg M)");
    }

    static FilterParams from_q(const RationalTF& Q) { return FilterParams(Q.num, Q.den); }

    RationalTF q() const { return RationalTF{N, M}; }
    // Noise suppression at high frequency needs a strictly proper Q; the
    // DOB realization and the synthesis orders enforce this.
    bool strictly_proper() const { return N.is_zero() || N.degree() < M.degree(); }
};

inline RationalTF augment_with_integrator(const RationalTF& G) { return RationalTF{G.num, G.den.shifted(1)}; }

// ============================================================================
// Sensitivity functions (Eqs. of the 1-DOF, DOB and combined loops)
// ============================================================================

struct FeedbackSensitivities {
    RationalTF S;    // set-point -> error
    RationalTF T;    // noise -> measured output, carries -W_n
    RationalTF S_i;  // set-point -> physical control input, K*S with K = X/(sY)
};

inline FeedbackSensitivities feedback_sensitivities(const RationalTF& G_aug, const RationalTF& W_n,
                                                    const CompensatorParams& comp) {
    const Polynomial& n = G_aug.num;
    const Polynomial& d = G_aug.den;
    Polynomial closed = d * comp.Y + n * comp.X;  // J cleared of d
    if (closed.is_zero()) throw DegenerateLoop("feedback_sensitivities: closed-loop denominator is zero");
    FeedbackSensitivities fs;
    fs.S = RationalTF{d * comp.Y, closed};
    // Note d already carries the integrator of the augmented plant, so
    // K*S = X/(s Y) * Y d / closed keeps its un-cancelled Y factor.
    fs.S_i = RationalTF{comp.X * d * comp.Y, comp.Y.shifted(1) * closed};
    fs.T = -1.0 * (W_n * RationalTF{n * comp.X, closed});
    return fs;
}

// Wv*G_v + Wi*G_i, the lumped weighted disturbance path.
inline RationalTF disturbance_mix(const PlantSet& plants, const WeightSet& weights) {
    return parallel(weights.Wv * plants.G_v, weights.Wi * plants.G_i);
}

inline RationalTF output_disturbance_sensitivity(const WeightSet& weights, const PlantSet& plants,
                                                 const CompensatorParams& comp) {
    const RationalTF G_aug = augment_with_integrator(plants.G);
    Polynomial closed = G_aug.den * comp.Y + G_aug.num * comp.X;
    if (closed.is_zero()) throw DegenerateLoop("output_disturbance_sensitivity: closed loop degenerate");
    return disturbance_mix(plants, weights) * RationalTF{G_aug.den * comp.Y, closed};
}

struct DobSensitivities {
    RationalTF S_D;  // disturbances -> output through the inner loop
    RationalTF T_D;  // noise -> output through the inner loop
};

// Inner-loop functions with Q = N/M. The plant in T_D is the un-augmented
// identified model: no compensator appears in the inner loop.
inline DobSensitivities dob_sensitivities(const FilterParams& filt, const PlantSet& plants,
                                          const WeightSet& weights) {
    Polynomial h = filt.M + filt.N;
    if (h.is_zero()) throw DegenerateLoop("dob_sensitivities: M + N is zero");
    DobSensitivities ds;
    ds.S_D = disturbance_mix(plants, weights) * RationalTF{filt.M, h};
    ds.T_D = plants.G * RationalTF{filt.N, h} * plants.W_n;
    return ds;
}

struct CombinedSensitivities {
    RationalTF S_C;  // disturbances -> output, both loops closed
    RationalTF T_C;  // noise -> output, both loops closed
};

inline CombinedSensitivities closed_loop_sensitivities(const CompensatorParams& comp, const FilterParams& filt,
                                                       const PlantSet& plants, const WeightSet& weights) {
    const RationalTF G_aug = augment_with_integrator(plants.G);
    const Polynomial& n = G_aug.num;
    const Polynomial& d = G_aug.den;
    Polynomial closed = d * comp.Y + n * comp.X;
    Polynomial mj = filt.M * closed;
    if (mj.is_zero()) throw DegenerateLoop("closed_loop_sensitivities: M*J is zero");
    CombinedSensitivities cs;
    cs.S_C = disturbance_mix(plants, weights) * RationalTF{comp.Y * (filt.M - filt.N) * d, mj};
    cs.T_C = plants.W_n * RationalTF{filt.N * comp.Y * d + filt.M * n * comp.X, mj};
    return cs;
}

struct LoopSet {
    RationalTF S, T, S_i, S_o, S_D, T_D, S_C, T_C;
};

inline LoopSet loop_set(const CompensatorParams& comp, const FilterParams& filt, const PlantSet& plants,
                        const WeightSet& weights) {
    const RationalTF G_aug = augment_with_integrator(plants.G);
    const FeedbackSensitivities fs = feedback_sensitivities(G_aug, plants.W_n, comp);
    const DobSensitivities ds = dob_sensitivities(filt, plants, weights);
    const CombinedSensitivities cs = closed_loop_sensitivities(comp, filt, plants, weights);
    return LoopSet{fs.S, fs.T, fs.S_i, output_disturbance_sensitivity(weights, plants, comp),
                   ds.S_D, ds.T_D, cs.S_C, cs.T_C};
}

// ============================================================================
// Weighted-norm verification
// ============================================================================

struct NormRow {
    std::string name;
    double peak = 0.0;
    double omega_at_peak = 0.0;
    double bound = 0.0;
    bool pass = false;
    bool informational = false;  // reported alongside, not part of the constraint set
};

struct StabilityVerdicts {
    bool outer = false;     // s*Y*den_G + num_G*X
    bool inner = false;     // M + N
    bool combined = false;  // M * (s*Y*den_G + num_G*X)
};

// Norm bounds used for pass/fail; defaults are the published objective
// levels with 15 percent slack.
struct NormBounds {
    double feedback = 0.813 * 1.15;
    double dob = 1.0 * 1.15;
    double combined = 1.0 * 1.15;
};

struct NormReport {
    std::vector<NormRow> rows;
    StabilityVerdicts stability;

    const NormRow* find(const std::string& name) const {
        for (const auto& r : rows)
            if (r.name == name) return &r;
        return nullptr;
    }
    bool all_pass() const {
        bool ok = stability.outer && stability.inner && stability.combined;
        for (const auto& r : rows) ok = ok && (r.pass || r.informational);
        return ok;
    }
};

// Grid peak of |f(jw)| over the verification grid, frequency-parallel.
inline std::pair<double, double> grid_peak(const RationalTF& f, const FrequencyGrid& grid) {
    std::vector<double> mags(grid.size());
    parallel_for(grid.size(), [&](std::size_t k) { mags[k] = std::abs(f.eval_jw(grid[k])); });
    std::size_t kmax = 0;
    for (std::size_t k = 1; k < mags.size(); ++k)
        if (mags[k] > mags[kmax]) kmax = k;
    return {mags[kmax], grid[kmax]};
}

inline NormReport verify_norms(const CompensatorParams& comp, const FilterParams& filt, const PlantSet& plants,
                               const WeightSet& weights, const FrequencyGrid& grid,
                               const NormBounds& bounds = NormBounds{}) {
    const LoopSet ls = loop_set(comp, filt, plants, weights);
    const RationalTF G_aug = augment_with_integrator(plants.G);

    NormReport rep;
    auto add = [&rep, &grid](const std::string& name, const RationalTF& f, double bound, bool info = false) {
        auto [peak, w] = grid_peak(f, grid);
        rep.rows.push_back(NormRow{name, peak, w, bound, peak <= bound, info});
    };

    add("W1*S", weights.W1 * ls.S, bounds.feedback);
    add("W3*T", weights.W3 * ls.T, bounds.feedback);
    // The LMI block form carries W3*G_aug*X/J, i.e. T without the W_n factor.
    {
        Polynomial closed = G_aug.den * comp.Y + G_aug.num * comp.X;
        add("W3*T_lmi", weights.W3 * RationalTF{G_aug.num * comp.X, closed}, bounds.feedback, true);
    }
    add("W2*S_i", weights.W2 * ls.S_i, bounds.feedback);
    // The printed block form weights the compensator output X/J instead of
    // the physical control input; reported for comparison.
    {
        Polynomial closed = G_aug.den * comp.Y + G_aug.num * comp.X;
        add("W2*X/J", weights.W2 * RationalTF{comp.X * G_aug.den, closed}, bounds.feedback, true);
    }
    add("S_o", ls.S_o, bounds.feedback);
    add("S_D", ls.S_D, bounds.dob);
    add("T_D", ls.T_D, bounds.dob);
    add("W1C*S_C", weights.W1C * ls.S_C, bounds.combined);
    add("W3C*T_C", weights.W3C * ls.T_C, bounds.combined);
    {
        RationalTF one_minus_q{filt.M - filt.N, filt.M};
        add("WQ*(1-Q)", weights.WQ * one_minus_q, bounds.dob);
    }

    const Polynomial outer = plants.G.den * comp.Y.shifted(1) + plants.G.num * comp.X;
    const Polynomial inner = filt.M + filt.N;
    rep.stability.outer = !outer.is_zero() && outer.degree() >= 1 && is_hurwitz(outer);
    rep.stability.inner = !inner.is_zero() && inner.degree() >= 1 && is_hurwitz(inner);
    const Polynomial comb = filt.M * outer;
    rep.stability.combined = !comb.is_zero() && comb.degree() >= 1 && is_hurwitz(comb);
    return rep;
}

}  // namespace loopshaper
