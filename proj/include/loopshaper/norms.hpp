#pragma once

#include <cmath>
#include <cstddef>

#include "loopshaper/grid.hpp"
#include "loopshaper/rational.hpp"
#include "loopshaper/stability.hpp"

namespace loopshaper {

struct HinfEstimate {
    double peak = 0.0;
    double omega_at_peak = 0.0;
    // False when the denominator has a closed-RHP root; the peak is then a
    // grid supremum of the frequency response, not an H-infinity norm.
    bool stable = true;
};

// Grid-based H-infinity norm: sup |tf(jw)| over the grid, with
// `refine_levels` rounds of golden-section refinement around the argmax.
// Monotonically non-decreasing in grid density at refine_levels = 0.
inline HinfEstimate hinf_norm(const RationalTF& tf, const FrequencyGrid& grid, int refine_levels = 3) {
    HinfEstimate est;
    if (tf.den.degree() >= 1) est.stable = is_hurwitz(tf.den);

    auto mag = [&tf](double w) { return std::abs(tf.eval_jw(w)); };

    std::size_t kmax = 0;
    double best = -1.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double m = mag(grid[k]);
        if (m > best) {
            best = m;
            kmax = k;
        }
    }
    est.peak = best;
    est.omega_at_peak = grid[kmax];

    if (refine_levels > 0 && grid.size() >= 2) {
        double lo = grid[kmax > 0 ? kmax - 1 : 0];
        double hi = grid[kmax + 1 < grid.size() ? kmax + 1 : grid.size() - 1];
        if (hi > lo) {
            constexpr double kInvPhi = 0.6180339887498949;
            double x1 = hi - kInvPhi * (hi - lo);
            double x2 = lo + kInvPhi * (hi - lo);
            double f1 = mag(x1), f2 = mag(x2);
            const int iters = 20 * refine_levels;
            for (int it = 0; it < iters; ++it) {
                if (f1 < f2) {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + kInvPhi * (hi - lo);
                    f2 = mag(x2);
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - kInvPhi * (hi - lo);
                    f1 = mag(x1);
                }
            }
            const double xm = 0.5 * (lo + hi), fm = mag(xm);
            if (fm > est.peak) {
                est.peak = fm;
                est.omega_at_peak = xm;
            }
        }
    }
    return est;
}

}  // namespace loopshaper
