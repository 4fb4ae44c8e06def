#pragma once

#include <cmath>

#include "loopshaper/errors.hpp"
#include "loopshaper/rational.hpp"

namespace loopshaper {

// Analytic Type-III (integral-lead) design by the K-factor method: place a
// coincident zero pair below and a coincident pole pair above the crossover
// so the compensator contributes a prescribed phase boost there.

struct KFactorSpec {
    double f_c;  // crossover frequency [Hz]
    double A_p;  // required phase boost [deg]
    double M_g;  // compensator magnitude at f_c (absolute)

    void validate() const {
        if (!(f_c > 0.0)) throw OutOfRange("KFactorSpec: f_c must be positive");
        if (!(A_p > 0.0 && A_p < 180.0)) throw OutOfRange("KFactorSpec: A_p must lie in (0, 180) deg");
        if (!(M_g > 0.0)) throw OutOfRange("KFactorSpec: M_g must be positive");
    }
};

inline constexpr double kDegToRad = M_PI / 180.0;

// k = tan^2(A_p/4 + 45 deg). Rejected near the tangent pole.
inline double k_gain(double A_p_deg) {
    if (A_p_deg < 0.0 || A_p_deg > 179.9) throw OutOfRange("k_gain: A_p must lie in [0, 179.9] deg");
    const double t = std::tan((A_p_deg / 4.0 + 45.0) * kDegToRad);
    return t * t;
}

struct ZeroPolePlacement {
    double f_z;  // coincident zero pair [Hz]
    double f_p;  // coincident pole pair [Hz]
};

// f_z = f_c/sqrt(k), f_p = f_c*sqrt(k); geometric mean is f_c exactly.
inline ZeroPolePlacement place_zeros_poles(double f_c, double A_p_deg) {
    if (!(f_c > 0.0)) throw OutOfRange("place_zeros_poles: f_c must be positive");
    const double sk = std::sqrt(k_gain(A_p_deg));
    return ZeroPolePlacement{f_c / sk, f_c * sk};
}

// Compensator phase at the crossover, integrator included:
// 2*(atan(f_c/f_z) - atan(f_c/f_p)) - 90 deg. The zero/pole pairs alone
// contribute 90 deg more than this value.
inline double phase_boost(double f_c, double f_z, double f_p) {
    return (2.0 * (std::atan(f_c / f_z) - std::atan(f_c / f_p))) / kDegToRad - 90.0;
}

// K_k(s) = g*(s+wz)^2 / (s*(s+wp)^2) with the gain fixed by |K_k(j*wc)| = M_g.
inline RationalTF kfactor_design(const KFactorSpec& spec) {
    spec.validate();
    const ZeroPolePlacement zp = place_zeros_poles(spec.f_c, spec.A_p);
    const double wz = 2.0 * M_PI * zp.f_z;
    const double wp = 2.0 * M_PI * zp.f_p;
    const double wc = 2.0 * M_PI * spec.f_c;
    const double g = spec.M_g * wc * (wc * wc + wp * wp) / (wc * wc + wz * wz);
    const Polynomial zero_pair = Polynomial{wz, 1.0} * Polynomial{wz, 1.0};
    const Polynomial pole_pair = (Polynomial{wp, 1.0} * Polynomial{wp, 1.0}).shifted(1);
    return RationalTF{g * zero_pair, pole_pair};
}

}  // namespace loopshaper
