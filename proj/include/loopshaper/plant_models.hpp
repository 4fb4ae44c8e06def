#pragma once

#include <cmath>

#include "loopshaper/errors.hpp"
#include "loopshaper/polynomial.hpp"
#include "loopshaper/rational.hpp"

namespace loopshaper {

// ============================================================================
// Converter data
// ============================================================================

// Circuit parameters of the two-phase interleaved boost converter (SI units).
struct ConverterParams {
    double L1;    // phase-1 inductance [H]
    double L2;    // phase-2 inductance [H]
    double Co;    // output capacitance [F]
    double r_l;   // inductor series resistance [ohm]
    double r_s;   // switch on-state resistance [ohm]
    double r_c;   // capacitor ESR [ohm]
    double R_o;   // load resistance [ohm]
    double v_in;  // input voltage [V]
    double v_o;   // output voltage set-point [V]
    double f_sw;  // switching frequency [Hz]

    void validate() const {
        const double fields[] = {L1, L2, Co, R_o, v_in, v_o, f_sw};
        for (double f : fields)
            if (!(f > 0.0)) throw OutOfRange("ConverterParams: L, Co, R_o, v_in, v_o, f_sw must be positive");
        if (r_l < 0.0 || r_s < 0.0 || r_c < 0.0) throw OutOfRange("ConverterParams: parasitics must be non-negative");
        if (!(v_o > v_in)) throw NoEquilibrium("ConverterParams: boost operation requires v_o > v_in");
    }

    double L_mean() const { return 0.5 * (L1 + L2); }
};

// Measured values of the 200 W prototype.
inline ConverterParams prototype_params() {
    ConverterParams p{};
    p.L1 = 5.069e-3;
    p.L2 = 5.085e-3;
    p.Co = 0.996e-3;
    p.r_l = 0.585;
    p.r_s = 0.036;
    p.r_c = 0.01;
    p.R_o = 50.0;
    p.v_in = 46.0;
    p.v_o = 100.0;
    p.f_sw = 10e3;
    return p;
}

struct OperatingPoint {
    double U;    // DC duty cycle
    double I_L;  // per-phase DC inductor current [A]
    double V_c;  // DC capacitor voltage [V]
};

// DC equilibrium of the averaged model for a target output voltage. The
// averaged per-phase inductor balance is
//   v_in = I_L*(r_l + U*r_s) + (1-U)*v_o,   I_L = v_o / (2*(1-U)*R_o),
// and at equilibrium the ESR drop vanishes, so V_c = v_o. Newton iteration
// starting from the lossless ratio picks the efficient (low-duty) branch.
inline OperatingPoint dc_operating_point(const ConverterParams& p) {
    p.validate();
    auto f = [&p](double U) {
        const double il = p.v_o / (2.0 * (1.0 - U) * p.R_o);
        return il * (p.r_l + U * p.r_s) + (1.0 - U) * p.v_o - p.v_in;
    };
    double U = 1.0 - p.v_in / p.v_o;
    const double h = 1e-8;
    // Drive the balance residual to the floating-point floor so the
    // equilibrium also nulls the inductor derivatives (scale 1/L).
    for (int it = 0; it < 100; ++it) {
        const double fu = f(U);
        if (std::abs(fu) <= 1e-13 * p.v_in) break;
        const double dfu = (f(U + h) - f(U - h)) / (2.0 * h);
        if (dfu == 0.0) break;
        const double step = fu / dfu;
        U -= step;
        if (!(U > 0.0 && U < 1.0)) throw NoEquilibrium("dc_operating_point: duty cycle left (0,1)");
        if (std::abs(step) < 1e-16) break;
    }
    if (std::abs(f(U)) > 1e-10 * p.v_in) throw NoEquilibrium("dc_operating_point: Newton did not converge");
    OperatingPoint op;
    op.U = U;
    op.I_L = p.v_o / (2.0 * (1.0 - U) * p.R_o);
    op.V_c = p.v_o;
    return op;
}

// ============================================================================
// Identified models and published design data
// ============================================================================

// Identified plant set: control-to-output G, load-current path G_i,
// input-voltage path G_v and the output-voltage sensor noise model W_n.
struct PlantSet {
    RationalTF G;
    RationalTF G_i;
    RationalTF G_v;
    RationalTF W_n;
};

inline PlantSet identified_plant_set() {
    PlantSet ps;
    ps.G = RationalTF{Polynomial{1.811e7, -74.79}, Polynomial{9.129e4, 284.0, 1.0}};
    ps.G_i = RationalTF{Polynomial{-200.0, -1.0}, Polynomial{104.6, 0.22, 0.001}};
    ps.G_v = RationalTF{Polynomial{1.724e5, 8.58}, Polynomial{9.126e4, 277.8, 1.0}};
    ps.W_n = RationalTF{Polynomial{1.177e5, -5730.0, 1.0}, Polynomial{9.379e7, 9600.0, 1.0}};
    return ps;
}

struct WeightSet {
    RationalTF W1;   // error weight
    RationalTF W2;   // compensator-output weight
    RationalTF W3;   // measured-variable weight
    RationalTF Wv;   // input-voltage disturbance weight
    RationalTF Wi;   // load-current disturbance weight
    RationalTF WQ;   // Q-filter shaping weight
    RationalTF W1C;  // combined-loop sensitivity weight
    RationalTF W3C;  // combined-loop complementary weight
};

inline WeightSet paper_weights() {
    WeightSet w;
    w.W1 = RationalTF{Polynomial{395.0, 1.0}, Polynomial{3.95e-7, 1.4}};
    w.W2 = RationalTF{Polynomial{1850.0, 1.0}, Polynomial{18500.0, 0.04}};
    w.W3 = RationalTF{Polynomial{400.0, 1.0}, Polynomial{2000.0, 15.0}};
    w.Wv = RationalTF{Polynomial{3200.0, 8e-8}, Polynomial{2094.0, 1.0}};
    w.Wi = RationalTF{Polynomial{400.0, 1e-8}, Polynomial{2094.0, 1.0}};
    w.WQ = RationalTF{Polynomial{140.0, 1.0}, Polynomial{1.4, 1.4}};
    w.W1C = RationalTF{Polynomial{3700.0, 1.0}, Polynomial{2.71e-5, 1.3}};
    w.W3C = RationalTF{Polynomial{3700.0, 1.0}, Polynomial{18500.0, 0.04}};
    return w;
}

// Published compensators and Q-filter. K_x drives the 1-DOF loop, K_2x the
// 2-DOF loop; K_k is the K-factor baseline.
struct PaperControllers {
    RationalTF K_x;
    RationalTF K_k;
    RationalTF K_2x;
    RationalTF Q;
};

inline PaperControllers paper_controllers() {
    PaperControllers c;
    c.K_x = RationalTF{Polynomial{3.439e7, 3.558e5, 918.9}, Polynomial{0.0, 4.687e7, 1.37e4, 1.0}};
    c.K_k = RationalTF{Polynomial{1.275e13, 5.282e10, 5.472e7}, Polynomial{0.0, 7.564e13, 3.822e8, 482.7}};
    c.K_2x = RationalTF{Polynomial{1.47e8, 4.1e5, 1692.0}, Polynomial{0.0, 1e8, 1.4e4, 1.0}};
    c.Q = RationalTF{Polynomial{98.77}, Polynomial{99.6, 1.0}};
    return c;
}

// ============================================================================
// Analytic low-frequency models
// ============================================================================

struct MathModels {
    RationalTF G_m;   // duty -> output voltage
    RationalTF G_vm;  // input voltage -> output voltage
    RationalTF G_im;  // load current -> output voltage
};

// Analytic transfer functions of the averaged converter by direct
// substitution. L is the per-phase inductance; the marginally different
// phase inductances enter as their mean. The duty-to-output denominator
// differs from the disturbance denominators in its s^2/s groups; both forms
// are produced exactly as constructed.
inline MathModels math_models(const ConverterParams& p, const OperatingPoint& op) {
    p.validate();
    const double U = op.U;
    const double L = p.L_mean();
    const double Ro = p.R_o, rc = p.r_c, rs = p.r_s, rl = p.r_l, Co = p.Co, Vo = p.v_o;
    const double Rtot = Ro + rc;

    const double Tc_coeff = Co * Ro * (Ro * (rc + rl) + 2.0 * rc * rl + rc * rc) + Co * rc * rc * (U * rs + rl) + Rtot * L;
    const double Ts = Ro * Ro * U * (2.0 * U - 4.0) + U * Ro * (rs - rc) + U * rs * rc + Ro * (2.0 * Ro + rc) + Rtot * rc;

    MathModels m;
    {
        const double K0 = Ro * Ro * (4.0 * U - 2.0 * U * U - 2.0) + Ro * (rc + rs) + rc * (rl + rs);
        const Polynomial num = -Vo * (Polynomial{1.0, Co * rc} * Polynomial{K0, L * Rtot});
        const double s2 = (U - 1.0) * Co * L * (Ro * Ro + 2.0 * Ro * rc + rc * rc);
        const double s1 = (U - 1.0) * Co * U * Ro * (Ro * (rs - rc) - rc * rc + 2.0 * rs * rc) + Tc_coeff;
        m.G_m = RationalTF{num, Polynomial{Ts, s1, s2}};
    }
    {
        const double s2 = Co * L * (Ro * Ro + 2.0 * rc + rc * rc);
        const double s1 = Co * U * Ro * (Ro * (rs - rc) + rc * (2.0 * rs - rc)) + Tc_coeff;
        const Polynomial den{Ts, s1, s2};
        m.G_vm = RationalTF{-2.0 * Ro * Rtot * (U - 1.0) * Polynomial{1.0, Co * rc}, den};
        m.G_im = RationalTF{Rtot * Polynomial{1.0, Co * Ro + Co * rc}, den};
    }
    return m;
}

}  // namespace loopshaper
