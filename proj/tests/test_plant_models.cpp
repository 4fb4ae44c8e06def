#include "loopshaper/plant_models.hpp"

#include <gtest/gtest.h>

#include "loopshaper/io.hpp"
#include "loopshaper/stability.hpp"

using loopshaper::ConverterParams;
using loopshaper::Polynomial;
using loopshaper::RationalTF;

TEST(Fixtures, IdentifiedPlantCoefficientsVerbatim) {
    const auto ps = loopshaper::identified_plant_set();
    EXPECT_EQ(ps.G.num.coeffs(), (std::vector<double>{1.811e7, -74.79}));
    EXPECT_EQ(ps.G.den.coeffs(), (std::vector<double>{9.129e4, 284.0, 1.0}));
    EXPECT_EQ(ps.G_i.den.coeffs(), (std::vector<double>{104.6, 0.22, 0.001}));
    EXPECT_EQ(ps.W_n.num.coeffs(), (std::vector<double>{1.177e5, -5730.0, 1.0}));
}

TEST(Fixtures, WeightCoefficientsVerbatim) {
    const auto w = loopshaper::paper_weights();
    EXPECT_EQ(w.W1.num.coeffs(), (std::vector<double>{395.0, 1.0}));
    EXPECT_EQ(w.W1.den.coeffs(), (std::vector<double>{3.95e-7, 1.4}));
    EXPECT_EQ(w.WQ.num.coeffs(), (std::vector<double>{140.0, 1.0}));
    EXPECT_EQ(w.WQ.den.coeffs(), (std::vector<double>{1.4, 1.4}));
    EXPECT_EQ(w.W3C.num.coeffs(), (std::vector<double>{3700.0, 1.0}));
    EXPECT_EQ(w.W3C.den.coeffs(), (std::vector<double>{18500.0, 0.04}));
}

TEST(Fixtures, ControllerCoefficientsVerbatim) {
    const auto c = loopshaper::paper_controllers();
    EXPECT_EQ(c.K_x.den.coeffs(), (std::vector<double>{0.0, 4.687e7, 1.37e4, 1.0}));
    EXPECT_EQ(c.Q.num.coeffs(), (std::vector<double>{98.77}));
    EXPECT_EQ(c.Q.den.coeffs(), (std::vector<double>{99.6, 1.0}));
    EXPECT_EQ(c.K_2x.num.coeffs(), (std::vector<double>{1.47e8, 4.1e5, 1692.0}));
}

TEST(Fixtures, ByteIdenticalSerialization) {
    const auto a = loopshaper::to_json(loopshaper::identified_plant_set().G).dump();
    const auto b = loopshaper::to_json(loopshaper::identified_plant_set().G).dump();
    EXPECT_EQ(a, b);
}

TEST(Fixtures, WeightsFiniteOnBand) {
    const auto w = loopshaper::paper_weights();
    for (const RationalTF* tf : {&w.W1, &w.W2, &w.W3, &w.Wv, &w.Wi, &w.WQ, &w.W1C, &w.W3C}) {
        for (double om : loopshaper::make_grid(1e2, 1e5, 200)) {
            const double m = std::abs(tf->eval_jw(om));
            EXPECT_TRUE(std::isfinite(m));
        }
    }
}

TEST(OperatingPoint, LosslessLimitMatchesIdealRatio) {
    ConverterParams p = loopshaper::prototype_params();
    p.r_l = p.r_s = p.r_c = 0.0;
    const auto op = loopshaper::dc_operating_point(p);
    EXPECT_NEAR(op.U, 1.0 - 46.0 / 100.0, 1e-9);
    EXPECT_NEAR(op.V_c, 100.0, 1e-12);
}

TEST(OperatingPoint, MeasuredParametersPinned) {
    const auto op = loopshaper::dc_operating_point(loopshaper::prototype_params());
    EXPECT_GT(op.U, 0.54);
    EXPECT_LT(op.U, 0.58);
    // Pinned regression values (Newton solve of the averaged equilibrium).
    EXPECT_NEAR(op.U, 0.553547, 1e-5);
    EXPECT_NEAR(op.I_L, 100.0 / (2.0 * (1.0 - op.U) * 50.0), 1e-12);
}

TEST(OperatingPoint, BuckRequestRejected) {
    ConverterParams p = loopshaper::prototype_params();
    p.v_o = 40.0;
    EXPECT_THROW(loopshaper::dc_operating_point(p), loopshaper::NoEquilibrium);
}

TEST(MathModels, LimitCaseRtot) {
    ConverterParams p = loopshaper::prototype_params();
    p.r_c = 0.0;
    // R_tot collapses to R_o when the ESR vanishes.
    EXPECT_DOUBLE_EQ(p.R_o + p.r_c, p.R_o);
}

TEST(MathModels, RhpZeroAndSignStructure) {
    const ConverterParams p = loopshaper::prototype_params();
    const auto op = loopshaper::dc_operating_point(p);
    const auto m = loopshaper::math_models(p, op);
    EXPECT_EQ(m.G_m.num.degree(), 2);
    EXPECT_EQ(m.G_m.den.degree(), 2);
    EXPECT_EQ(m.G_vm.den.degree(), 2);
    EXPECT_EQ(m.G_im.den.degree(), 2);
    // One RHP zero; negative high-frequency coefficient.
    const auto zs = loopshaper::roots(m.G_m.num);
    int rhp = 0;
    for (const auto& z : zs) rhp += (z.real() > 0.0) ? 1 : 0;
    EXPECT_EQ(rhp, 1);
    EXPECT_LT(m.G_m.num.leading(), 0.0);
}

TEST(MathModels, MagnitudeNearIdentifiedModelAtMidBand) {
    const ConverterParams p = loopshaper::prototype_params();
    const auto op = loopshaper::dc_operating_point(p);
    const auto m = loopshaper::math_models(p, op);
    const auto ps = loopshaper::identified_plant_set();
    const double g_math = std::abs(m.G_m.eval_jw(1e3));
    const double g_ident = std::abs(ps.G.eval_jw(1e3));
    const double db = 20.0 * std::log10(g_math / g_ident);
    EXPECT_LT(std::abs(db), 3.0);
}

TEST(MathModels, DenominatorAsymmetryAsPrinted) {
    // The duty-to-output denominator carries (U-1)-scaled s^2/s groups and
    // the 2*R_o*r_c cross term; the disturbance denominators use 2*r_c.
    const ConverterParams p = loopshaper::prototype_params();
    const auto op = loopshaper::dc_operating_point(p);
    const auto m = loopshaper::math_models(p, op);
    const double s2_gm = m.G_m.den[2];
    const double s2_gvm = m.G_vm.den[2];
    EXPECT_NE(s2_gm, s2_gvm);
    EXPECT_DOUBLE_EQ(s2_gvm, p.Co * p.L_mean() * (p.R_o * p.R_o + 2.0 * p.r_c + p.r_c * p.r_c));
    EXPECT_DOUBLE_EQ(s2_gm,
                     (op.U - 1.0) * p.Co * p.L_mean() * (p.R_o * p.R_o + 2.0 * p.R_o * p.r_c + p.r_c * p.r_c));
    EXPECT_EQ(m.G_vm.den.coeffs(), m.G_im.den.coeffs());
}
