#include "loopshaper/rational.hpp"

#include <gtest/gtest.h>

#include <random>

#include "loopshaper/plant_models.hpp"
#include "support/oracles.hpp"

using loopshaper::Complex;
using loopshaper::CombineMode;
using loopshaper::Polynomial;
using loopshaper::RationalTF;

TEST(RationalTF, EvalFirstOrder) {
    RationalTF tf{Polynomial{1.0}, Polynomial{1.0, 1.0}};  // 1/(s+1)
    const Complex v = tf.eval_jw(1.0);
    EXPECT_NEAR(v.real(), 0.5, 1e-15);
    EXPECT_NEAR(v.imag(), -0.5, 1e-15);
}

TEST(RationalTF, IdentifiedPlantDcGain) {
    // Direct ratio of the constant terms of the identified plant.
    const auto ps = loopshaper::identified_plant_set();
    const Complex v = ps.G.eval_jw(1e-9);
    EXPECT_NEAR(v.real(), 1.811e7 / 9.129e4, 1e-6 * std::abs(v.real()));
    EXPECT_NEAR(std::abs(v), 198.38, 0.01);
}

TEST(RationalTF, ShapingWeightDcGain) {
    const auto w = loopshaper::paper_weights();
    EXPECT_NEAR(std::abs(w.WQ.eval_jw(1e-9)), 100.0, 1e-6);
}

TEST(RationalTF, PoleOnGridThrows) {
    EXPECT_THROW(RationalTF(Polynomial{1.0}, Polynomial{0.0}), loopshaper::DegenerateResult);
    RationalTF integ{Polynomial{1.0}, Polynomial{0.0, 1.0}};
    EXPECT_THROW(integ.eval_jw(0.0), loopshaper::PoleOnGrid);
}

TEST(Combine, SeriesKeepsCommonFactors) {
    RationalTF a{Polynomial{1.0}, Polynomial{1.0, 1.0}};
    RationalTF b{Polynomial{1.0, 1.0}, Polynomial{1.0}};
    RationalTF s = combine(a, b, CombineMode::kSeries);
    // (s+1)/(s+1), no cancellation
    EXPECT_EQ(s.num.degree(), 1);
    EXPECT_EQ(s.den.degree(), 1);
    EXPECT_DOUBLE_EQ(s.num[1], 1.0);
    EXPECT_DOUBLE_EQ(s.den[1], 1.0);
}

TEST(Combine, NegativeFeedbackZeroForward) {
    RationalTF K = RationalTF::zero();
    RationalTF G{Polynomial{3.0, 2.0}, Polynomial{1.0, 4.0, 1.0}};
    RationalTF cl = combine(K, G, CombineMode::kNegativeFeedback);
    EXPECT_TRUE(cl.is_zero());
}

TEST(Combine, ParallelHandAlgebra) {
    RationalTF a{Polynomial{1.0}, Polynomial{1.0, 1.0}};
    RationalTF b{Polynomial{1.0}, Polynomial{2.0, 1.0}};
    RationalTF p = combine(a, b, CombineMode::kParallel);
    // (2s+3)/(s^2+3s+2)
    EXPECT_DOUBLE_EQ(p.num[0], 3.0);
    EXPECT_DOUBLE_EQ(p.num[1], 2.0);
    EXPECT_DOUBLE_EQ(p.den[0], 2.0);
    EXPECT_DOUBLE_EQ(p.den[1], 3.0);
    EXPECT_DOUBLE_EQ(p.den[2], 1.0);
}

TEST(Combine, DegenerateFeedbackThrows) {
    // 1 + a*b == 0 identically: a = 1, b = -1.
    RationalTF a = RationalTF::constant(1.0);
    RationalTF b = RationalTF::constant(-1.0);
    EXPECT_THROW(combine(a, b, CombineMode::kNegativeFeedback), loopshaper::DegenerateResult);
}

TEST(RationalTF, ConjugateSymmetryProperty) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const RationalTF tf = oracles::random_proper_tf(rng, 6);
        for (double w : {0.1, 1.0, 37.5, 1234.0}) {
            const Complex plus = tf.eval(Complex(0.0, w));
            const Complex minus = tf.eval(Complex(0.0, -w));
            EXPECT_NEAR(minus.real(), plus.real(), 1e-12 * std::abs(plus));
            EXPECT_NEAR(minus.imag(), -plus.imag(), 1e-12 * std::abs(plus));
        }
    }
}
