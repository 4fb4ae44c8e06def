#include "loopshaper/state_space.hpp"

#include <gtest/gtest.h>

#include <random>

#include "loopshaper/grid.hpp"
#include "loopshaper/plant_models.hpp"
#include "loopshaper/stability.hpp"
#include "support/oracles.hpp"

using loopshaper::Polynomial;
using loopshaper::RationalTF;
using loopshaper::StateSpace;

TEST(Realize, FirstOrderLag) {
    const StateSpace ss = loopshaper::realize(RationalTF{Polynomial{1.0}, Polynomial{1.0, 1.0}});
    ASSERT_EQ(ss.order(), 1);
    EXPECT_DOUBLE_EQ(ss.A(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(ss.B(0), 1.0);
    EXPECT_DOUBLE_EQ(ss.C(0), 1.0);
    EXPECT_DOUBLE_EQ(ss.D, 0.0);
}

TEST(Realize, BiproperPullsOutFeedthrough) {
    const StateSpace ss = loopshaper::realize(RationalTF{Polynomial{2.0, 1.0}, Polynomial{1.0, 1.0}});
    ASSERT_EQ(ss.order(), 1);
    EXPECT_DOUBLE_EQ(ss.D, 1.0);
    EXPECT_DOUBLE_EQ(ss.C(0), 1.0);  // remainder 1/(s+1)
}

TEST(Realize, ImproperThrows) {
    EXPECT_THROW(loopshaper::realize(RationalTF{Polynomial{0.0, 0.0, 1.0}, Polynomial{1.0, 1.0}}),
                 loopshaper::ImproperTransferFunction);
}

TEST(Realize, EvalConsistencyProperty) {
    std::mt19937_64 rng(321);
    const auto grid = loopshaper::make_grid(1e-1, 1e4, 50);
    for (int trial = 0; trial < 60; ++trial) {
        const RationalTF tf = oracles::random_proper_tf(rng, 6);
        const StateSpace ss = loopshaper::realize(tf);
        for (double w : grid) {
            const auto direct = tf.eval_jw(w);
            const auto via_ss = ss.eval_jw(w);
            EXPECT_LE(std::abs(direct - via_ss), 1e-9 * (1.0 + std::abs(direct)));
        }
    }
}

TEST(Realize, DobCompositeHasDirectFeedthrough) {
    // Q * G_mp^{-1} has relative degree zero; its realization must carry a
    // nonzero D and match direct evaluation on a grid.
    const auto pc = loopshaper::paper_controllers();
    const auto plants = loopshaper::identified_plant_set();
    const RationalTF g_mp = loopshaper::minimum_phase_reflect(plants.G);
    const RationalTF composite = pc.Q * g_mp.inverse();
    ASSERT_TRUE(composite.proper());
    EXPECT_EQ(composite.relative_degree(), 0);
    const StateSpace ss = loopshaper::realize(composite);
    EXPECT_NE(ss.D, 0.0);
    EXPECT_NEAR(ss.D, 98.77 / 74.79, 1e-9);
    for (double w : loopshaper::make_grid(1e0, 1e6, 50)) {
        const auto direct = composite.eval_jw(w);
        EXPECT_LE(std::abs(direct - ss.eval_jw(w)), 1e-9 * (1.0 + std::abs(direct)));
    }
}
