#include "loopshaper/conic.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"

using loopshaper::AffineComplex;
using loopshaper::AffineScalar;
using loopshaper::ConeBlock;
using loopshaper::ConicProgram;
using loopshaper::reduce_hermitian_block;

TEST(ReduceHermitianBlock, BoundaryIsFeasible) {
    EXPECT_TRUE(reduce_hermitian_block(1.0, {{1.0, 0.0}}, 1.0));
}

TEST(ReduceHermitianBlock, ComplexEntryArithmetic) {
    // |1+1j|^2 = 2 > 1.9
    EXPECT_FALSE(reduce_hermitian_block(1.0, {{{1.0, 1.0}}}, 1.9));
    EXPECT_TRUE(reduce_hermitian_block(1.0, {{{1.0, 1.0}}}, 2.0));
}

TEST(ReduceHermitianBlock, NegativeCornersRejected) {
    EXPECT_FALSE(reduce_hermitian_block(-1.0, {}, 1.0));
    EXPECT_FALSE(reduce_hermitian_block(1.0, {}, -1e-12));
    EXPECT_FALSE(reduce_hermitian_block(0.0, {{{0.1, 0.0}}}, 5.0));
}

TEST(ReduceHermitianBlock, AgreesWithEigenvalueOracle) {
    std::mt19937_64 rng(515253);
    std::uniform_real_distribution<double> ua(-0.5, 3.0);
    std::uniform_real_distribution<double> ub(-2.0, 2.0);
    std::uniform_int_distribution<int> nb(1, 2);
    int disagreements = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const double a = ua(rng);
        const double g = ua(rng);
        std::vector<std::complex<double>> b(static_cast<std::size_t>(nb(rng)));
        for (auto& bk : b) bk = {ub(rng), ub(rng)};
        const bool reduced = reduce_hermitian_block(a, b, g);
        const bool oracle = oracles::psd_oracle(a, b, g, 1e-10);
        disagreements += (reduced != oracle) ? 1 : 0;
    }
    EXPECT_EQ(disagreements, 0);
}

TEST(Residuals, BoundaryAndViolation) {
    ConicProgram p(2);
    ConeBlock blk;
    blk.a = AffineScalar(2);
    blk.a.coeff << 1.0, 0.0;
    blk.g = AffineScalar(2);
    blk.g.coeff << 0.0, 1.0;
    AffineComplex b(2);
    b.re.constant = 1.0;
    blk.b.push_back(b);
    p.cones.push_back(blk);

    Eigen::VectorXd x(2);
    x << 1.0, 1.0;  // boundary: |1|^2 == 1*1
    EXPECT_DOUBLE_EQ(loopshaper::residuals(p, x), 0.0);

    x << -1.0, 1.0;  // a < 0
    EXPECT_GE(loopshaper::residuals(p, x), 1.0);
}

TEST(ConicProgram, JsonDumpRoundTripShape) {
    ConicProgram p(1);
    p.objective << 1.0;
    ConeBlock blk;
    blk.a = AffineScalar(1);
    blk.a.constant = 1.0;
    blk.g = AffineScalar(1);
    blk.g.coeff << 1.0;
    AffineComplex b(1);
    b.re.constant = 1.0;
    blk.b.push_back(b);
    p.cones.push_back(blk);
    const auto j = loopshaper::to_json(p);
    EXPECT_EQ(j.at("nvars").get<int>(), 1);
    EXPECT_EQ(j.at("cones").size(), 1u);
}
