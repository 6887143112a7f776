#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fblgp/controller.hpp"
#include "fblgp/plant.hpp"

namespace fblgp {
namespace {

Matrix benchmark_p_r0() {
    Matrix p(2, 2);
    p << 1.025, 0.025, 0.025, 0.02625;
    return p;
}

TEST(ComputeP, BenchmarkWithoutInputWeight) {
    ControllerConfig cfg = ControllerConfig::benchmark_defaults();
    cfg.r = 0.0;
    EXPECT_LT((compute_p(cfg) - benchmark_p_r0()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ComputeP, FirstOrder) {
    ControllerConfig cfg;
    cfg.gains = Vector::Constant(1, 2.0);
    cfg.q = Matrix::Constant(1, 1, 2.0);
    cfg.r = 0.0;
    EXPECT_NEAR(compute_p(cfg)(0, 0), 0.5, 1e-15);
}

TEST(ComputeP, WithInputWeightResidual) {
    const ControllerConfig cfg = ControllerConfig::benchmark_defaults();
    ASSERT_EQ(cfg.r, 0.01);
    const Matrix p = compute_p(cfg);
    EXPECT_LE(lyapunov_residual(closed_loop_matrix(cfg.gains), lyapunov_weight(cfg), p), 1e-10);
    EXPECT_GT(p.determinant(), 0.0);
}

TEST(ComputeP, NonHurwitzGainsRejected) {
    ControllerConfig cfg = ControllerConfig::benchmark_defaults();
    cfg.gains << -5.0, 20.0;
    EXPECT_THROW(compute_p(cfg), NotHurwitz);
}

TEST(RobustnessTerm, ZeroErrorGivesZero) {
    EXPECT_EQ(robustness_term(benchmark_p_r0(), Vector::Zero(2), 1.0, 0.01), 0.0);
}

TEST(RobustnessTerm, SaturatedAndLinearRegions) {
    // Pick e so that bᵀPe hits the requested value with P = [[1,0],[0,1]].
    const Matrix p = Matrix::Identity(2, 2);
    EXPECT_EQ(robustness_term(p, (Vector(2) << 0.0, 0.5).finished(), 1.0, 0.01), -1.0);
    EXPECT_EQ(robustness_term(p, (Vector(2) << 0.0, -0.5).finished(), 1.0, 0.01), 1.0);
    EXPECT_NEAR(robustness_term(p, (Vector(2) << 0.0, 0.005).finished(), 1.0, 0.01), -0.5, 1e-15);
}

TEST(RobustnessTerm, MagnitudeNeverExceedsGain) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 0.5);
    const Matrix p = benchmark_p_r0();
    for (int i = 0; i < 1000; ++i) {
        const Vector e = (Vector(2) << normal(rng), normal(rng)).finished();
        const double m = std::abs(normal(rng));
        EXPECT_LE(std::abs(robustness_term(p, e, m, 0.01)), m);
    }
}

TEST(ComputeControl, FeedbackLinearizationOnly) {
    ControllerConfig cfg = ControllerConfig::benchmark_defaults();
    cfg.rob_enabled = false;
    const ControlBreakdown u = compute_control(cfg, benchmark_p_r0(), benchmark::ideal_weights(),
                                               (Vector(3) << 0, 0, 1).finished(), Vector::Zero(2), 0.0, 0.0);
    EXPECT_EQ(u.u_fbl, -0.5);
    EXPECT_EQ(u.u_total, -0.5);
}

TEST(ComputeControl, BenchmarkInitialInstant) {
    ControllerConfig cfg = ControllerConfig::benchmark_defaults();
    const Vector e = (Vector(2) << 0.0, 0.5).finished();
    const ControlBreakdown u = compute_control(cfg, benchmark_p_r0(), benchmark::ideal_weights(),
                                               benchmark::regressor(Vector::Zero(2)), e, 0.0, 0.0);
    EXPECT_EQ(u.u_sfb, 10.0);
    EXPECT_NEAR(switching_value(benchmark_p_r0(), e), 0.013125, 1e-15);
    EXPECT_EQ(u.u_rob, -1.0);
    EXPECT_DOUBLE_EQ(u.u_total, 10.5);
}

TEST(ComputeControl, GpMeanEntersWithNegativeSign) {
    ControllerConfig off = ControllerConfig::benchmark_defaults();
    ControllerConfig on = off;
    on.gp_enabled = true;
    const Vector w = benchmark::mismatched_weights();
    const Vector phi = benchmark::regressor((Vector(2) << 0.2, -0.1).finished());
    const Vector e = (Vector(2) << 0.01, -0.02).finished();
    for (double g : {-1.3, 0.0, 0.42}) {
        const ControlBreakdown a = compute_control(off, benchmark_p_r0(), w, phi, e, 0.3, g);
        const ControlBreakdown b = compute_control(on, benchmark_p_r0(), w, phi, e, 0.3, g);
        EXPECT_EQ(a.u_gp, 0.0);
        EXPECT_DOUBLE_EQ(b.u_total - a.u_total, -g);
    }
}

TEST(ComputeControl, BreakdownIdentityIsExact) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal;
    ControllerConfig cfg = ControllerConfig::benchmark_defaults();
    cfg.gp_enabled = true;
    const Matrix p = compute_p(cfg);
    for (int i = 0; i < 200; ++i) {
        const Vector w = (Vector(3) << normal(rng), normal(rng), normal(rng)).finished();
        const Vector x = (Vector(2) << 0.3 * normal(rng), 0.3 * normal(rng)).finished();
        const Vector e = (Vector(2) << 0.05 * normal(rng), 0.05 * normal(rng)).finished();
        const ControlBreakdown u = compute_control(cfg, p, w, benchmark::regressor(x), e, normal(rng), normal(rng));
        EXPECT_EQ(u.u_total, u.u_fbl + u.u_sfb + u.u_ref - u.u_gp - u.u_rob);
    }
}

}  // namespace
}  // namespace fblgp
