#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "atmpc/model.hpp"

using namespace atmpc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// The published second-order example system.
AffineParamSystem sec4_system() {
    AffineParamSystem sys;
    MatrixXd A0(2, 2), A1 = MatrixXd::Zero(2, 2), A2(2, 2), A3(2, 2);
    A0 << 0.9, 0.3, 0, -0.3;
    A2 << 0.143, -0.025, -0.041, 0.298;
    A3 << 0.282, 0.134, 0.283, -0.242;
    MatrixXd B0(2, 1), B1(2, 1), B2(2, 1), B3 = MatrixXd::Zero(2, 1);
    B0 << 0.4, 0;
    B1 << 0.5, 0;
    B2 << -0.12, -0.30;
    sys.A = {A0, A1, A2, A3};
    sys.B = {B0, B1, B2, B3};
    sys.Theta = HPolytope::box(VectorXd::Zero(3), VectorXd::Constant(3, 0.75));
    return sys;
}

ConstraintSet sec4_constraints() {
    ConstraintSet zc;
    zc.F.resize(6, 2);
    zc.G.resize(6, 1);
    zc.F << 1.0 / 5, 0, -1.0 / 5, 0, 0, 1.0 / 1.5, 0, -1.0 / 5, 0, 0, 0, 0;
    zc.G << 0, 0, 0, 0, 1.0 / 6, -1.0 / 6;
    return zc;
}

}  // namespace

TEST(Model, AssembleAtSpecialPoints) {
    AffineParamSystem sys = sec4_system();
    auto [A, B] = assemble(sys, VectorXd::Zero(3));
    EXPECT_NEAR((A - sys.A[0]).cwiseAbs().maxCoeff(), 0.0, 1e-15);
    EXPECT_NEAR((B - sys.B[0]).cwiseAbs().maxCoeff(), 0.0, 1e-15);
    VectorXd e1 = VectorXd::Zero(3);
    e1(0) = 1.0;
    auto [A1, B1] = assemble(sys, e1);
    EXPECT_NEAR((A1 - (sys.A[0] + sys.A[1])).cwiseAbs().maxCoeff(), 0.0, 1e-15);
    EXPECT_NEAR((B1 - (sys.B[0] + sys.B[1])).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Model, AssembleTrueParameter) {
    AffineParamSystem sys = sec4_system();
    VectorXd theta_star(3);
    theta_star << 0.5, 0.5, 0.75;
    auto [A, B] = assemble(sys, theta_star);
    // independent summation
    MatrixXd Aref = sys.A[0] + 0.5 * sys.A[2] + 0.75 * sys.A[3];
    MatrixXd Bref = sys.B[0] + 0.5 * sys.B[1] + 0.5 * sys.B[2];
    EXPECT_NEAR((A - Aref).cwiseAbs().maxCoeff(), 0.0, 1e-14);
    EXPECT_NEAR((B - Bref).cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(Model, StepComposition) {
    AffineParamSystem sys = sec4_system();
    VectorXd theta_star(3);
    theta_star << 0.5, 0.5, 0.75;
    VectorXd x0(2);
    x0 << -3, -1;
    VectorXd u = VectorXd::Zero(1);
    EXPECT_NEAR(step(sys, theta_star, VectorXd::Zero(2), u).norm(), 0.0, 1e-15);
    EXPECT_NEAR((step(sys, VectorXd::Zero(3), x0, u) - sys.A[0] * x0).norm(), 0.0, 1e-14);
    auto [A, B] = assemble(sys, theta_star);
    EXPECT_NEAR((step(sys, theta_star, x0, u) - (A * x0 + B * u)).norm(), 0.0, 1e-14);
}

TEST(Model, RegressorColumnsAndIdentity) {
    AffineParamSystem sys = sec4_system();
    VectorXd x(2), u(1);
    x << -3, -1;
    u << 0.7;
    EXPECT_NEAR(regressor(sys, VectorXd::Zero(2), VectorXd::Zero(1)).norm(), 0.0, 1e-15);
    MatrixXd D = regressor(sys, x, u);
    for (int i = 0; i < 3; ++i)
        EXPECT_NEAR((D.col(i) - (sys.A[i + 1] * x + sys.B[i + 1] * u)).norm(), 0.0, 1e-14);
    EXPECT_NEAR((regressor(sys, 2 * x, 2 * u) - 2 * D).norm(), 0.0, 1e-13);

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        VectorXd th(3), xs(2), us(1);
        th << uni(rng), uni(rng), uni(rng);
        xs << 3 * uni(rng), 3 * uni(rng);
        us << 4 * uni(rng);
        VectorXd lhs = step(sys, th, xs, us);
        VectorXd rhs = sys.A[0] * xs + sys.B[0] * us + regressor(sys, xs, us) * th;
        EXPECT_NEAR((lhs - rhs).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    }
}

TEST(Model, ConstraintMembership) {
    ConstraintSet zc = sec4_constraints();
    zc.validate();
    VectorXd u0 = VectorXd::Zero(1);
    EXPECT_TRUE(in_constraints(zc, VectorXd::Zero(2), u0));
    VectorXd x(2);
    x << 5.0, 0.0;
    EXPECT_TRUE(in_constraints(zc, x, u0));
    x << 5.0 + 1e-6, 0.0;
    EXPECT_FALSE(in_constraints(zc, x, u0));
    x << 0.0, 1.5;
    EXPECT_TRUE(in_constraints(zc, x, u0));
    x << 0.0, 1.6;
    EXPECT_FALSE(in_constraints(zc, x, u0));
}

TEST(Model, UnboundedConstraintSetRejected) {
    ConstraintSet zc;
    zc.F.resize(2, 2);
    zc.F << 1, 0, -1, 0;  // x1 unconstrained in x2 and u unconstrained entirely
    zc.G = MatrixXd::Zero(2, 1);
    EXPECT_THROW(zc.validate(), UnboundedConstraintSet);
}

TEST(Model, StageCostValues) {
    StageCost sc;
    sc.Q = MatrixXd::Identity(2, 2);
    sc.R = MatrixXd::Identity(1, 1);
    sc.validate();
    EXPECT_EQ(stage_cost(sc, VectorXd::Zero(2), VectorXd::Zero(1)), 0.0);
    VectorXd x(2), u(1);
    x << 3, 4;
    u << 2;
    EXPECT_NEAR(stage_cost(sc, x, u), 29.0, 1e-12);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    MatrixXd W(2, 2);
    W << 1.3, 0.2, 0.2, 0.8;
    StageCost sc2{W, MatrixXd::Constant(1, 1, 0.5)};
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(W);
    const double lam_min = es.eigenvalues().minCoeff();
    for (int trial = 0; trial < 50; ++trial) {
        VectorXd xs(2), us(1);
        xs << uni(rng), uni(rng);
        us << uni(rng);
        const double c = stage_cost(sc2, xs, us);
        EXPECT_NEAR(c, xs.dot(W * xs) + 0.5 * us(0) * us(0), 1e-12);
        EXPECT_GE(c + 1e-12, lam_min * xs.squaredNorm());
    }
}

TEST(Model, StageCostRejectsSemidefiniteWeights) {
    StageCost sc;
    sc.Q = MatrixXd::Zero(2, 2);
    sc.R = MatrixXd::Identity(1, 1);
    EXPECT_THROW(sc.validate(), InvalidProgram);
}

TEST(Model, DimensionErrors) {
    AffineParamSystem sys = sec4_system();
    EXPECT_THROW(assemble(sys, VectorXd::Zero(2)), DimensionMismatch);
    EXPECT_THROW(step(sys, VectorXd::Zero(3), VectorXd::Zero(3), VectorXd::Zero(1)),
                 DimensionMismatch);
    EXPECT_THROW(regressor(sys, VectorXd::Zero(2), VectorXd::Zero(2)), DimensionMismatch);
}
