#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "atmpc/errors.hpp"
#include "atmpc/geometry.hpp"

namespace atmpc {

/// Uncertain linear system x+ = A(theta) x + B(theta) u with
/// (A(theta), B(theta)) = (A0, B0) + sum_i (Ai, Bi) [theta]_i, theta in Theta.
struct AffineParamSystem {
    std::vector<Eigen::MatrixXd> A;  ///< A0..Ap, each n x n
    std::vector<Eigen::MatrixXd> B;  ///< B0..Bp, each n x m
    HPolytope Theta;                 ///< parameter set in R^p

    Eigen::Index state_dim() const { return A.empty() ? 0 : A[0].rows(); }
    Eigen::Index input_dim() const { return B.empty() ? 0 : B[0].cols(); }
    Eigen::Index param_dim() const { return static_cast<Eigen::Index>(A.size()) - 1; }

    void validate() const {
        if (A.size() < 2 || A.size() != B.size())
            throw DimensionMismatch("need p >= 1 and matching A/B families");
        const Eigen::Index n = state_dim();
        const Eigen::Index m = input_dim();
        for (const auto& Ai : A)
            if (Ai.rows() != n || Ai.cols() != n) throw DimensionMismatch("A_i shape");
        for (const auto& Bi : B)
            if (Bi.rows() != n || Bi.cols() != m) throw DimensionMismatch("B_i shape");
        if (Theta.dim() != param_dim()) throw DimensionMismatch("Theta dim vs p");
        if (is_empty(Theta)) throw EmptyPolytope("Theta");
        for (Eigen::Index k = 0; k < Theta.dim(); ++k) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(Theta.dim());
            e(k) = 1.0;
            support(Theta, e);  // throws UnboundedPolytope if Theta is unbounded
            support(Theta, -e);
        }
    }
};

/// (A(theta), B(theta)) for a given parameter vector.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> assemble(const AffineParamSystem& sys,
                                                            const Eigen::VectorXd& theta) {
    if (theta.size() != sys.param_dim()) throw DimensionMismatch("assemble: theta length");
    Eigen::MatrixXd A = sys.A[0];
    Eigen::MatrixXd B = sys.B[0];
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        A += theta(i) * sys.A[i + 1];
        B += theta(i) * sys.B[i + 1];
    }
    return {A, B};
}

inline Eigen::VectorXd step(const AffineParamSystem& sys, const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    if (x.size() != sys.state_dim() || u.size() != sys.input_dim())
        throw DimensionMismatch("step: x/u length");
    auto [A, B] = assemble(sys, theta);
    return A * x + B * u;
}

/// Regressor D(x,u) with columns A_i x + B_i u, i = 1..p, so that
/// A(theta) x + B(theta) u = A0 x + B0 u + D(x,u) theta.
inline Eigen::MatrixXd regressor(const AffineParamSystem& sys, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& u) {
    if (x.size() != sys.state_dim() || u.size() != sys.input_dim())
        throw DimensionMismatch("regressor: x/u length");
    Eigen::MatrixXd D(sys.state_dim(), sys.param_dim());
    for (Eigen::Index i = 0; i < sys.param_dim(); ++i)
        D.col(i) = sys.A[i + 1] * x + sys.B[i + 1] * u;
    return D;
}

/// Constraint set Z = {(x,u) : F x + G u <= 1}; must be bounded.
struct ConstraintSet {
    Eigen::MatrixXd F;
    Eigen::MatrixXd G;

    Eigen::Index num_rows() const { return F.rows(); }

    /// Z as a polytope over the stacked (x,u) space.
    HPolytope as_polytope() const {
        Eigen::MatrixXd H(F.rows(), F.cols() + G.cols());
        H << F, G;
        return HPolytope(H, Eigen::VectorXd::Ones(F.rows()));
    }

    void validate() const {
        if (F.rows() != G.rows()) throw DimensionMismatch("F/G row counts");
        const HPolytope Z = as_polytope();
        for (Eigen::Index k = 0; k < Z.dim(); ++k) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(Z.dim());
            e(k) = 1.0;
            try {
                support(Z, e);
                support(Z, -e);
            } catch (const UnboundedPolytope&) {
                throw UnboundedConstraintSet("while validating Z");
            }
        }
    }
};

inline bool in_constraints(const ConstraintSet& zc, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& u, double tol = kFeasTol) {
    return ((zc.F * x + zc.G * u).array() <= 1.0 + tol).all();
}

/// Stage cost ||x||_Q^2 + ||u||_R^2 with Q, R > 0.
struct StageCost {
    Eigen::MatrixXd Q;
    Eigen::MatrixXd R;

    void validate() const {
        auto check = [](const Eigen::MatrixXd& M, const char* name) {
            if (M.rows() != M.cols()) throw DimensionMismatch(name);
            if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + M.cwiseAbs().maxCoeff()))
                throw NotSymmetric(name);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
            if (es.eigenvalues().minCoeff() <= 1e-10)
                throw InvalidProgram(std::string(name) + " must be positive definite");
        };
        check(Q, "Q");
        check(R, "R");
    }
};

inline double stage_cost(const StageCost& sc, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return x.dot(sc.Q * x) + u.dot(sc.R * u);
}

/// Lightweight per-step record of a membership set.
struct MembershipSummary {
    Eigen::Index facets = 0;
    Eigen::Index vertex_count = 0;
    double chebyshev_radius = 0.0;
};

struct TrajectoryLog {
    std::vector<Eigen::VectorXd> states;            ///< x_0..x_T (one more than inputs)
    std::vector<Eigen::VectorXd> inputs;            ///< u_0..u_{T-1}
    std::vector<double> stage_costs;                ///< per-step ||x||_Q^2 + ||u||_R^2
    std::vector<Eigen::VectorXd> estimates;         ///< theta_hat_k
    std::vector<MembershipSummary> membership_sets;
    std::vector<double> values_VN;                  ///< V_N at each solved step
    bool converged = false;                         ///< ||x|| < x_tol reached
    bool truncated = false;                         ///< stopped at T_max instead
    double total_cost = 0.0;                        ///< sum of stage costs + terminal tail
    double tail_bound = 0.0;                        ///< x_T' P x_T added to the sum
};

}  // namespace atmpc
