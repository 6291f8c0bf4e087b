#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "atmpc/errors.hpp"
#include "atmpc/geometry.hpp"
#include "atmpc/model.hpp"
#include "atmpc/qp.hpp"

namespace atmpc {

struct EstimatorOptions {
    double slack = 1e-8;              ///< half-width of the equality band realizing Delta_k
    Eigen::Index facet_cap = 64;      ///< skip the membership update beyond this many facets
    bool project_onto_current = false;  ///< opt-in: project onto Theta_k instead of Theta_0
};

/// Point estimate, membership set and gain of the recursive estimator.
/// Immutable value; updates return new states.
struct EstimatorState {
    Eigen::VectorXd theta_hat;
    HPolytope Theta_k;
    double mu = 0.0;
    double cumulative_sq_error = 0.0;  ///< running sum of ||x_tilde_{1|k}||^2
};

/// Gain selection: mu = safety / sup_{(x,u) in Z} ||D(x,u)||^2. The sup is a
/// max over the vertices of Z because the norm of the affine map D is convex.
inline double compute_mu(const AffineParamSystem& sys, const ConstraintSet& zc,
                         double safety = 0.99) {
    if (safety <= 0.0 || safety >= 1.0) throw InvalidProgram("mu safety factor must be in (0,1)");
    const Eigen::Index n = sys.state_dim();
    const HPolytope Z = zc.as_polytope();
    const VertexList vl = enumerate_vertices(Z);
    double s = 0.0;
    for (const Eigen::VectorXd& v : vl.vertices) {
        const Eigen::VectorXd x = v.head(n);
        const Eigen::VectorXd u = v.tail(v.size() - n);
        const double nd = spectral_norm(regressor(sys, x, u));
        s = std::max(s, nd * nd);
    }
    if (s <= 1e-14) throw DegenerateRegressor();
    return safety / s;
}

/// Affine description of the set of parameters consistent with one observed
/// transition: Delta = { theta : Dmat theta = d }.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> delta_set(const AffineParamSystem& sys,
                                                             const Eigen::VectorXd& x_prev,
                                                             const Eigen::VectorXd& u_prev,
                                                             const Eigen::VectorXd& x_next) {
    Eigen::MatrixXd Dmat = regressor(sys, x_prev, u_prev);
    Eigen::VectorXd d = x_next - sys.A[0] * x_prev - sys.B[0] * u_prev;
    return {Dmat, d};
}

/// Intersect Theta_{k-1} with the band |Dmat theta - d| <= slack, prune, and
/// verify nonemptiness. If pruning still leaves more facets than the cap the
/// update is skipped (the previous set remains a valid outer approximation).
inline EstimatorState update_membership(const EstimatorState& state, const Eigen::MatrixXd& Dmat,
                                        const Eigen::VectorXd& d,
                                        const EstimatorOptions& opt = {}) {
    if (Dmat.cwiseAbs().maxCoeff() < 1e-14) {
        if (d.cwiseAbs().maxCoeff() > opt.slack + kFeasTol)
            throw EmptyMembershipSet("zero regressor with nonzero residual");
        return state;  // Delta_k = R^p
    }
    const Eigen::Index n = Dmat.rows();
    Eigen::MatrixXd Hband(2 * n, Dmat.cols());
    Eigen::VectorXd hband(2 * n);
    Hband << Dmat, -Dmat;
    hband << d.array() + opt.slack, (-d).array() + opt.slack;
    HPolytope cut = intersect(state.Theta_k, HPolytope(Hband, hband));
    if (is_empty(cut)) throw EmptyMembershipSet();
    HPolytope pruned = prune_redundant(cut);
    EstimatorState out = state;
    if (pruned.num_facets() <= opt.facet_cap) out.Theta_k = std::move(pruned);
    return out;
}

/// Projected-gradient point update
///   theta_est = theta_hat + mu D(x,u)' (x+ - xhat_pred),
///   theta_hat+ = Pi_Theta(theta_est),
/// with the projection computed as a QP onto the fixed initial set Theta0
/// (onto Theta_k when opted in).
inline EstimatorState point_update(const EstimatorState& state, const AffineParamSystem& sys,
                                   const Eigen::VectorXd& x_prev, const Eigen::VectorXd& u_prev,
                                   const Eigen::VectorXd& x_next, const HPolytope& Theta0,
                                   const EstimatorOptions& opt = {}) {
    auto [Ahat, Bhat] = assemble(sys, state.theta_hat);
    const Eigen::VectorXd xhat_pred = Ahat * x_prev + Bhat * u_prev;
    const Eigen::VectorXd innovation = x_next - xhat_pred;
    const Eigen::MatrixXd D = regressor(sys, x_prev, u_prev);
    const Eigen::VectorXd theta_est = state.theta_hat + state.mu * D.transpose() * innovation;

    const HPolytope& target = opt.project_onto_current ? state.Theta_k : Theta0;
    QuadProgram qp;
    const Eigen::Index p = theta_est.size();
    qp.Hq = 2.0 * Eigen::MatrixXd::Identity(p, p);
    qp.g = -2.0 * theta_est;
    qp.Aineq = target.H;
    qp.bineq = target.h;
    qp.Aeq.resize(0, p);
    qp.beq.resize(0);
    QpSolution sol = solve_qp(qp);
    if (sol.status != QpStatus::Optimal)
        throw SolverNumericalError("projection onto Theta failed");

    EstimatorState out = state;
    out.theta_hat = sol.x;
    out.cumulative_sq_error = state.cumulative_sq_error + innovation.squaredNorm();
    return out;
}

/// One-step (and by iteration, l-step) prediction error
/// (A(theta_true) - A(theta_hat)) x + (B(theta_true) - B(theta_hat)) u.
/// Both algebraic forms are evaluated and must agree.
inline Eigen::VectorXd one_step_prediction_error(const AffineParamSystem& sys,
                                                 const Eigen::VectorXd& theta_hat,
                                                 const Eigen::VectorXd& theta_true,
                                                 const Eigen::VectorXd& x,
                                                 const Eigen::VectorXd& u) {
    auto [At, Bt] = assemble(sys, theta_true);
    auto [Ah, Bh] = assemble(sys, theta_hat);
    const Eigen::VectorXd direct = (At - Ah) * x + (Bt - Bh) * u;
    const Eigen::VectorXd via_regressor = regressor(sys, x, u) * (theta_true - theta_hat);
    if ((direct - via_regressor).cwiseAbs().maxCoeff() >
        1e-9 * (1.0 + direct.cwiseAbs().maxCoeff()))
        throw SolverNumericalError("prediction error identity violated");
    return direct;
}

/// Geometric series sum (1 - a^l) / (1 - a), with the limit value l returned
/// near a = 1 to avoid cancellation.
inline double c1(int l, double a_norm) {
    if (l <= 0) return 0.0;
    if (std::abs(a_norm - 1.0) < 1e-9) return static_cast<double>(l);
    return (1.0 - std::pow(a_norm, l)) / (1.0 - a_norm);
}

/// Bound c1(l, ||A(theta_hat)||)^2 * ||theta_err||^2 / mu on the squared
/// l-step prediction error.
inline double prediction_error_bound(int l, const AffineParamSystem& sys,
                                     const Eigen::VectorXd& theta_hat, double theta_err_norm,
                                     double mu) {
    if (mu <= 0.0) throw InvalidProgram("mu must be positive");
    auto [Ah, Bh] = assemble(sys, theta_hat);
    (void)Bh;
    const double cl = c1(l, spectral_norm(Ah));
    return cl * cl * theta_err_norm * theta_err_norm / mu;
}

}  // namespace atmpc
