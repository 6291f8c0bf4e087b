#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "atmpc/errors.hpp"

namespace atmpc {

/// Convex quadratic program
///   minimize    1/2 x' Hq x + g' x
///   subject to  Aineq x <= bineq,  Aeq x = beq.
/// Hq must be symmetric positive semidefinite.
struct QuadProgram {
    Eigen::MatrixXd Hq;
    Eigen::VectorXd g;
    Eigen::MatrixXd Aineq;
    Eigen::VectorXd bineq;
    Eigen::MatrixXd Aeq;
    Eigen::VectorXd beq;

    Eigen::Index num_vars() const { return g.size(); }

    void validate() const {
        const Eigen::Index n = num_vars();
        if (Hq.rows() != n || Hq.cols() != n)
            throw DimensionMismatch("Hq must be n x n");
        if ((Hq - Hq.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Hq.cwiseAbs().maxCoeff()))
            throw InvalidProgram("Hq not symmetric within 1e-12");
        if (Aineq.rows() != bineq.size() || (Aineq.rows() > 0 && Aineq.cols() != n))
            throw DimensionMismatch("Aineq/bineq");
        if (Aeq.rows() != beq.size() || (Aeq.rows() > 0 && Aeq.cols() != n))
            throw DimensionMismatch("Aeq/beq");
        if (n > 0) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hq);
            if (es.eigenvalues().minCoeff() < -1e-10)
                throw InvalidProgram("Hq has eigenvalue below -1e-10; not PSD");
        }
    }
};

enum class QpStatus { Optimal, Infeasible, Unbounded };

struct QpSolution {
    Eigen::VectorXd x;
    double objective = 0.0;
    Eigen::VectorXd duals_ineq;
    Eigen::VectorXd duals_eq;
    QpStatus status = QpStatus::Optimal;
    // solve metadata
    bool regularized = false;  ///< true if a null-space regularization was applied to Hq
    double regularization = 0.0;
    int iterations = 0;
    Eigen::VectorXd ray;  ///< unbounded descent direction when status == Unbounded
};

struct QpOptions {
    int max_iterations = 0;       ///< 0: default cap 10 * (#vars + #constraints)
    double reg = 1e-9;            ///< null-space regularization added to semidefinite Hq
    double feas_tol = 1e-9;       ///< working feasibility tolerance
    bool check_kkt = true;        ///< validate the KKT certificate after an Optimal result
};

struct KktResiduals {
    double primal = 0.0;      ///< max constraint violation
    double dual = 0.0;        ///< stationarity residual, inf-norm
    double comp_slack = 0.0;  ///< max |lambda_i * (A_i x - b_i)|
    double dual_sign = 0.0;   ///< most negative inequality multiplier (0 if all >= 0)
};

/// Independent KKT residual evaluation; intentionally does not share any state
/// with the solvers below.
inline KktResiduals kkt_residuals(const QuadProgram& p, const QpSolution& s) {
    KktResiduals r;
    if (p.Aineq.rows() > 0) {
        Eigen::VectorXd viol = p.Aineq * s.x - p.bineq;
        r.primal = std::max(r.primal, viol.maxCoeff());
        for (Eigen::Index i = 0; i < viol.size(); ++i)
            r.comp_slack = std::max(r.comp_slack, std::abs(s.duals_ineq(i) * viol(i)));
        r.dual_sign = std::min(0.0, s.duals_ineq.size() ? s.duals_ineq.minCoeff() : 0.0);
    }
    if (p.Aeq.rows() > 0)
        r.primal = std::max(r.primal, (p.Aeq * s.x - p.beq).cwiseAbs().maxCoeff());
    Eigen::VectorXd stat = p.g;
    if (p.Hq.size() > 0) stat += p.Hq * s.x;
    if (p.Aineq.rows() > 0) stat += p.Aineq.transpose() * s.duals_ineq;
    if (p.Aeq.rows() > 0) stat += p.Aeq.transpose() * s.duals_eq;
    r.dual = stat.size() ? stat.cwiseAbs().maxCoeff() : 0.0;
    return r;
}

namespace detail {

inline int default_cap(Eigen::Index nv, Eigen::Index nc, int requested) {
    if (requested > 0) return requested;
    return static_cast<int>(10 * (nv + nc) + 100);
}

// ---------------------------------------------------------------------------
// Primal active-set LP:  min g'x  s.t.  A x <= b,  E x = d.
// Dimensions here are small (polytope support/pruning problems), so each
// iteration refactors the working-set matrix from scratch.
// ---------------------------------------------------------------------------
struct LpCore {
    QpStatus status = QpStatus::Optimal;
    Eigen::VectorXd x;
    Eigen::VectorXd lam;  // inequality duals, full length
    Eigen::VectorXd nu;   // equality duals
    Eigen::VectorXd ray;
    int iterations = 0;
};

inline LpCore lp_active_set(const Eigen::VectorXd& g, const Eigen::MatrixXd& A,
                            const Eigen::VectorXd& b, const Eigen::MatrixXd& E,
                            const Eigen::VectorXd& d, Eigen::VectorXd x, int cap,
                            double tol) {
    const Eigen::Index n = g.size();
    const Eigen::Index m = A.rows();
    const Eigen::Index p = E.rows();
    LpCore out;
    std::vector<Eigen::Index> work;  // working inequality rows
    const double dir_tol = 1e-11 * (1.0 + g.cwiseAbs().sum());

    for (out.iterations = 0; out.iterations < cap; ++out.iterations) {
        const Eigen::Index k = p + static_cast<Eigen::Index>(work.size());
        Eigen::MatrixXd M(k, n);
        if (p > 0) M.topRows(p) = E;
        for (size_t j = 0; j < work.size(); ++j) M.row(p + j) = A.row(work[j]);

        Eigen::VectorXd dir;
        Eigen::VectorXd y;
        if (k > 0) {
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M.transpose());
            y = cod.solve(-g);
            dir = -g - M.transpose() * y;
        } else {
            dir = -g;
        }

        if (dir.cwiseAbs().maxCoeff() > dir_tol) {
            // Ratio test against rows not in the working set.
            double tstar = std::numeric_limits<double>::infinity();
            Eigen::Index blocking = -1;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (std::find(work.begin(), work.end(), i) != work.end()) continue;
                const double ad = A.row(i).dot(dir);
                if (ad > tol) {
                    const double resid = std::max(b(i) - A.row(i).dot(x), 0.0);
                    const double t = resid / ad;
                    if (t < tstar - 1e-14) {
                        tstar = t;
                        blocking = i;
                    }
                }
            }
            if (blocking < 0) {
                out.status = QpStatus::Unbounded;
                out.x = x;
                out.ray = dir;
                return out;
            }
            x += tstar * dir;
            work.push_back(blocking);
        } else {
            // Stationary on the working set; check multiplier signs.
            Eigen::Index drop = -1;
            for (size_t j = 0; j < work.size(); ++j) {
                if (y(p + j) < -tol) {  // Bland-style: smallest working-set position
                    drop = static_cast<Eigen::Index>(j);
                    break;
                }
            }
            if (drop < 0) {
                out.status = QpStatus::Optimal;
                out.x = x;
                out.lam = Eigen::VectorXd::Zero(m);
                for (size_t j = 0; j < work.size(); ++j) out.lam(work[j]) = std::max(y(p + j), 0.0);
                out.nu = p > 0 ? Eigen::VectorXd(y.head(p)) : Eigen::VectorXd();
                return out;
            }
            work.erase(work.begin() + drop);
        }
    }
    throw MaxIterations("LP active set");
}

}  // namespace detail

/// Linear program  min g'x  s.t.  Aineq x <= bineq, Aeq x = beq.
/// Phase-1 constructs a feasible point; Infeasible and Unbounded are legal verdicts.
inline QpSolution solve_lp(const Eigen::VectorXd& g, const Eigen::MatrixXd& Aineq,
                           const Eigen::VectorXd& bineq, const Eigen::MatrixXd& Aeq,
                           const Eigen::VectorXd& beq, const QpOptions& opt = {}) {
    const Eigen::Index n = g.size();
    const Eigen::Index m = Aineq.rows();
    const Eigen::Index p = Aeq.rows();
    const int cap = detail::default_cap(n, m + p, opt.max_iterations);

    QpSolution sol;
    sol.duals_ineq = Eigen::VectorXd::Zero(m);
    sol.duals_eq = Eigen::VectorXd::Zero(p);

    // Phase 1: min s  s.t.  Ax - s <= b, |Ex - d| <= s, s >= -1, from x = 0.
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    double worst = 0.0;
    if (m > 0) worst = std::max(worst, (Aineq * x0 - bineq).maxCoeff());
    if (p > 0) worst = std::max(worst, (Aeq * x0 - beq).cwiseAbs().maxCoeff());
    if (worst > opt.feas_tol) {
        const Eigen::Index rows = m + 2 * p + 1;
        Eigen::MatrixXd A1(rows, n + 1);
        Eigen::VectorXd b1(rows);
        A1.setZero();
        if (m > 0) {
            A1.topLeftCorner(m, n) = Aineq;
            A1.col(n).head(m).setConstant(-1.0);
            b1.head(m) = bineq;
        }
        if (p > 0) {
            A1.block(m, 0, p, n) = Aeq;
            A1.col(n).segment(m, p).setConstant(-1.0);
            b1.segment(m, p) = beq;
            A1.block(m + p, 0, p, n) = -Aeq;
            A1.col(n).segment(m + p, p).setConstant(-1.0);
            b1.segment(m + p, p) = -beq;
        }
        A1.row(rows - 1).setZero();
        A1(rows - 1, n) = -1.0;
        b1(rows - 1) = 1.0;
        Eigen::VectorXd g1 = Eigen::VectorXd::Zero(n + 1);
        g1(n) = 1.0;
        Eigen::VectorXd start(n + 1);
        start.head(n) = x0;
        start(n) = worst + 1.0;
        detail::LpCore ph1 = detail::lp_active_set(g1, A1, b1, Eigen::MatrixXd(0, n + 1),
                                                   Eigen::VectorXd(), start, cap, opt.feas_tol);
        sol.iterations += ph1.iterations;
        if (ph1.x(n) > 1e-8) {
            sol.status = QpStatus::Infeasible;
            sol.objective = std::numeric_limits<double>::quiet_NaN();
            return sol;
        }
        x0 = ph1.x.head(n);
    }

    detail::LpCore core = detail::lp_active_set(g, Aineq, bineq, Aeq, beq, x0,
                                                cap, opt.feas_tol);
    sol.iterations += core.iterations;
    sol.status = core.status;
    sol.x = core.x;
    if (core.status == QpStatus::Unbounded) {
        sol.ray = core.ray;
        sol.objective = -std::numeric_limits<double>::infinity();
        return sol;
    }
    sol.objective = g.dot(core.x);
    sol.duals_ineq = core.lam;
    sol.duals_eq = core.nu;
    return sol;
}

namespace detail {

// ---------------------------------------------------------------------------
// Goldfarb-Idnani dual active-set method for strictly convex QPs.
// Equality constraints are inserted first and never leave the active set.
// Infeasibility is certified by an unbounded dual step (Farkas direction).
// ---------------------------------------------------------------------------
class GoldfarbIdnani {
  public:
    GoldfarbIdnani(const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                   const Eigen::MatrixXd& Ce, const Eigen::VectorXd& be,
                   const Eigen::MatrixXd& Ci, const Eigen::VectorXd& bi, int cap)
        : G_(G), g_(g), Ce_(Ce), be_(be), Ci_(Ci), bi_(bi), cap_(cap),
          n_(g.size()), p_(Ce.rows()), m_(Ci.rows()) {}

    QpSolution run() {
        QpSolution sol;
        sol.duals_ineq = Eigen::VectorXd::Zero(m_);
        sol.duals_eq = Eigen::VectorXd::Zero(p_);

        Eigen::LLT<Eigen::MatrixXd> llt(G_);
        if (llt.info() != Eigen::Success)
            throw SolverNumericalError("Cholesky of regularized Hessian failed");
        J_ = llt.matrixU().solve(Eigen::MatrixXd::Identity(n_, n_));  // J = L^-T
        R_.setZero(n_, n_);
        Rnorm_ = 1.0;
        q_ = 0;
        active_.assign(n_ + 1, -1);
        u_.setZero(n_ + 1);

        x_ = -llt.solve(g_);

        d_.resize(n_);
        z_.resize(n_);
        r_.resize(n_);
        np_.resize(n_);

        // equality constraints first
        for (Eigen::Index i = 0; i < p_; ++i) {
            np_ = -Ce_.row(i).transpose();
            compute_step_direction();
            const double znp = z_.dot(np_);
            const double resid = be_(i) - Ce_.row(i).dot(x_);  // want 0
            if (std::abs(znp) <= 1e-14 * (1.0 + np_.squaredNorm())) {
                // normal depends linearly on the active set
                if (std::abs(resid) > 1e-8) {
                    sol.status = QpStatus::Infeasible;
                    return finish(sol);
                }
                continue;  // consistent duplicate; skip
            }
            const double t2 = -resid / znp;
            x_ += t2 * z_;
            u_.head(q_) -= t2 * r_.head(q_);
            u_(q_) = t2;
            if (!add_constraint()) throw SolverNumericalError("dependent equality added");
            active_[q_ - 1] = static_cast<int>(-(i + 1));  // negative id marks equality
        }

        int iters = 0;
        Eigen::Index ip = -1;
        double u_plus = 0.0;
        bool need_new_constraint = true;
        while (true) {
            if (++iters > cap_) throw MaxIterations("Goldfarb-Idnani QP");
            if (need_new_constraint) {
                // most violated inequality
                double smin = -violation_tol();
                ip = -1;
                for (Eigen::Index i = 0; i < m_; ++i) {
                    if (is_active(i)) continue;
                    const double s = bi_(i) - Ci_.row(i).dot(x_);
                    if (s < smin) {
                        smin = s;
                        ip = i;
                    }
                }
                if (ip < 0) {
                    sol.status = QpStatus::Optimal;
                    sol.iterations = iters;
                    return finish(sol);
                }
                np_ = -Ci_.row(ip).transpose();
                u_plus = 0.0;
            }
            need_new_constraint = false;

            compute_step_direction();
            // partial step length (dual space)
            double t1 = std::numeric_limits<double>::infinity();
            Eigen::Index drop_pos = -1;
            for (Eigen::Index j = 0; j < q_; ++j) {
                if (active_[j] < 0) continue;  // equalities never leave
                if (r_(j) > 1e-12) {
                    const double t = u_(j) / r_(j);
                    if (t < t1) {
                        t1 = t;
                        drop_pos = j;
                    }
                }
            }
            // full step length (primal space)
            const double znp = z_.dot(np_);
            double t2 = std::numeric_limits<double>::infinity();
            const double s_ip = bi_(ip) - Ci_.row(ip).dot(x_);
            if (znp > 1e-14 * (1.0 + np_.squaredNorm())) t2 = -s_ip / znp;

            const double t = std::min(t1, t2);
            if (!std::isfinite(t)) {
                // constraint normal lies in the cone of active normals: Farkas
                sol.status = QpStatus::Infeasible;
                sol.iterations = iters;
                return finish(sol);
            }

            if (!std::isfinite(t2)) {
                // dual-only step; drop the blocking constraint and retry
                u_.head(q_) -= t * r_.head(q_);
                u_plus += t;
                delete_constraint(drop_pos);
                continue;
            }

            x_ += t * z_;
            u_.head(q_) -= t * r_.head(q_);
            u_plus += t;

            if (t == t2) {
                u_(q_) = u_plus;
                if (!add_constraint()) throw SolverNumericalError("dependent inequality added");
                active_[q_ - 1] = static_cast<int>(ip);
                need_new_constraint = true;
            } else {
                delete_constraint(drop_pos);
                // same target constraint, recompute with updated active set
            }
        }
    }

  private:
    double violation_tol() const {
        const double bscale = bi_.size() > 0 ? bi_.cwiseAbs().maxCoeff() : 0.0;
        return 1e-9 * (1.0 + bscale);
    }

    bool is_active(Eigen::Index ineq_row) const {
        for (Eigen::Index j = 0; j < q_; ++j)
            if (active_[j] == static_cast<int>(ineq_row)) return true;
        return false;
    }

    // d = J' np ; z = J2 d2 ; r = R^-1 d1
    void compute_step_direction() {
        d_ = J_.transpose() * np_;
        z_ = J_.rightCols(n_ - q_) * d_.tail(n_ - q_);
        if (q_ > 0)
            r_.head(q_) = R_.topLeftCorner(q_, q_).triangularView<Eigen::Upper>().solve(d_.head(q_));
    }

    bool add_constraint() {
        // rotate d[q+1..n-1] into d[q] with Givens rotations applied to J columns
        for (Eigen::Index j = n_ - 1; j > q_; --j) {
            double cc = d_(j - 1), ss = d_(j);
            double h = std::hypot(cc, ss);
            if (h < 1e-300) continue;
            d_(j - 1) = h;
            d_(j) = 0.0;
            const double c = cc / h, s = ss / h;
            Eigen::VectorXd t1 = J_.col(j - 1), t2 = J_.col(j);
            J_.col(j - 1) = c * t1 + s * t2;
            J_.col(j) = -s * t1 + c * t2;
        }
        ++q_;
        R_.col(q_ - 1).head(q_) = d_.head(q_);
        Rnorm_ = std::max(Rnorm_, std::abs(d_(q_ - 1)));
        return std::abs(d_(q_ - 1)) > 1e-13 * Rnorm_;
    }

    void delete_constraint(Eigen::Index pos) {
        // shift out column `pos`, re-triangularize R, carry rotations into J
        for (Eigen::Index j = pos; j < q_ - 1; ++j) {
            active_[j] = active_[j + 1];
            u_(j) = u_(j + 1);
            R_.col(j).head(q_) = R_.col(j + 1).head(q_);
        }
        u_(q_ - 1) = 0.0;
        active_[q_ - 1] = -1;
        --q_;
        for (Eigen::Index j = pos; j < q_; ++j) {
            double cc = R_(j, j), ss = R_(j + 1, j);
            double h = std::hypot(cc, ss);
            if (h < 1e-300) continue;
            const double c = cc / h, s = ss / h;
            for (Eigen::Index k = j; k < q_; ++k) {
                const double a = R_(j, k), b = R_(j + 1, k);
                R_(j, k) = c * a + s * b;
                R_(j + 1, k) = -s * a + c * b;
            }
            Eigen::VectorXd t1 = J_.col(j), t2 = J_.col(j + 1);
            J_.col(j) = c * t1 + s * t2;
            J_.col(j + 1) = -s * t1 + c * t2;
        }
    }

    QpSolution finish(QpSolution sol) {
        sol.x = x_;
        for (Eigen::Index j = 0; j < q_; ++j) {
            if (active_[j] >= 0)
                sol.duals_ineq(active_[j]) = std::max(u_(j), 0.0);
            else
                sol.duals_eq(-(active_[j] + 1)) = u_(j);
        }
        return sol;
    }

    Eigen::MatrixXd G_;
    Eigen::VectorXd g_;
    Eigen::MatrixXd Ce_, Ci_;
    Eigen::VectorXd be_, bi_;
    int cap_;
    Eigen::Index n_, p_, m_, q_ = 0;
    Eigen::MatrixXd J_, R_;
    Eigen::VectorXd x_, d_, z_, r_, np_, u_;
    std::vector<int> active_;
    double Rnorm_ = 1.0;
};

}  // namespace detail

/// Solve a convex QP. Semidefinite Hessians are handled by adding `opt.reg`
/// on the null-space block (reported through the solution metadata); a zero
/// Hessian delegates to the LP path.
inline QpSolution solve_qp(const QuadProgram& p, const QpOptions& opt = {}) {
    p.validate();
    const Eigen::Index n = p.num_vars();
    const int cap = detail::default_cap(n, p.Aineq.rows() + p.Aeq.rows(), opt.max_iterations);

    if (p.Hq.size() == 0 || p.Hq.cwiseAbs().maxCoeff() == 0.0)
        return solve_lp(p.g, p.Aineq, p.bineq, p.Aeq, p.beq, opt);

    // Regularize the null-space block if Hq is not strictly definite.
    Eigen::MatrixXd G = p.Hq;
    bool regularized = false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.Hq);
    if (es.eigenvalues().minCoeff() < opt.reg) {
        Eigen::VectorXd lam = es.eigenvalues().cwiseMax(opt.reg);
        G = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
        regularized = true;
    }

    detail::GoldfarbIdnani gi(G, p.g, p.Aeq, p.beq, p.Aineq, p.bineq, cap);
    QpSolution sol = gi.run();
    sol.regularized = regularized;
    sol.regularization = regularized ? opt.reg : 0.0;
    if (sol.status == QpStatus::Optimal) {
        sol.objective = 0.5 * sol.x.dot(p.Hq * sol.x) + p.g.dot(sol.x);
        if (opt.check_kkt) {
            const KktResiduals kr = kkt_residuals(p, sol);
            const double scale = 1.0 + p.g.cwiseAbs().maxCoeff() +
                                 (p.bineq.size() ? p.bineq.cwiseAbs().maxCoeff() : 0.0);
            if (kr.primal > 1e-7 * scale || kr.dual > 1e-5 * scale || kr.comp_slack > 1e-5 * scale)
                throw SolverNumericalError("KKT certificate check failed after solve");
        }
    }
    return sol;
}

}  // namespace atmpc
