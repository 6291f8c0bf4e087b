#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <vector>

#include "atmpc/errors.hpp"
#include "atmpc/qp.hpp"

namespace atmpc {

/// Feasibility/containment tolerance used by every set comparison.
inline constexpr double kFeasTol = 1e-8;

/// Halfspace-representation polytope { y : H y <= h }.
struct HPolytope {
    Eigen::MatrixXd H;
    Eigen::VectorXd h;

    HPolytope() = default;
    HPolytope(Eigen::MatrixXd H_, Eigen::VectorXd h_) : H(std::move(H_)), h(std::move(h_)) {
        if (H.rows() != h.size()) throw DimensionMismatch("HPolytope rows");
    }

    Eigen::Index dim() const { return H.cols(); }
    Eigen::Index num_facets() const { return H.rows(); }

    static HPolytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
        const Eigen::Index d = lo.size();
        if (hi.size() != d) throw DimensionMismatch("box bounds");
        Eigen::MatrixXd H(2 * d, d);
        Eigen::VectorXd h(2 * d);
        H.topRows(d) = Eigen::MatrixXd::Identity(d, d);
        H.bottomRows(d) = -Eigen::MatrixXd::Identity(d, d);
        h.head(d) = hi;
        h.tail(d) = -lo;
        return HPolytope(H, h);
    }

    static HPolytope centered_box(const Eigen::VectorXd& halfwidth) {
        return box(-halfwidth, halfwidth);
    }
};

struct VertexList {
    std::vector<Eigen::VectorXd> vertices;
};

/// Stack the facets of two polytopes over the same space.
inline HPolytope intersect(const HPolytope& a, const HPolytope& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("intersect");
    Eigen::MatrixXd H(a.num_facets() + b.num_facets(), a.dim());
    Eigen::VectorXd h(a.num_facets() + b.num_facets());
    H << a.H, b.H;
    h << a.h, b.h;
    return HPolytope(H, h);
}

/// max_{y in P} c'y via LP. Throws UnboundedPolytope / EmptyPolytope.
inline double support(const HPolytope& P, const Eigen::VectorXd& c) {
    QpSolution s = solve_lp(-c, P.H, P.h, Eigen::MatrixXd(0, P.dim()), Eigen::VectorXd());
    if (s.status == QpStatus::Infeasible) throw EmptyPolytope("in support()");
    if (s.status == QpStatus::Unbounded) throw UnboundedPolytope("in support()");
    return -s.objective;
}

inline bool is_empty(const HPolytope& P) {
    QpSolution s = solve_lp(Eigen::VectorXd::Zero(P.dim()), P.H, P.h,
                            Eigen::MatrixXd(0, P.dim()), Eigen::VectorXd());
    return s.status == QpStatus::Infeasible;
}

/// Center and radius of the largest inscribed ball.
inline std::pair<Eigen::VectorXd, double> chebyshev_center(const HPolytope& P) {
    const Eigen::Index d = P.dim();
    const Eigen::Index m = P.num_facets();
    Eigen::MatrixXd A(m, d + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        A.row(i).head(d) = P.H.row(i);
        A(i, d) = P.H.row(i).norm();
    }
    Eigen::VectorXd g = Eigen::VectorXd::Zero(d + 1);
    g(d) = -1.0;  // maximize radius
    QpSolution s = solve_lp(g, A, P.h, Eigen::MatrixXd(0, d + 1), Eigen::VectorXd());
    if (s.status == QpStatus::Infeasible) throw EmptyPolytope("in chebyshev_center()");
    if (s.status == QpStatus::Unbounded) throw UnboundedPolytope("in chebyshev_center()");
    return {s.x.head(d), s.x(d)};
}

/// true iff Q subseteq P, facet by facet through support functions.
inline bool contains(const HPolytope& P, const HPolytope& Q, double tol = kFeasTol) {
    for (Eigen::Index i = 0; i < P.num_facets(); ++i) {
        double sv;
        try {
            sv = support(Q, P.H.row(i).transpose());
        } catch (const UnboundedPolytope&) {
            return false;
        }
        if (sv > P.h(i) + tol) return false;
    }
    return true;
}

/// Remove facets implied by the others. Keeps the original row order of the
/// surviving facets, so repeated application is stable.
inline HPolytope prune_redundant(const HPolytope& P, double tol = 1e-9) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < P.num_facets(); ++i) keep.push_back(i);
    size_t pos = 0;
    while (pos < keep.size() && keep.size() > 1) {
        std::vector<Eigen::Index> rest;
        for (size_t j = 0; j < keep.size(); ++j)
            if (j != pos) rest.push_back(keep[j]);
        Eigen::MatrixXd Hr(rest.size(), P.dim());
        Eigen::VectorXd hr(rest.size());
        for (size_t j = 0; j < rest.size(); ++j) {
            Hr.row(j) = P.H.row(rest[j]);
            hr(j) = P.h(rest[j]);
        }
        const Eigen::Index i = keep[pos];
        QpSolution s = solve_lp(-P.H.row(i).transpose(), Hr, hr,
                                Eigen::MatrixXd(0, P.dim()), Eigen::VectorXd());
        const bool redundant =
            s.status == QpStatus::Optimal && -s.objective <= P.h(i) + tol;
        if (redundant)
            keep.erase(keep.begin() + pos);
        else
            ++pos;
    }
    Eigen::MatrixXd H(keep.size(), P.dim());
    Eigen::VectorXd h(keep.size());
    for (size_t j = 0; j < keep.size(); ++j) {
        H.row(j) = P.H.row(keep[j]);
        h(j) = P.h(keep[j]);
    }
    return HPolytope(H, h);
}

namespace detail {

// Vertex enumeration for a full-dimensional bounded polytope by incremental
// halfspace insertion (double description restricted to the pointed bounded
// case): start from an inflated bounding box and clip one facet at a time.
inline std::vector<Eigen::VectorXd> dd_full_dim(const Eigen::MatrixXd& Hin,
                                                const Eigen::VectorXd& hin,
                                                const Eigen::VectorXd& lo,
                                                const Eigen::VectorXd& hi) {
    const Eigen::Index d = Hin.cols();
    const double on_tol = 1e-10;

    // normalized, deduplicated facets
    Eigen::MatrixXd H(Hin.rows(), d);
    Eigen::VectorXd h(Hin.rows());
    Eigen::Index m = 0;
    for (Eigen::Index i = 0; i < Hin.rows(); ++i) {
        const double nrm = Hin.row(i).norm();
        if (nrm < 1e-14) {
            if (hin(i) < -kFeasTol) return {};  // 0'y <= negative: empty
            continue;
        }
        Eigen::RowVectorXd row = Hin.row(i) / nrm;
        const double rhs = hin(i) / nrm;
        bool dup = false;
        for (Eigen::Index j = 0; j < m && !dup; ++j)
            if ((H.row(j) - row).cwiseAbs().maxCoeff() < 1e-12 && rhs >= h(j) - 1e-12) dup = true;
        if (!dup) {
            H.row(m) = row;
            h(m) = rhs;
            ++m;
        }
    }
    H.conservativeResize(m, d);
    h.conservativeResize(m);

    // inflated box strictly containing the set
    Eigen::VectorXd c = 0.5 * (lo + hi);
    Eigen::VectorXd w = 0.625 * (hi - lo).cwiseMax(1e-6) + Eigen::VectorXd::Constant(d, 1e-6);
    Eigen::MatrixXd Hall(m + 2 * d, d);
    Eigen::VectorXd hall(m + 2 * d);
    Hall.topRows(m) = H;
    hall.head(m) = h;
    Hall.middleRows(m, d) = Eigen::MatrixXd::Identity(d, d);
    hall.segment(m, d) = c + w;
    Hall.bottomRows(d) = -Eigen::MatrixXd::Identity(d, d);
    hall.tail(d) = -(c - w);

    struct Vert {
        Eigen::VectorXd y;
        std::vector<int> act;  // active rows of Hall among those processed
    };
    auto recompute_act = [&](const Eigen::VectorXd& y, Eigen::Index upto) {
        std::vector<int> act;
        for (Eigen::Index r = 0; r < upto; ++r)
            if (std::abs(Hall.row(r).dot(y) - hall(r)) <= on_tol) act.push_back(static_cast<int>(r));
        for (Eigen::Index r = m; r < m + 2 * d; ++r)
            if (std::abs(Hall.row(r).dot(y) - hall(r)) <= on_tol) act.push_back(static_cast<int>(r));
        return act;
    };

    std::vector<Vert> verts;
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
        Vert v;
        v.y.resize(d);
        for (Eigen::Index k = 0; k < d; ++k) {
            const bool up = mask & (1u << k);
            v.y(k) = up ? c(k) + w(k) : c(k) - w(k);
            v.act.push_back(static_cast<int>(up ? m + k : m + d + k));
        }
        std::sort(v.act.begin(), v.act.end());
        verts.push_back(std::move(v));
    }

    std::vector<double> resid;
    for (Eigen::Index i = 0; i < m; ++i) {
        resid.resize(verts.size());
        bool any_pos = false;
        for (size_t k = 0; k < verts.size(); ++k) {
            resid[k] = H.row(i).dot(verts[k].y) - h(i);
            any_pos = any_pos || resid[k] > on_tol;
        }
        if (!any_pos) {
            for (size_t k = 0; k < verts.size(); ++k)
                if (std::abs(resid[k]) <= on_tol) verts[k].act.push_back(static_cast<int>(i));
            continue;
        }
        std::vector<Vert> next;
        for (size_t k = 0; k < verts.size(); ++k)
            if (resid[k] <= on_tol) {
                if (std::abs(resid[k]) <= on_tol) verts[k].act.push_back(static_cast<int>(i));
                next.push_back(verts[k]);
            }
        // new vertices on edges crossing facet i
        for (size_t a = 0; a < verts.size(); ++a) {
            if (resid[a] >= -on_tol) continue;  // need strictly inside
            for (size_t b = 0; b < verts.size(); ++b) {
                if (resid[b] <= on_tol) continue;  // need strictly outside
                std::vector<int> common;
                std::set_intersection(verts[a].act.begin(), verts[a].act.end(),
                                      verts[b].act.begin(), verts[b].act.end(),
                                      std::back_inserter(common));
                if (static_cast<Eigen::Index>(common.size()) < d - 1) continue;
                Eigen::MatrixXd M(common.size(), d);
                for (size_t r = 0; r < common.size(); ++r) M.row(r) = Hall.row(common[r]);
                Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
                qr.setThreshold(1e-9);
                if (qr.rank() != d - 1) continue;  // not an edge
                const double t = -resid[a] / (resid[b] - resid[a]);
                Vert nv;
                nv.y = verts[a].y + t * (verts[b].y - verts[a].y);
                nv.act = recompute_act(nv.y, i + 1);
                bool dup = false;
                for (const Vert& e : next)
                    if ((e.y - nv.y).cwiseAbs().maxCoeff() < 1e-11 * (1.0 + nv.y.cwiseAbs().maxCoeff())) {
                        dup = true;
                        break;
                    }
                if (!dup) next.push_back(std::move(nv));
            }
        }
        verts.swap(next);
        for (Vert& v : verts) std::sort(v.act.begin(), v.act.end());
        if (verts.empty()) return {};
    }

    // keep genuine vertices of the original set: feasible, with d independent
    // active facets among the original rows
    std::vector<Eigen::VectorXd> out;
    for (const Vert& v : verts) {
        if (m > 0 && (H * v.y - h).maxCoeff() > kFeasTol) continue;
        std::vector<int> orig;
        for (int r : v.act)
            if (r < m) orig.push_back(r);
        if (static_cast<Eigen::Index>(orig.size()) < d) continue;
        Eigen::MatrixXd M(orig.size(), d);
        for (size_t r = 0; r < orig.size(); ++r) M.row(r) = H.row(orig[r]);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
        qr.setThreshold(1e-9);
        if (qr.rank() != d) continue;
        bool dup = false;
        for (const Eigen::VectorXd& e : out)
            if ((e - v.y).cwiseAbs().maxCoeff() < 1e-11 * (1.0 + v.y.cwiseAbs().maxCoeff())) {
                dup = true;
                break;
            }
        if (!dup) out.push_back(v.y);
    }
    return out;
}

inline std::vector<Eigen::VectorXd> enumerate_points(const Eigen::MatrixXd& H,
                                                     const Eigen::VectorXd& h);

// Restrict to the affine hull {y : H_E y = h_E} and enumerate there.
inline std::vector<Eigen::VectorXd> enumerate_degenerate(
    const Eigen::MatrixXd& H, const Eigen::VectorXd& h, const std::vector<Eigen::Index>& eq) {
    const Eigen::Index d = H.cols();
    Eigen::MatrixXd He(eq.size(), d);
    Eigen::VectorXd he(eq.size());
    for (size_t j = 0; j < eq.size(); ++j) {
        He.row(j) = H.row(eq[j]);
        he(j) = h(eq[j]);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(He, Eigen::ComputeFullV | Eigen::ComputeThinU);
    svd.setThreshold(1e-10);
    const Eigen::Index rank = svd.rank();
    Eigen::VectorXd y0 = svd.solve(he);
    if (rank >= d) return {y0};  // affine hull is a single point
    Eigen::MatrixXd N = svd.matrixV().rightCols(d - rank);

    std::vector<Eigen::Index> rest;
    for (Eigen::Index i = 0; i < H.rows(); ++i)
        if (std::find(eq.begin(), eq.end(), i) == eq.end()) rest.push_back(i);
    Eigen::MatrixXd Hr(rest.size(), d - rank);
    Eigen::VectorXd hr(rest.size());
    Eigen::Index mr = 0;
    for (size_t j = 0; j < rest.size(); ++j) {
        Eigen::RowVectorXd row = H.row(rest[j]) * N;
        const double rhs = h(rest[j]) - H.row(rest[j]).dot(y0);
        if (row.norm() < 1e-12) {
            if (rhs < -kFeasTol) return {};
            continue;
        }
        Hr.row(mr) = row;
        hr(mr) = rhs;
        ++mr;
    }
    Hr.conservativeResize(mr, d - rank);
    hr.conservativeResize(mr);
    std::vector<Eigen::VectorXd> sub = enumerate_points(Hr, hr);
    std::vector<Eigen::VectorXd> out;
    out.reserve(sub.size());
    for (const Eigen::VectorXd& t : sub) out.push_back(y0 + N * t);
    return out;
}

inline std::vector<Eigen::VectorXd> enumerate_points(const Eigen::MatrixXd& H,
                                                     const Eigen::VectorXd& h) {
    const Eigen::Index d = H.cols();
    HPolytope P(H, h);
    if (d == 0) return {};
    if (is_empty(P)) throw EmptyPolytope("in enumerate_vertices()");

    // bounding box; throws UnboundedPolytope on any free direction
    Eigen::VectorXd lo(d), hi(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
        e(k) = 1.0;
        hi(k) = support(P, e);
        lo(k) = -support(P, -e);
    }

    // implicit equalities make the set lower-dimensional; a fat inscribed
    // ball rules them out cheaply
    auto [cc, radius] = chebyshev_center(P);
    (void)cc;
    if (radius < 1e-7) {
        std::vector<Eigen::Index> eq;
        for (Eigen::Index i = 0; i < H.rows(); ++i) {
            const double nrm = H.row(i).norm();
            if (nrm < 1e-14) continue;
            QpSolution s = solve_lp(H.row(i).transpose(), H, h, Eigen::MatrixXd(0, d),
                                    Eigen::VectorXd());
            if (s.status == QpStatus::Optimal && h(i) - s.objective <= 1e-9 * nrm)
                eq.push_back(i);
        }
        if (!eq.empty()) return enumerate_degenerate(H, h, eq);
    }
    return dd_full_dim(H, h, lo, hi);
}

}  // namespace detail

/// Minimal vertex set of a bounded nonempty polytope.
inline VertexList enumerate_vertices(const HPolytope& P) {
    VertexList out;
    out.vertices = detail::enumerate_points(P.H, P.h);
    return out;
}

/// Largest singular value.
inline double spectral_norm(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    return svd.singularValues()(0);
}

/// max over the vertices of Theta of ||M(theta)|| (or its square). Valid for
/// the full set when M is affine in theta, since the norm is then convex.
template <typename MatrixFamily>
double max_norm_over_vertices(MatrixFamily&& family, const HPolytope& Theta, bool squared = false) {
    const VertexList vl = enumerate_vertices(Theta);
    if (vl.vertices.empty()) throw EmptyPolytope("in max_norm_over_vertices()");
    double best = 0.0;
    for (const Eigen::VectorXd& v : vl.vertices) best = std::max(best, spectral_norm(family(v)));
    return squared ? best * best : best;
}

namespace detail {

// Lebesgue volume by recursive facet decomposition (pyramid formula over the
// Chebyshev center). Operates purely on the halfspace description.
inline double volume_rec(const Eigen::MatrixXd& Hin, const Eigen::VectorXd& hin) {
    const Eigen::Index d = Hin.cols();
    HPolytope P = prune_redundant(HPolytope(Hin, hin));
    if (d == 1) {
        Eigen::VectorXd e = Eigen::VectorXd::Constant(1, 1.0);
        const double hi = support(P, e);
        const double lo = -support(P, -e);
        return std::max(hi - lo, 0.0);
    }
    auto [c, radius] = chebyshev_center(P);
    if (radius <= 0.0) return 0.0;
    double vol = 0.0;
    for (Eigen::Index i = 0; i < P.num_facets(); ++i) {
        const double nrm = P.H.row(i).norm();
        if (nrm < 1e-14) continue;
        // point on the facet: maximizer of its own normal
        QpSolution s = solve_lp(-P.H.row(i).transpose(), P.H, P.h,
                                Eigen::MatrixXd(0, d), Eigen::VectorXd());
        if (s.status != QpStatus::Optimal) continue;
        if (-s.objective < P.h(i) - 1e-9 * nrm) continue;  // facet not attained
        const Eigen::VectorXd v0 = s.x;
        // orthonormal basis of the facet hyperplane
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(P.H.row(i), Eigen::ComputeFullV);
        Eigen::MatrixXd N = svd.matrixV().rightCols(d - 1);
        Eigen::MatrixXd Hf(P.num_facets() - 1, d - 1);
        Eigen::VectorXd hf(P.num_facets() - 1);
        Eigen::Index mf = 0;
        bool empty_facet = false;
        for (Eigen::Index j = 0; j < P.num_facets(); ++j) {
            if (j == i) continue;
            Eigen::RowVectorXd row = P.H.row(j) * N;
            const double rhs = P.h(j) - P.H.row(j).dot(v0);
            if (row.norm() < 1e-12) {
                if (rhs < -kFeasTol) empty_facet = true;
                continue;
            }
            Hf.row(mf) = row;
            hf(mf) = rhs;
            ++mf;
        }
        if (empty_facet) continue;
        Hf.conservativeResize(mf, d - 1);
        hf.conservativeResize(mf);
        double face_vol = 0.0;
        try {
            face_vol = volume_rec(Hf, hf);
        } catch (const EmptyPolytope&) {
            continue;
        }
        const double dist = (P.h(i) - P.H.row(i).dot(c)) / nrm;
        vol += dist * face_vol / static_cast<double>(d);
    }
    return vol;
}

}  // namespace detail

/// Lebesgue volume, dim <= 4. Degenerate (lower-dimensional) sets report 0.
inline double volume(const HPolytope& P) {
    if (P.dim() > 4) throw DimensionTooHigh("volume limited to dim <= 4");
    if (is_empty(P)) throw EmptyPolytope("in volume()");
    // reject unbounded sets up front
    for (Eigen::Index k = 0; k < P.dim(); ++k) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(P.dim());
        e(k) = 1.0;
        support(P, e);
        support(P, -e);
    }
    auto [c, radius] = chebyshev_center(P);
    (void)c;
    if (radius < 1e-12) return 0.0;
    return detail::volume_rec(P.H, P.h);
}

}  // namespace atmpc
