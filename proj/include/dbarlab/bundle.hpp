#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbarlab/grid.hpp"

namespace dbarlab {

/// Fibre matrices are tiny (rank <= 4); fixed-capacity Eigen types keep the
/// per-node work allocation-free.
using SmallMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, 4, 4>;
using SmallVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, 4, 1>;

/// Rank-r section sampled on a product grid, node-major storage.
struct SectionField {
    int rank = 1;
    std::vector<cplx> v;  // v[node*rank + alpha]

    SectionField() = default;
    SectionField(const ProductGrid& g, int r) : rank(r), v(static_cast<std::size_t>(g.node_count()) * r, 0.0) {}

    cplx& at(std::int64_t node, int alpha) { return v[static_cast<std::size_t>(node) * rank + alpha]; }
    cplx at(std::int64_t node, int alpha) const { return v[static_cast<std::size_t>(node) * rank + alpha]; }

    SmallVec vec(std::int64_t node) const {
        SmallVec x(rank);
        for (int a = 0; a < rank; ++a) x(a) = at(node, a);
        return x;
    }
};

inline SectionField sample_section(const ProductGrid& g, int rank,
                                   const std::function<void(const std::vector<cplx>&, SmallVec&)>& fn) {
    SectionField f(g, rank);
    std::vector<cplx> pt(g.factor_count());
    SmallVec val(rank);
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        for (std::size_t k = 0; k < g.factor_count(); ++k) pt[k] = g.coord(n, k);
        fn(pt, val);
        for (int a = 0; a < rank; ++a) f.at(n, a) = val(a);
    }
    return f;
}

/// (0,1)-form with one rank-r component per base direction.
struct FormField {
    int rank = 1;
    std::size_t directions = 1;
    std::vector<cplx> v;  // v[(node*directions + j)*rank + alpha]

    FormField() = default;
    FormField(const ProductGrid& g, int r)
        : rank(r), directions(g.factor_count()),
          v(static_cast<std::size_t>(g.node_count()) * g.factor_count() * r, 0.0) {}

    cplx& at(std::int64_t node, std::size_t j, int alpha) {
        return v[(static_cast<std::size_t>(node) * directions + j) * rank + alpha];
    }
    cplx at(std::int64_t node, std::size_t j, int alpha) const {
        return v[(static_cast<std::size_t>(node) * directions + j) * rank + alpha];
    }
};

// ---------------------------------------------------------------------------
// Hermitian metric h_{alpha betabar} per node, with an optional Gaussian
// twist exponent K >= 0 realizing h_K = e^{-K|z|^2} h. The twist is kept as
// a separate weight so the untwisted norms of the iteration chain and the
// twisted norms of the solver share one object.

class MetricField {
public:
    MetricField() = default;
    MetricField(const ProductGrid& g, int rank)
        : rank_(rank), data_(static_cast<std::size_t>(g.node_count()) * rank * rank, 0.0) {}

    int rank() const { return rank_; }
    double twist_K() const { return twist_K_; }
    void set_twist_K(double K) {
        if (K < 0.0) throw std::invalid_argument("metric: twist K must be >= 0");
        twist_K_ = K;
    }

    cplx& entry(std::int64_t node, int a, int b) {
        return data_[(static_cast<std::size_t>(node) * rank_ + a) * rank_ + b];
    }
    cplx entry(std::int64_t node, int a, int b) const {
        return data_[(static_cast<std::size_t>(node) * rank_ + a) * rank_ + b];
    }

    SmallMat matrix(std::int64_t node) const {
        SmallMat m(rank_, rank_);
        for (int a = 0; a < rank_; ++a)
            for (int b = 0; b < rank_; ++b) m(a, b) = entry(node, a, b);
        return m;
    }

    /// e^{-K|z|^2} at the node (1 when untwisted).
    double twist_weight(const ProductGrid& g, std::int64_t node) const {
        return twist_K_ == 0.0 ? 1.0 : std::exp(-twist_K_ * g.abs_sq(node));
    }

    /// max |h - h^*| over nodes, and the smallest eigenvalue seen.
    void validate(const ProductGrid& g) const {
        double herm_dev = 0.0, min_eig = std::numeric_limits<double>::infinity();
        Eigen::SelfAdjointEigenSolver<SmallMat> es;
        for (std::int64_t n = 0; n < g.node_count(); ++n) {
            const SmallMat m = matrix(n);
            herm_dev = std::max(herm_dev, (m - m.adjoint()).cwiseAbs().maxCoeff());
            es.compute(m, Eigen::EigenvaluesOnly);
            min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
        }
        if (herm_dev > 1e-12)
            throw std::invalid_argument("metric: not Hermitian (max deviation " +
                                        std::to_string(herm_dev) + ")");
        if (!(min_eig > 0.0))
            throw std::invalid_argument("metric: not positive definite (min eigenvalue " +
                                        std::to_string(min_eig) + ")");
    }

private:
    int rank_ = 1;
    double twist_K_ = 0.0;
    std::vector<cplx> data_;
};

inline MetricField make_metric(const ProductGrid& g, int rank,
                               const std::function<void(const std::vector<cplx>&, SmallMat&)>& fn) {
    MetricField h(g, rank);
    std::vector<cplx> pt(g.factor_count());
    SmallMat m(rank, rank);
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        for (std::size_t k = 0; k < g.factor_count(); ++k) pt[k] = g.coord(n, k);
        fn(pt, m);
        for (int a = 0; a < rank; ++a)
            for (int b = 0; b < rank; ++b) h.entry(n, a, b) = m(a, b);
    }
    return h;
}

// ---------------------------------------------------------------------------
// Pointwise fibre inner product <f, g>_h = sum h_{alpha betabar} f^alpha
// conj(g^beta), plus the induced norms.

inline cplx fiber_inner(const MetricField& h, std::int64_t node, const SmallVec& f,
                        const SmallVec& g) {
    cplx acc = 0.0;
    for (int a = 0; a < h.rank(); ++a)
        for (int b = 0; b < h.rank(); ++b) acc += h.entry(node, a, b) * f(a) * std::conj(g(b));
    return acc;
}

inline double fiber_norm_sq(const MetricField& h, std::int64_t node, const SmallVec& f) {
    return std::max(0.0, fiber_inner(h, node, f, f).real());
}

// ---------------------------------------------------------------------------
// Chern connection. With M(a,b) = h_{a bbar}, metric compatibility
//   d_j <f,g> = <grad_j f, g> + <f, dbar_j g>
// forces the connection matrix B_j = ((d_j M) M^{-1})^T acting on fibre
// coordinates; the antiholomorphic covariant derivative is plain dbar.

namespace detail {

template <class ValueAt>
cplx section_d(const ProductGrid& g, std::size_t dir, bool bar, std::int64_t node, ValueAt&& at) {
    return bar ? product_wirtinger_at<true>(g, dir, node, at)
               : product_wirtinger_at<false>(g, dir, node, at);
}

inline SmallMat metric_matrix_d(const MetricField& h, const ProductGrid& g, std::size_t dir,
                                bool bar, std::int64_t node) {
    SmallMat m(h.rank(), h.rank());
    for (int a = 0; a < h.rank(); ++a)
        for (int b = 0; b < h.rank(); ++b)
            m(a, b) = section_d(g, dir, bar, node,
                                [&](std::int64_t nn) { return h.entry(nn, a, b); });
    return m;
}

}  // namespace detail

/// Connection matrix B_j at a node (twist adds -K conj(z_j) I).
inline SmallMat connection_matrix(const MetricField& h, const ProductGrid& g, std::size_t dir,
                                  std::int64_t node, bool twisted = false) {
    const SmallMat dM = detail::metric_matrix_d(h, g, dir, /*bar=*/false, node);
    const SmallMat M = h.matrix(node);
    SmallMat B = (dM * M.inverse()).transpose();
    if (twisted && h.twist_K() != 0.0) {
        const cplx zj = g.coord(node, dir);
        for (int a = 0; a < h.rank(); ++a) B(a, a) += -h.twist_K() * std::conj(zj);
    }
    return B;
}

inline SectionField covariant_derivative(const SectionField& f, const MetricField& h,
                                         const ProductGrid& g, std::size_t dir, bool holomorphic,
                                         bool twisted = false) {
    if (f.rank != h.rank()) throw std::invalid_argument("covariant_derivative: rank mismatch");
    SectionField out(g, f.rank);
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        for (int a = 0; a < f.rank; ++a)
            out.at(n, a) = detail::section_d(g, dir, /*bar=*/!holomorphic, n,
                                             [&](std::int64_t nn) { return f.at(nn, a); });
        if (holomorphic) {
            const SmallMat B = connection_matrix(h, g, dir, n, twisted);
            const SmallVec x = f.vec(n);
            const SmallVec bx = B * x;
            for (int a = 0; a < f.rank; ++a) out.at(n, a) += bx(a);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Curvature tensor Theta_{alpha betabar j kbar} stored slice-wise: the (j,k)
// slice is the fibre matrix
//   Theta_jk = -d_j dbar_k M + (d_j M) M^{-1} (dbar_k M),
// whose (a,b) entry pairs as (Theta f, g) = sum Theta(a,b) f^a conj(g^b).
// The sign is pinned by the gradient identity on a line bundle.

struct CurvatureField {
    int rank = 1;
    std::size_t directions = 1;
    std::vector<cplx> v;  // v[((node*n + j)*n + k)*r*r + a*r + b]

    CurvatureField() = default;
    CurvatureField(const ProductGrid& g, int r)
        : rank(r), directions(g.factor_count()),
          v(static_cast<std::size_t>(g.node_count()) * g.factor_count() * g.factor_count() * r * r,
            0.0) {}

    cplx& at(std::int64_t node, std::size_t j, std::size_t k, int a, int b) {
        return v[(((static_cast<std::size_t>(node) * directions + j) * directions + k) * rank + a) *
                     rank + b];
    }
    cplx at(std::int64_t node, std::size_t j, std::size_t k, int a, int b) const {
        return v[(((static_cast<std::size_t>(node) * directions + j) * directions + k) * rank + a) *
                     rank + b];
    }

    SmallMat slice(std::int64_t node, std::size_t j, std::size_t k) const {
        SmallMat m(rank, rank);
        for (int a = 0; a < rank; ++a)
            for (int b = 0; b < rank; ++b) m(a, b) = at(node, j, k, a, b);
        return m;
    }
};

/// One (j, kbar) curvature slice as a per-node fibre matrix field.
inline std::vector<cplx> chern_curvature_slice(const MetricField& h, const ProductGrid& g,
                                               std::size_t j, std::size_t k) {
    const int r = h.rank();
    const std::size_t mr = static_cast<std::size_t>(r) * r;
    // first pass: dbar_k M everywhere (the second stencil needs neighbours)
    std::vector<cplx> dbark(static_cast<std::size_t>(g.node_count()) * mr);
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        const SmallMat m = detail::metric_matrix_d(h, g, k, /*bar=*/true, n);
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b) dbark[static_cast<std::size_t>(n) * mr + a * r + b] = m(a, b);
    }
    std::vector<cplx> out(static_cast<std::size_t>(g.node_count()) * mr);
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        SmallMat ddbar(r, r);
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b)
                ddbar(a, b) = detail::section_d(g, j, /*bar=*/false, n, [&](std::int64_t nn) {
                    return dbark[static_cast<std::size_t>(nn) * mr + a * r + b];
                });
        const SmallMat dj = detail::metric_matrix_d(h, g, j, /*bar=*/false, n);
        const SmallMat dbk = Eigen::Map<const SmallMat>(&dbark[static_cast<std::size_t>(n) * mr], r, r);
        const SmallMat M = h.matrix(n);
        const SmallMat theta = -ddbar + dj * M.inverse() * dbk;
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b) out[static_cast<std::size_t>(n) * mr + a * r + b] = theta(a, b);
    }
    return out;
}

inline CurvatureField chern_curvature(const MetricField& h, const ProductGrid& g) {
    h.validate(g);
    CurvatureField th(g, h.rank());
    const int r = h.rank();
    const std::size_t mr = static_cast<std::size_t>(r) * r;
    for (std::size_t j = 0; j < g.factor_count(); ++j)
        for (std::size_t k = 0; k < g.factor_count(); ++k) {
            const auto slice = chern_curvature_slice(h, g, j, k);
            for (std::int64_t n = 0; n < g.node_count(); ++n)
                for (int a = 0; a < r; ++a)
                    for (int b = 0; b < r; ++b)
                        th.at(n, j, k, a, b) = slice[static_cast<std::size_t>(n) * mr + a * r + b];
        }
    return th;
}

/// Additive curvature contribution of the twist e^{-K|z|^2}: K delta_{jk}
/// times the metric pairing (exposed separately rather than folded into the
/// stored tensor).
inline cplx twist_curvature_pairing(const MetricField& h, std::int64_t node, std::size_t j,
                                    std::size_t k, const SmallVec& f, const SmallVec& g) {
    if (j != k || h.twist_K() == 0.0) return 0.0;
    return h.twist_K() * fiber_inner(h, node, f, g);
}

// ---------------------------------------------------------------------------
// Pointwise curvature norms in an h-orthonormal frame. With the Gram matrix
// G = M^T = conj(M) and G = L L^H, the frame matrix of the (j,k) slice is
// L^{-1} Theta^T L^{-H}; |Theta| is the Frobenius norm summed Euclidean-wise
// over the base indices.

namespace detail {

inline SmallMat gram_cholesky(const MetricField& h, std::int64_t node) {
    const SmallMat G = h.matrix(node).conjugate();  // M hermitian: M^T = conj(M)
    Eigen::LLT<SmallMat> llt(G);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("curvature norm: metric not positive definite at a node");
    return llt.matrixL();
}

inline double slice_frame_norm(const SmallMat& theta, const SmallMat& L) {
    const SmallMat Lsolve = L.template triangularView<Eigen::Lower>().solve(theta.transpose());
    const SmallMat frame =
        L.template triangularView<Eigen::Lower>().solve(Lsolve.adjoint()).adjoint();
    return frame.norm();
}

}  // namespace detail

/// |Theta|(node) and the (1,1bar) slice norm |Theta_{1 1bar}|(node).
struct CurvatureNorms {
    std::vector<double> full;     // sqrt(sum_{j,k} frame-Frobenius^2)
    std::vector<double> slice11;  // frame-Frobenius of the (0,0) slice
};

inline CurvatureNorms curvature_pointwise_norm(const CurvatureField& th, const MetricField& h,
                                               const ProductGrid& g) {
    if (th.rank != h.rank()) throw std::invalid_argument("curvature norm: rank mismatch");
    CurvatureNorms out;
    out.full.resize(static_cast<std::size_t>(g.node_count()));
    out.slice11.resize(static_cast<std::size_t>(g.node_count()));
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        const SmallMat L = detail::gram_cholesky(h, n);
        double sum = 0.0, s11 = 0.0;
        for (std::size_t j = 0; j < th.directions; ++j)
            for (std::size_t k = 0; k < th.directions; ++k) {
                const double fn = detail::slice_frame_norm(th.slice(n, j, k), L);
                sum += fn * fn;
                if (j == 0 && k == 0) s11 = fn;
            }
        out.full[static_cast<std::size_t>(n)] = std::sqrt(sum);
        out.slice11[static_cast<std::size_t>(n)] = s11;
    }
    return out;
}

// ---------------------------------------------------------------------------
// L^p norms with the h fibre norm (optionally twisted for the solver paths).

inline double lp_norm(const SectionField& f, const MetricField& h, double p, const ProductGrid& g,
                      bool twisted = false) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: require p >= 1");
    double acc = 0.0, mx = 0.0;
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        double w = fiber_norm_sq(h, n, f.vec(n));
        if (twisted) w *= h.twist_weight(g, n);
        const double a = std::sqrt(w);
        if (p >= 1e6) mx = std::max(mx, a);
        else acc += std::pow(a, p);
    }
    if (p >= 1e6) return mx;
    return std::pow(acc * g.cell_volume(), 1.0 / p);
}

inline double l2_norm_sq(const SectionField& f, const MetricField& h, const ProductGrid& g,
                         bool twisted = false) {
    double acc = 0.0;
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        double w = fiber_norm_sq(h, n, f.vec(n));
        if (twisted) w *= h.twist_weight(g, n);
        acc += w;
    }
    return acc * g.cell_volume();
}

inline double l2_norm_sq(const FormField& f, const MetricField& h, const ProductGrid& g,
                         bool twisted = false) {
    double acc = 0.0;
    SmallVec x(f.rank);
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        double w = 0.0;
        for (std::size_t j = 0; j < f.directions; ++j) {
            for (int a = 0; a < f.rank; ++a) x(a) = f.at(n, j, a);
            w += fiber_norm_sq(h, n, x);
        }
        if (twisted) w *= h.twist_weight(g, n);
        acc += w;
    }
    return acc * g.cell_volume();
}

/// Scalar |f|_h per node, for feeding scalar quadratures.
inline std::vector<double> pointwise_h_norm(const SectionField& f, const MetricField& h,
                                            const ProductGrid& g) {
    std::vector<double> out(static_cast<std::size_t>(g.node_count()));
    for (std::int64_t n = 0; n < g.node_count(); ++n)
        out[static_cast<std::size_t>(n)] = std::sqrt(fiber_norm_sq(h, n, f.vec(n)));
    return out;
}

}  // namespace dbarlab
