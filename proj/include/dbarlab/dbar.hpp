#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "dbarlab/bundle.hpp"
#include "dbarlab/catalog.hpp"
#include "dbarlab/grid.hpp"
#include "dbarlab/moser.hpp"
#include "dbarlab/report.hpp"

namespace dbarlab {

using SparseC = Eigen::SparseMatrix<cplx>;
using VecC = Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// Discrete dbar on sections of rank r over a product grid, together with the
// h_K-weighted inner products. Everything downstream works in the
// orthonormalized coordinates u~ = V^{1/2} u, g~ = W^{1/2} g, where
// B = W^{1/2} A V^{-1/2} carries the operator; the weighted adjoint is then
// literally B^H, so <dbar u, g> = <u, dbar* g> holds to rounding by
// construction.

class DbarOperator {
public:
    DbarOperator(const ProductGrid& g, const MetricField& h) : grid_(&g), rank_(h.rank()) {
        const std::int64_t m = g.node_count();
        const std::size_t dirs = g.factor_count();
        const int r = rank_;
        rows_ = static_cast<std::int64_t>(dirs) * m * r;
        cols_ = m * r;

        std::vector<Eigen::Triplet<cplx>> trip;
        trip.reserve(static_cast<std::size_t>(rows_) * 4);
        for (std::int64_t n = 0; n < m; ++n) {
            for (std::size_t j = 0; j < dirs; ++j) {
                const auto& pg = g.factor(j);
                const auto fi = static_cast<std::size_t>(g.factor_index(n, j));
                const AxisStencil& sx = pg.stencil_x(fi);
                const AxisStencil& sy = pg.stencil_y(fi);
                for (int a = 0; a < r; ++a) {
                    const std::int64_t row = (n * static_cast<std::int64_t>(dirs) + static_cast<std::int64_t>(j)) * r + a;
                    for (int t = 0; t < sx.count; ++t)
                        trip.emplace_back(row, g.with_factor(n, j, sx.idx[t]) * r + a,
                                          cplx(0.5 * sx.w[t], 0.0));
                    for (int t = 0; t < sy.count; ++t)
                        trip.emplace_back(row, g.with_factor(n, j, sy.idx[t]) * r + a,
                                          cplx(0.0, 0.5 * sy.w[t]));
                }
            }
        }
        A_.resize(rows_, cols_);
        A_.setFromTriplets(trip.begin(), trip.end());

        build_weights(g, h);
        B_ = (Wsqrt_ * A_ * Vinvsqrt_).pruned();
    }

    const ProductGrid& grid() const { return *grid_; }
    int rank() const { return rank_; }
    const SparseC& plain() const { return A_; }
    const SparseC& weighted() const { return B_; }

    VecC section_to_vec(const SectionField& f) const {
        VecC x(cols_);
        for (std::int64_t i = 0; i < cols_; ++i) x(i) = f.v[static_cast<std::size_t>(i)];
        return x;
    }
    SectionField vec_to_section(const VecC& x) const {
        SectionField f(*grid_, rank_);
        for (std::int64_t i = 0; i < cols_; ++i) f.v[static_cast<std::size_t>(i)] = x(i);
        return f;
    }
    VecC form_to_vec(const FormField& f) const {
        VecC x(rows_);
        for (std::int64_t i = 0; i < rows_; ++i) x(i) = f.v[static_cast<std::size_t>(i)];
        return x;
    }
    FormField vec_to_form(const VecC& x) const {
        FormField f(*grid_, rank_);
        for (std::int64_t i = 0; i < rows_; ++i) f.v[static_cast<std::size_t>(i)] = x(i);
        return f;
    }

    FormField apply(const SectionField& u) const { return vec_to_form(A_ * section_to_vec(u)); }

    /// dbar*_{h_K} g = V^{-1} A^H W g.
    SectionField apply_adjoint(const FormField& gfield) const {
        const VecC ct = Wsqrt_ * form_to_vec(gfield);
        return vec_to_section(Vinvsqrt_ * (B_.adjoint() * ct));
    }

    double section_norm_sq(const SectionField& u) const {
        return (Vsqrt_ * section_to_vec(u)).squaredNorm();
    }
    double form_norm_sq(const FormField& gfield) const {
        return (Wsqrt_ * form_to_vec(gfield)).squaredNorm();
    }

    const SparseC& Vsqrt() const { return Vsqrt_; }
    const SparseC& Vinvsqrt() const { return Vinvsqrt_; }
    const SparseC& Wsqrt() const { return Wsqrt_; }

private:
    void build_weights(const ProductGrid& g, const MetricField& h) {
        const std::int64_t m = g.node_count();
        const int r = rank_;
        const double mu = g.cell_volume();
        std::vector<Eigen::Triplet<cplx>> vs, vis, ws;
        Eigen::SelfAdjointEigenSolver<SmallMat> es;
        for (std::int64_t n = 0; n < m; ++n) {
            const double w = mu * h.twist_weight(g, n);
            const SmallMat G = h.matrix(n).conjugate();  // Gram matrix of the fibre pairing
            es.compute(G);
            if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
                throw std::invalid_argument("dbar: metric not positive definite at a node");
            const auto& U = es.eigenvectors();
            const auto& lam = es.eigenvalues();
            SmallMat sq(r, r), isq(r, r);
            sq.setZero(r, r);
            isq.setZero(r, r);
            for (int i = 0; i < r; ++i) {
                sq(i, i) = std::sqrt(lam(i) * w);
                isq(i, i) = 1.0 / std::sqrt(lam(i) * w);
            }
            const SmallMat S = U * sq * U.adjoint();
            const SmallMat Si = U * isq * U.adjoint();
            for (int a = 0; a < r; ++a)
                for (int b = 0; b < r; ++b) {
                    vs.emplace_back(n * r + a, n * r + b, S(a, b));
                    vis.emplace_back(n * r + a, n * r + b, Si(a, b));
                }
            const std::size_t dirs = g.factor_count();
            for (std::size_t j = 0; j < dirs; ++j)
                for (int a = 0; a < r; ++a)
                    for (int b = 0; b < r; ++b) {
                        const std::int64_t base = (n * static_cast<std::int64_t>(dirs) + static_cast<std::int64_t>(j)) * r;
                        ws.emplace_back(base + a, base + b, S(a, b));
                    }
        }
        Vsqrt_.resize(cols_, cols_);
        Vsqrt_.setFromTriplets(vs.begin(), vs.end());
        Vinvsqrt_.resize(cols_, cols_);
        Vinvsqrt_.setFromTriplets(vis.begin(), vis.end());
        Wsqrt_.resize(rows_, rows_);
        Wsqrt_.setFromTriplets(ws.begin(), ws.end());
    }

    const ProductGrid* grid_;
    int rank_;
    std::int64_t rows_ = 0, cols_ = 0;
    SparseC A_, B_, Vsqrt_, Vinvsqrt_, Wsqrt_;
};

// ---------------------------------------------------------------------------
// dbar-closedness of a (0,1)-form: the antisymmetrized dbar must vanish up to
// a spacing-tied tolerance.

inline double dbar_closedness_defect(const FormField& v, const ProductGrid& g) {
    double defect = 0.0;
    for (std::int64_t n = 0; n < g.node_count(); ++n)
        for (std::size_t j = 0; j < g.factor_count(); ++j)
            for (std::size_t k = j + 1; k < g.factor_count(); ++k)
                for (int a = 0; a < v.rank; ++a) {
                    const cplx djk = detail::section_d(g, j, /*bar=*/true, n, [&](std::int64_t nn) {
                        return v.at(nn, k, a);
                    });
                    const cplx dkj = detail::section_d(g, k, /*bar=*/true, n, [&](std::int64_t nn) {
                        return v.at(nn, j, a);
                    });
                    defect = std::max(defect, std::abs(djk - dkj));
                }
    return defect;
}

inline void require_dbar_closed(const FormField& v, const ProductGrid& g) {
    double scale = 0.0;
    for (const cplx& x : v.v) scale = std::max(scale, std::abs(x));
    const double s = g.factor(0).spacing();
    if (dbar_closedness_defect(v, g) > std::max(1e-10 * scale, 20.0 * s * s * scale))
        throw std::invalid_argument("dbar: right-hand side is not discretely dbar-closed");
}

// ---------------------------------------------------------------------------
// Admissibility for the domain of dbar*: g_1 vanishes where the annulus
// factor is near its boundary, g_j (j >= 2) where factor j is near the outer
// circle. Imposed strongly by zeroing.

inline bool form_component_flagged(const ProductGrid& g, std::int64_t node, std::size_t j) {
    return !g.factor(j).is_interior(static_cast<std::size_t>(g.factor_index(node, j)));
}

inline void impose_adjoint_domain(FormField& v, const ProductGrid& g) {
    for (std::int64_t n = 0; n < g.node_count(); ++n)
        for (std::size_t j = 0; j < g.factor_count(); ++j)
            if (form_component_flagged(g, n, j))
                for (int a = 0; a < v.rank; ++a) v.at(n, j, a) = 0.0;
}

inline void require_adjoint_domain(const FormField& v, const ProductGrid& g) {
    double scale = 0.0;
    for (const cplx& x : v.v) scale = std::max(scale, std::abs(x));
    for (std::int64_t n = 0; n < g.node_count(); ++n)
        for (std::size_t j = 0; j < g.factor_count(); ++j)
            if (form_component_flagged(g, n, j))
                for (int a = 0; a < v.rank; ++a)
                    if (std::abs(v.at(n, j, a)) > 1e-12 * std::max(scale, 1e-300))
                        throw std::invalid_argument(
                            "dbar: trial form violates the adjoint boundary conditions");
}

/// ||dbar g||^2 for a (0,1)-form in the twisted metric: the (0,2) coefficient
/// is the antisymmetrized derivative.
inline double dbar_of_form_norm_sq(const FormField& v, const MetricField& h, const ProductGrid& g) {
    double acc = 0.0;
    SmallVec x(v.rank);
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        double node_sum = 0.0;
        for (std::size_t j = 0; j < g.factor_count(); ++j)
            for (std::size_t k = j + 1; k < g.factor_count(); ++k) {
                for (int a = 0; a < v.rank; ++a) {
                    const cplx djk = detail::section_d(g, j, /*bar=*/true, n, [&](std::int64_t nn) {
                        return v.at(nn, k, a);
                    });
                    const cplx dkj = detail::section_d(g, k, /*bar=*/true, n, [&](std::int64_t nn) {
                        return v.at(nn, j, a);
                    });
                    x(a) = djk - dkj;
                }
                node_sum += fiber_norm_sq(h, n, x);
            }
        acc += node_sum * h.twist_weight(g, n);
    }
    return acc * g.cell_volume();
}

// ---------------------------------------------------------------------------
// Admissible curvature budget gamma and the radius R_gamma at which the
// measured budget over { |z_1| < R_gamma } x W drops below it.

struct GammaChoice {
    double gamma = 0.0;
    double R_gamma = 0.0;
    double budget_at_R = 0.0;
    bool reachable = false;
};

/// Largest radius (scanned downward one spacing at a time) whose restricted
/// budget integral falls below `target`; R = 0 when unreachable.
inline double find_budget_radius(const MetricField& h, const ProductGrid& g, int N, double target,
                                 double R_start, double* budget_out = nullptr) {
    const auto th = chern_curvature(h, g);
    const auto norms = curvature_pointwise_norm(th, h, g);
    const double p = static_cast<double>(N) / (N - 2.0);
    const std::int64_t m = g.node_count();
    std::vector<double> contrib(static_cast<std::size_t>(m));
    std::vector<double> radius(static_cast<std::size_t>(m));
    for (std::int64_t n = 0; n < m; ++n) {
        contrib[static_cast<std::size_t>(n)] = std::pow(norms.full[static_cast<std::size_t>(n)], p) * g.cell_volume();
        radius[static_cast<std::size_t>(n)] = std::abs(g.coord(n, 0));
    }
    const double s = g.factor(0).spacing();
    const double R_min = g.factor(0).inner_radius() + 4.0 * s;
    for (double R = R_start; R > R_min; R -= s) {
        double acc = 0.0;
        for (std::int64_t n = 0; n < m; ++n)
            if (radius[static_cast<std::size_t>(n)] < R) acc += contrib[static_cast<std::size_t>(n)];
        if (acc < target) {
            if (budget_out) *budget_out = acc;
            return R;
        }
    }
    if (budget_out) *budget_out = std::numeric_limits<double>::quiet_NaN();
    return 0.0;
}

inline GammaChoice choose_gamma(const MetricField& h, const ProductGrid& g,
                                const ConstantLedger& L) {
    GammaChoice c;
    c.gamma = L.gamma_max;
    if (!(c.gamma > 0.0)) return c;
    const double R_start = L.Rhat * (1.0 - g.factor(0).spacing());
    double budget = 0.0;
    const double R = find_budget_radius(h, g, L.N, c.gamma, R_start, &budget);
    if (R > 0.0) {
        c.R_gamma = R;
        c.budget_at_R = budget;
        c.reachable = true;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Coercivity of dbar (+) dbar* over random admissible trial forms.

struct CoercivityResult {
    double bound = 0.0;         // kappa K / 2
    double min_quotient = 0.0;
    int trials = 0;
};

inline CoercivityResult coercivity_trials(const DbarOperator& op, const MetricField& h,
                                          const ProductGrid& g, int trials,
                                          TrigFieldGenerator& gen, double kappaK_half) {
    CoercivityResult res;
    res.bound = kappaK_half;
    res.min_quotient = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        FormField trial(g, h.rank());
        for (std::size_t j = 0; j < g.factor_count(); ++j) {
            for (int a = 0; a < h.rank(); ++a) {
                const auto f = gen.sample_product(g, 1.2, 1);
                for (std::int64_t n = 0; n < g.node_count(); ++n)
                    trial.at(n, j, a) = f[static_cast<std::size_t>(n)];
            }
        }
        impose_adjoint_domain(trial, g);
        require_adjoint_domain(trial, g);

        const double denom = op.form_norm_sq(trial);
        if (denom <= 0.0) continue;
        const SectionField adj = op.apply_adjoint(trial);
        const double num = dbar_of_form_norm_sq(trial, h, g) + op.section_norm_sq(adj);
        res.min_quotient = std::min(res.min_quotient, num / denom);
        ++res.trials;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Minimum-norm least-squares solve of dbar u = v in the h_K geometry.

struct DbarSolution {
    SectionField u;
    double residual = 0.0;       // ||dbar u - v|| / ||v||, h_K norms
    double u_norm = 0.0;         // ||u||_{h_K}
    double v_norm = 0.0;         // ||v||_{h_K}
    int iterations = 0;
    bool converged = false;
    // the two readings of the a priori estimate (see solver report)
    bool bound_sq_holds = false;       // ||u||^2 <= (2/(kappa K)) ||v||^2
    bool bound_paper_display = false;  // ||u||^2 <= sqrt(2/(kappa K)) ||v||^2
};

inline DbarSolution solve_dbar(const DbarOperator& op, const FormField& v, double kappaK,
                               double tol = 1e-12, int max_iters = 20000) {
    require_dbar_closed(v, op.grid());
    const VecC c = op.Wsqrt() * op.form_to_vec(v);

    Eigen::LeastSquaresConjugateGradient<SparseC, Eigen::IdentityPreconditioner> solver;
    solver.setTolerance(tol);
    solver.setMaxIterations(max_iters);
    solver.compute(op.weighted());
    const VecC ut = solver.solve(c);

    DbarSolution sol;
    sol.u = op.vec_to_section(op.Vinvsqrt() * ut);
    sol.iterations = static_cast<int>(solver.iterations());
    sol.converged = solver.info() == Eigen::Success;
    sol.v_norm = c.norm();
    sol.u_norm = ut.norm();
    sol.residual = sol.v_norm > 0.0 ? (op.weighted() * ut - c).norm() / sol.v_norm : 0.0;
    const double ratio_sq = sol.v_norm > 0.0 ? (sol.u_norm * sol.u_norm) / (sol.v_norm * sol.v_norm)
                                             : 0.0;
    sol.bound_sq_holds = ratio_sq <= 2.0 / kappaK * (1.0 + 1e-9);
    sol.bound_paper_display = ratio_sq <= std::sqrt(2.0 / kappaK) * (1.0 + 1e-9);
    return sol;
}

// ---------------------------------------------------------------------------
// Jet interpolation. A holomorphic section F with prescribed z_1 derivatives
// jet[m] = (d/dz_1)^m F(P0) for m = 0..q is produced as
//   F = rho s - (z_1 - z_1*)^{q+1} u,  dbar u = (dbar rho) s / (z_1 - z_1*)^{q+1},
// where s is the jet polynomial and rho a radial plateau equal to 1 near
// |z_1*|. The multiplier power q+1 kills the q-jet of the correction term.

struct JetProblem {
    std::vector<cplx> point;        // P0, snapped to the nearest grid node
    int q = 0;
    std::vector<SmallVec> jet;      // jet[m] = prescribed m-th z_1 derivative
    RadialBump rho;
};

struct JetResult {
    SectionField F;
    DbarSolution solve;
    std::int64_t node = -1;          // grid node carrying P0
    double dbar_residual = 0.0;      // max |dbar F| over nodes
    double scale = 0.0;              // max |F|
    std::vector<SmallVec> achieved;  // extracted derivatives at P0
    double norm_hK = 0.0;
};

inline JetProblem make_jet_problem(const ProductGrid& g, std::vector<cplx> point, int q,
                                   std::vector<SmallVec> jet) {
    if (static_cast<int>(jet.size()) != q + 1)
        throw std::invalid_argument("jet: need q+1 prescribed derivatives");
    const auto& f0 = g.factor(0);
    const double s = f0.spacing();
    const double r_star = std::abs(point[0]);
    if (r_star <= f0.inner_radius() + 2.0 * s)
        throw std::invalid_argument("jet: P0 within two cells of the puncture");
    if (r_star >= f0.outer_radius() - 2.0 * s)
        throw std::invalid_argument("jet: P0 within two cells of the outer circle");
    JetProblem p;
    p.point = std::move(point);
    p.q = q;
    p.jet = std::move(jet);
    const double lo = f0.inner_radius() + s;
    const double hi = f0.outer_radius() - s;
    double rise = 0.25 * (hi - lo);
    rise = std::min({rise, 0.9 * (r_star - lo), 0.9 * (hi - r_star)});
    p.rho = RadialBump{lo, hi, rise};
    return p;
}

inline JetResult jet_interpolate(const DbarOperator& op, const MetricField& h,
                                 const JetProblem& p, double kappaK) {
    const ProductGrid& g = op.grid();
    const int r = op.rank();

    // snap P0 to the product node nearest the request
    std::int64_t node = 0;
    for (std::size_t k = 0; k < g.factor_count(); ++k) {
        const std::int64_t fk = g.factor(k).nearest_node(p.point[k]);
        if (fk < 0) throw std::invalid_argument("jet: P0 outside the grid");
        node = g.with_factor(node, k, fk);
    }
    const cplx z1_star = g.coord(node, 0);

    const auto jet_poly = [&](cplx z1) {
        SmallVec s(r);
        s.setZero(r);
        double fact = 1.0;
        cplx pow_term = 1.0;
        for (int m = 0; m <= p.q; ++m) {
            if (m > 0) {
                fact *= m;
                pow_term *= (z1 - z1_star);
            }
            s += p.jet[static_cast<std::size_t>(m)] * (pow_term / fact);
        }
        return s;
    };

    // v = (dbar rho) s / (z1 - z1*)^{q+1}, supported on the bump collars
    FormField v(g, r);
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        const cplx z1 = g.coord(n, 0);
        const cplx dbar_rho = p.rho.d_zbar(z1);
        if (dbar_rho == cplx(0.0)) continue;
        const cplx denom = std::pow(z1 - z1_star, p.q + 1);
        const SmallVec s = jet_poly(z1);
        for (int a = 0; a < r; ++a) v.at(n, 0, a) = dbar_rho * s(a) / denom;
    }

    JetResult out;
    out.node = node;
    out.solve = solve_dbar(op, v, kappaK);

    out.F = SectionField(g, r);
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        const cplx z1 = g.coord(n, 0);
        const double rho = p.rho.value(std::abs(z1));
        const cplx mult = std::pow(z1 - z1_star, p.q + 1);
        const SmallVec s = jet_poly(z1);
        for (int a = 0; a < r; ++a)
            out.F.at(n, a) = rho * s(a) - mult * out.solve.u.at(n, a);
    }

    for (const cplx& x : out.F.v) out.scale = std::max(out.scale, std::abs(x));
    const FormField dF = op.apply(out.F);
    for (const cplx& x : dF.v) out.dbar_residual = std::max(out.dbar_residual, std::abs(x));

    // jet extraction by the grid's own z_1 stencils
    out.achieved.resize(static_cast<std::size_t>(p.q) + 1, SmallVec(r));
    for (int a = 0; a < r; ++a) out.achieved[0](a) = out.F.at(node, a);
    if (p.q >= 1) {
        for (int a = 0; a < r; ++a)
            out.achieved[1](a) = detail::section_d(g, 0, /*bar=*/false, node, [&](std::int64_t nn) {
                return out.F.at(nn, a);
            });
    }
    for (int m = 2; m <= p.q; ++m) {
        // repeated application of the first-derivative stencil
        SectionField prev = out.F;
        for (int it = 0; it < m; ++it) {
            SectionField next(g, r);
            for (std::int64_t n = 0; n < g.node_count(); ++n)
                for (int a = 0; a < r; ++a)
                    next.at(n, a) = detail::section_d(g, 0, /*bar=*/false, n, [&](std::int64_t nn) {
                        return prev.at(nn, a);
                    });
            prev = std::move(next);
        }
        for (int a = 0; a < r; ++a) out.achieved[static_cast<std::size_t>(m)](a) = prev.at(node, a);
    }

    out.norm_hK = std::sqrt(op.section_norm_sq(out.F));
    return out;
}

}  // namespace dbarlab
