#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "dbarlab/bundle.hpp"
#include "dbarlab/grid.hpp"
#include "dbarlab/report.hpp"

namespace dbarlab {

namespace detail {

inline bool z1_interior(const ProductGrid& g, std::int64_t node) {
    return g.factor(0).is_interior(static_cast<std::size_t>(g.factor_index(node, 0)));
}

/// Rejects sections that fail to vanish on the z_1 boundary. Lattice nodes
/// sit up to one spacing inside the circle, so the trace of a section that
/// vanishes on the true circle is O(spacing * gradient); the threshold
/// compares against the section's own measured z_1 gradient scale.
inline void require_z1_boundary_vanishing(const SectionField& f, const ProductGrid& g,
                                          const char* who) {
    double interior_max = 0.0, boundary_max = 0.0, grad_scale = 0.0;
    std::int64_t offender = -1;
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        double a = 0.0, dgrad = 0.0;
        for (int c = 0; c < f.rank; ++c) {
            a = std::max(a, std::abs(f.at(n, c)));
            const cplx dz = product_wirtinger_at<false>(g, 0, n, [&](std::int64_t nn) {
                return f.at(nn, c);
            });
            const cplx dzb = product_wirtinger_at<true>(g, 0, n, [&](std::int64_t nn) {
                return f.at(nn, c);
            });
            dgrad = std::max(dgrad, std::abs(dz) + std::abs(dzb));
        }
        if (z1_interior(g, n)) {
            interior_max = std::max(interior_max, a);
            grad_scale = std::max(grad_scale, dgrad);
        } else if (a > boundary_max) {
            boundary_max = a;
            offender = n;
        }
    }
    const double tol =
        std::max(1e-8 * std::max(interior_max, 1e-300), 4.0 * g.factor(0).spacing() * grad_scale);
    if (boundary_max > tol)
        throw std::invalid_argument(std::string(who) + ": section does not vanish on the z1 " +
                                    "boundary (node " + std::to_string(offender) + ", value " +
                                    std::to_string(boundary_max) + ")");
}

}  // namespace detail

/// Both sides of the z_1 integration-by-parts identity
///   ||dbar_{z1} f||^2 = -(Theta_{1 1bar} f, f) + ||grad_{z1} f||^2
/// for f vanishing on the z_1 boundary. A one-cell collar next to that
/// boundary is excluded from every quadrature identically: the one-sided
/// stencils there would degrade the order, and the identity is interior once
/// the trace vanishes.
struct GradientIdentityTerms {
    double lhs = 0.0;             // ||dbar f||^2
    double curvature_term = 0.0;  // (Theta_{1 1bar} f, f)
    double grad_term = 0.0;       // ||grad f||^2
    double rhs = 0.0;
    double residual = 0.0;
    double relative_residual = 0.0;
};

inline GradientIdentityTerms gradient_identity_terms(const SectionField& f, const MetricField& h,
                                                     const ProductGrid& g) {
    detail::require_z1_boundary_vanishing(f, g, "gradient identity");

    const SectionField df_bar = covariant_derivative(f, h, g, 0, /*holomorphic=*/false);
    const SectionField df = covariant_derivative(f, h, g, 0, /*holomorphic=*/true);
    const auto theta11 = chern_curvature_slice(h, g, 0, 0);

    const int r = f.rank;
    const std::size_t mr = static_cast<std::size_t>(r) * r;
    double lhs = 0.0, curv = 0.0, grad = 0.0;
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        if (!detail::z1_interior(g, n)) continue;
        lhs += fiber_norm_sq(h, n, df_bar.vec(n));
        grad += fiber_norm_sq(h, n, df.vec(n));
        cplx pair = 0.0;
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b)
                pair += theta11[static_cast<std::size_t>(n) * mr + a * r + b] * f.at(n, a) *
                        std::conj(f.at(n, b));
        curv += pair.real();
    }
    const double mu = g.cell_volume();
    GradientIdentityTerms t;
    t.lhs = lhs * mu;
    t.curvature_term = curv * mu;
    t.grad_term = grad * mu;
    t.rhs = -t.curvature_term + t.grad_term;
    t.residual = std::abs(t.lhs - t.rhs);
    const double scale = std::max(t.lhs, t.grad_term);
    t.relative_residual = scale > 0.0 ? t.residual / scale : 0.0;
    return t;
}

inline Report verify_gradient_identity(const SectionField& f, const MetricField& h,
                                       const ProductGrid& g, double rel_tol = 0.05) {
    const auto t = gradient_identity_terms(f, h, g);
    Report rep;
    rep.suite = "gradient-identity";
    rep.config["grid"] = g.describe();
    rep.config["rank"] = f.rank;
    rep.config["lhs"] = t.lhs;
    rep.config["curvature_term"] = t.curvature_term;
    rep.config["grad_term"] = t.grad_term;
    rep.add(check_leq("relative residual of the gradient identity", t.relative_residual, rel_tol,
                      0.0, "gradient-identity"));
    return rep;
}

}  // namespace dbarlab
