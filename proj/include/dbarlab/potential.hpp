#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <variant>
#include <vector>

#include "dbarlab/cell_integrals.hpp"
#include "dbarlab/grid.hpp"
#include "dbarlab/report.hpp"

namespace dbarlab {

/// Finite surrogate for the q = infinity endpoint: norms with q >= this value
/// take the max-norm code path.
inline constexpr double kInfExponent = 1e6;

/// Nonnegative kernel on grid x grid. The built-in cauchy_slice kind is
///   h(z, zeta) = 1/(pi |z_1 - zeta_1|),
/// singular along the diagonal of the first coordinate; diagonal entries are
/// regularized by averaging the kernel over one lattice cell so that the
/// discrete operator and the discrete Young constant see the same finite
/// matrix.
class KernelSpec {
public:
    using Callable = std::function<double(std::int64_t, std::int64_t)>;

    static KernelSpec cauchy_slice() {
        KernelSpec k;
        k.kind_ = Kind::CauchySlice;
        return k;
    }

    static KernelSpec constant(double c) {
        KernelSpec k;
        k.kind_ = Kind::Custom;
        k.fn_ = [c](std::int64_t, std::int64_t) { return c; };
        return k;
    }

    static KernelSpec custom(Callable fn) {
        KernelSpec k;
        k.kind_ = Kind::Custom;
        k.fn_ = std::move(fn);
        return k;
    }

    bool is_cauchy_slice() const { return kind_ == Kind::CauchySlice; }

    /// Kernel value between planar nodes (used by the cauchy_slice fast path).
    double planar_value(const PlanarDomainGrid& g, std::int64_t x, std::int64_t y) const {
        if (x == y)
            return cell_integral_inv_abs_square(g.spacing()) / (std::numbers::pi * g.cell_area());
        return 1.0 / (std::numbers::pi *
                      std::abs(g.node(static_cast<std::size_t>(x)) - g.node(static_cast<std::size_t>(y))));
    }

    double value(const PlanarDomainGrid& g, std::int64_t x, std::int64_t y) const {
        if (kind_ == Kind::Custom) return fn_(x, y);
        return planar_value(g, x, y);
    }

    double value(const ProductGrid& g, std::int64_t x, std::int64_t y) const {
        if (kind_ == Kind::Custom) return fn_(x, y);
        const std::int64_t x1 = g.factor_index(x, 0), y1 = g.factor_index(y, 0);
        return planar_value(g.factor(0), x1, y1);
    }

private:
    enum class Kind { CauchySlice, Custom };
    Kind kind_ = Kind::Custom;
    Callable fn_;
};

// ---------------------------------------------------------------------------
// (V_h f)(x) = sum_y h(x, y) f(y) mu(y), dense O(M^2) with a separable fast
// path for cauchy_slice on product grids (the kernel only sees factor 0).

inline ScalarField apply_potential(const KernelSpec& k, const ScalarField& f,
                                   const PlanarDomainGrid& g) {
    if (f.size() != g.node_count()) throw std::invalid_argument("potential: size mismatch");
    const std::int64_t m = static_cast<std::int64_t>(g.node_count());
    ScalarField out(f.size());
    const double mu = g.cell_area();
    for (std::int64_t x = 0; x < m; ++x) {
        cplx acc = 0.0;
        for (std::int64_t y = 0; y < m; ++y)
            acc += k.value(g, x, y) * f[static_cast<std::size_t>(y)];
        out[static_cast<std::size_t>(x)] = acc * mu;
    }
    return out;
}

inline ScalarField apply_potential(const KernelSpec& k, const ScalarField& f,
                                   const ProductGrid& g) {
    if (static_cast<std::int64_t>(f.size()) != g.node_count())
        throw std::invalid_argument("potential: size mismatch");
    const std::int64_t m = g.node_count();
    ScalarField out(f.size());
    if (k.is_cauchy_slice()) {
        // partial sums over the complement of factor 0, then a planar pass
        const auto& f0 = g.factor(0);
        const std::int64_t m0 = static_cast<std::int64_t>(f0.node_count());
        const double mu_rest = g.cell_volume() / f0.cell_area();
        std::vector<cplx> partial(static_cast<std::size_t>(m0), 0.0);
        for (std::int64_t y = 0; y < m; ++y)
            partial[static_cast<std::size_t>(g.factor_index(y, 0))] += f[static_cast<std::size_t>(y)];
        std::vector<cplx> row(static_cast<std::size_t>(m0), 0.0);
        for (std::int64_t x1 = 0; x1 < m0; ++x1) {
            cplx acc = 0.0;
            for (std::int64_t y1 = 0; y1 < m0; ++y1)
                acc += k.planar_value(f0, x1, y1) * partial[static_cast<std::size_t>(y1)];
            row[static_cast<std::size_t>(x1)] = acc * f0.cell_area() * mu_rest;
        }
        for (std::int64_t x = 0; x < m; ++x)
            out[static_cast<std::size_t>(x)] = row[static_cast<std::size_t>(g.factor_index(x, 0))];
        return out;
    }
    const double mu = g.cell_volume();
    for (std::int64_t x = 0; x < m; ++x) {
        cplx acc = 0.0;
        for (std::int64_t y = 0; y < m; ++y)
            acc += k.value(g, x, y) * f[static_cast<std::size_t>(y)];
        out[static_cast<std::size_t>(x)] = acc * mu;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Discrete L^p norms with the grid measure.

namespace detail {

template <class Grid>
double grid_measure(const Grid& g);
template <>
inline double grid_measure<PlanarDomainGrid>(const PlanarDomainGrid& g) { return g.cell_area(); }
template <>
inline double grid_measure<ProductGrid>(const ProductGrid& g) { return g.cell_volume(); }

}  // namespace detail

template <class Grid>
double lp_norm_scalar(const ScalarField& f, double p, const Grid& g) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: require p >= 1");
    if (p >= kInfExponent) {
        double mx = 0.0;
        for (const cplx& v : f) mx = std::max(mx, std::abs(v));
        return mx;
    }
    double acc = 0.0;
    for (const cplx& v : f) acc += std::pow(std::abs(v), p);
    return std::pow(acc * detail::grid_measure(g), 1.0 / p);
}

// ---------------------------------------------------------------------------
// Young constant A = sup_x sum_y h(x,y)^r mu(y). The transposed sup is folded
// in, which is what the L^p -> L^q proof consumes; kernels here are symmetric
// so both coincide. Accumulation runs in log space: r can be large and the
// regularized diagonal grows like 1/spacing.

struct YoungConstant {
    double A = 0.0;        // sup_x of the row integrals of h^r
    double A_pow_1_r = 0.0;  // A^(1/r)
    double r = 1.0;
    double analytic_bound = std::numeric_limits<double>::quiet_NaN();  // cauchy_slice only
};

namespace detail {

template <class Grid>
double young_row_sup(const KernelSpec& k, double r, const Grid& g, std::int64_t m, double mu) {
    double sup_log = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(static_cast<std::size_t>(m));
    for (std::int64_t x = 0; x < m; ++x) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::int64_t y = 0; y < m; ++y) {
            const double v = k.value(g, x, y);
            logs[static_cast<std::size_t>(y)] = v > 0.0 ? r * std::log(v) : -std::numeric_limits<double>::infinity();
            mx = std::max(mx, logs[static_cast<std::size_t>(y)]);
        }
        if (mx == -std::numeric_limits<double>::infinity()) continue;
        double acc = 0.0;
        for (double lv : logs) acc += std::exp(lv - mx);
        sup_log = std::max(sup_log, mx + std::log(acc * mu));
    }
    return sup_log;
}

// cauchy_slice rows depend only on the factor-0 node, so the row integral is
// the planar row integral times the measured volume of the remaining factors.
inline double young_row_sup_cauchy(const KernelSpec& k, double r, const ProductGrid& g) {
    const auto& f0 = g.factor(0);
    const std::int64_t m0 = static_cast<std::int64_t>(f0.node_count());
    double rest_vol = 1.0;
    for (std::size_t j = 1; j < g.factor_count(); ++j)
        rest_vol *= static_cast<double>(g.factor(j).node_count()) * g.factor(j).cell_area();
    const double planar = young_row_sup(k, r, f0, m0, f0.cell_area());
    return planar + std::log(rest_vol);
}

}  // namespace detail

inline double young_analytic_bound(double r, double Rhat, std::size_t n) {
    if (!(r < 2.0)) return std::numeric_limits<double>::infinity();
    const double pi = std::numbers::pi;
    // (pi Rhat)^(n-1) * integral over |zeta|<2 Rhat of (pi |zeta|)^(-r)
    return std::pow(pi * Rhat, static_cast<double>(n - 1)) * std::pow(pi, -r) * 2.0 * pi *
           std::pow(2.0 * Rhat, 2.0 - r) / (2.0 - r);
}

inline YoungConstant young_constant(const KernelSpec& k, double r, const PlanarDomainGrid& g) {
    if (!(r >= 1.0)) throw std::invalid_argument("young_constant: require r >= 1");
    YoungConstant out;
    out.r = r;
    const double lg =
        detail::young_row_sup(k, r, g, static_cast<std::int64_t>(g.node_count()), g.cell_area());
    out.A = std::exp(lg);
    out.A_pow_1_r = std::exp(lg / r);
    return out;
}

inline YoungConstant young_constant(const KernelSpec& k, double r, const ProductGrid& g) {
    if (!(r >= 1.0)) throw std::invalid_argument("young_constant: require r >= 1");
    YoungConstant out;
    out.r = r;
    const double lg = k.is_cauchy_slice()
                          ? detail::young_row_sup_cauchy(k, r, g)
                          : detail::young_row_sup(k, r, g, g.node_count(), g.cell_volume());
    out.A = std::exp(lg);
    out.A_pow_1_r = std::exp(lg / r);
    if (k.is_cauchy_slice())
        out.analytic_bound = young_analytic_bound(r, g.Rhat(), g.factor_count());
    return out;
}

/// Two-grid refinement probe for sup_x of the row integrals of h^r: ratios
/// well above 1 flag a kernel power that is not integrable in the continuum.
struct DivergenceProbe {
    double coarse = 0.0;
    double fine = 0.0;
    double ratio = 0.0;
    bool flagged = false;
};

inline DivergenceProbe young_divergence_probe(double r, double radius, double spacing) {
    const auto kernel = KernelSpec::cauchy_slice();
    const auto coarse = young_constant(kernel, r, build_disk_grid(radius, spacing));
    const auto fine = young_constant(kernel, r, build_disk_grid(radius, spacing / 2.0));
    DivergenceProbe p;
    p.coarse = coarse.A;
    p.fine = fine.A;
    p.ratio = fine.A / coarse.A;
    p.flagged = p.ratio > 1.5;
    return p;
}

// ---------------------------------------------------------------------------
// The L^p -> L^q estimate itself: ||V_h f||_q <= A^(1/r) ||f||_p with
// 1/r = 1 + 1/q - 1/p. Discretely exact, so the pass tolerance is pure
// rounding slack.

template <class Grid>
Report verify_potential_estimate(const KernelSpec& k, const ScalarField& f, double p, double q,
                                 const Grid& g) {
    if (!(p >= 1.0) || !(q >= p)) throw std::invalid_argument("potential estimate: require 1 <= p <= q");
    const double inv_r = q >= kInfExponent ? 1.0 - 1.0 / p : 1.0 + 1.0 / q - 1.0 / p;

    ScalarField absf(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) absf[i] = std::abs(f[i]);

    const ScalarField vf = apply_potential(k, absf, g);
    const double lhs = lp_norm_scalar(vf, q, g);

    // p = 1, q = infinity degenerates to r = infinity: A^(1/r) is the kernel sup
    double a_factor, a_value, r;
    if (inv_r < 1e-12) {
        r = kInfExponent;
        double sup = 0.0;
        const std::int64_t m = static_cast<std::int64_t>(f.size());
        for (std::int64_t x = 0; x < m; ++x)
            for (std::int64_t y = 0; y < m; ++y) sup = std::max(sup, k.value(g, x, y));
        a_factor = sup;
        a_value = sup;
    } else {
        r = 1.0 / inv_r;
        const auto A = young_constant(k, r, g);
        a_factor = A.A_pow_1_r;
        a_value = A.A;
    }
    const double rhs = a_factor * lp_norm_scalar(absf, p, g);

    Report rep;
    rep.suite = "potential-estimate";
    rep.config["p"] = p;
    rep.config["q"] = q >= kInfExponent ? kInfExponent : q;
    rep.config["r"] = r;
    rep.config["A"] = a_value;
    rep.config["A_pow_1_r"] = a_factor;
    rep.add(check_leq("Lq norm of V_h f vs A^(1/r) ||f||_p", lhs, rhs, 1e-9 * rhs,
                      "young-potential-bound"));
    return rep;
}

}  // namespace dbarlab
