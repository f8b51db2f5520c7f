#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbarlab/bundle.hpp"
#include "dbarlab/grid.hpp"

namespace dbarlab {

// ---------------------------------------------------------------------------
// Smooth random trigonometric polynomials with a fixed seed; the single
// source of randomness for every property suite, so runs are reproducible.

class TrigFieldGenerator {
public:
    explicit TrigFieldGenerator(std::uint64_t seed) : rng_(seed) {}

    double uniform() { return (rng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    cplx coeff() { return cplx(2.0 * uniform() - 1.0, 2.0 * uniform() - 1.0); }

    /// z -> sum of c_{jk} exp(i (j x + k y) / L) over |j|,|k| <= degree.
    std::function<cplx(cplx)> planar(double length_scale = 1.0, int degree = 2) {
        struct Term {
            cplx c;
            double jx, ky;
        };
        std::vector<Term> terms;
        for (int j = -degree; j <= degree; ++j)
            for (int k = -degree; k <= degree; ++k)
                terms.push_back({coeff(), static_cast<double>(j) / length_scale,
                                 static_cast<double>(k) / length_scale});
        return [terms](cplx z) {
            cplx acc = 0.0;
            for (const auto& t : terms)
                acc += t.c * std::exp(cplx(0.0, t.jx * z.real() + t.ky * z.imag()));
            return acc;
        };
    }

    ScalarField sample_planar(const PlanarDomainGrid& g, double length_scale = 1.0, int degree = 2) {
        const auto f = planar(length_scale, degree);
        ScalarField out(g.node_count());
        for (std::size_t k = 0; k < g.node_count(); ++k) out[k] = f(g.node(k));
        return out;
    }

    /// Product of independent planar trig polynomials over the factors.
    ScalarField sample_product(const ProductGrid& g, double length_scale = 1.0, int degree = 1) {
        std::vector<std::function<cplx(cplx)>> fs;
        for (std::size_t k = 0; k < g.factor_count(); ++k) fs.push_back(planar(length_scale, degree));
        ScalarField out(static_cast<std::size_t>(g.node_count()));
        for (std::int64_t n = 0; n < g.node_count(); ++n) {
            cplx v = 1.0;
            for (std::size_t k = 0; k < g.factor_count(); ++k) v *= fs[k](g.coord(n, k));
            out[static_cast<std::size_t>(n)] = v;
        }
        return out;
    }

private:
    std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// C^2 piecewise-polynomial bump profiles. The rising edge is the quintic
// smoothstep t^3 (10 - 15 t + 6 t^2), which has two vanishing derivatives at
// both ends; coefficients are part of the published configuration.

inline double smoothstep_quintic(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

inline double smoothstep_quintic_deriv(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 30.0 * t * t * (1.0 - t) * (1.0 - t);
}

/// Radial plateau profile: 0 outside [lo, hi], 1 on [lo + rise, hi - rise].
struct RadialBump {
    double lo, hi, rise;

    double value(double r) const {
        if (r <= lo || r >= hi) return 0.0;
        if (r < lo + rise) return smoothstep_quintic((r - lo) / rise);
        if (r > hi - rise) return smoothstep_quintic((hi - r) / rise);
        return 1.0;
    }

    double deriv(double r) const {
        if (r <= lo || r >= hi) return 0.0;
        if (r < lo + rise) return smoothstep_quintic_deriv((r - lo) / rise) / rise;
        if (r > hi - rise) return -smoothstep_quintic_deriv((hi - r) / rise) / rise;
        return 0.0;
    }

    /// Wirtinger derivatives of r -> value(|z|): d/dz = rho'(r) zbar/(2r).
    cplx d_z(cplx z) const {
        const double r = std::abs(z);
        if (r == 0.0) return 0.0;
        return deriv(r) * std::conj(z) / (2.0 * r);
    }
    cplx d_zbar(cplx z) const {
        const double r = std::abs(z);
        if (r == 0.0) return 0.0;
        return deriv(r) * z / (2.0 * r);
    }
};

// ---------------------------------------------------------------------------
// Named boundary-vanishing scalar functions on the unit disk, with analytic
// antiholomorphic derivatives (quadrature tests need the exact field).

struct NamedScalarFunction {
    std::string name;
    std::function<cplx(cplx)> value;
    std::function<cplx(cplx)> dbar;
};

inline const std::vector<NamedScalarFunction>& disk_function_catalog() {
    static const std::vector<NamedScalarFunction> cat = {
        {"parabolic-bump", [](cplx z) { return cplx(1.0 - std::norm(z)); },
         [](cplx z) { return -z; }},
        {"conj-linear-bump", [](cplx z) { return std::conj(z) * (1.0 - std::norm(z)); },
         [](cplx z) { return cplx(1.0 - 2.0 * std::norm(z)); }},
        {"cubic-bump", [](cplx z) { return z * std::pow(1.0 - std::norm(z), 3); },
         [](cplx z) { return -3.0 * z * z * std::pow(1.0 - std::norm(z), 2); }},
    };
    return cat;
}

inline const NamedScalarFunction& find_disk_function(const std::string& name) {
    for (const auto& f : disk_function_catalog())
        if (f.name == name) return f;
    throw std::invalid_argument("unknown catalog function: " + name);
}

// ---------------------------------------------------------------------------
// Metric catalog. Names double as CLI identifiers:
//   flat          identity fibre metric (any rank)
//   gaussian      e^{-K|z|^2} I, curvature K delta_{jk} I
//   rank2-offdiag rank-2 with off-diagonal z_1 dependence
//   singular-a    e^{-|z_1|^{2a}}, curvature ~ a^2 |z_1|^{2a-2}, in L^p
//                 exactly for p < 1/(1-a)

struct MetricParams {
    double K = 1.0;  // gaussian weight exponent
    double a = 0.75;  // singular family exponent, 0 < a < 1
};

inline MetricField make_named_metric(const std::string& name, const ProductGrid& g, int rank,
                                     const MetricParams& params = {}) {
    if (name == "flat") {
        return make_metric(g, rank, [rank](const std::vector<cplx>&, SmallMat& m) {
            m.setIdentity(rank, rank);
        });
    }
    if (name == "gaussian") {
        const double K = params.K;
        return make_metric(g, rank, [rank, K](const std::vector<cplx>& z, SmallMat& m) {
            double r2 = 0.0;
            for (const cplx& zk : z) r2 += std::norm(zk);
            m.setIdentity(rank, rank);
            m *= std::exp(-K * r2);
        });
    }
    if (name == "rank2-offdiag") {
        if (rank != 2) throw std::invalid_argument("metric rank2-offdiag requires rank 2");
        return make_metric(g, rank, [](const std::vector<cplx>& z, SmallMat& m) {
            const cplx z1 = z[0];
            m.setIdentity(2, 2);
            m(0, 0) += 0.3 * std::norm(z1);
            m(1, 1) += 0.3 * std::norm(z1);
            m(0, 1) = 0.3 * z1;
            m(1, 0) = 0.3 * std::conj(z1);
        });
    }
    if (name == "singular-a") {
        if (rank != 1) throw std::invalid_argument("metric singular-a requires rank 1");
        const double a = params.a;
        if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("metric singular-a: need 0 < a < 1");
        return make_metric(g, 1, [a](const std::vector<cplx>& z, SmallMat& m) {
            m.resize(1, 1);
            m(0, 0) = std::exp(-std::pow(std::abs(z[0]), 2.0 * a));
        });
    }
    throw std::invalid_argument("unknown catalog metric: " + name);
}

inline const std::vector<std::string>& metric_catalog_names() {
    static const std::vector<std::string> names = {"flat", "gaussian", "rank2-offdiag",
                                                   "singular-a"};
    return names;
}

// ---------------------------------------------------------------------------
// Catalogue sections vanishing on the z_1 boundary of D x W, the standing
// hypothesis of the gradient identity and the iteration chain.

inline double z1_vanishing_window(const ProductGrid& g, cplx z1) {
    const auto& f0 = g.factor(0);
    const double Ro = f0.outer_radius(), Ri = f0.inner_radius();
    const double r2 = std::norm(z1);
    double w = (Ro * Ro - r2) / (Ro * Ro);
    if (Ri > 0.0) {
        // the two-circle product profile peaks low relative to its edge slope,
        // so square it to keep the lattice boundary trace small
        w *= (r2 - Ri * Ri) / (Ro * Ro);
        w *= w;
    }
    return w;
}

/// (R^2 - |z_1|^2)/R^2 times a constant vector (annulus variant uses the
/// product of both boundary distances).
inline SectionField make_boundary_vanishing_section(const ProductGrid& g, int rank) {
    return sample_section(g, rank, [&g, rank](const std::vector<cplx>& z, SmallVec& out) {
        out.setZero(rank);
        out(0) = z1_vanishing_window(g, z[0]);
    });
}

/// Complex variant of the vanishing section; unlike the real profile, its
/// discrete gradient identity residual is nonzero even for the flat metric,
/// which makes it the right probe for refinement studies.
inline SectionField make_oscillating_vanishing_section(const ProductGrid& g, int rank) {
    return sample_section(g, rank, [&g, rank](const std::vector<cplx>& z, SmallVec& out) {
        const double w = z1_vanishing_window(g, z[0]);
        const cplx phase =
            std::exp(cplx(0.0, 0.7 * z[0].real() + 0.4 * z[0].imag() + 0.3 * z[1].real()));
        out.setZero(rank);
        out(0) = w * phase;
        if (rank > 1) out(1) = 0.5 * w * std::conj(z[0]) * phase;
    });
}

/// Seeded random smooth section times the squared z_1 vanishing window (the
/// random amplitude is unbounded relative to its boundary trace, so the
/// window vanishes to second order).
inline SectionField make_random_vanishing_section(const ProductGrid& g, int rank,
                                                  TrigFieldGenerator& gen) {
    SectionField f(g, rank);
    for (int a = 0; a < rank; ++a) {
        const auto sf = gen.sample_product(g, 1.0, 1);
        for (std::int64_t n = 0; n < g.node_count(); ++n) f.at(n, a) = sf[static_cast<std::size_t>(n)];
    }
    for (std::int64_t n = 0; n < g.node_count(); ++n) {
        const double w = z1_vanishing_window(g, g.coord(n, 0));
        for (int a = 0; a < rank; ++a) f.at(n, a) *= w * w;
    }
    return f;
}

}  // namespace dbarlab
