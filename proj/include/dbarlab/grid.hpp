#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace dbarlab {

using cplx = std::complex<double>;

/// Complex-valued samples in node-index order of the grid they belong to.
using ScalarField = std::vector<cplx>;

enum class BoundaryMask : std::uint8_t {
    Interior = 0,
    NearOuter = 1,  // within one spacing of the outer circle
    NearInner = 2,  // within one spacing of the inner circle (annulus only)
};

/// Finite-difference stencil along one real axis: sum of w[k] * f(idx[k]).
/// Central where both neighbours exist, one-sided second order at the rim,
/// first order as a last resort. All variants are exact on affine fields.
struct AxisStencil {
    std::array<std::int64_t, 3> idx{{-1, -1, -1}};
    std::array<double, 3> w{{0.0, 0.0, 0.0}};
    int count = 0;
};

/// Uniform Cartesian lattice clipped to a disk or annulus centred at the
/// origin. Nodes sit at ((i+ox) + i(j+oy))*spacing and satisfy
/// inner < |z| < outer strictly. Immutable after construction.
class PlanarDomainGrid {
public:
    enum class Kind { Disk, Annulus };

    PlanarDomainGrid(Kind kind, double outer, double inner, double spacing,
                     double offset_x = 0.5, double offset_y = 0.5)
        : kind_(kind), outer_(outer), inner_(inner), spacing_(spacing),
          offset_x_(offset_x), offset_y_(offset_y) {
        if (!(inner >= 0.0) || !(inner < outer))
            throw std::invalid_argument("grid: require 0 <= inner < outer");
        if (!(spacing > 0.0) || !(spacing < (outer - inner) / 4.0))
            throw std::invalid_argument("grid: require 0 < spacing < (outer-inner)/4");

        const std::int64_t m = static_cast<std::int64_t>(std::ceil(outer / spacing)) + 2;
        lat_min_ = -m;
        lat_extent_ = 2 * m + 1;
        lat_index_.assign(static_cast<std::size_t>(lat_extent_) * lat_extent_, -1);

        for (std::int64_t j = -m; j <= m; ++j) {
            for (std::int64_t i = -m; i <= m; ++i) {
                const cplx z((static_cast<double>(i) + offset_x) * spacing,
                             (static_cast<double>(j) + offset_y) * spacing);
                const double r = std::abs(z);
                if (r <= inner || r >= outer) continue;
                lat_index_[cell(i, j)] = static_cast<std::int64_t>(nodes_.size());
                nodes_.push_back(z);
                lat_i_.push_back(i);
                lat_j_.push_back(j);
                BoundaryMask mk = BoundaryMask::Interior;
                if (outer - r <= spacing) mk = BoundaryMask::NearOuter;
                else if (kind == Kind::Annulus && r - inner <= spacing) mk = BoundaryMask::NearInner;
                mask_.push_back(mk);
            }
        }
        if (nodes_.empty())
            throw std::runtime_error("grid: spacing too coarse, domain contains no node");

        dx_.resize(nodes_.size());
        dy_.resize(nodes_.size());
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            dx_[k] = make_stencil(lat_i_[k], lat_j_[k], /*axis_x=*/true);
            dy_[k] = make_stencil(lat_i_[k], lat_j_[k], /*axis_x=*/false);
        }
    }

    Kind kind() const { return kind_; }
    double outer_radius() const { return outer_; }
    double inner_radius() const { return inner_; }
    double spacing() const { return spacing_; }
    double cell_area() const { return spacing_ * spacing_; }
    std::size_t node_count() const { return nodes_.size(); }
    const std::vector<cplx>& nodes() const { return nodes_; }
    cplx node(std::size_t k) const { return nodes_[k]; }
    BoundaryMask mask(std::size_t k) const { return mask_[k]; }
    bool is_interior(std::size_t k) const { return mask_[k] == BoundaryMask::Interior; }

    const AxisStencil& stencil_x(std::size_t k) const { return dx_[k]; }
    const AxisStencil& stencil_y(std::size_t k) const { return dy_[k]; }

    /// Node index of lattice cell (i,j), or -1 when outside the domain.
    std::int64_t node_at(std::int64_t i, std::int64_t j) const {
        if (i < lat_min_ || j < lat_min_ || i - lat_min_ >= lat_extent_ || j - lat_min_ >= lat_extent_)
            return -1;
        return lat_index_[cell(i, j)];
    }

    std::int64_t nearest_node(cplx z) const {
        const std::int64_t i = static_cast<std::int64_t>(std::llround(z.real() / spacing_ - offset_x_));
        const std::int64_t j = static_cast<std::int64_t>(std::llround(z.imag() / spacing_ - offset_y_));
        std::int64_t best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::int64_t dj = -1; dj <= 1; ++dj)
            for (std::int64_t di = -1; di <= 1; ++di) {
                const std::int64_t n = node_at(i + di, j + dj);
                if (n < 0) continue;
                const double d = std::abs(nodes_[static_cast<std::size_t>(n)] - z);
                if (d < best_d) { best_d = d; best = n; }
            }
        return best;
    }

    nlohmann::ordered_json describe() const {
        nlohmann::ordered_json j;
        j["kind"] = kind_ == Kind::Disk ? "disk" : "annulus";
        j["outer"] = outer_;
        j["inner"] = inner_;
        j["spacing"] = spacing_;
        j["offset"] = {offset_x_, offset_y_};
        j["nodes"] = node_count();
        return j;
    }

private:
    std::size_t cell(std::int64_t i, std::int64_t j) const {
        return static_cast<std::size_t>(j - lat_min_) * static_cast<std::size_t>(lat_extent_) +
               static_cast<std::size_t>(i - lat_min_);
    }

    AxisStencil make_stencil(std::int64_t i, std::int64_t j, bool axis_x) const {
        const auto at = [&](std::int64_t d) {
            return axis_x ? node_at(i + d, j) : node_at(i, j + d);
        };
        const std::int64_t self = at(0);
        const double s = spacing_;
        AxisStencil st;
        const auto set = [&](std::int64_t a, double wa, std::int64_t b, double wb,
                             std::int64_t c, double wc, int n) {
            st.idx = {a, b, c};
            st.w = {wa, wb, wc};
            st.count = n;
        };
        if (at(1) >= 0 && at(-1) >= 0) {
            set(at(1), 0.5 / s, at(-1), -0.5 / s, -1, 0.0, 2);
        } else if (at(1) >= 0 && at(2) >= 0) {
            set(self, -1.5 / s, at(1), 2.0 / s, at(2), -0.5 / s, 3);
        } else if (at(-1) >= 0 && at(-2) >= 0) {
            set(self, 1.5 / s, at(-1), -2.0 / s, at(-2), 0.5 / s, 3);
        } else if (at(1) >= 0) {
            set(at(1), 1.0 / s, self, -1.0 / s, -1, 0.0, 2);
        } else if (at(-1) >= 0) {
            set(self, 1.0 / s, at(-1), -1.0 / s, -1, 0.0, 2);
        } else {
            st.count = 0;
        }
        return st;
    }

    Kind kind_;
    double outer_, inner_, spacing_, offset_x_, offset_y_;
    std::int64_t lat_min_ = 0, lat_extent_ = 0;
    std::vector<std::int64_t> lat_index_;
    std::vector<cplx> nodes_;
    std::vector<std::int64_t> lat_i_, lat_j_;
    std::vector<BoundaryMask> mask_;
    std::vector<AxisStencil> dx_, dy_;
};

inline PlanarDomainGrid build_annulus_grid(double outer, double inner, double spacing,
                                           double ox = 0.5, double oy = 0.5) {
    const auto kind = inner > 0.0 ? PlanarDomainGrid::Kind::Annulus : PlanarDomainGrid::Kind::Disk;
    return PlanarDomainGrid(kind, outer, inner, spacing, ox, oy);
}

inline PlanarDomainGrid build_disk_grid(double radius, double spacing,
                                        double ox = 0.5, double oy = 0.5) {
    return PlanarDomainGrid(PlanarDomainGrid::Kind::Disk, radius, 0.0, spacing, ox, oy);
}

/// Cartesian product of planar grids, flat-indexed with the first factor
/// fastest. The whole product must fit inside the polydisk of radius Rhat.
class ProductGrid {
public:
    ProductGrid(std::vector<PlanarDomainGrid> factors, double Rhat)
        : factors_(std::move(factors)), Rhat_(Rhat) {
        if (factors_.empty()) throw std::invalid_argument("product grid: no factors");
        if (!(Rhat_ > 1.0)) throw std::invalid_argument("product grid: require Rhat > 1");
        strides_.resize(factors_.size());
        std::int64_t total = 1;
        for (std::size_t k = 0; k < factors_.size(); ++k) {
            strides_[k] = total;
            total *= static_cast<std::int64_t>(factors_[k].node_count());
            // containment check is per factor: |z_k| < outer <= Rhat works for
            // every product node at once
            if (!(factors_[k].outer_radius() <= Rhat_))
                throw std::invalid_argument("product grid: factor exceeds polydisk radius Rhat");
        }
        total_ = total;
        cell_volume_ = 1.0;
        for (const auto& f : factors_) cell_volume_ *= f.cell_area();
    }

    std::size_t factor_count() const { return factors_.size(); }
    const PlanarDomainGrid& factor(std::size_t k) const { return factors_[k]; }
    double Rhat() const { return Rhat_; }
    std::int64_t node_count() const { return total_; }
    double cell_volume() const { return cell_volume_; }
    std::int64_t stride(std::size_t k) const { return strides_[k]; }

    std::int64_t factor_index(std::int64_t flat, std::size_t k) const {
        return (flat / strides_[k]) % static_cast<std::int64_t>(factors_[k].node_count());
    }

    cplx coord(std::int64_t flat, std::size_t k) const {
        return factors_[k].node(static_cast<std::size_t>(factor_index(flat, k)));
    }

    double abs_sq(std::int64_t flat) const {
        double r2 = 0.0;
        for (std::size_t k = 0; k < factors_.size(); ++k) r2 += std::norm(coord(flat, k));
        return r2;
    }

    /// Flat index of the node with factor-k index replaced by fk.
    std::int64_t with_factor(std::int64_t flat, std::size_t k, std::int64_t fk) const {
        const std::int64_t old = factor_index(flat, k);
        return flat + (fk - old) * strides_[k];
    }

    nlohmann::ordered_json describe() const {
        nlohmann::ordered_json j;
        j["Rhat"] = Rhat_;
        j["factors"] = nlohmann::ordered_json::array();
        for (const auto& f : factors_) j["factors"].push_back(f.describe());
        j["nodes"] = total_;
        return j;
    }

private:
    std::vector<PlanarDomainGrid> factors_;
    double Rhat_;
    std::vector<std::int64_t> strides_;
    std::int64_t total_ = 0;
    double cell_volume_ = 0.0;
};

// ---------------------------------------------------------------------------
// Quadrature. Summation runs in node-index order so results are reproducible
// bit for bit.

inline cplx integrate(const ScalarField& f, const PlanarDomainGrid& g) {
    if (f.size() != g.node_count()) throw std::invalid_argument("integrate: field/grid size mismatch");
    cplx acc = 0.0;
    for (const cplx& v : f) acc += v;
    return acc * g.cell_area();
}

inline cplx integrate(const ScalarField& f, const ProductGrid& g) {
    if (static_cast<std::int64_t>(f.size()) != g.node_count())
        throw std::invalid_argument("integrate: field/grid size mismatch");
    cplx acc = 0.0;
    for (const cplx& v : f) acc += v;
    return acc * g.cell_volume();
}

inline double integrate_real(const std::vector<double>& f, const ProductGrid& g) {
    if (static_cast<std::int64_t>(f.size()) != g.node_count())
        throw std::invalid_argument("integrate: field/grid size mismatch");
    double acc = 0.0;
    for (double v : f) acc += v;
    return acc * g.cell_volume();
}

// ---------------------------------------------------------------------------
// Wirtinger derivatives: d_z = (d_x - i d_y)/2, d_zbar = (d_x + i d_y)/2.

inline cplx apply_stencil(const AxisStencil& st, const ScalarField& f) {
    cplx acc = 0.0;
    for (int t = 0; t < st.count; ++t) acc += st.w[t] * f[static_cast<std::size_t>(st.idx[t])];
    return acc;
}

inline std::pair<ScalarField, ScalarField>
wirtinger_derivatives(const ScalarField& f, const PlanarDomainGrid& g) {
    if (f.size() != g.node_count()) throw std::invalid_argument("wirtinger: field/grid size mismatch");
    ScalarField dz(f.size()), dzb(f.size());
    const cplx I(0.0, 1.0);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const cplx fx = apply_stencil(g.stencil_x(k), f);
        const cplx fy = apply_stencil(g.stencil_y(k), f);
        dz[k] = 0.5 * (fx - I * fy);
        dzb[k] = 0.5 * (fx + I * fy);
    }
    return {std::move(dz), std::move(dzb)};
}

namespace detail {

// Directional planar stencil applied along factor k of a product grid.
template <bool Bar, class FieldAt>
cplx product_wirtinger_at(const ProductGrid& g, std::size_t k, std::int64_t flat,
                          FieldAt&& value_at) {
    const auto& pg = g.factor(k);
    const auto fi = static_cast<std::size_t>(g.factor_index(flat, k));
    const AxisStencil& sx = pg.stencil_x(fi);
    const AxisStencil& sy = pg.stencil_y(fi);
    cplx fx = 0.0, fy = 0.0;
    for (int t = 0; t < sx.count; ++t)
        fx += sx.w[t] * value_at(g.with_factor(flat, k, sx.idx[t]));
    for (int t = 0; t < sy.count; ++t)
        fy += sy.w[t] * value_at(g.with_factor(flat, k, sy.idx[t]));
    const cplx I(0.0, 1.0);
    return Bar ? 0.5 * (fx + I * fy) : 0.5 * (fx - I * fy);
}

}  // namespace detail

/// d/dz_k and d/dzbar_k of a scalar field on a product grid.
inline cplx d_z(const ProductGrid& g, const ScalarField& f, std::size_t k, std::int64_t flat) {
    return detail::product_wirtinger_at<false>(g, k, flat, [&](std::int64_t n) { return f[static_cast<std::size_t>(n)]; });
}
inline cplx d_zbar(const ProductGrid& g, const ScalarField& f, std::size_t k, std::int64_t flat) {
    return detail::product_wirtinger_at<true>(g, k, flat, [&](std::int64_t n) { return f[static_cast<std::size_t>(n)]; });
}

// ---------------------------------------------------------------------------
// Field serialization: flat (re, im) pairs in node-index order.

inline nlohmann::ordered_json field_to_json(const ScalarField& f) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const cplx& v : f) arr.push_back({v.real(), v.imag()});
    return arr;
}

inline ScalarField field_from_json(const nlohmann::json& j) {
    ScalarField f;
    f.reserve(j.size());
    for (const auto& p : j) f.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    return f;
}

}  // namespace dbarlab
