#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "dbarlab/cauchy.hpp"
#include "dbarlab/grid.hpp"

using namespace dbarlab;
using std::numbers::pi;

namespace {

ScalarField sample(const PlanarDomainGrid& g, const std::function<cplx(cplx)>& f) {
    ScalarField out(g.node_count());
    for (std::size_t k = 0; k < g.node_count(); ++k) out[k] = f(g.node(k));
    return out;
}

}  // namespace

TEST_CASE("boundary integral reproduces holomorphic data on the unit circle") {
    const auto g = build_disk_grid(1.0, 0.05);

    SECTION("phi == 1 at z = 0") {
        const auto tr = sample_boundary(g, [](cplx) { return cplx(1.0); }, 256);
        REQUIRE(std::abs(cauchy_boundary_integral(tr, 0.0) - 1.0) <= 1e-10);
    }
    SECTION("phi = zeta^2 at z = 0.3") {
        const auto tr = sample_boundary(g, [](cplx z) { return z * z; }, 256);
        REQUIRE(std::abs(cauchy_boundary_integral(tr, 0.3) - 0.09) <= 1e-8);
    }
    SECTION("phi = conj(zeta) at z = 0.5, residue oracle") {
        // On |zeta|=1, conj(zeta) = 1/zeta; the integrand 1/(zeta(zeta-z)) has
        // residues -1/z at 0 and 1/z at z, both inside, so the oracle value is
        // their sum.
        const cplx z = 0.5;
        const cplx oracle = (-1.0 / z) + (1.0 / z);
        const auto tr = sample_boundary(g, [](cplx w) { return std::conj(w); }, 512);
        REQUIRE(std::abs(oracle) == 0.0);
        REQUIRE(std::abs(cauchy_boundary_integral(tr, z) - oracle) <= 1e-10);
    }
    SECTION("z too close to the boundary is rejected") {
        const auto tr = sample_boundary(g, [](cplx) { return cplx(1.0); }, 64);
        REQUIRE_THROWS_AS(cauchy_boundary_integral(tr, cplx(0.95, 0.0)), std::invalid_argument);
    }
}

TEST_CASE("boundary integral over an annulus uses both oriented circles") {
    const auto g = build_annulus_grid(1.0, 0.3, 0.05);
    const auto tr = sample_boundary(g, [](cplx) { return cplx(1.0); }, 512);
    REQUIRE(tr.circles.size() == 2);
    REQUIRE(tr.circles[1].orientation == -1);
    // Cauchy for 1 on the annulus: outer circle gives 1, inner gives 0
    REQUIRE(std::abs(cauchy_boundary_integral(tr, cplx(0.6, 0.1)) - 1.0) <= 1e-10);
    // 1/zeta is holomorphic on the annulus, so both circles together
    // reproduce it: outer gives 0, inner supplies the pole residue 1/z
    const auto tr2 = sample_boundary(g, [](cplx w) { return 1.0 / w; }, 512);
    const cplx z(0.6, 0.1);
    REQUIRE(std::abs(cauchy_boundary_integral(tr2, z) - 1.0 / z) <= 1e-10);
}

TEST_CASE("area integral of a holomorphic function vanishes exactly") {
    const auto g = build_disk_grid(1.0, 0.05);
    const ScalarField zero(g.node_count(), 0.0);
    REQUIRE(cauchy_area_integral(zero, g, cplx(0.2, 0.1)) == cplx(0.0));
}

TEST_CASE("area integral alone reconstructs boundary-vanishing functions") {
    const double s = 0.02;
    const auto g = build_disk_grid(1.0, s);

    SECTION("phi = conj(z)(1-|z|^2) at z = 0.2") {
        const auto dbar = sample(g, [](cplx z) { return cplx(1.0 - 2.0 * std::norm(z)); });
        const cplx got = cauchy_area_integral(dbar, g, cplx(0.2, 0.0));
        const cplx want = std::conj(cplx(0.2)) * (1.0 - 0.04);
        REQUIRE(std::abs(got - want) <= 0.05 * std::abs(want));
    }
    SECTION("phi = (1-|z|^2)^2 at z = 0") {
        const auto dbar = sample(g, [](cplx z) { return -2.0 * z * (1.0 - std::norm(z)); });
        const cplx got = cauchy_area_integral(dbar, g, cplx(0.0));
        REQUIRE(std::abs(got - 1.0) <= 0.05);
    }
}

TEST_CASE("reconstruction error is O(s log 1/s) away from the boundary") {
    // frozen from a refinement study at s = 0.08 / 0.04 / 0.02, where the
    // measured constant peaked at 0.086
    const double C = 0.3;
    const auto phi = [](cplx z) { return std::conj(z) * (1.0 - std::norm(z)); };
    const auto dbar_phi = [](cplx z) { return cplx(1.0 - 2.0 * std::norm(z)); };
    for (double s : {0.04, 0.02}) {
        const auto g = build_disk_grid(1.0, s);
        const auto dbar = sample(g, dbar_phi);
        double err = 0.0;
        for (std::size_t k = 0; k < g.node_count(); ++k) {
            const cplx z = g.node(k);
            if (1.0 - std::abs(z) < 5.0 * s) continue;
            err = std::max(err, std::abs(cauchy_area_integral(dbar, g, z) - phi(z)));
        }
        REQUIRE(err <= C * s * std::log(1.0 / s));
    }
}

TEST_CASE("holomorphic data: zero area term plus reproducing boundary term") {
    const auto g = build_disk_grid(1.0, 0.05);
    const auto phi = [](cplx z) { return z * z + 0.5 * z; };
    const ScalarField dbar(g.node_count(), 0.0);
    const auto tr = sample_boundary(g, phi, 512);
    const cplx z(0.3, -0.2);
    REQUIRE(cauchy_area_integral(dbar, g, z) == cplx(0.0));
    REQUIRE(std::abs(cauchy_boundary_integral(tr, z) - phi(z)) <= 1e-10);
}

TEST_CASE("kernel bound holds at every interior node") {
    const double s = 0.04;
    const auto g = build_disk_grid(1.0, s);

    SECTION("phi == 0") {
        const ScalarField zero(g.node_count(), 0.0);
        const auto rep = kernel_bound_check(zero, g);
        REQUIRE(rep.all_passed());
        REQUIRE(rep.checks[0].lhs == 0.0);
    }
    SECTION("phi = 1 - |z|^2") {
        const auto rep =
            kernel_bound_check(sample(g, [](cplx z) { return cplx(1.0 - std::norm(z)); }), g);
        REQUIRE(rep.all_passed());
    }
    SECTION("phi = z (1 - |z|^2)^3") {
        const auto rep = kernel_bound_check(
            sample(g, [](cplx z) { return z * std::pow(1.0 - std::norm(z), 3); }), g);
        REQUIRE(rep.all_passed());
    }
    SECTION("non-vanishing phi is rejected") {
        const ScalarField one(g.node_count(), 1.0);
        REQUIRE_THROWS_AS(kernel_bound_check(one, g), std::invalid_argument);
    }
}
