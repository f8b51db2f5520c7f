#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "dbarlab/catalog.hpp"
#include "dbarlab/grid.hpp"
#include "dbarlab/potential.hpp"

using namespace dbarlab;
using std::numbers::pi;

TEST_CASE("constant kernel applied to constant data integrates the domain") {
    const auto g = build_disk_grid(1.0, 0.05);
    const ScalarField one(g.node_count(), 1.0);
    const auto v = apply_potential(KernelSpec::constant(1.0), one, g);
    for (std::size_t k = 0; k < g.node_count(); k += 17)
        REQUIRE(std::abs(v[k] - pi) <= 3.0 * 0.05);

    const ScalarField zero(g.node_count(), 0.0);
    const auto vz = apply_potential(KernelSpec::constant(1.0), zero, g);
    for (const cplx& x : vz) REQUIRE(x == cplx(0.0));
}

TEST_CASE("cauchy_slice potential of 1 near the origin matches the polar closed form") {
    // (1/pi) integral over the unit disk of dA/|zeta| = 2
    const auto g = build_disk_grid(1.0, 0.02);
    const ScalarField one(g.node_count(), 1.0);
    const auto v = apply_potential(KernelSpec::cauchy_slice(), one, g);
    const auto center = static_cast<std::size_t>(g.nearest_node(cplx(0.0)));
    REQUIRE(std::abs(v[center] - 2.0) <= 0.05 * 2.0);
}

TEST_CASE("young constant of a constant kernel at r = 1 is c * area") {
    const auto g = build_disk_grid(0.8, 0.05);
    const double area = static_cast<double>(g.node_count()) * g.cell_area();
    const auto A = young_constant(KernelSpec::constant(2.5), 1.0, g);
    REQUIRE(std::abs(A.A - 2.5 * area) <= 1e-10 * A.A);
    REQUIRE(A.A_pow_1_r == Catch::Approx(A.A));
}

TEST_CASE("cauchy_slice young constant on a product grid respects the analytic bound") {
    const auto d = build_disk_grid(1.0, 0.1);
    const ProductGrid g({d, d}, 1.1);
    const double r = 1.5;
    const auto A = young_constant(KernelSpec::cauchy_slice(), r, g);
    REQUIRE(std::isfinite(A.A));
    // closed form: (pi Rhat)^(n-1) * 2 pi (2 Rhat)^(2-r) / ((2-r) pi^r)
    const double bound = std::pow(pi * 1.1, 1.0) * std::pow(pi, -r) * 2.0 * pi *
                         std::pow(2.2, 2.0 - r) / (2.0 - r);
    REQUIRE(A.analytic_bound == Catch::Approx(bound).epsilon(1e-12));
    REQUIRE(A.A <= bound);
}

TEST_CASE("fast product path agrees with the generic dense path") {
    const auto d = build_disk_grid(0.5, 0.12);
    const ProductGrid g({d, d}, 1.1);
    const auto slice = KernelSpec::cauchy_slice();
    // same kernel exposed as an opaque callable forces the dense path
    const auto dense = KernelSpec::custom([&](std::int64_t x, std::int64_t y) {
        return slice.planar_value(g.factor(0), g.factor_index(x, 0), g.factor_index(y, 0));
    });
    TrigFieldGenerator gen(42);
    const auto f = gen.sample_product(g, 1.0, 1);
    const auto a = apply_potential(slice, f, g);
    const auto b = apply_potential(dense, f, g);
    for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(std::abs(a[k] - b[k]) <= 1e-10 * (1.0 + std::abs(a[k])));
    const auto Aa = young_constant(slice, 1.4, g);
    const auto Ab = young_constant(dense, 1.4, g);
    REQUIRE(Aa.A == Catch::Approx(Ab.A).epsilon(1e-10));
}

TEST_CASE("non-integrable kernel powers are flagged by the refinement probe") {
    // r = 1.5: |zeta|^(-1.5) integrable, the probe stays quiet
    const auto stable = young_divergence_probe(1.5, 0.8, 0.05);
    REQUIRE(stable.ratio <= 1.1);
    REQUIRE_FALSE(stable.flagged);
    // r = 2: log-divergent; the discrete value grows but the two-grid ratio
    // sits near 1.3, below the 1.5 power-divergence flag
    const auto log_div = young_divergence_probe(2.0, 0.8, 0.05);
    REQUIRE(log_div.fine > log_div.coarse * 1.1);
    REQUIRE_FALSE(log_div.flagged);
    // r = 3: power divergence, ratio ~ 2
    const auto power_div = young_divergence_probe(3.0, 0.8, 0.05);
    REQUIRE(power_div.ratio >= 1.5);
    REQUIRE(power_div.flagged);
}

TEST_CASE("potential estimate holds exactly on catalogue instances") {
    const auto g = build_disk_grid(1.0, 0.05);

    SECTION("f == 0 passes with both sides zero") {
        const ScalarField zero(g.node_count(), 0.0);
        const auto rep = verify_potential_estimate(KernelSpec::constant(1.0), zero, 2.0, 2.0, g);
        REQUIRE(rep.all_passed());
        REQUIRE(rep.checks[0].lhs == 0.0);
        REQUIRE(rep.checks[0].rhs == 0.0);
    }
    SECTION("random f, constant kernel, p = q = 2") {
        TrigFieldGenerator gen(7);
        const auto f = gen.sample_planar(g);
        const auto rep = verify_potential_estimate(KernelSpec::constant(1.0), f, 2.0, 2.0, g);
        REQUIRE(rep.all_passed());
        REQUIRE(rep.checks[0].slack >= 0.0);
    }
    SECTION("cauchy_slice with the eta = 0.5 instantiation (r = q = 2 - eta, p = 1)") {
        TrigFieldGenerator gen(8);
        const auto f = gen.sample_planar(g);
        const auto rep = verify_potential_estimate(KernelSpec::cauchy_slice(), f, 1.0, 1.5, g);
        REQUIRE(rep.all_passed());
        REQUIRE(rep.checks[0].slack >= 0.0);
    }
    SECTION("p > q is rejected") {
        const ScalarField zero(g.node_count(), 0.0);
        REQUIRE_THROWS_AS(verify_potential_estimate(KernelSpec::constant(1.0), zero, 3.0, 2.0, g),
                          std::invalid_argument);
    }
}

TEST_CASE("potential estimate property suite: 100 seeded random cases") {
    const auto disk = build_disk_grid(1.0, 0.1);
    const auto small = build_disk_grid(0.5, 0.1);
    const ProductGrid prod({small, small}, 1.1);

    TrigFieldGenerator gen(20240901u);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const double p = gen.uniform(1.0, 4.0);
        double q = gen.uniform(p, 8.0);
        if (trial % 10 == 3) q = kInfExponent;  // max-norm endpoint path
        const bool on_product = trial % 2 == 1;
        const KernelSpec kernel = (trial % 3 == 0) ? KernelSpec::constant(gen.uniform(0.1, 2.0))
                                                   : KernelSpec::cauchy_slice();
        Report rep;
        if (on_product) {
            const auto f = gen.sample_product(prod, 1.0, 1);
            rep = verify_potential_estimate(kernel, f, p, q, prod);
        } else {
            const auto f = gen.sample_planar(disk);
            rep = verify_potential_estimate(kernel, f, p, q, disk);
        }
        INFO("trial " << trial << " p=" << p << " q=" << q);
        REQUIRE(rep.checks[0].slack >= -1e-9 * rep.checks[0].rhs);
        ++checked;
    }
    REQUIRE(checked == 100);
}

TEST_CASE("potential is monotone and homogeneous on nonnegative data") {
    const auto g = build_disk_grid(0.6, 0.06);
    TrigFieldGenerator gen(5);
    ScalarField f(g.node_count()), h(g.node_count()), cf(g.node_count());
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        f[k] = std::abs(gen.coeff());
        h[k] = f[k] + std::abs(gen.coeff());
        cf[k] = 3.0 * f[k];
    }
    const auto kernel = KernelSpec::cauchy_slice();
    const auto vf = apply_potential(kernel, f, g);
    const auto vh = apply_potential(kernel, h, g);
    const auto vcf = apply_potential(kernel, cf, g);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        REQUIRE(vf[k].real() <= vh[k].real());
        REQUIRE(std::abs(vcf[k] - 3.0 * vf[k]) <= 1e-12 * std::abs(vcf[k]));
    }
}
