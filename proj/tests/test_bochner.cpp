#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "dbarlab/bochner.hpp"
#include "dbarlab/catalog.hpp"

using namespace dbarlab;
using std::numbers::pi;

namespace {

ProductGrid bidisk(double radius, double spacing) {
    const auto d = build_disk_grid(radius, spacing);
    return ProductGrid({d, d}, 1.1);
}

}  // namespace

TEST_CASE("gradient identity: zero section gives zero residual") {
    const auto g = bidisk(0.5, 0.1);
    const auto h = make_named_metric("flat", g, 1);
    const SectionField f(g, 1);
    const auto t = gradient_identity_terms(f, h, g);
    REQUIRE(t.residual == 0.0);
    REQUIRE(t.relative_residual == 0.0);
}

TEST_CASE("gradient identity on the unit bidisk with the flat metric") {
    const double s = 0.05;
    const auto g = bidisk(1.0, s);
    const auto h = make_named_metric("flat", g, 1);
    const auto f = make_boundary_vanishing_section(g, 1);

    const auto t = gradient_identity_terms(f, h, g);
    // dbar f = -z1: over the full bidisk both sides approach (pi/2) * pi;
    // the one-cell collar exclusion trims that to (pi/2)(1-s)^4 * pi
    REQUIRE(t.lhs == Catch::Approx(pi * pi / 2.0 * std::pow(1.0 - s, 4)).epsilon(0.05));
    REQUIRE(t.curvature_term == 0.0);
    REQUIRE(t.relative_residual <= 0.05);

    const auto rep = verify_gradient_identity(f, h, g);
    REQUIRE(rep.all_passed());
}

TEST_CASE("flat metric with a real profile: the identity is pointwise exact") {
    // real data makes |dbar f| = |grad f| node by node, so the residual is 0
    const auto g = bidisk(0.5, 0.1);
    const auto h = make_named_metric("flat", g, 1);
    const auto f = make_boundary_vanishing_section(g, 1);
    REQUIRE(gradient_identity_terms(f, h, g).residual <= 1e-14);
}

TEST_CASE("gradient identity with the gaussian weight picks up the curvature term") {
    const double s = 0.05;
    const auto g = bidisk(1.0, s);
    const auto h = make_named_metric("gaussian", g, 1, {.K = 1.0});
    const auto f = make_boundary_vanishing_section(g, 1);
    const auto t = gradient_identity_terms(f, h, g);
    REQUIRE(t.curvature_term > 0.0);
    REQUIRE(t.relative_residual <= 0.05);
}

TEST_CASE("gradient identity residual improves by at least 1.8x under halving") {
    const auto residual_at = [](double s, const char* metric) {
        const auto g = bidisk(0.6, s);
        const int rank = 1;
        const auto h = make_named_metric(metric, g, rank, {.K = 1.0});
        const auto f = make_oscillating_vanishing_section(g, rank);
        return gradient_identity_terms(f, h, g).relative_residual;
    };
    for (const char* metric : {"flat", "gaussian"}) {
        const double coarse = residual_at(0.06, metric);
        const double fine = residual_at(0.03, metric);
        INFO(metric << ": " << coarse << " -> " << fine);
        REQUIRE(fine > 0.0);
        REQUIRE(coarse / fine >= 1.8);
    }
}

TEST_CASE("positive curvature forces ||dbar f|| <= ||grad f|| discretely") {
    const auto g = bidisk(0.8, 0.05);
    const auto h = make_named_metric("gaussian", g, 1, {.K = 2.0});
    TrigFieldGenerator gen(31);
    for (int trial = 0; trial < 3; ++trial) {
        const auto f = make_random_vanishing_section(g, 1, gen);
        const auto t = gradient_identity_terms(f, h, g);
        REQUIRE(t.lhs <= t.grad_term * 1.02 + 1e-12);
    }
}

TEST_CASE("sections that do not vanish on the z1 boundary are rejected") {
    const auto g = bidisk(0.5, 0.1);
    const auto h = make_named_metric("flat", g, 1);
    const auto f = sample_section(g, 1, [](const std::vector<cplx>&, SmallVec& v) {
        v.resize(1);
        v(0) = 1.0;
    });
    REQUIRE_THROWS_WITH(gradient_identity_terms(f, h, g),
                        Catch::Matchers::ContainsSubstring("node"));
}
