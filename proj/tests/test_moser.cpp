#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>

#include "dbarlab/catalog.hpp"
#include "dbarlab/moser.hpp"

using namespace dbarlab;

namespace {

// Exact rational arithmetic oracle for the schedule recursion at N = 4
// (eta = 1/3): gamma' = gamma * 5/6 + 1/2 evaluated in int64 fractions.
struct Frac {
    std::int64_t num, den;
    Frac reduce() const {
        std::int64_t a = std::abs(num), b = den;
        while (b) { const std::int64_t t = a % b; a = b; b = t; }
        return {num / a, den / a};
    }
    Frac step() const { return Frac{num * 5 * 2 + den * 6, den * 12}.reduce(); }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

ProductGrid bidisk(double radius, double spacing) {
    const auto d = build_disk_grid(radius, spacing);
    return ProductGrid({d, d}, 1.1);
}

}  // namespace

TEST_CASE("schedule for N = 4 matches the exact rational recursion") {
    const auto s = gamma_schedule(4);
    REQUIRE(s.eta == Catch::Approx(1.0 / 3.0).margin(1e-15));
    REQUIRE(s.nu_hat == 4);  // log 2 / log(6/5) = 3.8018...

    Frac f{1, 1};
    const std::int64_t want_num[] = {1, 4, 29, 199, 1319};
    const std::int64_t want_den[] = {1, 3, 18, 108, 648};
    for (int nu = 0; nu <= 4; ++nu) {
        REQUIRE(f.num == want_num[nu]);
        REQUIRE(f.den == want_den[nu]);
        REQUIRE(s.gamma[static_cast<std::size_t>(nu)] == Catch::Approx(f.value()).margin(1e-14));
        f = f.step();
    }
    REQUIRE(s.gamma[4] >= (4.0 + 2.0) / 4.0);
    REQUIRE(4.0 * s.gamma[4] - 2.0 >= 4.0);
}

TEST_CASE("schedule invariants for every N in 3..64") {
    for (int N = 3; N <= 64; ++N) {
        const auto s = gamma_schedule(N);
        REQUIRE(s.gamma[0] == 1.0);
        for (int nu = 0; nu <= s.nu_hat; ++nu) {
            const double closed = gamma_closed_form(s.eta, nu);
            REQUIRE(std::abs(s.gamma[static_cast<std::size_t>(nu)] - closed) <= 1e-12);
        }
        REQUIRE(s.gamma[static_cast<std::size_t>(s.nu_hat)] >= (N + 2.0) / 4.0 - 1e-12);
        REQUIRE(4.0 * s.gamma[static_cast<std::size_t>(s.nu_hat)] - 2.0 >= N - 1e-10);
    }
    REQUIRE(gamma_schedule(3).nu_hat == 4);  // ceil(log 2 / log(5/4))
    REQUIRE_THROWS_AS(gamma_schedule(2), std::invalid_argument);
}

TEST_CASE("kernel constant C_R against an independent high-precision evaluation") {
    const auto L = compute_constants(2, 4, 1.1, 4.0);
    // same closed form assembled in log space with long doubles
    const long double eta = 1.0L / 3.0L;
    const long double logc =
        ((1.0L + eta) * std::log(2.0L) + (2.0L - 2.0L + eta) * std::log((long double)std::numbers::pi) +
         (2.0L - 1.0L + eta) * std::log(1.1L) - std::log(eta)) /
        (2.0L - eta);
    REQUIRE(L.C_R == Catch::Approx(static_cast<double>(std::exp(logc))).epsilon(1e-12));

    // delta_nu = 1 policy: C_nat is the max of 3^{1/(2g)} C_R (2g-1) and
    // 3^{1/(2g)} 2 C_R over the schedule
    double want = 0.0;
    for (int nu = 0; nu < L.schedule.nu_hat; ++nu) {
        const double gm = L.schedule.gamma[static_cast<std::size_t>(nu)];
        want = std::max({want, std::pow(3.0, 0.5 / gm) * L.C_R * (2.0 * gm - 1.0),
                         std::pow(3.0, 0.5 / gm) * 2.0 * L.C_R});
    }
    REQUIRE(L.C_nat == Catch::Approx(want).epsilon(1e-14));

    double sharp = 0.0;
    for (int j = 0; j < L.schedule.nu_hat; ++j) sharp += std::pow(L.C_nat, j);
    REQUIRE(L.C_sharp == Catch::Approx(sharp).epsilon(1e-14));

    const double M = 4.0 * L.schedule.gamma[4] - 2.0;
    REQUIRE(L.C_flat ==
            Catch::Approx(std::pow(std::pow(std::numbers::pi, 2) * std::pow(1.1, 4),
                                   2.0 * (M - 4.0) / M)).epsilon(1e-14));
}

TEST_CASE("twist bookkeeping: kappa and the K = 0 edge") {
    REQUIRE(compute_constants(2, 4, 1.1, 0.0).kappa == 1.0);
    const auto L = compute_constants(2, 4, 1.1, 4.0);
    REQUIRE(L.kappa == Catch::Approx(std::exp(-4.0 * 1.21)).epsilon(1e-14));
    REQUIRE(L.threshold_l2 == Catch::Approx(2.0 * std::exp(-4.84)).epsilon(1e-14));
    // K = 0 admits no positive budget for the L2 condition
    REQUIRE(compute_constants(2, 4, 1.1, 0.0).gamma_max == 0.0);
}

TEST_CASE("admissible budget shrinks with dimension and satisfies its conditions") {
    const auto L2 = compute_constants(2, 4, 1.1, 4.0);
    const auto L3 = compute_constants(3, 4, 1.1, 4.0);
    REQUIRE(L2.gamma_max > 0.0);
    REQUIRE(L3.gamma_max > 0.0);
    REQUIRE(L3.gamma_max < L2.gamma_max);
    for (const auto& L : {L2, L3}) {
        REQUIRE(L.condition_half(L.gamma_max) < 0.0);
        REQUIRE(L.condition_gradient(L.gamma_max) <= 1e-12);
        REQUIRE(L.condition_l2(L.gamma_max) <= 1e-12);
        // near-largest: 4x the budget violates some condition
        const double g4 = 4.0 * L.gamma_max;
        REQUIRE((L.condition_half(g4) >= 0.0 || L.condition_gradient(g4) > 0.0 ||
                 L.condition_l2(g4) > 0.0));
    }
}

TEST_CASE("ledger depends only on (n, N, Rhat, K), never on the domains") {
    const auto before = ledger_to_json(compute_constants(2, 4, 1.1, 4.0)).dump();
    const auto g1 = bidisk(0.5, 0.1);
    const auto g2 = ProductGrid({build_annulus_grid(0.9, 0.2, 0.1), build_disk_grid(0.7, 0.1)}, 1.1);
    const auto after = ledger_to_json(compute_constants(2, 4, 1.1, 4.0)).dump();
    REQUIRE(before == after);
    REQUIRE(g1.node_count() != g2.node_count());
}

TEST_CASE("delta policy is recorded and steers the per-step constant") {
    const auto L1 = compute_constants(2, 4, 1.1, 4.0);
    REQUIRE(L1.delta_nu == std::vector<double>(4, 1.0));
    REQUIRE(L1.delta_nu_star == std::vector<double>(4, 1.0));
    const auto L2 = compute_constants(2, 4, 1.1, 4.0, {2.0, 2.0, 2.0, 2.0});
    REQUIRE(L2.C_nat != L1.C_nat);
    REQUIRE_THROWS_AS(compute_constants(2, 4, 1.1, 4.0, {1.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(compute_constants(1, 4, 1.1, 4.0), std::invalid_argument);
    REQUIRE_THROWS_AS(compute_constants(2, 4, 0.9, 4.0), std::invalid_argument);
}

TEST_CASE("iteration chain: zero section passes every step with zero sides") {
    const auto g = bidisk(0.5, 0.1);
    const auto h = make_named_metric("flat", g, 1);
    const SectionField f(g, 1);
    const auto L = compute_constants(2, 4, 1.1, 4.0);
    const auto rep = run_iteration_chain(f, h, g, L);
    REQUIRE(rep.all_passed());
    for (const auto& c : rep.checks) {
        REQUIRE(c.lhs == 0.0);
        REQUIRE(c.rhs == 0.0);
    }
}

TEST_CASE("iteration chain passes with positive slack on catalogue sections") {
    const auto g = bidisk(1.0, 0.05);
    const auto L = compute_constants(2, 4, 1.1, 4.0);
    for (const char* metric : {"flat", "gaussian"}) {
        const auto h = make_named_metric(metric, g, 1, {.K = 1.0});
        const auto f = make_boundary_vanishing_section(g, 1);
        const auto rep = run_iteration_chain(f, h, g, L);
        INFO(metric);
        REQUIRE(rep.all_passed());
        for (const auto& c : rep.checks) REQUIRE(c.slack > 0.0);
    }
}

TEST_CASE("curvature absorption") {
    const auto L = compute_constants(2, 4, 1.1, 4.0);

    SECTION("flat metric: zero budget, zero pairing, pass") {
        const auto g = bidisk(0.5, 0.1);
        const auto h = make_named_metric("flat", g, 1);
        const auto f = make_boundary_vanishing_section(g, 1);
        const auto rep = curvature_absorption_check(f, h, g, L);
        REQUIRE(rep.all_passed());
        REQUIRE(rep.count("hypothesis-not-met") == 0);
        REQUIRE(rep.checks[0].lhs == 0.0);
    }
    SECTION("tiny gaussian weight on a small domain meets the hypothesis and passes") {
        const auto g = bidisk(0.5, 0.1);
        const auto h = make_named_metric("gaussian", g, 1, {.K = 1e-6});
        const auto f = make_boundary_vanishing_section(g, 1);
        const auto rep = curvature_absorption_check(f, h, g, L);
        REQUIRE(rep.count("hypothesis-not-met") == 0);
        REQUIRE(rep.all_passed());
    }
    SECTION("singular curvature at full scale violates smallness: hypothesis-not-met") {
        const auto ann = build_annulus_grid(0.8, 0.2, 0.1);
        const ProductGrid g({ann, build_disk_grid(0.5, 0.1)}, 1.1);
        const auto h = make_named_metric("singular-a", g, 1, {.a = 0.75});
        const auto f = make_boundary_vanishing_section(g, 1);
        const auto rep = curvature_absorption_check(f, h, g, L);
        REQUIRE(rep.count("hypothesis-not-met") == 1);
        REQUIRE(rep.all_passed());  // not-met is not a failure
    }
}

TEST_CASE("final L^N bound passes and its slack is stable under refinement") {
    const auto L = compute_constants(2, 4, 1.1, 4.0);
    const auto h_of = [&](const ProductGrid& g) { return make_named_metric("flat", g, 1); };

    const auto slack_at = [&](double s) {
        const auto g = bidisk(0.6, s);
        const auto h = h_of(g);
        const auto f = make_boundary_vanishing_section(g, 1);
        const auto rep = final_lN_bound_check(f, h, g, L);
        REQUIRE(rep.all_passed());
        return rep.checks[0].slack / rep.checks[0].rhs;
    };
    const double coarse = slack_at(0.1), fine = slack_at(0.05);
    REQUIRE(std::abs(coarse - fine) <= 0.10 * std::max(coarse, fine));
}

TEST_CASE("Hoelder bridge holds discretely for catalogue sections") {
    const auto g = bidisk(0.8, 0.08);
    const auto L = compute_constants(2, 4, 1.1, 4.0);
    const auto h = make_named_metric("flat", g, 1);
    TrigFieldGenerator gen(13);
    for (int t = 0; t < 5; ++t) {
        const auto f = make_random_vanishing_section(g, 1, gen);
        const auto c = holder_bridge_check(f, h, g, L);
        REQUIRE(c.passed());
    }
    const auto c2 = holder_bridge_check(make_boundary_vanishing_section(g, 1), h, g, L);
    REQUIRE(c2.passed());
}
