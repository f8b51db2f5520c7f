#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "dbarlab/bochner.hpp"
#include "dbarlab/bundle.hpp"
#include "dbarlab/grid.hpp"
#include "dbarlab/report.hpp"

namespace dbarlab {

// ---------------------------------------------------------------------------
// Exponent schedule. eta = 2/(N+2); gamma_0 = 1 and
//   gamma_{nu+1} = gamma_nu (1 - eta/2) + 1/2,
// with closed form gamma_nu = (1/eta)(1 - (1-eta)(1-eta/2)^nu). The stopping
// index nu_hat is the smallest integer >= log 2 / log((N+2)/(N+1)), which
// forces gamma_nu_hat >= (N+2)/4 and hence 4 gamma_nu_hat - 2 >= N.

struct IterationSchedule {
    int N = 0;
    double eta = 0.0;
    int nu_hat = 0;
    std::vector<double> gamma;  // gamma_0 .. gamma_nu_hat

    double exponent(int nu) const { return 4.0 * gamma[static_cast<std::size_t>(nu)] - 2.0; }
};

inline double gamma_closed_form(double eta, int nu) {
    return (1.0 / eta) * (1.0 - (1.0 - eta) * std::pow(1.0 - eta / 2.0, nu));
}

inline IterationSchedule gamma_schedule(int N) {
    if (N <= 2) throw std::invalid_argument("gamma_schedule: require N >= 3");
    IterationSchedule s;
    s.N = N;
    s.eta = 2.0 / (N + 2.0);
    s.nu_hat = static_cast<int>(
        std::ceil(std::log(2.0) / std::log((N + 2.0) / (N + 1.0)) - 1e-12));
    s.gamma.resize(static_cast<std::size_t>(s.nu_hat) + 1);
    s.gamma[0] = 1.0;
    for (int nu = 0; nu < s.nu_hat; ++nu)
        s.gamma[static_cast<std::size_t>(nu) + 1] =
            s.gamma[static_cast<std::size_t>(nu)] * (1.0 - s.eta / 2.0) + 0.5;
    return s;
}

// ---------------------------------------------------------------------------
// Constant ledger. Everything depends only on (n, N, Rhat, K) and the
// delta_nu policy, never on the concrete domains.

struct ConstantLedger {
    int n = 2;
    int N = 4;
    double Rhat = 1.1;
    double K = 0.0;
    IterationSchedule schedule;
    std::vector<double> delta_nu;       // free AM-GM parameters, default 1
    std::vector<double> delta_nu_star;  // delta_nu^{1/(2 gamma_nu - 1)}
    double C_R = 0.0;                   // kernel constant for the Rhat polydisk
    double C_nat = 0.0;                 // per-step constant
    double C_sharp = 0.0;               // sum_{j<nu_hat} C_nat^j
    double C_flat = 0.0;                // Hoelder volume factor
    double kappa = 1.0;                 // e^{-K Rhat^2}
    double gamma_max = 0.0;             // largest admissible curvature budget
    double delta_at_gamma_max = 0.0;
    double threshold_gradient = 0.0;    // kappa/2
    double threshold_l2 = 0.0;          // kappa K / 2

    double C_nat_pow_nu_hat() const {
        return std::pow(C_nat, schedule.nu_hat);
    }

    /// delta instantiated at a measured budget B = (integral of
    /// |Theta|^{N/(N-2)})^{(N-2)/N}.
    double delta(double budget_pow) const {
        return 2.0 * C_flat * budget_pow * (C_nat_pow_nu_hat() + 2.0 * C_sharp);
    }

    /// Residuals of the two smallness conditions at budget bound gamma
    /// (negative means satisfied).
    double condition_gradient(double gamma) const {
        const double B = std::pow(gamma, (N - 2.0) / N);
        return n * n * B * (2.0 + delta(B)) * C_flat * C_sharp - threshold_gradient;
    }
    double condition_l2(double gamma) const {
        const double B = std::pow(gamma, (N - 2.0) / N);
        return n * n * B * C_flat * (C_nat_pow_nu_hat() + delta(B) * C_sharp) - threshold_l2;
    }
    double condition_half(double gamma) const {
        const double B = std::pow(gamma, (N - 2.0) / N);
        return C_sharp * C_flat * B - 0.5;
    }
};

inline ConstantLedger compute_constants(int n, int N, double Rhat, double K,
                                        std::vector<double> delta_policy = {}) {
    if (n < 2) throw std::invalid_argument("compute_constants: require n >= 2");
    if (!(Rhat > 1.0)) throw std::invalid_argument("compute_constants: require Rhat > 1");
    if (K < 0.0) throw std::invalid_argument("compute_constants: require K >= 0");

    ConstantLedger L;
    L.n = n;
    L.N = N;
    L.Rhat = Rhat;
    L.K = K;
    L.schedule = gamma_schedule(N);
    const double eta = L.schedule.eta;
    const int nu_hat = L.schedule.nu_hat;

    if (delta_policy.empty()) delta_policy.assign(static_cast<std::size_t>(nu_hat), 1.0);
    if (delta_policy.size() != static_cast<std::size_t>(nu_hat))
        throw std::invalid_argument("compute_constants: delta policy length must be nu_hat");
    L.delta_nu = delta_policy;
    L.delta_nu_star.resize(L.delta_nu.size());

    const double pi = std::numbers::pi;
    L.C_R = std::pow(std::pow(2.0, 1.0 + eta) * std::pow(pi, n - 2.0 + eta) *
                         std::pow(Rhat, n - 1.0 + eta) / eta,
                     1.0 / (2.0 - eta));

    L.C_nat = 0.0;
    for (int nu = 0; nu < nu_hat; ++nu) {
        const double gm = L.schedule.gamma[static_cast<std::size_t>(nu)];
        const double dn = L.delta_nu[static_cast<std::size_t>(nu)];
        const double dstar = std::pow(dn, 1.0 / (2.0 * gm - 1.0));
        L.delta_nu_star[static_cast<std::size_t>(nu)] = dstar;
        const double pref = std::pow(3.0, 1.0 / (2.0 * gm));
        const double term_a = pref * gm * L.C_R * (2.0 * gm - 1.0) / (gm * dstar);
        const double term_b = pref * 2.0 * gm * L.C_R * dn / gm;
        L.C_nat = std::max({L.C_nat, term_a, term_b});
    }

    L.C_sharp = 0.0;
    for (int j = 0; j < nu_hat; ++j) L.C_sharp += std::pow(L.C_nat, j);

    const double M = L.schedule.exponent(nu_hat);
    L.C_flat = std::pow(std::pow(pi, n) * std::pow(Rhat, 2.0 * n), 2.0 * (M - N) / M);

    L.kappa = std::exp(-K * Rhat * Rhat);
    L.threshold_gradient = L.kappa / 2.0;
    L.threshold_l2 = L.kappa * K / 2.0;

    // Largest admissible gamma: all three conditions are strictly increasing
    // in gamma (delta itself grows with the budget), so a scalar bisection in
    // log gamma suffices. K = 0 makes the L2 condition unsatisfiable for any
    // positive gamma; the ledger then reports gamma_max = 0.
    const auto ok = [&](double gmm) {
        return L.condition_half(gmm) < 0.0 && L.condition_gradient(gmm) <= 0.0 &&
               L.condition_l2(gmm) <= 0.0;
    };
    if (K == 0.0 || !ok(std::exp(-300.0))) {
        L.gamma_max = 0.0;
        L.delta_at_gamma_max = 0.0;
        return L;
    }
    double lo = -300.0, hi = std::log(1e6);
    if (ok(std::exp(hi))) {
        L.gamma_max = std::exp(hi);
    } else {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (ok(std::exp(mid)) ? lo : hi) = mid;
        }
        L.gamma_max = std::exp(lo);
    }
    L.delta_at_gamma_max = L.delta(std::pow(L.gamma_max, (N - 2.0) / N));
    return L;
}

inline nlohmann::ordered_json ledger_to_json(const ConstantLedger& L) {
    nlohmann::ordered_json j;
    j["n"] = L.n;
    j["N"] = L.N;
    j["Rhat"] = L.Rhat;
    j["K"] = L.K;
    j["eta"] = L.schedule.eta;
    j["nu_hat"] = L.schedule.nu_hat;
    j["gamma"] = L.schedule.gamma;
    j["delta_nu"] = L.delta_nu;
    j["delta_nu_star"] = L.delta_nu_star;
    j["C_R"] = L.C_R;
    j["C_nat"] = L.C_nat;
    j["C_sharp"] = L.C_sharp;
    j["C_flat"] = L.C_flat;
    j["kappa"] = L.kappa;
    j["gamma_max"] = L.gamma_max;
    j["delta_at_gamma_max"] = L.delta_at_gamma_max;
    j["threshold_gradient"] = L.threshold_gradient;
    j["threshold_l2"] = L.threshold_l2;
    return j;
}

// ---------------------------------------------------------------------------
// Measured curvature budget (integral of |Theta|^{N/(N-2)} and its
// (N-2)/N power) over a product grid.

struct CurvatureBudget {
    double integral = 0.0;
    double pow = 0.0;  // integral^{(N-2)/N}
};

inline CurvatureBudget curvature_budget(const MetricField& h, const ProductGrid& g, int N) {
    const auto th = chern_curvature(h, g);
    const auto norms = curvature_pointwise_norm(th, h, g);
    const double p = static_cast<double>(N) / (N - 2.0);
    double acc = 0.0;
    for (double v : norms.full) acc += std::pow(v, p);
    CurvatureBudget b;
    b.integral = acc * g.cell_volume();
    b.pow = std::pow(b.integral, (N - 2.0) / N);
    return b;
}

// ---------------------------------------------------------------------------
// The iteration chain on a concrete section: each step
//   ||f||^2_{L^{4 gamma_{nu+1} - 2}} <= C_nat (||f||^2_{L^{4 gamma_nu - 2}}
//       + ||dbar_{z1} f||^2 + ||grad_{z1} f||^2)
// then the aggregated bound with the curvature pairing on the right.

inline Report run_iteration_chain(const SectionField& f, const MetricField& h,
                                  const ProductGrid& g, const ConstantLedger& L) {
    detail::require_z1_boundary_vanishing(f, g, "iteration chain");
    Report rep;
    rep.suite = "norm-iteration-chain";
    rep.config["ledger"] = ledger_to_json(L);
    rep.config["grid"] = g.describe();

    const SectionField df_bar = covariant_derivative(f, h, g, 0, /*holomorphic=*/false);
    const SectionField df = covariant_derivative(f, h, g, 0, /*holomorphic=*/true);
    const double grad_bar_sq = l2_norm_sq(df_bar, h, g);
    const double grad_sq = l2_norm_sq(df, h, g);

    std::vector<double> norm_sq(static_cast<std::size_t>(L.schedule.nu_hat) + 1);
    for (int nu = 0; nu <= L.schedule.nu_hat; ++nu) {
        const double p = L.schedule.exponent(nu);
        const double v = lp_norm(f, h, p, g);
        norm_sq[static_cast<std::size_t>(nu)] = v * v;
    }

    for (int nu = 0; nu < L.schedule.nu_hat; ++nu) {
        const double lhs = norm_sq[static_cast<std::size_t>(nu) + 1];
        const double rhs = L.C_nat * (norm_sq[static_cast<std::size_t>(nu)] + grad_bar_sq + grad_sq);
        rep.add(check_leq("step nu=" + std::to_string(nu), lhs, rhs, 1e-9 * rhs,
                          "norm-iteration-step"));
    }

    // aggregated form, with the gradient term replaced through the gradient
    // identity by the antiholomorphic one plus the curvature pairing
    const auto th11 = chern_curvature_slice(h, g, 0, 0);
    const auto norms = [&] {
        CurvatureField th(g, h.rank());
        const int r = h.rank();
        const std::size_t mr = static_cast<std::size_t>(r) * r;
        for (std::int64_t nn = 0; nn < g.node_count(); ++nn)
            for (int a = 0; a < r; ++a)
                for (int b = 0; b < r; ++b)
                    th.at(nn, 0, 0, a, b) = th11[static_cast<std::size_t>(nn) * mr + a * r + b];
        return curvature_pointwise_norm(th, h, g);
    }();
    double curv_pairing = 0.0;
    for (std::int64_t nn = 0; nn < g.node_count(); ++nn)
        curv_pairing += norms.slice11[static_cast<std::size_t>(nn)] * fiber_norm_sq(h, nn, f.vec(nn));
    curv_pairing *= g.cell_volume();

    const double lhs_agg = norm_sq[static_cast<std::size_t>(L.schedule.nu_hat)];
    const double rhs_agg = L.C_nat_pow_nu_hat() * norm_sq[0] +
                           L.C_sharp * (2.0 * grad_bar_sq + curv_pairing);
    rep.add(check_leq("aggregated bound at nu_hat", lhs_agg, rhs_agg, 1e-9 * rhs_agg,
                      "norm-iteration-aggregate"));
    rep.config["grad_bar_sq"] = grad_bar_sq;
    rep.config["grad_sq"] = grad_sq;
    rep.config["curvature_pairing"] = curv_pairing;
    return rep;
}

/// integral of |Theta_{1 1bar}| |f|^2 <= delta (||f||_2^2 + ||dbar f||^2)
/// under the smallness hypothesis C_sharp C_flat B < 1/2.
inline Report curvature_absorption_check(const SectionField& f, const MetricField& h,
                                         const ProductGrid& g, const ConstantLedger& L,
                                         double tol = 0.05) {
    detail::require_z1_boundary_vanishing(f, g, "curvature absorption");
    Report rep;
    rep.suite = "curvature-absorption";
    rep.config["grid"] = g.describe();

    const auto budget = curvature_budget(h, g, L.N);
    rep.config["budget_integral"] = budget.integral;
    rep.config["budget_pow"] = budget.pow;
    const double half = L.C_sharp * L.C_flat * budget.pow;
    rep.config["half_condition"] = half;

    if (!(half < 0.5)) {
        rep.add(check_hypothesis_not_met("smallness C_sharp C_flat B < 1/2", half, 0.5,
                                         "curvature-absorption"));
        return rep;
    }

    const auto th = chern_curvature(h, g);
    const auto norms = curvature_pointwise_norm(th, h, g);
    double lhs = 0.0;
    for (std::int64_t nn = 0; nn < g.node_count(); ++nn)
        lhs += norms.slice11[static_cast<std::size_t>(nn)] * fiber_norm_sq(h, nn, f.vec(nn));
    lhs *= g.cell_volume();

    const SectionField df_bar = covariant_derivative(f, h, g, 0, /*holomorphic=*/false);
    const double delta = L.delta(budget.pow);
    const double rhs = delta * (l2_norm_sq(f, h, g) + l2_norm_sq(df_bar, h, g));
    rep.config["delta"] = delta;
    rep.add(check_leq("curvature pairing vs delta-absorption", lhs, rhs, tol * rhs,
                      "curvature-absorption"));
    return rep;
}

/// ||f||^2_{L^N} <= C_flat ((C_nat)^nu_hat + delta C_sharp) ||f||_2^2
///                 + (2 + delta) C_flat C_sharp ||dbar f||^2.
inline Report final_lN_bound_check(const SectionField& f, const MetricField& h,
                                   const ProductGrid& g, const ConstantLedger& L,
                                   double tol = 0.05) {
    detail::require_z1_boundary_vanishing(f, g, "final bound");
    Report rep;
    rep.suite = "final-lN-bound";
    rep.config["grid"] = g.describe();

    const auto budget = curvature_budget(h, g, L.N);
    rep.config["budget_pow"] = budget.pow;
    const double half = L.C_sharp * L.C_flat * budget.pow;
    if (!(half < 0.5)) {
        rep.add(check_hypothesis_not_met("smallness C_sharp C_flat B < 1/2", half, 0.5,
                                         "final-lN-bound"));
        return rep;
    }

    const double delta = L.delta(budget.pow);
    const double lN = lp_norm(f, h, static_cast<double>(L.N), g);
    const SectionField df_bar = covariant_derivative(f, h, g, 0, /*holomorphic=*/false);
    const double rhs = L.C_flat * (L.C_nat_pow_nu_hat() + delta * L.C_sharp) * l2_norm_sq(f, h, g) +
                       (2.0 + delta) * L.C_flat * L.C_sharp * l2_norm_sq(df_bar, h, g);
    rep.config["delta"] = delta;
    rep.add(check_leq("final L^N bound", lN * lN, rhs, tol * rhs, "final-lN-bound"));
    return rep;
}

/// Hoelder bridge ||f||^2_{L^N} <= C_flat ||f||^2_{L^{4 gamma_nu_hat - 2}}:
/// the volume-factor inequality that justifies the C_flat parse.
inline CheckRecord holder_bridge_check(const SectionField& f, const MetricField& h,
                                       const ProductGrid& g, const ConstantLedger& L) {
    const double lN = lp_norm(f, h, static_cast<double>(L.N), g);
    const double lM = lp_norm(f, h, L.schedule.exponent(L.schedule.nu_hat), g);
    return check_leq("Hoelder bridge L^N vs L^M", lN * lN, L.C_flat * lM * lM,
                     1e-9 * L.C_flat * lM * lM, "norm-iteration-aggregate");
}

}  // namespace dbarlab
