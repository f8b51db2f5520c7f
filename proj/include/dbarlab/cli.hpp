#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "dbarlab/bochner.hpp"
#include "dbarlab/catalog.hpp"
#include "dbarlab/cauchy.hpp"
#include "dbarlab/dbar.hpp"
#include "dbarlab/grid.hpp"
#include "dbarlab/moser.hpp"
#include "dbarlab/potential.hpp"
#include "dbarlab/report.hpp"

namespace dbarlab {

/// Run configuration shared by every subcommand; parsed from a JSON document
/// and overridable by command-line flags. All radii, exponents and the seed
/// are echoed into the report so runs are reproducible from their output.
struct RunConfig {
    double spacing = 0.08;
    int n = 2;
    int N = 4;
    int rank = 1;
    double Rhat = 1.1;
    double K = 4.0;            // twist exponent of the solver metric
    double domain_radius = 1.0;  // z1 disk radius for D x W studies
    double W_radius = 0.7;       // configured polydisk radius R (kept < Rhat)
    double annulus_outer = 0.9;  // z1 outer radius of the solver domain
    double epsilon = 0.2;        // puncture radius of the solver domain
    std::string metric = "flat";
    double metric_K = 1.0;  // gaussian weight exponent of the catalog metric
    double metric_a = 0.75;  // singular family exponent
    std::string function = "conj-linear-bump";
    std::uint64_t seed = 20240901u;
    int cases = 100;     // potential property cases
    int trials = 200;    // coercivity trial forms
    int jet_order = 1;
    std::vector<cplx> jet_point = {cplx(0.5, 0.0), cplx(0.0, 0.0)};
    std::vector<cplx> jet_values = {cplx(1.0, 0.0), cplx(-0.5, 0.4)};
    bool resolution_study = false;

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::ordered_json echo() const {
        nlohmann::ordered_json e;
        e["spacing"] = spacing;
        e["n"] = n;
        e["N"] = N;
        e["rank"] = rank;
        e["Rhat"] = Rhat;
        e["K"] = K;
        e["domain_radius"] = domain_radius;
        e["W_radius"] = W_radius;
        e["annulus_outer"] = annulus_outer;
        e["epsilon"] = epsilon;
        e["metric"] = metric;
        e["metric_K"] = metric_K;
        e["metric_a"] = metric_a;
        e["function"] = function;
        e["seed"] = seed;
        e["cases"] = cases;
        e["trials"] = trials;
        e["jet_order"] = jet_order;
        return e;
    }
};

namespace detail {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out, const std::string& path) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const std::exception&) {
        throw std::invalid_argument("config field '" + path + key + "' has the wrong type");
    }
}

inline std::vector<cplx> read_complex_list(const nlohmann::json& j, const char* key,
                                           const std::vector<cplx>& fallback) {
    if (!j.contains(key)) return fallback;
    std::vector<cplx> out;
    for (const auto& p : j.at(key)) {
        if (!p.is_array() || p.size() != 2)
            throw std::invalid_argument(std::string("config field '") + key +
                                        "' must hold [re, im] pairs");
        out.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    return out;
}

}  // namespace detail

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    if (!j.is_object() && !j.is_null())
        throw std::invalid_argument("config root must be a JSON object");
    if (j.is_null()) return c;
    detail::read_field(j, "spacing", c.spacing, "");
    detail::read_field(j, "n", c.n, "");
    detail::read_field(j, "N", c.N, "");
    detail::read_field(j, "rank", c.rank, "");
    detail::read_field(j, "Rhat", c.Rhat, "");
    detail::read_field(j, "K", c.K, "");
    detail::read_field(j, "domain_radius", c.domain_radius, "");
    detail::read_field(j, "W_radius", c.W_radius, "");
    detail::read_field(j, "annulus_outer", c.annulus_outer, "");
    detail::read_field(j, "epsilon", c.epsilon, "");
    detail::read_field(j, "metric", c.metric, "");
    detail::read_field(j, "metric_K", c.metric_K, "");
    detail::read_field(j, "metric_a", c.metric_a, "");
    detail::read_field(j, "function", c.function, "");
    detail::read_field(j, "seed", c.seed, "");
    detail::read_field(j, "cases", c.cases, "");
    detail::read_field(j, "trials", c.trials, "");
    detail::read_field(j, "jet_order", c.jet_order, "");
    c.jet_point = detail::read_complex_list(j, "jet_point", c.jet_point);
    c.jet_values = detail::read_complex_list(j, "jet_values", c.jet_values);
    return c;
}

// ---------------------------------------------------------------------------
// Grid builders shared by the suites.

inline ProductGrid make_study_grid(const RunConfig& c, double spacing) {
    std::vector<PlanarDomainGrid> factors;
    factors.push_back(build_disk_grid(c.domain_radius, spacing));
    for (int k = 1; k < c.n; ++k) factors.push_back(build_disk_grid(c.W_radius, spacing));
    return ProductGrid(std::move(factors), c.Rhat);
}

inline ProductGrid make_solver_grid(const RunConfig& c, double spacing) {
    std::vector<PlanarDomainGrid> factors;
    factors.push_back(build_annulus_grid(c.annulus_outer, c.epsilon, spacing));
    for (int k = 1; k < c.n; ++k) factors.push_back(build_disk_grid(c.W_radius, spacing));
    return ProductGrid(std::move(factors), c.Rhat);
}

inline MetricParams metric_params(const RunConfig& c) {
    return MetricParams{.K = c.metric_K, .a = c.metric_a};
}

// ---------------------------------------------------------------------------
// Suites. Each returns a Report; dispatch() stitches them together.

inline Report suite_constants(const RunConfig& c) {
    Report rep;
    rep.suite = "constants";
    rep.config = c.echo();
    const auto L = compute_constants(c.n, c.N, c.Rhat, c.K);
    rep.config["ledger"] = ledger_to_json(L);

    double worst = 0.0;
    for (int nu = 0; nu <= L.schedule.nu_hat; ++nu)
        worst = std::max(worst, std::abs(L.schedule.gamma[static_cast<std::size_t>(nu)] -
                                         gamma_closed_form(L.schedule.eta, nu)));
    rep.add(check_leq("schedule recursion vs closed form", worst, 1e-12, 0.0,
                      "exponent-schedule"));
    rep.add(check_leq("gamma_nu_hat >= (N+2)/4", (c.N + 2.0) / 4.0,
                      L.schedule.gamma[static_cast<std::size_t>(L.schedule.nu_hat)], 1e-12,
                      "exponent-schedule"));
    rep.add(check_leq("4 gamma_nu_hat - 2 >= N", static_cast<double>(c.N),
                      L.schedule.exponent(L.schedule.nu_hat), 1e-10, "exponent-schedule"));
    if (L.gamma_max > 0.0) {
        rep.add(check_leq("smallness holds at gamma_max (gradient)", 0.0,
                          -L.condition_gradient(L.gamma_max), 1e-12, "coercivity-smallness"));
        rep.add(check_leq("smallness holds at gamma_max (L2)", 0.0,
                          -L.condition_l2(L.gamma_max), 1e-12, "coercivity-smallness"));
        rep.add(check_leq("half condition at gamma_max", L.condition_half(L.gamma_max), 0.0, 0.0,
                          "coercivity-smallness"));
    }
    return rep;
}

inline Report suite_cauchy(const RunConfig& c, double spacing) {
    Report rep;
    rep.suite = "cauchy-check";
    rep.config = c.echo();
    rep.config["spacing"] = spacing;
    const auto g = build_disk_grid(c.domain_radius, spacing);

    const double rel_tol = 0.05 * std::max(1.0, spacing / 0.02);
    for (const auto& fn : disk_function_catalog()) {
        ScalarField phi(g.node_count()), dbar(g.node_count());
        for (std::size_t k = 0; k < g.node_count(); ++k) {
            phi[k] = fn.value(g.node(k));
            dbar[k] = fn.dbar(g.node(k));
        }
        double scale = 0.0;
        for (const cplx& v : phi) scale = std::max(scale, std::abs(v));
        double err = 0.0;
        for (std::size_t k = 0; k < g.node_count(); ++k) {
            const cplx z = g.node(k);
            if (c.domain_radius - std::abs(z) < 5.0 * spacing) continue;
            err = std::max(err, std::abs(cauchy_area_integral(dbar, g, z) - fn.value(z)));
        }
        rep.add(check_leq("reconstruction " + fn.name, err / scale, rel_tol, 0.0,
                          "cauchy-reconstruction"));
        auto kb = kernel_bound_check(phi, g);
        kb.checks[0].label = "kernel bound " + fn.name;
        rep.add(kb.checks[0]);
    }
    return rep;
}

inline Report suite_potential(const RunConfig& c) {
    Report rep;
    rep.suite = "potential-check";
    rep.config = c.echo();

    const auto disk = build_disk_grid(c.domain_radius, std::max(c.spacing, 0.1));
    const double small_spacing = std::max(c.spacing, 0.1);
    const ProductGrid prod({build_disk_grid(0.5, small_spacing), build_disk_grid(0.5, small_spacing)},
                           c.Rhat);

    TrigFieldGenerator gen(c.seed);
    const double eta = 2.0 / (c.N + 2.0);
    double min_slack = std::numeric_limits<double>::infinity();
    int failures = 0;
    for (int trial = 0; trial < c.cases; ++trial) {
        double p, q;
        KernelSpec kernel = KernelSpec::cauchy_slice();
        if (trial == 0) {  // the iteration-chain instantiation r = q = 2 - eta, p = 1
            p = 1.0;
            q = 2.0 - eta;
        } else {
            p = gen.uniform(1.0, 4.0);
            q = trial % 10 == 3 ? kInfExponent : gen.uniform(p, 8.0);
            if (trial % 3 == 0) kernel = KernelSpec::constant(gen.uniform(0.1, 2.0));
        }
        Report one;
        if (trial % 2 == 1) {
            const auto f = gen.sample_product(prod, 1.0, 1);
            one = verify_potential_estimate(kernel, f, p, q, prod);
        } else {
            const auto f = gen.sample_planar(disk);
            one = verify_potential_estimate(kernel, f, p, q, disk);
        }
        const auto& ck = one.checks[0];
        if (ck.slack < -1e-9 * ck.rhs) ++failures;
        if (ck.rhs > 0.0) min_slack = std::min(min_slack, ck.slack / ck.rhs);
    }
    rep.config["cases"] = c.cases;
    rep.config["min_relative_slack"] = min_slack;
    rep.add(check_leq("failures across randomized cases", failures, 0.0, 0.0,
                      "young-potential-bound"));

    const auto A = young_constant(KernelSpec::cauchy_slice(), 2.0 - eta, prod);
    rep.config["A"] = A.A;
    rep.config["A_pow_1_r"] = A.A_pow_1_r;
    rep.config["analytic_bound"] = A.analytic_bound;
    rep.add(check_leq("discrete Young constant vs analytic kernel bound", A.A, A.analytic_bound,
                      0.0, "young-potential-bound"));
    return rep;
}

inline Report suite_bochner(const RunConfig& c, double spacing) {
    Report rep;
    rep.suite = "bochner-check";
    rep.config = c.echo();
    rep.config["spacing"] = spacing;
    for (const char* metric : {"flat", "gaussian"}) {
        const auto g = make_study_grid(c, spacing);
        const auto h = make_named_metric(metric, g, c.rank, metric_params(c));
        const auto f_plain = make_boundary_vanishing_section(g, c.rank);
        const auto f_osc = make_oscillating_vanishing_section(g, c.rank);
        const auto t1 = gradient_identity_terms(f_plain, h, g);
        const auto t2 = gradient_identity_terms(f_osc, h, g);
        rep.add(check_leq(std::string("identity residual, ") + metric + ", parabolic section",
                          t1.relative_residual, 0.05, 0.0, "gradient-identity"));
        rep.add(check_leq(std::string("identity residual, ") + metric + ", oscillating section",
                          t2.relative_residual, 0.05, 0.0, "gradient-identity"));
    }
    return rep;
}

inline Report suite_moser(const RunConfig& c) {
    Report rep;
    rep.suite = "moser-run";
    rep.config = c.echo();
    const auto L = compute_constants(c.n, c.N, c.Rhat, c.K);
    rep.config["ledger"] = ledger_to_json(L);
    const auto g = make_study_grid(c, c.spacing);
    const auto h = make_named_metric(c.metric, g, c.rank, metric_params(c));
    const auto f = c.function == "oscillating" ? make_oscillating_vanishing_section(g, c.rank)
                                               : make_boundary_vanishing_section(g, c.rank);

    auto chain = run_iteration_chain(f, h, g, L);
    for (auto& ck : chain.checks) rep.add(ck);
    auto absorb = curvature_absorption_check(f, h, g, L);
    for (auto& ck : absorb.checks) rep.add(ck);
    auto fin = final_lN_bound_check(f, h, g, L);
    for (auto& ck : fin.checks) rep.add(ck);
    rep.add(holder_bridge_check(f, h, g, L));
    return rep;
}

inline Report suite_dbar(const RunConfig& c) {
    Report rep;
    rep.suite = "dbar-solve";
    rep.config = c.echo();
    const auto L = compute_constants(c.n, c.N, c.Rhat, c.K);
    rep.config["ledger"] = ledger_to_json(L);

    const auto g = make_solver_grid(c, c.spacing);
    auto h = make_named_metric(c.metric, g, c.rank, metric_params(c));
    h.set_twist_K(c.K);
    const DbarOperator op(g, h);

    const auto gamma = choose_gamma(h, g, L);
    rep.config["gamma"] = gamma.gamma;
    rep.config["R_gamma"] = gamma.R_gamma;
    rep.config["gamma_reachable"] = gamma.reachable;
    if (!gamma.reachable)
        rep.add(check_hypothesis_not_met("curvature budget below gamma at some radius",
                                         gamma.budget_at_R, gamma.gamma, "coercivity-smallness"));

    TrigFieldGenerator gen(c.seed);
    const auto coer = coercivity_trials(op, h, g, c.trials, gen, L.threshold_l2);
    rep.config["min_rayleigh_quotient"] = coer.min_quotient;
    rep.add(check_leq("coercivity floor vs kappa K/2", coer.bound * (1.0 - c.spacing),
                      coer.min_quotient, 0.0, "coercivity-lower-bound"));

    // manufactured problem
    const auto& f0 = g.factor(0);
    const RadialBump b1{f0.inner_radius() + 0.08, f0.outer_radius() - 0.08, 0.12};
    const RadialBump b2{-0.65 * c.W_radius, 0.65 * c.W_radius, 0.2};
    const auto w = sample_section(g, c.rank, [&](const std::vector<cplx>& z, SmallVec& out) {
        const double wgt = b1.value(std::abs(z[0])) * b2.value(std::abs(z[1]));
        out.setZero(out.size());
        out(0) = wgt * (1.0 + 0.5 * z[0] - 0.3 * std::conj(z[1]));
    });
    const auto sol = solve_dbar(op, op.apply(w), L.kappa * c.K);
    rep.config["solver_iterations"] = sol.iterations;
    rep.config["u_norm"] = sol.u_norm;
    rep.config["v_norm"] = sol.v_norm;
    rep.add(check_leq("manufactured residual", sol.residual, 1e-8, 0.0, "dbar-solvability"));
    rep.add(check_leq("minimum-norm vs manufactured candidate", sol.u_norm,
                      std::sqrt(op.section_norm_sq(w)), 1e-6 * sol.u_norm, "dbar-solvability"));
    rep.add(check_leq("||u||^2 <= (2/(kappa K)) ||v||^2", sol.u_norm * sol.u_norm,
                      2.0 / (L.kappa * c.K) * sol.v_norm * sol.v_norm, 0.0, "dbar-solvability"));
    rep.config["bound_sq_holds"] = sol.bound_sq_holds;
    rep.config["bound_paper_display_holds"] = sol.bound_paper_display;
    return rep;
}

inline Report suite_jet(const RunConfig& c) {
    Report rep;
    rep.suite = "jet-demo";
    rep.config = c.echo();
    const auto L = compute_constants(c.n, c.N, c.Rhat, c.K);

    const auto g = make_solver_grid(c, c.spacing);
    auto h = make_named_metric(c.metric, g, c.rank, metric_params(c));
    h.set_twist_K(c.K);
    const DbarOperator op(g, h);
    const double kappaK = L.kappa * c.K;

    std::vector<SmallVec> jet;
    for (int m = 0; m <= c.jet_order; ++m) {
        SmallVec v(c.rank);
        v.setZero(c.rank);
        v(0) = m < static_cast<int>(c.jet_values.size()) ? c.jet_values[static_cast<std::size_t>(m)]
                                                         : cplx(0.0);
        jet.push_back(v);
    }
    const auto problem = make_jet_problem(g, c.jet_point, c.jet_order, jet);
    const auto res = jet_interpolate(op, h, problem, kappaK);
    rep.config["P0_node"] = res.node;
    rep.config["norm_hK"] = res.norm_hK;

    rep.add(check_leq("dbar F residual vs 10 s scale", res.dbar_residual,
                      10.0 * c.spacing * res.scale, 0.0, "jet-interpolation"));
    const double tol0 = 0.02 * std::max(std::abs(jet[0](0)), 1e-300);
    rep.add(check_leq("value at P0", std::abs(res.achieved[0](0) - jet[0](0)), tol0, 0.0,
                      "jet-interpolation"));
    if (c.jet_order >= 1) {
        const double tol1 = 0.05 * std::max(std::abs(jet[1](0)), 1e-300);
        rep.add(check_leq("first derivative at P0", std::abs(res.achieved[1](0) - jet[1](0)), tol1,
                          0.0, "jet-interpolation"));
    }
    rep.add(check_leq("finite twisted norm", std::isfinite(res.norm_hK) ? 0.0 : 1.0, 0.0, 0.0,
                      "jet-interpolation"));
    return rep;
}

// ---------------------------------------------------------------------------
// Dispatch. Returns the report; exit status is 0 iff no check failed
// (hypothesis-not-met does not fail a run).

inline Report dispatch(const std::string& subcommand, const RunConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    Report rep;
    if (subcommand == "constants") rep = suite_constants(c);
    else if (subcommand == "cauchy-check") rep = suite_cauchy(c, c.spacing);
    else if (subcommand == "potential-check") rep = suite_potential(c);
    else if (subcommand == "bochner-check") rep = suite_bochner(c, c.spacing);
    else if (subcommand == "moser-run") rep = suite_moser(c);
    else if (subcommand == "dbar-solve") rep = suite_dbar(c);
    else if (subcommand == "jet-demo") rep = suite_jet(c);
    else if (subcommand == "full-suite") {
        rep.suite = "full-suite";
        rep.config = c.echo();
        for (const auto& sub : {"constants", "cauchy-check", "potential-check", "bochner-check",
                                "moser-run", "dbar-solve", "jet-demo"}) {
            auto part = dispatch(sub, c);
            for (auto& ck : part.checks) {
                ck.label = std::string(sub) + ": " + ck.label;
                rep.add(std::move(ck));
            }
        }
    } else {
        throw std::invalid_argument("unknown subcommand: " + subcommand);
    }

    if (c.resolution_study && subcommand != "full-suite") {
        RunConfig fine = c;
        fine.resolution_study = false;
        fine.spacing = c.spacing / 2.0;
        const auto fine_rep = dispatch(subcommand, fine);
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        const std::size_t m = std::min(rep.checks.size(), fine_rep.checks.size());
        for (std::size_t i = 0; i < m; ++i) {
            nlohmann::ordered_json row;
            row["label"] = rep.checks[i].label;
            row["coarse_lhs"] = rep.checks[i].lhs;
            row["fine_lhs"] = fine_rep.checks[i].lhs;
            row["ratio"] = fine_rep.checks[i].lhs != 0.0
                               ? rep.checks[i].lhs / fine_rep.checks[i].lhs
                               : 0.0;
            rows.push_back(std::move(row));
        }
        rep.config["refinement"] = std::move(rows);
    }

    const auto t1 = std::chrono::steady_clock::now();
    rep.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return rep;
}

/// CSV side-table of a resolution study, one row per check.
inline std::string refinement_csv(const Report& rep) {
    std::string csv = "label,coarse_lhs,fine_lhs,ratio\n";
    if (!rep.config.contains("refinement")) return csv;
    for (const auto& row : rep.config.at("refinement")) {
        csv += row.at("label").get<std::string>() + "," +
               std::to_string(row.at("coarse_lhs").get<double>()) + "," +
               std::to_string(row.at("fine_lhs").get<double>()) + "," +
               std::to_string(row.at("ratio").get<double>()) + "\n";
    }
    return csv;
}

}  // namespace dbarlab
