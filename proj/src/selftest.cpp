#include "hjblab/selftest.hpp"

#include "hjblab/io.hpp"
#include "hjblab/mollifier.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace hjblab {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kInf = std::numeric_limits<double>::infinity();

double since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

ScenarioConfig builtin(const std::string& name)
{
    return parse_config(builtin_scenario_text(name), "builtin:" + name);
}

const std::vector<std::string> kFiniteScenarios{"bang_bang", "step_drift", "checkerboard", "smooth_baseline",
                                                "bang_bang_2d"};

class Battery {
public:
    Battery(RunManifest& m, std::ostream& log) : m_(m), log_(log) {}

    template <class Fn>
    void criterion(int id, const std::string& title, Fn&& body)
    {
        CriterionResult r;
        r.id = id;
        r.title = title;
        const auto start = Clock::now();
        try {
            r.passed = body(r.detail);
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail["error"] = e.what();
        }
        r.seconds = since(start);
        nlohmann::json detail = r.detail;
        detail["seconds"] = r.seconds;
        m_.check("criterion_" + std::to_string(id), r.passed, detail);
        log_ << "criterion " << id << " " << (r.passed ? "PASS" : "FAIL") << "  " << title << "  ("
             << format_double(std::round(r.seconds * 10.0) / 10.0) << " s)\n";
        results_.push_back(std::move(r));
    }

    std::vector<CriterionResult>& results() { return results_; }

private:
    RunManifest& m_;
    std::ostream& log_;
    std::vector<CriterionResult> results_;
};

Grid unit_torus(std::size_t nx, std::size_t nt)
{
    return Grid::build(DomainKind::torus, 1, {{0.0, 1.0}}, {nx}, 1.0, nt);
}

}  // namespace

std::string artifact_digest(const std::string& dir, const std::vector<std::string>& names)
{
    std::string all;
    for (const auto& name : names) {
        std::ifstream in(std::filesystem::path(dir) / name, std::ios::binary);
        if (!in)
            throw std::runtime_error("artifact_digest: cannot read " + name);
        std::ostringstream body;
        body << in.rdbuf();
        all += name + '\n' + hex64(fnv1a(body.str())) + '\n';
    }
    return hex64(fnv1a(all));
}

SelftestReport run_selftest(RunManifest& m, std::ostream& log)
{
    const auto start = Clock::now();
    const std::string digest_name = "digest.txt";
    std::optional<std::string> previous;
    if (std::ifstream in(m.path(digest_name)); in) {
        std::string d;
        in >> d;
        if (!d.empty())
            previous = d;
    }

    Battery b(m, log);
    const ScenarioConfig ce = builtin("counterexample");

    b.criterion(1, "strict-gap example on [-6,6]", [&](nlohmann::json& d) {
        const Grid g = ce.grid();
        const CounterexampleReport r = counterexample_report(ce.time.T, {{0.0, 0.0}}, g, std::nullopt,
                                                             ce.experiment.contamination_tolerance, 0.3);
        m.write_json("c1_counterexample.json", r.to_json());
        const auto& s = r.samples.front();
        const bool v_ok = std::abs(s.numeric_value - 1.0) <= 0.02;
        const bool w_ok = std::abs(s.numeric_limit - 4.0 / 3.0) <= 0.02 * 4.0 / 3.0;
        d = {{"V00", s.numeric_value}, {"limit00", s.numeric_limit}, {"gap", r.origin_gap}, {"runtime", r.elapsed}};
        return v_ok && w_ok && r.origin_gap >= 0.3 && r.elapsed < 10.0;
    });

    b.criterion(2, "Monte Carlo cross-check of the closed forms", [&](nlohmann::json& d) {
        const auto t0 = Clock::now();
        SimConfig sim = ce.sim(ce.grid());
        sim.paths = 100000;
        sim.dt_sim = 1e-3;
        sim.x = Point{};
        const OracleContext ctx{1, ce.time.T};
        const MCEstimate follow = simulate_cost(make_oracle("counterexample", {}, ctx),
                                                Feedback::analytic("a=x", [](double, const Point& x) { return x; }),
                                                sim);
        const MCEstimate drift = simulate_cost(make_oracle("constant_drift", {{"c", "1"}, {"q", "1"}}, ctx),
                                               Feedback::constant("a=0", Action{}), sim);
        const double secs = since(t0);
        m.write_json("c2_monte_carlo.json", {estimate_record("counterexample", "a=x", follow),
                                             estimate_record("counterexample", "drift=1", drift)});
        d = {{"feedback_mean", follow.mean}, {"feedback_se", follow.se}, {"drift_mean", drift.mean},
             {"drift_se", drift.se},         {"runtime", secs}};
        return std::abs(follow.mean - 1.0) <= 3.0 * follow.se && std::abs(drift.mean - 4.0 / 3.0) <= 3.0 * drift.se &&
               secs < 60.0;
    });

    // Policy iteration on every shipped scenario serves criteria 3 and 4.
    nlohmann::json pi_rows = nlohmann::json::array();
    for (const auto& name : builtin_scenarios()) {
        const ScenarioConfig cfg = builtin(name);
        const Grid g = cfg.grid();
        const ActionTable table = cfg.action_table(g);
        const BoundaryCondition bc = cfg.boundary(g);
        const HjbOptions opt = cfg.hjb_options();
        const PolicyIterationResult pi = policy_iteration(table, bc, opt);
        const DirectResult direct = solve_hjb_direct(table, bc, opt);
        std::ostringstream trace;
        pi.trace.write_csv(trace);
        m.write_text("c3_trace_" + name + ".csv", trace.str());
        pi_rows.push_back({{"scenario", name},
                           {"iterations", pi.trace.iterations()},
                           {"converged", pi.trace.converged},
                           {"distance", lp_norm(pi.value - direct.value, kInf)},
                           {"tol", opt.tol},
                           {"descent_violation", pi.trace.max_descent_violation},
                           {"adjusted_violation", pi.trace.max_adjusted_violation},
                           {"C", pi.trace.C}});
    }
    m.write_json("c3_policy_iteration.json", pi_rows);

    b.criterion(3, "policy iteration agrees with the direct solver", [&](nlohmann::json& d) {
        bool ok = true;
        for (const auto& r : pi_rows) {
            const std::string name = r["scenario"];
            if (std::find(kFiniteScenarios.begin(), kFiniteScenarios.end(), name) == kFiniteScenarios.end())
                continue;
            const bool pass = r["converged"].get<bool>() && r["iterations"].get<std::size_t>() <= 50 &&
                              r["distance"].get<double>() <= 10.0 * r["tol"].get<double>();
            d[name] = {{"iterations", r["iterations"]}, {"distance", r["distance"]}, {"passed", pass}};
            ok = ok && pass;
        }
        return ok;
    });

    b.criterion(4, "policy iteration is monotone", [&](nlohmann::json& d) {
        bool ok = true;
        for (const auto& r : pi_rows) {
            const bool pass = r["descent_violation"].get<double>() <= 1e-10 &&
                              r["adjusted_violation"].get<double>() <= 1e-10;
            d[r["scenario"].get<std::string>()] = {{"descent_violation", r["descent_violation"]},
                                                   {"adjusted_violation", r["adjusted_violation"]},
                                                   {"C", r["C"]},
                                                   {"passed", pass}};
            ok = ok && pass;
        }
        return ok;
    });

    std::map<std::string, ScenarioSolution> solved;
    for (const auto& name : kFiniteScenarios)
        solved.emplace(name, solve_scenario(builtin(name)));

    b.criterion(5, "verification inequalities", [&](nlohmann::json& d) {
        bool ok = true;
        nlohmann::json all = nlohmann::json::object();
        for (const auto& name : kFiniteScenarios) {
            const ScenarioConfig cfg = builtin(name);
            const ScenarioSolution& s = solved.at(name);
            const auto cands = candidate_feedbacks(s.actions, s.grid, cfg.experiment.candidates, cfg.mc.seed + 1);
            const VerificationReport r = verification_check(s.direct.value, cfg.oracle(), cfg.sim(s.grid), cands,
                                                            scenario_argmin(cfg, s));
            all[name] = r.to_json();
            double worst = kInf;
            for (const auto& row : r.rows)
                worst = std::min(worst, row.margin);
            d[name] = {{"passed", r.passed}, {"candidates", r.rows.size() - 1}, {"min_margin", worst}};
            ok = ok && r.passed && r.rows.size() == cfg.experiment.candidates + 1;
        }
        m.write_json("c5_verification.json", all);
        return ok;
    });

    b.criterion(6, "dynamic programming residuals", [&](nlohmann::json& d) {
        bool ok = true;
        nlohmann::json all = nlohmann::json::object();
        std::vector<std::string> names = kFiniteScenarios;
        names.push_back("counterexample");
        for (const auto& name : names) {
            const ScenarioConfig cfg = builtin(name);
            const ScenarioSolution s = solved.count(name) ? solved.at(name) : solve_scenario(cfg);
            const Feedback sub = Feedback::constant("suboptimal", cfg.experiment.suboptimal);
            std::vector<double> t_mid;
            for (double f : {0.25, 0.5, 0.75})
                t_mid.push_back(f * cfg.time.T);
            const DppReport r = dpp_battery(s.direct.value, cfg.oracle(), scenario_argmin(cfg, s), sub, t_mid,
                                            cfg.sim(s.grid));
            all[name] = r.to_json();
            const bool alternative = s.actions.size() > 1;
            bool optimal = true, detected = true;
            for (const auto& row : r.rows) {
                optimal = optimal && row.optimal_passed;
                detected = detected && row.suboptimal_detected;
            }
            d[name] = {{"optimal", optimal}, {"suboptimal_detected", alternative ? nlohmann::json(detected) : "n/a"}};
            ok = ok && optimal && (!alternative || detected);
        }
        m.write_json("c6_dpp.json", all);
        return ok;
    });

    b.criterion(7, "mollification sweeps separate the two regimes", [&](nlohmann::json& d) {
        bool ok = true;
        std::vector<std::string> names = kFiniteScenarios;
        names.push_back("counterexample");
        for (const auto& name : names) {
            const ScenarioConfig cfg = builtin(name);
            const SweepReport r = mollify_value_sweep(scenario_sweep(cfg));
            std::ostringstream csv;
            r.write_gap_csv(csv);
            m.write_text("c7_gaps_" + name + ".csv", csv.str());
            m.write_json("c7_sweep_" + name + ".json", r.summary());
            bool pass = r.liminf_passed;
            if (cfg.experiment.expect == "converge")
                pass = pass && r.converges;
            else
                pass = pass && !r.converges && r.persistent_gap >= cfg.experiment.required_gap;
            d[name] = {{"liminf", r.liminf_status},
                       {"sup_gap_at_eps_min", r.smallest().sup_gap},
                       {"tolerance", r.tolerance},
                       {"converges", r.converges},
                       {"persistent_gap", r.persistent_gap},
                       {"passed", pass}};
            ok = ok && pass;
        }
        const TruncationReport t = countable_truncation_study(scenario_truncation(builtin("countable")));
        m.write_json("c7_truncation.json", t.to_json());
        d["countable"] = {{"passed", t.passed}, {"nonincreasing_in_N", t.nonincreasing_in_N},
                          {"eps_converges", t.eps_converges}};
        return ok && t.passed;
    });

    b.criterion(8, "solver validation", [&](nlohmann::json& d) {
        const OracleContext ctx{1, 1.0};
        const ParamMap params{{"beta", "0.5"}};
        ClosedFormProblem prob;
        prob.oracle = make_oracle("smooth_baseline", params, ctx);
        prob.exact = [=](double t, const Point& x) { return smooth_baseline_exact(params, ctx, t, x); };
        const auto ladder = [](std::vector<std::size_t> nxs, std::vector<std::size_t> nts) {
            std::vector<Grid> out;
            for (std::size_t k = 0; k < std::max(nxs.size(), nts.size()); ++k)
                out.push_back(unit_torus(nxs[std::min(k, nxs.size() - 1)], nts[std::min(k, nts.size() - 1)]));
            return out;
        };
        const ParabolicScheme central{TimeStepping::implicit_euler, Advection::central};
        const ParabolicScheme upwind{TimeStepping::implicit_euler, Advection::upwind};
        const OrderReport oc =
            convergence_order(prob, ladder({32, 64, 128}, {16384}), ladder({512}, {16, 32, 64}), central);
        const OrderReport ou =
            convergence_order(prob, ladder({128, 256, 512}, {16384}), ladder({1024}, {16, 32, 64}), upwind);
        const bool orders = std::abs(oc.space_order - 2.0) <= 0.25 && std::abs(oc.time_order - 1.0) <= 0.25 &&
                            std::abs(ou.space_order - 1.0) <= 0.25 && std::abs(ou.time_order - 1.0) <= 0.25;

        std::mt19937_64 rng(2718);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        std::size_t violations = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const Grid g = trial % 2 ? Grid::build(DomainKind::torus, 1, {{0.0, 1.0}}, {12}, 0.7, 9)
                                     : Grid::build(DomainKind::box, 1, {{-2.0, 2.0}}, {13}, 1.0, 8);
            Field drift(g, 1), f1(g), f2(g);
            for (double& v : drift.values())
                v = 5.0 * U(rng);
            for (std::size_t k = 0; k < f1.size(); ++k) {
                f1.values()[k] = U(rng);
                f2.values()[k] = f1.values()[k] + std::abs(U(rng));
            }
            const BoundaryCondition bc = BoundaryCondition::natural(g);
            const Field u1 = solve_frozen(drift, f1, bc);
            const Field u2 = solve_frozen(drift, f2, bc);
            for (std::size_t k = 0; k < u1.size(); ++k)
                violations += u1.values()[k] > u2.values()[k] + 1e-12;
        }

        double worst_norm = 0.0;
        nlohmann::json norms = nlohmann::json::array();
        for (const auto& name : builtin_scenarios()) {
            const ScenarioConfig cfg = builtin(name);
            for (double eps : cfg.mollify.eps) {
                const MollifierKernel k(eps, cfg.domain.dim);
                const double err = std::abs(k.lattice_integral(cfg.domain.dim == 1 ? 200 : 60) - 1.0);
                worst_norm = std::max(worst_norm, err);
                norms.push_back({{"scenario", name}, {"eps", eps}, {"error", err}});
            }
        }
        m.write_json("c8_solver_validation.json",
                     {{"central", {{"space_order", oc.space_order}, {"time_order", oc.time_order},
                                   {"space_errors", oc.space_errors}, {"time_errors", oc.time_errors}}},
                      {"upwind", {{"space_order", ou.space_order}, {"time_order", ou.time_order},
                                  {"space_errors", ou.space_errors}, {"time_errors", ou.time_errors}}},
                      {"comparison_violations", violations},
                      {"kernel_normalization", norms}});
        d = {{"central", {oc.space_order, oc.time_order}},
             {"upwind", {ou.space_order, ou.time_order}},
             {"comparison_violations", violations},
             {"kernel_normalization_error", worst_norm}};
        return orders && violations == 0 && worst_norm <= 1e-8;
    });

    SelftestReport rep;
    std::vector<std::string> numeric;
    for (const auto& a : m.artifacts())
        numeric.push_back(a);
    rep.digest = artifact_digest(m.out_dir(), numeric);
    m.write_text(digest_name, rep.digest + "\n");

    rep.seconds = since(start);
    b.criterion(9, "reproducible and within the time budget", [&](nlohmann::json& d) {
        d = {{"digest", rep.digest}, {"runtime", rep.seconds}, {"artifacts", numeric.size()}};
        if (previous)
            d["previous_digest"] = *previous;
        return rep.seconds < 300.0 && (!previous || *previous == rep.digest);
    });

    rep.criteria = b.results();
    rep.passed = std::all_of(rep.criteria.begin(), rep.criteria.end(), [](const auto& c) { return c.passed; });
    return rep;
}

}  // namespace hjblab
