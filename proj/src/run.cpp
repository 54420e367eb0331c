#include "hjblab/run.hpp"

#include "hjblab/analysis.hpp"
#include "hjblab/io.hpp"
#include "hjblab/parallel.hpp"
#include "hjblab/selftest.hpp"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

namespace hjblab {

namespace {

std::string utc_now()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

Field policy_field(const Policy& policy)
{
    Field f(policy.grid());
    for (std::size_t n = 0; n < policy.grid().time_points(); ++n)
        for (std::size_t node = 0; node < policy.grid().space_points(); ++node)
            f.at(n, node) = policy.at(n, node);
    return f;
}

std::string trace_csv(const IterationTrace& trace)
{
    std::ostringstream os;
    trace.write_csv(os);
    return os.str();
}

Feedback control_feedback(const ScenarioConfig& cfg, const std::string& control, const Policy* policy,
                          const ActionSet& actions)
{
    if (control == "follow")
        return Feedback::analytic("a=x", [](double, const Point& x) { return x; });
    if (control == "constant")
        return Feedback::constant("constant", cfg.experiment.constant_action);
    if (!policy)
        throw std::logic_error("argmin feedback needs a solved policy");
    return Feedback::from_policy("argmin", *policy, actions);
}

void cmd_solve(const ScenarioConfig& cfg, RunManifest& m, std::ostream& log)
{
    const ScenarioSolution s = solve_scenario(cfg);
    const ActionTable table = cfg.action_table(s.grid);
    const double residual = hjb_residual(s.direct.value, table, cfg.solver.advection);
    m.write_field("value.csv", s.direct.value);
    m.write_field("policy.csv", policy_field(s.direct.policy));
    const double probe = s.direct.value.interpolate(cfg.experiment.probe_s, cfg.experiment.probe_x);
    nlohmann::json summary{{"scenario", cfg.name},
                           {"probe", {{"s", cfg.experiment.probe_s}, {"value", probe}}},
                           {"residual", residual},
                           {"converged", s.direct.converged},
                           {"unconverged_levels", s.direct.unconverged_levels},
                           {"max_sweeps", s.direct.max_sweeps},
                           {"value_sup", lp_norm(s.direct.value, kInf)}};
    m.write_json("solve.json", summary);
    m.check("finite", s.direct.value.all_finite());
    m.check("direct_converged", s.direct.converged, {{"unconverged_levels", s.direct.unconverged_levels}});
    log << "value at probe: " << format_double(probe) << "  residual: " << format_double(residual) << "\n";
}

void cmd_policy_iter(const ScenarioConfig& cfg, RunManifest& m, std::ostream& log)
{
    const Grid g = cfg.grid();
    const ActionTable table = cfg.action_table(g);
    const BoundaryCondition bc = cfg.boundary(g);
    const HjbOptions opt = cfg.hjb_options();
    const PolicyIterationResult pi = policy_iteration(table, bc, opt);
    const DirectResult direct = solve_hjb_direct(table, bc, opt);
    const double agreement = lp_norm(pi.value - direct.value, kInf);
    m.write_text("trace.csv", trace_csv(pi.trace));
    m.write_field("value.csv", pi.value);
    m.write_field("policy.csv", policy_field(pi.policy));
    const nlohmann::json summary{{"scenario", cfg.name},
                                 {"iterations", pi.trace.iterations()},
                                 {"converged", pi.trace.converged},
                                 {"oracle_distance", agreement},
                                 {"C", pi.trace.C},
                                 {"C_calibrated", pi.trace.C_calibrated},
                                 {"max_descent_violation", pi.trace.max_descent_violation},
                                 {"max_adjusted_violation", pi.trace.max_adjusted_violation},
                                 {"slack_satisfied", pi.trace.slack_satisfied}};
    m.write_json("policy_iteration.json", summary);
    m.check("converged", pi.trace.converged, {{"iterations", pi.trace.iterations()}});
    m.check("iterations_within_50", pi.trace.iterations() <= 50, {{"iterations", pi.trace.iterations()}});
    m.check("oracle_agreement", agreement <= 10.0 * opt.tol, {{"distance", agreement}, {"bound", 10.0 * opt.tol}});
    m.check("descent", pi.trace.max_descent_violation <= 1e-10, {{"max", pi.trace.max_descent_violation}});
    m.check("adjusted_monotone", pi.trace.max_adjusted_violation <= 1e-10,
            {{"max", pi.trace.max_adjusted_violation}, {"C", pi.trace.C}});
    m.check("slack", pi.trace.slack_satisfied);
    log << "policy iteration: " << pi.trace.iterations() << " iterations, |PI - direct| = " << format_double(agreement)
        << "\n";
}

void cmd_verify(const ScenarioConfig& cfg, RunManifest& m, std::ostream& log)
{
    const ScenarioSolution s = solve_scenario(cfg);
    const CoefficientOracle oracle = cfg.oracle();
    const std::uint64_t cand_seed = cfg.mc.seed + 1;
    m.set_seed("candidates", cand_seed);
    const auto cands = candidate_feedbacks(s.actions, s.grid, cfg.experiment.candidates, cand_seed);
    const SimConfig sim = cfg.sim(s.grid);
    const VerificationReport rep = verification_check(s.direct.value, oracle, sim, cands, scenario_argmin(cfg, s));
    std::vector<MCEstimate> estimates;
    for (const auto& r : rep.rows)
        estimates.push_back(r.estimate);
    const CostBoundReport bound = cost_bound_check(oracle, s.grid, estimates);
    nlohmann::json j = rep.to_json();
    j["scenario"] = cfg.name;
    j["sim"] = sim.to_json();
    j["cost_bound"] = {{"bound", bound.bound}, {"worst_margin", bound.worst_margin}, {"passed", bound.passed}};
    m.write_json("verification.json", j);
    for (const auto& r : rep.rows)
        m.check((r.argmin ? "argmin_matches_value:" : "lower_bound:") + r.control, r.passed,
                {{"mean", r.estimate.mean}, {"se", r.estimate.se}, {"u", rep.u}, {"margin", r.margin}});
    m.check("cost_bound", bound.passed, {{"worst_margin", bound.worst_margin}});
    log << "u(s,x) = " << format_double(rep.u) << ", " << rep.rows.size() << " controls simulated\n";
}

void cmd_dpp(const ScenarioConfig& cfg, RunManifest& m, std::ostream& log)
{
    const ScenarioSolution s = solve_scenario(cfg);
    const Feedback sub = Feedback::constant("suboptimal", cfg.experiment.suboptimal);
    const SimConfig sim = cfg.sim(s.grid);
    const DppReport rep = dpp_battery(s.direct.value, cfg.oracle(), scenario_argmin(cfg, s), sub, cfg.experiment.t_mid,
                                      sim);
    nlohmann::json j = rep.to_json();
    j["scenario"] = cfg.name;
    j["sim"] = sim.to_json();
    m.write_json("dpp.json", j);
    for (const auto& r : rep.rows) {
        const std::string t = format_double(r.t_mid);
        m.check("optimal_residual@" + t, r.optimal_passed,
                {{"residual", r.optimal.mean}, {"se", r.optimal.se}, {"tolerance", rep.tolerance}});
        if (s.actions.size() > 1)
            m.check("suboptimal_detected@" + t, r.suboptimal_detected,
                    {{"residual", r.suboptimal.mean}, {"se", r.suboptimal.se}});
    }
    log << "dpp residuals at " << rep.rows.size() << " intermediate times\n";
}

void cmd_sweep(const ScenarioConfig& cfg, RunManifest& m, std::ostream& log)
{
    const SweepReport rep = mollify_value_sweep(scenario_sweep(cfg));
    std::ostringstream csv;
    rep.write_gap_csv(csv);
    m.write_text("gaps.csv", csv.str());
    m.write_field("value.csv", rep.base);
    nlohmann::json j = rep.summary();
    j["expect"] = cfg.experiment.expect;
    m.write_json("sweep.json", j);
    m.check("liminf", rep.liminf_passed, {{"status", rep.liminf_status}, {"tolerance", rep.tolerance}});
    if (cfg.experiment.expect == "converge")
        m.check("converges", rep.converges,
                {{"sup_gap", rep.smallest().sup_gap}, {"tolerance", rep.tolerance}, {"decreasing", rep.gaps_decreasing}});
    else
        m.check("persistent_gap", !rep.converges && rep.persistent_gap >= cfg.experiment.required_gap,
                {{"gap", rep.persistent_gap}, {"required", cfg.experiment.required_gap}, {"converges", rep.converges}});
    log << "sweep over " << rep.rungs.size() << " rungs, liminf " << rep.liminf_status << ", smallest sup gap "
        << format_double(rep.smallest().sup_gap) << "\n";
}

void cmd_truncation(const ScenarioConfig& cfg, RunManifest& m, std::ostream& log)
{
    const TruncationReport rep = countable_truncation_study(scenario_truncation(cfg));
    m.write_json("truncation.json", rep.to_json());
    for (const auto& row : rep.rows)
        m.write_field("value_N" + std::to_string(row.N) + ".csv", row.value);
    m.check("nonincreasing_in_N", rep.nonincreasing_in_N);
    m.check("eps_converges", rep.eps_converges, {{"tolerance", rep.tolerance}});
    m.check("open_loop_decreasing", rep.open_loop_decreasing);
    log << "truncation study over N = " << rep.rows.size() << " prefixes, strict decrease somewhere: "
        << (rep.strict_somewhere ? "yes" : "no") << "\n";
}

void cmd_simulate(const ScenarioConfig& cfg, RunManifest& m, std::ostream& log)
{
    const Grid g = cfg.grid();
    std::optional<ScenarioSolution> solved;
    if (cfg.experiment.control == "argmin")
        solved = solve_scenario(cfg);
    const Feedback fb = cfg.experiment.control == "argmin"
                            ? scenario_argmin(cfg, *solved)
                            : control_feedback(cfg, cfg.experiment.control, nullptr, cfg.action_set(g));
    const CoefficientOracle oracle = cfg.oracle();
    const SimConfig sim = cfg.sim(g);
    const MCEstimate e = simulate_cost(oracle, fb, sim);
    const CostBoundReport bound = cost_bound_check(oracle, g, {e});
    nlohmann::json j = estimate_record(cfg.name, fb.name(), e);
    j["exits"] = e.exits;
    j["sim"] = sim.to_json();
    j["cost_bound"] = bound.bound;
    m.write_json("simulate.json", j);
    m.check("cost_bound", bound.passed, {{"bound", bound.bound}, {"mean", e.mean}});
    if (cfg.experiment.expected_mean) {
        const double target = *cfg.experiment.expected_mean;
        m.check("expected_mean", std::abs(e.mean - target) <= 3.0 * e.se,
                {{"mean", e.mean}, {"se", e.se}, {"expected", target}});
    }
    log << "J(" << fb.name() << ") = " << format_double(e.mean) << " +- " << format_double(e.se) << " (M = " << e.paths
        << ")\n";
}

void cmd_counterexample(const ScenarioConfig& cfg, RunManifest& m, std::ostream& log)
{
    if (cfg.coefficients.oracle != "counterexample")
        throw std::invalid_argument("coefficients.oracle: the counterexample subcommand needs oracle = counterexample");
    const Grid g = cfg.grid();
    std::optional<SimConfig> sim;
    if (cfg.experiment.mc_cross_check)
        sim = cfg.sim(g);
    const CounterexampleReport rep = counterexample_report(cfg.time.T, cfg.experiment.samples, g, sim,
                                                           cfg.experiment.contamination_tolerance,
                                                           cfg.experiment.required_gap);
    std::ostringstream csv;
    rep.write_csv(csv);
    m.write_text("counterexample.csv", csv.str());
    m.write_json("counterexample.json", rep.to_json());
    double worst = 0.0;
    for (const auto& s : rep.samples) {
        worst = std::max(worst, std::abs(s.numeric_value - s.exact_value) / std::max(1.0, std::abs(s.exact_value)));
        worst = std::max(worst, std::abs(s.numeric_limit - s.exact_limit) / std::max(1.0, std::abs(s.exact_limit)));
    }
    m.check("origin_gap", rep.origin_gap >= rep.required_gap,
            {{"gap", rep.origin_gap}, {"required", rep.required_gap}});
    m.check("closed_forms_within_2pct", worst <= 0.02, {{"worst_relative_error", worst}});
    m.check("boundary_contamination", rep.contamination <= rep.contamination_tolerance,
            {{"contamination", rep.contamination}, {"advice", rep.advice}});
    if (sim)
        m.check("monte_carlo_cross_check", rep.cross_check_passed);
    log << "gap at (0,0): " << format_double(rep.origin_gap) << "\n";
    if (!rep.advice.empty())
        log << rep.advice << "\n";
}

void cmd_catalog(RunManifest& m, std::ostream& log)
{
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : catalog()) {
        entries.push_back({{"name", e.name}, {"description", e.description}, {"defaults", e.defaults}});
        log << e.name << "\n    " << e.description << "\n";
        if (!e.defaults.empty()) {
            log << "    defaults:";
            for (const auto& [k, v] : e.defaults)
                log << " " << k << "=" << v;
            log << "\n";
        }
    }
    log << "built-in scenarios:";
    for (const auto& s : builtin_scenarios())
        log << " " << s;
    log << "\n";
    m.write_json("catalog.json", {{"oracles", entries}, {"scenarios", builtin_scenarios()}});
}

}  // namespace

ScenarioSolution solve_scenario(const ScenarioConfig& cfg)
{
    ScenarioSolution s;
    s.grid = cfg.grid();
    s.actions = cfg.action_set(s.grid);
    s.direct = solve_hjb_direct(cfg.action_table(s.grid), cfg.boundary(s.grid), cfg.hjb_options());
    return s;
}

Feedback scenario_argmin(const ScenarioConfig& cfg, const ScenarioSolution& s)
{
    const std::string control = cfg.experiment.control == "constant" ? "argmin" : cfg.experiment.control;
    if (control == "argmin" && cfg.coefficients.hamiltonian == "strict_gap")
        throw std::invalid_argument("experiment.control: the strict_gap table has no policy over the action list; "
                                    "use control = follow");
    return control_feedback(cfg, control, &s.direct.policy, s.actions);
}

SweepSpec scenario_sweep(const ScenarioConfig& cfg)
{
    SweepSpec s;
    s.scenario = cfg.name;
    s.oracle = cfg.oracle();
    s.grid = cfg.mollify_grid();
    s.actions = cfg.mollify.actions == "grid_nodes" ? grid_node_actions(s.grid) : cfg.action_set(s.grid);
    s.eps = cfg.mollify.eps;
    s.options = cfg.hjb_options();
    s.per_eps = cfg.mollify.per_eps;
    const std::string base = cfg.mollify.boundary.empty() ? cfg.solver.boundary : cfg.mollify.boundary;
    s.boundary = cfg.boundary_named(base, s.grid);
    if (!cfg.mollify.mollified_boundary.empty())
        s.mollified_boundary = cfg.boundary_named(cfg.mollify.mollified_boundary, s.grid);
    s.probe_s = cfg.experiment.probe_s;
    s.probe_x = cfg.experiment.probe_x;
    const double T = cfg.time.T;
    if (cfg.coefficients.oracle == "counterexample") {
        s.exact_value = [T](double t, const Point& x) { return counterexample_value(T, t, x[0]); };
        s.exact_limit = [T](double t, const Point& x) { return counterexample_mollified_value(T, t, x[0]); };
    } else if (cfg.coefficients.oracle == "smooth_baseline") {
        const ParamMap p = cfg.coefficients.params;
        const OracleContext ctx{cfg.domain.dim, T};
        s.exact_value = [p, ctx](double t, const Point& x) { return smooth_baseline_exact(p, ctx, t, x); };
    }
    return s;
}

TruncationSpec scenario_truncation(const ScenarioConfig& cfg)
{
    TruncationSpec t;
    t.scenario = cfg.name;
    t.oracle = cfg.oracle();
    t.family = cfg.experiment.family;
    t.N_list = cfg.experiment.N_list;
    t.grid = cfg.grid();
    t.eps = cfg.mollify.eps;
    t.options = cfg.hjb_options();
    t.boundary = cfg.boundary(t.grid);
    t.per_eps = cfg.mollify.per_eps;
    t.sim = cfg.sim(t.grid);
    return t;
}

std::string default_out_dir()
{
    if (const char* env = std::getenv("HJBLAB_OUT"); env && *env)
        return env;
    return "hjblab-out";
}

// ---------------------------------------------------------------------------

RunManifest::RunManifest(std::string subcommand, std::string out_dir)
    : subcommand_(std::move(subcommand)), out_dir_(std::move(out_dir)), started_(utc_now()),
      clock_(std::chrono::steady_clock::now())
{
    std::filesystem::create_directories(out_dir_);
}

void RunManifest::set_config(const ScenarioConfig& config)
{
    config_ = {{"origin", config.origin}, {"hash", hex64(config.hash())}, {"ini", config.to_ini()},
               {"resolved", config.to_json()}};
    warnings_ = config.warnings;
    set_seed("mc", config.mc.seed);
}

void RunManifest::set_seed(const std::string& name, std::uint64_t seed)
{
    seeds_[name] = seed;
}

std::string RunManifest::path(const std::string& name) const
{
    return (std::filesystem::path(out_dir_) / name).string();
}

void RunManifest::write_text(const std::string& name, const std::string& text)
{
    std::filesystem::create_directories(std::filesystem::path(path(name)).parent_path());
    write_text_atomic(path(name), text);
    if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end())
        artifacts_.push_back(name);
}

void RunManifest::write_json(const std::string& name, const nlohmann::json& j)
{
    write_text(name, j.dump(2) + "\n");
}

void RunManifest::write_field(const std::string& name, const Field& field)
{
    std::ostringstream os;
    write_field_csv(os, field);
    write_text(name, os.str());
}

void RunManifest::check(const std::string& name, bool passed, nlohmann::json detail)
{
    checks_.push_back({name, passed, std::move(detail)});
}

bool RunManifest::passed() const
{
    return std::all_of(checks_.begin(), checks_.end(), [](const CheckRecord& c) { return c.passed; });
}

nlohmann::json RunManifest::failures() const
{
    nlohmann::json failed = nlohmann::json::array();
    for (const auto& c : checks_)
        if (!c.passed)
            failed.push_back({{"check", c.name}, {"detail", c.detail}});
    return {{"subcommand", subcommand_}, {"failed", failed}, {"manifest", path("manifest.json")}};
}

nlohmann::json RunManifest::to_json() const
{
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : checks_)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return {{"tool", "hjblab"},
            {"version", HJBLAB_VERSION},
            {"subcommand", subcommand_},
            {"started", started_},
            {"finished", finished_},
            {"wall_seconds", wall_},
            {"threads", threads_},
            {"config", config_},
            {"seeds", seeds_},
            {"warnings", warnings_},
            {"artifacts", artifacts_},
            {"checks", checks},
            {"passed", passed()}};
}

void RunManifest::finish()
{
    finished_ = utc_now();
    wall_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_).count();
    write_text_atomic(path("manifest.json"), to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> names{"solve-hjb",        "policy-iter", "verify",         "dpp-check",
                                                "mollify-sweep",    "truncation-study", "simulate", "counterexample",
                                                "catalog",          "selftest"};
    return names;
}

void run_scenario(const std::string& subcommand, const ScenarioConfig& config, RunManifest& manifest,
                  std::ostream& log)
{
    if (subcommand == "solve-hjb")
        cmd_solve(config, manifest, log);
    else if (subcommand == "policy-iter")
        cmd_policy_iter(config, manifest, log);
    else if (subcommand == "verify")
        cmd_verify(config, manifest, log);
    else if (subcommand == "dpp-check")
        cmd_dpp(config, manifest, log);
    else if (subcommand == "mollify-sweep")
        cmd_sweep(config, manifest, log);
    else if (subcommand == "truncation-study")
        cmd_truncation(config, manifest, log);
    else if (subcommand == "simulate")
        cmd_simulate(config, manifest, log);
    else if (subcommand == "counterexample")
        cmd_counterexample(config, manifest, log);
    else
        throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
}

int run(const std::string& subcommand, const std::string& config, const RunOptions& options, std::ostream& out,
        std::ostream& err)
{
    const auto fail = [&](int code, const std::string& kind, const nlohmann::json& detail) {
        err << nlohmann::json{{"subcommand", subcommand}, {"error", kind}, {"detail", detail}}.dump() << "\n";
        return code;
    };
    if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
        return fail(exit_config_error, "usage", "unknown subcommand '" + subcommand + "'");
    set_thread_count(std::max(1u, options.threads));

    if (subcommand == "catalog" || subcommand == "selftest") {
        RunManifest m(subcommand, options.out_dir);
        m.set_threads(thread_count());
        try {
            if (subcommand == "catalog")
                cmd_catalog(m, out);
            else
                run_selftest(m, out);
        } catch (const std::exception& e) {
            m.check("completed", false, {{"error", e.what()}});
            m.finish();
            return fail(exit_runtime_error, "runtime", e.what());
        }
        m.finish();
        if (!m.passed()) {
            err << m.failures().dump() << "\n";
            return exit_check_failed;
        }
        return exit_ok;
    }

    if (config.empty())
        return fail(exit_config_error, "config", subcommand + " needs --config");
    ScenarioConfig cfg;
    try {
        cfg = resolve_config(config);
    } catch (const ConfigError& e) {
        return fail(exit_config_error, "config", e.issues());
    }
    if (options.seed_override)
        cfg.mc.seed = *options.seed_override;
    for (const auto& w : cfg.warnings)
        err << "warning: " << w << "\n";
    if (options.strict && !cfg.warnings.empty())
        return fail(exit_config_error, "config", cfg.warnings);

    RunManifest m(subcommand, options.out_dir);
    m.set_threads(thread_count());
    m.set_config(cfg);
    m.write_text("config.ini", cfg.to_ini());
    try {
        run_scenario(subcommand, cfg, m, out);
    } catch (const std::invalid_argument& e) {
        m.check("completed", false, {{"error", e.what()}});
        m.finish();
        return fail(exit_config_error, "config", e.what());
    } catch (const std::exception& e) {
        m.check("completed", false, {{"error", e.what()}});
        m.finish();
        return fail(exit_runtime_error, "runtime", e.what());
    }
    m.finish();
    for (const auto& c : m.checks())
        out << (c.passed ? "PASS " : "FAIL ") << c.name << "\n";
    if (!m.passed()) {
        err << m.failures().dump() << "\n";
        return exit_check_failed;
    }
    return exit_ok;
}

}  // namespace hjblab
