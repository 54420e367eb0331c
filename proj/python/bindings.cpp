#include "hjblab/run.hpp"

#include "hjblab/io.hpp"
#include "hjblab/parallel.hpp"

#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace hjblab;

namespace {

/// Values as an array of shape (nt + 1, nx) or (nt + 1, ny, nx).
py::array_t<double> field_array(const Field& f)
{
    const Grid& g = f.grid();
    std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(g.time_points())};
    if (g.dim() == 2)
        shape.push_back(static_cast<py::ssize_t>(g.nx(1)));
    shape.push_back(static_cast<py::ssize_t>(g.nx(0)));
    py::array_t<double> out(shape);
    std::copy(f.values().begin(), f.values().end(), out.mutable_data());
    return out;
}

py::array_t<double> axis_array(const Grid& g, int a)
{
    py::array_t<double> out(static_cast<py::ssize_t>(g.nx(a)));
    for (std::size_t i = 0; i < g.nx(a); ++i)
        out.mutable_data()[i] = g.coord(a, i);
    return out;
}

py::array_t<double> time_array(const Grid& g)
{
    py::array_t<double> out(static_cast<py::ssize_t>(g.time_points()));
    for (std::size_t n = 0; n < g.time_points(); ++n)
        out.mutable_data()[n] = g.time(n);
    return out;
}

py::dict field_dict(const Field& f)
{
    py::dict d;
    d["t"] = time_array(f.grid());
    d["x"] = axis_array(f.grid(), 0);
    if (f.grid().dim() == 2)
        d["y"] = axis_array(f.grid(), 1);
    d["values"] = field_array(f);
    return d;
}

ScenarioConfig scenario(const std::string& config, std::optional<std::uint64_t> seed)
{
    ScenarioConfig c = resolve_config(config);
    if (seed)
        c.mc.seed = *seed;
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Finite-difference HJB solvers, Monte Carlo checks and mollification studies";
    m.attr("__version__") = HJBLAB_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("builtin_scenarios", &builtin_scenarios);
    m.def("builtin_scenario_text", &builtin_scenario_text, py::arg("name"));
    m.def(
        "resolved_config",
        [](const std::string& config) { return resolve_config(config).to_ini(); },
        py::arg("config"), "Canonical INI text of a config file or built-in scenario, every default explicit.");
    m.def(
        "config_json",
        [](const std::string& config) { return resolve_config(config).to_json().dump(); }, py::arg("config"));
    m.def(
        "catalog",
        [] {
            std::vector<std::tuple<std::string, std::string, ParamMap>> out;
            for (const auto& e : catalog())
                out.emplace_back(e.name, e.description, e.defaults);
            return out;
        });
    m.def("set_threads", [](unsigned n) { set_thread_count(std::max(1u, n)); }, py::arg("count"));

    m.def(
        "solve_hjb",
        [](const std::string& config) {
            const ScenarioSolution s = solve_scenario(resolve_config(config));
            py::dict d = field_dict(s.direct.value);
            Field policy(s.grid);
            for (std::size_t n = 0; n < s.grid.time_points(); ++n)
                for (std::size_t node = 0; node < s.grid.space_points(); ++node)
                    policy.at(n, node) = s.direct.policy.at(n, node);
            d["policy"] = field_array(policy);
            d["converged"] = s.direct.converged;
            return d;
        },
        py::arg("config"), "Direct solve; returns t, x[, y], values and the action-index policy.");

    m.def(
        "policy_iteration",
        [](const std::string& config) {
            const ScenarioConfig c = resolve_config(config);
            const Grid g = c.grid();
            const ActionTable table = c.action_table(g);
            const PolicyIterationResult pi = policy_iteration(table, c.boundary(g), c.hjb_options());
            py::dict d = field_dict(pi.value);
            std::ostringstream trace;
            pi.trace.write_csv(trace);
            d["trace_csv"] = trace.str();
            d["iterations"] = pi.trace.iterations();
            d["converged"] = pi.trace.converged;
            d["max_descent_violation"] = pi.trace.max_descent_violation;
            d["C"] = pi.trace.C;
            return d;
        },
        py::arg("config"));

    m.def(
        "simulate",
        [](const std::string& config, std::optional<std::uint64_t> seed, std::optional<std::size_t> paths) {
            ScenarioConfig c = scenario(config, seed);
            if (paths)
                c.mc.M = *paths;
            const Grid g = c.grid();
            Feedback fb;
            std::optional<ScenarioSolution> s;
            if (c.experiment.control == "argmin") {
                s = solve_scenario(c);
                fb = scenario_argmin(c, *s);
            } else if (c.experiment.control == "follow") {
                fb = Feedback::analytic("a=x", [](double, const Point& x) { return x; });
            } else {
                fb = Feedback::constant("constant", c.experiment.constant_action);
            }
            const MCEstimate e = simulate_cost(c.oracle(), fb, c.sim(g));
            nlohmann::json j = estimate_record(c.name, fb.name(), e);
            j["exits"] = e.exits;
            return j.dump();
        },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("paths") = py::none(),
        "Monte Carlo cost of the configured control, as a JSON record.");

    m.def(
        "mollify_sweep",
        [](const std::string& config) { return mollify_value_sweep(scenario_sweep(resolve_config(config))).summary().dump(); },
        py::arg("config"));

    m.def(
        "counterexample_report",
        [](double T, const std::vector<std::pair<double, double>>& samples, double lo, double hi, std::size_t nx,
           std::size_t nt) {
            const Grid g = Grid::build(DomainKind::box, 1, {{lo, hi}}, {nx}, T, nt);
            return counterexample_report(T, samples, g, std::nullopt).to_json().dump();
        },
        py::arg("T") = 1.0, py::arg("samples") = std::vector<std::pair<double, double>>{{0.0, 0.0}},
        py::arg("lo") = -6.0, py::arg("hi") = 6.0, py::arg("nx") = 241, py::arg("nt") = 512);

    m.def("counterexample_value", &counterexample_value, py::arg("T"), py::arg("s"), py::arg("x"));
    m.def("counterexample_mollified_value", &counterexample_mollified_value, py::arg("T"), py::arg("s"), py::arg("x"));

    m.def(
        "run",
        [](const std::string& subcommand, const std::string& config, const std::string& out,
           std::optional<std::uint64_t> seed, unsigned threads, bool strict) {
            RunOptions o;
            o.out_dir = out;
            o.seed_override = seed;
            o.threads = threads;
            o.strict = strict;
            std::ostringstream so, se;
            const int code = hjblab::run(subcommand, config, o, so, se);
            return std::make_tuple(code, so.str(), se.str());
        },
        py::arg("subcommand"), py::arg("config") = "", py::arg("out") = default_out_dir(), py::arg("seed") = py::none(),
        py::arg("threads") = 1u, py::arg("strict") = false,
        "Same as the command line: returns (exit code, stdout text, stderr text).");
}
