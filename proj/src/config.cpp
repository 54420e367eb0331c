#include "hjblab/config.hpp"

#include "hjblab/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace hjblab {

namespace pt = boost::property_tree;

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error([&] {
          std::string msg = "invalid config:";
          for (const auto& i : issues)
              msg += "\n  " + i;
          return msg;
      }()),
      issues_(std::move(issues))
{
}

std::uint64_t fnv1a(std::string_view text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"scenario", {"name", "description"}},
        {"domain", {"kind", "dim", "extent", "nx"}},
        {"time", {"T", "nt"}},
        {"actions", {"mode", "list", "family", "N"}},
        {"coefficients", {"oracle", "hamiltonian"}},
        {"params", {}},
        {"solver", {"time_stepping", "advection", "tol", "max_iters", "slack_delta", "C", "inner_sweeps", "boundary"}},
        {"mollify", {"eps", "kernel", "per_eps", "boundary", "mollified_boundary", "actions", "extent", "nx", "nt"}},
        {"mc", {"M", "dt_sim", "seed", "s", "x"}},
        {"experiment",
         {"t_mid", "x_samples", "N_list", "family", "candidates", "control", "constant_action", "suboptimal", "expect",
          "required_gap", "probe_s", "probe_x", "contamination_tolerance", "mc_cross_check", "expected_mean"}},
    };
    return keys;
}

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

std::vector<std::string> words(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w)
        out.push_back(w);
    return out;
}

bool to_double(const std::string& s, double& out)
{
    try {
        std::size_t used = 0;
        out = std::stod(s, &used);
        return used == s.size() && std::isfinite(out);
    } catch (const std::exception&) {
        return false;
    }
}

bool to_size(const std::string& s, std::size_t& out)
{
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        return false;
    try {
        out = static_cast<std::size_t>(std::stoull(s));
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

/// Reads one section of the tree, recording issues against "section.key".
class Reader {
public:
    Reader(const pt::ptree& tree, std::vector<std::string>& issues) : tree_(tree), issues_(issues) {}

    std::optional<std::string> raw(const std::string& path) const
    {
        const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(path, '.'));
        if (!v)
            return std::nullopt;
        return trim(*v);
    }

    void error(const std::string& path, const std::string& what) { issues_.push_back(path + ": " + what); }

    void string(const std::string& path, std::string& out)
    {
        if (auto v = raw(path))
            out = *v;
    }

    void number(const std::string& path, double& out)
    {
        if (auto v = raw(path))
            if (!to_double(*v, out))
                error(path, "expected a number, got '" + *v + "'");
    }

    void count(const std::string& path, std::size_t& out)
    {
        if (auto v = raw(path))
            if (!to_size(*v, out))
                error(path, "expected a nonnegative integer, got '" + *v + "'");
    }

    void flag(const std::string& path, bool& out)
    {
        if (auto v = raw(path)) {
            if (*v == "true" || *v == "1" || *v == "yes")
                out = true;
            else if (*v == "false" || *v == "0" || *v == "no")
                out = false;
            else
                error(path, "expected true or false, got '" + *v + "'");
        }
    }

    bool numbers(const std::string& path, std::vector<double>& out)
    {
        auto v = raw(path);
        if (!v)
            return false;
        std::vector<double> parsed;
        for (const auto& w : words(*v)) {
            double d = 0.0;
            if (!to_double(w, d)) {
                error(path, "expected numbers, got '" + w + "'");
                return false;
            }
            parsed.push_back(d);
        }
        out = std::move(parsed);
        return true;
    }

    bool counts(const std::string& path, std::vector<std::size_t>& out)
    {
        auto v = raw(path);
        if (!v)
            return false;
        std::vector<std::size_t> parsed;
        for (const auto& w : words(*v)) {
            std::size_t n = 0;
            if (!to_size(w, n)) {
                error(path, "expected integers, got '" + w + "'");
                return false;
            }
            parsed.push_back(n);
        }
        out = std::move(parsed);
        return true;
    }

    /// "a" or "a,b"; missing components are zero.
    bool point(const std::string& path, const std::string& text, Point& out)
    {
        const auto parts = split(text, ',');
        if (parts.empty() || parts.size() > static_cast<std::size_t>(kMaxDim)) {
            error(path, "expected one or two comma-separated components, got '" + text + "'");
            return false;
        }
        Point p{};
        for (std::size_t i = 0; i < parts.size(); ++i)
            if (!to_double(parts[i], p[i])) {
                error(path, "bad component '" + parts[i] + "'");
                return false;
            }
        out = p;
        return true;
    }

    void point(const std::string& path, Point& out)
    {
        if (auto v = raw(path))
            point(path, *v, out);
    }

    /// Scalars separated by spaces, or vectors "a,b" separated by ';'.
    bool actions(const std::string& path, std::vector<Action>& out)
    {
        auto v = raw(path);
        if (!v)
            return false;
        std::vector<Action> parsed;
        const bool vectors = v->find(',') != std::string::npos;
        for (const auto& item : vectors ? split(*v, ';') : words(*v)) {
            Point p{};
            if (!point(path, item, p))
                return false;
            parsed.push_back(p);
        }
        out = std::move(parsed);
        return true;
    }

    const pt::ptree& tree() const { return tree_; }

private:
    const pt::ptree& tree_;
    std::vector<std::string>& issues_;
};

std::string join_numbers(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? " " : "") + format_double(v[i]);
    return s;
}

template <class T>
std::string join_counts(const std::vector<T>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? " " : "") + std::to_string(v[i]);
    return s;
}

std::string point_text(const Point& p, int dim)
{
    std::string s = format_double(p[0]);
    for (int i = 1; i < dim; ++i)
        s += "," + format_double(p[i]);
    return s;
}

std::string actions_text(const std::vector<Action>& list, int dim)
{
    std::string s;
    for (std::size_t i = 0; i < list.size(); ++i)
        s += (i ? (dim > 1 ? "; " : " ") : "") + point_text(list[i], dim);
    return s;
}

std::string extent_text(const std::vector<Interval>& ext)
{
    std::string s;
    for (std::size_t i = 0; i < ext.size(); ++i)
        s += (i ? " " : "") + format_double(ext[i].lo) + " " + format_double(ext[i].hi);
    return s;
}

bool known_boundary(const std::string& b)
{
    static const std::set<std::string> names{"periodic",          "natural", "zero", "counterexample_value",
                                             "counterexample_mollified", "counterexample_lower"};
    return names.count(b) > 0;
}

void check_extent(Reader& r, const std::string& path, const std::vector<double>& raw, int dim,
                  std::vector<Interval>& out)
{
    if (raw.size() != 2 && raw.size() != static_cast<std::size_t>(2 * dim)) {
        r.error(path, "expected 2 or " + std::to_string(2 * dim) + " numbers (lo hi per axis)");
        return;
    }
    out.clear();
    for (int a = 0; a < dim; ++a) {
        const std::size_t k = raw.size() == 2 ? 0 : 2 * static_cast<std::size_t>(a);
        if (!(raw[k] < raw[k + 1]))
            r.error(path, "axis " + std::to_string(a) + " needs lo < hi");
        out.push_back({raw[k], raw[k + 1]});
    }
}

void check_nx(Reader& r, const std::string& path, const std::vector<std::size_t>& raw, int dim,
              std::vector<std::size_t>& out)
{
    if (raw.size() != 1 && raw.size() != static_cast<std::size_t>(dim)) {
        r.error(path, "expected 1 or " + std::to_string(dim) + " integers");
        return;
    }
    out.assign(static_cast<std::size_t>(dim), raw[0]);
    for (std::size_t a = 0; a < raw.size(); ++a) {
        out[a] = raw[a];
        if (raw[a] < 3)
            r.error(path, "needs at least 3 nodes per axis");
    }
}

std::string column_hint(const std::string& text, unsigned long line)
{
    std::istringstream is(text);
    std::string l;
    for (unsigned long k = 0; k < line && std::getline(is, l); ++k) {
    }
    const auto col = l.find_first_not_of(" \t");
    return std::to_string(col == std::string::npos ? 1 : col + 1);
}

ScenarioConfig parse_tree(const pt::ptree& tree, const std::string& origin, const std::filesystem::path& base_dir)
{
    std::vector<std::string> issues;
    Reader r(tree, issues);
    ScenarioConfig c;
    c.origin = origin;

    for (const auto& [section, body] : tree) {
        const auto known = known_keys().find(section);
        if (body.empty() && !body.data().empty()) {
            c.warnings.push_back(section + ": key outside any section ignored");
            continue;
        }
        if (known == known_keys().end()) {
            c.warnings.push_back(section + ": unknown section ignored");
            continue;
        }
        if (section == "params")
            continue;
        for (const auto& kv : body)
            if (!known->second.count(kv.first))
                c.warnings.push_back(section + "." + kv.first + ": unknown key ignored");
    }

    r.string("scenario.name", c.name);
    r.string("scenario.description", c.description);
    if (c.name.empty())
        c.name = std::filesystem::path(origin).stem().string();

    // domain
    std::string kind = "torus";
    r.string("domain.kind", kind);
    if (kind == "torus")
        c.domain.kind = DomainKind::torus;
    else if (kind == "box")
        c.domain.kind = DomainKind::box;
    else
        r.error("domain.kind", "expected torus or box, got '" + kind + "'");
    std::size_t dim = 1;
    r.count("domain.dim", dim);
    if (dim < 1 || dim > static_cast<std::size_t>(kMaxDim)) {
        r.error("domain.dim", "must be 1 or 2");
        dim = 1;
    }
    c.domain.dim = static_cast<int>(dim);
    std::vector<double> ext{-1.0, 1.0};
    r.numbers("domain.extent", ext);
    check_extent(r, "domain.extent", ext, c.domain.dim, c.domain.extent);
    std::vector<std::size_t> nx{64};
    r.counts("domain.nx", nx);
    check_nx(r, "domain.nx", nx, c.domain.dim, c.domain.nx);

    // time
    r.number("time.T", c.time.T);
    if (!(c.time.T > 0.0))
        r.error("time.T", "must be positive");
    r.count("time.nt", c.time.nt);
    if (c.time.nt < 1)
        r.error("time.nt", "must be at least 1");

    // coefficients
    r.string("coefficients.oracle", c.coefficients.oracle);
    r.string("coefficients.hamiltonian", c.coefficients.hamiltonian);
    if (c.coefficients.hamiltonian != "sampled" && c.coefficients.hamiltonian != "strict_gap")
        r.error("coefficients.hamiltonian", "expected sampled or strict_gap");
    if (c.coefficients.hamiltonian == "strict_gap" && (c.domain.dim != 1 || c.domain.kind != DomainKind::box))
        r.error("coefficients.hamiltonian", "strict_gap needs a 1-d box");
    if (const auto params = tree.get_child_optional("params"))
        for (const auto& kv : *params)
            c.coefficients.params[kv.first] = trim(kv.second.data());
    if (c.coefficients.oracle == "tabulated") {
        for (auto& [key, value] : c.coefficients.params) {
            if (key.rfind("drift", 0) != 0 && key.rfind("cost", 0) != 0)
                continue;
            std::filesystem::path p(value);
            if (p.is_relative())
                p = base_dir / p;
            if (!std::filesystem::exists(p))
                r.error("params." + key, "file not found: " + p.string());
            value = p.string();
        }
    }
    bool oracle_ok = false;
    CoefficientOracle oracle;
    if (issues.empty()) {
        try {
            oracle = make_oracle(c.coefficients.oracle, c.coefficients.params, {c.domain.dim, c.time.T});
            oracle_ok = true;
        } catch (const std::exception& e) {
            r.error("coefficients.oracle", e.what());
        }
    }

    // actions
    r.string("actions.mode", c.actions.mode);
    r.actions("actions.list", c.actions.list);
    r.string("actions.family", c.actions.family);
    r.count("actions.N", c.actions.N);
    if (c.actions.mode == "list") {
        if (c.actions.list.empty())
            r.error("actions.list", "mode = list needs a nonempty list");
        for (const auto& a : c.actions.list)
            for (int i = c.domain.dim; i < kMaxDim; ++i)
                if (a[i] != 0.0)
                    r.error("actions.list", "action has more components than domain.dim");
        if (oracle_ok)
            for (const auto& a : c.actions.list)
                if (!oracle.admits(a))
                    r.error("actions.list", "action " + point_text(a, c.domain.dim) + " is not admissible for " +
                                                c.coefficients.oracle);
        try {
            if (!c.actions.list.empty())
                ActionSet(c.actions.list, c.domain.dim);
        } catch (const std::exception& e) {
            r.error("actions.list", e.what());
        }
    } else if (c.actions.mode == "family") {
        try {
            enumerate_family(c.actions.family, std::max<std::size_t>(c.actions.N, 1));
        } catch (const std::exception& e) {
            r.error("actions.family", e.what());
        }
        if (c.actions.N < 1)
            r.error("actions.N", "must be at least 1");
    } else if (c.actions.mode == "grid_nodes") {
        if (c.domain.dim != 1)
            r.error("actions.mode", "grid_nodes needs a 1-d domain");
    } else if (c.actions.mode != "default") {
        r.error("actions.mode", "expected default, list, family or grid_nodes");
    }

    // solver
    std::string ts = to_string(c.solver.time_stepping), adv = to_string(c.solver.advection);
    r.string("solver.time_stepping", ts);
    r.string("solver.advection", adv);
    try {
        c.solver.time_stepping = time_stepping_from_string(ts);
        if (c.solver.time_stepping != TimeStepping::implicit_euler)
            r.error("solver.time_stepping", "the HJB solvers support implicit_euler only");
    } catch (const std::exception& e) {
        r.error("solver.time_stepping", e.what());
    }
    try {
        c.solver.advection = advection_from_string(adv);
    } catch (const std::exception& e) {
        r.error("solver.advection", e.what());
    }
    r.number("solver.tol", c.solver.tol);
    if (!(c.solver.tol > 0.0))
        r.error("solver.tol", "must be positive");
    r.count("solver.max_iters", c.solver.max_iters);
    if (c.solver.max_iters < 1)
        r.error("solver.max_iters", "must be at least 1");
    r.number("solver.slack_delta", c.solver.slack_delta);
    if (!(c.solver.slack_delta > c.domain.dim / (2.0 * (c.domain.dim + 3.0))))
        r.error("solver.slack_delta", "must exceed dim / (2 p) with p = dim + 3");
    if (auto C = r.raw("solver.C"); C && *C != "auto") {
        double v = 0.0;
        if (!to_double(*C, v) || v < 0.0)
            r.error("solver.C", "expected auto or a nonnegative number");
        else
            c.solver.C_monotone = v;
    }
    r.count("solver.inner_sweeps", c.solver.inner_sweeps);
    if (c.solver.inner_sweeps < 1)
        r.error("solver.inner_sweeps", "must be at least 1");
    c.solver.boundary = c.domain.kind == DomainKind::torus ? "periodic" : "zero";
    r.string("solver.boundary", c.solver.boundary);
    const auto check_boundary = [&](const std::string& path, const std::string& b) {
        if (b.empty())
            return;
        if (!known_boundary(b))
            r.error(path, "unknown boundary '" + b + "'");
        else if (c.domain.kind == DomainKind::torus && b != "periodic" && b != "natural")
            r.error(path, "a torus needs periodic boundary data");
        else if (c.domain.kind == DomainKind::box && b == "periodic")
            r.error(path, "periodic data given on a box");
    };
    check_boundary("solver.boundary", c.solver.boundary);

    // mollify
    if (r.numbers("mollify.eps", c.mollify.eps) && c.mollify.eps.empty())
        r.error("mollify.eps", "needs at least one value");
    for (std::size_t i = 0; i < c.mollify.eps.size(); ++i) {
        if (!(c.mollify.eps[i] > 0.0))
            r.error("mollify.eps", "values must be positive");
        if (i > 0 && !(c.mollify.eps[i] < c.mollify.eps[i - 1]))
            r.error("mollify.eps", "values must be strictly decreasing");
    }
    r.string("mollify.kernel", c.mollify.kernel);
    if (c.mollify.kernel != "bump")
        r.error("mollify.kernel", "only 'bump' is available");
    r.count("mollify.per_eps", c.mollify.per_eps);
    if (c.mollify.per_eps < 1)
        r.error("mollify.per_eps", "must be at least 1");
    r.string("mollify.boundary", c.mollify.boundary);
    r.string("mollify.mollified_boundary", c.mollify.mollified_boundary);
    check_boundary("mollify.boundary", c.mollify.boundary);
    check_boundary("mollify.mollified_boundary", c.mollify.mollified_boundary);
    r.string("mollify.actions", c.mollify.actions);
    if (c.mollify.actions != "inherit" && c.mollify.actions != "grid_nodes")
        r.error("mollify.actions", "expected inherit or grid_nodes");
    if (c.mollify.actions == "grid_nodes" && c.domain.dim != 1)
        r.error("mollify.actions", "grid_nodes needs a 1-d domain");
    std::vector<double> mext;
    if (r.numbers("mollify.extent", mext) && !mext.empty())
        check_extent(r, "mollify.extent", mext, c.domain.dim, c.mollify.extent);
    std::vector<std::size_t> mnx;
    if (r.counts("mollify.nx", mnx) && !mnx.empty())
        check_nx(r, "mollify.nx", mnx, c.domain.dim, c.mollify.nx);
    r.count("mollify.nt", c.mollify.nt);

    // mc
    r.count("mc.M", c.mc.M);
    if (c.mc.M < 2)
        r.error("mc.M", "needs at least 2 paths");
    r.number("mc.dt_sim", c.mc.dt_sim);
    if (!(c.mc.dt_sim > 0.0) || c.mc.dt_sim > c.time.T)
        r.error("mc.dt_sim", "must lie in (0, T]");
    if (auto seed = r.raw("mc.seed")) {
        std::size_t v = 0;
        if (!to_size(*seed, v))
            r.error("mc.seed", "expected a nonnegative integer");
        c.mc.seed = v;
    }
    r.number("mc.s", c.mc.s);
    if (c.mc.s < 0.0 || c.mc.s >= c.time.T)
        r.error("mc.s", "must lie in [0, T)");
    r.point("mc.x", c.mc.x);
    for (int a = 0; a < c.domain.dim && a < static_cast<int>(c.domain.extent.size()); ++a)
        if (c.mc.x[a] < c.domain.extent[a].lo || c.mc.x[a] > c.domain.extent[a].hi)
            r.error("mc.x", "start point outside the domain");

    // experiment
    auto& e = c.experiment;
    if (r.numbers("experiment.t_mid", e.t_mid))
        for (double t : e.t_mid)
            if (!(t > c.mc.s && t < c.time.T))
                r.error("experiment.t_mid", "every value must lie in (mc.s, T)");
    if (auto xs = r.raw("experiment.x_samples")) {
        e.samples.clear();
        for (const auto& item : split(*xs, ';')) {
            const auto sx = split(item, ':');
            double s = 0.0, x = 0.0;
            if (sx.size() != 2 || !to_double(sx[0], s) || !to_double(sx[1], x)) {
                r.error("experiment.x_samples", "expected 's:x' pairs separated by ';', got '" + item + "'");
                continue;
            }
            if (s < 0.0 || s > c.time.T)
                r.error("experiment.x_samples", "sample time outside [0, T]");
            e.samples.emplace_back(s, x);
        }
    }
    if (r.counts("experiment.N_list", e.N_list)) {
        if (e.N_list.empty())
            r.error("experiment.N_list", "needs at least one value");
        for (std::size_t i = 0; i < e.N_list.size(); ++i)
            if (e.N_list[i] < 1 || (i > 0 && e.N_list[i] <= e.N_list[i - 1]))
                r.error("experiment.N_list", "values must be positive and increasing");
    }
    r.string("experiment.family", e.family);
    try {
        enumerate_family(e.family, 1);
    } catch (const std::exception& ex) {
        r.error("experiment.family", ex.what());
    }
    r.count("experiment.candidates", e.candidates);
    if (e.candidates < 1)
        r.error("experiment.candidates", "must be at least 1");
    r.string("experiment.control", e.control);
    if (e.control != "argmin" && e.control != "follow" && e.control != "constant")
        r.error("experiment.control", "expected argmin, follow or constant");
    r.point("experiment.constant_action", e.constant_action);
    r.point("experiment.suboptimal", e.suboptimal);
    if (oracle_ok) {
        if (!oracle.admits(e.suboptimal))
            r.error("experiment.suboptimal", "action not admissible");
        if (e.control == "constant" && !oracle.admits(e.constant_action))
            r.error("experiment.constant_action", "action not admissible");
    }
    r.string("experiment.expect", e.expect);
    if (e.expect != "converge" && e.expect != "gap")
        r.error("experiment.expect", "expected converge or gap");
    r.number("experiment.required_gap", e.required_gap);
    r.number("experiment.probe_s", e.probe_s);
    if (e.probe_s < 0.0 || e.probe_s >= c.time.T)
        r.error("experiment.probe_s", "must lie in [0, T)");
    r.point("experiment.probe_x", e.probe_x);
    r.number("experiment.contamination_tolerance", e.contamination_tolerance);
    if (!(e.contamination_tolerance > 0.0))
        r.error("experiment.contamination_tolerance", "must be positive");
    r.flag("experiment.mc_cross_check", e.mc_cross_check);
    if (auto m = r.raw("experiment.expected_mean"); m && *m != "none") {
        double v = 0.0;
        if (!to_double(*m, v))
            r.error("experiment.expected_mean", "expected a number or none");
        else
            e.expected_mean = v;
    }

    if (issues.empty()) {
        try {
            const Grid g = c.grid();
            c.boundary(g).validate(g);
            if (c.mollify.actions == "grid_nodes" || !c.mollify.extent.empty() || !c.mollify.nx.empty() ||
                c.mollify.nt > 0)
                c.mollify_grid();
        } catch (const std::exception& ex) {
            r.error("domain", ex.what());
        }
    }
    if (!issues.empty())
        throw ConfigError(std::move(issues));
    return c;
}

const std::map<std::string, std::string>& builtin_texts()
{
    static const std::map<std::string, std::string> texts{
        {"counterexample", R"([scenario]
name = counterexample
description = Drift switched off only on the null set {x = a}: mollified values stay strictly above V

[domain]
kind = box
dim = 1
extent = -6 6
nx = 241

[time]
T = 1
nt = 512

[actions]
mode = list
list = -1 0 1

[coefficients]
oracle = counterexample
hamiltonian = strict_gap

[solver]
advection = central
boundary = counterexample_value

[mollify]
eps = 0.4 0.2 0.1
actions = grid_nodes
extent = -4 4
nx = 81
nt = 128
boundary = counterexample_lower
mollified_boundary = counterexample_mollified

[mc]
M = 20000
dt_sim = 0.001
seed = 2024
s = 0
x = 0

[experiment]
x_samples = 0:0; 0:1; 0.5:-0.5; 1:0.5
control = follow
suboptimal = 0
expect = gap
required_gap = 0.3
expected_mean = 1
)"},
        {"bang_bang", R"([scenario]
name = bang_bang
description = Drift a in {-1, 1} steering toward the origin against a quadratic cost

[domain]
kind = torus
dim = 1
extent = -1 1
nx = 64

[time]
T = 1
nt = 128

[coefficients]
oracle = bang_bang

[mollify]
eps = 0.4 0.2 0.1 0.05

[mc]
M = 10000
dt_sim = 0.001
seed = 11
x = 0.5

[experiment]
t_mid = 0.25 0.5 0.75
N_list = 1 2
family = bang_bang
suboptimal = 1
probe_x = 0.5
)"},
        {"step_drift", R"([scenario]
name = step_drift
description = Controlled drift plus a jump of the uncontrolled drift at x = 0

[domain]
kind = torus
dim = 1
extent = -1 1
nx = 64

[time]
T = 1
nt = 128

[actions]
mode = list
list = -1 1

[coefficients]
oracle = step_drift

[params]
c = 0.5

[mollify]
eps = 0.4 0.2 0.1 0.05

[mc]
M = 10000
dt_sim = 0.001
seed = 12
x = 0.5

[experiment]
suboptimal = 1
probe_x = 0.5
)"},
        {"checkerboard", R"([scenario]
name = checkerboard
description = Drift switching sign on a space-time checkerboard

[domain]
kind = torus
dim = 1
extent = -1 1
nx = 64

[time]
T = 1
nt = 128

[actions]
mode = list
list = -1 1

[coefficients]
oracle = checkerboard

[params]
kx = 1
kt = 2

[mollify]
eps = 0.2 0.1 0.05

[mc]
M = 10000
dt_sim = 0.001
seed = 13
x = 0.5

[experiment]
suboptimal = 1
probe_x = 0.5
)"},
        {"smooth_baseline", R"([scenario]
name = smooth_baseline
description = Single smooth action with a manufactured closed-form solution

[domain]
kind = torus
dim = 1
extent = -1 1
nx = 64

[time]
T = 1
nt = 128

[actions]
mode = list
list = 0

[coefficients]
oracle = smooth_baseline

[mollify]
eps = 0.4 0.2 0.1 0.05

[mc]
M = 10000
dt_sim = 0.001
seed = 14
x = 0.5

[experiment]
suboptimal = 0
probe_x = 0.5
)"},
        {"bang_bang_2d", R"([scenario]
name = bang_bang_2d
description = Unit-vector drifts on the 2-d torus against a quadratic cost

[domain]
kind = torus
dim = 2
extent = -1 1
nx = 32

[time]
T = 1
nt = 64

[coefficients]
oracle = bang_bang

[mollify]
eps = 0.4 0.2 0.1
per_eps = 4

[mc]
M = 10000
dt_sim = 0.001
seed = 15
x = 0.5,0.25

[experiment]
suboptimal = 1,0
probe_x = 0.5,0.25
)"},
        {"countable", R"([scenario]
name = countable
description = Truncations A^N of the dyadic family for the step drift

[domain]
kind = torus
dim = 1
extent = -1 1
nx = 64

[time]
T = 1
nt = 128

[actions]
mode = family
family = dyadic
N = 8

[coefficients]
oracle = step_drift

[params]
c = 0.5

[mollify]
eps = 0.4 0.2 0.1

[mc]
M = 2000
dt_sim = 0.01
seed = 5
x = 0.1

[experiment]
N_list = 1 2 4 8
family = dyadic
suboptimal = 1
probe_x = 0.1
)"},
    };
    return texts;
}

}  // namespace

const std::vector<std::string>& builtin_scenarios()
{
    static const std::vector<std::string> names{"counterexample", "bang_bang",    "step_drift", "checkerboard",
                                                "smooth_baseline", "bang_bang_2d", "countable"};
    return names;
}

const std::string& builtin_scenario_text(const std::string& name)
{
    const auto it = builtin_texts().find(name);
    if (it == builtin_texts().end())
        throw std::invalid_argument("unknown scenario '" + name + "'");
    return it->second;
}

ScenarioConfig parse_config(const std::string& text, const std::string& origin)
{
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError({origin + ":" + std::to_string(e.line()) + ":" + column_hint(text, e.line()) + ": " +
                           e.message()});
    }
    const auto dir = std::filesystem::path(origin).parent_path();
    return parse_tree(tree, origin, dir.empty() ? std::filesystem::current_path() : dir);
}

ScenarioConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError({path + ": cannot read file"});
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path);
}

ScenarioConfig resolve_config(const std::string& path_or_name)
{
    if (std::filesystem::exists(path_or_name))
        return load_config(path_or_name);
    if (builtin_texts().count(path_or_name)) {
        ScenarioConfig c = parse_config(builtin_scenario_text(path_or_name), "builtin:" + path_or_name);
        return c;
    }
    throw ConfigError({path_or_name + ": no such file or built-in scenario"});
}

// ---------------------------------------------------------------------------

Grid ScenarioConfig::grid() const
{
    return Grid::build(domain.kind, domain.dim, domain.extent, domain.nx, time.T, time.nt);
}

Grid ScenarioConfig::mollify_grid() const
{
    return Grid::build(domain.kind, domain.dim, mollify.extent.empty() ? domain.extent : mollify.extent,
                       mollify.nx.empty() ? domain.nx : mollify.nx, time.T, mollify.nt ? mollify.nt : time.nt);
}

CoefficientOracle ScenarioConfig::oracle() const
{
    return make_oracle(coefficients.oracle, coefficients.params, {domain.dim, time.T});
}

ActionSet ScenarioConfig::action_set(const Grid& g) const
{
    if (actions.mode == "list")
        return ActionSet(actions.list, domain.dim);
    if (actions.mode == "family")
        return enumerate_family(actions.family, actions.N);
    if (actions.mode == "grid_nodes")
        return grid_node_actions(g);
    return oracle().default_actions();
}

ActionTable ScenarioConfig::action_table(const Grid& g) const
{
    if (coefficients.hamiltonian == "strict_gap") {
        const CoefficientOracle flat = make_oracle("constant_drift", {{"c", "0"}, {"q", "1"}}, {1, time.T});
        return ActionTable::sample(flat, flat.default_actions(), g);
    }
    return ActionTable::sample(oracle(), action_set(g), g);
}

HjbOptions ScenarioConfig::hjb_options() const
{
    HjbOptions o;
    o.scheme.time_stepping = solver.time_stepping;
    o.scheme.advection = solver.advection;
    o.tol = solver.tol;
    o.max_iters = solver.max_iters;
    o.slack_delta = solver.slack_delta;
    o.C_monotone = solver.C_monotone;
    o.inner_sweeps = solver.inner_sweeps;
    return o;
}

BoundaryCondition ScenarioConfig::boundary_named(const std::string& name, const Grid& g) const
{
    if (name == "periodic")
        return BoundaryCondition::periodic();
    if (name == "natural")
        return BoundaryCondition::natural(g);
    return named_boundary(name, time.T);
}

BoundaryCondition ScenarioConfig::boundary(const Grid& g) const
{
    return boundary_named(solver.boundary, g);
}

SimConfig ScenarioConfig::sim(const Grid& g) const
{
    SimConfig s;
    s.paths = mc.M;
    s.dt_sim = mc.dt_sim;
    s.seed = mc.seed;
    s.s = mc.s;
    s.x = mc.x;
    s.domain = g;
    return s;
}

std::string ScenarioConfig::to_ini() const
{
    const int d = domain.dim;
    std::ostringstream os;
    os << "[scenario]\nname = " << name << "\ndescription = " << description << "\n\n";
    os << "[domain]\nkind = " << (domain.kind == DomainKind::torus ? "torus" : "box") << "\ndim = " << d
       << "\nextent = " << extent_text(domain.extent) << "\nnx = " << join_counts(domain.nx) << "\n\n";
    os << "[time]\nT = " << format_double(time.T) << "\nnt = " << time.nt << "\n\n";
    os << "[actions]\nmode = " << actions.mode << "\nlist = " << actions_text(actions.list, d)
       << "\nfamily = " << actions.family << "\nN = " << actions.N << "\n\n";
    os << "[coefficients]\noracle = " << coefficients.oracle << "\nhamiltonian = " << coefficients.hamiltonian
       << "\n\n";
    os << "[params]\n";
    ParamMap full;
    for (const auto& entry : catalog())
        if (entry.name == coefficients.oracle)
            full = entry.defaults;
    for (const auto& [k, v] : coefficients.params)
        full[k] = v;
    for (const auto& [k, v] : full)
        os << k << " = " << v << "\n";
    os << "\n[solver]\ntime_stepping = " << to_string(solver.time_stepping)
       << "\nadvection = " << to_string(solver.advection) << "\ntol = " << format_double(solver.tol)
       << "\nmax_iters = " << solver.max_iters << "\nslack_delta = " << format_double(solver.slack_delta)
       << "\nC = " << (solver.C_monotone ? format_double(*solver.C_monotone) : std::string("auto"))
       << "\ninner_sweeps = " << solver.inner_sweeps << "\nboundary = " << solver.boundary << "\n\n";
    os << "[mollify]\neps = " << join_numbers(mollify.eps) << "\nkernel = " << mollify.kernel
       << "\nper_eps = " << mollify.per_eps << "\nboundary = " << mollify.boundary
       << "\nmollified_boundary = " << mollify.mollified_boundary << "\nactions = " << mollify.actions
       << "\nextent = " << extent_text(mollify.extent) << "\nnx = " << join_counts(mollify.nx)
       << "\nnt = " << mollify.nt << "\n\n";
    os << "[mc]\nM = " << mc.M << "\ndt_sim = " << format_double(mc.dt_sim) << "\nseed = " << mc.seed
       << "\ns = " << format_double(mc.s) << "\nx = " << point_text(mc.x, d) << "\n\n";
    const auto& e = experiment;
    std::string samples;
    for (std::size_t i = 0; i < e.samples.size(); ++i)
        samples += (i ? "; " : "") + format_double(e.samples[i].first) + ":" + format_double(e.samples[i].second);
    os << "[experiment]\nt_mid = " << join_numbers(e.t_mid) << "\nx_samples = " << samples
       << "\nN_list = " << join_counts(e.N_list) << "\nfamily = " << e.family << "\ncandidates = " << e.candidates
       << "\ncontrol = " << e.control << "\nconstant_action = " << point_text(e.constant_action, d)
       << "\nsuboptimal = " << point_text(e.suboptimal, d) << "\nexpect = " << e.expect
       << "\nrequired_gap = " << format_double(e.required_gap) << "\nprobe_s = " << format_double(e.probe_s)
       << "\nprobe_x = " << point_text(e.probe_x, d)
       << "\ncontamination_tolerance = " << format_double(e.contamination_tolerance)
       << "\nmc_cross_check = " << (e.mc_cross_check ? "true" : "false")
       << "\nexpected_mean = " << (e.expected_mean ? format_double(*e.expected_mean) : std::string("none")) << "\n";
    return os.str();
}

nlohmann::json ScenarioConfig::to_json() const
{
    pt::ptree tree;
    std::istringstream is(to_ini());
    pt::read_ini(is, tree);
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [section, body] : tree) {
        nlohmann::json s = nlohmann::json::object();
        for (const auto& kv : body)
            s[kv.first] = kv.second.data();
        j[section] = s;
    }
    return j;
}

std::uint64_t ScenarioConfig::hash() const
{
    return fnv1a(to_ini());
}

}  // namespace hjblab
