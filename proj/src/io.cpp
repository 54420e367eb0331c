#include "hjblab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace hjblab {

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_field_csv(std::ostream& out, const Field& field)
{
    const Grid& g = field.grid();
    out << "t,x";
    if (g.dim() > 1)
        out << ",y";
    if (field.arity() == 1) {
        out << ",value\n";
    } else {
        for (std::size_t c = 0; c < field.arity(); ++c)
            out << ",value_" << c;
        out << '\n';
    }
    for (std::size_t n = 0; n < g.time_points(); ++n) {
        const std::string t = format_double(g.time(n));
        for (std::size_t node = 0; node < g.space_points(); ++node) {
            const Point x = g.point(node);
            out << t << ',' << format_double(x[0]);
            if (g.dim() > 1)
                out << ',' << format_double(x[1]);
            for (std::size_t c = 0; c < field.arity(); ++c)
                out << ',' << format_double(field.at(n, node, c));
            out << '\n';
        }
    }
}

void write_field_csv(const std::string& path, const Field& field)
{
    std::ostringstream os;
    write_field_csv(os, field);
    write_text_atomic(path, os.str());
}

namespace {

double parse_number(const std::string& s, const std::string& path, std::size_t line)
{
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ')
        ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\r'))
        --e;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw std::runtime_error(path + ":" + std::to_string(line) + ": not a number: '" + s + "'");
    return v;
}

std::vector<double> unique_sorted(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

Interval axis_extent(const std::vector<double>& coords, DomainKind kind, const std::string& path)
{
    if (coords.size() < 2)
        throw std::runtime_error(path + ": need at least two nodes per axis");
    if (kind == DomainKind::box)
        return {coords.front(), coords.back()};
    const double dx = (coords.back() - coords.front()) / static_cast<double>(coords.size() - 1);
    const double lo = coords.front() - 0.5 * dx;
    return {lo, lo + dx * static_cast<double>(coords.size())};
}

std::size_t locate(const std::vector<double>& sorted, double v)
{
    auto it = std::lower_bound(sorted.begin(), sorted.end(), v);
    return static_cast<std::size_t>(it - sorted.begin());
}

}  // namespace

Field read_field_csv(const std::string& path, DomainKind kind)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open field file: " + path);
    std::string header;
    if (!std::getline(in, header))
        throw std::runtime_error(path + ": empty file");
    if (!header.empty() && header.back() == '\r')
        header.pop_back();
    int dim;
    if (header == "t,x,value")
        dim = 1;
    else if (header == "t,x,y,value")
        dim = 2;
    else
        throw std::runtime_error(path + ":1: expected header t,x,value or t,x,y,value");

    struct Row {
        double t, x, y, v;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (cells.size() != static_cast<std::size_t>(dim + 2))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong column count");
        Row r{};
        r.t = parse_number(cells[0], path, lineno);
        r.x = parse_number(cells[1], path, lineno);
        r.y = dim > 1 ? parse_number(cells[2], path, lineno) : 0.0;
        r.v = parse_number(cells.back(), path, lineno);
        rows.push_back(r);
    }
    std::vector<double> ts, xs, ys;
    for (const Row& r : rows) {
        ts.push_back(r.t);
        xs.push_back(r.x);
        ys.push_back(r.y);
    }
    ts = unique_sorted(ts);
    xs = unique_sorted(xs);
    ys = unique_sorted(ys);
    if (ts.size() < 2)
        throw std::runtime_error(path + ": need at least two time levels");
    std::vector<Interval> extent{axis_extent(xs, kind, path)};
    std::vector<std::size_t> nx{xs.size()};
    if (dim > 1) {
        extent.push_back(axis_extent(ys, kind, path));
        nx.push_back(ys.size());
    }
    const Grid g = Grid::build(kind, dim, extent, nx, ts.back() - ts.front(), ts.size() - 1);
    if (rows.size() != g.node_count())
        throw std::runtime_error(path + ": rows do not form a full tensor grid");
    Field f(g);
    for (const Row& r : rows) {
        const std::size_t n = locate(ts, r.t);
        const std::size_t i = locate(xs, r.x);
        const std::size_t j = dim > 1 ? locate(ys, r.y) : 0;
        f.at(n, g.node_index(i, j)) = r.v;
    }
    return f;
}

nlohmann::json field_to_json(const Field& field)
{
    const Grid& g = field.grid();
    nlohmann::json j;
    j["kind"] = g.is_torus() ? "torus" : "box";
    j["dim"] = g.dim();
    j["T"] = g.T();
    j["nt"] = g.nt();
    j["arity"] = field.arity();
    nlohmann::json axes = nlohmann::json::array();
    for (int a = 0; a < g.dim(); ++a)
        axes.push_back({{"lo", g.axis(a).extent.lo}, {"hi", g.axis(a).extent.hi}, {"n", g.nx(a)}});
    j["axes"] = axes;
    nlohmann::json levels = nlohmann::json::array();
    for (std::size_t n = 0; n < g.time_points(); ++n) {
        auto lv = field.level(n);
        levels.push_back(std::vector<double>(lv.begin(), lv.end()));
    }
    j["values"] = std::move(levels);
    return j;
}

Field field_from_json(const nlohmann::json& j)
{
    const DomainKind kind = j.at("kind").get<std::string>() == "torus" ? DomainKind::torus : DomainKind::box;
    std::vector<Interval> extent;
    std::vector<std::size_t> nx;
    for (const auto& ax : j.at("axes")) {
        extent.push_back({ax.at("lo").get<double>(), ax.at("hi").get<double>()});
        nx.push_back(ax.at("n").get<std::size_t>());
    }
    const Grid g = Grid::build(kind, j.at("dim").get<int>(), extent, nx, j.at("T").get<double>(),
                               j.at("nt").get<std::size_t>());
    Field f(g, j.at("arity").get<std::size_t>());
    const auto& levels = j.at("values");
    if (levels.size() != g.time_points())
        throw std::runtime_error("field json: wrong level count");
    for (std::size_t n = 0; n < g.time_points(); ++n) {
        const auto v = levels[n].get<std::vector<double>>();
        auto dst = f.level(n);
        if (v.size() != dst.size())
            throw std::runtime_error("field json: wrong level size");
        std::copy(v.begin(), v.end(), dst.begin());
    }
    return f;
}

void write_text_atomic(const std::string& path, const std::string& text)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out << text;
        if (!out)
            throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

}  // namespace hjblab
