#include "obsflow/io.hpp"

#include <cinttypes>
#include <map>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace obsflow {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::map<std::string, std::string> parse_header_line(const std::string& line,
                                                     const std::string& tag) {
    std::map<std::string, std::string> kv;
    std::istringstream is(line);
    std::string tok;
    is >> tok;  // '#'
    is >> tok;
    if (tok != tag) throw std::runtime_error("io: expected a '" + tag + "' file");
    while (is >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

void write_index_header(std::ostream& os, const char* prefix, int m, const char* tail) {
    for (int a = 0; a < m; ++a) os << prefix << a << ",";
    os << tail << "\n";
}

}  // namespace

void write_grid_function(const std::string& path, const GridFunction& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("io: cannot open for writing: " + path);
    const auto& g = f.grid;
    os << "# gridfunction dim=" << g.dim << " half_extent=" << format_double(g.half_extent)
       << " points_per_axis=" << g.points_per_axis << "\n";
    write_index_header(os, "i", g.dim, "re,im");
    for (std::int64_t flat = 0; flat < g.total_cells(); ++flat) {
        auto idx = g.unflatten(flat);
        for (int a = 0; a < g.dim; ++a) os << idx[std::size_t(a)] << ",";
        os << format_double(f[flat].real()) << "," << format_double(f[flat].imag()) << "\n";
    }
}

GridFunction read_grid_function(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("io: cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("io: empty file: " + path);
    auto kv = parse_header_line(line, "gridfunction");
    UniformGrid g = make_uniform_grid(std::stoi(kv.at("dim")), std::stod(kv.at("half_extent")),
                                      std::stoi(kv.at("points_per_axis")));
    GridFunction f(g);
    std::getline(is, line);  // column header
    std::int64_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cols = split_csv(line);
        if (int(cols.size()) != g.dim + 2) throw std::runtime_error("io: bad gridfunction row");
        std::vector<int> idx(static_cast<std::size_t>(g.dim));
        for (int a = 0; a < g.dim; ++a) idx[std::size_t(a)] = std::stoi(cols[std::size_t(a)]);
        f[g.flat_index(idx)] = cplx(std::stod(cols[std::size_t(g.dim)]), std::stod(cols[std::size_t(g.dim) + 1]));
        ++rows;
    }
    if (rows != g.total_cells()) throw std::runtime_error("io: gridfunction row count mismatch");
    return f;
}

void write_indicator_set(const std::string& path, const IndicatorSet& s) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("io: cannot open for writing: " + path);
    const auto& g = s.grid;
    os << "# indicatorset dim=" << g.dim << " half_extent=" << format_double(g.half_extent)
       << " points_per_axis=" << g.points_per_axis << "\n";
    write_index_header(os, "i", g.dim, "mask");
    for (std::int64_t flat = 0; flat < g.total_cells(); ++flat) {
        auto idx = g.unflatten(flat);
        for (int a = 0; a < g.dim; ++a) os << idx[std::size_t(a)] << ",";
        os << (s.mask[std::size_t(flat)] ? 1 : 0) << "\n";
    }
}

IndicatorSet read_indicator_set(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("io: cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("io: empty file: " + path);
    auto kv = parse_header_line(line, "indicatorset");
    UniformGrid g = make_uniform_grid(std::stoi(kv.at("dim")), std::stod(kv.at("half_extent")),
                                      std::stoi(kv.at("points_per_axis")));
    IndicatorSet s(g);
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cols = split_csv(line);
        if (int(cols.size()) != g.dim + 1) throw std::runtime_error("io: bad indicatorset row");
        std::vector<int> idx(static_cast<std::size_t>(g.dim));
        for (int a = 0; a < g.dim; ++a) idx[std::size_t(a)] = std::stoi(cols[std::size_t(a)]);
        s.mask[std::size_t(g.flat_index(idx))] = std::uint8_t(std::stoi(cols[std::size_t(g.dim)]) != 0);
    }
    return s;
}

void write_hermite_expansion(const std::string& path, const HermiteExpansion& c) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("io: cannot open for writing: " + path);
    os << "# hermiteexpansion dim=" << c.dim << " lambda=" << format_double(c.lambda)
       << " cutoff=" << c.cutoff << "\n";
    write_index_header(os, "nu", c.dim, "re,im");
    const auto indices = enumerate_multi_indices(c.dim, c.cutoff);
    for (std::size_t q = 0; q < indices.size(); ++q) {
        for (int a = 0; a < c.dim; ++a) os << indices[q].entries[std::size_t(a)] << ",";
        os << format_double(c.coeffs[q].real()) << "," << format_double(c.coeffs[q].imag()) << "\n";
    }
}

HermiteExpansion read_hermite_expansion(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("io: cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("io: empty file: " + path);
    auto kv = parse_header_line(line, "hermiteexpansion");
    HermiteExpansion c;
    c.dim = std::stoi(kv.at("dim"));
    c.lambda = std::stod(kv.at("lambda"));
    c.cutoff = std::stoi(kv.at("cutoff"));
    const auto indices = enumerate_multi_indices(c.dim, c.cutoff);
    c.coeffs.assign(indices.size(), cplx(0.0));
    std::getline(is, line);
    std::size_t q = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cols = split_csv(line);
        if (int(cols.size()) != c.dim + 2) throw std::runtime_error("io: bad expansion row");
        if (q >= indices.size()) throw std::runtime_error("io: expansion row count mismatch");
        c.coeffs[q] = cplx(std::stod(cols[std::size_t(c.dim)]), std::stod(cols[std::size_t(c.dim) + 1]));
        ++q;
    }
    if (q != indices.size()) throw std::runtime_error("io: expansion row count mismatch");
    return c;
}

}  // namespace obsflow
