#include "fhr/panel_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace fhr {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& s, const std::string& source, std::size_t line, const std::string& col) {
    if (s.empty()) throw ParseError(source, line, "empty field '" + col + "'");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
        throw ParseError(source, line, "field '" + col + "' is not a finite number: '" + s + "'");
    return v;
}

void put(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

}  // namespace

std::string panel_csv_header(int T, bool with_latent) {
    std::string h = "unit,y0";
    for (int t = 1; t <= T; ++t) h += ",x" + std::to_string(t) + ",y" + std::to_string(t);
    if (with_latent) h += ",v";
    return h;
}

void write_panel_csv(std::ostream& os, const Panel& panel, bool with_latent) {
    if (panel.dx != 1) throw DomainError("write_panel_csv: the CSV schema has a scalar covariate");
    os << panel_csv_header(panel.T, with_latent) << '\n';
    std::string row;
    for (std::size_t i = 0; i < panel.size(); ++i) {
        row = std::to_string(i);
        row += ',';
        put(row, panel.y0[i]);
        for (int t = 0; t < panel.T; ++t) {
            row += ',';
            put(row, panel.x[i * panel.T + t]);
            row += ',';
            put(row, panel.y[i * panel.T + t]);
        }
        if (with_latent) {
            row += ',';
            put(row, panel.v[i]);
        }
        row += '\n';
        os << row;
    }
}

void write_panel_csv(const std::string& path, const Panel& panel, bool with_latent) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_panel_csv(os, panel, with_latent);
    os.flush();
    if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

Panel read_panel_csv(std::istream& is, const std::string& source) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError(source, 1, "missing header");
    const std::vector<std::string> head = split(line);
    const int ncol = static_cast<int>(head.size());
    bool with_latent = !head.empty() && head.back() == "v";
    const int T = (ncol - 2 - (with_latent ? 1 : 0)) / 2;
    if (T < 2 || line != panel_csv_header(T, with_latent))
        throw ParseError(source, 1, "header must be " + panel_csv_header(2, false) + "[,v] (got '" + line + "')");
    Panel panel(T, 1);
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> f = split(line);
        if (static_cast<int>(f.size()) != ncol)
            throw ParseError(source, lineno,
                             "expected " + std::to_string(ncol) + " fields, got " + std::to_string(f.size()));
        const double unit = parse_number(f[0], source, lineno, "unit");
        if (unit != std::floor(unit) || unit < 0) throw ParseError(source, lineno, "unit must be a non-negative integer");
        PanelPath p;
        p.dx = 1;
        p.y0 = parse_number(f[1], source, lineno, "y0");
        p.y.resize(T);
        p.x.resize(T);
        for (int t = 0; t < T; ++t) {
            p.x[t] = parse_number(f[2 + 2 * t], source, lineno, head[2 + 2 * t]);
            p.y[t] = parse_number(f[3 + 2 * t], source, lineno, head[3 + 2 * t]);
        }
        p.v = with_latent ? parse_number(f.back(), source, lineno, "v") : std::numeric_limits<double>::quiet_NaN();
        if (!(p.y0 > 0.0)) throw ParseError(source, lineno, "durations must be positive");
        for (double y : p.y)
            if (!(y > 0.0)) throw ParseError(source, lineno, "durations must be positive");
        panel.push_back(p);
    }
    if (panel.size() == 0) throw ParseError(source, lineno, "no data rows");
    return panel;
}

Panel read_panel_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "' for reading");
    return read_panel_csv(is, path);
}

}  // namespace fhr
