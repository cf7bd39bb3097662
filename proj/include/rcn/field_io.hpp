#pragma once

// Plain-text field files: header `rcn-field m n eps L k delta`, then n+1 rows
// of m values (row j = 0 first), written with 17 significant digits so that
// read(write(f)) round-trips bit-exactly.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rcn/grid.hpp"

namespace rcn {

inline void write_field(std::ostream& os, const PhaseField& f) {
    const StripGrid& g = f.grid();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", g.eps);
    os << "rcn-field " << g.m << ' ' << g.n << ' ' << buf;
    std::snprintf(buf, sizeof buf, "%.17g", g.L);
    os << ' ' << buf << ' ' << f.config().k;
    std::snprintf(buf, sizeof buf, "%.17g", f.config().delta);
    os << ' ' << buf << '\n';
    for (int j = 0; j <= g.n; ++j) {
        for (int i = 0; i < g.m; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", f(i, j));
            os << buf << (i + 1 == g.m ? '\n' : ' ');
        }
    }
}

inline void write_field(const std::string& path, const PhaseField& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_field: cannot open " + path);
    write_field(os, f);
}

inline PhaseField read_field(std::istream& is) {
    std::string tag;
    int m = 0, n = 0, k = 0;
    double eps = 0, L = 0, delta = 0;
    if (!(is >> tag >> m >> n >> eps >> L >> k >> delta) || tag != "rcn-field")
        throw std::runtime_error("read_field: malformed header");
    StripGrid g = build_grid(eps, L, m, n);
    PhaseField f(g, BoundaryConfig{k, delta});
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i < m; ++i)
            if (!(is >> f.at(i, j)))
                throw std::runtime_error("read_field: truncated value table");
    return f;
}

inline PhaseField read_field(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_field: cannot open " + path);
    return read_field(is);
}

} // namespace rcn
