#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chns/grid.hpp"

namespace chns {

/// Full-precision float formatting shared by every CSV/report writer.
inline std::string csv_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct SnapshotHeader {
    std::string field;
    int nx = 0;
    int ny = 0;
    double time = 0.0;
};

/// Snapshot layout: a 32-byte text header "CHNS1 <field> <nx> <ny> <time>"
/// (space padded, newline terminated) followed by little-endian doubles in
/// row-major order.  Face fields carry the grid dims; their length is
/// implied by the field name (u1: (nx+1)*ny, u2: nx*(ny+1)).
inline void write_snapshot(const std::string& path, const std::string& field, const Grid& g,
                           const std::vector<double>& values, double time) {
    char header[33];
    int prec = 12;
    int len = 0;
    do {
        len = std::snprintf(header, sizeof header, "CHNS1 %s %d %d %.*g", field.c_str(), g.nx,
                            g.ny, prec, time);
        --prec;
    } while (len > 31 && prec >= 3);
    if (len < 0 || len > 31)
        throw std::runtime_error("write_snapshot: header does not fit 32 bytes");
    for (int k = len; k < 31; ++k) header[k] = ' ';
    header[31] = '\n';

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
    out.write(header, 32);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write_snapshot: write failed for " + path);
}

inline void read_snapshot(const std::string& path, SnapshotHeader& hdr,
                          std::vector<double>& values) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
    char header[33] = {};
    in.read(header, 32);
    if (!in || header[31] != '\n')
        throw std::runtime_error("read_snapshot: bad header in " + path);
    header[32] = '\0';
    char magic[8] = {}, field[16] = {};
    double t = 0.0;
    int nx = 0, ny = 0;
    if (std::sscanf(header, "%7s %15s %d %d %lf", magic, field, &nx, &ny, &t) != 5 ||
        std::strcmp(magic, "CHNS1") != 0)
        throw std::runtime_error("read_snapshot: bad header in " + path);
    hdr.field = field;
    hdr.nx = nx;
    hdr.ny = ny;
    hdr.time = t;

    std::size_t count = static_cast<std::size_t>(nx) * ny;
    if (hdr.field == "u1") count = static_cast<std::size_t>(nx + 1) * ny;
    if (hdr.field == "u2") count = static_cast<std::size_t>(nx) * (ny + 1);
    values.resize(count);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("read_snapshot: truncated payload in " + path);
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

} // namespace chns
