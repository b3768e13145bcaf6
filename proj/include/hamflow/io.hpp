#pragma once

// Binary snapshot formats (exact layout documented in the README):
// all integers and floats little-endian, doubles IEEE-754 binary64,
// complex numbers stored as (real, imag) double pairs.
//
//   field:    "HFS1" | u32 dim | u32 modes | u32 components | f64 length
//             | coefficient block (components * modes^dim complex)
//   ensemble: "HES1" | grid header as above | u64 count | f64 timestamp
//             | count f64 weights | count coefficient blocks
//   paths:    "HPA1" | grid header | u64 entries | u64 nodes
//             | nodes f64 times | entries f64 weights
//             | entries * nodes coefficient blocks (entry-major)

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "measure.hpp"
#include "pathspace.hpp"

namespace hamflow {
namespace io_detail {

static_assert(sizeof(double) == 8, "IEEE-754 binary64 layout required");

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (unsigned char)(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (unsigned char)(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    put_u64(os, u);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

inline std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

inline double get_f64(std::istream& is) {
    const std::uint64_t u = get_u64(is);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

inline void put_magic(std::ostream& os, const char* m) { os.write(m, 4); }

inline void check_magic(std::istream& is, const char* m, const char* what) {
    char b[4];
    is.read(b, 4);
    if (!is || std::memcmp(b, m, 4) != 0)
        throw std::runtime_error(std::string(what) + ": bad magic");
}

inline void put_grid(std::ostream& os, const Grid& g, int components) {
    put_u32(os, std::uint32_t(g.dimension));
    put_u32(os, std::uint32_t(g.modes));
    put_u32(os, std::uint32_t(components));
    put_f64(os, g.length);
}

inline std::pair<Grid, int> get_grid(std::istream& is) {
    const std::uint32_t dim = get_u32(is);
    const std::uint32_t modes = get_u32(is);
    const std::uint32_t comps = get_u32(is);
    const double length = get_f64(is);
    return {Grid(int(dim), int(modes), length), int(comps)};
}

inline void put_coeffs(std::ostream& os, const SpectralField& z) {
    for (const auto& c : z.coeffs) {
        put_f64(os, c.real());
        put_f64(os, c.imag());
    }
}

inline void get_coeffs(std::istream& is, SpectralField& z) {
    for (auto& c : z.coeffs) {
        const double re = get_f64(is);
        const double im = get_f64(is);
        c = cd(re, im);
    }
}

} // namespace io_detail

inline void write_field(const std::string& path, const SpectralField& z) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_field: cannot open " + path);
    io_detail::put_magic(os, "HFS1");
    io_detail::put_grid(os, z.grid, z.components);
    io_detail::put_coeffs(os, z);
    if (!os) throw std::runtime_error("write_field: write failed for " + path);
}

inline SpectralField read_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_field: cannot open " + path);
    io_detail::check_magic(is, "HFS1", "read_field");
    auto [grid, comps] = io_detail::get_grid(is);
    SpectralField z(grid, comps);
    io_detail::get_coeffs(is, z);
    if (!is) throw std::runtime_error("read_field: truncated file " + path);
    return z;
}

inline void write_ensemble(const std::string& path, const EnsembleMeasure& mu) {
    mu.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_ensemble: cannot open " + path);
    io_detail::put_magic(os, "HES1");
    io_detail::put_grid(os, mu.particles.front().grid, mu.particles.front().components);
    io_detail::put_u64(os, mu.size());
    io_detail::put_f64(os, mu.timestamp);
    for (double w : mu.weights) io_detail::put_f64(os, w);
    for (const auto& p : mu.particles) io_detail::put_coeffs(os, p);
    if (!os) throw std::runtime_error("write_ensemble: write failed for " + path);
}

inline EnsembleMeasure read_ensemble(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_ensemble: cannot open " + path);
    io_detail::check_magic(is, "HES1", "read_ensemble");
    auto [grid, comps] = io_detail::get_grid(is);
    const std::uint64_t n = io_detail::get_u64(is);
    EnsembleMeasure mu;
    mu.timestamp = io_detail::get_f64(is);
    mu.weights.resize(n);
    for (auto& w : mu.weights) w = io_detail::get_f64(is);
    mu.particles.assign(n, SpectralField(grid, comps));
    for (auto& p : mu.particles) io_detail::get_coeffs(is, p);
    if (!is) throw std::runtime_error("read_ensemble: truncated file " + path);
    mu.validate();
    return mu;
}

inline void write_paths(const std::string& path, const PathEnsemble& pe) {
    pe.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_paths: cannot open " + path);
    const auto& first = pe.entries.front();
    io_detail::put_magic(os, "HPA1");
    io_detail::put_grid(os, first.states.front().grid, first.states.front().components);
    io_detail::put_u64(os, pe.size());
    io_detail::put_u64(os, first.nodes());
    for (double t : first.times) io_detail::put_f64(os, t);
    for (double w : pe.weights) io_detail::put_f64(os, w);
    for (const auto& tr : pe.entries) {
        if (tr.nodes() != first.nodes())
            throw std::invalid_argument("write_paths: ragged path ensemble");
        for (const auto& st : tr.states) io_detail::put_coeffs(os, st);
    }
    if (!os) throw std::runtime_error("write_paths: write failed for " + path);
}

inline PathEnsemble read_paths(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_paths: cannot open " + path);
    io_detail::check_magic(is, "HPA1", "read_paths");
    auto [grid, comps] = io_detail::get_grid(is);
    const std::uint64_t entries = io_detail::get_u64(is);
    const std::uint64_t nodes = io_detail::get_u64(is);
    std::vector<double> times(nodes);
    for (auto& t : times) t = io_detail::get_f64(is);
    PathEnsemble pe;
    pe.grid = TimeGrid(times.front(), times.back(), int(nodes - 1));
    pe.weights.resize(entries);
    for (auto& w : pe.weights) w = io_detail::get_f64(is);
    pe.entries.reserve(entries);
    for (std::uint64_t e = 0; e < entries; ++e) {
        Trajectory tr;
        tr.times = times;
        tr.states.assign(nodes, SpectralField(grid, comps));
        for (auto& st : tr.states) io_detail::get_coeffs(is, st);
        pe.entries.push_back(std::move(tr));
    }
    if (!is) throw std::runtime_error("read_paths: truncated file " + path);
    pe.validate();
    return pe;
}

} // namespace hamflow
