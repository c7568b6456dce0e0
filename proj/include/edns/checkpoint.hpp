#pragma once

// Checkpoint layout (all multi-byte values little-endian):
//   "EDNS" | version:u8 = 1 | n:u64 | L:f64 | R:f64 | t:f64 |
//   for k1, k2, k3 in [-n/2, n/2) lexicographically, k3 fastest:
//     for component 0..2: re:f64, im:f64

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "edns/ledger_record.hpp"

namespace edns {

inline constexpr char kCheckpointMagic[4] = {'E', 'D', 'N', 'S'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

namespace detail {
template <class T>
void put_le(std::ostream& os, T value) {
    static_assert(sizeof(T) == 8);
    auto bits = std::bit_cast<std::uint64_t>(value);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    os.write(reinterpret_cast<const char*>(bytes), 8);
}

template <class T>
T get_le(std::istream& is) {
    static_assert(sizeof(T) == 8);
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw FormatError("checkpoint truncated");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    return std::bit_cast<T>(bits);
}

template <class Visit>
void for_each_lexicographic(const GridSpec& g, Visit&& visit) {
    const int half = static_cast<int>(g.n_per_axis / 2);
    for (int k1 = -half; k1 < half; ++k1)
        for (int k2 = -half; k2 < half; ++k2)
            for (int k3 = -half; k3 < half; ++k3) visit(g.linear_k(k1, k2, k3));
}
}  // namespace detail

inline void write_checkpoint(std::ostream& os, const SimulationState& state) {
    const GridSpec& g = state.u_hat.grid;
    os.write(kCheckpointMagic, 4);
    os.put(static_cast<char>(kCheckpointVersion));
    detail::put_le<std::uint64_t>(os, g.n_per_axis);
    detail::put_le<double>(os, g.box_length);
    detail::put_le<double>(os, g.friedrich_radius);
    detail::put_le<double>(os, state.t);
    detail::for_each_lexicographic(g, [&](std::size_t i) {
        for (const Complex& z : state.u_hat.coeffs[i]) {
            detail::put_le<double>(os, z.real());
            detail::put_le<double>(os, z.imag());
        }
    });
    if (!os) throw FormatError("failed to write checkpoint");
}

/// Restores t and the coefficients; step_index restarts at 0.
inline SimulationState read_checkpoint(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw FormatError("not an EDNS checkpoint");
    const int version = is.get();
    if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    GridSpec g;
    const auto n = detail::get_le<std::uint64_t>(is);
    if (n < 4 || n > 4096) throw FormatError("implausible grid size in checkpoint");
    g.n_per_axis = static_cast<std::size_t>(n);
    g.box_length = detail::get_le<double>(is);
    g.friedrich_radius = detail::get_le<double>(is);
    try {
        g.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("checkpoint grid invalid: ") + e.what());
    }
    SimulationState state;
    state.t = detail::get_le<double>(is);
    state.u_hat = SpectralField(g, true);
    detail::for_each_lexicographic(g, [&](std::size_t i) {
        for (Complex& z : state.u_hat.coeffs[i]) {
            const double re = detail::get_le<double>(is);
            const double im = detail::get_le<double>(is);
            z = Complex(re, im);
        }
    });
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint payload");
    return state;
}

inline void save_checkpoint(const std::string& path, const SimulationState& state) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    write_checkpoint(os, state);
}

inline SimulationState load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path);
    return read_checkpoint(is);
}

}  // namespace edns
