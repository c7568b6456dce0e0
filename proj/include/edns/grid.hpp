#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "edns/error.hpp"

namespace edns {

using Vec3 = std::array<double, 3>;
using Complex = std::complex<double>;
using CVec3 = std::array<Complex, 3>;

enum class Axis { x1 = 0, x2 = 1, x3 = 2 };

/// Periodic collocation grid on [0, L)^3 with n points per axis.
///
/// Frequencies are xi = k * 2*pi/L with integer k. Lattice storage is
/// row-major over (i1, i2, i3), x3 fastest; index i maps to k = i for
/// i < n/2 and k = i - n otherwise, so k ranges over [-n/2, n/2).
struct GridSpec {
    std::size_t n_per_axis = 16;
    double box_length = 2.0 * std::numbers::pi;
    double friedrich_radius = 0.0;

    /// Grid with the Friedrich radius at the 2/3 dealiasing cutoff.
    static GridSpec make(std::size_t n, double box_length = 2.0 * std::numbers::pi) {
        GridSpec g{n, box_length, 0.0};
        g.friedrich_radius = g.max_friedrich_radius();
        return g;
    }

    [[nodiscard]] double frequency_unit() const { return 2.0 * std::numbers::pi / box_length; }
    [[nodiscard]] double max_friedrich_radius() const {
        return static_cast<double>(n_per_axis) / 3.0 * frequency_unit();
    }
    [[nodiscard]] double spacing() const { return box_length / static_cast<double>(n_per_axis); }
    [[nodiscard]] double cell_volume() const { return spacing() * spacing() * spacing(); }
    [[nodiscard]] double volume() const { return box_length * box_length * box_length; }
    [[nodiscard]] std::size_t points() const { return n_per_axis * n_per_axis * n_per_axis; }

    void validate() const {
        const std::size_t n = n_per_axis;
        if (n < 4 || (n & (n - 1)) != 0)
            throw InvalidArgument("grid.n must be a power of two >= 4");
        if (!(box_length > 0.0) || !std::isfinite(box_length))
            throw InvalidArgument("grid.L must be positive");
        if (!(friedrich_radius > 0.0))
            throw InvalidArgument("grid.R must be positive");
        if (friedrich_radius > max_friedrich_radius() * (1.0 + 1e-14))
            throw InvalidArgument("grid.R exceeds the dealiased band n/3 * 2*pi/L");
    }

    [[nodiscard]] int wavenumber(std::size_t i) const {
        const auto n = static_cast<long>(n_per_axis);
        const auto ii = static_cast<long>(i);
        return static_cast<int>(ii < n / 2 ? ii : ii - n);
    }
    [[nodiscard]] std::size_t slot(int k) const {
        const auto n = static_cast<long>(n_per_axis);
        return static_cast<std::size_t>(k >= 0 ? k : k + n);
    }
    [[nodiscard]] std::size_t linear(std::size_t i1, std::size_t i2, std::size_t i3) const {
        return (i1 * n_per_axis + i2) * n_per_axis + i3;
    }
    [[nodiscard]] std::size_t linear_k(int k1, int k2, int k3) const {
        return linear(slot(k1), slot(k2), slot(k3));
    }
    [[nodiscard]] int nyquist() const { return -static_cast<int>(n_per_axis / 2); }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Integer lattice point and its physical frequency.
struct WaveVector {
    std::array<int, 3> k{};
    Vec3 xi{};

    [[nodiscard]] double xi_3() const { return xi[2]; }
    [[nodiscard]] std::array<double, 2> xi_h() const { return {xi[0], xi[1]}; }
    [[nodiscard]] double norm_sq() const { return xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]; }
    [[nodiscard]] double horizontal_sq() const { return xi[0] * xi[0] + xi[1] * xi[1]; }
};

inline WaveVector wave_at(const GridSpec& g, std::size_t linear_index) {
    const std::size_t n = g.n_per_axis;
    const std::size_t i3 = linear_index % n;
    const std::size_t i2 = (linear_index / n) % n;
    const std::size_t i1 = linear_index / (n * n);
    WaveVector w;
    w.k = {g.wavenumber(i1), g.wavenumber(i2), g.wavenumber(i3)};
    const double unit = g.frequency_unit();
    for (int a = 0; a < 3; ++a) w.xi[a] = unit * w.k[a];
    return w;
}

inline void require_same_grid(const GridSpec& a, const GridSpec& b) {
    if (!(a == b)) throw DimensionMismatch("fields live on different grids");
}

/// Vector field sampled at collocation points x = (i1, i2, i3) * L/n.
struct PhysicalField {
    GridSpec grid;
    std::vector<Vec3> values;

    PhysicalField() = default;
    explicit PhysicalField(const GridSpec& g) : grid(g), values(g.points(), Vec3{0.0, 0.0, 0.0}) {}

    [[nodiscard]] Vec3 position(std::size_t linear_index) const {
        const std::size_t n = grid.n_per_axis;
        const double h = grid.spacing();
        return {h * static_cast<double>(linear_index / (n * n)),
                h * static_cast<double>((linear_index / n) % n),
                h * static_cast<double>(linear_index % n)};
    }
    [[nodiscard]] bool all_finite() const {
        for (const auto& v : values)
            for (double c : v)
                if (!std::isfinite(c)) return false;
        return true;
    }
};

/// Fourier coefficients on the full integer lattice. The hermitian flag marks
/// coefficients of a real field: c(-k) = conj(c(k)).
template <class Coefficient>
struct BasicSpectralField {
    GridSpec grid;
    std::vector<Coefficient> coeffs;
    bool hermitian = true;

    BasicSpectralField() = default;
    explicit BasicSpectralField(const GridSpec& g, bool hermitian_flag = true)
        : grid(g), coeffs(g.points(), Coefficient{}), hermitian(hermitian_flag) {}

    [[nodiscard]] Coefficient& at(int k1, int k2, int k3) { return coeffs[grid.linear_k(k1, k2, k3)]; }
    [[nodiscard]] const Coefficient& at(int k1, int k2, int k3) const {
        return coeffs[grid.linear_k(k1, k2, k3)];
    }
};

using SpectralField = BasicSpectralField<CVec3>;
using ScalarSpectralField = BasicSpectralField<Complex>;

inline CVec3& operator+=(CVec3& a, const CVec3& b) {
    for (int c = 0; c < 3; ++c) a[c] += b[c];
    return a;
}
inline CVec3& operator-=(CVec3& a, const CVec3& b) {
    for (int c = 0; c < 3; ++c) a[c] -= b[c];
    return a;
}
inline CVec3 operator*(Complex s, const CVec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double norm_sq(const CVec3& a) { return std::norm(a[0]) + std::norm(a[1]) + std::norm(a[2]); }
inline double norm_sq(const Vec3& a) { return a[0] * a[0] + a[1] * a[1] + a[2] * a[2]; }

/// a + s*b, elementwise over the lattice.
inline SpectralField axpy(const SpectralField& a, double s, const SpectralField& b) {
    require_same_grid(a.grid, b.grid);
    SpectralField out = a;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] += Complex(s) * b.coeffs[i];
    out.hermitian = a.hermitian && b.hermitian;
    return out;
}

inline SpectralField scaled(const SpectralField& a, double s) {
    SpectralField out = a;
    for (auto& c : out.coeffs) c = Complex(s) * c;
    return out;
}

}  // namespace edns
