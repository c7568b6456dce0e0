#pragma once

// Periodic-box spectral representation.
//
// Transform convention (fixed):
//   forward   c(k) = (L/n)^3 * sum_x f(x) exp(-i xi.x)
//   inverse   f(x) = L^-3    * sum_k c(k) exp(+i xi.x)
// so a constant c maps to c*L^3 at k = 0, and Parseval reads
//   (L/n)^3 * sum_x |f(x)|^2 = L^-3 * sum_k |c(k)|^2.
// Every norm below carries the L^-3 factor so that s = 0 gives the L2 norm.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "edns/grid.hpp"
#include "edns/parallel.hpp"

namespace edns {

namespace detail {

struct FftwFree {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline FftwBuffer make_buffer(std::size_t count) {
    return FftwBuffer(fftw_alloc_complex(count));
}

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

/// In-place 3-D plans, one pair per grid size. Planning is serialized;
/// fftw_execute_dft on distinct buffers is thread-safe.
inline PlanPair plans_for(std::size_t n) {
    static std::mutex lock;
    static std::map<std::size_t, PlanPair> cache;
    std::lock_guard guard(lock);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    const int ni = static_cast<int>(n);
    FftwBuffer scratch = make_buffer(n * n * n);
    PlanPair p;
    p.forward = fftw_plan_dft_3d(ni, ni, ni, scratch.get(), scratch.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_3d(ni, ni, ni, scratch.get(), scratch.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
    cache.emplace(n, p);
    return p;
}

}  // namespace detail

inline SpectralField forward_transform(const PhysicalField& f) {
    const GridSpec& g = f.grid;
    if (f.values.size() != g.points())
        throw DimensionMismatch("physical field size does not match its grid");
    const std::size_t count = g.points();
    const auto plans = detail::plans_for(g.n_per_axis);
    const double weight = g.cell_volume();
    SpectralField out(g, true);
    detail::FftwBuffer buf = detail::make_buffer(count);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < count; ++i) {
            buf[i][0] = f.values[i][c];
            buf[i][1] = 0.0;
        }
        fftw_execute_dft(plans.forward, buf.get(), buf.get());
        for (std::size_t i = 0; i < count; ++i) out.coeffs[i][c] = Complex(buf[i][0], buf[i][1]) * weight;
    }
    return out;
}

/// Largest violation of c(-k) = conj(c(k)), relative to the largest coefficient.
inline double hermitian_defect(const SpectralField& F) {
    const GridSpec& g = F.grid;
    double scale = 0.0;
    for (const auto& c : F.coeffs) scale = std::max(scale, std::sqrt(norm_sq(c)));
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i < F.coeffs.size(); ++i) {
        const WaveVector w = wave_at(g, i);
        // slot(n/2) aliases the Nyquist slot, so -k is always addressable.
        const std::size_t mirror = g.linear_k(-w.k[0], -w.k[1], -w.k[2]);
        for (int c = 0; c < 3; ++c)
            worst = std::max(worst, std::abs(F.coeffs[i][c] - std::conj(F.coeffs[mirror][c])));
    }
    return worst / scale;
}

inline PhysicalField inverse_transform(const SpectralField& F) {
    const GridSpec& g = F.grid;
    if (F.coeffs.size() != g.points())
        throw DimensionMismatch("spectral field size does not match its grid");
    if (!F.hermitian) throw NonHermitianInput("inverse_transform requires coefficients of a real field");
    if (hermitian_defect(F) > 1e-10)
        throw NonHermitianInput("coefficients flagged Hermitian violate c(-k) = conj(c(k))");
    const std::size_t count = g.points();
    const auto plans = detail::plans_for(g.n_per_axis);
    const double weight = 1.0 / g.volume();
    PhysicalField out(g);
    detail::FftwBuffer buf = detail::make_buffer(count);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < count; ++i) {
            buf[i][0] = F.coeffs[i][c].real();
            buf[i][1] = F.coeffs[i][c].imag();
        }
        fftw_execute_dft(plans.backward, buf.get(), buf.get());
        for (std::size_t i = 0; i < count; ++i) out.values[i][c] = buf[i][0] * weight;
    }
    return out;
}

inline bool in_ball(const WaveVector& w, double radius) { return w.norm_sq() < radius * radius; }

/// Sharp cutoff J_R: zero every coefficient with |xi| >= R.
template <class Coefficient>
BasicSpectralField<Coefficient> friedrich_truncate(const BasicSpectralField<Coefficient>& F, double radius) {
    if (!(radius > 0.0)) throw InvalidArgument("Friedrich radius must be positive");
    auto out = F;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i)
        if (!in_ball(wave_at(F.grid, i), radius)) out.coeffs[i] = Coefficient{};
    return out;
}

/// 2/3-rule mask: keep |k_a| < n/3 on every axis.
inline bool in_dealiased_band(const GridSpec& g, const WaveVector& w) {
    const double cut = static_cast<double>(g.n_per_axis) / 3.0;
    return std::abs(w.k[0]) < cut && std::abs(w.k[1]) < cut && std::abs(w.k[2]) < cut;
}

inline SpectralField dealias(const SpectralField& F) {
    SpectralField out = F;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i)
        if (!in_dealiased_band(F.grid, wave_at(F.grid, i))) out.coeffs[i] = CVec3{};
    return out;
}

namespace detail {
inline Complex derivative_symbol(const GridSpec& g, const WaveVector& w, int axis) {
    // The Nyquist plane has no conjugate partner; odd derivatives vanish there.
    if (w.k[axis] == g.nyquist()) return {0.0, 0.0};
    return {0.0, w.xi[axis]};
}
}  // namespace detail

/// Applies the Leray projector M(xi) = I - xi xi^T/|xi|^2 mode by mode, with
/// xi the derivative symbol (Nyquist components zeroed) so that the output
/// is annihilated by divergence(). Modes with a zero symbol pass through.
inline SpectralField leray_project(const SpectralField& F) {
    SpectralField out = F;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
        const WaveVector w = wave_at(F.grid, i);
        double xi[3];
        for (int a = 0; a < 3; ++a) xi[a] = detail::derivative_symbol(F.grid, w, a).imag();
        const double k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        if (k2 == 0.0) continue;
        CVec3& c = out.coeffs[i];
        const Complex dot = xi[0] * c[0] + xi[1] * c[1] + xi[2] * c[2];
        for (int a = 0; a < 3; ++a) c[a] -= dot * (xi[a] / k2);
    }
    return out;
}

/// Multiplies every mode by i*xi_axis.
inline SpectralField derivative(const SpectralField& F, Axis axis) {
    const int a = static_cast<int>(axis);
    SpectralField out = F;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
        const Complex s = detail::derivative_symbol(F.grid, wave_at(F.grid, i), a);
        for (auto& c : out.coeffs[i]) c *= s;
    }
    return out;
}

inline ScalarSpectralField divergence(const SpectralField& F) {
    ScalarSpectralField out(F.grid, F.hermitian);
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
        const WaveVector w = wave_at(F.grid, i);
        Complex sum = 0.0;
        for (int a = 0; a < 3; ++a) sum += detail::derivative_symbol(F.grid, w, a) * F.coeffs[i][a];
        out.coeffs[i] = sum;
    }
    return out;
}

/// Spectral Laplacian of a scalar: multiplies by -|xi|^2.
inline ScalarSpectralField laplacian(const ScalarSpectralField& F) {
    ScalarSpectralField out = F;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] *= -wave_at(F.grid, i).norm_sq();
    return out;
}

/// Weighted quadratic form L^-3 * sum_k weight(k) |c(k)|^2, reduced per
/// i1-plane in a fixed order.
template <class Weight>
double weighted_energy(const SpectralField& F, Weight&& weight) {
    const GridSpec& g = F.grid;
    const std::size_t plane = g.n_per_axis * g.n_per_axis;
    const double total = reduce_chunks(g.n_per_axis, [&](std::size_t i1) {
        CompensatedSum s;
        for (std::size_t j = 0; j < plane; ++j) {
            const std::size_t i = i1 * plane + j;
            const double e = norm_sq(F.coeffs[i]);
            if (e == 0.0) continue;
            s.add(weight(wave_at(g, i)) * e);
        }
        return s.value();
    });
    return total / g.volume();
}

inline double l2_norm(const SpectralField& F) {
    return std::sqrt(weighted_energy(F, [](const WaveVector&) { return 1.0; }));
}

inline double l2_norm(const ScalarSpectralField& F) {
    CompensatedSum s;
    for (const auto& c : F.coeffs) s.add(std::norm(c));
    return std::sqrt(s.value() / F.grid.volume());
}

/// L2 pairing L^-3 * sum_k conj(f(k)) . g(k).
inline Complex inner_product(const SpectralField& f, const SpectralField& g) {
    require_same_grid(f.grid, g.grid);
    CompensatedSum re, im;
    for (std::size_t i = 0; i < f.coeffs.size(); ++i)
        for (int c = 0; c < 3; ++c) {
            const Complex p = std::conj(f.coeffs[i][c]) * g.coeffs[i][c];
            re.add(p.real());
            im.add(p.imag());
        }
    return Complex(re.value(), im.value()) / f.grid.volume();
}

namespace detail {
/// |base|^(2s) with 0^0 = 1; a zero base with s < 0 is reported via `singular`.
inline double power_weight(double base_sq, double s, bool& singular) {
    if (s == 0.0) return 1.0;
    if (base_sq == 0.0) {
        if (s < 0.0) singular = true;
        return 0.0;
    }
    return std::pow(base_sq, s);
}
}  // namespace detail

/// Sobolev norm with weight (1+|xi|^2)^s, or |xi|^(2s) when homogeneous.
/// A homogeneous norm with s < 0 rejects a nonzero mean mode.
inline double sobolev_norm(const SpectralField& F, double s, bool homogeneous) {
    if (homogeneous && s < 0.0 && norm_sq(F.coeffs[0]) != 0.0)
        throw InvalidArgument("homogeneous Sobolev norm with s < 0 needs a zero mean mode");
    return std::sqrt(weighted_energy(F, [&](const WaveVector& w) {
        const double k2 = w.norm_sq();
        if (!homogeneous) return std::pow(1.0 + k2, s);
        bool singular = false;
        return detail::power_weight(k2, s, singular);
    }));
}

/// Anisotropic Sobolev norm with weight (1+|xi_h|^2)^s1 (1+xi_3^2)^s2, or
/// |xi_h|^(2 s1) |xi_3|^(2 s2) when homogeneous (0^0 taken as 1).
inline double aniso_norm(const SpectralField& F, double s1, double s2, bool homogeneous = false) {
    if (homogeneous && (s1 < 0.0 || s2 < 0.0)) {
        const GridSpec& g = F.grid;
        for (std::size_t i = 0; i < F.coeffs.size(); ++i) {
            const WaveVector w = wave_at(g, i);
            const bool bad = (s1 < 0.0 && w.horizontal_sq() == 0.0) || (s2 < 0.0 && w.xi[2] == 0.0);
            if (bad && norm_sq(F.coeffs[i]) != 0.0)
                throw InvalidArgument("homogeneous anisotropic norm with negative index meets a nonzero singular mode");
        }
    }
    return std::sqrt(weighted_energy(F, [&](const WaveVector& w) {
        if (!homogeneous) return std::pow(1.0 + w.horizontal_sq(), s1) * std::pow(1.0 + w.xi[2] * w.xi[2], s2);
        bool singular = false;
        return detail::power_weight(w.horizontal_sq(), s1, singular) *
               detail::power_weight(w.xi[2] * w.xi[2], s2, singular);
    }));
}

/// Largest coefficient magnitude.
inline double max_magnitude(const ScalarSpectralField& F) {
    double m = 0.0;
    for (const auto& c : F.coeffs) m = std::max(m, std::abs(c));
    return m;
}

/// Gradient in physical space: result[a] = d_a u.
inline std::array<PhysicalField, 3> physical_gradient(const SpectralField& F) {
    return {inverse_transform(derivative(F, Axis::x1)), inverse_transform(derivative(F, Axis::x2)),
            inverse_transform(derivative(F, Axis::x3))};
}

}  // namespace edns
