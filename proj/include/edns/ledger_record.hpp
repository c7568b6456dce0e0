#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "edns/damping.hpp"
#include "edns/spectral.hpp"

namespace edns {

/// Parameters of the damped system: horizontal and vertical viscosity plus
/// the damping law. alpha = 0 disables damping.
struct FluidParams {
    double nu_h = 1.0;
    double nu_3 = 1.0;
    DampingParams damping;

    [[nodiscard]] bool isotropic() const { return nu_h == nu_3; }
    [[nodiscard]] bool damping_enabled() const { return damping.alpha > 0.0; }

    void validate() const {
        if (!(nu_h > 0.0)) throw InvalidArgument("params.nu_h must be positive");
        if (!(nu_3 >= 0.0)) throw InvalidArgument("params.nu_3 must be nonnegative");
        if (damping.alpha < 0.0) throw InvalidArgument("params.alpha must be nonnegative");
        if (damping_enabled()) {
            damping.validate();
        } else if (!(damping.beta > 0.0)) {
            throw InvalidArgument("params.beta must be positive");
        }
    }
};

struct SimulationState {
    double t = 0.0;
    SpectralField u_hat;
    std::size_t step_index = 0;
};

/// Every norm and damping functional of the a priori estimates at one instant.
struct LedgerTerms {
    double l2_sq = 0.0;         // |u|^2
    double grad_sq = 0.0;       // |grad u|^2
    double grad_h_sq = 0.0;     // |grad_h u|^2
    double d3_sq = 0.0;         // |d3 u|^2
    double lap_sq = 0.0;        // |lap u|^2
    double grad_h_d3_sq = 0.0;  // |grad_h d3 u|^2
    DampingFunctionals damping;
};

inline constexpr std::size_t kLedgerTermCount = 11;

inline constexpr std::array<std::string_view, kLedgerTermCount> kLedgerTermNames = {
    "l2_sq", "grad_sq", "grad_h_sq", "d3_sq", "lap_sq", "grad_h_d3_sq", "d0", "d1", "d2", "d1_v", "d2_v"};

inline std::array<double, kLedgerTermCount> flatten(const LedgerTerms& q) {
    return {q.l2_sq, q.grad_sq, q.grad_h_sq, q.d3_sq, q.lap_sq, q.grad_h_d3_sq,
            q.damping.d0, q.damping.d1, q.damping.d2, q.damping.d1_v, q.damping.d2_v};
}

inline LedgerTerms unflatten(const std::array<double, kLedgerTermCount>& v) {
    LedgerTerms q;
    q.l2_sq = v[0];
    q.grad_sq = v[1];
    q.grad_h_sq = v[2];
    q.d3_sq = v[3];
    q.lap_sq = v[4];
    q.grad_h_d3_sq = v[5];
    q.damping = {v[6], v[7], v[8], v[9], v[10]};
    return q;
}

/// One sample: instantaneous terms and their running integrals from 0 to t.
struct LedgerRow {
    double t = 0.0;
    LedgerTerms now;
    LedgerTerms cum;
};

/// Spectral quadratic norms of u by Parseval.
inline LedgerTerms spectral_terms(const SpectralField& u_hat) {
    const GridSpec& g = u_hat.grid;
    const std::size_t plane = g.n_per_axis * g.n_per_axis;
    std::vector<std::array<double, 6>> partial(g.n_per_axis);
    for_each_chunk(g.n_per_axis, [&](std::size_t i1) {
        std::array<CompensatedSum, 6> acc;
        for (std::size_t j = 0; j < plane; ++j) {
            const std::size_t i = i1 * plane + j;
            const double e = norm_sq(u_hat.coeffs[i]);
            if (e == 0.0) continue;
            const WaveVector w = wave_at(g, i);
            const double kh = w.horizontal_sq();
            const double k3 = w.xi[2] * w.xi[2];
            const double k2 = kh + k3;
            acc[0].add(e);
            acc[1].add(k2 * e);
            acc[2].add(kh * e);
            acc[3].add(k3 * e);
            acc[4].add(k2 * k2 * e);
            acc[5].add(kh * k3 * e);
        }
        for (int q = 0; q < 6; ++q) partial[i1][q] = acc[q].value();
    });
    std::array<CompensatedSum, 6> total;
    for (const auto& row : partial)
        for (int q = 0; q < 6; ++q) total[q].add(row[q]);
    const double w = 1.0 / g.volume();
    LedgerTerms out;
    out.l2_sq = total[0].value() * w;
    out.grad_sq = total[1].value() * w;
    out.grad_h_sq = total[2].value() * w;
    out.d3_sq = total[3].value() * w;
    out.lap_sq = total[4].value() * w;
    out.grad_h_d3_sq = total[5].value() * w;
    return out;
}

/// Samples the ledger at the current state. Running integrals advance by the
/// trapezoid rule against `prev`; without `prev` they start at zero.
inline LedgerRow record(const SimulationState& state, const FluidParams& params,
                        const std::optional<LedgerRow>& prev = std::nullopt) {
    LedgerRow row;
    row.t = state.t;
    row.now = spectral_terms(state.u_hat);
    const PhysicalField u = inverse_transform(state.u_hat);
    row.now.damping = damping_functionals(u, physical_gradient(state.u_hat), params.damping);
    if (prev) {
        const double half = 0.5 * (row.t - prev->t);
        const auto a = flatten(prev->now);
        const auto b = flatten(row.now);
        auto c = flatten(prev->cum);
        for (std::size_t q = 0; q < kLedgerTermCount; ++q) c[q] += half * (a[q] + b[q]);
        row.cum = unflatten(c);
    }
    return row;
}

}  // namespace edns
