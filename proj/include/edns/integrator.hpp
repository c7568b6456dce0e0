#pragma once

// Time advancement of the Friedrich-truncated damped Navier-Stokes system.
//
// One step of length h is the symmetric composition
//   D(h/2) o S(h) o D(h/2), then Leray re-projection,
// where D is the implicit midpoint rule for the truncated damping flow
// d/dt u = -P J alpha expm1(beta|u|^2) u and S is an
// integrating-factor midpoint (IFRK2) step for
//   d/dt u = -(nu_h |xi_h|^2 + nu_3 xi_3^2) u + N(u),  N(u) = -P J (u.grad u).

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "edns/ledger_record.hpp"

namespace edns {

enum class Scheme { ifrk2 };

/// Order of the symmetric splitting: damping half-steps outside the
/// transport step (default) or transport half-steps outside the damping.
enum class Splitting { damping_outer, damping_inner };

struct StepperConfig {
    std::optional<double> dt;  // empty = auto (cfl_dt)
    double cfl_safety = 0.5;
    double max_dt = 1e-2;
    Scheme scheme = Scheme::ifrk2;
    Splitting splitting = Splitting::damping_outer;

    void validate() const {
        if (dt && !(*dt > 0.0)) throw InvalidArgument("stepper.dt must be positive");
        if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw InvalidArgument("stepper.cfl_safety must lie in (0, 1]");
        if (!(max_dt > 0.0)) throw InvalidArgument("stepper.max_dt must be positive");
    }
};

/// The run stopped on a blow-up; carries the last valid state and the ledger
/// recorded so far.
class BlowUpError : public Error {
public:
    BlowUpError(const std::string& what, SimulationState last, std::vector<LedgerRow> ledger = {})
        : Error(what), last_state_(std::move(last)), ledger_(std::move(ledger)) {}
    [[nodiscard]] const SimulationState& last_state() const noexcept { return last_state_; }
    [[nodiscard]] const std::vector<LedgerRow>& ledger() const noexcept { return ledger_; }

private:
    SimulationState last_state_;
    std::vector<LedgerRow> ledger_;
};

/// Restriction to the discrete solution space: 2/3 band, Friedrich ball,
/// divergence-free, real.
inline SpectralField project_solution_space(const SpectralField& F) {
    SpectralField out = leray_project(friedrich_truncate(dealias(F), F.grid.friedrich_radius));
    out.hermitian = true;
    return out;
}

inline bool all_finite(const SpectralField& F) {
    for (const auto& c : F.coeffs)
        for (const auto& z : c)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

/// -P J (u . grad u), pseudo-spectral with 2/3-rule dealiasing.
inline SpectralField nonlinear_term(const SpectralField& u_hat) {
    const PhysicalField u = inverse_transform(u_hat);
    const auto grad = physical_gradient(u_hat);
    PhysicalField adv(u_hat.grid);
    for (std::size_t i = 0; i < adv.values.size(); ++i) {
        const Vec3& v = u.values[i];
        for (int c = 0; c < 3; ++c)
            adv.values[i][c] = v[0] * grad[0].values[i][c] + v[1] * grad[1].values[i][c] + v[2] * grad[2].values[i][c];
    }
    if (!adv.all_finite()) throw Error("non-finite advection term");
    return scaled(project_solution_space(forward_transform(adv)), -1.0);
}

/// Applies the exact viscous factor exp(-(nu_h|xi_h|^2 + nu_3 xi_3^2) tau).
inline SpectralField viscous_factor(const SpectralField& F, const FluidParams& params, double tau) {
    SpectralField out = F;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) {
        const WaveVector w = wave_at(F.grid, i);
        const double rate = params.nu_h * w.horizontal_sq() + params.nu_3 * w.xi[2] * w.xi[2];
        if (rate == 0.0) continue;
        const double e = std::exp(-rate * tau);
        for (auto& c : out.coeffs[i]) c *= e;
    }
    return out;
}

/// Integrating-factor midpoint step for the viscous and advective parts.
inline SpectralField transport_step(const SpectralField& u_hat, const FluidParams& params, double h) {
    const SpectralField n0 = nonlinear_term(u_hat);
    const SpectralField half = viscous_factor(axpy(u_hat, 0.5 * h, n0), params, 0.5 * h);
    const SpectralField n1 = nonlinear_term(half);
    return axpy(viscous_factor(u_hat, params, h), h, viscous_factor(n1, params, 0.5 * h));
}

namespace detail {
inline double max_abs_diff(const PhysicalField& a, const PhysicalField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        for (int c = 0; c < 3; ++c) m = std::max(m, std::abs(a.values[i][c] - b.values[i][c]));
    return m;
}
inline double max_abs(const PhysicalField& a) {
    double m = 0.0;
    for (const auto& v : a.values)
        for (double x : v) m = std::max(m, std::abs(x));
    return m;
}
}  // namespace detail

/// Damping sub-flow of length h for du/dt = -P J D(u), D(u) = alpha expm1(beta|u|^2) u,
/// by the implicit midpoint rule on the truncated space:
///   w = u - (h/2) P J D(w),  result 2w - u.
/// The stage is found by the fixed point w <- S(u + (h/2)(I - P J) D(w)), S the
/// pointwise implicit solve of length h/2; only the part of D that the
/// truncation discards is lagged, so the iteration contracts quickly for
/// resolved fields. The map dissipates |u|^2 by exactly h * alpha * d0(w).
inline SpectralField damping_step(const SpectralField& u_hat, const FluidParams& params, double h) {
    if (!params.damping_enabled()) return u_hat;
    const DampingParams& d = params.damping;
    const PhysicalField u = inverse_transform(u_hat);
    const double scale = std::max(detail::max_abs(u), std::numeric_limits<double>::min());
    PhysicalField w = implicit_damping_solve(u, 0.5 * h, d);
    const PhysicalField first = w;
    bool converged = false;
    for (int iter = 0; iter < 60 && !converged; ++iter) {
        const PhysicalField dw = damping_term(w, d);
        const PhysicalField kept = inverse_transform(project_solution_space(forward_transform(dw)));
        PhysicalField rhs = u;
        for (std::size_t i = 0; i < rhs.values.size(); ++i)
            for (int c = 0; c < 3; ++c) rhs.values[i][c] += 0.5 * h * (dw.values[i][c] - kept.values[i][c]);
        PhysicalField next = implicit_damping_solve(rhs, 0.5 * h, d);
        converged = detail::max_abs_diff(next, w) <= 1e-14 * scale;
        w = std::move(next);
    }
    // Without convergence fall back to the lagged-free pointwise stage, which
    // is stable and dissipative but only first-order consistent.
    if (!converged || !w.all_finite()) w = first;
    const SpectralField w_hat = project_solution_space(forward_transform(w));
    return axpy(scaled(w_hat, 2.0), -1.0, u_hat);
}

/// Advances the state by exactly dt.
inline SimulationState step(const SimulationState& state, const FluidParams& params, double dt,
                            Splitting splitting = Splitting::damping_outer) {
    if (!(dt > 0.0)) throw InvalidArgument("step needs dt > 0");
    SpectralField u;
    try {
        if (splitting == Splitting::damping_outer) {
            u = damping_step(state.u_hat, params, 0.5 * dt);
            u = transport_step(u, params, dt);
            u = damping_step(u, params, 0.5 * dt);
        } else {
            u = transport_step(state.u_hat, params, 0.5 * dt);
            u = damping_step(u, params, dt);
            u = transport_step(u, params, 0.5 * dt);
        }
    } catch (const OverflowGuardError& e) {
        throw BlowUpError(e.what(), state);
    }
    u = project_solution_space(u);
    if (!all_finite(u)) throw BlowUpError("non-finite coefficients after step", state);
    return {state.t + dt, std::move(u), state.step_index + 1};
}

inline double max_speed(const SpectralField& u_hat) {
    const PhysicalField u = inverse_transform(u_hat);
    double m = 0.0;
    for (const auto& v : u.values) m = std::max(m, norm_sq(v));
    return std::sqrt(m);
}

/// Advective CFL step, capped by safety/(alpha beta) * exp(-beta max|u|^2)
/// when damping is on and by cfg.max_dt. A zero field gets cfg.max_dt.
inline double cfl_dt(const SimulationState& state, const FluidParams& params, const StepperConfig& cfg) {
    const double umax = max_speed(state.u_hat);
    if (umax == 0.0) return cfg.max_dt;
    double dt = cfg.cfl_safety * state.u_hat.grid.spacing() / umax;
    if (params.damping_enabled()) {
        const DampingParams& d = params.damping;
        dt = std::min(dt, cfg.cfl_safety / (d.alpha * d.beta) * std::exp(-d.beta * umax * umax));
    }
    dt = std::min(dt, cfg.max_dt);
    if (dt < 1e-12) throw Error("time step fell below 1e-12");
    return dt;
}

inline SimulationState step(const SimulationState& state, const FluidParams& params, const StepperConfig& cfg) {
    return step(state, params, cfg.dt ? *cfg.dt : cfl_dt(state, params, cfg), cfg.splitting);
}

/// Taylor-Green datum A (sin k x1 cos k x2 cos k x3, -cos k x1 sin k x2 cos k x3, 0), k = 2 pi / L.
inline SpectralField taylor_green(const GridSpec& grid, double amplitude) {
    grid.validate();
    PhysicalField u(grid);
    const double k = grid.frequency_unit();
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        const Vec3 x = u.position(i);
        const double s1 = std::sin(k * x[0]), c1 = std::cos(k * x[0]);
        const double s2 = std::sin(k * x[1]), c2 = std::cos(k * x[1]);
        const double c3 = std::cos(k * x[2]);
        u.values[i] = {amplitude * s1 * c2 * c3, -amplitude * c1 * s2 * c3, 0.0};
    }
    return project_solution_space(forward_transform(u));
}

struct Band {
    double k_min = 1.0;
    double k_max = 4.0;
};

/// Random solenoidal field: independent complex Gaussian coefficients with
/// amplitude |k|^slope on k_min <= |k| <= k_max (|k| in lattice units),
/// Hermitian-completed, projected, truncated, then scaled so that the RMS
/// velocity (|u|^2 / L^3)^(1/2) equals `rms`. Deterministic in seed.
inline SpectralField random_divfree(const GridSpec& grid, std::uint64_t seed, double slope, Band band,
                                    double rms = 0.5) {
    grid.validate();
    if (!(band.k_min <= band.k_max)) throw InvalidArgument("band must satisfy k_min <= k_max");
    if (!(rms > 0.0)) throw InvalidArgument("rms amplitude must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SpectralField F(grid, true);
    for (std::size_t i = 0; i < F.coeffs.size(); ++i) {
        const WaveVector w = wave_at(grid, i);
        const std::size_t mirror = grid.linear_k(-w.k[0], -w.k[1], -w.k[2]);
        if (mirror <= i) continue;
        const double kmag = std::sqrt(double(w.k[0] * w.k[0] + w.k[1] * w.k[1] + w.k[2] * w.k[2]));
        if (kmag < band.k_min || kmag > band.k_max) continue;
        const double amp = std::pow(kmag, slope) / std::sqrt(2.0);
        CVec3 c;
        for (auto& z : c) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            z = Complex(amp * re, amp * im);
        }
        F.coeffs[i] = c;
        for (int a = 0; a < 3; ++a) F.coeffs[mirror][a] = std::conj(c[a]);
    }
    F = project_solution_space(F);
    const double norm = l2_norm(F);
    if (norm == 0.0) throw InvalidArgument("band contains no admissible modes");
    return scaled(F, rms * std::sqrt(grid.volume()) / norm);
}

/// u + delta * r with r a unit-L2 random solenoidal field over the whole
/// Friedrich ball.
inline SpectralField perturb(const SpectralField& u, double delta, std::uint64_t seed) {
    if (delta < 0.0) throw InvalidArgument("perturbation size must be nonnegative");
    if (delta == 0.0) return u;
    const GridSpec& g = u.grid;
    SpectralField r = random_divfree(g, seed, -1.0, {1.0, g.friedrich_radius / g.frequency_unit()});
    r = scaled(r, 1.0 / l2_norm(r));
    return axpy(u, delta, r);
}

struct RunResult {
    std::vector<LedgerRow> ledger;
    SimulationState final_state;
};

using StepObserver = std::function<void(const SimulationState&, const LedgerRow&)>;

/// Advances to t_end. The ledger integrates every step; rows are emitted at
/// t0, every `sample_every` steps, and at t_end. The observer, when given,
/// sees every emitted row with its state.
inline RunResult run(SimulationState state, const FluidParams& params, const StepperConfig& cfg, double t_end,
                     std::size_t sample_every = 1, const StepObserver& observer = {}) {
    params.validate();
    cfg.validate();
    if (sample_every == 0) throw InvalidArgument("sample_every must be positive");
    RunResult out;
    LedgerRow row = record(state, params);
    out.ledger.push_back(row);
    if (observer) observer(state, row);
    const double snap = 1e-12 * std::max(1.0, std::abs(t_end));
    while (t_end - state.t > snap) {
        double dt;
        try {
            dt = cfg.dt ? *cfg.dt : cfl_dt(state, params, cfg);
        } catch (const Error& e) {
            throw BlowUpError(e.what(), state, out.ledger);
        }
        if (state.t + dt > t_end - snap) dt = t_end - state.t;
        try {
            state = step(state, params, dt, cfg.splitting);
            row = record(state, params, row);
        } catch (const BlowUpError& e) {
            throw BlowUpError(e.what(), e.last_state(), out.ledger);
        } catch (const OverflowGuardError& e) {
            throw BlowUpError(e.what(), state, out.ledger);
        }
        const bool last = !(t_end - state.t > snap);
        if (last || state.step_index % sample_every == 0) {
            out.ledger.push_back(row);
            if (observer) observer(state, row);
        }
    }
    out.final_state = std::move(state);
    return out;
}

inline RunResult run(const SpectralField& u0, const FluidParams& params, const StepperConfig& cfg, double t_end,
                     std::size_t sample_every = 1, const StepObserver& observer = {}) {
    return run(SimulationState{0.0, u0, 0}, params, cfg, t_end, sample_every, observer);
}

}  // namespace edns
