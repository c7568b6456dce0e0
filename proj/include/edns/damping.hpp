#pragma once

#include <array>
#include <cfloat>
#include <cmath>
#include <vector>

#include "edns/grid.hpp"
#include "edns/parallel.hpp"

namespace edns {

/// Parameters of the absorption term alpha * (exp(beta |u|^2) - 1) * u.
struct DampingParams {
    double alpha = 1.0;
    double beta = 1.0;
    /// Largest admissible beta*|u|^2; above it exp() is treated as blow-up.
    double overflow_guard = 700.0;

    void validate() const {
        if (!(alpha > 0.0)) throw InvalidArgument("params.alpha must be positive");
        if (!(beta > 0.0)) throw InvalidArgument("params.beta must be positive");
        if (!(overflow_guard > 0.0) || !(overflow_guard < std::log(DBL_MAX)))
            throw InvalidArgument("params.overflow_guard must lie in (0, log(DBL_MAX))");
    }
};

/// L1 damping functionals, all collocation-quadrature integrals over the box:
///   d0   = |(e^{b|u|^2} - 1) |u|^2|
///   d1   = |(e^{b|u|^2} - 1) |grad u|^2|
///   d2   = |e^{b|u|^2} |grad |u|^2|^2|
///   d1_v = |(e^{b|u|^2} - 1) |d3 u|^2|
///   d2_v = |e^{b|u|^2} (d3 |u|^2)^2|
struct DampingFunctionals {
    double d0 = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double d1_v = 0.0;
    double d2_v = 0.0;
};

namespace detail {
inline double checked_exponent(const Vec3& u, const DampingParams& p) {
    const double e = p.beta * norm_sq(u);
    if (!(e <= p.overflow_guard)) throw OverflowGuardError(e, p.overflow_guard);
    return e;
}

inline double max_exponent(const PhysicalField& u, double beta) {
    double m = 0.0;
    for (const auto& v : u.values) m = std::max(m, beta * norm_sq(v));
    return m;
}

inline void guard_field(const PhysicalField& u, const DampingParams& p) {
    const double m = max_exponent(u, p.beta);
    if (!(m <= p.overflow_guard)) throw OverflowGuardError(m, p.overflow_guard);
}
}  // namespace detail

/// Pointwise alpha * expm1(beta |u|^2) * u.
inline PhysicalField damping_term(const PhysicalField& u, const DampingParams& p) {
    detail::guard_field(u, p);
    PhysicalField out(u.grid);
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        const double factor = p.alpha * std::expm1(p.beta * norm_sq(u.values[i]));
        for (int c = 0; c < 3; ++c) out.values[i][c] = factor * u.values[i][c];
    }
    return out;
}

/// All five functionals in one pass. grad[a].values[x][j] holds d_a u_j.
inline DampingFunctionals damping_functionals(const PhysicalField& u, const std::array<PhysicalField, 3>& grad,
                                              const DampingParams& p) {
    for (const auto& g : grad) require_same_grid(u.grid, g.grid);
    detail::guard_field(u, p);
    const GridSpec& grid = u.grid;
    const std::size_t plane = grid.n_per_axis * grid.n_per_axis;
    std::vector<std::array<double, 5>> partial(grid.n_per_axis);
    for_each_chunk(grid.n_per_axis, [&](std::size_t i1) {
        std::array<CompensatedSum, 5> acc;
        for (std::size_t j = 0; j < plane; ++j) {
            const std::size_t i = i1 * plane + j;
            const Vec3& v = u.values[i];
            const double e = p.beta * norm_sq(v);
            const double em1 = std::expm1(e);
            const double ex = em1 + 1.0;
            double grad_sq = 0.0;
            double grad_mod_sq = 0.0;
            std::array<double, 3> dmod{};
            for (int a = 0; a < 3; ++a) {
                const Vec3& da = grad[a].values[i];
                grad_sq += norm_sq(da);
                dmod[a] = 2.0 * (v[0] * da[0] + v[1] * da[1] + v[2] * da[2]);
                grad_mod_sq += dmod[a] * dmod[a];
            }
            acc[0].add(em1 * norm_sq(v));
            acc[1].add(em1 * grad_sq);
            acc[2].add(ex * grad_mod_sq);
            acc[3].add(em1 * norm_sq(grad[2].values[i]));
            acc[4].add(ex * dmod[2] * dmod[2]);
        }
        for (int q = 0; q < 5; ++q) partial[i1][q] = acc[q].value();
    });
    std::array<CompensatedSum, 5> total;
    for (const auto& row : partial)
        for (int q = 0; q < 5; ++q) total[q].add(row[q]);
    const double w = grid.cell_volume();
    return {total[0].value() * w, total[1].value() * w, total[2].value() * w, total[3].value() * w,
            total[4].value() * w};
}

struct SeriesCheck {
    double direct = 0.0;
    /// partial_sums[k] = sum_{j=1..k} beta^j/j! * integral |u|^(2j+2); entry 0 is 0.
    std::vector<double> partial_sums;
};

/// Compares d0 against the Taylor expansion of (e^{b|u|^2} - 1)|u|^2.
/// Converges quickly when beta * max|u|^2 < 1.
inline SeriesCheck series_check(const PhysicalField& u, const DampingParams& p, int terms) {
    if (terms < 1) throw InvalidArgument("series_check needs at least one term");
    detail::guard_field(u, p);
    SeriesCheck out;
    CompensatedSum direct;
    for (const auto& v : u.values) direct.add(std::expm1(p.beta * norm_sq(v)) * norm_sq(v));
    out.direct = direct.value() * u.grid.cell_volume();

    // term_j(x) = (beta |u|^2)^j / j! * |u|^2, built by recurrence per point.
    std::vector<double> term(u.values.size());
    std::vector<double> ratio(u.values.size());
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        const double m2 = norm_sq(u.values[i]);
        ratio[i] = p.beta * m2;
        term[i] = m2;
    }
    out.partial_sums.assign(static_cast<std::size_t>(terms) + 1, 0.0);
    double running = 0.0;
    for (int j = 1; j <= terms; ++j) {
        CompensatedSum s;
        for (std::size_t i = 0; i < term.size(); ++i) {
            term[i] *= ratio[i] / j;
            s.add(term[i]);
        }
        running += s.value() * u.grid.cell_volume();
        out.partial_sums[static_cast<std::size_t>(j)] = running;
    }
    return out;
}

/// Solves m * (1 + dt*alpha*expm1(beta m^2)) = m_star for m in [0, m_star].
/// The residual is increasing and convex on m >= 0, so Newton from m_star
/// descends monotonically; bisection guards any step leaving the bracket.
inline double solve_damped_magnitude(double m_star, double dt, double alpha, double beta) {
    if (m_star == 0.0 || alpha == 0.0) return m_star;
    const double c = dt * alpha;
    double lo = 0.0;
    double hi = m_star;
    double m = m_star;
    for (int iter = 0; iter < 100; ++iter) {
        const double em1 = std::expm1(beta * m * m);
        const double g = m * (1.0 + c * em1) - m_star;
        if (g == 0.0) return m;
        if (g > 0.0)
            hi = m;
        else
            lo = m;
        const double dg = 1.0 + c * em1 + 2.0 * c * beta * m * m * (em1 + 1.0);
        double next = m - g / dg;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - m) <= 1e-13 * m_star || hi - lo <= 1e-13 * m_star) return next;
        m = next;
    }
    throw ConvergenceError("implicit damping Newton solve did not converge in 100 iterations");
}

/// Pointwise backward step u + dt*alpha*expm1(beta|u|^2)*u = u_star. The map
/// keeps the direction of u_star and never increases its magnitude.
inline PhysicalField implicit_damping_solve(const PhysicalField& u_star, double dt, const DampingParams& p) {
    if (!(dt > 0.0)) throw InvalidArgument("implicit_damping_solve needs dt > 0");
    detail::guard_field(u_star, p);
    PhysicalField out(u_star.grid);
    const std::size_t plane = u_star.grid.n_per_axis * u_star.grid.n_per_axis;
    for_each_chunk(u_star.grid.n_per_axis, [&](std::size_t i1) {
        for (std::size_t j = 0; j < plane; ++j) {
            const std::size_t i = i1 * plane + j;
            const Vec3& v = u_star.values[i];
            const double m_star = std::sqrt(norm_sq(v));
            if (m_star == 0.0) continue;
            const double ratio = solve_damped_magnitude(m_star, dt, p.alpha, p.beta) / m_star;
            for (int c = 0; c < 3; ++c) out.values[i][c] = ratio * v[c];
        }
    });
    return out;
}

/// One implicit-midpoint step of length h for du/dt = -alpha*expm1(beta|u|^2)*u:
/// u_mid = implicit_damping_solve(u, h/2), result 2*u_mid - u. Symmetric in
/// time and pointwise non-expansive.
inline PhysicalField damping_midpoint_step(const PhysicalField& u, double h, const DampingParams& p) {
    PhysicalField mid = implicit_damping_solve(u, 0.5 * h, p);
    for (std::size_t i = 0; i < mid.values.size(); ++i)
        for (int c = 0; c < 3; ++c) mid.values[i][c] = 2.0 * mid.values[i][c] - u.values[i][c];
    return mid;
}

}  // namespace edns
