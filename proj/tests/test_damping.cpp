#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "edns/integrator.hpp"
#include "oracles.hpp"

using namespace edns;

namespace {

PhysicalField constant_field(const GridSpec& g, Vec3 v) {
    PhysicalField f(g);
    for (auto& x : f.values) x = v;
    return f;
}

/// Band-limited random field scaled so that max |u| = target.
PhysicalField scaled_random(const GridSpec& g, std::uint64_t seed, double target) {
    PhysicalField u = inverse_transform(random_divfree(g, seed, -1.0, {1.0, 3.0}));
    double m = 0.0;
    for (const auto& v : u.values) m = std::max(m, std::sqrt(norm_sq(v)));
    for (auto& v : u.values)
        for (auto& c : v) c *= target / m;
    return u;
}

/// Root of m (1 + dt a (e^{b m^2} - 1)) = m_star by plain bisection.
double bisect_magnitude(double m_star, double dt, double a, double b) {
    double lo = 0.0, hi = m_star;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double g = mid * (1.0 + dt * a * (std::exp(b * mid * mid) - 1.0)) - m_star;
        (g > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST(DampingParams, Validation) {
    EXPECT_NO_THROW(DampingParams{}.validate());
    EXPECT_THROW((DampingParams{0.0, 1.0, 700.0}.validate()), InvalidArgument);
    EXPECT_THROW((DampingParams{1.0, -1.0, 700.0}.validate()), InvalidArgument);
    EXPECT_THROW((DampingParams{1.0, 1.0, 800.0}.validate()), InvalidArgument);
}

TEST(DampingTerm, ZeroAndUnitConstant) {
    const GridSpec g = GridSpec::make(4);
    const PhysicalField z = damping_term(PhysicalField(g), {});
    for (const auto& v : z.values) EXPECT_EQ(norm_sq(v), 0.0);

    const Vec3 dir{0.6, 0.0, 0.8};
    const PhysicalField d = damping_term(constant_field(g, dir), {});
    for (const auto& v : d.values)
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(v[c], 1.718281828459045 * dir[c], 1e-15);
}

TEST(DampingTerm, SmallAmplitudeMatchesTaylor) {
    const GridSpec g = GridSpec::make(4);
    const double a = 1e-8;
    const DampingParams p{2.0, 3.0, 700.0};
    const PhysicalField d = damping_term(constant_field(g, {a, 0.0, 0.0}), p);
    const double x = p.beta * a * a;
    const double taylor = p.alpha * (x + x * x / 2 + x * x * x / 6) * a;
    EXPECT_LT(std::abs(d.values[0][0] - taylor) / taylor, 1e-8);
}

TEST(DampingTerm, AgreesWithExtendedPrecision) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const GridSpec g = GridSpec::make(4);
    PhysicalField f(g);
    const DampingParams p{1.3, 0.7, 700.0};
    for (auto& v : f.values) {
        v = {u(rng), u(rng), u(rng)};
        const double target = 50.0 * std::abs(u(rng)) / p.beta;
        const double s = std::sqrt(target / norm_sq(v));
        for (auto& c : v) c *= s;
    }
    const PhysicalField d = damping_term(f, p);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const long double m2 = (long double)f.values[i][0] * f.values[i][0] +
                               (long double)f.values[i][1] * f.values[i][1] +
                               (long double)f.values[i][2] * f.values[i][2];
        const long double factor = (long double)p.alpha * expm1l((long double)p.beta * m2);
        for (int c = 0; c < 3; ++c) {
            const long double ref = factor * f.values[i][c];
            EXPECT_LE(std::abs((long double)d.values[i][c] - ref), 1e-14L * std::abs(ref) + 1e-300L);
        }
    }
}

TEST(DampingTerm, OverflowGuardReportsMax) {
    const GridSpec g = GridSpec::make(4);
    PhysicalField f(g);
    f.values[5] = {30.0, 0.0, 0.0};
    try {
        damping_term(f, {});
        FAIL() << "expected OverflowGuardError";
    } catch (const OverflowGuardError& e) {
        EXPECT_DOUBLE_EQ(e.max_exponent(), 900.0);
    }
}

TEST(DampingFunctionals, ZeroAndConstantClosedForms) {
    const GridSpec g = GridSpec::make(8, 2.0);
    const std::array<PhysicalField, 3> zero_grad{PhysicalField(g), PhysicalField(g), PhysicalField(g)};
    const DampingFunctionals z = damping_functionals(PhysicalField(g), zero_grad, {});
    EXPECT_EQ(z.d0 + z.d1 + z.d2 + z.d1_v + z.d2_v, 0.0);

    const DampingParams p{1.0, 0.5, 700.0};
    const DampingFunctionals c = damping_functionals(constant_field(g, {0.0, 1.0, 0.0}), zero_grad, p);
    EXPECT_NEAR(c.d0, std::expm1(0.5) * 8.0, 1e-13);
    EXPECT_EQ(c.d1, 0.0);
    EXPECT_EQ(c.d2, 0.0);
}

TEST(DampingFunctionals, GradientTermsAgainstPointwiseOracle) {
    const GridSpec g = GridSpec::make(16);
    const SpectralField uh = random_divfree(g, 9, -1.0, {1.0, 3.0}, 0.4);
    const PhysicalField u = inverse_transform(uh);
    const auto grad = physical_gradient(uh);
    const DampingParams p{1.0, 1.5, 700.0};
    const DampingFunctionals f = damping_functionals(u, grad, p);

    // |grad |u|^2|^2 from spectral derivatives of the scalar |u|^2.
    PhysicalField mod(g);
    for (std::size_t i = 0; i < u.values.size(); ++i) mod.values[i] = {norm_sq(u.values[i]), 0.0, 0.0};
    const SpectralField mh = forward_transform(mod);
    std::array<PhysicalField, 3> dmod = physical_gradient(mh);
    double d1 = 0.0, d2 = 0.0, d1v = 0.0, d2v = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        const double e = std::exp(p.beta * norm_sq(u.values[i]));
        double gsq = 0.0, msq = 0.0;
        for (int a = 0; a < 3; ++a) {
            gsq += norm_sq(grad[a].values[i]);
            msq += dmod[a].values[i][0] * dmod[a].values[i][0];
        }
        d1 += (e - 1.0) * gsq;
        d2 += e * msq;
        d1v += (e - 1.0) * norm_sq(grad[2].values[i]);
        d2v += e * dmod[2].values[i][0] * dmod[2].values[i][0];
    }
    const double w = g.cell_volume();
    EXPECT_NEAR(f.d1, d1 * w, 1e-10 * f.d1);
    // |u|^2 is band-limited at twice the velocity band, so its spectral
    // gradient is exact on this grid.
    EXPECT_NEAR(f.d2, d2 * w, 1e-9 * f.d2);
    EXPECT_NEAR(f.d1_v, d1v * w, 1e-10 * f.d1_v);
    EXPECT_NEAR(f.d2_v, d2v * w, 1e-9 * f.d2_v);
    EXPECT_GT(f.d0, 0.0);
}

TEST(SeriesCheck, ZeroConstantAndRandom) {
    const GridSpec g = GridSpec::make(8);
    const SeriesCheck z = series_check(PhysicalField(g), {}, 5);
    EXPECT_EQ(z.direct, 0.0);
    for (double s : z.partial_sums) EXPECT_EQ(s, 0.0);

    const double c = 0.8;
    const DampingParams p{1.0, 1.2, 700.0};
    const SeriesCheck k = series_check(constant_field(g, {c, 0.0, 0.0}), p, 12);
    double term = c * c * g.volume(), sum = 0.0;
    for (int j = 1; j <= 12; ++j) {
        term *= p.beta * c * c / j;
        sum += term;
        EXPECT_NEAR(k.partial_sums[j], sum, 1e-13 * sum);
    }
    EXPECT_NEAR(k.direct, std::expm1(p.beta * c * c) * c * c * g.volume(), 1e-13 * k.direct);

    const PhysicalField u = scaled_random(GridSpec::make(16), 4, 0.5);
    const SeriesCheck r = series_check(u, {1.0, 1.0, 700.0}, 30);
    EXPECT_LE(std::abs(r.direct - r.partial_sums[30]), 1e-10 * r.direct);
    for (std::size_t j = 1; j < r.partial_sums.size(); ++j) {
        EXPECT_GE(r.partial_sums[j], r.partial_sums[j - 1]);
        EXPECT_LE(r.partial_sums[j], r.direct * (1.0 + 1e-14));
    }
}

TEST(ImplicitSolve, ScalarRootMatchesBisection) {
    const double m = solve_damped_magnitude(1.0, 1.0, 1.0, 1.0);
    EXPECT_NEAR(m, 0.6529186404192047, 1e-12);
    EXPECT_NEAR(m, bisect_magnitude(1.0, 1.0, 1.0, 1.0), 1e-13);
    for (double ms : {1e-6, 0.1, 2.0, 5.0})
        for (double dt : {1e-3, 0.1, 10.0})
            EXPECT_NEAR(solve_damped_magnitude(ms, dt, 2.0, 0.5), bisect_magnitude(ms, dt, 2.0, 0.5), 1e-12 * ms);
}

TEST(ImplicitSolve, ZeroDirectionAndDissipativity) {
    const GridSpec g = GridSpec::make(8);
    const PhysicalField z = implicit_damping_solve(PhysicalField(g), 0.1, {});
    for (const auto& v : z.values) EXPECT_EQ(norm_sq(v), 0.0);
    EXPECT_THROW(implicit_damping_solve(PhysicalField(g), 0.0, {}), InvalidArgument);

    const PhysicalField u = scaled_random(g, 7, 2.0);
    const PhysicalField out = implicit_damping_solve(u, 0.3, {});
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        const double nu = std::sqrt(norm_sq(u.values[i]));
        const double no = std::sqrt(norm_sq(out.values[i]));
        EXPECT_LT(no, nu);
        const double dot = u.values[i][0] * out.values[i][0] + u.values[i][1] * out.values[i][1] +
                           u.values[i][2] * out.values[i][2];
        EXPECT_NEAR(dot, nu * no, 1e-14 * nu * nu);
    }
}

TEST(ImplicitSolve, ConsistentAsDtVanishes) {
    const GridSpec g = GridSpec::make(8);
    const PhysicalField u = scaled_random(g, 8, 1.0);
    double prev = 0.0;
    for (double dt : {1e-4, 1e-5}) {
        const PhysicalField out = implicit_damping_solve(u, dt, {});
        double err = 0.0;
        for (std::size_t i = 0; i < u.values.size(); ++i)
            for (int c = 0; c < 3; ++c) err = std::max(err, std::abs(out.values[i][c] - u.values[i][c]));
        // |du| <= dt * alpha * expm1(beta) * max|u| at max|u| = 1.
        EXPECT_LE(err, dt * std::expm1(1.0) * 1.0001);
        if (prev > 0.0) { EXPECT_NEAR(prev / err, 10.0, 0.01); }
        prev = err;
    }
}

TEST(MidpointStep, SecondOrderAgainstExactScalarFlow) {
    // For m' = -alpha expm1(beta m^2) m compare against a fine RK4 solution.
    auto exact = [](double m0, double T) {
        double m = m0;
        const int n = 20000;
        const double h = T / n;
        auto f = [](double x) { return -std::expm1(x * x) * x; };
        for (int i = 0; i < n; ++i) {
            const double k1 = f(m), k2 = f(m + 0.5 * h * k1), k3 = f(m + 0.5 * h * k2), k4 = f(m + h * k3);
            m += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        return m;
    };
    const GridSpec g = GridSpec::make(4);
    const double ref = exact(1.2, 0.5);
    double errs[2];
    int idx = 0;
    for (int steps : {20, 40}) {
        PhysicalField u = constant_field(g, {1.2, 0.0, 0.0});
        for (int s = 0; s < steps; ++s) u = damping_midpoint_step(u, 0.5 / steps, {});
        errs[idx++] = std::abs(u.values[0][0] - ref);
    }
    EXPECT_GT(std::log2(errs[0] / errs[1]), 1.9);
}
