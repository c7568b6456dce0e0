#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "edns/energy_ledger.hpp"

using namespace edns;

namespace {

constexpr double kPi = std::numbers::pi;

FluidParams unit_params(double nu_3 = 1.0) {
    FluidParams p;
    p.nu_3 = nu_3;
    p.damping.alpha = 1.0;
    p.damping.beta = 1.0;
    return p;
}

RunResult short_run(const SpectralField& u0, const FluidParams& p, double dt, double t_end, std::size_t every = 1) {
    StepperConfig cfg;
    cfg.dt = dt;
    return run(u0, p, cfg, t_end, every);
}

// (sin k x2 + 0.3 cos 2k x2, sin k x1, 0): solenoidal and independent of x3.
SpectralField planar_field(const GridSpec& g) {
    PhysicalField u(g);
    const double k = g.frequency_unit();
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        const Vec3 x = u.position(i);
        u.values[i] = {std::sin(k * x[1]) + 0.3 * std::cos(2.0 * k * x[1]), std::sin(k * x[0]), 0.0};
    }
    return project_solution_space(forward_transform(u));
}

}  // namespace

TEST(Record, ZeroFieldGivesZeroRow) {
    const GridSpec g = GridSpec::make(8);
    const LedgerRow r = record({0.0, SpectralField(g), 0}, unit_params());
    for (double v : row_values(r)) EXPECT_EQ(v, 0.0);
}

TEST(Record, SingleModeParseval) {
    // u = (0, a cos(k x1), 0) on a box of side 3: |u|^2 = a^2 L^3 / 2.
    const GridSpec g = GridSpec::make(16, 3.0);
    const double a = 0.7, k = 2.0 * kPi / 3.0;
    PhysicalField u(g);
    for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] = {0.0, a * std::cos(k * u.position(i)[0]), 0.0};
    const LedgerRow r = record({0.0, forward_transform(u), 0}, unit_params());
    const double l2 = a * a * 27.0 / 2.0;
    EXPECT_NEAR(r.now.l2_sq, l2, 1e-13 * l2);
    EXPECT_NEAR(r.now.grad_sq, k * k * r.now.l2_sq, 1e-13 * l2);
    EXPECT_NEAR(r.now.grad_h_sq, r.now.grad_sq, 1e-13 * l2);
    EXPECT_NEAR(r.now.lap_sq, std::pow(k, 4) * r.now.l2_sq, 1e-13 * l2);
    EXPECT_EQ(r.now.d3_sq, 0.0);
    EXPECT_EQ(r.now.grad_h_d3_sq, 0.0);
}

TEST(Record, TaylorGreenClosedForm) {
    // int A^2 (s1^2 c2^2 c3^2 + c1^2 s2^2 c3^2) dx = A^2 L^3 / 4; every mode has |k|^2 = 3.
    for (double L : {2.0 * kPi, 1.0}) {
        const GridSpec g = GridSpec::make(16, L);
        const double A = 1.3, k = 2.0 * kPi / L;
        const LedgerRow r = record({0.0, taylor_green(g, A), 0}, unit_params());
        const double l2 = A * A * L * L * L / 4.0;
        EXPECT_NEAR(r.now.l2_sq, l2, 1e-13 * l2);
        EXPECT_NEAR(r.now.grad_sq, 3.0 * k * k * l2, 1e-12 * k * k * l2);
        EXPECT_NEAR(r.now.grad_h_sq, 2.0 * k * k * l2, 1e-12 * k * k * l2);
        EXPECT_NEAR(r.now.d3_sq, k * k * l2, 1e-12 * k * k * l2);
        EXPECT_NEAR(r.now.lap_sq, 9.0 * std::pow(k, 4) * l2, 1e-12 * std::pow(k, 4) * l2);
    }
}

TEST(Record, RunningIntegralsAreTrapezoidAndNondecreasing) {
    const GridSpec g = GridSpec::make(16);
    const RunResult r = short_run(taylor_green(g, 1.0), unit_params(), 0.01, 0.2);
    for (std::size_t m = 0; m + 1 < r.ledger.size(); ++m) {
        const auto a = flatten(r.ledger[m].now), b = flatten(r.ledger[m + 1].now);
        const auto ca = flatten(r.ledger[m].cum), cb = flatten(r.ledger[m + 1].cum);
        const double h = r.ledger[m + 1].t - r.ledger[m].t;
        for (std::size_t q = 0; q < kLedgerTermCount; ++q) {
            EXPECT_GE(a[q], 0.0);
            EXPECT_GE(cb[q], ca[q]);
            EXPECT_NEAR(cb[q] - ca[q], 0.5 * h * (a[q] + b[q]), 1e-12 * (cb[q] + 1e-300));
        }
    }
}

TEST(Record, CoarseSamplingKeepsIntegrals) {
    const GridSpec g = GridSpec::make(8);
    const SpectralField u0 = taylor_green(g, 1.0);
    const RunResult fine = short_run(u0, unit_params(), 0.01, 0.2, 1);
    const RunResult coarse = short_run(u0, unit_params(), 0.01, 0.2, 7);
    EXPECT_LT(coarse.ledger.size(), fine.ledger.size());
    EXPECT_EQ(row_values(coarse.ledger.back()), row_values(fine.ledger.back()));
}

TEST(EnergyInequality, ZeroDatumHasZeroMargin) {
    const GridSpec g = GridSpec::make(8);
    const RunResult r = short_run(SpectralField(g), unit_params(), 0.05, 0.2);
    const MarginReport rep = verify_eqth1(r.ledger, 0.0, unit_params());
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.rel_margin, 0.0);
    EXPECT_EQ(rep.lhs, 0.0);
}

TEST(EnergyInequality, TaylorGreenPassesAndNormDecreases) {
    const GridSpec g = GridSpec::make(16);
    const RunResult r = short_run(taylor_green(g, 1.0), unit_params(), 0.01, 0.5);
    const MarginReport rep = verify_eqth1(r.ledger, r.ledger.front().now.l2_sq, unit_params());
    EXPECT_TRUE(rep.pass) << report_text(rep);
    EXPECT_LE(rep.extra.at("max_norm_increase"), 0.0);
}

TEST(EnergyInequality, ViolationIsReported) {
    const GridSpec g = GridSpec::make(8);
    const RunResult r = short_run(taylor_green(g, 1.0), unit_params(), 0.01, 0.1);
    const MarginReport rep = verify_eqth1(r.ledger, 0.9 * r.ledger.front().now.l2_sq, unit_params());
    EXPECT_FALSE(rep.pass);
    EXPECT_NEAR(rep.rel_margin, -1.0 / 9.0, 1e-3);
}

TEST(GradientGrowth, GrowthFactorIsExact) {
    FluidParams p = unit_params();
    p.damping.alpha = 2.0;
    p.damping.beta = 0.5;
    std::vector<LedgerRow> ledger(2);
    ledger[0].t = 3.0;
    ledger[1].t = 3.0 + 0.5;  // alpha beta^2 after the first row
    const InequalitySeries s = inequality_series(InequalityId::eqth2, ledger, {0.0, 4.0, 0.0}, p);
    EXPECT_EQ(s.rhs[0], 4.0);
    EXPECT_DOUBLE_EQ(s.rhs[1], 4.0 * std::numbers::e);
}

TEST(GradientGrowth, RequiresDamping) {
    FluidParams p = unit_params();
    p.damping.alpha = 0.0;
    std::vector<LedgerRow> ledger(1);
    EXPECT_THROW(verify_eqth2(ledger, 1.0, p), InvalidArgument);
}

TEST(GradientBound, BoundIsConstantAndFromInitialRow) {
    for (double alpha : {1.0, 10.0}) {
        FluidParams p = unit_params();
        p.damping.alpha = alpha;
        const GridSpec g = GridSpec::make(16);
        const SpectralField u0 = taylor_green(g, 1.0);
        const RunResult r = short_run(u0, p, 0.01, 0.3);
        const MarginReport rep = verify_eqth3(r.ledger, u0, p);
        const LedgerRow& r0 = r.ledger.front();
        const double m = r0.now.grad_sq + r0.now.l2_sq / alpha;
        EXPECT_NEAR(rep.extra.at("M"), m, 1e-12 * m);
        EXPECT_NEAR(rep.rhs, m, 1e-12 * m);
        const InequalitySeries s = inequality_series(InequalityId::eqth3, r.ledger, InitialData::from(u0), p);
        for (double v : s.rhs) EXPECT_EQ(v, s.rhs.front());
        EXPECT_TRUE(rep.pass) << report_text(rep);
        EXPECT_TRUE(verify_eqth2(r.ledger, r0.now.grad_sq, p).pass);
    }
}

TEST(Anisotropic, HorizontalEnergyMatchesFullEnergyWithoutVerticalViscosity) {
    const FluidParams p = unit_params(0.0);
    const GridSpec g = GridSpec::make(16);
    // The margin is trapezoid error of order dt^2; dt = 0.01 sits near the tolerance.
    const RunResult r = short_run(random_divfree(g, 3, -1.0, {1.0, 4.0}, 0.5), p, 0.005, 0.2);
    const double l0 = r.ledger.front().now.l2_sq;
    const MarginReport a = verify_eqth21(r.ledger, l0, p);
    const MarginReport b = verify_eqth1(r.ledger, l0, p);
    EXPECT_EQ(a.rel_margin, b.rel_margin);
    EXPECT_EQ(a.lhs, b.lhs);
    EXPECT_TRUE(a.pass);
    EXPECT_THROW(verify_eqth21(r.ledger, l0, unit_params(1.0)), InvalidArgument);
    EXPECT_THROW(verify_eqth22(r.ledger, 1.0, unit_params(1.0)), InvalidArgument);
}

TEST(Anisotropic, PlanarDatumPassesVerticalBoundTrivially) {
    const FluidParams p = unit_params(0.0);
    const RunResult r = short_run(planar_field(GridSpec::make(16)), p, 0.01, 0.3, 5);
    for (const LedgerRow& row : r.ledger) {
        EXPECT_EQ(row.now.d3_sq, 0.0);
        EXPECT_EQ(row.cum.grad_h_d3_sq, 0.0);
        EXPECT_EQ(row.cum.damping.d1_v, 0.0);
    }
    const MarginReport rep = verify_eqth22(r.ledger, 0.0, p);
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.rel_margin, 0.0);
    EXPECT_EQ(rep.extra.at("stated_exponent"), 6.0);
}

TEST(Anisotropic, FittedExponentOfSyntheticGrowth) {
    std::vector<LedgerRow> ledger(11);
    for (std::size_t i = 0; i < ledger.size(); ++i) {
        ledger[i].t = 1.0 + 0.1 * i;
        ledger[i].now.d3_sq = 2.0 * std::exp(-0.75 * 0.1 * i);
    }
    EXPECT_NEAR(fitted_d3_exponent(ledger), -0.75, 1e-12);
}

TEST(Budget, ResidualIsThirdOrderPerStep) {
    const GridSpec g = GridSpec::make(16);
    const FluidParams p = unit_params();
    double prev = 0.0;
    for (double dt : {0.02, 0.01}) {
        const RunResult r = short_run(taylor_green(g, 1.0), p, dt, 0.2);
        double worst = 0.0;
        for (double v : budget_residuals(r.ledger, p)) worst = std::max(worst, std::abs(v));
        if (prev > 0.0) { EXPECT_GE(prev / worst, 3.5); }
        prev = worst;
    }
}

TEST(Continuity, SmoothRunPassesAndInjectedJumpFails) {
    const GridSpec g = GridSpec::make(16);
    const RunResult r = short_run(taylor_green(g, 1.0), unit_params(), 0.01, 0.3);
    const MarginReport ok = continuity_check(r.ledger);
    EXPECT_TRUE(ok.pass) << report_text(ok);
    EXPECT_EQ(ok.extra.at("flagged_jumps"), 0.0);

    std::vector<LedgerRow> bad = r.ledger;
    for (std::size_t m = 20; m < bad.size(); ++m) bad[m].now.l2_sq *= 0.01;
    const MarginReport rep = continuity_check(bad);
    EXPECT_FALSE(rep.pass);
    EXPECT_EQ(rep.extra.at("flagged_jumps"), 1.0);
    EXPECT_DOUBLE_EQ(rep.worst_t, bad[20].t);
}

TEST(Continuity, IncrementHalvesWithDt) {
    const GridSpec g = GridSpec::make(8);
    const double a = continuity_check(short_run(taylor_green(g, 1.0), unit_params(), 0.02, 0.2).ledger)
                         .extra.at("max_increment");
    const double b = continuity_check(short_run(taylor_green(g, 1.0), unit_params(), 0.01, 0.2).ledger)
                         .extra.at("max_increment");
    EXPECT_NEAR(a / b, 2.0, 0.1);
}

TEST(Stability, ZeroPerturbationIsExact) {
    const GridSpec g = GridSpec::make(8);
    StepperConfig cfg;
    cfg.dt = 0.02;
    const StabilityResult r = stability_experiment(taylor_green(g, 1.0), 0.0, 1, unit_params(), cfg, 0.2);
    EXPECT_TRUE(r.report.pass);
    for (double w : r.w_sq) EXPECT_EQ(w, 0.0);
    EXPECT_EQ(r.t.back(), 0.2);
}

TEST(Stability, BothSidesScaleWithDeltaSquared) {
    const GridSpec g = GridSpec::make(8);
    StepperConfig cfg;
    cfg.dt = 0.02;
    const SpectralField u0 = taylor_green(g, 1.0);
    const StabilityResult a = stability_experiment(u0, 1e-6, 4, unit_params(), cfg, 0.2);
    const StabilityResult b = stability_experiment(u0, 2e-6, 4, unit_params(), cfg, 0.2);
    EXPECT_TRUE(a.report.pass);
    EXPECT_TRUE(b.report.pass);
    EXPECT_NEAR(a.w_sq.front(), 1e-12, 1e-22);
    EXPECT_EQ(a.bound.front(), a.w_sq.front());
    EXPECT_NEAR(b.w_sq.front() / a.w_sq.front(), 4.0, 1e-9);
    // Both prefactors are measured |w(0)|^2, known to about eps * |u| / delta.
    for (std::size_t i = 0; i < a.bound.size(); ++i) EXPECT_NEAR(b.bound[i] / a.bound[i], 4.0, 1e-9);
    EXPECT_LT(a.sup_ratio, 1.0);
    EXPECT_THROW(stability_experiment(u0, 1e-6, 4, unit_params(0.5), cfg, 0.2), InvalidArgument);
}

TEST(Csv, RoundTripIsBitExact) {
    const GridSpec g = GridSpec::make(8);
    const RunResult r = short_run(random_divfree(g, 11, -1.0, {1.0, 2.0}, 0.5), unit_params(), 0.013, 0.1);
    std::ostringstream os;
    write_ledger_csv(os, r.ledger);
    std::istringstream is(os.str());
    const std::vector<LedgerRow> back = read_ledger_csv(is);
    ASSERT_EQ(back.size(), r.ledger.size());
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(row_values(back[i]), row_values(r.ledger[i]));
    std::ostringstream again;
    write_ledger_csv(again, back);
    EXPECT_EQ(again.str(), os.str());
    const std::vector<LedgerRow>& l = r.ledger;
    EXPECT_EQ(report_text(verify_eqth1(back, back[0].now.l2_sq, unit_params())),
              report_text(verify_eqth1(l, l[0].now.l2_sq, unit_params())));
}

TEST(Csv, HeaderAndSeventeenDigits) {
    std::ostringstream os;
    write_ledger_csv(os, {});
    EXPECT_EQ(os.str().substr(0, 25), "t,l2_sq,grad_sq,grad_h_sq");
    EXPECT_EQ(ledger_columns().size(), 23u);
    EXPECT_EQ(ledger_columns().back(), "cum_d2_v");
    EXPECT_EQ(format_double(0.1), "1.0000000000000001e-01");
    EXPECT_EQ(parse_double(format_double(0.1)), 0.1);
}

TEST(Csv, MalformedInputIsRejected) {
    auto read = [](const std::string& text) {
        std::istringstream is(text);
        return read_ledger_csv(is);
    };
    std::ostringstream os;
    write_ledger_csv(os, std::vector<LedgerRow>(1));
    const std::string good = os.str();
    EXPECT_EQ(read(good).size(), 1u);
    EXPECT_THROW(read(""), FormatError);
    EXPECT_THROW(read("t,l2\n"), FormatError);
    EXPECT_THROW(read(good + "1,2,3\n"), FormatError);
    std::string bad = good;
    bad.replace(bad.rfind("0.0000"), 1, "x");
    EXPECT_THROW(read(bad), FormatError);
}

TEST(Reports, TextAndKeyValue) {
    MarginReport r;
    r.id = InequalityId::eqth2;
    r.lhs = 1.0;
    r.rhs = 2.0;
    r.rel_margin = relative_margin(1.0, 2.0);
    r.extra["M"] = 3.0;
    EXPECT_EQ(r.rel_margin, 0.5);
    const std::string kv = report_kv(r);
    EXPECT_NE(kv.find("eqth2.verdict = pass\n"), std::string::npos);
    EXPECT_NE(kv.find("eqth2.M = 3.0000000000000000e+00\n"), std::string::npos);
    EXPECT_EQ(report_text(r).rfind("eqth2  PASS", 0), 0u);
}
