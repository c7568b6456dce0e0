#pragma once

// Verification of the a priori energy inequalities on a recorded ledger.
//
// All checks are pure functions of the ledger rows (plus the initial datum and
// parameters), so persisted ledgers reproduce verdicts bit for bit.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "edns/integrator.hpp"

namespace edns {

enum class InequalityId { eqth1, eqth2, eqth3, eqth21, eqth22, stability_iso, continuity };

inline std::string_view inequality_name(InequalityId id) {
    switch (id) {
        case InequalityId::eqth1: return "eqth1";
        case InequalityId::eqth2: return "eqth2";
        case InequalityId::eqth3: return "eqth3";
        case InequalityId::eqth21: return "eqth21";
        case InequalityId::eqth22: return "eqth22";
        case InequalityId::stability_iso: return "stability_iso";
        case InequalityId::continuity: return "continuity";
    }
    return "unknown";
}

inline constexpr double kDefaultTolerance = 1e-3;

/// Worst-case outcome of one inequality lhs <= rhs over a run.
struct MarginReport {
    InequalityId id = InequalityId::eqth1;
    double worst_t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double rel_margin = 0.0;  // (rhs - lhs) / max(rhs, eps)
    double tolerance = kDefaultTolerance;
    bool pass = true;
    /// Additional diagnostics (fitted exponents, ratios), reported verbatim.
    std::map<std::string, double> extra;
};

inline double relative_margin(double lhs, double rhs) {
    return (rhs - lhs) / std::max(rhs, std::numeric_limits<double>::min());
}

/// lhs/rhs time series of one inequality, one entry per ledger row.
struct InequalitySeries {
    InequalityId id;
    std::vector<double> t, lhs, rhs;
};

/// Initial-datum quantities the right-hand sides need.
struct InitialData {
    double l2_sq = 0.0;
    double grad_sq = 0.0;
    double d3_sq = 0.0;

    static InitialData from(const SpectralField& u0) {
        const LedgerTerms q = spectral_terms(u0);
        return {q.l2_sq, q.grad_sq, q.d3_sq};
    }
    static InitialData from(const LedgerRow& row0) { return {row0.now.l2_sq, row0.now.grad_sq, row0.now.d3_sq}; }
};

namespace detail {
inline double alpha_beta_sq(const FluidParams& p) {
    const double a = p.damping.alpha;
    const double b = p.damping.beta;
    if (!(a > 0.0)) throw InvalidArgument("this inequality needs alpha > 0");
    return a * b * b;
}
inline void require_anisotropic(const FluidParams& p) {
    if (p.nu_3 != 0.0) throw InvalidArgument("anisotropic checks need a ledger produced with nu_3 = 0");
}
}  // namespace detail

/// Per-row sides of each energy inequality, with time measured from the
/// first row and u0 the state at that row.
///   eqth1/eqth21: |u|^2 + 2 int (nu_h |grad_h u|^2 + nu_3 |d3 u|^2) + 2 alpha int d0 <= |u0|^2
///   eqth2: |grad u|^2 + int |lap u|^2 + alpha beta int d2 + alpha int d1 <= |grad u0|^2 e^{t/(a b^2)}
///   eqth3: same left side <= |grad u0|^2 + |u0|^2/(a b^2)
///   eqth22: |d3 u|^2 + int |grad_h d3 u|^2 + alpha int d1_v + alpha beta int d2_v <= |d3 u0|^2 e^{6t/(a b^2)}
inline InequalitySeries inequality_series(InequalityId id, const std::vector<LedgerRow>& ledger,
                                          const InitialData& u0, const FluidParams& params) {
    InequalitySeries s{id, {}, {}, {}};
    const double a = params.damping.alpha;
    const double b = params.damping.beta;
    const double t0 = ledger.empty() ? 0.0 : ledger.front().t;
    for (const LedgerRow& r : ledger) {
        const double tau = r.t - t0;
        double lhs = 0.0;
        double rhs = 0.0;
        switch (id) {
            case InequalityId::eqth21:
                detail::require_anisotropic(params);
                [[fallthrough]];
            case InequalityId::eqth1:
                lhs = r.now.l2_sq + 2.0 * (params.nu_h * r.cum.grad_h_sq + params.nu_3 * r.cum.d3_sq) +
                      2.0 * a * r.cum.damping.d0;
                rhs = u0.l2_sq;
                break;
            case InequalityId::eqth2:
                lhs = r.now.grad_sq + r.cum.lap_sq + a * b * r.cum.damping.d2 + a * r.cum.damping.d1;
                rhs = u0.grad_sq * std::exp(tau / detail::alpha_beta_sq(params));
                break;
            case InequalityId::eqth3:
                lhs = r.now.grad_sq + r.cum.lap_sq + a * b * r.cum.damping.d2 + a * r.cum.damping.d1;
                rhs = u0.grad_sq + u0.l2_sq / detail::alpha_beta_sq(params);
                break;
            case InequalityId::eqth22:
                detail::require_anisotropic(params);
                lhs = r.now.d3_sq + r.cum.grad_h_d3_sq + a * r.cum.damping.d1_v + a * b * r.cum.damping.d2_v;
                rhs = u0.d3_sq * std::exp(6.0 * tau / detail::alpha_beta_sq(params));
                break;
            default:
                throw InvalidArgument("no ledger series for this inequality");
        }
        s.t.push_back(r.t);
        s.lhs.push_back(lhs);
        s.rhs.push_back(rhs);
    }
    return s;
}

inline MarginReport worst_margin(const InequalitySeries& s, double tol) {
    MarginReport rep;
    rep.id = s.id;
    rep.tolerance = tol;
    bool first = true;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        const double m = relative_margin(s.lhs[i], s.rhs[i]);
        if (first || m < rep.rel_margin) {
            rep.worst_t = s.t[i];
            rep.lhs = s.lhs[i];
            rep.rhs = s.rhs[i];
            rep.rel_margin = m;
            first = false;
        }
    }
    rep.pass = rep.rel_margin >= -tol;
    return rep;
}

/// Largest growth of |u| between adjacent rows (<= 0 for a monotone ledger).
inline double max_norm_increase(const std::vector<LedgerRow>& ledger) {
    double worst = ledger.size() < 2 ? 0.0 : -INFINITY;
    for (std::size_t m = 0; m + 1 < ledger.size(); ++m)
        worst = std::max(worst, std::sqrt(ledger[m + 1].now.l2_sq) - std::sqrt(ledger[m].now.l2_sq));
    return worst;
}

inline MarginReport verify_eqth1(const std::vector<LedgerRow>& ledger, double u0_l2_sq, const FluidParams& params,
                                 double tol = kDefaultTolerance) {
    MarginReport rep = worst_margin(inequality_series(InequalityId::eqth1, ledger, {u0_l2_sq, 0.0, 0.0}, params), tol);
    rep.extra["max_norm_increase"] = max_norm_increase(ledger);
    return rep;
}

inline MarginReport verify_eqth2(const std::vector<LedgerRow>& ledger, double grad_u0_sq, const FluidParams& params,
                                 double tol = kDefaultTolerance) {
    return worst_margin(inequality_series(InequalityId::eqth2, ledger, {0.0, grad_u0_sq, 0.0}, params), tol);
}

/// Right side M = |grad u0|^2 + |u0|^2 / (alpha beta^2), taken from u0 itself.
inline double eqth3_bound(const SpectralField& u0, const FluidParams& params) {
    const double g = sobolev_norm(u0, 1.0, true);
    const double l = sobolev_norm(u0, 0.0, false);
    return g * g + l * l / detail::alpha_beta_sq(params);
}

inline MarginReport verify_eqth3(const std::vector<LedgerRow>& ledger, const SpectralField& u0,
                                 const FluidParams& params, double tol = kDefaultTolerance) {
    const double g = sobolev_norm(u0, 1.0, true);
    const double l = sobolev_norm(u0, 0.0, false);
    MarginReport rep = worst_margin(inequality_series(InequalityId::eqth3, ledger, {l * l, g * g, 0.0}, params), tol);
    rep.extra["M"] = eqth3_bound(u0, params);
    return rep;
}

inline MarginReport verify_eqth21(const std::vector<LedgerRow>& ledger, double u0_l2_sq, const FluidParams& params,
                                  double tol = kDefaultTolerance) {
    return worst_margin(inequality_series(InequalityId::eqth21, ledger, {u0_l2_sq, 0.0, 0.0}, params), tol);
}

/// Least-squares rate gamma of log(|d3 u(t)|^2 / |d3 u(0)|^2) = gamma t.
inline double fitted_d3_exponent(const std::vector<LedgerRow>& ledger) {
    if (ledger.empty() || ledger.front().now.d3_sq <= 0.0) return 0.0;
    const double base = ledger.front().now.d3_sq;
    double num = 0.0, den = 0.0;
    for (const LedgerRow& r : ledger) {
        const double dt = r.t - ledger.front().t;
        if (r.now.d3_sq <= 0.0) continue;
        num += dt * std::log(r.now.d3_sq / base);
        den += dt * dt;
    }
    return den > 0.0 ? num / den : 0.0;
}

inline MarginReport verify_eqth22(const std::vector<LedgerRow>& ledger, double d3_u0_sq, const FluidParams& params,
                                  double tol = kDefaultTolerance) {
    MarginReport rep = worst_margin(inequality_series(InequalityId::eqth22, ledger, {0.0, 0.0, d3_u0_sq}, params), tol);
    rep.extra["stated_exponent"] = 6.0 / detail::alpha_beta_sq(params);
    rep.extra["fitted_exponent"] = fitted_d3_exponent(ledger);
    return rep;
}

/// Per-interval energy budget residual between consecutive rows:
/// (|u_{m+1}|^2 - |u_m|^2)/2 + (t_{m+1}-t_m)/2 (D_m + D_{m+1}),
/// D = nu_h |grad_h u|^2 + nu_3 |d3 u|^2 + alpha d0.
inline std::vector<double> budget_residuals(const std::vector<LedgerRow>& ledger, const FluidParams& params) {
    std::vector<double> out;
    auto rate = [&](const LedgerRow& r) {
        return params.nu_h * r.now.grad_h_sq + params.nu_3 * r.now.d3_sq + params.damping.alpha * r.now.damping.d0;
    };
    for (std::size_t m = 0; m + 1 < ledger.size(); ++m) {
        const LedgerRow& a = ledger[m];
        const LedgerRow& b = ledger[m + 1];
        out.push_back(0.5 * (b.now.l2_sq - a.now.l2_sq) + 0.5 * (b.t - a.t) * (rate(a) + rate(b)));
    }
    return out;
}

/// L2 no-jump diagnostic. Rates |d|u||/dt between adjacent samples must stay
/// below C_lip = 2 x the first-interval rate, and no increment may exceed
/// 10x the median of the increments before it.
inline MarginReport continuity_check(const std::vector<LedgerRow>& ledger, double tol = kDefaultTolerance) {
    MarginReport rep;
    rep.id = InequalityId::continuity;
    rep.tolerance = tol;
    std::vector<double> inc;
    std::vector<double> rate;
    for (std::size_t m = 0; m + 1 < ledger.size(); ++m) {
        const double d = std::abs(std::sqrt(ledger[m + 1].now.l2_sq) - std::sqrt(ledger[m].now.l2_sq));
        const double dt = ledger[m + 1].t - ledger[m].t;
        inc.push_back(d);
        rate.push_back(dt > 0.0 ? d / dt : 0.0);
    }
    rep.extra["max_increment"] = inc.empty() ? 0.0 : *std::max_element(inc.begin(), inc.end());
    if (inc.empty()) return rep;
    const double c_lip = 2.0 * rate.front();
    rep.rhs = c_lip;
    rep.lhs = 0.0;
    std::size_t flagged = 0;
    std::vector<double> seen;
    for (std::size_t m = 0; m < inc.size(); ++m) {
        if (rate[m] > rep.lhs) {
            rep.lhs = rate[m];
            rep.worst_t = ledger[m + 1].t;
        }
        if (seen.size() >= 3) {
            std::vector<double> tmp = seen;
            std::nth_element(tmp.begin(), tmp.begin() + tmp.size() / 2, tmp.end());
            if (inc[m] > 10.0 * tmp[tmp.size() / 2]) ++flagged;
        }
        seen.push_back(inc[m]);
    }
    rep.rel_margin = c_lip > 0.0 ? relative_margin(rep.lhs, rep.rhs) : (rep.lhs > 0.0 ? -1.0 : 0.0);
    rep.extra["c_lip"] = c_lip;
    rep.extra["flagged_jumps"] = static_cast<double>(flagged);
    rep.pass = flagged == 0 && rep.rel_margin >= -tol;
    return rep;
}

struct StabilityResult {
    MarginReport report;
    double sup_ratio = 0.0;  // sup_{t>0} |w|^2 / (|w(0)|^2 e^{18t/(a b^2)})
    double fitted_exponent = 0.0;
    std::vector<double> t, w_sq, bound;
};

namespace detail {
inline StabilityResult pair_run(const SpectralField& u0, double delta, std::uint64_t seed, const FluidParams& params,
                                const StepperConfig& cfg, double t_end, double bound_rate) {
    params.validate();
    cfg.validate();
    SimulationState su{0.0, u0, 0};
    SimulationState sv{0.0, perturb(u0, delta, seed), 0};
    StabilityResult res;
    // The bound's prefactor is the measured |w(0)|^2, which equals delta^2 up
    // to rounding; using it makes the t = 0 comparison exact.
    double w0_sq = 0.0;
    auto sample = [&](double t) {
        const double w = l2_norm(axpy(su.u_hat, -1.0, sv.u_hat));
        if (res.t.empty()) w0_sq = w * w;
        res.t.push_back(t);
        res.w_sq.push_back(w * w);
        res.bound.push_back(w0_sq * std::exp(bound_rate * t));
    };
    sample(0.0);
    const double snap = 1e-12 * std::max(1.0, std::abs(t_end));
    while (t_end - su.t > snap) {
        double dt = cfg.dt ? *cfg.dt : cfl_dt(su, params, cfg);
        if (su.t + dt > t_end - snap) dt = t_end - su.t;
        auto other = std::async(std::launch::async, [&] { return step(sv, params, dt, cfg.splitting); });
        SimulationState nu = step(su, params, dt, cfg.splitting);
        sv = other.get();
        su = std::move(nu);
        sample(su.t);
    }
    MarginReport& rep = res.report;
    rep.id = InequalityId::stability_iso;
    rep.tolerance = 0.0;
    rep.pass = true;
    // The ratio is exactly 1 at t = 0, so the supremum runs over later samples.
    double worst = -1.0;
    for (std::size_t i = 0; i < res.t.size(); ++i) {
        if (res.w_sq[i] > res.bound[i]) rep.pass = false;
        if (i == 0 && res.t.size() > 1) continue;
        const double ratio = res.bound[i] > 0.0 ? res.w_sq[i] / res.bound[i] : (res.w_sq[i] > 0.0 ? INFINITY : 0.0);
        if (ratio > worst) {
            worst = ratio;
            rep.worst_t = res.t[i];
            rep.lhs = res.w_sq[i];
            rep.rhs = res.bound[i];
        }
    }
    res.sup_ratio = worst;
    rep.rel_margin = rep.rhs > 0.0 ? relative_margin(rep.lhs, rep.rhs) : 0.0;
    // Least-squares growth rate of log |w|^2.
    double num = 0.0, den = 0.0;
    if (!res.w_sq.empty() && res.w_sq.front() > 0.0) {
        for (std::size_t i = 0; i < res.t.size(); ++i) {
            if (res.w_sq[i] <= 0.0) continue;
            num += res.t[i] * std::log(res.w_sq[i] / res.w_sq.front());
            den += res.t[i] * res.t[i];
        }
    }
    res.fitted_exponent = den > 0.0 ? num / den : 0.0;
    rep.extra["sup_ratio"] = res.sup_ratio;
    rep.extra["fitted_exponent"] = res.fitted_exponent;
    return res;
}
}  // namespace detail

/// Runs u from u0 and v from perturb(u0, delta, seed) on a shared time grid
/// (dt chosen from u) and checks |u - v|^2 <= |w(0)|^2 e^{18t/(alpha beta^2)}
/// at every step. Isotropic systems only.
inline StabilityResult stability_experiment(const SpectralField& u0, double delta, std::uint64_t seed,
                                            const FluidParams& params, const StepperConfig& cfg, double t_end) {
    if (!params.isotropic()) throw InvalidArgument("stability bound applies to the isotropic system");
    StabilityResult r = detail::pair_run(u0, delta, seed, params, cfg, t_end, 18.0 / detail::alpha_beta_sq(params));
    r.report.extra["bound_exponent"] = 18.0 / detail::alpha_beta_sq(params);
    return r;
}

/// Anisotropic pair: the bound's constant is not explicit, so only the
/// empirical growth exponent of |w|^2 is reported (verdict always pass).
inline StabilityResult anisotropic_pair_exponent(const SpectralField& u0, double delta, std::uint64_t seed,
                                                 const FluidParams& params, const StepperConfig& cfg, double t_end) {
    StabilityResult r = detail::pair_run(u0, delta, seed, params, cfg, t_end, 0.0);
    r.report.pass = true;
    return r;
}

// ---------------------------------------------------------------------------
// Ledger CSV: fixed header, 17 significant digits, one row per sample.

inline std::vector<std::string> ledger_columns() {
    std::vector<std::string> cols{"t"};
    for (auto n : kLedgerTermNames) cols.emplace_back(n);
    for (auto n : kLedgerTermNames) cols.push_back("cum_" + std::string(n));
    return cols;
}

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 16);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw FormatError("malformed number '" + std::string(s) + "'");
    return v;
}

inline std::vector<double> row_values(const LedgerRow& r) {
    std::vector<double> v{r.t};
    for (double x : flatten(r.now)) v.push_back(x);
    for (double x : flatten(r.cum)) v.push_back(x);
    return v;
}

inline void write_ledger_csv(std::ostream& os, const std::vector<LedgerRow>& ledger) {
    const auto cols = ledger_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
    os << '\n';
    for (const LedgerRow& r : ledger) {
        const auto v = row_values(r);
        for (std::size_t c = 0; c < v.size(); ++c) os << (c ? "," : "") << format_double(v[c]);
        os << '\n';
    }
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

inline std::vector<LedgerRow> read_ledger_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("empty ledger");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split_csv(line) != ledger_columns()) throw FormatError("ledger header does not match the expected columns");
    std::vector<LedgerRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 1 + 2 * kLedgerTermCount)
            throw FormatError("ledger line " + std::to_string(lineno) + " has the wrong column count");
        LedgerRow r;
        std::array<double, kLedgerTermCount> now{}, cum{};
        r.t = parse_double(cells[0]);
        for (std::size_t q = 0; q < kLedgerTermCount; ++q) {
            now[q] = parse_double(cells[1 + q]);
            cum[q] = parse_double(cells[1 + kLedgerTermCount + q]);
        }
        r.now = unflatten(now);
        r.cum = unflatten(cum);
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Reports.

inline std::string report_text(const MarginReport& r) {
    std::ostringstream os;
    os << inequality_name(r.id) << "  " << (r.pass ? "PASS" : "FAIL") << "  worst_t=" << format_double(r.worst_t)
       << "  lhs=" << format_double(r.lhs) << "  rhs=" << format_double(r.rhs)
       << "  rel_margin=" << format_double(r.rel_margin) << "  tol=" << format_double(r.tolerance);
    for (const auto& [k, v] : r.extra) os << "  " << k << "=" << format_double(v);
    return os.str();
}

/// Machine-readable key = value lines, prefixed by the inequality name.
inline std::string report_kv(const MarginReport& r) {
    std::ostringstream os;
    const std::string p(inequality_name(r.id));
    os << p << ".verdict = " << (r.pass ? "pass" : "fail") << '\n'
       << p << ".worst_t = " << format_double(r.worst_t) << '\n'
       << p << ".lhs = " << format_double(r.lhs) << '\n'
       << p << ".rhs = " << format_double(r.rhs) << '\n'
       << p << ".rel_margin = " << format_double(r.rel_margin) << '\n'
       << p << ".tolerance = " << format_double(r.tolerance) << '\n';
    for (const auto& [k, v] : r.extra) os << p << '.' << k << " = " << format_double(v) << '\n';
    return os.str();
}

}  // namespace edns
