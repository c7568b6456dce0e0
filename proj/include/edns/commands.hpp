#pragma once

// Subcommand bodies of the edns tool. Each returns the process exit code:
// 0 when every enabled check passes, 1 when a check fails, 2 on error.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "edns/checkpoint.hpp"
#include "edns/config.hpp"

namespace edns {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitError = 2;

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

/// Initial state described by the config. Checkpoints must match the grid.
inline SimulationState initial_state(const RunConfig& cfg) {
    switch (cfg.ic.kind) {
        case InitialKind::taylor_green:
            return {0.0, taylor_green(cfg.grid, cfg.ic.amplitude), 0};
        case InitialKind::random_divfree:
            return {0.0, random_divfree(cfg.grid, cfg.ic_seed(), cfg.ic.slope, cfg.ic.band, cfg.ic.rms), 0};
        case InitialKind::checkpoint: {
            SimulationState s = load_checkpoint(cfg.ic.path);
            if (!(s.u_hat.grid == cfg.grid))
                throw ConfigError("config key 'ic.path': checkpoint grid differs from the [grid] section");
            return s;
        }
    }
    throw ConfigError("config key 'ic.type': unsupported");
}

/// Runs the enabled checks on a ledger whose first row is the state u0.
inline std::vector<MarginReport> verify_ledger(const std::vector<LedgerRow>& ledger, const SpectralField& u0,
                                               const RunConfig& cfg) {
    const InitialData d = InitialData::from(u0);
    std::vector<MarginReport> out;
    for (InequalityId id : cfg.enabled_checks()) {
        switch (id) {
            case InequalityId::eqth1: out.push_back(verify_eqth1(ledger, d.l2_sq, cfg.params, cfg.tolerance)); break;
            case InequalityId::eqth2: out.push_back(verify_eqth2(ledger, d.grad_sq, cfg.params, cfg.tolerance)); break;
            case InequalityId::eqth3: out.push_back(verify_eqth3(ledger, u0, cfg.params, cfg.tolerance)); break;
            case InequalityId::eqth21: out.push_back(verify_eqth21(ledger, d.l2_sq, cfg.params, cfg.tolerance)); break;
            case InequalityId::eqth22: out.push_back(verify_eqth22(ledger, d.d3_sq, cfg.params, cfg.tolerance)); break;
            case InequalityId::continuity: out.push_back(continuity_check(ledger, cfg.tolerance)); break;
            case InequalityId::stability_iso: break;
        }
    }
    return out;
}

inline bool all_pass(const std::vector<MarginReport>& reports) {
    for (const auto& r : reports)
        if (!r.pass) return false;
    return true;
}

inline void write_reports(const std::filesystem::path& dir, const std::vector<MarginReport>& reports) {
    std::ofstream txt(dir / "report.txt");
    std::ofstream kv(dir / "report.kv");
    for (const auto& r : reports) {
        txt << report_text(r) << '\n';
        kv << report_kv(r);
    }
    kv << "overall.verdict = " << (all_pass(reports) ? "pass" : "fail") << '\n';
    if (!txt || !kv) throw FormatError("failed to write reports in " + dir.string());
}

inline void write_ledger_file(const std::filesystem::path& path, const std::vector<LedgerRow>& ledger) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    write_ledger_csv(os, ledger);
}

inline std::vector<LedgerRow> read_ledger_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    return read_ledger_csv(is);
}

/// Writes ledger.csv, u0.edns, final.edns, run.cfg, report.txt and report.kv
/// into cfg.output_dir.
inline int cmd_run(const RunConfig& cfg, std::ostream& out) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    {
        std::ofstream c(dir / "run.cfg");
        c << format_config(cfg);
    }
    const SimulationState s0 = initial_state(cfg);
    save_checkpoint((dir / "u0.edns").string(), s0);
    RunResult res;
    try {
        res = run(s0, cfg.params, cfg.stepper, cfg.t_end, cfg.sample_every);
    } catch (const BlowUpError& e) {
        write_ledger_file(dir / "ledger.csv", e.ledger());
        save_checkpoint((dir / "final.edns").string(), e.last_state());
        out << "blow-up at t=" << format_double(e.last_state().t) << ": " << e.what() << '\n';
        return kExitError;
    }
    write_ledger_file(dir / "ledger.csv", res.ledger);
    save_checkpoint((dir / "final.edns").string(), res.final_state);
    const auto reports = verify_ledger(res.ledger, s0.u_hat, cfg);
    write_reports(dir, reports);
    out << "steps " << res.final_state.step_index << "  rows " << res.ledger.size() << "  t_end "
        << format_double(res.final_state.t) << '\n';
    for (const auto& r : reports) out << report_text(r) << '\n';
    return all_pass(reports) ? kExitPass : kExitFail;
}

/// Re-runs the checks from persisted artifacts.
inline int cmd_verify(const std::filesystem::path& ledger_path, const std::filesystem::path& u0_path,
                      const RunConfig& cfg, std::ostream& out) {
    const auto ledger = read_ledger_file(ledger_path);
    const SimulationState s0 = load_checkpoint(u0_path.string());
    const auto reports = verify_ledger(ledger, s0.u_hat, cfg);
    for (const auto& r : reports) out << report_text(r) << '\n';
    return all_pass(reports) ? kExitPass : kExitFail;
}

inline const std::vector<std::string>& lemma_suites() {
    static const std::vector<std::string> s{"lemma4", "lemma44", "c2k", "gronwall"};
    return s;
}

inline lab::CampaignResult run_lemma_suite(const std::string& suite, std::size_t trials, std::uint64_t seed) {
    if (suite == "lemma4") return lab::lemma4_campaign(trials, lab::shard_seed(seed, 100));
    if (suite == "lemma44") return lab::lemma44_campaign(trials, lab::shard_seed(seed, 101));
    if (suite == "c2k") return lab::c2k_campaign(20);
    if (suite == "gronwall")
        return lab::gronwall_campaign(std::max<std::size_t>(1, trials / 1000), lab::shard_seed(seed, 102));
    throw InvalidArgument("unknown suite '" + suite + "'");
}

/// Runs one suite or all; prints one table row per suite.
inline int cmd_lemmas(const std::string& suite, std::size_t trials, std::uint64_t seed, std::ostream& out) {
    std::vector<std::string> suites;
    if (suite == "all") suites = lemma_suites();
    else suites.push_back(suite);
    bool ok = true;
    char line[256];
    std::snprintf(line, sizeof line, "%-9s %10s %9s %9s %14s %14s\n", "suite", "trials", "failures", "rejected",
                  "worst_margin", "worst_param");
    out << line;
    for (const auto& s : suites) {
        const lab::CampaignResult r = run_lemma_suite(s, trials, seed);
        ok = ok && r.failures == 0;
        std::snprintf(line, sizeof line, "%-9s %10zu %9zu %9zu %14.6e %14.6g\n", s.c_str(), r.trials, r.failures,
                      r.rejected, r.has_worst ? r.worst.normalized() : 0.0, r.has_worst ? r.worst.parameter : 0.0);
        out << line;
    }
    return ok ? kExitPass : kExitFail;
}

/// Isotropic: checks the explicit stability bound. Otherwise reports the
/// empirical growth exponent of |w|^2 only.
inline int cmd_stability(const RunConfig& cfg, double delta, std::uint64_t seed, std::ostream& out) {
    const SimulationState s0 = initial_state(cfg);
    if (cfg.params.isotropic()) {
        const StabilityResult r = stability_experiment(s0.u_hat, delta, seed, cfg.params, cfg.stepper, cfg.t_end);
        out << report_text(r.report) << '\n';
        out << "sup_ratio " << format_double(r.sup_ratio) << '\n';
        return r.report.pass ? kExitPass : kExitFail;
    }
    const StabilityResult r = anisotropic_pair_exponent(s0.u_hat, delta, seed, cfg.params, cfg.stepper, cfg.t_end);
    out << "anisotropic pair: fitted exponent of |w|^2 = " << format_double(r.fitted_exponent) << '\n';
    return kExitPass;
}

/// Tab-separated selected columns plus the lhs/rhs series of every check
/// the config enables (continuity excluded).
inline int cmd_plotdata(const std::filesystem::path& ledger_path, const std::vector<std::string>& columns,
                        const RunConfig& cfg, std::ostream& out) {
    const auto ledger = read_ledger_file(ledger_path);
    const auto names = ledger_columns();
    std::vector<std::size_t> idx;
    for (const auto& c : columns) {
        const auto it = std::find(names.begin(), names.end(), c);
        if (it == names.end()) throw InvalidArgument("unknown ledger column '" + c + "'");
        idx.push_back(static_cast<std::size_t>(it - names.begin()));
    }
    std::vector<InequalitySeries> series;
    if (!ledger.empty()) {
        const InitialData d = InitialData::from(ledger.front());
        for (InequalityId id : cfg.enabled_checks())
            if (id != InequalityId::continuity) series.push_back(inequality_series(id, ledger, d, cfg.params));
    }
    bool first = true;
    auto sep = [&]() -> std::ostream& {
        if (!first) out << '\t';
        first = false;
        return out;
    };
    for (std::size_t i : idx) sep() << names[i];
    for (const auto& s : series) sep() << inequality_name(s.id) << "_lhs\t" << inequality_name(s.id) << "_rhs";
    out << '\n';
    for (std::size_t m = 0; m < ledger.size(); ++m) {
        first = true;
        const auto v = row_values(ledger[m]);
        for (std::size_t i : idx) sep() << format_double(v[i]);
        for (const auto& s : series) sep() << format_double(s.lhs[m]) << '\t' << format_double(s.rhs[m]);
        out << '\n';
    }
    return kExitPass;
}

}  // namespace edns
