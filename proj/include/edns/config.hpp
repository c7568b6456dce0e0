#pragma once

// Flat run configuration: "key = value" lines, optional [section] headers,
// '#' comments. Keys are addressed as section.key; a dotted key outside any
// section is accepted as well.

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "edns/energy_ledger.hpp"
#include "edns/inequality_lab.hpp"

namespace edns {

class ConfigError : public Error {
public:
    using Error::Error;
};

enum class InitialKind { taylor_green, random_divfree, checkpoint };

struct InitialCondition {
    InitialKind kind = InitialKind::taylor_green;
    double amplitude = 1.0;
    std::optional<std::uint64_t> seed;  // defaults to the master seed
    double slope = -1.0;
    Band band;
    double rms = 0.5;
    std::string path;
};

struct RunConfig {
    GridSpec grid = GridSpec::make(16);
    FluidParams params;
    StepperConfig stepper;
    double t_end = 0.0;
    std::size_t sample_every = 1;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    InitialCondition ic;
    /// Empty means the default set for the viscosity mode.
    std::set<InequalityId> checks;
    double tolerance = kDefaultTolerance;
    double stability_delta = 1e-6;
    std::optional<std::uint64_t> stability_seed;

    [[nodiscard]] std::uint64_t ic_seed() const { return ic.seed.value_or(seed); }
    [[nodiscard]] std::uint64_t perturbation_seed() const { return stability_seed.value_or(lab::shard_seed(seed, 1)); }

    /// Enabled ledger checks; anisotropic runs (nu_3 = 0) default to the
    /// horizontal estimates.
    [[nodiscard]] std::set<InequalityId> enabled_checks() const {
        if (!checks.empty()) return checks;
        if (params.nu_3 == 0.0)
            return {InequalityId::eqth21, InequalityId::eqth22, InequalityId::continuity};
        if (params.isotropic())
            return {InequalityId::eqth1, InequalityId::eqth2, InequalityId::eqth3, InequalityId::continuity};
        return {InequalityId::eqth1, InequalityId::continuity};
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

struct ConfigEntry {
    std::string value;
    std::size_t line = 0;
};

class ConfigReader {
public:
    explicit ConfigReader(std::map<std::string, ConfigEntry> entries) : entries_(std::move(entries)) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const auto it = entries_.find(key);
        std::string where = it != entries_.end() ? " (line " + std::to_string(it->second.line) + ")" : "";
        throw ConfigError("config key '" + key + "'" + where + ": " + msg);
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    const std::string* raw(const std::string& key) {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return nullptr;
        used_.insert(key);
        return &it->second.value;
    }

    void number(const std::string& key, double& out) {
        if (const std::string* v = raw(key)) {
            double x = 0.0;
            const auto r = std::from_chars(v->data(), v->data() + v->size(), x);
            if (r.ec != std::errc() || r.ptr != v->data() + v->size()) fail(key, "expected a number, got '" + *v + "'");
            out = x;
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (const std::string* v = raw(key)) {
            std::uint64_t x = 0;
            const auto r = std::from_chars(v->data(), v->data() + v->size(), x);
            if (r.ec != std::errc() || r.ptr != v->data() + v->size())
                fail(key, "expected a nonnegative integer, got '" + *v + "'");
            out = static_cast<Int>(x);
        }
    }

    void text(const std::string& key, std::string& out) {
        if (const std::string* v = raw(key)) out = *v;
    }

    void reject_unused() const {
        for (const auto& [key, entry] : entries_)
            if (!used_.count(key)) fail(key, "unknown key");
    }

private:
    std::map<std::string, ConfigEntry> entries_;
    std::set<std::string> used_;
};

inline std::optional<InequalityId> inequality_from_name(std::string_view name) {
    for (auto id : {InequalityId::eqth1, InequalityId::eqth2, InequalityId::eqth3, InequalityId::eqth21,
                    InequalityId::eqth22, InequalityId::continuity})
        if (inequality_name(id) == name) return id;
    return std::nullopt;
}

}  // namespace detail

inline RunConfig parse_config(std::string_view text) {
    std::map<std::string, detail::ConfigEntry> entries;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string s = detail::trim(line);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = detail::trim(std::string_view(s).substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = detail::trim(std::string_view(s).substr(0, eq));
        const std::string value = detail::trim(std::string_view(s).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!section.empty() && section != "run") key = section + "." + key;
        if (entries.count(key))
            throw ConfigError("config key '" + key + "' (line " + std::to_string(lineno) + "): duplicate key");
        entries[key] = {value, lineno};
    }

    detail::ConfigReader rd(std::move(entries));
    RunConfig cfg;

    std::size_t n = cfg.grid.n_per_axis;
    double L = cfg.grid.box_length;
    rd.integer("grid.n", n);
    rd.number("grid.L", L);
    cfg.grid = GridSpec{n, L, 0.0};
    if (!(n >= 4 && (n & (n - 1)) == 0)) rd.fail("grid.n", "must be a power of two >= 4");
    if (!(L > 0.0)) rd.fail("grid.L", "must be positive");
    cfg.grid.friedrich_radius = cfg.grid.max_friedrich_radius();
    rd.number("grid.R", cfg.grid.friedrich_radius);
    try {
        cfg.grid.validate();
    } catch (const InvalidArgument& e) {
        rd.fail("grid.R", e.what());
    }

    rd.number("params.nu_h", cfg.params.nu_h);
    rd.number("params.nu_3", cfg.params.nu_3);
    rd.number("params.alpha", cfg.params.damping.alpha);
    rd.number("params.beta", cfg.params.damping.beta);
    rd.number("params.overflow_guard", cfg.params.damping.overflow_guard);
    if (!(cfg.params.nu_h > 0.0)) rd.fail("params.nu_h", "must be positive");
    if (!(cfg.params.nu_3 >= 0.0)) rd.fail("params.nu_3", "must be nonnegative");
    if (!(cfg.params.damping.alpha >= 0.0)) rd.fail("params.alpha", "must be nonnegative");
    if (!(cfg.params.damping.beta > 0.0)) rd.fail("params.beta", "must be positive");
    if (!(cfg.params.damping.overflow_guard > 0.0 && cfg.params.damping.overflow_guard < 709.0))
        rd.fail("params.overflow_guard", "must lie in (0, 709)");

    if (const std::string* v = rd.raw("stepper.dt"); v && *v != "auto") {
        double dt = 0.0;
        rd.number("stepper.dt", dt);
        if (!(dt > 0.0)) rd.fail("stepper.dt", "must be positive or 'auto'");
        cfg.stepper.dt = dt;
    }
    rd.number("stepper.cfl_safety", cfg.stepper.cfl_safety);
    rd.number("stepper.max_dt", cfg.stepper.max_dt);
    if (!(cfg.stepper.cfl_safety > 0.0 && cfg.stepper.cfl_safety <= 1.0))
        rd.fail("stepper.cfl_safety", "must lie in (0, 1]");
    if (!(cfg.stepper.max_dt > 0.0)) rd.fail("stepper.max_dt", "must be positive");
    if (const std::string* v = rd.raw("stepper.splitting")) {
        if (*v == "damping_outer") cfg.stepper.splitting = Splitting::damping_outer;
        else if (*v == "damping_inner") cfg.stepper.splitting = Splitting::damping_inner;
        else rd.fail("stepper.splitting", "expected damping_outer or damping_inner");
    }

    if (!rd.has("t_end")) throw ConfigError("config key 't_end': required");
    rd.number("t_end", cfg.t_end);
    if (!(cfg.t_end > 0.0)) rd.fail("t_end", "must be positive");
    rd.integer("sample_every", cfg.sample_every);
    if (cfg.sample_every == 0) rd.fail("sample_every", "must be positive");
    rd.integer("seed", cfg.seed);
    rd.text("output_dir", cfg.output_dir);

    if (const std::string* v = rd.raw("ic.type")) {
        if (*v == "taylor_green") cfg.ic.kind = InitialKind::taylor_green;
        else if (*v == "random_divfree") cfg.ic.kind = InitialKind::random_divfree;
        else if (*v == "checkpoint") cfg.ic.kind = InitialKind::checkpoint;
        else rd.fail("ic.type", "expected taylor_green, random_divfree or checkpoint");
    }
    rd.number("ic.amplitude", cfg.ic.amplitude);
    if (rd.has("ic.seed")) {
        std::uint64_t s = 0;
        rd.integer("ic.seed", s);
        cfg.ic.seed = s;
    }
    rd.number("ic.slope", cfg.ic.slope);
    if (const std::string* v = rd.raw("ic.band")) {
        const auto dots = v->find("..");
        if (dots == std::string::npos) rd.fail("ic.band", "expected 'k_min..k_max'");
        auto num = [&](std::string_view s, double& out) {
            const std::string t = detail::trim(s);
            const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
            if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
                rd.fail("ic.band", "expected 'k_min..k_max'");
        };
        num(std::string_view(*v).substr(0, dots), cfg.ic.band.k_min);
        num(std::string_view(*v).substr(dots + 2), cfg.ic.band.k_max);
        if (!(cfg.ic.band.k_min <= cfg.ic.band.k_max)) rd.fail("ic.band", "k_min must not exceed k_max");
    }
    rd.number("ic.rms", cfg.ic.rms);
    if (!(cfg.ic.rms > 0.0)) rd.fail("ic.rms", "must be positive");
    rd.text("ic.path", cfg.ic.path);
    if (cfg.ic.kind == InitialKind::checkpoint && cfg.ic.path.empty())
        throw ConfigError("config key 'ic.path': required when ic.type = checkpoint");

    if (const std::string* v = rd.raw("verify.checks"); v && *v != "auto") {
        std::istringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto id = detail::inequality_from_name(detail::trim(item));
            if (!id) rd.fail("verify.checks", "unknown check '" + detail::trim(item) + "'");
            cfg.checks.insert(*id);
        }
    }
    rd.number("verify.tol", cfg.tolerance);
    if (!(cfg.tolerance >= 0.0)) rd.fail("verify.tol", "must be nonnegative");
    const bool aniso_checks = cfg.checks.count(InequalityId::eqth21) || cfg.checks.count(InequalityId::eqth22);
    if (aniso_checks && cfg.params.nu_3 != 0.0)
        rd.fail("verify.checks", "eqth21/eqth22 need params.nu_3 = 0");
    const bool needs_damping = cfg.enabled_checks().count(InequalityId::eqth2) ||
                               cfg.enabled_checks().count(InequalityId::eqth3) ||
                               cfg.enabled_checks().count(InequalityId::eqth22);
    if (needs_damping && !cfg.params.damping_enabled())
        rd.fail("params.alpha", "the enabled checks divide by alpha beta^2; alpha must be positive");

    rd.number("stability.delta", cfg.stability_delta);
    if (!(cfg.stability_delta >= 0.0)) rd.fail("stability.delta", "must be nonnegative");
    if (rd.has("stability.seed")) {
        std::uint64_t s = 0;
        rd.integer("stability.seed", s);
        cfg.stability_seed = s;
    }

    rd.reject_unused();
    return cfg;
}

/// Inverse of parse_config for the keys it understands.
inline std::string format_config(const RunConfig& c) {
    std::ostringstream os;
    auto num = [](double v) { return format_double(v); };
    os << "t_end = " << num(c.t_end) << '\n'
       << "sample_every = " << c.sample_every << '\n'
       << "seed = " << c.seed << '\n'
       << "output_dir = " << c.output_dir << "\n\n"
       << "[grid]\nn = " << c.grid.n_per_axis << "\nL = " << num(c.grid.box_length)
       << "\nR = " << num(c.grid.friedrich_radius) << "\n\n"
       << "[params]\nnu_h = " << num(c.params.nu_h) << "\nnu_3 = " << num(c.params.nu_3)
       << "\nalpha = " << num(c.params.damping.alpha) << "\nbeta = " << num(c.params.damping.beta)
       << "\noverflow_guard = " << num(c.params.damping.overflow_guard) << "\n\n"
       << "[stepper]\ndt = " << (c.stepper.dt ? num(*c.stepper.dt) : std::string("auto"))
       << "\ncfl_safety = " << num(c.stepper.cfl_safety) << "\nmax_dt = " << num(c.stepper.max_dt)
       << "\nsplitting = "
       << (c.stepper.splitting == Splitting::damping_outer ? "damping_outer" : "damping_inner") << "\n\n"
       << "[ic]\ntype = ";
    switch (c.ic.kind) {
        case InitialKind::taylor_green: os << "taylor_green"; break;
        case InitialKind::random_divfree: os << "random_divfree"; break;
        case InitialKind::checkpoint: os << "checkpoint"; break;
    }
    os << "\namplitude = " << num(c.ic.amplitude) << "\nseed = " << c.ic_seed() << "\nslope = " << num(c.ic.slope)
       << "\nband = " << num(c.ic.band.k_min) << ".." << num(c.ic.band.k_max) << "\nrms = " << num(c.ic.rms) << '\n';
    if (!c.ic.path.empty()) os << "path = " << c.ic.path << '\n';
    os << "\n[verify]\nchecks = ";
    bool first = true;
    for (InequalityId id : c.enabled_checks()) {
        os << (first ? "" : ", ") << inequality_name(id);
        first = false;
    }
    os << "\ntol = " << num(c.tolerance) << "\n\n"
       << "[stability]\ndelta = " << num(c.stability_delta) << "\nseed = " << c.perturbation_seed() << '\n';
    return os.str();
}

}  // namespace edns
