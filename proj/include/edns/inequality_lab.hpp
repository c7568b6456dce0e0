#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "edns/error.hpp"
#include "edns/parallel.hpp"

namespace edns::lab {

/// One evaluation of an inequality written as lhs >= rhs.
struct LemmaMargin {
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // lhs - rhs
    std::vector<double> x;
    std::vector<double> y;
    double parameter = 0.0;

    [[nodiscard]] double scale() const { return std::max({1.0, std::abs(lhs), std::abs(rhs)}); }
    [[nodiscard]] double tolerance() const { return 1e-12 * scale(); }
    [[nodiscard]] double normalized() const { return margin / scale(); }
    [[nodiscard]] bool pass() const { return margin >= -tolerance(); }
};

inline LemmaMargin make_margin(double lhs, double rhs, std::span<const double> x, std::span<const double> y,
                               double parameter) {
    return {lhs, rhs, lhs - rhs, {x.begin(), x.end()}, {y.begin(), y.end()}, parameter};
}

/// C_alpha = min(1/18, 2^-(alpha+1)).
inline double c_alpha(double alpha) {
    if (!(alpha > 0.0)) throw InvalidArgument("c_alpha needs alpha > 0");
    return std::min(1.0 / 18.0, std::exp2(-(alpha + 1.0)));
}

namespace detail {
inline void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionMismatch("x and y must have the same dimension");
    if (x.empty() || x.size() > 3) throw InvalidArgument("dimension must be 1, 2 or 3");
}
inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
inline double diff_sq(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}
}  // namespace detail

/// (|x|^a x - |y|^a y).(x - y) >= C_a (|x|^a + |y|^a) |x - y|^2.
inline LemmaMargin lemma4_margin(std::span<const double> x, std::span<const double> y, double alpha) {
    detail::check_pair(x, y);
    const double px = std::pow(std::sqrt(detail::dot(x, x)), alpha);
    const double py = std::pow(std::sqrt(detail::dot(y, y)), alpha);
    double lhs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) lhs += (px * x[i] - py * y[i]) * (x[i] - y[i]);
    const double rhs = c_alpha(alpha) * (px + py) * detail::diff_sq(x, y);
    return make_margin(lhs, rhs, x, y, alpha);
}

/// ((e^{b|x|^2}-1)x - (e^{b|y|^2}-1)y).(x-y) >= 2/9 (expm1(b|x|^2/4) + expm1(b|y|^2/4)) |x-y|^2.
inline LemmaMargin lemma44_margin(std::span<const double> x, std::span<const double> y, double beta,
                                  double overflow_guard = 700.0) {
    detail::check_pair(x, y);
    if (!(beta > 0.0)) throw InvalidArgument("lemma44 needs beta > 0");
    const double ex = beta * detail::dot(x, x);
    const double ey = beta * detail::dot(y, y);
    if (ex > overflow_guard || ey > overflow_guard) throw OverflowGuardError(std::max(ex, ey), overflow_guard);
    const double fx = std::expm1(ex);
    const double fy = std::expm1(ey);
    double lhs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) lhs += (fx * x[i] - fy * y[i]) * (x[i] - y[i]);
    const double rhs = (2.0 / 9.0) * (std::expm1(0.25 * ex) + std::expm1(0.25 * ey)) * detail::diff_sq(x, y);
    return make_margin(lhs, rhs, x, y, beta);
}

/// Exact rational comparison C_{2k} >= (2/9) 4^-k.
inline bool c2k_bound_holds_exactly(int k) {
    if (k < 1 || k > 30) throw InvalidArgument("c2k check supports 1 <= k <= 30");
    using Wide = unsigned __int128;
    // C_{2k} = min(1/18, 1/2^{2k+1}) = 1/den_c ; bound = 2/(9*4^k).
    const Wide pow4 = Wide{1} << (2 * k);
    const Wide den_c = std::max<Wide>(18, Wide{2} * pow4);
    const Wide den_b = Wide{9} * pow4;
    // 1/den_c >= 2/den_b  <=>  den_b >= 2*den_c
    return den_b >= Wide{2} * den_c;
}

inline LemmaMargin c2k_bound_check(int k) {
    if (k < 1 || k > 30) throw InvalidArgument("c2k check supports 1 <= k <= 30");
    const double lhs = c_alpha(2.0 * k);
    const double rhs = 2.0 / (9.0 * std::ldexp(1.0, 2 * k));
    const double kk = k;
    return make_margin(lhs, rhs, std::span<const double>(&kk, 1), {}, 2.0 * k);
}

/// Cumulative trapezoid integral on a uniform grid with spacing dt.
inline std::vector<double> cumulative_trapezoid(std::span<const double> v, double dt) {
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) out[i] = out[i - 1] + 0.5 * dt * (v[i - 1] + v[i]);
    return out;
}

/// Checks the Gronwall variant on samples over a uniform grid of [0, T]:
/// if f(t) + int g <= A + int h f at every sample, then
/// f(t) + int g <= A exp(int h). Integrals use the trapezoid rule.
/// Returns the worst sample with lhs = A exp(int h), rhs = f + int g.
/// Throws HypothesisViolated when the premise fails (input out of scope).
inline LemmaMargin gronwall_variant_check(std::span<const double> f, std::span<const double> g,
                                          std::span<const double> h, double A, double T) {
    if (f.size() != g.size() || f.size() != h.size()) throw DimensionMismatch("f, g, h need equal sample counts");
    if (f.size() < 2) throw InvalidArgument("need at least two samples");
    if (!(A > 0.0) || !(T > 0.0)) throw InvalidArgument("A and T must be positive");
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] < 0.0 || g[i] < 0.0 || h[i] < 0.0) throw HypothesisViolated("samples must be nonnegative");
    const double dt = T / static_cast<double>(f.size() - 1);
    std::vector<double> hf(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) hf[i] = h[i] * f[i];
    const auto G = cumulative_trapezoid(g, dt);
    const auto H = cumulative_trapezoid(h, dt);
    const auto HF = cumulative_trapezoid(hf, dt);

    for (std::size_t i = 0; i < f.size(); ++i) {
        const double left = f[i] + G[i];
        const double right = A + HF[i];
        if (left - right > 1e-12 * std::max({1.0, std::abs(left), std::abs(right)}))
            throw HypothesisViolated("Gronwall hypothesis fails at sample " + std::to_string(i));
    }
    LemmaMargin worst;
    bool first = true;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double t = dt * static_cast<double>(i);
        LemmaMargin m = make_margin(A * std::exp(H[i]), f[i] + G[i], std::span<const double>(&t, 1), {}, A);
        if (first || m.normalized() < worst.normalized()) {
            worst = std::move(m);
            first = false;
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Randomized falsification campaigns.

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of shard `index`, derived only from the master seed.
inline std::uint64_t shard_seed(std::uint64_t master, std::size_t index) {
    return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
}

struct CampaignResult {
    std::string suite;
    std::size_t trials = 0;
    std::size_t failures = 0;
    std::size_t rejected = 0;
    LemmaMargin worst;
    bool has_worst = false;

    void absorb(const LemmaMargin& m) {
        ++trials;
        if (!m.pass()) ++failures;
        if (!has_worst || m.normalized() < worst.normalized()) {
            worst = m;
            has_worst = true;
        }
    }
    void merge(const CampaignResult& other) {
        trials += other.trials;
        failures += other.failures;
        rejected += other.rejected;
        if (other.has_worst && (!has_worst || other.worst.normalized() < worst.normalized())) {
            worst = other.worst;
            has_worst = true;
        }
    }
};

/// Geometric configurations of (x, y) exercised by the samplers. The
/// independent configurations need d >= 2.
enum class PairShape {
    uniform,
    antiparallel,
    parallel,
    obtuse_independent,
    acute_small,  // x.y > 0, |y| <= |x|/2
    acute_large,  // x.y > 0, |x|/2 < |y| <= |x|
    near_diagonal,
};

inline constexpr std::array<PairShape, 7> kAllShapes = {
    PairShape::uniform,     PairShape::antiparallel, PairShape::parallel,    PairShape::obtuse_independent,
    PairShape::acute_small, PairShape::acute_large,  PairShape::near_diagonal};

struct PairSample {
    std::array<double, 3> x{};
    std::array<double, 3> y{};
    std::size_t dim = 3;
    [[nodiscard]] std::span<const double> xs() const { return {x.data(), dim}; }
    [[nodiscard]] std::span<const double> ys() const { return {y.data(), dim}; }
};

/// Draws a pair of the requested shape with every coordinate in [-radius, radius].
template <class Rng>
PairSample sample_pair(Rng& rng, std::size_t dim, PairShape shape, double radius) {
    std::uniform_real_distribution<double> coord(-radius, radius);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    PairSample s;
    s.dim = dim;
    for (std::size_t i = 0; i < dim; ++i) {
        s.x[i] = coord(rng);
        s.y[i] = coord(rng);
    }
    const auto xs = std::span<double>(s.x.data(), dim);
    const auto ys = std::span<double>(s.y.data(), dim);
    const double nx = std::sqrt(detail::dot(xs, xs));
    if (dim == 1 && (shape == PairShape::obtuse_independent || shape == PairShape::acute_small ||
                     shape == PairShape::acute_large))
        shape = PairShape::parallel;
    switch (shape) {
        case PairShape::uniform:
            break;
        case PairShape::antiparallel: {
            const double lambda = unit(rng);
            for (std::size_t i = 0; i < dim; ++i) s.y[i] = -lambda * s.x[i];
            break;
        }
        case PairShape::parallel: {
            const double lambda = unit(rng);
            for (std::size_t i = 0; i < dim; ++i) s.y[i] = lambda * s.x[i];
            break;
        }
        case PairShape::obtuse_independent:
        case PairShape::acute_small:
        case PairShape::acute_large: {
            if (nx == 0.0) break;
            const double proj = detail::dot(xs, ys) / (nx * nx);
            const bool want_acute = shape != PairShape::obtuse_independent;
            if ((proj > 0.0) != want_acute)
                for (std::size_t i = 0; i < dim; ++i) s.y[i] -= 2.0 * proj * s.x[i];
            if (shape != PairShape::obtuse_independent) {
                const double ny = std::sqrt(detail::dot(ys, ys));
                if (ny == 0.0) break;
                const double r = shape == PairShape::acute_small ? 0.5 * unit(rng) : 0.5 + 0.5 * unit(rng);
                for (std::size_t i = 0; i < dim; ++i) s.y[i] *= r * nx / ny;
            }
            break;
        }
        case PairShape::near_diagonal: {
            std::uniform_real_distribution<double> tiny(-1e-8, 1e-8);
            for (std::size_t i = 0; i < dim; ++i) s.y[i] = s.x[i] + tiny(rng);
            break;
        }
    }
    return s;
}

namespace detail {
template <class TrialFn>
CampaignResult sharded_campaign(const std::string& suite, std::size_t trials, std::uint64_t seed,
                                TrialFn&& trial) {
    constexpr std::size_t kShards = 16;
    std::vector<CampaignResult> parts(kShards);
    for_each_chunk(kShards, [&](std::size_t shard) {
        std::mt19937_64 rng(shard_seed(seed, shard));
        const std::size_t begin = trials * shard / kShards;
        const std::size_t end = trials * (shard + 1) / kShards;
        for (std::size_t t = begin; t < end; ++t) trial(rng, t, parts[shard]);
    });
    CampaignResult out;
    out.suite = suite;
    for (const auto& p : parts) out.merge(p);
    return out;
}
}  // namespace detail

inline constexpr std::array<double, 5> kLemma4Alphas = {0.5, 1.0, 2.0, 3.0, 6.0};
inline constexpr std::array<double, 3> kLemma44Betas = {0.25, 1.0, 4.0};

/// lemma4 over d in {1,2,3}, alpha in kLemma4Alphas, all pair shapes,
/// coordinates uniform in [-10, 10].
inline CampaignResult lemma4_campaign(std::size_t trials, std::uint64_t seed) {
    return detail::sharded_campaign("lemma4", trials, seed, [](auto& rng, std::size_t t, CampaignResult& acc) {
        const std::size_t dim = 1 + t % 3;
        const double alpha = kLemma4Alphas[(t / 3) % kLemma4Alphas.size()];
        const PairShape shape = kAllShapes[(t / 15) % kAllShapes.size()];
        const PairSample s = sample_pair(rng, dim, shape, 10.0);
        acc.absorb(lemma4_margin(s.xs(), s.ys(), alpha));
    });
}

/// lemma44 over beta in kLemma44Betas with |x|, |y| <= 5.
inline CampaignResult lemma44_campaign(std::size_t trials, std::uint64_t seed) {
    return detail::sharded_campaign("lemma44", trials, seed, [](auto& rng, std::size_t t, CampaignResult& acc) {
        const std::size_t dim = 1 + t % 3;
        const double beta = kLemma44Betas[(t / 3) % kLemma44Betas.size()];
        const PairShape shape = kAllShapes[(t / 9) % kAllShapes.size()];
        // Coordinates in [-5/sqrt(3), 5/sqrt(3)] keep |x|, |y| <= 5.
        const PairSample s = sample_pair(rng, dim, shape, 5.0 / std::sqrt(3.0));
        acc.absorb(lemma44_margin(s.xs(), s.ys(), beta));
    });
}

inline CampaignResult c2k_campaign(int k_max = 20) {
    CampaignResult out;
    out.suite = "c2k";
    for (int k = 1; k <= k_max; ++k) {
        LemmaMargin m = c2k_bound_check(k);
        out.absorb(m);
        if (!c2k_bound_holds_exactly(k)) ++out.failures;
    }
    return out;
}

/// A sampled witness for the Gronwall variant.
struct GronwallWitness {
    std::vector<double> f, g, h;
    double A = 1.0;
    double T = 1.0;
};

/// Builds f from f' = h f - g - s, f(0) = A, with h, g >= 0 smooth and a
/// slack s > 0, integrated by RK4 on substeps. Then
/// f(t) + int g = A + int h f - int s, so the hypothesis holds strictly.
/// Nonnegativity of f: h >= 0 and g + s <= 0.35 A over T <= 2.
template <class Rng>
GronwallWitness make_gronwall_witness(Rng& rng, std::size_t samples) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    GronwallWitness w;
    w.A = 0.5 + 1.5 * u01(rng);
    w.T = 0.5 + 1.5 * u01(rng);
    const double h0 = 2.0 * u01(rng);
    const double h1 = h0 * u01(rng);
    const double hw = 1.0 + 6.0 * u01(rng);
    const double hp = 6.283185307179586 * u01(rng);
    const double g0 = 0.15 * w.A * u01(rng);
    const double g1 = g0 * u01(rng);
    const double gw = 1.0 + 6.0 * u01(rng);
    const double slack = w.A * (0.01 + 0.04 * u01(rng));
    auto h = [=](double t) { return h0 + h1 * std::sin(hw * t + hp); };
    auto g = [=](double t) { return g0 + g1 * std::cos(gw * t); };
    auto rhs = [&](double t, double f) { return h(t) * f - g(t) - slack; };

    const double dt = w.T / static_cast<double>(samples - 1);
    constexpr int kSub = 8;
    const double hs = dt / kSub;
    w.f.resize(samples);
    w.g.resize(samples);
    w.h.resize(samples);
    double f = w.A;
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = dt * static_cast<double>(i);
        w.f[i] = std::max(f, 0.0);
        w.g[i] = g(t);
        w.h[i] = h(t);
        for (int s = 0; s < kSub; ++s) {
            const double ts = t + s * hs;
            const double k1 = rhs(ts, f);
            const double k2 = rhs(ts + 0.5 * hs, f + 0.5 * hs * k1);
            const double k3 = rhs(ts + 0.5 * hs, f + 0.5 * hs * k2);
            const double k4 = rhs(ts + hs, f + hs * k3);
            f += hs / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    return w;
}

/// `witnesses` ODE-constructed witnesses of `samples` points each.
inline CampaignResult gronwall_campaign(std::size_t witnesses, std::uint64_t seed, std::size_t samples = 1000) {
    return detail::sharded_campaign("gronwall", witnesses, seed,
                                    [samples](auto& rng, std::size_t, CampaignResult& acc) {
                                        const GronwallWitness w = make_gronwall_witness(rng, samples);
                                        try {
                                            acc.absorb(gronwall_variant_check(w.f, w.g, w.h, w.A, w.T));
                                        } catch (const HypothesisViolated&) {
                                            ++acc.rejected;
                                        }
                                    });
}

}  // namespace edns::lab
