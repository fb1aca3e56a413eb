#pragma once

// Monte Carlo estimates of the optimal arbitrage u(T - s, x).
//
// For κ = 1 the deflator has the closed form L·X ∝ X / ΠX_i, so
//   u(T - s, x) = (Πx_i / Σx_i) · E[ΣX_i(T) / ΠX_i(T)],
// with X(T) simulated on the stochastic clock from (s, x). General ζ adds a
// pathwise discount exp(-∫ (1-ζ²) X Σ_j 1/(8X_j) dr).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "relarb/errors.hpp"
#include "relarb/model.hpp"
#include "relarb/parallel.hpp"
#include "relarb/rng.hpp"
#include "relarb/stats.hpp"
#include "relarb/time_change.hpp"

namespace relarb {

namespace detail {

inline double sum_of(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) {
        s += v;
    }
    return s;
}

inline double sum_of_logs(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) {
        s += std::log(v);
    }
    return s;
}

/// X Σ_j 1/(8 X_j), the integrand of the ζ-correction before (1-ζ²).
inline double discount_rate(std::span<const double> x)
{
    double inv = 0.0;
    for (double v : x) {
        inv += 1.0 / v;
    }
    return sum_of(x) * inv / 8.0;
}

/// Accept n = 1 here: the estimators degenerate gracefully (u ≡ 1).
inline void check_estimator_input(const VsmParams& vsm, std::span<const double> x, double s,
                                  const SimConfig& cfg)
{
    check_vsm_coefficients(vsm);
    if (x.size() != vsm.n) {
        throw DomainError("estimator: state has " + std::to_string(x.size()) +
                          " entries, expected " + std::to_string(vsm.n));
    }
    check_positive_state(x, "estimator");
    validate_config(cfg);
    if (!(s >= 0.0 && s <= cfg.horizonT)) {
        throw DomainError("estimator: start time must lie in [0, T]");
    }
}

struct TerminalDraw {
    std::vector<double> xT;
    double integral = 0.0;  // ∫_s^T X Σ 1/(8X_j) dr, trapezoid on the θ-grid
};

/// Walk the clock from (s, x) past T and read X(T) off the last cell.
inline TerminalDraw draw_terminal(const VsmParams& vsm, double s, std::span<const double> x,
                                  const SimConfig& cfg, PathStreams& streams, bool withIntegral)
{
    ClockWalker walker(vsm, s, x, resolve_scheme(cfg, vsm.besselDim), cfg.dt(), cfg.horizonT,
                       cfg.maxSteps);
    TerminalDraw out;
    if (walker.reached()) {
        out.xT.assign(x.begin(), x.end());
        return out;
    }
    double gPrev = withIntegral ? discount_rate(x) : 0.0;
    for (;;) {
        walker.step(streams);
        if (walker.reached()) {
            break;
        }
        if (withIntegral) {
            const double g = discount_rate(walker.current());
            out.integral += 0.5 * (gPrev + g) * (walker.theta() - walker.theta_prev());
            gPrev = g;
        }
    }
    const LastCell cell = walker.last_cell();
    out.xT = cfg.interpolation == Interpolation::BesselBridge
                 ? interpolate_bridge(cell, cfg.horizonT, vsm, cfg.bridgeStep, streams)
                 : interpolate_linear(cell, cfg.horizonT);
    if (withIntegral) {
        out.integral += 0.5 * (gPrev + discount_rate(out.xT)) * (cfg.horizonT - cell.thetaLeft);
    }
    return out;
}

template <class PathTerm>
UEstimate estimate_with(const VsmParams& vsm, double s, std::span<const double> x,
                        const SimConfig& cfg, PathTerm term)
{
    std::vector<double> values(cfg.nPaths);
    parallel_for(cfg.nPaths, cfg.threads, [&](std::size_t p) {
        PathStreams streams(cfg.seed, p, vsm.n);
        values[p] = term(streams);
    });
    // Non-finite results are returned as they are: overflow is a finding.
    const SampleSummary summary = summarize(values);
    UEstimate est;
    est.mean = summary.mean;
    est.stdError = summary.stdError;
    est.nPaths = cfg.nPaths;
    est.tRemaining = cfg.horizonT - s;
    est.state.assign(x.begin(), x.end());
    return est;
}

}  // namespace detail

/// ΣxT_i / ΠxT_i, with the product taken in log space.
inline double payoff_kappa1(std::span<const double> xT)
{
    detail::check_positive_state(xT, "payoff_kappa1");
    return std::exp(std::log(detail::sum_of(xT)) - detail::sum_of_logs(xT));
}

/// u(T - s, x) for κ = 1. Each path contributes
/// exp[(log ΣX(T) - log Σx) + (Σ log x_i - Σ log X_i(T))], which is exactly 1
/// when the horizon has already been reached.
inline UEstimate estimate_u(const VsmParams& vsm, double s, std::span<const double> x,
                            const SimConfig& cfg)
{
    detail::check_estimator_input(vsm, x, s, cfg);
    if (vsm.kappa != 1.0) {
        throw DomainError("estimate_u needs kappa = 1; use estimate_u_general");
    }
    const double logSum0 = std::log(detail::sum_of(x));
    const double logProd0 = detail::sum_of_logs(x);
    return detail::estimate_with(vsm, s, x, cfg, [&](PathStreams& streams) {
        const auto draw = detail::draw_terminal(vsm, s, x, cfg, streams, false);
        return std::exp((std::log(detail::sum_of(draw.xT)) - logSum0) +
                        (logProd0 - detail::sum_of_logs(draw.xT)));
    });
}

/// u(T - s, x) for ζ ∈ [0, 1]:
/// [(Πx)^c / Σx] · E[ΣX(T) / (ΠX(T))^c · exp(-(1-ζ²) ∫ X Σ 1/(8X_j) dr)], c = (1+ζ)/2.
inline UEstimate estimate_u_general(const VsmParams& vsm, double s, std::span<const double> x,
                                    const SimConfig& cfg)
{
    detail::check_estimator_input(vsm, x, s, cfg);
    const double c = 0.5 * (1.0 + vsm.zeta);
    const double damping = 1.0 - vsm.zeta * vsm.zeta;
    const double logSum0 = std::log(detail::sum_of(x));
    const double logProd0 = detail::sum_of_logs(x);
    return detail::estimate_with(vsm, s, x, cfg, [&](PathStreams& streams) {
        const auto draw = detail::draw_terminal(vsm, s, x, cfg, streams, damping != 0.0);
        return std::exp((std::log(detail::sum_of(draw.xT)) - logSum0) +
                        c * (logProd0 - detail::sum_of_logs(draw.xT)) -
                        damping * draw.integral);
    });
}

/// κ = 1 uses the closed-form functional, anything else the general one.
inline UEstimate estimate_auto(const VsmParams& vsm, double s, std::span<const double> x,
                               const SimConfig& cfg)
{
    return vsm.kappa == 1.0 ? estimate_u(vsm, s, x, cfg) : estimate_u_general(vsm, s, x, cfg);
}

inline constexpr std::uint64_t kDriveTag = 0x64726976ull;  // "driv"
inline constexpr std::uint64_t kTimeTag = 0x74696d65ull;   // "time"
inline constexpr std::uint64_t kNodeTag = 0x6e6f6465ull;   // "node"

struct UPath {
    std::vector<double> times;
    std::size_t n = 0;
    std::vector<double> states;  // [s][i], driving trajectory
    std::vector<UEstimate> estimates;
};

/// Algorithm 1's outer loop: one driving trajectory sampled at t_s = sT/N_T,
/// and at each t_s a fresh inner estimate of u(T - t_s, X(t_s)).
/// The driving path and every inner estimate get seeds derived from cfg.seed.
/// N_T defaults to the clock mesh count; N_T = 0 gives the single entry u(T, x0).
inline UPath sweep_time(const VsmParams& vsm, const SimConfig& cfg,
                        std::optional<std::size_t> timeSteps = std::nullopt)
{
    detail::check_estimator_input(vsm, vsm.x0, 0.0, cfg);
    const std::size_t nT = timeSteps.value_or(cfg.nSteps);
    UPath out;
    out.n = vsm.n;
    out.times.assign(nT + 1, 0.0);
    for (std::size_t k = 1; k <= nT; ++k) {
        out.times[k] = cfg.horizonT * static_cast<double>(k) / static_cast<double>(nT);
    }
    if (nT > 0) {
        out.times.back() = cfg.horizonT;
    }

    PathStreams driver(derive_seed(cfg.seed, {kDriveTag}), 0, vsm.n);
    out.states = simulate_calendar_path(vsm, vsm.x0, out.times, cfg, driver).values;

    out.estimates.resize(nT + 1);
    SimConfig inner = cfg;
    inner.threads = 1;
    parallel_for(nT + 1, cfg.threads, [&](std::size_t k) {
        SimConfig local = inner;
        local.seed = derive_seed(cfg.seed, {kTimeTag, k});
        const std::span<const double> state(out.states.data() + k * vsm.n, vsm.n);
        out.estimates[k] = estimate_auto(vsm, out.times[k], state, local);
    });
    return out;
}

struct AxisSpec {
    double lo = 3.5;
    double hi = 9.0;
    std::size_t cells = 50;

    /// Cell centres lo + (j + 1/2)(hi - lo)/cells.
    double node(std::size_t j) const
    {
        return lo + (static_cast<double>(j) + 0.5) * (hi - lo) / static_cast<double>(cells);
    }
};

struct MeshSpec {
    AxisSpec x1;
    AxisSpec x2;
};

struct USurface {
    MeshSpec mesh;
    std::vector<double> fixedCoords;
    SimConfig config;
    std::vector<UEstimate> values;  // row-major, index = j1 * x2.cells + j2

    const UEstimate& at(std::size_t j1, std::size_t j2) const
    {
        return values.at(j1 * mesh.x2.cells + j2);
    }
};

inline std::uint64_t surface_node_seed(std::uint64_t seed, std::size_t index)
{
    return derive_seed(seed, {kNodeTag, index});
}

inline void validate_mesh(const MeshSpec& mesh)
{
    for (const AxisSpec* a : {&mesh.x1, &mesh.x2}) {
        if (a->cells == 0) {
            throw DomainError("mesh: cells must be at least 1");
        }
        if (!(a->lo < a->hi)) {
            throw DomainError("mesh: need lo < hi");
        }
        if (!(a->lo > 0.0)) {
            throw DomainError("mesh: must lie in the positive orthant");
        }
    }
}

/// u(T, x) at every mesh node, x = (x1, x2, fixedCoords...).
inline USurface sweep_surface(const VsmParams& vsm, const MeshSpec& mesh,
                              std::span<const double> fixedCoords, const SimConfig& cfg)
{
    validate_mesh(mesh);
    if (vsm.n < 2 || fixedCoords.size() != vsm.n - 2) {
        throw DomainError("sweep_surface: need n >= 2 and n - 2 fixed coordinates");
    }
    detail::check_positive_state(fixedCoords, "sweep_surface");
    validate_config(cfg);

    USurface out;
    out.mesh = mesh;
    out.fixedCoords.assign(fixedCoords.begin(), fixedCoords.end());
    out.config = cfg;
    const std::size_t nodes = mesh.x1.cells * mesh.x2.cells;
    out.values.resize(nodes);
    parallel_for(nodes, cfg.threads, [&](std::size_t idx) {
        std::vector<double> x(vsm.n);
        x[0] = mesh.x1.node(idx / mesh.x2.cells);
        x[1] = mesh.x2.node(idx % mesh.x2.cells);
        std::copy(fixedCoords.begin(), fixedCoords.end(), x.begin() + 2);
        SimConfig local = cfg;
        local.threads = 1;
        local.seed = surface_node_seed(cfg.seed, idx);
        out.values[idx] = estimate_auto(vsm, 0.0, x, local);
    });
    return out;
}

}  // namespace relarb
