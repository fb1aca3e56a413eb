#pragma once

// Euler–Maruyama on the raw capitalization SDE, kept unrepaired so that its
// failures can be counted, and the auxiliary ζ-process hitting experiment.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "relarb/errors.hpp"
#include "relarb/model.hpp"
#include "relarb/parallel.hpp"
#include "relarb/rng.hpp"
#include "relarb/stats.hpp"
#include "relarb/time_change.hpp"

namespace relarb {

inline constexpr double kPositivityFloor = 1e-12;
inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct DiagnosticReport {
    std::size_t nPaths = 0;
    std::size_t failures = 0;
    double positivityFloor = kPositivityFloor;
    std::vector<double> firstFailureTime;  // kNever when the path stayed positive

    double fail_fraction() const noexcept
    {
        return nPaths == 0 ? 0.0 : static_cast<double>(failures) / static_cast<double>(nPaths);
    }
};

/// Raw Euler trajectories. Unlike PathBatch, entries may be nonpositive or NaN.
struct EulerRun {
    std::vector<double> times;
    std::size_t nPaths = 0;
    std::size_t n = 0;
    std::vector<double> values;  // [path][step][stock]
    DiagnosticReport report;

    std::span<const double> state(std::size_t path, std::size_t step) const
    {
        return {values.data() + (path * times.size() + step) * n, n};
    }
};

struct EulerOptions {
    double positivityFloor = kPositivityFloor;
    double noiseScale = 1.0;  // 0 gives the deterministic ODE
};

namespace detail {

inline std::vector<double> uniform_times(double T, std::size_t steps)
{
    std::vector<double> t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        t[k] = T * static_cast<double>(k) / static_cast<double>(steps);
    }
    t.back() = T;
    return t;
}

inline bool breaches(std::span<const double> x, double floor)
{
    return std::any_of(x.begin(), x.end(), [floor](double v) { return !(v > floor); });
}

}  // namespace detail

/// X_i ← X_i + κXΔt + sqrt(X_i X)ΔW_i on the calendar grid t_k = kT/nSteps.
/// Stock i of path p draws from the same stream as the Bessel engine, so
/// matched seeds give paired experiments.
inline EulerRun euler_vsm_paths(const VsmParams& vsm, const SimConfig& cfg,
                                const EulerOptions& opt = {})
{
    detail::check_vsm_coefficients(vsm);
    detail::check_positive_state(vsm.x0, "euler_vsm_paths");
    validate_config(cfg);
    const std::size_t n = vsm.n;
    const double dt = cfg.dt();
    const double sqdt = std::sqrt(dt);

    EulerRun run;
    run.times = detail::uniform_times(cfg.horizonT, cfg.nSteps);
    run.nPaths = cfg.nPaths;
    run.n = n;
    const std::size_t rows = run.times.size();
    run.values.resize(cfg.nPaths * rows * n);
    run.report.nPaths = cfg.nPaths;
    run.report.positivityFloor = opt.positivityFloor;
    run.report.firstFailureTime.assign(cfg.nPaths, kNever);

    parallel_for(cfg.nPaths, cfg.threads, [&](std::size_t p) {
        PathStreams streams(cfg.seed, p, n);
        double* row = run.values.data() + p * rows * n;
        std::copy(vsm.x0.begin(), vsm.x0.end(), row);
        for (std::size_t k = 1; k < rows; ++k) {
            const double* prev = row + (k - 1) * n;
            double* cur = row + k * n;
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                total += prev[i];
            }
            for (std::size_t i = 0; i < n; ++i) {
                const double dw = opt.noiseScale * sqdt * standard_normal(streams.stock(i));
                cur[i] = prev[i] + vsm.kappa * total * dt + std::sqrt(prev[i] * total) * dw;
            }
            if (run.report.firstFailureTime[p] == kNever &&
                detail::breaches({cur, n}, opt.positivityFloor)) {
                run.report.firstFailureTime[p] = run.times[k];
            }
        }
    });
    run.report.failures = static_cast<std::size_t>(std::count_if(
        run.report.firstFailureTime.begin(), run.report.firstFailureTime.end(),
        [](double t) { return t != kNever; }));
    return run;
}

/// The same experiment with the Bessel engine: calendar-grid paths read off
/// the stochastic clock. Positivity holds by construction, so the report
/// counts failures only to make the comparison symmetric.
inline std::pair<PathBatch, DiagnosticReport> bessel_vsm_paths(const VsmParams& vsm,
                                                               const SimConfig& cfg,
                                                               double positivityFloor =
                                                                   kPositivityFloor)
{
    detail::check_vsm_coefficients(vsm);
    detail::check_positive_state(vsm.x0, "bessel_vsm_paths");
    validate_config(cfg);
    const std::size_t n = vsm.n;
    const std::vector<double> times = detail::uniform_times(cfg.horizonT, cfg.nSteps);
    const std::size_t rows = times.size();
    std::vector<double> values(cfg.nPaths * rows * n);
    DiagnosticReport report;
    report.nPaths = cfg.nPaths;
    report.positivityFloor = positivityFloor;
    report.firstFailureTime.assign(cfg.nPaths, kNever);

    parallel_for(cfg.nPaths, cfg.threads, [&](std::size_t p) {
        PathStreams streams(cfg.seed, p, n);
        const CalendarPath path = simulate_calendar_path(vsm, vsm.x0, times, cfg, streams);
        std::copy(path.values.begin(), path.values.end(), values.begin() + p * rows * n);
        if (!(path.minValue > positivityFloor)) {
            for (std::size_t k = 0; k < rows; ++k) {
                if (detail::breaches({path.values.data() + k * n, n}, positivityFloor)) {
                    report.firstFailureTime[p] = times[k];
                    break;
                }
            }
            if (report.firstFailureTime[p] == kNever) {
                report.firstFailureTime[p] = times.back();
            }
        }
    });
    report.failures = static_cast<std::size_t>(
        std::count_if(report.firstFailureTime.begin(), report.firstFailureTime.end(),
                      [](double t) { return t != kNever; }));
    std::vector<std::uint64_t> ids(cfg.nPaths);
    for (std::size_t p = 0; p < cfg.nPaths; ++p) {
        ids[p] = p;
    }
    return {PathBatch(times, cfg.nPaths, n, std::move(values), cfg.seed, std::move(ids)),
            std::move(report)};
}

struct BoundaryConfig {
    std::size_t n = 2;
    std::vector<double> x0{1.0, 1.0};
    double horizonT = 1.0;
    double dt = 1e-3;
    std::size_t nPaths = 10000;
    std::uint64_t seed = 0;
    double positivityFloor = kPositivityFloor;
    double noiseScale = 1.0;
    std::size_t keepTrajectories = 0;  // how many paths to store for plotting
    unsigned threads = 1;
};

struct HitReport {
    double fractionHit = 0.0;
    double stdError = 0.0;  // binomial
    std::vector<double> hitTimes;  // per path; kNever if not absorbed
    std::vector<double> times;
    std::size_t keptPaths = 0;
    std::vector<double> trajectories;  // [path][step][stock] for the first keptPaths paths

    bool hit(std::size_t path) const { return hitTimes.at(path) != kNever; }
};

/// dζ_i = ζ_i dt + sqrt(ζ_i (ζ_1+…+ζ_n)) dW_i by Euler, absorbed (frozen) at
/// the first step with some ζ_i <= floor.
inline HitReport auxiliary_boundary_experiment(const BoundaryConfig& cfg)
{
    if (cfg.n == 0 || cfg.x0.size() != cfg.n) {
        throw DomainError("auxiliary_boundary_experiment: x0 must have n entries");
    }
    detail::check_positive_state(cfg.x0, "auxiliary_boundary_experiment");
    if (!(cfg.horizonT > 0.0) || !(cfg.dt > 0.0) || cfg.dt > cfg.horizonT) {
        throw DomainError("auxiliary_boundary_experiment: need 0 < dt <= T");
    }
    if (cfg.nPaths == 0) {
        throw DomainError("auxiliary_boundary_experiment: empty path budget");
    }
    const std::size_t n = cfg.n;
    const auto steps = static_cast<std::size_t>(std::llround(cfg.horizonT / cfg.dt));
    const double dt = cfg.horizonT / static_cast<double>(std::max<std::size_t>(steps, 1));
    const double sqdt = std::sqrt(dt);

    HitReport rep;
    rep.times = detail::uniform_times(cfg.horizonT, std::max<std::size_t>(steps, 1));
    const std::size_t rows = rep.times.size();
    rep.hitTimes.assign(cfg.nPaths, kNever);
    rep.keptPaths = std::min(cfg.keepTrajectories, cfg.nPaths);
    rep.trajectories.resize(rep.keptPaths * rows * n);

    parallel_for(cfg.nPaths, cfg.threads, [&](std::size_t p) {
        PathStreams streams(cfg.seed, p, n);
        std::vector<double> z(cfg.x0);
        double* keep = p < rep.keptPaths ? rep.trajectories.data() + p * rows * n : nullptr;
        if (keep) {
            std::copy(z.begin(), z.end(), keep);
        }
        bool absorbed = false;
        for (std::size_t k = 1; k < rows; ++k) {
            if (!absorbed) {
                double total = 0.0;
                for (double v : z) {
                    total += v;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double dw = cfg.noiseScale * sqdt * standard_normal(streams.stock(i));
                    z[i] += z[i] * dt + std::sqrt(z[i] * total) * dw;
                }
                if (detail::breaches(z, cfg.positivityFloor)) {
                    absorbed = true;
                    rep.hitTimes[p] = rep.times[k];
                }
            }
            if (keep) {
                std::copy(z.begin(), z.end(), keep + k * n);
            }
        }
    });

    const auto hits = static_cast<double>(std::count_if(
        rep.hitTimes.begin(), rep.hitTimes.end(), [](double t) { return t != kNever; }));
    const auto total = static_cast<double>(cfg.nPaths);
    rep.fractionHit = hits / total;
    rep.stdError = std::sqrt(rep.fractionHit * (1.0 - rep.fractionHit) / total);
    return rep;
}

}  // namespace relarb
