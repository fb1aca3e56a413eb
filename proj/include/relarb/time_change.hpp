#pragma once

// The stochastic clock.
//
// With Λ(t) = ∫ X(r)/4 dr, the time-changed coordinates Y_i = X_i ∘ Λ^{-1}
// are independent BESQ^m processes (m = 4κ). Simulating Y on a uniform
// clock mesh t_k = s + kΔt and integrating dθ = 4/Y dt gives calendar
// times θ_k = Λ^{-1}(t_k); the walk stops at the first cell containing T.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "relarb/bessel.hpp"
#include "relarb/errors.hpp"
#include "relarb/model.hpp"
#include "relarb/rng.hpp"

namespace relarb {

struct ClockMap {
    double start = 0.0;  // s; also θ_0
    double dt = 0.0;     // uniform clock mesh
    std::vector<double> theta;
    std::vector<double> yTotals;  // Y(t_k) for every k whose increment has been taken

    std::size_t cells() const noexcept { return theta.empty() ? 0 : theta.size() - 1; }
    double t(std::size_t k) const noexcept { return start + static_cast<double>(k) * dt; }

    static ClockMap starting_at(double s, double dt)
    {
        ClockMap c;
        c.start = s;
        c.dt = dt;
        c.theta.push_back(s);
        return c;
    }
};

/// Append θ_{k+1} = θ_k + 4 dt / Y(t_k).
inline ClockMap advance_clock(ClockMap clock, double yTotal, double dt)
{
    if (!(yTotal > 0.0)) {
        throw DomainError("advance_clock: total capitalization must be positive");
    }
    if (!(dt > 0.0)) {
        throw DomainError("advance_clock: dt must be positive");
    }
    if (clock.theta.empty()) {
        clock.theta.push_back(clock.start);
    }
    clock.yTotals.resize(clock.theta.size() - 1);
    clock.yTotals.push_back(yTotal);
    clock.theta.push_back(clock.theta.back() + 4.0 * dt / yTotal);
    return clock;
}

/// Y_i(t_k) for k = 0..N together with the clock map.
struct TimeChangedPath {
    std::size_t n = 0;
    ClockMap clock;
    std::vector<double> values;  // [k][i]

    std::size_t cellIndex() const noexcept { return clock.cells(); }
    std::span<const double> at(std::size_t k) const { return {values.data() + k * n, n}; }
};

/// Default cap on clock steps: 100 times the expected clock length
/// E[Λ(τ)] = X_s (e^{nκτ} - 1) / (4nκ), measured in mesh cells.
inline std::size_t default_step_cap(std::size_t n, double kappa, double xTotal, double tau,
                                    double dt)
{
    const double rate = static_cast<double>(n) * kappa;
    const double expected = xTotal * std::expm1(rate * tau) / (4.0 * rate);
    const double cells = std::ceil(std::max(tau, expected) / dt);
    const double cap = 100.0 * std::max(cells, 1.0);
    return cap > 1e15 ? static_cast<std::size_t>(1e15) : static_cast<std::size_t>(cap);
}

/// Last cell [θ_{N-1}, θ_N] of a clock walk with its end-point values.
struct LastCell {
    double thetaLeft = 0.0;
    double thetaRight = 0.0;
    double clockDuration = 0.0;  // Δt on the Bessel clock
    std::span<const double> left;
    std::span<const double> right;
};

/// Walks n BESQ^m coordinates along the clock mesh, one cell per step().
class ClockWalker {
  public:
    ClockWalker(const VsmParams& vsm, double start, std::span<const double> x, BesqScheme scheme,
                double dt, double horizon, std::size_t maxSteps)
        : horizon_(horizon), dt_(dt), theta_(start), thetaPrev_(start), maxSteps_(maxSteps)
    {
        if (x.size() != vsm.n) {
            throw DomainError("ClockWalker: state has the wrong dimension");
        }
        detail::check_positive_state(x, "ClockWalker");
        if (!(start <= horizon)) {
            throw DomainError("ClockWalker: start time beyond the horizon");
        }
        coords_.reserve(x.size());
        for (double xi : x) {
            coords_.emplace_back(SquaredBesselSpec{vsm.besselDim, xi, scheme});
        }
        current_.assign(x.begin(), x.end());
        previous_ = current_;
        total_ = 0.0;
        for (double v : current_) {
            total_ += v;
        }
        if (maxSteps_ == 0) {
            maxSteps_ = default_step_cap(x.size(), vsm.kappa, total_, horizon - start, dt);
        }
    }

    bool reached() const noexcept { return theta_ >= horizon_; }
    std::size_t steps() const noexcept { return steps_; }
    double theta() const noexcept { return theta_; }
    double theta_prev() const noexcept { return thetaPrev_; }
    double total() const noexcept { return total_; }
    std::span<const double> current() const noexcept { return current_; }
    std::span<const double> previous() const noexcept { return previous_; }

    LastCell last_cell() const noexcept
    {
        return {thetaPrev_, theta_, dt_, previous_, current_};
    }

    /// θ_{k+1} = θ_k + 4Δt / Y(t_k), then draw Y(t_{k+1}).
    void step(PathStreams& streams)
    {
        if (steps_ >= maxSteps_) {
            throw BudgetExceeded("stochastic clock did not reach T = " + std::to_string(horizon_) +
                                 " within " + std::to_string(maxSteps_) + " steps");
        }
        thetaPrev_ = theta_;
        theta_ += 4.0 * dt_ / total_;
        std::swap(previous_, current_);
        double total = 0.0;
        for (std::size_t i = 0; i < coords_.size(); ++i) {
            current_[i] = coords_[i].advance(dt_, streams.stock(i));
            total += current_[i];
        }
        total_ = total;
        ++steps_;
    }

  private:
    std::vector<BesqCoordinate> coords_;
    std::vector<double> current_;
    std::vector<double> previous_;
    double horizon_;
    double dt_;
    double theta_;
    double thetaPrev_;
    double total_ = 0.0;
    std::size_t steps_ = 0;
    std::size_t maxSteps_;
};

/// Simulate the time-changed coordinates from (s, x_s) until the first k with
/// θ_k >= T, so that θ_{N-1} < T <= θ_N. T = s returns a single point.
inline TimeChangedPath run_until_horizon(const VsmParams& vsm, double s, std::span<const double> x,
                                         const SimConfig& cfg, PathStreams& streams)
{
    const double dt = cfg.dt();
    ClockWalker walker(vsm, s, x, resolve_scheme(cfg, vsm.besselDim), dt, cfg.horizonT,
                       cfg.maxSteps);
    TimeChangedPath path;
    path.n = x.size();
    path.clock = ClockMap::starting_at(s, dt);
    path.values.assign(x.begin(), x.end());
    while (!walker.reached()) {
        const double total = walker.total();
        walker.step(streams);
        path.clock.yTotals.push_back(total);
        path.clock.theta.push_back(walker.theta());
        const auto cur = walker.current();
        path.values.insert(path.values.end(), cur.begin(), cur.end());
    }
    path.clock.yTotals.push_back(walker.total());
    return path;
}

/// Forward clock Λ evaluated on the θ-grid by the trapezoid rule:
/// Λ_k = Σ_{j<k} (Y_j + Y_{j+1})/8 · (θ_{j+1} - θ_j). Should track k Δt.
inline std::vector<double> forward_clock(const TimeChangedPath& path)
{
    std::vector<double> lambda(path.clock.theta.size(), 0.0);
    for (std::size_t k = 1; k < lambda.size(); ++k) {
        const double y0 = path.clock.yTotals[k - 1];
        const double y1 = path.clock.yTotals[k];
        lambda[k] = lambda[k - 1] + (y0 + y1) / 8.0 * (path.clock.theta[k] - path.clock.theta[k - 1]);
    }
    return lambda;
}

inline LastCell last_cell(const TimeChangedPath& path)
{
    const std::size_t N = path.cellIndex();
    if (N == 0) {
        return {path.clock.theta[0], path.clock.theta[0], path.clock.dt, path.at(0), path.at(0)};
    }
    return {path.clock.theta[N - 1], path.clock.theta[N], path.clock.dt, path.at(N - 1),
            path.at(N)};
}

namespace detail {

inline void check_target(const LastCell& cell, double target)
{
    if (!(target >= cell.thetaLeft && target <= cell.thetaRight)) {
        throw DomainError("interpolation target " + std::to_string(target) +
                          " outside the last clock cell [" + std::to_string(cell.thetaLeft) +
                          ", " + std::to_string(cell.thetaRight) + "]");
    }
}

}  // namespace detail

/// X_i(T) = [(θ_N - T) Y_i(t_{N-1}) + (T - θ_{N-1}) Y_i(t_N)] / (θ_N - θ_{N-1}).
inline std::vector<double> interpolate_linear(const LastCell& cell, double target)
{
    detail::check_target(cell, target);
    if (target == cell.thetaLeft) {
        return {cell.left.begin(), cell.left.end()};
    }
    if (target == cell.thetaRight) {
        return {cell.right.begin(), cell.right.end()};
    }
    const double width = cell.thetaRight - cell.thetaLeft;
    const double wl = (cell.thetaRight - target) / width;
    const double wr = (target - cell.thetaLeft) / width;
    std::vector<double> out(cell.left.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = wl * cell.left[i] + wr * cell.right[i];
    }
    return out;
}

inline std::vector<double> interpolate_linear(const TimeChangedPath& path, double target)
{
    return interpolate_linear(last_cell(path), target);
}

/// Refine the last cell with Bessel bridges.
///
/// Each coordinate is bridged on the Bessel clock over the cell (length Δt,
/// step Δt_b) from sqrt(Y_i(t_{N-1})) to sqrt(Y_i(t_N)). The clock is then
/// re-integrated on the fine grid, rescaled so the cell still spans exactly
/// [θ_{N-1}, θ_N], and X(T) is read off where the refined clock passes T.
inline std::vector<double> interpolate_bridge(const LastCell& cell, double target,
                                              const VsmParams& vsm, double bridgeStep,
                                              PathStreams& streams)
{
    detail::check_target(cell, target);
    if (!(bridgeStep > 0.0) || bridgeStep > cell.clockDuration) {
        throw DomainError("interpolate_bridge: bridge step " + std::to_string(bridgeStep) +
                          " exceeds the clock cell " + std::to_string(cell.clockDuration));
    }
    if (target == cell.thetaLeft) {
        return {cell.left.begin(), cell.left.end()};
    }
    if (target == cell.thetaRight) {
        return {cell.right.begin(), cell.right.end()};
    }

    const std::size_t n = cell.left.size();
    const std::vector<double> grid = detail::bridge_grid(cell.clockDuration, bridgeStep);
    const std::size_t points = grid.size();
    std::vector<double> sq(points * n);  // [k][i]
    for (std::size_t i = 0; i < n; ++i) {
        BridgeSpec spec{vsm.besselDim, std::sqrt(cell.left[i]), std::sqrt(cell.right[i]),
                        cell.clockDuration, bridgeStep};
        const std::vector<double> r = bessel_bridge_path(spec, streams.bridge());
        for (std::size_t k = 0; k < points; ++k) {
            sq[k * n + i] = r[k] * r[k];
        }
        sq[i] = cell.left[i];
        sq[(points - 1) * n + i] = cell.right[i];
    }

    std::vector<double> clock(points, 0.0);
    for (std::size_t k = 1; k < points; ++k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += sq[(k - 1) * n + i];
        }
        clock[k] = clock[k - 1] + 4.0 * (grid[k] - grid[k - 1]) / total;
    }
    const double scale = (cell.thetaRight - cell.thetaLeft) / clock.back();
    const double local = (target - cell.thetaLeft) / scale;

    std::size_t k = 1;
    while (k + 1 < points && clock[k] < local) {
        ++k;
    }
    const double w = std::clamp((local - clock[k - 1]) / (clock[k] - clock[k - 1]), 0.0, 1.0);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = (1.0 - w) * sq[(k - 1) * n + i] + w * sq[k * n + i];
    }
    return out;
}

inline std::vector<double> interpolate_bridge(const TimeChangedPath& path, double target,
                                              const VsmParams& vsm, double bridgeStep,
                                              PathStreams& streams)
{
    return interpolate_bridge(last_cell(path), target, vsm, bridgeStep, streams);
}

/// Path sampled at calendar times by walking the clock and interpolating
/// linearly inside the cell that contains each requested time.
struct CalendarPath {
    std::vector<double> values;  // [j][i]
    /// First clock point with min_i Y_i / Y <= weightFloor, as a calendar
    /// time; +inf when never breached (or weightFloor = 0).
    double breachTime = INFINITY;
    double minValue = INFINITY;  // smallest Y_i seen on the clock mesh
};

inline CalendarPath simulate_calendar_path(const VsmParams& vsm, std::span<const double> x,
                                           std::span<const double> times, const SimConfig& cfg,
                                           PathStreams& streams, double weightFloor = 0.0)
{
    if (times.empty()) {
        throw DomainError("simulate_calendar_path: empty time grid");
    }
    const double start = times.front();
    const double horizon = times.back();
    const std::size_t n = x.size();
    ClockWalker walker(vsm, start, x, resolve_scheme(cfg, vsm.besselDim), cfg.dt(), horizon,
                       cfg.maxSteps);
    CalendarPath out;
    out.values.resize(times.size() * n);
    std::copy(x.begin(), x.end(), out.values.begin());
    for (double v : x) {
        out.minValue = std::min(out.minValue, v);
    }
    std::size_t next = 1;
    while (next < times.size()) {
        walker.step(streams);
        const auto cur = walker.current();
        for (double v : cur) {
            out.minValue = std::min(out.minValue, v);
        }
        if (weightFloor > 0.0 && out.breachTime == INFINITY) {
            const double lowest = *std::min_element(cur.begin(), cur.end());
            if (lowest <= weightFloor * walker.total()) {
                out.breachTime = walker.theta();
            }
        }
        while (next < times.size() && times[next] <= walker.theta()) {
            const auto row = interpolate_linear(walker.last_cell(), times[next]);
            std::copy(row.begin(), row.end(), out.values.begin() + next * n);
            ++next;
        }
    }
    return out;
}

}  // namespace relarb
