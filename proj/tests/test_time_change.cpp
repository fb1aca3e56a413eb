#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "relarb/estimator.hpp"
#include "relarb/time_change.hpp"

using namespace relarb;

TEST_CASE("advance_clock: constant total capitalization")
{
    ClockMap c = ClockMap::starting_at(0.3, 0.01);
    for (int k = 0; k < 10; ++k) {
        c = advance_clock(c, 8.0, 0.01);
    }
    REQUIRE(c.theta.size() == 11);
    for (std::size_t k = 0; k < c.theta.size(); ++k) {
        CHECK(c.theta[k] == Catch::Approx(0.3 + 0.005 * static_cast<double>(k)).epsilon(1e-14));
    }
    CHECK(c.yTotals.size() == 10);
}

TEST_CASE("advance_clock: two-step arithmetic")
{
    ClockMap c = ClockMap::starting_at(0.0, 0.01);
    c = advance_clock(c, 4.0, 0.01);
    c = advance_clock(c, 8.0, 0.01);
    CHECK(c.theta == std::vector<double>{0.0, 0.01, 0.015});
    CHECK(c.yTotals == std::vector<double>{4.0, 8.0});
}

TEST_CASE("advance_clock rejects a nonpositive total")
{
    const ClockMap c = ClockMap::starting_at(0.0, 0.01);
    CHECK_THROWS_AS(advance_clock(c, 0.0, 0.01), DomainError);
    CHECK_THROWS_AS(advance_clock(c, -1.0, 0.01), DomainError);
}

TEST_CASE("run_until_horizon with no time left returns a single point")
{
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 2.0});
    SimConfig cfg;
    PathStreams s(1, 0, 2);
    const TimeChangedPath p = run_until_horizon(vsm, 1.0, vsm.x0, cfg, s);
    CHECK(p.cellIndex() == 0);
    CHECK(p.values == vsm.x0);
    CHECK(interpolate_linear(p, 1.0) == vsm.x0);
}

TEST_CASE("run_until_horizon brackets T on every path")
{
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 1.0});
    SimConfig cfg;
    for (std::uint64_t p = 0; p < 500; ++p) {
        PathStreams s(2, p, 2);
        const TimeChangedPath path = run_until_horizon(vsm, 0.0, vsm.x0, cfg, s);
        const std::size_t N = path.cellIndex();
        REQUIRE(N >= 1);
        REQUIRE(path.clock.theta[N - 1] < 1.0);
        REQUIRE(path.clock.theta[N] >= 1.0);
        REQUIRE(path.clock.yTotals.size() == N + 1);
        for (std::size_t k = 0; k <= N; ++k) {
            if (k > 0) {
                REQUIRE(path.clock.theta[k] > path.clock.theta[k - 1]);
                REQUIRE(path.clock.theta[k] - path.clock.theta[k - 1] ==
                        Catch::Approx(4.0 * cfg.dt() / path.clock.yTotals[k - 1]).epsilon(1e-12));
            }
            double total = 0.0;
            for (double v : path.at(k)) {
                REQUIRE(v > 0.0);
                total += v;
            }
            REQUIRE(total == Catch::Approx(path.clock.yTotals[k]).epsilon(1e-14));
        }
    }
}

TEST_CASE("forward clock recovers the uniform grid")
{
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 1.0});
    SimConfig cfg;
    int good = 0;
    for (std::uint64_t p = 0; p < 1000; ++p) {
        PathStreams s(3, p, 2);
        const TimeChangedPath path = run_until_horizon(vsm, 0.0, vsm.x0, cfg, s);
        const auto lambda = forward_clock(path);
        const double target = path.clock.t(path.cellIndex()) - path.clock.start;
        good += std::abs(lambda.back() - target) <= 5.0 * cfg.dt() ? 1 : 0;
    }
    CHECK(good >= 990);
}

TEST_CASE("the step cap fails loudly")
{
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 1.0});
    SimConfig cfg;
    cfg.maxSteps = 5;
    PathStreams s(4, 0, 2);
    CHECK_THROWS_AS(run_until_horizon(vsm, 0.0, vsm.x0, cfg, s), BudgetExceeded);
    CHECK(default_step_cap(2, 1.0, 2.0, 1.0, 0.01) >= 100 * 160);
}

TEST_CASE("the clock runs with the total capitalization's scale")
{
    // With X(0) = 100 the clock needs about E[Λ(1)] / dt = 100 (e^2 - 1) / 8 / dt cells.
    const VsmParams vsm = VsmParams::from_kappa(1.0, {50.0, 50.0});
    SimConfig cfg;
    cfg.nSteps = 10;  // dt = 0.1
    PathStreams s(5, 0, 2);
    const TimeChangedPath path = run_until_horizon(vsm, 0.0, vsm.x0, cfg, s);
    CHECK(path.cellIndex() > 200);
    CHECK(path.cellIndex() < 5000);
}

namespace {

LastCell make_cell(const std::vector<double>& left, const std::vector<double>& right)
{
    return LastCell{0.5, 0.7, 0.01, left, right};
}

}  // namespace

TEST_CASE("linear interpolation reduces to the grid values at the cell ends")
{
    const std::vector<double> l{2.0, 1.0};
    const std::vector<double> r{4.0, 3.0};
    const LastCell cell = make_cell(l, r);
    CHECK(interpolate_linear(cell, 0.5) == l);
    CHECK(interpolate_linear(cell, 0.7) == r);
    const auto mid = interpolate_linear(cell, 0.6);
    CHECK(mid[0] == Catch::Approx(3.0).epsilon(1e-14));
    CHECK(mid[1] == Catch::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(interpolate_linear(cell, 0.71), DomainError);
    CHECK_THROWS_AS(interpolate_linear(cell, 0.49), DomainError);
}

TEST_CASE("bridge interpolation is pinned at the ends and positive inside")
{
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 1.0});
    const std::vector<double> l{2.0, 1.0};
    const std::vector<double> r{4.0, 3.0};
    const LastCell cell = make_cell(l, r);
    PathStreams s(6, 0, 2);
    CHECK(interpolate_bridge(cell, 0.5, vsm, 1e-4, s) == l);
    CHECK(interpolate_bridge(cell, 0.7, vsm, 1e-4, s) == r);
    for (int i = 0; i < 200; ++i) {
        for (double v : interpolate_bridge(cell, 0.55 + 0.0005 * i / 2, vsm, 1e-4, s)) {
            REQUIRE(v > 0.0);
        }
    }
}

TEST_CASE("bridge interpolation rejects a step coarser than the cell")
{
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 1.0});
    const std::vector<double> l{2.0, 1.0};
    const std::vector<double> r{4.0, 3.0};
    PathStreams s(7, 0, 2);
    CHECK_THROWS_AS(interpolate_bridge(make_cell(l, r), 0.6, vsm, 0.3, s), DomainError);
    CHECK_THROWS_AS(interpolate_bridge(make_cell(l, r), 0.6, vsm, 0.02, s), DomainError);
}

TEST_CASE("bridge interpolation of a flat cell stays near the end value")
{
    // a = b: the refined value scatters around a^2 by the bridge variance.
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 1.0});
    const std::vector<double> flat{4.0, 4.0};
    const LastCell cell = make_cell(flat, flat);
    PathStreams s(8, 0, 2);
    double sum = 0.0;
    const int N = 2000;
    for (int i = 0; i < N; ++i) {
        sum += interpolate_bridge(cell, 0.6, vsm, 1e-3, s)[0];
    }
    CHECK(std::abs(sum / N - 4.0) < 0.05);
}

TEST_CASE("calendar sampling returns the start state and positive values")
{
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 2.0});
    SimConfig cfg;
    std::vector<double> times;
    for (int k = 0; k <= 20; ++k) {
        times.push_back(0.05 * k);
    }
    times.back() = 1.0;
    PathStreams s(9, 0, 2);
    const CalendarPath p = simulate_calendar_path(vsm, vsm.x0, times, cfg, s);
    CHECK(p.values.size() == times.size() * 2);
    CHECK(p.values[0] == 1.0);
    CHECK(p.values[1] == 2.0);
    for (double v : p.values) {
        REQUIRE(v > 0.0);
    }
}

TEST_CASE("permuting stocks together with their streams permutes the path")
{
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 3.0, 0.5});
    const VsmParams swapped = VsmParams::from_kappa(1.0, {0.5, 1.0, 3.0});
    SimConfig cfg;
    PathStreams a(10, 0, 3);
    PathStreams b({make_stream(10, {0, 2}), make_stream(10, {0, 0}), make_stream(10, {0, 1})},
                  make_stream(10, {0, PathStreams::kBridgeTag}));
    const TimeChangedPath pa = run_until_horizon(vsm, 0.0, vsm.x0, cfg, a);
    const TimeChangedPath pb = run_until_horizon(swapped, 0.0, swapped.x0, cfg, b);
    REQUIRE(pa.cellIndex() == pb.cellIndex());
    for (std::size_t k = 0; k <= pa.cellIndex(); ++k) {
        CHECK(pa.at(k)[0] == pb.at(k)[1]);
        CHECK(pa.at(k)[1] == pb.at(k)[2]);
        CHECK(pa.at(k)[2] == pb.at(k)[0]);
    }
}

TEST_CASE("halving the clock step moves u by less than 3 combined SE")
{
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 1.0});
    SimConfig coarse;
    coarse.nPaths = 4000;
    coarse.seed = 11;
    SimConfig fine = coarse;
    fine.nSteps = 200;
    fine.seed = 12;
    const UEstimate a = estimate_u(vsm, 0.0, vsm.x0, coarse);
    const UEstimate b = estimate_u(vsm, 0.0, vsm.x0, fine);
    CHECK(std::abs(a.mean - b.mean) < 3.0 * combined_se(a.stdError, b.stdError));
}
