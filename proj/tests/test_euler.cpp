#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "relarb/euler.hpp"

using namespace relarb;

TEST_CASE("noise-free Euler reproduces the ODE recursion")
{
    // X = 2 X_i by symmetry, so X_i grows by (1 + 2 dt) per step.
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 1.0});
    SimConfig cfg;
    cfg.nPaths = 3;
    EulerOptions opt;
    opt.noiseScale = 0.0;
    const EulerRun run = euler_vsm_paths(vsm, cfg, opt);
    for (std::size_t p = 0; p < 3; ++p) {
        double expected = 1.0;
        for (std::size_t k = 0; k < run.times.size(); ++k) {
            CHECK(run.state(p, k)[0] == Catch::Approx(expected).epsilon(1e-13));
            CHECK(run.state(p, k)[1] == Catch::Approx(expected).epsilon(1e-13));
            expected *= 1.0 + 2.0 * cfg.dt();
        }
    }
    CHECK(run.report.failures == 0);
}

TEST_CASE("Euler fails where the Bessel engine cannot")
{
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 1.0});
    SimConfig cfg;
    cfg.seed = 3;
    const EulerRun euler = euler_vsm_paths(vsm, cfg);
    const auto bessel = bessel_vsm_paths(vsm, cfg);
    CHECK(bessel.second.failures == 0);
    CHECK(euler.report.fail_fraction() > bessel.second.fail_fraction());
    for (std::size_t p = 0; p < cfg.nPaths; ++p) {
        const double t = euler.report.firstFailureTime[p];
        if (t != kNever) {
            REQUIRE(t > 0.0);
            REQUIRE(t <= 1.0);
        }
    }
}

TEST_CASE("Euler failures grow with the number of stocks")
{
    SimConfig cfg;
    cfg.seed = 4;
    const EulerRun two = euler_vsm_paths(VsmParams::from_kappa(1.0, std::vector<double>(2, 0.01)), cfg);
    const EulerRun eight = euler_vsm_paths(VsmParams::from_kappa(1.0, std::vector<double>(8, 0.01)), cfg);
    CHECK(eight.report.fail_fraction() > two.report.fail_fraction());
}

TEST_CASE("Euler and Bessel share the first Gaussian draw of each stock")
{
    const VsmParams vsm = VsmParams::from_kappa(1.0, {1.0, 1.0});
    SimConfig cfg;
    cfg.nPaths = 2;
    cfg.seed = 5;
    PathStreams s(cfg.seed, 1, 2);
    const double z = standard_normal(s.stock(0));
    const EulerRun run = euler_vsm_paths(vsm, cfg);
    const double dt = cfg.dt();
    CHECK(run.state(1, 1)[0] == Catch::Approx(1.0 + 2.0 * dt + std::sqrt(2.0 * dt) * z).epsilon(1e-14));
}

TEST_CASE("Bessel batches are valid PathBatches starting at x0")
{
    const VsmParams vsm = VsmParams::from_kappa(0.75, {0.5, 2.0, 1.0});
    SimConfig cfg;
    cfg.nPaths = 50;
    const auto [batch, report] = bessel_vsm_paths(vsm, cfg);
    CHECK(batch.paths() == 50);
    CHECK(batch.steps() == 101);
    CHECK(batch.state(7, 0)[1] == 2.0);
    CHECK(report.failures == 0);
}

TEST_CASE("zero-noise auxiliary process never hits")
{
    BoundaryConfig cfg;
    cfg.nPaths = 100;
    cfg.noiseScale = 0.0;
    const HitReport rep = auxiliary_boundary_experiment(cfg);
    CHECK(rep.fractionHit == 0.0);
}

TEST_CASE("one step from (1, 1) cannot reach the boundary")
{
    BoundaryConfig cfg;
    cfg.horizonT = 1e-3;
    cfg.dt = 1e-3;
    cfg.nPaths = 10000;
    const HitReport rep = auxiliary_boundary_experiment(cfg);
    CHECK(rep.fractionHit == 0.0);
}

TEST_CASE("the auxiliary process hits the boundary with positive probability")
{
    BoundaryConfig cfg;
    cfg.nPaths = 4000;
    cfg.seed = 6;
    cfg.keepTrajectories = 10;
    const HitReport rep = auxiliary_boundary_experiment(cfg);
    CHECK(rep.fractionHit - 2.5758 * rep.stdError > 0.0);
    CHECK(rep.trajectories.size() == 10 * rep.times.size() * 2);
    for (std::size_t p = 0; p < 10; ++p) {
        if (rep.hit(p)) {
            // frozen after absorption
            const std::size_t rows = rep.times.size();
            const double* last = &rep.trajectories[(p * rows + rows - 1) * 2];
            CHECK((last[0] <= cfg.positivityFloor || last[1] <= cfg.positivityFloor));
        }
    }
}

TEST_CASE("a coarser positivity floor counts at least as many hits")
{
    BoundaryConfig cfg;
    cfg.nPaths = 2000;
    cfg.seed = 7;
    double previous = 0.0;
    for (double floor : {1e-12, 1e-6, 1e-3, 1e-1}) {
        cfg.positivityFloor = floor;
        const double f = auxiliary_boundary_experiment(cfg).fractionHit;
        CHECK(f >= previous);
        previous = f;
    }
}

TEST_CASE("boundary experiment input checks")
{
    BoundaryConfig cfg;
    cfg.nPaths = 0;
    CHECK_THROWS_AS(auxiliary_boundary_experiment(cfg), DomainError);
    cfg.nPaths = 10;
    cfg.x0 = {1.0, 0.0};
    CHECK_THROWS_AS(auxiliary_boundary_experiment(cfg), DomainError);
}
