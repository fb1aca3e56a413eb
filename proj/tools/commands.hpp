#pragma once

// The five experiment commands. Each reads its fields from a Config, runs
// the library, and writes CSV files into the output directory.

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "csv.hpp"
#include "relarb/relarb.hpp"

#ifndef RELARB_PRESET_DIR
#define RELARB_PRESET_DIR "presets"
#endif

namespace relarb::app {

struct RunOptions {
    std::filesystem::path outDir = ".";
    unsigned threads = 1;
};

struct Inputs {
    std::optional<std::string> preset;
    std::optional<std::string> configPath;
    std::optional<std::string> seed;
};

inline std::filesystem::path preset_path(const std::string& name)
{
    return std::filesystem::path(RELARB_PRESET_DIR) / (name + ".toml");
}

/// Preset first, then the config file on top, then --seed.
inline Config load_inputs(const Inputs& in)
{
    Config cfg;
    if (in.preset) {
        const auto path = preset_path(*in.preset);
        if (!std::filesystem::exists(path)) {
            throw ConfigError("unknown preset '" + *in.preset + "' (looked for " + path.string() +
                              ")");
        }
        cfg = Config::load(path.string());
    }
    if (in.configPath) {
        cfg.merge(Config::load(*in.configPath));
    }
    if (!in.preset && !in.configPath) {
        throw ConfigError("no configuration: pass --config <path> or --preset <name>");
    }
    if (in.seed) {
        cfg.set("seed", *in.seed, "--seed");
    }
    return cfg;
}

namespace detail {

[[noreturn]] inline void bad(const Config& c, const std::string& key, const std::string& what)
{
    throw ConfigError(c.locate(key) + "field '" + key + "': " + what);
}

inline std::size_t read_count(Config& c, const std::string& key, std::size_t fallback,
                              std::size_t minimum)
{
    const auto v = static_cast<std::size_t>(c.get_u64(key, fallback));
    if (v < minimum) {
        bad(c, key, "must be at least " + std::to_string(minimum));
    }
    return v;
}

inline double read_positive(Config& c, const std::string& key, double fallback)
{
    const double v = c.get_double(key, fallback);
    if (!(v > 0.0)) {
        bad(c, key, "must be positive");
    }
    return v;
}

inline VsmParams read_vsm(Config& c, std::size_t minStocks = 1)
{
    const std::size_t n = read_count(c, "n", 2, minStocks);
    double kappa = 1.0;
    if (c.has("zeta")) {
        const double zeta = c.get_double("zeta", 1.0);
        if (!(zeta >= 0.0 && zeta <= 1.0)) {
            bad(c, "zeta", "must lie in [0, 1]");
        }
        kappa = 0.5 * (1.0 + zeta);
    } else {
        kappa = c.get_double("kappa", 1.0);
        if (!(kappa >= 0.5 && kappa <= 1.0)) {
            bad(c, "kappa", "must lie in [1/2, 1]");
        }
    }
    std::vector<double> x0 = c.get_list("x0", std::vector<double>(n, 1.0));
    if (x0.size() != n) {
        bad(c, "x0", "needs " + std::to_string(n) + " entries");
    }
    for (double v : x0) {
        if (!(v > 0.0)) {
            bad(c, "x0", "entries must be strictly positive");
        }
    }
    return VsmParams::from_kappa(kappa, std::move(x0));
}

inline std::size_t steps_for(Config& c, double T, const std::string& key, double fallbackDt)
{
    const double dt = read_positive(c, key, fallbackDt);
    const double ratio = T / dt;
    const auto steps = static_cast<std::size_t>(std::llround(ratio));
    if (steps == 0 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio) {
        bad(c, key, "T / " + key + " must be a positive integer");
    }
    return steps;
}

inline SimConfig read_sim(Config& c, const VsmParams& vsm, unsigned threads)
{
    SimConfig s;
    s.horizonT = read_positive(c, "T", 1.0);
    s.nSteps = steps_for(c, s.horizonT, "dt", 0.01);
    s.nPaths = read_count(c, "n_paths", 1000, 2);
    s.seed = c.get_u64("seed", 0);
    const std::string interp = c.get_string("interpolation", "linear", {"linear", "bridge"});
    s.interpolation = interp == "bridge" ? Interpolation::BesselBridge : Interpolation::Linear;
    s.bridgeStep = read_positive(c, "bridge_step", 1e-4);
    const std::string scheme = c.get_string(
        "scheme", "auto", {"auto", "sum_of_squares", "exact_transition", "literal_recursion"});
    if (scheme == "sum_of_squares") {
        s.scheme = BesqScheme::SumOfSquares;
    } else if (scheme == "exact_transition") {
        s.scheme = BesqScheme::ExactTransition;
    } else if (scheme == "literal_recursion") {
        s.scheme = BesqScheme::LiteralRecursion;
    }
    if (s.scheme == BesqScheme::SumOfSquares && !is_integer_dim(vsm.besselDim)) {
        bad(c, "scheme", "sum_of_squares needs an integer Bessel dimension 4*kappa");
    }
    s.maxSteps = static_cast<std::size_t>(c.get_u64("max_steps", 0));
    s.threads = threads;
    if (s.interpolation == Interpolation::BesselBridge && s.bridgeStep > s.dt()) {
        bad(c, "bridge_step", "must not exceed dt");
    }
    return s;
}

inline std::string header(const std::string& command, const Config& c)
{
    return "relarb " + command + ": " + c.resolved();
}

}  // namespace detail

/// u(T, x) on a mesh of (x1, x2) -> surface.csv.
inline std::vector<std::filesystem::path> cmd_surface(Config& c, const RunOptions& opt)
{
    const VsmParams vsm = detail::read_vsm(c, 2);
    const SimConfig sim = detail::read_sim(c, vsm, opt.threads);
    MeshSpec mesh;
    AxisSpec* axes[2] = {&mesh.x1, &mesh.x2};
    for (int a = 0; a < 2; ++a) {
        const std::string p = "x" + std::to_string(a + 1) + "_";
        axes[a]->lo = detail::read_positive(c, p + "lo", 3.5);
        axes[a]->hi = c.get_double(p + "hi", 9.0);
        axes[a]->cells = detail::read_count(c, p + "cells", 50, 1);
        if (!(axes[a]->hi > axes[a]->lo)) {
            detail::bad(c, p + "hi", "must exceed " + p + "lo");
        }
    }
    const std::vector<double> fixed =
        c.get_list("fixed", std::vector<double>(vsm.n - 2, vsm.n > 2 ? vsm.x0[2] : 1.0));
    if (fixed.size() != vsm.n - 2) {
        detail::bad(c, "fixed", "needs n - 2 = " + std::to_string(vsm.n - 2) + " entries");
    }
    for (double v : fixed) {
        if (!(v > 0.0)) {
            detail::bad(c, "fixed", "entries must be strictly positive");
        }
    }
    c.reject_unused();

    const USurface surf = sweep_surface(vsm, mesh, fixed, sim);
    const auto path = opt.outDir / "surface.csv";
    CsvWriter w(path, detail::header("surface", c), {"x1", "x2", "u", "std_err", "n_paths", "seed"});
    std::size_t unstable = 0;
    for (std::size_t j1 = 0; j1 < mesh.x1.cells; ++j1) {
        for (std::size_t j2 = 0; j2 < mesh.x2.cells; ++j2) {
            const std::size_t idx = j1 * mesh.x2.cells + j2;
            const UEstimate& e = surf.values[idx];
            if (!std::isfinite(e.mean) || !std::isfinite(e.stdError)) {
                ++unstable;
            }
            w.cell(e.state[0]).cell(e.state[1]).cell(e.mean).cell(e.stdError).cell(e.nPaths);
            w.cell(std::to_string(surface_node_seed(sim.seed, idx))).end_row();
        }
    }
    w.comment("non_finite_estimates=" + std::to_string(unstable));
    w.close();
    return {path};
}

/// u(T - t, X(t)) along one driving path -> upath.csv.
inline std::vector<std::filesystem::path> cmd_upath(Config& c, const RunOptions& opt)
{
    const VsmParams vsm = detail::read_vsm(c, 1);
    const SimConfig sim = detail::read_sim(c, vsm, opt.threads);
    const auto timeSteps = static_cast<std::size_t>(c.get_u64("time_steps", sim.nSteps));
    c.reject_unused();

    const UPath up = sweep_time(vsm, sim, timeSteps);
    std::vector<std::string> cols{"t", "u", "std_err"};
    for (std::size_t i = 0; i < vsm.n; ++i) {
        cols.push_back("x" + std::to_string(i + 1));
    }
    const auto path = opt.outDir / "upath.csv";
    CsvWriter w(path, detail::header("upath", c), cols);
    for (std::size_t k = 0; k < up.times.size(); ++k) {
        w.cell(up.times[k]).cell(up.estimates[k].mean).cell(up.estimates[k].stdError);
        for (std::size_t i = 0; i < vsm.n; ++i) {
            w.cell(up.states[k * vsm.n + i]);
        }
        w.end_row();
    }
    w.close();
    return {path};
}

/// Auxiliary ζ-process hitting experiment -> boundary.csv, trajectories.csv.
inline std::vector<std::filesystem::path> cmd_boundary(Config& c, const RunOptions& opt)
{
    BoundaryConfig b;
    b.n = detail::read_count(c, "n", 2, 1);
    b.x0 = c.get_list("x0", std::vector<double>(b.n, 1.0));
    if (b.x0.size() != b.n) {
        detail::bad(c, "x0", "needs " + std::to_string(b.n) + " entries");
    }
    for (double v : b.x0) {
        if (!(v > 0.0)) {
            detail::bad(c, "x0", "entries must be strictly positive");
        }
    }
    b.horizonT = detail::read_positive(c, "T", 1.0);
    const std::size_t steps = detail::steps_for(c, b.horizonT, "dt", 1e-3);
    b.dt = b.horizonT / static_cast<double>(steps);
    b.nPaths = detail::read_count(c, "n_paths", 10000, 1);
    b.seed = c.get_u64("seed", 0);
    b.positivityFloor = c.get_double("positivity_floor", kPositivityFloor);
    b.noiseScale = c.get_double("noise_scale", 1.0);
    b.keepTrajectories = static_cast<std::size_t>(c.get_u64("keep_trajectories", 20));
    b.threads = opt.threads;
    c.reject_unused();

    const HitReport rep = auxiliary_boundary_experiment(b);
    const std::string head = detail::header("boundary", c);
    const auto hitsPath = opt.outDir / "boundary.csv";
    CsvWriter w(hitsPath, head, {"path_id", "hit", "hit_time"});
    for (std::size_t p = 0; p < rep.hitTimes.size(); ++p) {
        w.cell(p).cell(rep.hit(p) ? "true" : "false");
        w.cell(rep.hit(p) ? format_number(rep.hitTimes[p]) : std::string()).end_row();
    }
    const double z99 = 2.5758293035489004;
    w.comment("fraction_hit=" + format_number(rep.fractionHit) +
              "; std_err=" + format_number(rep.stdError) +
              "; ci99_low=" + format_number(rep.fractionHit - z99 * rep.stdError) +
              "; ci99_high=" + format_number(rep.fractionHit + z99 * rep.stdError));
    w.close();

    std::vector<std::string> cols{"path_id", "hit", "t"};
    for (std::size_t i = 0; i < b.n; ++i) {
        cols.push_back("z" + std::to_string(i + 1));
    }
    const auto trajPath = opt.outDir / "trajectories.csv";
    CsvWriter t(trajPath, head, cols);
    const std::size_t rows = rep.times.size();
    for (std::size_t p = 0; p < rep.keptPaths; ++p) {
        for (std::size_t k = 0; k < rows; ++k) {
            t.cell(p).cell(rep.hit(p) ? "true" : "false").cell(rep.times[k]);
            for (std::size_t i = 0; i < b.n; ++i) {
                t.cell(rep.trajectories[(p * rows + k) * b.n + i]);
            }
            t.end_row();
        }
    }
    t.close();
    return {hitsPath, trajPath};
}

/// Paired Euler vs Bessel failure fractions -> euler_compare.csv.
inline std::vector<std::filesystem::path> cmd_euler_compare(Config& c, const RunOptions& opt)
{
    const VsmParams vsm = detail::read_vsm(c, 1);
    SimConfig sim;
    sim.horizonT = detail::read_positive(c, "T", 1.0);
    sim.nSteps = detail::steps_for(c, sim.horizonT, "dt", 0.01);
    sim.nPaths = detail::read_count(c, "n_paths", 1000, 2);
    sim.seed = c.get_u64("seed", 0);
    sim.maxSteps = static_cast<std::size_t>(c.get_u64("max_steps", 0));
    sim.threads = opt.threads;
    EulerOptions eo;
    eo.positivityFloor = c.get_double("positivity_floor", kPositivityFloor);
    eo.noiseScale = c.get_double("noise_scale", 1.0);
    c.reject_unused();

    const EulerRun euler = euler_vsm_paths(vsm, sim, eo);
    const auto bessel = bessel_vsm_paths(vsm, sim, eo.positivityFloor);
    const auto path = opt.outDir / "euler_compare.csv";
    CsvWriter w(path, detail::header("euler_compare", c), {"method", "fail_fraction", "n_paths"});
    w.cell("euler").cell(euler.report.fail_fraction()).cell(euler.report.nPaths).end_row();
    w.cell("bessel").cell(bessel.second.fail_fraction()).cell(bessel.second.nPaths).end_row();
    w.close();
    return {path};
}

/// Penalized BSDE ladder -> bsde.csv, k_trace.csv.
inline std::vector<std::filesystem::path> cmd_bsde(Config& c, const RunOptions& opt)
{
    const VsmParams vsm = detail::read_vsm(c, 1);
    if (vsm.n > 3) {
        detail::bad(c, "n", "the BSDE solver is limited to n <= 3");
    }
    const double T = detail::read_positive(c, "T", 1.0);
    BsdeConfig b;
    b.nTimeSteps = detail::read_count(c, "time_steps", 50, 1);
    b.clockSteps = detail::steps_for(c, T, "clock_dt", 0.002);
    b.nPaths = detail::read_count(c, "n_paths", 10000, 2);
    b.replications = detail::read_count(c, "replications", 8, 2);
    b.seed = c.get_u64("seed", 0);
    b.lambdas = c.get_list("lambdas", {0.0, 1.0, 10.0, 100.0});
    for (std::size_t i = 0; i < b.lambdas.size(); ++i) {
        if (!(b.lambdas[i] >= 0.0) || (i > 0 && b.lambdas[i] < b.lambdas[i - 1])) {
            detail::bad(c, "lambdas", "must be nonnegative and nondecreasing");
        }
    }
    if (b.lambdas.empty()) {
        detail::bad(c, "lambdas", "must not be empty");
    }
    const std::string basis =
        c.get_string("basis", "log_polynomial", {"log_polynomial", "polynomial"});
    b.basis.kind = basis == "polynomial" ? BasisKind::Polynomial : BasisKind::LogPolynomial;
    b.basis.degree = static_cast<unsigned>(detail::read_count(c, "degree", 2, 1));
    b.weightFloor = c.get_double("weight_floor", 0.0);
    if (!(b.weightFloor >= 0.0 && b.weightFloor < 1.0 / static_cast<double>(vsm.n))) {
        detail::bad(c, "weight_floor", "must lie in [0, 1/n)");
    }
    b.threads = opt.threads;
    c.reject_unused();

    const LadderResult lad = solve_reflected(vsm, T, vsm.x0, b);
    const std::string head = detail::header("bsde", c);
    const auto ladderPath = opt.outDir / "bsde.csv";
    CsvWriter w(ladderPath, head, {"lambda", "y0", "std_err"});
    for (const auto& s : lad.solutions) {
        w.cell(s.lambda).cell(s.y0).cell(s.stdError).end_row();
    }
    w.comment(std::string("non_monotone_ladder=") + (lad.nonMonotone ? "true" : "false"));
    w.close();

    const auto kPath = opt.outDir / "k_trace.csv";
    CsvWriter k(kPath, head, {"lambda", "t", "k"});
    for (const auto& s : lad.solutions) {
        for (std::size_t j = 0; j < s.times.size(); ++j) {
            k.cell(s.lambda).cell(s.times[j]).cell(s.kTrace[j]).end_row();
        }
        k.comment("lambda=" + format_number(s.lambda) +
                  "; complementarity_residual=" + format_number(s.complementarity));
    }
    k.close();
    return {ladderPath, kPath};
}

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 1;

/// Run a named command; exceptions are left to the caller.
inline std::vector<std::filesystem::path> run_command(const std::string& name, Config& c,
                                                      const RunOptions& opt)
{
    // A config may name the command it was written for; it must match.
    c.get_string("command", name, {name});
    if (name == "surface") {
        return cmd_surface(c, opt);
    }
    if (name == "upath") {
        return cmd_upath(c, opt);
    }
    if (name == "boundary") {
        return cmd_boundary(c, opt);
    }
    if (name == "euler_compare") {
        return cmd_euler_compare(c, opt);
    }
    if (name == "bsde") {
        return cmd_bsde(c, opt);
    }
    throw ConfigError("unknown command '" + name + "'");
}

}  // namespace relarb::app
