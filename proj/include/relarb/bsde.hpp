#pragma once

// Backward regression solver for u(T - t, X_t) and its penalized
// (reflected at S ≡ 0) variant.
//
// Itô on Y_t = u(T - t, X_t) gives dY = f(X, Z) dt + Z·dW with
//   f(x, z) = b(x)'(s(x)')^{-1} z - (1/Σx) 1's(x) z,
// so Y_t = 1 - ∫_t^T f dr - ∫_t^T Z·dW. In the usual backward form
// Y_t = ξ + ∫ F dr - ∫ Z dW the driver is F = kDriverSign · f.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relarb/errors.hpp"
#include "relarb/model.hpp"
#include "relarb/parallel.hpp"
#include "relarb/rng.hpp"
#include "relarb/stats.hpp"
#include "relarb/time_change.hpp"

namespace relarb {

inline constexpr double kDriverSign = -1.0;

/// b(x)'(s(x)')^{-1} z - (1/Σx) 1's(x) z for a generic market.
inline double driver_f(const MarketParams& market, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& z)
{
    if (x.size() != z.size() || static_cast<std::size_t>(x.size()) != market.n) {
        throw DomainError("driver_f: dimension mismatch");
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!(x(i) > 0.0)) {
            throw DomainError("driver_f: state must be strictly positive");
        }
    }
    const Eigen::VectorXd theta = market_price_of_risk(market, x);
    const Eigen::MatrixXd s = market.diffusion(x);
    return theta.dot(z) - (s * z).sum() / x.sum();
}

/// The same driver with the VSM coefficients substituted:
/// Σ_i z_i (κ sqrt(X/x_i) - sqrt(x_i/X)).
inline double driver_f(const VsmParams& vsm, std::span<const double> x, std::span<const double> z)
{
    double total = 0.0;
    for (double v : x) {
        total += v;
    }
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        f += z[i] * (vsm.kappa * std::sqrt(total / x[i]) - std::sqrt(x[i] / total));
    }
    return f;
}

enum class BasisKind { Polynomial, LogPolynomial };

struct BasisSpec {
    BasisKind kind = BasisKind::LogPolynomial;
    unsigned degree = 2;
};

struct BsdeConfig {
    std::size_t nTimeSteps = 50;
    std::size_t nPaths = 10000;
    BasisSpec basis;
    std::vector<double> lambdas{0.0, 1.0, 10.0, 100.0};
    std::uint64_t seed = 0;
    std::size_t replications = 8;
    std::size_t clockSteps = 500;  // Bessel-clock mesh for the forward paths, dt = T / clockSteps
    /// Paths whose smallest market weight drops to this level are absorbed
    /// with Y = 0 from then on. 0 leaves the scheme unmodified.
    double weightFloor = 0.0;
    unsigned threads = 1;
};

struct BsdeSolution {
    double y0 = 0.0;
    double stdError = 0.0;  // across replications
    std::vector<double> replicaY0;
    std::vector<double> times;
    std::vector<std::vector<double>> yGrid;  // per-time regression coefficients for Y
    std::vector<std::vector<double>> zGrid;  // per-time coefficients for Z, components stacked
    std::vector<double> kTrace;              // K_{t_j}, replication average
    double complementarity = 0.0;            // |Σ_j E[Y_j ΔK_j]|
    double lambda = 0.0;
};

struct LadderResult {
    std::vector<BsdeSolution> solutions;  // one per λ, in ladder order
    bool nonMonotone = false;             // y0 decreased by more than 2 combined SE somewhere
    const BsdeSolution& final() const { return solutions.back(); }
};

inline void validate_bsde(const VsmParams& vsm, double T, std::span<const double> x0,
                          const BsdeConfig& cfg)
{
    detail::check_vsm_coefficients(vsm);
    if (vsm.n == 0 || vsm.n > 3) {
        throw DomainError("BSDE solver is limited to n <= 3 stocks");
    }
    if (x0.size() != vsm.n) {
        throw DomainError("BSDE: x0 has the wrong dimension");
    }
    detail::check_positive_state(x0, "BSDE");
    if (!(T > 0.0)) {
        throw DomainError("BSDE: horizon must be positive");
    }
    if (cfg.nTimeSteps == 0 || cfg.nPaths < 2 || cfg.replications == 0 || cfg.clockSteps == 0) {
        throw DomainError("BSDE: time steps, paths, replications and clock steps must be positive");
    }
    if (cfg.basis.degree < 1) {
        throw DomainError("BSDE: basis degree must be at least 1");
    }
    if (cfg.lambdas.empty()) {
        throw DomainError("BSDE: empty penalization ladder");
    }
    for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
        if (!(cfg.lambdas[i] >= 0.0) || (i > 0 && cfg.lambdas[i] < cfg.lambdas[i - 1])) {
            throw DomainError("BSDE: penalization ladder must be nonnegative and nondecreasing");
        }
    }
    if (!(cfg.weightFloor >= 0.0 && cfg.weightFloor < 1.0 / static_cast<double>(vsm.n))) {
        throw DomainError("BSDE: weight floor must lie in [0, 1/n)");
    }
}

namespace detail {

/// Standardized monomials of total degree <= d in the features
/// (log x_1..log x_n, log Σx) or their raw counterparts.
class RegressionBasis {
  public:
    RegressionBasis(BasisSpec spec, std::size_t n) : spec_(spec), n_(n)
    {
        features_ = n == 1 ? 1 : n + 1;
        build_exponents(std::vector<unsigned>(features_, 0), 0, spec.degree);
    }

    std::size_t size() const noexcept { return exponents_.size(); }

    /// Design matrix for the states rows[p] (each of length n).
    Eigen::MatrixXd design(const std::vector<double>& states, std::size_t paths)
    {
        Eigen::MatrixXd raw(paths, features_);
        for (std::size_t p = 0; p < paths; ++p) {
            const double* x = states.data() + p * n_;
            double total = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                total += x[i];
                raw(p, i) = feature(x[i]);
            }
            if (features_ > n_) {
                raw(p, n_) = feature(total);
            }
        }
        mean_ = raw.colwise().mean();
        scale_ = ((raw.rowwise() - mean_).array().square().colwise().sum() /
                  static_cast<double>(paths))
                     .sqrt();
        for (Eigen::Index c = 0; c < scale_.size(); ++c) {
            if (!(scale_(c) > 1e-300)) {
                scale_(c) = 1.0;
            }
        }
        const Eigen::MatrixXd scaled = (raw.rowwise() - mean_).array().rowwise() / scale_.array();
        Eigen::MatrixXd B(paths, size());
        for (std::size_t b = 0; b < size(); ++b) {
            for (std::size_t p = 0; p < paths; ++p) {
                double v = 1.0;
                for (std::size_t f = 0; f < features_; ++f) {
                    for (unsigned e = 0; e < exponents_[b][f]; ++e) {
                        v *= scaled(p, f);
                    }
                }
                B(p, b) = v;
            }
        }
        return B;
    }

  private:
    double feature(double v) const
    {
        return spec_.kind == BasisKind::LogPolynomial ? std::log(v) : v;
    }

    void build_exponents(std::vector<unsigned> cur, std::size_t f, unsigned left)
    {
        if (f == features_) {
            exponents_.push_back(cur);
            return;
        }
        for (unsigned e = 0; e <= left; ++e) {
            cur[f] = e;
            build_exponents(cur, f + 1, left - e);
        }
    }

    BasisSpec spec_;
    std::size_t n_;
    std::size_t features_ = 0;
    std::vector<std::vector<unsigned>> exponents_;
    Eigen::RowVectorXd mean_;
    Eigen::RowVectorXd scale_;
};

/// Least squares via a rank-revealing decomposition.
class Regressor {
  public:
    explicit Regressor(const Eigen::MatrixXd& design) : B_(design), cod_(design)
    {
        if (design.rows() < design.cols()) {
            throw RegressionIllConditioned("regression has " + std::to_string(design.rows()) +
                                           " samples for " + std::to_string(design.cols()) +
                                           " basis functions");
        }
    }

    /// Returns fitted values; coefficients go to `coef`.
    Eigen::VectorXd fit(const Eigen::VectorXd& target, std::vector<double>& coef) const
    {
        const Eigen::VectorXd c = cod_.solve(target);
        if (!c.allFinite()) {
            throw RegressionIllConditioned("regression produced non-finite coefficients");
        }
        coef.insert(coef.end(), c.data(), c.data() + c.size());
        return B_ * c;
    }

  private:
    const Eigen::MatrixXd& B_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
};

/// Forward paths on the calendar grid, plus the Brownian increments
/// reconstructed as s^{-1}(ΔX - bΔt).
struct ForwardSample {
    std::size_t paths = 0;
    std::size_t n = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> states;  // [j] -> [p][i]
    std::vector<std::vector<double>> dW;      // [j] -> [p][i], j < M
    std::vector<std::size_t> absorbedAt;      // first grid index with Y forced to 0 (M+1: never)
};

inline ForwardSample simulate_forward(const VsmParams& vsm, double T, std::span<const double> x0,
                                      const BsdeConfig& cfg, std::uint64_t seed)
{
    const std::size_t M = cfg.nTimeSteps;
    const std::size_t n = vsm.n;
    ForwardSample fs;
    fs.paths = cfg.nPaths;
    fs.n = n;
    fs.times.resize(M + 1);
    for (std::size_t j = 0; j <= M; ++j) {
        fs.times[j] = T * static_cast<double>(j) / static_cast<double>(M);
    }
    fs.times.back() = T;

    SimConfig sim;
    sim.horizonT = T;
    sim.nSteps = cfg.clockSteps;
    sim.nPaths = cfg.nPaths;
    sim.seed = seed;

    std::vector<CalendarPath> raw(cfg.nPaths);
    parallel_for(cfg.nPaths, cfg.threads, [&](std::size_t p) {
        PathStreams streams(seed, p, n);
        raw[p] = simulate_calendar_path(vsm, x0, fs.times, sim, streams, cfg.weightFloor);
    });

    fs.states.assign(M + 1, std::vector<double>(cfg.nPaths * n));
    fs.dW.assign(M, std::vector<double>(cfg.nPaths * n));
    fs.absorbedAt.assign(cfg.nPaths, M + 1);
    const double h = T / static_cast<double>(M);
    for (std::size_t p = 0; p < cfg.nPaths; ++p) {
        for (std::size_t j = 0; j <= M; ++j) {
            std::copy_n(raw[p].values.begin() + j * n, n, fs.states[j].begin() + p * n);
        }
        if (raw[p].breachTime != INFINITY) {
            const auto first = std::lower_bound(fs.times.begin(), fs.times.end(),
                                                raw[p].breachTime);
            fs.absorbedAt[p] = static_cast<std::size_t>(first - fs.times.begin());
        }
        for (std::size_t j = 0; j < M; ++j) {
            const double* x = fs.states[j].data() + p * n;
            const double* xn = fs.states[j + 1].data() + p * n;
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                total += x[i];
            }
            for (std::size_t i = 0; i < n; ++i) {
                fs.dW[j][p * n + i] =
                    (xn[i] - x[i] - vsm.kappa * total * h) / std::sqrt(x[i] * total);
            }
        }
    }
    return fs;
}

struct BackwardPass {
    double y0 = 0.0;
    std::vector<std::vector<double>> yCoef;
    std::vector<std::vector<double>> zCoef;
    std::vector<double> kTrace;
    double complementarity = 0.0;
};

/// Explicit scheme, penalty applied implicitly:
///   Ŷ_j = E[Y_{j+1} | X_j],  Z_j = E[(Y_{j+1} - Ŷ_j) ΔW_j / h | X_j],
///   c = Ŷ_j + h F(X_j, Z_j),  Y_j = c if c >= 0 else c / (1 + λh),
///   ΔK_j = λ h Y_j^-.
inline BackwardPass backward_pass(const VsmParams& vsm, const ForwardSample& fs,
                                  const BsdeConfig& cfg, double lambda)
{
    const std::size_t M = fs.times.size() - 1;
    const std::size_t P = fs.paths;
    const std::size_t n = fs.n;
    const double h = fs.times.back() / static_cast<double>(M);
    BackwardPass out;
    out.yCoef.assign(M + 1, {});
    out.zCoef.assign(M + 1, {});
    out.yCoef[M] = {1.0};
    std::vector<double> increments(M + 1, 0.0);

    Eigen::VectorXd Y = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(P));
    for (std::size_t p = 0; p < P; ++p) {
        if (fs.absorbedAt[p] <= M) {
            Y(static_cast<Eigen::Index>(p)) = 0.0;
        }
    }
    RegressionBasis basis(cfg.basis, n);
    std::vector<double> z(n);
    for (std::size_t jj = M; jj-- > 0;) {
        const std::size_t j = jj;
        Eigen::VectorXd yHat;
        std::vector<Eigen::VectorXd> zHat(n);
        std::vector<double>& yc = out.yCoef[j];
        std::vector<double>& zc = out.zCoef[j];
        std::vector<Eigen::VectorXd> zTarget(n, Eigen::VectorXd(static_cast<Eigen::Index>(P)));
        const auto z_targets = [&] {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t p = 0; p < P; ++p) {
                    const auto ep = static_cast<Eigen::Index>(p);
                    zTarget[i](ep) = (Y(ep) - yHat(ep)) * fs.dW[j][p * n + i] / h;
                }
            }
        };
        if (j == 0) {
            // X_0 is deterministic: conditional expectations are plain means.
            const double m = Y.mean();
            yHat = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(P), m);
            yc = {m};
            z_targets();
            for (std::size_t i = 0; i < n; ++i) {
                const double mz = zTarget[i].mean();
                zHat[i] = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(P), mz);
                zc.push_back(mz);
            }
        } else {
            const Eigen::MatrixXd B = basis.design(fs.states[j], P);
            const Regressor reg(B);
            yHat = reg.fit(Y, yc);
            z_targets();
            for (std::size_t i = 0; i < n; ++i) {
                zHat[i] = reg.fit(zTarget[i], zc);
            }
        }

        double dK = 0.0;
        double yDotK = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            const auto ep = static_cast<Eigen::Index>(p);
            if (fs.absorbedAt[p] <= j) {
                Y(ep) = 0.0;
                continue;
            }
            for (std::size_t i = 0; i < n; ++i) {
                z[i] = zHat[i](ep);
            }
            const std::span<const double> x(fs.states[j].data() + p * n, n);
            const double c = yHat(ep) + h * kDriverSign * driver_f(vsm, x, z);
            const double y = c >= 0.0 ? c : c / (1.0 + lambda * h);
            const double k = lambda * h * std::max(-y, 0.0);
            Y(ep) = y;
            dK += k;
            yDotK += y * k;
        }
        increments[j] = dK / static_cast<double>(P);
        out.complementarity += yDotK / static_cast<double>(P);
    }
    out.y0 = Y.mean();
    out.complementarity = std::abs(out.complementarity);
    out.kTrace.assign(M + 1, 0.0);
    for (std::size_t j = 1; j <= M; ++j) {
        out.kTrace[j] = out.kTrace[j - 1] + increments[j - 1];
    }
    return out;
}

inline std::uint64_t replication_seed(std::uint64_t seed, std::size_t r)
{
    return derive_seed(seed, {0x62736465ull, r});  // "bsde"
}

}  // namespace detail

/// Penalized ladder: one solution per λ, all λ sharing the same forward paths
/// within a replication. λ = 0 is the unreflected scheme.
inline LadderResult solve_reflected(const VsmParams& vsm, double T, std::span<const double> x0,
                                    const BsdeConfig& cfg)
{
    validate_bsde(vsm, T, x0, cfg);
    const std::size_t L = cfg.lambdas.size();
    const std::size_t R = cfg.replications;
    std::vector<std::vector<detail::BackwardPass>> passes(L, std::vector<detail::BackwardPass>(R));
    std::vector<double> times;
    for (std::size_t r = 0; r < R; ++r) {
        const detail::ForwardSample fs =
            detail::simulate_forward(vsm, T, x0, cfg, detail::replication_seed(cfg.seed, r));
        times = fs.times;
        for (std::size_t l = 0; l < L; ++l) {
            passes[l][r] = detail::backward_pass(vsm, fs, cfg, cfg.lambdas[l]);
        }
    }

    LadderResult out;
    for (std::size_t l = 0; l < L; ++l) {
        BsdeSolution sol;
        sol.lambda = cfg.lambdas[l];
        sol.times = times;
        sol.kTrace.assign(times.size(), 0.0);
        for (std::size_t r = 0; r < R; ++r) {
            sol.replicaY0.push_back(passes[l][r].y0);
            for (std::size_t j = 0; j < times.size(); ++j) {
                sol.kTrace[j] += passes[l][r].kTrace[j] / static_cast<double>(R);
            }
            sol.complementarity += passes[l][r].complementarity / static_cast<double>(R);
        }
        const SampleSummary s = summarize(sol.replicaY0);
        sol.y0 = s.mean;
        sol.stdError = s.stdError;
        sol.yGrid = passes[l][0].yCoef;
        sol.zGrid = passes[l][0].zCoef;
        out.solutions.push_back(std::move(sol));
    }
    for (std::size_t l = 1; l < L; ++l) {
        const auto& a = out.solutions[l - 1];
        const auto& b = out.solutions[l];
        if (b.y0 < a.y0 - 2.0 * combined_se(a.stdError, b.stdError)) {
            out.nonMonotone = true;
        }
    }
    return out;
}

/// Unreflected solve: the ladder with λ = 0 only.
inline BsdeSolution solve_bsde(const VsmParams& vsm, double T, std::span<const double> x0,
                               BsdeConfig cfg)
{
    cfg.lambdas = {0.0};
    return solve_reflected(vsm, T, x0, cfg).solutions.front();
}

}  // namespace relarb
