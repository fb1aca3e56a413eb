#pragma once

// Market-model parameters, simulation settings and the path/estimate
// containers shared by all engines.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "relarb/errors.hpp"

namespace relarb {

/// Generic Markovian market dX = b(X) dt + s(X) dW.
///
/// b is the capitalization drift (X_i β_i) and s the capitalization
/// diffusion (X_i σ_ik); the log-covariance α = σσ' and a = s s' follow.
struct MarketParams {
    std::size_t n = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> diffusion;

    Eigen::MatrixXd covariance(const Eigen::VectorXd& x) const
    {
        const Eigen::MatrixXd s = diffusion(x);
        return s * s.transpose();
    }
};

/// Relative condition number above which s(x) is treated as singular.
inline constexpr double kSingularityThreshold = 1e12;

/// Market price of risk θ(x) solving σ(x)θ = β(x), computed in the
/// equivalent capitalization-scaled form s(x)θ = b(x).
inline Eigen::VectorXd market_price_of_risk(const MarketParams& market, const Eigen::VectorXd& x)
{
    const Eigen::MatrixXd s = market.diffusion(x);
    const Eigen::VectorXd b = market.drift(x);
    if (s.rows() != s.cols() || s.rows() != b.size()) {
        throw DomainError("market_price_of_risk: drift/diffusion shape mismatch");
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(s);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || !(smax / smin <= kSingularityThreshold)) {
        throw SingularMatrix("market_price_of_risk: diffusion matrix is singular (condition " +
                             std::to_string(smin > 0.0 ? smax / smin : INFINITY) + ")");
    }
    return s.fullPivLu().solve(b);
}

/// Volatility-stabilized market dX_i = κ X dt + sqrt(X_i X) dW_i.
///
/// κ is canonical; ζ = 2κ − 1 and the Bessel dimension m = 4κ = 2(1 + ζ)
/// are derived from it so that the identities hold exactly in floating point.
struct VsmParams {
    std::size_t n = 0;
    double kappa = 1.0;
    double zeta = 1.0;
    std::vector<double> x0;
    double besselDim = 4.0;

    static VsmParams from_kappa(double kappa, std::vector<double> x0)
    {
        VsmParams p;
        p.n = x0.size();
        p.kappa = kappa;
        p.zeta = 2.0 * kappa - 1.0;
        p.x0 = std::move(x0);
        p.besselDim = 4.0 * kappa;
        return p;
    }

    static VsmParams from_zeta(double zeta, std::vector<double> x0)
    {
        return from_kappa((1.0 + zeta) / 2.0, std::move(x0));
    }

    /// Same model, different starting point.
    VsmParams started_at(std::span<const double> x) const
    {
        VsmParams p = *this;
        p.x0.assign(x.begin(), x.end());
        p.n = p.x0.size();
        return p;
    }
};

namespace detail {

inline void check_vsm_coefficients(const VsmParams& p)
{
    if (!(p.kappa >= 0.5 && p.kappa <= 1.0)) {
        throw DomainError("VsmParams: kappa = " + std::to_string(p.kappa) +
                          " outside [1/2, 1]");
    }
    if (!(p.zeta >= 0.0 && p.zeta <= 1.0) || p.kappa != (1.0 + p.zeta) / 2.0) {
        throw DomainError("VsmParams: zeta inconsistent with kappa (need kappa = (1+zeta)/2)");
    }
    if (p.besselDim != 4.0 * p.kappa) {
        throw DomainError("VsmParams: Bessel dimension m must equal 4 kappa");
    }
}

inline void check_positive_state(std::span<const double> x, const char* who)
{
    for (double v : x) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw DomainError(std::string(who) + ": capitalizations must be strictly positive");
        }
    }
}

}  // namespace detail

/// Returns the parameters unchanged when every model invariant holds.
inline VsmParams validate_vsm(VsmParams params)
{
    if (params.n < 2) {
        throw DomainError("VsmParams: n = " + std::to_string(params.n) + " (need n >= 2)");
    }
    if (params.x0.size() != params.n) {
        throw DomainError("VsmParams: x0 has " + std::to_string(params.x0.size()) +
                          " entries, n = " + std::to_string(params.n));
    }
    detail::check_vsm_coefficients(params);
    detail::check_positive_state(params.x0, "VsmParams");
    return params;
}

/// The VSM written as a generic market: b_i = κX, s = diag(sqrt(x_i X)).
inline MarketParams vsm_market(const VsmParams& p)
{
    MarketParams m;
    m.n = p.n;
    const double kappa = p.kappa;
    m.drift = [kappa](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(x.size(), kappa * x.sum());
    };
    m.diffusion = [](const Eigen::VectorXd& x) {
        const double total = x.sum();
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.size(), x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            s(i, i) = std::sqrt(x(i) * total);
        }
        return s;
    };
    return m;
}

/// Squared Bessel discretisation used on the Bessel clock.
enum class BesqScheme {
    SumOfSquares,     ///< |sqrt(x) e1 + W|^2 over m independent coordinates
    ExactTransition,  ///< noncentral chi-square transition, any m > 0
    LiteralRecursion  ///< x + (sum of scalar increments)^2; comparison only
};

enum class Interpolation { Linear, BesselBridge };

struct SimConfig {
    double horizonT = 1.0;
    std::size_t nSteps = 100;  // uniform Bessel-clock mesh, dt = T / nSteps
    std::size_t nPaths = 1000;
    std::uint64_t seed = 0;
    Interpolation interpolation = Interpolation::Linear;
    double bridgeStep = 1e-4;
    std::optional<BesqScheme> scheme;  // default: SumOfSquares for integer m
    std::size_t maxSteps = 0;          // 0: derived from the expected clock length
    unsigned threads = 1;

    double dt() const { return horizonT / static_cast<double>(nSteps); }
};

inline const SimConfig& validate_config(const SimConfig& cfg)
{
    if (!(cfg.horizonT > 0.0) || !std::isfinite(cfg.horizonT)) {
        throw DomainError("SimConfig: horizon T must be positive");
    }
    if (cfg.nSteps == 0) {
        throw DomainError("SimConfig: nSteps must be positive");
    }
    if (cfg.nPaths < 2) {
        throw DomainError("SimConfig: nPaths must be at least 2");
    }
    if (cfg.interpolation == Interpolation::BesselBridge &&
        !(cfg.bridgeStep > 0.0 && cfg.bridgeStep <= cfg.dt())) {
        throw DomainError("SimConfig: bridge step must satisfy 0 < dt_b <= dt");
    }
    return cfg;
}

/// Dimension is an integer (sum-of-squares constructions need this).
inline bool is_integer_dim(double m) noexcept
{
    return m > 0.0 && m == std::floor(m) && m < 1e6;
}

inline BesqScheme resolve_scheme(const SimConfig& cfg, double dim)
{
    if (cfg.scheme) {
        return *cfg.scheme;
    }
    return is_integer_dim(dim) ? BesqScheme::SumOfSquares : BesqScheme::ExactTransition;
}

/// Simulated trajectories on a shared time grid. Values are laid out
/// [path][step][stock]. Construction rejects nonpositive entries.
class PathBatch {
  public:
    PathBatch(std::vector<double> times, std::size_t nPaths, std::size_t n,
              std::vector<double> values, std::uint64_t seed, std::vector<std::uint64_t> streamIds)
        : times_(std::move(times)),
          nPaths_(nPaths),
          n_(n),
          values_(std::move(values)),
          seed_(seed),
          streamIds_(std::move(streamIds))
    {
        if (times_.empty()) {
            throw DomainError("PathBatch: empty time grid");
        }
        for (std::size_t k = 1; k < times_.size(); ++k) {
            if (!(times_[k] >= times_[k - 1])) {
                throw DomainError("PathBatch: time grid must be nondecreasing");
            }
        }
        if (values_.size() != nPaths_ * times_.size() * n_) {
            throw DomainError("PathBatch: value array has the wrong size");
        }
        if (streamIds_.size() != nPaths_) {
            throw DomainError("PathBatch: need one stream id per path");
        }
        for (double v : values_) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw DomainError("PathBatch: nonpositive capitalization");
            }
        }
    }

    const std::vector<double>& times() const noexcept { return times_; }
    double start_time() const noexcept { return times_.front(); }
    std::size_t paths() const noexcept { return nPaths_; }
    std::size_t steps() const noexcept { return times_.size(); }
    std::size_t stocks() const noexcept { return n_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id(std::size_t path) const { return streamIds_.at(path); }

    std::span<const double> state(std::size_t path, std::size_t step) const
    {
        return {values_.data() + (path * times_.size() + step) * n_, n_};
    }

  private:
    std::vector<double> times_;
    std::size_t nPaths_;
    std::size_t n_;
    std::vector<double> values_;
    std::uint64_t seed_;
    std::vector<std::uint64_t> streamIds_;
};

/// Monte Carlo estimate of u(τ, x), always paired with its standard error.
struct UEstimate {
    double mean = 0.0;
    double stdError = 0.0;
    std::size_t nPaths = 0;
    double tRemaining = 0.0;
    std::vector<double> state;
};

}  // namespace relarb
