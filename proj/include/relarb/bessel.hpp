#pragma once

// Squared Bessel processes and Bessel bridges.
//
// BESQ^m started at x solves dQ = m dt + 2 sqrt(Q) dW. For integer m it is
// the squared norm of an m-dimensional Brownian motion started at sqrt(x) e1;
// for any m > 0 its transition over dt is dt times a noncentral chi-square
// with m degrees of freedom and noncentrality q / dt. Nonnegativity is
// structural in both constructions.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "relarb/errors.hpp"
#include "relarb/model.hpp"
#include "relarb/rng.hpp"

namespace relarb {

struct SquaredBesselSpec {
    double dim = 4.0;
    double start = 0.0;
    BesqScheme scheme = BesqScheme::SumOfSquares;
};

/// Direction of the bridge end point relative to the start point e1.
enum class EndpointPlacement {
    /// End direction drawn from von Mises-Fisher(e1, ab/duration): the norm
    /// of the vector bridge is then an exact Bessel bridge.
    VonMisesFisher,
    /// Both end points on e1. Cheaper, but biased toward larger norms.
    Aligned
};

struct BridgeSpec {
    double dim = 4.0;
    double start = 1.0;  // a = R at the left end, > 0
    double end = 1.0;    // b = R at the right end, > 0
    double duration = 1.0;
    double step = 0.1;
    EndpointPlacement placement = EndpointPlacement::VonMisesFisher;
};

namespace detail {

inline std::size_t integer_dim(double m, const char* who)
{
    if (!is_integer_dim(m)) {
        throw DomainError(std::string(who) + ": dimension must be a positive integer, got " +
                          std::to_string(m));
    }
    return static_cast<std::size_t>(m);
}

/// dt * chi'^2_m(q/dt) as a Poisson(q / 2dt) mixture of central chi-squares.
template <class Engine>
double noncentral_chi2_poisson_mixture(double dim, double q, double dt, Engine& eng)
{
    const double halfLambda = 0.5 * q / dt;
    long k = 0;
    if (halfLambda > 0.0) {
        boost::random::poisson_distribution<long, double> poisson(halfLambda);
        k = poisson(eng);
    }
    boost::random::gamma_distribution<double> gamma(0.5 * dim + static_cast<double>(k), 1.0);
    return 2.0 * dt * gamma(eng);
}

/// Points {0, step, 2 step, ..., duration}; the last interval may be short.
inline std::vector<double> bridge_grid(double duration, double step)
{
    const double ratio = duration / step;
    auto intervals = static_cast<std::size_t>(std::floor(ratio));
    if (ratio - static_cast<double>(intervals) > 1e-9 * ratio) {
        ++intervals;
    }
    intervals = std::max<std::size_t>(intervals, 1);
    std::vector<double> grid(intervals + 1);
    for (std::size_t k = 0; k < intervals; ++k) {
        grid[k] = static_cast<double>(k) * step;
    }
    grid[intervals] = duration;
    return grid;
}

/// One scalar Brownian bridge from a to b sampled on `grid` (grid[0] = 0).
/// Writes grid.size() values into out; both ends are copied, not computed.
template <class Engine>
void scalar_bridge(double a, double b, std::span<const double> grid, std::span<double> out,
                   Engine& eng)
{
    const double duration = grid.back();
    out[0] = a;
    double h = a;
    for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
        const double t = grid[k - 1];
        const double dtk = grid[k] - t;
        const double left = duration - t;
        const double mean = h + (b - h) * dtk / left;
        const double var = dtk * (left - dtk) / left;
        h = mean + std::sqrt(var) * standard_normal(eng);
        out[k] = h;
    }
    out[grid.size() - 1] = b;
}

}  // namespace detail

struct BesqIncrement {
    double q = 0.0;
    std::vector<double> w;
};

/// One step of the sum-of-squares construction: W += dW and
/// Q = (sqrt(x) + W_1)^2 + W_2^2 + ... + W_m^2.
inline BesqIncrement besq_increment_sum_of_squares(const SquaredBesselSpec& spec,
                                                   std::span<const double> prevW,
                                                   std::span<const double> dW)
{
    if (spec.scheme != BesqScheme::SumOfSquares) {
        throw DomainError("besq_increment_sum_of_squares: spec uses a different scheme");
    }
    const std::size_t m = detail::integer_dim(spec.dim, "besq_increment_sum_of_squares");
    if (prevW.size() != m || dW.size() != m) {
        throw DomainError("besq_increment_sum_of_squares: Brownian vectors must have m entries");
    }
    if (!(spec.start >= 0.0)) {
        throw DomainError("besq_increment_sum_of_squares: start must be nonnegative");
    }
    BesqIncrement out;
    out.w.resize(m);
    const double root = std::sqrt(spec.start);
    for (std::size_t j = 0; j < m; ++j) {
        out.w[j] = prevW[j] + dW[j];
        const double c = (j == 0 ? root : 0.0) + out.w[j];
        out.q += c * c;
    }
    return out;
}

/// Draw Q_{t+dt} given Q_t = q from the exact squared-Bessel transition.
template <class Engine>
double besq_exact_transition(const SquaredBesselSpec& spec, double q, double dt, Engine& eng)
{
    if (!(dt > 0.0)) {
        throw DomainError("besq_exact_transition: dt must be positive");
    }
    if (!(spec.dim > 0.0) || !(q >= 0.0)) {
        throw DomainError("besq_exact_transition: need m > 0 and q >= 0");
    }
    if (is_integer_dim(spec.dim)) {
        const auto m = static_cast<std::size_t>(spec.dim);
        const double sdt = std::sqrt(dt);
        const double shifted = std::sqrt(q) + sdt * standard_normal(eng);
        double acc = shifted * shifted;
        for (std::size_t j = 1; j < m; ++j) {
            const double z = standard_normal(eng);
            acc += dt * z * z;
        }
        return acc;
    }
    return detail::noncentral_chi2_poisson_mixture(spec.dim, q, dt, eng);
}

/// Brownian bridge from a (t = 0) to b (t = duration) on the grid
/// {0, step, ..., duration}. Both end points are exact.
template <class Engine>
std::vector<double> brownian_bridge_path(double a, double b, double duration, double step,
                                         Engine& eng)
{
    if (!(duration > 0.0) || !(step > 0.0)) {
        throw DomainError("brownian_bridge_path: duration and step must be positive");
    }
    if (step > duration) {
        throw DomainError("brownian_bridge_path: step exceeds duration");
    }
    const std::vector<double> grid = detail::bridge_grid(duration, step);
    std::vector<double> out(grid.size());
    detail::scalar_bridge(a, b, grid, out, eng);
    return out;
}

/// Unit vector in R^dim from the von Mises-Fisher law with mean direction e1
/// and concentration `concentration` (Wood 1994 rejection sampler).
template <class Engine>
std::vector<double> sample_von_mises_fisher(std::size_t dim, double concentration, Engine& eng)
{
    if (dim == 0 || !(concentration >= 0.0)) {
        throw DomainError("sample_von_mises_fisher: need dim >= 1 and concentration >= 0");
    }
    std::vector<double> omega(dim, 0.0);
    if (dim == 1) {
        // S^0 = {-1, +1} with weights exp(+k), exp(-k)
        const double pPlus = 1.0 / (1.0 + std::exp(-2.0 * concentration));
        omega[0] = uniform01(eng) < pPlus ? 1.0 : -1.0;
        return omega;
    }

    const double p1 = static_cast<double>(dim - 1);
    const double k = concentration;
    const double b = p1 / (2.0 * k + std::sqrt(4.0 * k * k + p1 * p1));
    const double x0 = (1.0 - b) / (1.0 + b);
    const double c = k * x0 + p1 * std::log(4.0 * b / ((1.0 + b) * (1.0 + b)));
    boost::random::beta_distribution<double> beta(0.5 * p1, 0.5 * p1);

    double w = 0.0;
    for (;;) {
        const double z = beta(eng);
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        const double u = uniform01(eng);
        if (k * w + p1 * std::log(1.0 - x0 * w) - c >= std::log(u)) {
            break;
        }
    }

    // uniform direction on the sphere orthogonal to e1
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (std::size_t j = 1; j < dim; ++j) {
            omega[j] = standard_normal(eng);
            norm2 += omega[j] * omega[j];
        }
    } while (!(norm2 > 0.0));
    const double scale = std::sqrt(std::max(0.0, 1.0 - w * w) / norm2);
    omega[0] = w;
    for (std::size_t j = 1; j < dim; ++j) {
        omega[j] *= scale;
    }
    return omega;
}

/// Bessel bridge R from a to b: the norm of an m-dimensional Brownian bridge
/// from a e1 to b w on the grid {0, step, ..., duration}. R(0) = a and
/// R(duration) = b exactly.
template <class Engine>
std::vector<double> bessel_bridge_path(const BridgeSpec& spec, Engine& eng)
{
    const std::size_t m = detail::integer_dim(spec.dim, "bessel_bridge_path");
    if (!(spec.start > 0.0) || !(spec.end > 0.0)) {
        throw DomainError("bessel_bridge_path: end points must be strictly positive");
    }
    if (!(spec.duration > 0.0) || !(spec.step > 0.0) || spec.step > spec.duration) {
        throw DomainError("bessel_bridge_path: need 0 < step <= duration");
    }

    std::vector<double> direction(m, 0.0);
    direction[0] = 1.0;
    if (spec.placement == EndpointPlacement::VonMisesFisher) {
        direction = sample_von_mises_fisher(m, spec.start * spec.end / spec.duration, eng);
    }

    const std::vector<double> grid = detail::bridge_grid(spec.duration, spec.step);
    const std::size_t points = grid.size();
    std::vector<double> r2(points, 0.0);
    std::vector<double> coord(points);
    for (std::size_t j = 0; j < m; ++j) {
        const double from = (j == 0) ? spec.start : 0.0;
        detail::scalar_bridge(from, spec.end * direction[j], grid, coord, eng);
        for (std::size_t k = 0; k < points; ++k) {
            r2[k] += coord[k] * coord[k];
        }
    }

    std::vector<double> r(points);
    for (std::size_t k = 0; k < points; ++k) {
        r[k] = std::sqrt(r2[k]);
    }
    r.front() = spec.start;
    r.back() = spec.end;
    return r;
}

/// Stateful single-coordinate BESQ stepper used on the Bessel clock.
class BesqCoordinate {
  public:
    explicit BesqCoordinate(const SquaredBesselSpec& spec)
        : spec_(spec), root_(std::sqrt(spec.start)), q_(spec.start)
    {
        if (!(spec.start >= 0.0) || !(spec.dim > 0.0)) {
            throw DomainError("BesqCoordinate: need start >= 0 and m > 0");
        }
        if (spec.scheme == BesqScheme::SumOfSquares) {
            w_.assign(detail::integer_dim(spec.dim, "BesqCoordinate"), 0.0);
        }
    }

    double value() const noexcept { return q_; }

    template <class Engine>
    double advance(double dt, Engine& eng)
    {
        switch (spec_.scheme) {
        case BesqScheme::SumOfSquares: {
            const double sdt = std::sqrt(dt);
            double acc = 0.0;
            for (std::size_t j = 0; j < w_.size(); ++j) {
                w_[j] += sdt * standard_normal(eng);
                const double c = (j == 0 ? root_ : 0.0) + w_[j];
                acc += c * c;
            }
            q_ = acc;
            break;
        }
        case BesqScheme::ExactTransition:
            q_ = besq_exact_transition(spec_, q_, dt, eng);
            break;
        case BesqScheme::LiteralRecursion:
            literalSum_ += std::sqrt(dt) * standard_normal(eng);
            q_ = spec_.start + literalSum_ * literalSum_;
            break;
        }
        return q_;
    }

  private:
    SquaredBesselSpec spec_;
    double root_;
    double q_;
    std::vector<double> w_;
    double literalSum_ = 0.0;
};

}  // namespace relarb
