#pragma once

// Small statistical helpers shared by the test suites.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace relarb::testing {

/// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) {
            ++i;
        }
        while (j < b.size() && b[j] <= x) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

/// Asymptotic critical value of the two-sample KS test at level 0.01.
inline double ks_critical_01(std::size_t n1, std::size_t n2)
{
    const auto a = static_cast<double>(n1);
    const auto b = static_cast<double>(n2);
    return 1.628 * std::sqrt((a + b) / (a * b));
}

/// Standard error of the unbiased sample variance, from the fourth
/// central moment: Var(s^2) ≈ (μ4 - σ^4 (n-3)/(n-1)) / n.
inline double variance_se(std::span<const double> v)
{
    const auto n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double x : v) {
        const double d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    return std::sqrt((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n);
}

}  // namespace relarb::testing
