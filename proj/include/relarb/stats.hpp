#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace relarb {

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// length of the input, so sums are reproducible regardless of how the
/// values were produced.
inline double pairwise_sum(std::span<const double> values) noexcept
{
    constexpr std::size_t kLeaf = 32;
    if (values.size() <= kLeaf) {
        double acc = 0.0;
        for (double v : values) {
            acc += v;
        }
        return acc;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

struct SampleSummary {
    double mean = 0.0;
    double stdDev = 0.0;
    double stdError = 0.0;
    std::size_t count = 0;
};

/// Mean, unbiased standard deviation and standard error of the mean.
/// Two passes; the second pass sums squared deviations pairwise as well.
inline SampleSummary summarize(std::span<const double> values)
{
    SampleSummary out;
    out.count = values.size();
    if (values.empty()) {
        return out;
    }
    out.mean = pairwise_sum(values) / static_cast<double>(values.size());
    if (values.size() < 2) {
        return out;
    }
    constexpr std::size_t kBlock = 4096;
    double sq = 0.0;
    double block[kBlock];
    for (std::size_t start = 0; start < values.size(); start += kBlock) {
        const std::size_t len = std::min(kBlock, values.size() - start);
        for (std::size_t i = 0; i < len; ++i) {
            const double d = values[start + i] - out.mean;
            block[i] = d * d;
        }
        sq += pairwise_sum(std::span<const double>(block, len));
    }
    out.stdDev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    out.stdError = out.stdDev / std::sqrt(static_cast<double>(values.size()));
    return out;
}

inline double combined_se(double a, double b) noexcept { return std::hypot(a, b); }

}  // namespace relarb
