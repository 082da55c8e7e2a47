#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "mmfuse/errors.hpp"

namespace mmfuse {

/// Error counts of consecutive equal-sized blocks of trials.
struct BlockStats {
    std::vector<int> block_errors;
    int block_size = 0;
    int total_trials = 0;
    double error_pct = 0.0;
    double variance = 0.0; ///< sample variance (n - 1) of block_errors; 0 for one block
};

inline BlockStats make_block_stats(std::vector<int> block_errors, int block_size) {
    if (block_errors.empty()) throw InvalidInput("need at least one block");
    if (block_size <= 0) throw InvalidInput("block size must be positive");
    for (int e : block_errors) {
        if (e < 0 || e > block_size) throw InvalidInput("block error count out of range");
    }
    BlockStats s;
    s.block_size = block_size;
    s.total_trials = block_size * static_cast<int>(block_errors.size());
    const int errors = std::accumulate(block_errors.begin(), block_errors.end(), 0);
    s.error_pct = 100.0 * errors / s.total_trials;
    const std::size_t n = block_errors.size();
    if (n > 1) {
        const double mean = static_cast<double>(errors) / static_cast<double>(n);
        double ss = 0.0;
        for (int e : block_errors) ss += (e - mean) * (e - mean);
        s.variance = ss / static_cast<double>(n - 1);
    }
    s.block_errors = std::move(block_errors);
    return s;
}

/// Unweighted mean of per-item correct percentages.
inline double mean_accuracy(std::span<const double> correct_pct) {
    if (correct_pct.empty()) throw InvalidInput("accuracy table is empty");
    return std::accumulate(correct_pct.begin(), correct_pct.end(), 0.0) / static_cast<double>(correct_pct.size());
}

/// Unweighted mean of the operations' error percentages.
inline double fused_error_summary(std::span<const BlockStats> stats) {
    if (stats.empty()) throw InvalidInput("no operations to summarize");
    double total = 0.0;
    for (const auto& s : stats) total += s.error_pct;
    return total / static_cast<double>(stats.size());
}

/// Standard error of a proportion estimated from n trials.
inline double proportion_standard_error(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

inline constexpr double kZ95 = 1.959963984540054;

/// Wilson score interval for k successes in n trials.
inline std::pair<double, double> wilson_interval(long long k, long long n, double z = kZ95) {
    if (n <= 0 || k < 0 || k > n) throw InvalidInput("invalid binomial counts");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

} // namespace mmfuse
