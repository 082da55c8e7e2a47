#include <gtest/gtest.h>

#include <vector>

#include "mmfuse/reference.hpp"
#include "mmfuse/stats.hpp"

using namespace mmfuse;

TEST(BlockStatsTest, PublishedBlocks) {
    // Sample variances computed independently, rounded to two decimals.
    const double error_pct[] = {7.5, 4.0, 5.0, 3.5, 6.0};
    const double variance[] = {5.583333333333333, 0.6666666666666666, 0.3333333333333333, 1.5833333333333333,
                               0.6666666666666666};
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& b = reference::kFusedBlockErrors[i];
        const auto s = make_block_stats({b.begin(), b.end()}, reference::kFusedBlockSize);
        EXPECT_EQ(s.error_pct, error_pct[i]);
        EXPECT_NEAR(s.variance, variance[i], 1e-12);
        EXPECT_EQ(s.total_trials, 200);
    }
}

TEST(BlockStatsTest, EdgeCases) {
    const auto one = make_block_stats({3}, 50);
    EXPECT_EQ(one.variance, 0.0);
    EXPECT_EQ(one.error_pct, 6.0);
    EXPECT_EQ(make_block_stats({0, 0, 0}, 10).variance, 0.0);
    EXPECT_THROW(make_block_stats({}, 50), InvalidInput);
    EXPECT_THROW(make_block_stats({51}, 50), InvalidInput);
    EXPECT_THROW(make_block_stats({-1}, 50), InvalidInput);
    EXPECT_THROW(make_block_stats({1}, 0), InvalidInput);
}

TEST(Aggregates, MeanAccuracy) {
    std::vector<double> g, s;
    for (double e : reference::kGestureErrorPct) g.push_back(100.0 - e);
    for (double e : reference::kSpeechErrorPct) s.push_back(100.0 - e);
    EXPECT_NEAR(mean_accuracy(g), 86.54, 1e-9);
    EXPECT_NEAR(mean_accuracy(s), 82.06, 1e-9);
    EXPECT_THROW(mean_accuracy(std::vector<double>{}), InvalidInput);
}

TEST(Aggregates, FusedSummary) {
    std::vector<BlockStats> stats;
    for (const auto& b : reference::kFusedBlockErrors) stats.push_back(make_block_stats({b.begin(), b.end()}, 50));
    EXPECT_NEAR(fused_error_summary(stats), 5.2, 1e-12);
}

TEST(Wilson, KnownValues) {
    // Reference values from the closed-form Wilson score formula, z = 1.959964 (computed separately).
    auto [lo, hi] = wilson_interval(15, 200);
    EXPECT_NEAR(lo, 0.04597491718438201, 1e-9);
    EXPECT_NEAR(hi, 0.12004361023629456, 1e-9);
    std::tie(lo, hi) = wilson_interval(0, 50);
    EXPECT_NEAR(lo, 0.0, 1e-15);
    EXPECT_NEAR(hi, 0.07134759913335872, 1e-12);
    std::tie(lo, hi) = wilson_interval(50, 50);
    EXPECT_NEAR(lo, 1.0 - 0.07134759913335872, 1e-12);
    EXPECT_NEAR(hi, 1.0, 1e-15);
    EXPECT_THROW(wilson_interval(3, 2), InvalidInput);
    EXPECT_THROW(wilson_interval(0, 0), InvalidInput);
}
