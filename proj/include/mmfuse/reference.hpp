#pragma once

// Published measurements the simulators are calibrated against and the
// harness compares with. Percentages, as printed.

#include <array>

#include "mmfuse/core.hpp"

namespace mmfuse::reference {

/// Wrong-or-missed gesture %, indexed by index_of(Gesture).
inline constexpr std::array<double, kGestureCount> kGestureErrorPct = {
    13.6, // Fist
    9.1,  // Wave In
    9.5,  // Wave Out
    14.5, // Finger Spread
    20.6, // Double Tap
};

/// Wrong-output %, indexed by index_of(SpeechCommand).
inline constexpr std::array<double, kCommandCount> kSpeechErrorPct = {
    10.0, // Move Right
    34.2, // Move Left
    8.9,  // Move Up
    22.5, // Move Down
    14.1, // Move Gripper
};

/// Per-block (50 episodes each) fused error counts, in kFusionOperations order.
inline constexpr std::array<std::array<int, 4>, 5> kFusedBlockErrors = {{
    {7, 2, 2, 4},
    {3, 1, 2, 2},
    {3, 3, 2, 2},
    {0, 3, 2, 2},
    {3, 3, 4, 2},
}};

inline constexpr int kFusedBlockSize = 50;

/// Fused error %, in kFusionOperations order.
inline constexpr std::array<double, 5> kFusedErrorPct = {7.5, 4.0, 5.0, 3.5, 6.0};

/// Block-count variance as printed (two decimals).
inline constexpr std::array<double, 5> kFusedVariance = {5.58, 0.67, 0.33, 1.58, 0.67};

inline constexpr double kGestureMeanAccuracyPct = 86.54;
inline constexpr double kSpeechMeanAccuracyPct = 82.06;
inline constexpr double kFusedMeanErrorPct = 5.2;

/// Claimed post-fusion accuracy. Not consistent with kFusedErrorPct, whose
/// mean implies 94.8%; kept only so reports can show the discrepancy.
inline constexpr double kClaimedFusedAccuracyPct = 95.92;

inline double gesture_error_rate(Gesture g) { return kGestureErrorPct[index_of(g)] / 100.0; }
inline double speech_error_rate(SpeechCommand c) { return kSpeechErrorPct[index_of(c)] / 100.0; }
inline double fused_error_rate(const FusionOperation& op) {
    return kFusedErrorPct[operation_index(op)] / 100.0;
}

} // namespace mmfuse::reference
