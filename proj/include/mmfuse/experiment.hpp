#pragma once

// Experiment runners: per-modality error tables and fused-operation blocks.

#include <array>
#include <cstdint>
#include <future>
#include <string>
#include <vector>

#include "mmfuse/config.hpp"
#include "mmfuse/core.hpp"
#include "mmfuse/emg.hpp"
#include "mmfuse/fusion.hpp"
#include "mmfuse/random.hpp"
#include "mmfuse/reference.hpp"
#include "mmfuse/speech.hpp"
#include "mmfuse/stats.hpp"

namespace mmfuse {

enum class Modality { Emg, Speech };

struct ItemResult {
    std::string label;
    std::vector<double> rep_error_pct; ///< one per repetition
    double error_pct = 0.0;            ///< mean over repetitions
    double correct_pct = 0.0;
    /// Speech only: share of erroneous captures the normalization map still
    /// resolves to the spoken command, in percent of all trials.
    double recovered_pct = 0.0;
};

namespace detail {

template <class TrialFn>
ItemResult run_item(std::string label, int reps, int per_rep, Rng& rng, TrialFn&& trial) {
    ItemResult r;
    r.label = std::move(label);
    long long recovered = 0;
    for (int rep = 0; rep < reps; ++rep) {
        int errors = 0;
        for (int i = 0; i < per_rep; ++i) {
            const auto [error, recover] = trial(rng);
            errors += error ? 1 : 0;
            recovered += recover ? 1 : 0;
        }
        r.rep_error_pct.push_back(100.0 * errors / per_rep);
    }
    double sum = 0.0;
    for (double v : r.rep_error_pct) sum += v;
    r.error_pct = sum / reps;
    r.correct_pct = 100.0 - r.error_pct;
    r.recovered_pct = 100.0 * static_cast<double>(recovered) / (static_cast<double>(reps) * per_rep);
    return r;
}

} // namespace detail

/// reps repetitions of per_rep trials for each of the five items; item k
/// draws from its own stream seeded derive_seed(seed, k).
inline ItemResult run_modality_item(Modality modality, std::size_t item, const ModelSet& models, int reps,
                                    int per_rep, std::uint64_t seed) {
    if (reps < 1 || per_rep < 1) throw InvalidInput("repetitions and trials must be positive");
    Rng rng(derive_seed(seed, item));
    if (modality == Modality::Emg) {
        const Gesture g = kGestures.at(item);
        return detail::run_item(display_name(g), reps, per_rep, rng, [&](Rng& r) {
            const auto o = sample_gesture_outcome(g, models.gestures, models.warmup, r);
            return std::pair{o.kind != OutcomeKind::Correct, false};
        });
    }
    const SpeechCommand c = kCommands.at(item);
    const NormalizationMap map = models.normalization();
    return detail::run_item(display_name(c), reps, per_rep, rng, [&](Rng& r) {
        const RawUtterance u = sample_recognition(c, models.speech, r);
        const bool error = classify_capture_error(u) != CaptureClass::Clean;
        return std::pair{error, error && normalize_utterance(u, map) == c};
    });
}

inline std::vector<ItemResult> run_modality_experiment(Modality modality, const ModelSet& models, int reps = 10,
                                                       int per_rep = 100, std::uint64_t seed = 0,
                                                       bool parallel = false) {
    const std::size_t n = modality == Modality::Emg ? kGestureCount : kCommandCount;
    std::vector<ItemResult> out(n);
    if (!parallel) {
        for (std::size_t i = 0; i < n; ++i) out[i] = run_modality_item(modality, i, models, reps, per_rep, seed);
        return out;
    }
    std::vector<std::future<ItemResult>> jobs;
    for (std::size_t i = 0; i < n; ++i) {
        jobs.push_back(std::async(std::launch::async, [=, &models] {
            return run_modality_item(modality, i, models, reps, per_rep, seed);
        }));
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = jobs[i].get();
    return out;
}

inline double gesture_error_rate(const ModelSet& m, Gesture g) { return 1.0 - m.gestures[g].p_correct; }
inline double speech_error_rate(const ModelSet& m, SpeechCommand c) { return 1.0 - m.speech[c].p_correct; }

struct OperationCalibration {
    FusionOperation op;
    double g = 0.0;
    double s = 0.0;
    double target = 0.0;
    DetectionCalibration detection;
};

/// Detection probability per operation so the closed form hits the
/// published fused error, given the models' raw error rates.
inline std::array<OperationCalibration, 5> calibrate_operations(const ModelSet& models) {
    std::array<OperationCalibration, 5> out{};
    for (std::size_t i = 0; i < kFusionOperations.size(); ++i) {
        const auto& op = kFusionOperations[i];
        auto& c = out[i];
        c.op = op;
        c.g = gesture_error_rate(models, op.gesture);
        c.s = speech_error_rate(models, op.speech);
        c.target = reference::fused_error_rate(op);
        c.detection = calibrate_detection(c.g, c.s, c.target);
    }
    return out;
}

/// Fusion config from the models: window and aliases from the config,
/// detection from the config where given and calibrated otherwise.
inline FusionConfig fusion_config_for(const ModelSet& models) {
    FusionConfig cfg;
    cfg.fallback_window_ms = models.fallback_window_ms;
    cfg.normalization = models.normalization();
    cfg.set_missed_shares(models.gestures);
    std::array<OperationCalibration, 5> cal{};
    bool calibrated = false;
    for (std::size_t i = 0; i < cfg.detection.size(); ++i) {
        if (models.detection[i]) {
            cfg.detection[i] = *models.detection[i];
            continue;
        }
        if (!calibrated) {
            cal = calibrate_operations(models);
            calibrated = true;
        }
        cfg.detection[i] = cal[i].detection.d;
    }
    return cfg;
}

/// `blocks` blocks of `block_size` episodes of op.
inline BlockStats run_fusion_experiment(const FusionOperation& op, const ModelSet& models, const FusionConfig& cfg,
                                        int blocks = 4, int block_size = 50, std::uint64_t seed = 0) {
    if (blocks < 1 || block_size < 1) throw InvalidInput("blocks and block size must be positive");
    Rng rng(derive_seed(seed, operation_index(op)));
    EpisodeOptions opt;
    opt.warmup = models.warmup;
    std::vector<int> counts;
    for (int b = 0; b < blocks; ++b) {
        const auto trials = simulate_fused_operation(op, models.gestures, models.speech, cfg,
                                                     static_cast<std::size_t>(block_size), rng, opt);
        int errors = 0;
        for (const auto& t : trials) errors += t.success ? 0 : 1;
        counts.push_back(errors);
    }
    return make_block_stats(std::move(counts), block_size);
}

/// All five operations, optionally one thread each. Results do not depend
/// on the order or thread the operations run in.
inline std::vector<BlockStats> run_fusion_table(const ModelSet& models, const FusionConfig& cfg, int blocks = 4,
                                                int block_size = 50, std::uint64_t seed = 0, bool parallel = false) {
    std::vector<BlockStats> out(kFusionOperations.size());
    if (!parallel) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = run_fusion_experiment(kFusionOperations[i], models, cfg, blocks, block_size, seed);
        }
        return out;
    }
    std::vector<std::future<BlockStats>> jobs;
    for (const auto& op : kFusionOperations) {
        jobs.push_back(std::async(std::launch::async, [=, &models, &cfg] {
            return run_fusion_experiment(op, models, cfg, blocks, block_size, seed);
        }));
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = jobs[i].get();
    return out;
}

} // namespace mmfuse
