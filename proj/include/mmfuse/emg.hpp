#pragma once

// Simulated 8-channel EMG armband: a statistical outcome model (what the
// harness uses) and a signal layer (templates + nearest-centroid classifier)
// that can be calibrated to the same error targets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "mmfuse/core.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/random.hpp"
#include "mmfuse/reference.hpp"

namespace mmfuse {

enum class OutcomeKind { Correct, Wrong, Missed };

inline std::string_view name_of(OutcomeKind k) {
    switch (k) {
    case OutcomeKind::Correct: return "correct";
    case OutcomeKind::Wrong: return "wrong";
    case OutcomeKind::Missed: return "missed";
    }
    return "";
}

/// What the band reported for one performed gesture.
struct GestureOutcome {
    OutcomeKind kind = OutcomeKind::Correct;
    Gesture performed = Gesture::Fist;
    Gesture reported = Gesture::Fist; ///< NoGesture when missed

    static GestureOutcome correct(Gesture g) { return {OutcomeKind::Correct, g, g}; }
    static GestureOutcome wrong(Gesture performed, Gesture reported) {
        return {OutcomeKind::Wrong, performed, reported};
    }
    static GestureOutcome missed(Gesture performed) {
        return {OutcomeKind::Missed, performed, Gesture::NoGesture};
    }

    friend bool operator==(const GestureOutcome&, const GestureOutcome&) = default;
};

// ---------------------------------------------------------------------------
// Statistical layer
// ---------------------------------------------------------------------------

struct GestureParams {
    double p_correct = 1.0;
    double p_wrong = 0.0;
    double p_missed = 0.0;
    /// Relative weight of each reported gesture given a wrong capture,
    /// indexed by index_of(Gesture). The performed gesture's own slot is 0.
    std::array<double, kGestureCount> confusion{};

    double p_error() const { return p_wrong + p_missed; }

    /// Fraction of errors that are misses; 0 when there are no errors.
    double missed_share() const {
        const double e = p_error();
        return e > 0.0 ? p_missed / e : 0.0;
    }
};

enum class ConfusionProfile {
    Uniform,    ///< wrong captures spread evenly over the other four gestures
    Documented, ///< finger spread mostly read as fist, wave out mostly as wave in
};

inline constexpr double kDefaultWrongShare = 0.7;

struct GestureOutcomeModel {
    std::array<GestureParams, kGestureCount> params{};

    const GestureParams& operator[](Gesture g) const { return params.at(index_of(g)); }
    GestureParams& operator[](Gesture g) { return params.at(index_of(g)); }

    /// Throws InvalidInput unless every row is a proper distribution.
    void validate() const {
        for (Gesture g : kGestures) {
            const auto& p = (*this)[g];
            const std::string who(name_of(g));
            for (double v : {p.p_correct, p.p_wrong, p.p_missed}) {
                if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("probability out of [0,1] for " + who);
            }
            if (std::abs(p.p_correct + p.p_wrong + p.p_missed - 1.0) > 1e-12) {
                throw InvalidInput("outcome probabilities for " + who + " do not sum to 1");
            }
            if (p.confusion[index_of(g)] != 0.0) {
                throw InvalidInput("confusion for " + who + " includes the gesture itself");
            }
            double total = 0.0;
            for (double w : p.confusion) {
                if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("bad confusion weight for " + who);
                total += w;
            }
            if (p.p_wrong > 0.0 && !(total > 0.0)) {
                throw InvalidInput("confusion weights for " + who + " are all zero");
            }
        }
    }

    /// Confusion weights of g rescaled to sum to 1 (all zero if none given).
    std::array<double, kGestureCount> confusion_distribution(Gesture g) const {
        auto w = (*this)[g].confusion;
        double total = 0.0;
        for (double v : w) total += v;
        if (total > 0.0) {
            for (double& v : w) v /= total;
        }
        return w;
    }
};

inline std::array<double, kGestureCount> confusion_weights(Gesture g, ConfusionProfile profile) {
    std::array<double, kGestureCount> w{};
    for (Gesture other : kGestures) {
        if (other != g) w[index_of(other)] = 1.0;
    }
    if (profile == ConfusionProfile::Documented) {
        Gesture favoured = Gesture::NoGesture;
        if (g == Gesture::FingerSpread) favoured = Gesture::Fist;
        if (g == Gesture::WaveOut) favoured = Gesture::WaveIn;
        if (favoured != Gesture::NoGesture) {
            for (double& v : w) v = v > 0.0 ? 0.1 : 0.0;
            w[index_of(favoured)] = 0.7;
        }
    }
    return w;
}

/// Model whose combined error per gesture equals the published rate, split
/// wrong:missed by wrong_share.
inline GestureOutcomeModel default_gesture_model(double wrong_share = kDefaultWrongShare,
                                                 ConfusionProfile profile = ConfusionProfile::Uniform) {
    if (!(wrong_share >= 0.0 && wrong_share <= 1.0)) throw InvalidInput("wrong_share must lie in [0,1]");
    GestureOutcomeModel m;
    for (Gesture g : kGestures) {
        const double e = reference::gesture_error_rate(g);
        auto& p = m[g];
        p.p_correct = 1.0 - e;
        p.p_wrong = e * wrong_share;
        p.p_missed = e - p.p_wrong;
        p.confusion = confusion_weights(g, profile);
    }
    return m;
}

inline GestureOutcomeModel perfect_gesture_model() {
    GestureOutcomeModel m;
    for (Gesture g : kGestures) {
        m[g] = GestureParams{1.0, 0.0, 0.0, confusion_weights(g, ConfusionProfile::Uniform)};
    }
    return m;
}

/// Time since the band was put on. Errors are scaled up while it is cold.
struct WarmupState {
    double elapsed_s = 1e9;
    double cold_multiplier = 3.0;
    double adapt_time_s = 120.0;

    static WarmupState warmed() { return {}; }
};

/// Error-rate multiplier: cold_multiplier at t=0 falling linearly to 1 at
/// adapt_time_s, 1 afterwards.
inline double warmup_factor(const WarmupState& w) {
    if (!(w.elapsed_s >= 0.0)) throw InvalidInput("elapsed time must be non-negative");
    if (!(w.cold_multiplier >= 1.0)) throw InvalidInput("cold multiplier must be >= 1");
    if (!(w.adapt_time_s >= 0.0)) throw InvalidInput("adaptation time must be non-negative");
    if (w.elapsed_s >= w.adapt_time_s) return 1.0;
    const double frac = w.elapsed_s / w.adapt_time_s;
    return w.cold_multiplier + (1.0 - w.cold_multiplier) * frac;
}

/// Draws what the band reports when g is performed.
inline GestureOutcome sample_gesture_outcome(Gesture g, const GestureOutcomeModel& model,
                                             const WarmupState& warmup, Rng& rng) {
    if (!is_real(g)) throw InvalidInput("cannot perform NoGesture");
    const auto& p = model[g];
    const double base = p.p_error();
    double p_wrong = p.p_wrong;
    double p_missed = p.p_missed;
    const double factor = warmup_factor(warmup);
    if (factor != 1.0 && base > 0.0) {
        const double scaled = std::min(1.0, factor * base);
        p_wrong = scaled * (p.p_wrong / base);
        p_missed = scaled - p_wrong;
    }

    const double u = rng.uniform();
    if (u < p_wrong) {
        const auto dist = model.confusion_distribution(g);
        double v = rng.uniform();
        Gesture last = g;
        for (Gesture other : kGestures) {
            const double w = dist[index_of(other)];
            if (w <= 0.0) continue;
            last = other;
            if (v < w) return GestureOutcome::wrong(g, other);
            v -= w;
        }
        return GestureOutcome::wrong(g, last);
    }
    if (u < p_wrong + p_missed) return GestureOutcome::missed(g);
    return GestureOutcome::correct(g);
}

// ---------------------------------------------------------------------------
// Signal layer
// ---------------------------------------------------------------------------

inline constexpr std::size_t kEmgChannels = 8;
inline constexpr std::size_t kEmgWindowSamples = 40;
inline constexpr double kEmgSampleRateHz = 200.0;

/// 8 x W activation samples, row-major by channel.
struct EmgWindow {
    std::size_t width = kEmgWindowSamples;
    double sample_rate_hz = kEmgSampleRateHz;
    Gesture true_gesture = Gesture::Fist;
    std::vector<double> samples = std::vector<double>(kEmgChannels * kEmgWindowSamples, 0.0);

    double& at(std::size_t channel, std::size_t t) { return samples.at(channel * width + t); }
    double at(std::size_t channel, std::size_t t) const { return samples.at(channel * width + t); }

    void validate() const {
        if (width < 1) throw InvalidInput("EMG window must hold at least one sample");
        if (samples.size() != kEmgChannels * width) throw InvalidInput("EMG window must have 8 channels");
        for (double v : samples) {
            if (!std::isfinite(v)) throw InvalidInput("EMG window holds a non-finite sample");
        }
    }
};

using EmgFeatures = std::array<double, kEmgChannels>;

/// Per-channel root mean square.
inline EmgFeatures rms_features(const EmgWindow& w) {
    EmgFeatures f{};
    for (std::size_t c = 0; c < kEmgChannels; ++c) {
        double acc = 0.0;
        for (std::size_t t = 0; t < w.width; ++t) acc += w.at(c, t) * w.at(c, t);
        f[c] = std::sqrt(acc / static_cast<double>(w.width));
    }
    return f;
}

inline double feature_distance(const EmgFeatures& a, const EmgFeatures& b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < kEmgChannels; ++c) acc += (a[c] - b[c]) * (a[c] - b[c]);
    return std::sqrt(acc);
}

/// Fixed synthetic activation pattern per gesture, plus its feature centroid.
///
/// Template set version 1: amplitude table below, each channel modulated by
/// 0.6 + 0.4 sin(2 pi t / W + c pi / 4).
struct EmgTemplates {
    static constexpr int kVersion = 1;

    std::array<EmgWindow, kGestureCount> windows{};
    std::array<EmgFeatures, kGestureCount> centroids{};

    const EmgWindow& window(Gesture g) const { return windows.at(index_of(g)); }
    const EmgFeatures& centroid(Gesture g) const { return centroids.at(index_of(g)); }

    /// Smallest distance between two gesture centroids.
    double min_separation() const {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < kGestureCount; ++i) {
            for (std::size_t j = i + 1; j < kGestureCount; ++j) {
                best = std::min(best, feature_distance(centroids[i], centroids[j]));
            }
        }
        return best;
    }
};

inline const EmgTemplates& default_templates() {
    static const EmgTemplates templates = [] {
        constexpr std::array<std::array<double, kEmgChannels>, kGestureCount> amplitude = {{
            {0.90, 0.85, 0.70, 0.35, 0.25, 0.30, 0.55, 0.80}, // fist: broad co-contraction
            {0.20, 0.30, 0.85, 0.95, 0.70, 0.30, 0.15, 0.10}, // wave in: flexor side
            {0.75, 0.95, 0.30, 0.15, 0.10, 0.25, 0.80, 0.90}, // wave out: extensor side
            {0.40, 0.55, 0.50, 0.45, 0.90, 0.95, 0.70, 0.35}, // finger spread
            {0.15, 0.20, 0.25, 0.60, 0.35, 0.60, 0.30, 0.25}, // double tap: weak burst
        }};
        EmgTemplates t;
        for (Gesture g : kGestures) {
            EmgWindow w;
            w.true_gesture = g;
            for (std::size_t c = 0; c < kEmgChannels; ++c) {
                for (std::size_t s = 0; s < w.width; ++s) {
                    const double phase = 2.0 * std::numbers::pi * static_cast<double>(s) /
                                             static_cast<double>(w.width) +
                                         static_cast<double>(c) * std::numbers::pi / 4.0;
                    w.at(c, s) = amplitude[index_of(g)][c] * (0.6 + 0.4 * std::sin(phase));
                }
            }
            t.centroids[index_of(g)] = rms_features(w);
            t.windows[index_of(g)] = std::move(w);
        }
        return t;
    }();
    return templates;
}

/// Half the smallest centroid separation.
inline double default_reject_threshold(const EmgTemplates& templates = default_templates()) {
    return 0.5 * templates.min_separation();
}

/// Template of g plus i.i.d. zero-mean Gaussian noise of scale sigma.
inline EmgWindow synth_emg_window(Gesture g, double sigma, Rng& rng,
                                  const EmgTemplates& templates = default_templates()) {
    if (!is_real(g)) throw InvalidInput("cannot synthesize NoGesture");
    if (!(sigma >= 0.0)) throw InvalidInput("noise scale must be non-negative");
    EmgWindow w = templates.window(g);
    if (sigma > 0.0) {
        for (double& v : w.samples) v += sigma * rng.normal();
    }
    return w;
}

/// Nearest centroid over RMS features; Missed when even the nearest is
/// farther than reject_threshold.
inline GestureOutcome classify_window(const EmgWindow& w, const EmgTemplates& templates,
                                      double reject_threshold) {
    w.validate();
    const EmgFeatures f = rms_features(w);
    Gesture best = Gesture::NoGesture;
    double best_d = std::numeric_limits<double>::infinity();
    for (Gesture g : kGestures) {
        const double d = feature_distance(f, templates.centroid(g));
        if (d < best_d) {
            best_d = d;
            best = g;
        }
    }
    if (best_d > reject_threshold) return GestureOutcome::missed(w.true_gesture);
    if (best == w.true_gesture) return GestureOutcome::correct(best);
    return GestureOutcome::wrong(w.true_gesture, best);
}

/// Empirical error of classify(synth(g, sigma)) over `trials` windows.
/// Re-seeding with the same seed gives common random numbers across sigmas.
inline double signal_error_rate(Gesture g, double sigma, std::size_t trials, std::uint64_t seed,
                                const EmgTemplates& templates, double reject_threshold) {
    if (trials == 0) throw InvalidInput("need at least one trial");
    Rng rng(seed);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        const auto out = classify_window(synth_emg_window(g, sigma, rng, templates), templates,
                                         reject_threshold);
        if (out.kind != OutcomeKind::Correct) ++errors;
    }
    return static_cast<double>(errors) / static_cast<double>(trials);
}

struct NoiseCalibration {
    double sigma = 0.0;
    double achieved_error = 0.0;
};

struct NoiseCalibrationOptions {
    double tolerance = 0.01;
    double sigma_max = 1e3;
    int max_iterations = 60;
};

/// Bisection on sigma so the signal layer's error for g hits target_error.
/// Throws CalibrationInfeasible if no sigma in [0, sigma_max] brackets it.
inline NoiseCalibration calibrate_noise(Gesture g, double target_error, std::size_t trials_per_eval,
                                        std::uint64_t seed,
                                        const EmgTemplates& templates = default_templates(),
                                        double reject_threshold = -1.0,
                                        const NoiseCalibrationOptions& opt = {}) {
    if (!is_real(g)) throw InvalidInput("cannot calibrate NoGesture");
    if (reject_threshold < 0.0) reject_threshold = default_reject_threshold(templates);
    if (!(target_error >= 0.0 && target_error <= 1.0)) {
        throw CalibrationInfeasible("target error must lie in [0,1]");
    }
    auto rate = [&](double sigma) {
        return signal_error_rate(g, sigma, trials_per_eval, seed, templates, reject_threshold);
    };

    const double floor_rate = rate(0.0);
    if (target_error <= floor_rate) {
        if (std::abs(floor_rate - target_error) <= opt.tolerance) return {0.0, floor_rate};
        throw CalibrationInfeasible("target is below the noiseless error rate");
    }

    double lo = 0.0;
    double hi = 0.05;
    double hi_rate = rate(hi);
    while (hi_rate < target_error) {
        lo = hi;
        hi *= 2.0;
        if (hi > opt.sigma_max) {
            throw CalibrationInfeasible("no noise scale up to sigma_max reaches the target error");
        }
        hi_rate = rate(hi);
    }

    NoiseCalibration best{hi, hi_rate};
    for (int it = 0; it < opt.max_iterations && hi - lo > 1e-9 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = rate(mid);
        if (std::abs(r - target_error) < std::abs(best.achieved_error - target_error)) best = {mid, r};
        if (r == target_error) break;
        if (r < target_error) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (std::abs(best.achieved_error - target_error) > opt.tolerance) {
        throw CalibrationInfeasible("error rate is not continuous enough near the target");
    }
    return best;
}

} // namespace mmfuse
