#pragma once

// Gesture-first fusion of the two command channels.
//
// The gesture channel is authoritative. Speech is consulted only when the
// gesture fails: a miss is always noticed, a wrong gesture is noticed with a
// configurable probability. Inside the fallback window one clean utterance
// decides the command.
//
//   Idle --gesture ok------------------------------> Emitting
//   Idle --gesture missed / wrong+detected---------> SpeechFallback(t + window)
//   Idle --gesture wrong, undetected---------------> Emitting (+ UndetectedWrongGesture)
//   Idle --speech----------------------------------> AwaitingGesture(t + window)
//   AwaitingGesture --gesture ok-------------------> Emitting
//   AwaitingGesture --gesture failed / deadline----> resolve buffered speech
//   SpeechFallback --clean utterance---------------> Emitting
//   SpeechFallback --other utterance---------------> Idle (+ FallbackFailed)
//   SpeechFallback --deadline----------------------> Idle (+ WindowExpired)
//
// Emitting behaves like Idle for the next input.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mmfuse/core.hpp"
#include "mmfuse/emg.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/random.hpp"
#include "mmfuse/speech.hpp"

namespace mmfuse {

enum class Channel { Gesture, Speech };

inline std::string_view name_of(Channel c) {
    return c == Channel::Gesture ? "gesture" : "speech";
}

using TimeMs = std::int64_t;

struct ModalityEvent {
    Channel source = Channel::Gesture;
    TimeMs t_ms = 0;
    std::uint64_t seq = 0;
    std::variant<GestureOutcome, RawUtterance> payload;

    static ModalityEvent gesture(TimeMs t, GestureOutcome o, std::uint64_t seq = 0) {
        return {Channel::Gesture, t, seq, o};
    }
    static ModalityEvent speech(TimeMs t, RawUtterance u, std::uint64_t seq = 0) {
        return {Channel::Speech, t, seq, std::move(u)};
    }
};

struct ClockTick {
    TimeMs t_ms = 0;
};

using FusionInput = std::variant<ModalityEvent, ClockTick>;

inline constexpr TimeMs kDefaultFallbackWindowMs = 2000;

struct FusionConfig {
    TimeMs fallback_window_ms = kDefaultFallbackWindowMs;
    /// Probability that an erroneous gesture capture (wrong or missed) leads
    /// to the speech fallback, per operation in kFusionOperations order.
    std::array<double, 5> detection = {1.0, 1.0, 1.0, 1.0, 1.0};
    /// Fraction of gesture errors that are misses, same order. Misses are
    /// always detected, so this bounds `detection` from below.
    std::array<double, 5> missed_share = {0.0, 0.0, 0.0, 0.0, 0.0};
    NormalizationMap normalization = default_normalization_map();

    void validate() const {
        if (fallback_window_ms <= 0) throw InvalidInput("fallback window must be positive");
        for (std::size_t i = 0; i < detection.size(); ++i) {
            if (!(detection[i] >= 0.0 && detection[i] <= 1.0)) {
                throw InvalidInput("detection probability out of [0,1] for " + kFusionOperations[i].label());
            }
            if (!(missed_share[i] >= 0.0 && missed_share[i] <= 1.0)) {
                throw InvalidInput("missed share out of [0,1] for " + kFusionOperations[i].label());
            }
        }
    }

    /// Copies each gesture's missed share out of model.
    void set_missed_shares(const GestureOutcomeModel& model) {
        for (std::size_t i = 0; i < kFusionOperations.size(); ++i) {
            missed_share[i] = model[kFusionOperations[i].gesture].missed_share();
        }
    }

    /// Per-wrong-gesture detection probability realizing the aggregate one.
    /// Clamps to 0 when the aggregate is below the missed share.
    double wrong_detection(const FusionOperation& op) const {
        const std::size_t i = operation_index(op);
        const double m = missed_share[i];
        if (m >= 1.0) return 1.0;
        return std::clamp((detection[i] - m) / (1.0 - m), 0.0, 1.0);
    }
};

enum class FusionPhase { Idle, AwaitingGesture, SpeechFallback, Emitting };

inline std::string_view name_of(FusionPhase p) {
    switch (p) {
    case FusionPhase::Idle: return "idle";
    case FusionPhase::AwaitingGesture: return "awaiting-gesture";
    case FusionPhase::SpeechFallback: return "speech-fallback";
    case FusionPhase::Emitting: return "emitting";
    }
    return "";
}

struct FusionState {
    FusionPhase phase = FusionPhase::Idle;
    TimeMs deadline_ms = 0;                    ///< AwaitingGesture / SpeechFallback only
    std::optional<RawUtterance> pending_speech; ///< AwaitingGesture only

    bool has_deadline() const {
        return phase == FusionPhase::AwaitingGesture || phase == FusionPhase::SpeechFallback;
    }

    friend bool operator==(const FusionState&, const FusionState&) = default;
};

enum class FusionErrorKind { UndetectedWrongGesture, FallbackFailed, WindowExpired };

inline std::string_view name_of(FusionErrorKind k) {
    switch (k) {
    case FusionErrorKind::UndetectedWrongGesture: return "UndetectedWrongGesture";
    case FusionErrorKind::FallbackFailed: return "FallbackFailed";
    case FusionErrorKind::WindowExpired: return "WindowExpired";
    }
    return "";
}

struct FusionError {
    FusionErrorKind kind;
    TimeMs t_ms;
};

struct FusedCommand {
    ArmAction action;
    Channel source;
    TimeMs t_ms;
};

struct StepResult {
    FusionState state;
    std::optional<FusedCommand> command;
    std::optional<FusionError> error; ///< may accompany a command (undetected wrong gesture)

    bool has_output() const { return command.has_value() || error.has_value(); }
};

namespace detail {

inline StepResult resolve_speech(const RawUtterance& u, TimeMs t, const FusionConfig& cfg) {
    if (classify_capture_error(u) == CaptureClass::Clean) {
        if (auto c = normalize_utterance(u, cfg.normalization)) {
            return {FusionState{FusionPhase::Emitting, 0, std::nullopt}, FusedCommand{action_for(*c), Channel::Speech, t}, std::nullopt};
        }
    }
    return {FusionState{FusionPhase::Idle, 0, std::nullopt}, std::nullopt, FusionError{FusionErrorKind::FallbackFailed, t}};
}

inline StepResult on_gesture(const FusionState& s, const GestureOutcome& o, TimeMs t,
                             const FusionConfig& cfg, Rng& rng) {
    const bool fallback_open = s.phase == FusionPhase::SpeechFallback;

    if (o.kind == OutcomeKind::Correct) {
        return {FusionState{FusionPhase::Emitting, 0, std::nullopt}, FusedCommand{action_for(o.reported), Channel::Gesture, t}, std::nullopt};
    }
    // A fallback is already running; further failed gestures change nothing.
    if (fallback_open) return {s, std::nullopt, std::nullopt};

    bool detected = true;
    if (o.kind == OutcomeKind::Wrong) {
        detected = rng.bernoulli(cfg.wrong_detection(operation_for(o.performed)));
        if (!detected) {
            return {FusionState{FusionPhase::Emitting, 0, std::nullopt},
                    FusedCommand{action_for(o.reported), Channel::Gesture, t},
                    FusionError{FusionErrorKind::UndetectedWrongGesture, t}};
        }
    }
    if (s.phase == FusionPhase::AwaitingGesture && s.pending_speech) {
        return resolve_speech(*s.pending_speech, t, cfg);
    }
    return {{FusionPhase::SpeechFallback, t + cfg.fallback_window_ms, std::nullopt}, std::nullopt, std::nullopt};
}

} // namespace detail

/// Advances the fusion state machine by one input.
///
/// Inputs must arrive in one total order by time. An event later than the
/// pending deadline must be preceded by a ClockTick at that deadline;
/// FusionEngine does this automatically.
inline StepResult step(const FusionState& state, const FusionInput& input, const FusionConfig& cfg, Rng& rng) {
    if (const auto* tick = std::get_if<ClockTick>(&input)) {
        const TimeMs t = tick->t_ms;
        if (state.phase == FusionPhase::Emitting) return {FusionState{FusionPhase::Idle, 0, std::nullopt}, std::nullopt, std::nullopt};
        if (!state.has_deadline() || t < state.deadline_ms) return {state, std::nullopt, std::nullopt};
        if (state.phase == FusionPhase::AwaitingGesture) {
            // Nothing from the band within the window: a missed gesture.
            return detail::resolve_speech(*state.pending_speech, state.deadline_ms, cfg);
        }
        return {FusionState{FusionPhase::Idle, 0, std::nullopt}, std::nullopt, FusionError{FusionErrorKind::WindowExpired, state.deadline_ms}};
    }

    const auto& ev = std::get<ModalityEvent>(input);
    if (state.has_deadline() && ev.t_ms > state.deadline_ms) {
        throw InvalidInput("event at " + std::to_string(ev.t_ms) + " ms is past the pending deadline " +
                           std::to_string(state.deadline_ms) + " ms");
    }
    FusionState s = state;
    if (s.phase == FusionPhase::Emitting) s = FusionState{};

    if (ev.source == Channel::Gesture) {
        const auto* o = std::get_if<GestureOutcome>(&ev.payload);
        if (!o) throw InvalidInput("gesture event without a gesture payload");
        return detail::on_gesture(s, *o, ev.t_ms, cfg, rng);
    }

    const auto* u = std::get_if<RawUtterance>(&ev.payload);
    if (!u) throw InvalidInput("speech event without an utterance payload");
    switch (s.phase) {
    case FusionPhase::SpeechFallback:
        return detail::resolve_speech(*u, ev.t_ms, cfg);
    case FusionPhase::AwaitingGesture:
        s.pending_speech = *u;
        return {s, std::nullopt, std::nullopt};
    default:
        return {{FusionPhase::AwaitingGesture, ev.t_ms + cfg.fallback_window_ms, *u}, std::nullopt, std::nullopt};
    }
}

/// Owns a state, config and generator, and inserts deadline ticks so callers
/// can submit events as they come. Single-threaded; move it whole.
class FusionEngine {
public:
    explicit FusionEngine(FusionConfig cfg = {}, std::uint64_t seed = 0)
        : cfg_(std::move(cfg)), rng_(seed) {
        cfg_.validate();
    }

    /// Outputs produced by expired deadlines up to ev.t_ms, then by ev itself.
    std::vector<StepResult> submit(const ModalityEvent& ev) {
        if (ev.t_ms < now_) {
            throw InvalidInput("event time " + std::to_string(ev.t_ms) + " ms precedes " + std::to_string(now_) + " ms");
        }
        std::vector<StepResult> out;
        expire_before(ev.t_ms, out);
        apply(ev, out);
        return out;
    }

    /// Fires any deadline that is <= t.
    std::vector<StepResult> advance_to(TimeMs t) {
        std::vector<StepResult> out;
        if (t < now_) return out;
        expire_before(t + 1, out);
        now_ = t;
        return out;
    }

    /// Fires the pending deadline, if any.
    std::vector<StepResult> flush() {
        std::vector<StepResult> out;
        if (state_.has_deadline()) {
            const TimeMs t = state_.deadline_ms;
            apply(ClockTick{t}, out);
        }
        return out;
    }

    void reset() {
        state_ = {};
        now_ = 0;
    }

    const FusionState& state() const { return state_; }
    const FusionConfig& config() const { return cfg_; }
    TimeMs now() const { return now_; }

private:
    void expire_before(TimeMs t, std::vector<StepResult>& out) {
        if (state_.has_deadline() && state_.deadline_ms < t) apply(ClockTick{state_.deadline_ms}, out);
    }

    void apply(const FusionInput& in, std::vector<StepResult>& out) {
        std::visit([this](const auto& x) { now_ = std::max(now_, x.t_ms); }, in);
        StepResult r = step(state_, in, cfg_, rng_);
        state_ = r.state;
        if (r.has_output()) out.push_back(std::move(r));
    }

    FusionConfig cfg_;
    Rng rng_;
    FusionState state_;
    TimeMs now_ = 0;
};

// ---------------------------------------------------------------------------
// Closed-form error algebra
// ---------------------------------------------------------------------------

namespace detail {
inline void require_unit(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput(std::string(what) + " must lie in [0,1]");
}
} // namespace detail

/// Fused error when a gesture error (rate g) is caught with probability d
/// and the speech fallback itself fails with probability s.
inline double closed_form_fused_error(double g, double s, double d) {
    detail::require_unit(g, "gesture error rate");
    detail::require_unit(s, "speech error rate");
    detail::require_unit(d, "detection probability");
    return g * (1.0 - d) + g * d * s;
}

enum class DetectionStatus { Calibrated, NoFallbackNeeded };

struct DetectionCalibration {
    double d = 0.0;
    DetectionStatus status = DetectionStatus::Calibrated;
};

/// Detection probability d with closed_form_fused_error(g, s, d) == target.
/// Targets at or above g need no fallback (d = 0); targets below g*s are
/// unreachable and throw CalibrationInfeasible.
inline DetectionCalibration calibrate_detection(double g, double s, double target) {
    detail::require_unit(g, "gesture error rate");
    detail::require_unit(s, "speech error rate");
    detail::require_unit(target, "target fused error");
    if (s >= 1.0) throw InvalidInput("speech error rate must be below 1");
    if (target >= g) return {0.0, DetectionStatus::NoFallbackNeeded};
    if (target < g * s) {
        throw CalibrationInfeasible("target " + std::to_string(target) + " is below the perfect-detection floor " +
                                    std::to_string(g * s));
    }
    return {std::clamp((g - target) / (g * (1.0 - s)), 0.0, 1.0), DetectionStatus::Calibrated};
}

// ---------------------------------------------------------------------------
// Episode simulation
// ---------------------------------------------------------------------------

struct TrialOutcome {
    bool success = false;
    std::optional<FusionErrorKind> error;
    std::optional<Channel> source; ///< channel of the executed command, if any
};

struct EpisodeOptions {
    WarmupState warmup = WarmupState::warmed();
    TimeMs speech_latency_ms = 800; ///< utterance arrives this long after the gesture
};

/// Feeds time-ordered events through the state machine until the first
/// output, firing deadlines in between. Events after that are not consumed.
inline StepResult run_episode(const std::vector<ModalityEvent>& events, const FusionConfig& cfg, Rng& rng) {
    FusionState s;
    for (const auto& ev : events) {
        if (s.has_deadline() && ev.t_ms > s.deadline_ms) {
            StepResult r = step(s, ClockTick{s.deadline_ms}, cfg, rng);
            if (r.has_output()) return r;
            s = r.state;
        }
        StepResult r = step(s, ev, cfg, rng);
        if (r.has_output()) return r;
        s = r.state;
    }
    if (s.has_deadline()) return step(s, ClockTick{s.deadline_ms}, cfg, rng);
    return {s, std::nullopt, std::nullopt};
}

/// One user attempt at op: the gesture is performed at t=0 and the paired
/// command is spoken speech_latency_ms later.
inline TrialOutcome simulate_episode(const FusionOperation& op, const GestureOutcomeModel& gestures,
                                     const RecognitionModel& speech, const FusionConfig& cfg, Rng& rng,
                                     const EpisodeOptions& opt = {}) {
    const GestureOutcome o = sample_gesture_outcome(op.gesture, gestures, opt.warmup, rng);
    RawUtterance u = sample_recognition(op.speech, speech, rng);
    const std::vector<ModalityEvent> events = {
        ModalityEvent::gesture(0, o, 0),
        ModalityEvent::speech(opt.speech_latency_ms, std::move(u), 0),
    };
    const StepResult r = run_episode(events, cfg, rng);
    TrialOutcome out;
    if (r.command) out.source = r.command->source;
    if (r.error) {
        out.error = r.error->kind;
        return out;
    }
    if (!r.command) {
        out.error = FusionErrorKind::WindowExpired;
        return out;
    }
    out.success = r.command->action.pin == gesture_to_pin(op.gesture);
    if (!out.success) out.error = FusionErrorKind::UndetectedWrongGesture;
    return out;
}

inline std::vector<TrialOutcome> simulate_fused_operation(const FusionOperation& op, const GestureOutcomeModel& gestures,
                                                          const RecognitionModel& speech, const FusionConfig& cfg,
                                                          std::size_t n_trials, Rng& rng,
                                                          const EpisodeOptions& opt = {}) {
    if (n_trials < 1) throw InvalidInput("need at least one trial");
    cfg.validate();
    std::vector<TrialOutcome> out;
    out.reserve(n_trials);
    for (std::size_t i = 0; i < n_trials; ++i) out.push_back(simulate_episode(op, gestures, speech, cfg, rng, opt));
    return out;
}

inline double error_fraction(const std::vector<TrialOutcome>& trials) {
    if (trials.empty()) return 0.0;
    const auto errors = std::count_if(trials.begin(), trials.end(), [](const auto& t) { return !t.success; });
    return static_cast<double>(errors) / static_cast<double>(trials.size());
}

} // namespace mmfuse
