#include <gtest/gtest.h>

#include <cmath>

#include "mmfuse/fusion.hpp"

using namespace mmfuse;

namespace {

FusionConfig config_with(double d, double missed_share = 0.0) {
    FusionConfig cfg;
    cfg.detection.fill(d);
    cfg.missed_share.fill(missed_share);
    return cfg;
}

StepResult feed(FusionState& s, const FusionInput& in, const FusionConfig& cfg, Rng& rng) {
    StepResult r = step(s, in, cfg, rng);
    s = r.state;
    return r;
}

/// Model with error rate g, all errors wrong (no misses).
GestureOutcomeModel all_wrong_model(double g) {
    GestureOutcomeModel m = default_gesture_model(1.0);
    for (Gesture x : kGestures) {
        m[x].p_correct = 1.0 - g;
        m[x].p_wrong = g;
        m[x].p_missed = 0.0;
    }
    return m;
}

RecognitionModel speech_with_error(double s) {
    RecognitionModel m = default_recognition_model();
    for (auto& r : m.commands) r.p_correct = 1.0 - s;
    return m;
}

} // namespace

TEST(FusionStep, CorrectGestureEmitsFromGesture) {
    FusionState s;
    Rng rng(0);
    const auto r = feed(s, ModalityEvent::gesture(100, GestureOutcome::correct(Gesture::Fist)), FusionConfig{}, rng);
    ASSERT_TRUE(r.command);
    EXPECT_FALSE(r.error);
    EXPECT_EQ(r.command->action.pin, 3);
    EXPECT_EQ(r.command->source, Channel::Gesture);
    EXPECT_EQ(r.command->t_ms, 100);
    EXPECT_EQ(s.phase, FusionPhase::Emitting);
}

TEST(FusionStep, MissedGestureCompensatedBySpeech) {
    const FusionConfig cfg;
    FusionState s;
    Rng rng(0);
    auto r = feed(s, ModalityEvent::gesture(0, GestureOutcome::missed(Gesture::Fist)), cfg, rng);
    EXPECT_FALSE(r.has_output());
    EXPECT_EQ(s.phase, FusionPhase::SpeechFallback);
    EXPECT_EQ(s.deadline_ms, kDefaultFallbackWindowMs);
    r = feed(s, ModalityEvent::speech(700, {"move down", std::nullopt}), cfg, rng);
    ASSERT_TRUE(r.command);
    EXPECT_EQ(r.command->source, Channel::Speech);
    EXPECT_EQ(r.command->action.pin, gesture_to_pin(Gesture::Fist));
}

TEST(FusionStep, MissedGestureWithoutSpeechExpires) {
    const FusionConfig cfg;
    FusionState s;
    Rng rng(0);
    feed(s, ModalityEvent::gesture(0, GestureOutcome::missed(Gesture::Fist)), cfg, rng);
    auto r = feed(s, ClockTick{1999}, cfg, rng);
    EXPECT_FALSE(r.has_output());
    r = feed(s, ClockTick{2000}, cfg, rng);
    ASSERT_TRUE(r.error);
    EXPECT_EQ(r.error->kind, FusionErrorKind::WindowExpired);
    EXPECT_FALSE(r.command);
    EXPECT_EQ(s.phase, FusionPhase::Idle);
}

TEST(FusionStep, NonCleanFallbackFails) {
    const FusionConfig cfg;
    for (const char* text : {"override", "move down move down", "move down please", "banana"}) {
        FusionState s;
        Rng rng(0);
        feed(s, ModalityEvent::gesture(0, GestureOutcome::missed(Gesture::Fist)), cfg, rng);
        const auto r = feed(s, ModalityEvent::speech(10, {text, std::nullopt}), cfg, rng);
        ASSERT_TRUE(r.error) << text;
        EXPECT_EQ(r.error->kind, FusionErrorKind::FallbackFailed);
        EXPECT_FALSE(r.command);
    }
}

TEST(FusionStep, UndetectedWrongGestureExecutesWrongAction) {
    const auto cfg = config_with(0.0);
    FusionState s;
    Rng rng(0);
    const auto r = feed(s, ModalityEvent::gesture(0, GestureOutcome::wrong(Gesture::FingerSpread, Gesture::Fist)), cfg, rng);
    ASSERT_TRUE(r.command);
    ASSERT_TRUE(r.error);
    EXPECT_EQ(r.error->kind, FusionErrorKind::UndetectedWrongGesture);
    EXPECT_EQ(r.command->action.pin, 3);
}

TEST(FusionStep, DetectedWrongGestureOpensFallback) {
    const auto cfg = config_with(1.0);
    FusionState s;
    Rng rng(0);
    auto r = feed(s, ModalityEvent::gesture(0, GestureOutcome::wrong(Gesture::FingerSpread, Gesture::Fist)), cfg, rng);
    EXPECT_FALSE(r.has_output());
    EXPECT_EQ(s.phase, FusionPhase::SpeechFallback);
    r = feed(s, ModalityEvent::speech(500, {"move up", std::nullopt}), cfg, rng);
    ASSERT_TRUE(r.command);
    EXPECT_EQ(r.command->action.pin, 9);
}

TEST(FusionStep, SpeechFirstThenGestureGestureWins) {
    const FusionConfig cfg;
    FusionState s;
    Rng rng(0);
    feed(s, ModalityEvent::speech(0, {"move up", std::nullopt}), cfg, rng);
    EXPECT_EQ(s.phase, FusionPhase::AwaitingGesture);
    const auto r = feed(s, ModalityEvent::gesture(300, GestureOutcome::correct(Gesture::WaveIn)), cfg, rng);
    ASSERT_TRUE(r.command);
    EXPECT_EQ(r.command->source, Channel::Gesture);
    EXPECT_EQ(r.command->action.pin, 4);
}

TEST(FusionStep, SpeechFirstAndNoGestureFallsBackAtDeadline) {
    const FusionConfig cfg;
    FusionState s;
    Rng rng(0);
    feed(s, ModalityEvent::speech(100, {"move up", std::nullopt}), cfg, rng);
    const auto r = feed(s, ClockTick{100 + kDefaultFallbackWindowMs}, cfg, rng);
    ASSERT_TRUE(r.command);
    EXPECT_EQ(r.command->source, Channel::Speech);
    EXPECT_EQ(r.command->t_ms, 100 + kDefaultFallbackWindowMs);
}

TEST(FusionStep, SpeechFirstThenMissResolvesImmediately) {
    const FusionConfig cfg;
    FusionState s;
    Rng rng(0);
    feed(s, ModalityEvent::speech(0, {"move gripper", std::nullopt}), cfg, rng);
    const auto r = feed(s, ModalityEvent::gesture(40, GestureOutcome::missed(Gesture::DoubleTap)), cfg, rng);
    ASSERT_TRUE(r.command);
    EXPECT_EQ(r.command->action.pin, 10);
    EXPECT_EQ(r.command->t_ms, 40);
}

TEST(FusionStep, CorrectGestureDuringFallbackTakesPriority) {
    const FusionConfig cfg;
    FusionState s;
    Rng rng(0);
    feed(s, ModalityEvent::gesture(0, GestureOutcome::missed(Gesture::Fist)), cfg, rng);
    auto r = feed(s, ModalityEvent::gesture(50, GestureOutcome::missed(Gesture::Fist)), cfg, rng);
    EXPECT_FALSE(r.has_output());
    EXPECT_EQ(s.deadline_ms, kDefaultFallbackWindowMs);
    r = feed(s, ModalityEvent::gesture(60, GestureOutcome::correct(Gesture::Fist)), cfg, rng);
    ASSERT_TRUE(r.command);
    EXPECT_EQ(r.command->source, Channel::Gesture);
}

TEST(FusionStep, EventPastDeadlineNeedsTick) {
    const FusionConfig cfg;
    FusionState s;
    Rng rng(0);
    feed(s, ModalityEvent::gesture(0, GestureOutcome::missed(Gesture::Fist)), cfg, rng);
    EXPECT_THROW(step(s, ModalityEvent::speech(5000, {"move down", std::nullopt}), cfg, rng), InvalidInput);
}

TEST(FusionConfigTest, Validation) {
    FusionConfig cfg;
    cfg.fallback_window_ms = 0;
    EXPECT_THROW(cfg.validate(), InvalidInput);
    cfg = FusionConfig{};
    cfg.detection[2] = 1.5;
    EXPECT_THROW(cfg.validate(), InvalidInput);
    EXPECT_THROW(FusionEngine{cfg}, InvalidInput);
}

TEST(FusionConfigTest, WrongDetectionFromAggregate) {
    auto cfg = config_with(0.79, 0.3);
    EXPECT_NEAR(cfg.wrong_detection(kFusionOperations[0]), 0.7, 1e-12);
    cfg = config_with(0.1, 0.3);
    EXPECT_EQ(cfg.wrong_detection(kFusionOperations[0]), 0.0);
    cfg = config_with(0.4, 1.0);
    EXPECT_EQ(cfg.wrong_detection(kFusionOperations[0]), 1.0);
}

TEST(FusionEngineTest, InsertsDeadlineBeforeLateEvent) {
    FusionEngine e;
    EXPECT_TRUE(e.submit(ModalityEvent::gesture(0, GestureOutcome::missed(Gesture::Fist))).empty());
    const auto out = e.submit(ModalityEvent::gesture(5000, GestureOutcome::correct(Gesture::WaveIn)));
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].error->kind, FusionErrorKind::WindowExpired);
    EXPECT_EQ(out[0].error->t_ms, 2000);
    EXPECT_EQ(out[1].command->action.pin, 4);
    EXPECT_THROW(e.submit(ModalityEvent::gesture(10, GestureOutcome::correct(Gesture::Fist))), InvalidInput);
}

TEST(FusionEngineTest, AdvanceAndFlush) {
    FusionEngine e;
    e.submit(ModalityEvent::speech(0, {"move left", std::nullopt}));
    EXPECT_TRUE(e.advance_to(1999).empty());
    const auto out = e.advance_to(2000);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].command->action.pin, 4);
    e.submit(ModalityEvent::gesture(2500, GestureOutcome::missed(Gesture::Fist)));
    const auto flushed = e.flush();
    ASSERT_EQ(flushed.size(), 1u);
    EXPECT_EQ(flushed[0].error->kind, FusionErrorKind::WindowExpired);
    EXPECT_TRUE(e.flush().empty());
}

TEST(FusionEpisodes, AtMostOneCommandAndAlwaysTerminates) {
    const auto gestures = default_gesture_model();
    const auto speech = default_recognition_model();
    const auto cfg = config_with(0.6, 0.3);
    Rng rng(5);
    for (int i = 0; i < 20000; ++i) {
        const auto& op = kFusionOperations[static_cast<std::size_t>(i) % 5];
        std::vector<ModalityEvent> events = {
            ModalityEvent::gesture(0, sample_gesture_outcome(op.gesture, gestures, {}, rng)),
            ModalityEvent::speech(static_cast<TimeMs>(rng.index(3000)), sample_recognition(op.speech, speech, rng)),
        };
        if (rng.bernoulli(0.5)) std::swap(events[0].t_ms, events[1].t_ms), std::swap(events[0], events[1]);
        const auto r = run_episode(events, cfg, rng);
        ASSERT_TRUE(r.has_output());
        ASSERT_TRUE(r.state.phase == FusionPhase::Emitting || r.state.phase == FusionPhase::Idle);
        if (r.command && !r.error) {
            ASSERT_EQ(r.state.phase, FusionPhase::Emitting);
        }
    }
}

TEST(ClosedForm, Examples) {
    EXPECT_DOUBLE_EQ(closed_form_fused_error(0.206, 0.141, 0.0), 0.206);
    EXPECT_NEAR(closed_form_fused_error(0.206, 0.141, 1.0), 0.029046, 1e-15);
    for (double d : {0.0, 0.3, 1.0}) {
        for (double s : {0.0, 0.5, 1.0}) EXPECT_EQ(closed_form_fused_error(0.0, s, d), 0.0);
    }
    EXPECT_THROW(closed_form_fused_error(1.1, 0.1, 0.1), InvalidInput);
    EXPECT_THROW(closed_form_fused_error(0.1, -0.1, 0.1), InvalidInput);
}

TEST(ClosedForm, MonotoneAndNeverHurtsOnGrid) {
    auto v = [](int i) { return i / 10.0; };
    for (int gi = 0; gi <= 10; ++gi) {
        for (int si = 0; si <= 10; ++si) {
            for (int di = 0; di <= 10; ++di) {
                const double g = v(gi), s = v(si), d = v(di);
                const double f = closed_form_fused_error(g, s, d);
                if (s < 1.0) {
                    EXPECT_LE(f, g + 1e-15);
                    if (d > 0.0 && g > 0.0) {
                        EXPECT_LT(f, g);
                    }
                }
                if (di < 10) {
                    const double next = closed_form_fused_error(g, s, v(di + 1));
                    if (g > 0.0 && s < 1.0) {
                        EXPECT_LT(next, f);
                    } else {
                        EXPECT_LE(next, f + 1e-15);
                    }
                }
                if (si < 10) {
                    EXPECT_LE(f, closed_form_fused_error(g, v(si + 1), d) + 1e-15);
                }
                if (gi < 10) {
                    EXPECT_LE(f, closed_form_fused_error(v(gi + 1), s, d) + 1e-15);
                }
            }
        }
    }
}

TEST(CalibrateDetection, PublishedOperations) {
    // Expected d from bisection on the closed form (independent of the
    // algebraic inversion), frozen.
    EXPECT_NEAR(calibrate_detection(0.206, 0.141, 0.075).d, 0.7403053901013822, 1e-12);
    EXPECT_NEAR(calibrate_detection(0.136, 0.225, 0.040).d, 0.9108159392789373, 1e-12);
    EXPECT_NEAR(calibrate_detection(0.145, 0.089, 0.050).d, 0.7191793784776107, 1e-12);
    EXPECT_NEAR(calibrate_detection(0.091, 0.342, 0.035).d, 0.9352349777881691, 1e-12);
    EXPECT_NEAR(calibrate_detection(0.095, 0.100, 0.060).d, 0.40935672514619875, 1e-12);
}

TEST(CalibrateDetection, RoundTrip) {
    for (double g = 0.05; g <= 1.0; g += 0.05) {
        for (double s = 0.0; s < 0.99; s += 0.07) {
            for (double t = g * s; t < g; t += (g - g * s) / 7.0) {
                const auto c = calibrate_detection(g, s, t);
                ASSERT_EQ(c.status, DetectionStatus::Calibrated);
                EXPECT_NEAR(closed_form_fused_error(g, s, c.d), t, 1e-12);
            }
        }
    }
}

TEST(CalibrateDetection, EdgeCases) {
    auto c = calibrate_detection(0.2, 0.1, 0.2);
    EXPECT_EQ(c.d, 0.0);
    EXPECT_EQ(c.status, DetectionStatus::NoFallbackNeeded);
    c = calibrate_detection(0.2, 0.1, 0.3);
    EXPECT_EQ(c.d, 0.0);
    EXPECT_EQ(c.status, DetectionStatus::NoFallbackNeeded);
    EXPECT_THROW(calibrate_detection(0.2, 0.1, 0.01), CalibrationInfeasible);
    EXPECT_THROW(calibrate_detection(0.2, 1.0, 0.1), InvalidInput);
}

TEST(SimulateFused, MoveDownFistCalibrated) {
    const auto gestures = default_gesture_model();
    const auto speech = default_recognition_model();
    FusionConfig cfg;
    cfg.set_missed_shares(gestures);
    const FusionOperation op{SpeechCommand::MoveDown, Gesture::Fist};
    cfg.detection[operation_index(op)] = calibrate_detection(0.136, 0.225, 0.04).d;
    Rng rng(2024);
    const auto trials = simulate_fused_operation(op, gestures, speech, cfg, 1'000'000, rng);
    EXPECT_NEAR(error_fraction(trials), 0.040, 0.003);
}

TEST(SimulateFused, NoDetectionLeavesGestureErrorRate) {
    // Only meaningful when every gesture error is a wrong capture: misses
    // are always detected.
    const auto gestures = all_wrong_model(0.136);
    const auto speech = default_recognition_model();
    Rng rng(9);
    const auto trials = simulate_fused_operation({SpeechCommand::MoveDown, Gesture::Fist}, gestures, speech,
                                                 config_with(0.0), 1'000'000, rng);
    EXPECT_NEAR(error_fraction(trials), 0.136, 0.003);
}

TEST(SimulateFused, NoDetectionWithMissesFloorsAtMissedShare) {
    const auto gestures = default_gesture_model();
    const auto speech = default_recognition_model();
    FusionConfig cfg = config_with(0.0);
    cfg.set_missed_shares(gestures);
    Rng rng(10);
    const auto trials = simulate_fused_operation({SpeechCommand::MoveDown, Gesture::Fist}, gestures, speech, cfg,
                                                 500'000, rng);
    const double expected = 0.136 * 0.7 + 0.136 * 0.3 * 0.225;
    EXPECT_NEAR(error_fraction(trials), expected, 3 * std::sqrt(expected * (1 - expected) / 500000.0));
}

TEST(SimulateFused, SingleTrialReproducible) {
    const auto gestures = default_gesture_model();
    const auto speech = default_recognition_model();
    const FusionConfig cfg;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng a(seed), b(seed);
        const auto x = simulate_fused_operation(kFusionOperations[0], gestures, speech, cfg, 1, a);
        const auto y = simulate_fused_operation(kFusionOperations[0], gestures, speech, cfg, 1, b);
        ASSERT_EQ(x.size(), 1u);
        EXPECT_EQ(x[0].success, y[0].success);
        EXPECT_EQ(x[0].error, y[0].error);
    }
    Rng rng(0);
    EXPECT_THROW(simulate_fused_operation(kFusionOperations[0], gestures, speech, cfg, 0, rng), InvalidInput);
}

// Monte Carlo through the state machine against the closed form on the
// full {0, .1, ..., 1}^3 grid. With 1331 cells a few 3 SE exceedances are
// expected (about 3.6), so the count is bounded instead and each cell gets a
// family-wise 4.5 SE limit.
TEST(SimulateFused, MonteCarloMatchesClosedFormOnGrid) {
    const std::size_t n = 100000;
    const auto op = kFusionOperations[1];
    int beyond_3se = 0;
    for (int gi = 0; gi <= 10; ++gi) {
        const double g = gi / 10.0;
        const auto gestures = all_wrong_model(g);
        for (int si = 0; si <= 10; ++si) {
            const double s = si / 10.0;
            const auto speech = speech_with_error(s);
            for (int di = 0; di <= 10; ++di) {
                const double d = di / 10.0;
                Rng rng(static_cast<std::uint64_t>(gi * 121 + si * 11 + di));
                const double f = error_fraction(simulate_fused_operation(op, gestures, speech, config_with(d), n, rng));
                const double p = closed_form_fused_error(g, s, d);
                const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
                if (std::abs(f - p) > std::max(3.0 * se, 1e-12)) ++beyond_3se;
                ASSERT_LE(std::abs(f - p), std::max(4.5 * se, 1e-12)) << "g=" << g << " s=" << s << " d=" << d;
            }
        }
    }
    EXPECT_LE(beyond_3se, 12);
}
