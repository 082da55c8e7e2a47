#pragma once

// Command vocabularies and the fixed gesture/speech/pin/action tables.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>

#include "mmfuse/errors.hpp"

namespace mmfuse {

enum class Gesture {
    Fist,
    WaveIn,
    WaveOut,
    FingerSpread,
    DoubleTap,
    NoGesture, ///< band produced nothing; never part of a confusion support
};

inline constexpr std::size_t kGestureCount = 5;

inline constexpr std::array<Gesture, kGestureCount> kGestures = {
    Gesture::Fist, Gesture::WaveIn, Gesture::WaveOut, Gesture::FingerSpread, Gesture::DoubleTap,
};

enum class SpeechCommand {
    MoveRight,
    MoveLeft,
    MoveUp,
    MoveDown,
    MoveGripper,
};

inline constexpr std::size_t kCommandCount = 5;

inline constexpr std::array<SpeechCommand, kCommandCount> kCommands = {
    SpeechCommand::MoveRight, SpeechCommand::MoveLeft, SpeechCommand::MoveUp,
    SpeechCommand::MoveDown, SpeechCommand::MoveGripper,
};

inline constexpr int kBoardPinCount = 14;

constexpr std::size_t index_of(Gesture g) { return static_cast<std::size_t>(g); }
constexpr std::size_t index_of(SpeechCommand c) { return static_cast<std::size_t>(c); }

constexpr bool is_real(Gesture g) { return g != Gesture::NoGesture; }

inline std::string_view name_of(Gesture g) {
    switch (g) {
    case Gesture::Fist: return "fist";
    case Gesture::WaveIn: return "wave in";
    case Gesture::WaveOut: return "wave out";
    case Gesture::FingerSpread: return "finger spread";
    case Gesture::DoubleTap: return "double tap";
    case Gesture::NoGesture: return "none";
    }
    return "none";
}

/// Display form used in tables ("Wave In").
inline std::string display_name(Gesture g) {
    std::string out(name_of(g));
    bool start = true;
    for (auto& ch : out) {
        if (start) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        start = ch == ' ';
    }
    return out;
}

/// Canonical utterance, which is also the lowercase display name.
inline std::string_view utterance_of(SpeechCommand c) {
    switch (c) {
    case SpeechCommand::MoveRight: return "move right";
    case SpeechCommand::MoveLeft: return "move left";
    case SpeechCommand::MoveUp: return "move up";
    case SpeechCommand::MoveDown: return "move down";
    case SpeechCommand::MoveGripper: return "move gripper";
    }
    return "";
}

inline std::string display_name(SpeechCommand c) {
    std::string out(utterance_of(c));
    bool start = true;
    for (auto& ch : out) {
        if (start) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        start = ch == ' ';
    }
    return out;
}

namespace detail {

/// Lowercase, map '_' and '-' to spaces, collapse runs of whitespace, trim.
inline std::string fold_name(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char raw : s) {
        char ch = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        if (ch == '_' || ch == '-') ch = ' ';
        if (std::isspace(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(ch);
    }
    return out;
}

} // namespace detail

/// Case-insensitive gesture name. Accepts "wave left"/"wave right" as
/// aliases of WaveIn/WaveOut and "none" for NoGesture only when allow_none.
inline Gesture parse_gesture_name(std::string_view s, bool allow_none = false) {
    const std::string folded = detail::fold_name(s);
    for (Gesture g : kGestures) {
        if (folded == name_of(g)) return g;
    }
    if (folded == "wave left") return Gesture::WaveIn;
    if (folded == "wave right") return Gesture::WaveOut;
    if (folded == "fingers spread") return Gesture::FingerSpread;
    if (allow_none && (folded == "none" || folded == "no gesture")) return Gesture::NoGesture;
    throw ParseError("unknown gesture name: '" + std::string(s) + "'");
}

inline SpeechCommand parse_command_name(std::string_view s) {
    const std::string folded = detail::fold_name(s);
    for (SpeechCommand c : kCommands) {
        if (folded == utterance_of(c)) return c;
    }
    throw ParseError("unknown speech command: '" + std::string(s) + "'");
}

inline int gesture_to_pin(Gesture g) {
    switch (g) {
    case Gesture::Fist: return 3;
    case Gesture::WaveIn: return 4;
    case Gesture::WaveOut: return 5;
    case Gesture::FingerSpread: return 9;
    case Gesture::DoubleTap: return 10;
    case Gesture::NoGesture: break;
    }
    throw InvalidInput("NoGesture has no pin assignment");
}

inline Gesture pin_to_gesture(int pin) {
    for (Gesture g : kGestures) {
        if (gesture_to_pin(g) == pin) return g;
    }
    throw InvalidInput("pin " + std::to_string(pin) + " is not assigned to a gesture");
}

inline Gesture speech_to_gesture(SpeechCommand c) {
    switch (c) {
    case SpeechCommand::MoveRight: return Gesture::WaveOut;
    case SpeechCommand::MoveLeft: return Gesture::WaveIn;
    case SpeechCommand::MoveUp: return Gesture::FingerSpread;
    case SpeechCommand::MoveDown: return Gesture::Fist;
    case SpeechCommand::MoveGripper: return Gesture::DoubleTap;
    }
    return Gesture::NoGesture;
}

inline SpeechCommand gesture_to_speech(Gesture g) {
    for (SpeechCommand c : kCommands) {
        if (speech_to_gesture(c) == g) return c;
    }
    throw InvalidInput("NoGesture has no paired speech command");
}

/// One row of the fused-command table: a spoken command and its paired gesture.
struct FusionOperation {
    SpeechCommand speech;
    Gesture gesture;

    std::string label() const {
        return display_name(speech) + " & " + display_name(gesture);
    }

    friend bool operator==(const FusionOperation&, const FusionOperation&) = default;
};

/// The five operations in the order of the published fused-results table.
inline constexpr std::array<FusionOperation, 5> kFusionOperations = {{
    {SpeechCommand::MoveGripper, Gesture::DoubleTap},
    {SpeechCommand::MoveDown, Gesture::Fist},
    {SpeechCommand::MoveUp, Gesture::FingerSpread},
    {SpeechCommand::MoveLeft, Gesture::WaveIn},
    {SpeechCommand::MoveRight, Gesture::WaveOut},
}};

inline FusionOperation operation_for(Gesture g) {
    return {gesture_to_speech(g), g};
}

inline FusionOperation operation_for(SpeechCommand c) {
    return {c, speech_to_gesture(c)};
}

/// Position of op within kFusionOperations.
inline std::size_t operation_index(const FusionOperation& op) {
    auto it = std::find(kFusionOperations.begin(), kFusionOperations.end(), op);
    if (it == kFusionOperations.end()) throw InvalidInput("not a fusion operation: " + op.label());
    return static_cast<std::size_t>(it - kFusionOperations.begin());
}

/// Accepts "move gripper", "double tap", or a full label like "Move Down & Fist".
inline FusionOperation parse_operation(std::string_view s) {
    const std::string folded = detail::fold_name(s);
    for (const auto& op : kFusionOperations) {
        if (folded == detail::fold_name(op.label()) || folded == utterance_of(op.speech) ||
            folded == name_of(op.gesture)) {
            return op;
        }
    }
    try {
        return operation_for(parse_gesture_name(s));
    } catch (const ParseError&) {
        throw ParseError("unknown fusion operation: '" + std::string(s) + "'");
    }
}

enum class Servo { Base, Shoulder, Elbow, Wrist, WristRotate };

inline constexpr std::size_t kServoCount = 5;

inline std::string_view name_of(Servo s) {
    switch (s) {
    case Servo::Base: return "base";
    case Servo::Shoulder: return "shoulder";
    case Servo::Elbow: return "elbow";
    case Servo::Wrist: return "wrist";
    case Servo::WristRotate: return "wrist_rotate";
    }
    return "";
}

inline constexpr int kDefaultStepDeg = 5;

struct StepServo {
    Servo servo;
    int step_deg; ///< signed
};

struct ToggleGripper {};

/// What raising one output pin does to the arm.
struct ArmAction {
    int pin;
    std::variant<StepServo, ToggleGripper> effect;

    bool toggles_gripper() const { return std::holds_alternative<ToggleGripper>(effect); }

    /// Wire/display name, e.g. "PIN3".
    std::string name() const { return "PIN" + std::to_string(pin); }
};

/// Pins 3/4/5/9 step base/shoulder/elbow/wrist; pin 10 toggles the gripper.
inline ArmAction action_for_pin(int pin) {
    switch (pin) {
    case 3: return {3, StepServo{Servo::Base, kDefaultStepDeg}};
    case 4: return {4, StepServo{Servo::Shoulder, kDefaultStepDeg}};
    case 5: return {5, StepServo{Servo::Elbow, kDefaultStepDeg}};
    case 9: return {9, StepServo{Servo::Wrist, kDefaultStepDeg}};
    case 10: return {10, ToggleGripper{}};
    default: break;
    }
    throw InvalidInput("pin " + std::to_string(pin) + " has no arm action");
}

inline ArmAction action_for(Gesture g) { return action_for_pin(gesture_to_pin(g)); }
inline ArmAction action_for(SpeechCommand c) { return action_for(speech_to_gesture(c)); }

/// Parses "PIN<n>" as produced by ArmAction::name().
inline ArmAction parse_action_name(std::string_view s) {
    if (s.size() < 4 || s.substr(0, 3) != "PIN") {
        throw ParseError("bad action name: '" + std::string(s) + "'");
    }
    int pin = 0;
    for (char ch : s.substr(3)) {
        if (!std::isdigit(static_cast<unsigned char>(ch)) || pin > 100) {
            throw ParseError("bad action name: '" + std::string(s) + "'");
        }
        pin = pin * 10 + (ch - '0');
    }
    if (s.size() > 4 && s[3] == '0') throw ParseError("bad action name: '" + std::string(s) + "'");
    try {
        return action_for_pin(pin);
    } catch (const InvalidInput& e) {
        throw ParseError(e.what());
    }
}

} // namespace mmfuse
