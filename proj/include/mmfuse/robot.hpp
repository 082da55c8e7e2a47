#pragma once

// Pin-level model of the Arduino-driven five-servo arm.

#include <algorithm>
#include <array>
#include <ostream>
#include <string>
#include <vector>

#include "mmfuse/core.hpp"
#include "mmfuse/errors.hpp"

namespace mmfuse {

enum class GripperState { Open, Closed };

inline std::string_view name_of(GripperState g) { return g == GripperState::Open ? "open" : "closed"; }

class UnmappedPin : public InvalidInput {
public:
    explicit UnmappedPin(int pin) : InvalidInput("pin " + std::to_string(pin) + " drives nothing"), pin_(pin) {}
    int pin() const noexcept { return pin_; }

private:
    int pin_;
};

class OrderingError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

inline constexpr int kServoMinDeg = 0;
inline constexpr int kServoMaxDeg = 180;
inline constexpr int kServoHomeDeg = 90;

struct ServoState {
    int servo_id = 0;
    int angle_deg = kServoHomeDeg;
};

/// One accepted pin-high: what it touched and the value before and after.
struct ArmLogEntry {
    std::int64_t t_ms = 0;
    int pin = 0;
    std::string target; ///< servo name or "gripper"
    std::string before;
    std::string after;

    friend bool operator==(const ArmLogEntry&, const ArmLogEntry&) = default;
};

struct ArmState {
    std::array<ServoState, kServoCount> servos{{{0}, {1}, {2}, {3}, {4}}};
    GripperState gripper = GripperState::Open;
    std::vector<ArmLogEntry> log;

    int angle(Servo s) const { return servos.at(static_cast<std::size_t>(s)).angle_deg; }
};

/// Applies one pin-high. Servo pins move their joint by step_deg, clamped to
/// [0, 180]; pin 10 toggles the gripper. Every accepted call logs one entry.
inline ArmState apply_pin_high(ArmState state, int pin, std::int64_t t_ms, int step_deg = kDefaultStepDeg) {
    ArmAction action;
    try {
        action = action_for_pin(pin);
    } catch (const InvalidInput&) {
        throw UnmappedPin(pin);
    }
    if (!state.log.empty() && t_ms < state.log.back().t_ms) {
        throw OrderingError("pin event at " + std::to_string(t_ms) + " ms precedes last logged event at " +
                            std::to_string(state.log.back().t_ms) + " ms");
    }

    ArmLogEntry entry{t_ms, pin, "", "", ""};
    if (action.toggles_gripper()) {
        entry.target = "gripper";
        entry.before = name_of(state.gripper);
        state.gripper = state.gripper == GripperState::Open ? GripperState::Closed : GripperState::Open;
        entry.after = name_of(state.gripper);
    } else {
        const auto& step = std::get<StepServo>(action.effect);
        auto& servo = state.servos.at(static_cast<std::size_t>(step.servo));
        const int signed_step = step.step_deg < 0 ? -step_deg : step_deg;
        entry.target = name_of(step.servo);
        entry.before = std::to_string(servo.angle_deg);
        servo.angle_deg = std::clamp(servo.angle_deg + signed_step, kServoMinDeg, kServoMaxDeg);
        entry.after = std::to_string(servo.angle_deg);
    }
    state.log.push_back(std::move(entry));
    return state;
}

/// All servos home (90 deg), gripper open, empty log.
inline ArmState reset(const ArmState& = {}) { return ArmState{}; }

/// Writes the action log as CSV with header t_ms,pin,servo_or_gripper,before,after.
inline void write_log_csv(std::ostream& os, const ArmState& state) {
    os << "t_ms,pin,servo_or_gripper,before,after\n";
    for (const auto& e : state.log) {
        os << e.t_ms << ',' << e.pin << ',' << e.target << ',' << e.before << ',' << e.after << '\n';
    }
}

/// One-line summary, e.g. "base=95 shoulder=90 elbow=90 wrist=90 wrist_rotate=90 gripper=open".
inline std::string describe(const ArmState& state) {
    std::string out;
    for (std::size_t i = 0; i < kServoCount; ++i) {
        if (!out.empty()) out += ' ';
        out += std::string(name_of(static_cast<Servo>(i))) + "=" + std::to_string(state.servos[i].angle_deg);
    }
    out += " gripper=" + std::string(name_of(state.gripper));
    return out;
}

} // namespace mmfuse
