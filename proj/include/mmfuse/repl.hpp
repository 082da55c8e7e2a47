#pragma once

// Line-driven manual session against the fusion engine and simulated arm.
//
//   g <gesture|none>     band reports a gesture (or a miss) now
//   s "<utterance>"      recognizer emits text now (quotes optional)
//   tick <ms>            advance the clock, firing expired windows
//   state                print fusion phase, clock and arm
//   reset                new episode history, arm back home, clock to 0
//   quit                 leave

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mmfuse/core.hpp"
#include "mmfuse/fusion.hpp"
#include "mmfuse/robot.hpp"

namespace mmfuse {

class Repl {
public:
    explicit Repl(FusionConfig cfg = {}, std::uint64_t seed = 0) : cfg_(cfg), seed_(seed), engine_(std::move(cfg), seed) {}

    /// Runs until quit or end of input. Returns the process exit code.
    int run(std::istream& in, std::ostream& out) {
        std::string line;
        while (std::getline(in, line)) {
            if (!handle(line, out)) return 0;
        }
        return 0;
    }

    /// Executes one command line; false once the user quits.
    bool handle(const std::string& line, std::ostream& out) {
        std::istringstream ls(line);
        std::string cmd;
        if (!(ls >> cmd)) return true;
        std::string rest;
        std::getline(ls, rest);
        rest = trim(rest);

        try {
            if (cmd == "quit" || cmd == "exit") {
                out << "bye\n";
                return false;
            }
            if (cmd == "g") {
                const Gesture g = parse_gesture_name(rest, true);
                const GestureOutcome o = is_real(g) ? GestureOutcome::correct(g) : GestureOutcome::missed(g);
                report(engine_.submit(ModalityEvent::gesture(engine_.now(), o)), out);
            } else if (cmd == "s") {
                std::string text = rest;
                if (text.size() >= 2 && text.front() == '"' && text.back() == '"') text = text.substr(1, text.size() - 2);
                if (text.empty()) throw InvalidInput("empty utterance");
                report(engine_.submit(ModalityEvent::speech(engine_.now(), RawUtterance{text, std::nullopt})), out);
            } else if (cmd == "tick") {
                std::size_t used = 0;
                const long long ms = std::stoll(rest, &used);
                if (used != rest.size() || ms < 0) throw InvalidInput("tick needs a non-negative number of ms");
                report(engine_.advance_to(engine_.now() + ms), out);
            } else if (cmd == "state") {
                out << "phase=" << name_of(engine_.state().phase) << " t=" << engine_.now() << "ms";
                if (engine_.state().has_deadline()) out << " deadline=" << engine_.state().deadline_ms << "ms";
                out << "\n" << describe(arm_) << "\n";
            } else if (cmd == "reset") {
                engine_ = FusionEngine(cfg_, seed_);
                arm_ = reset(arm_);
                out << "reset\n" << describe(arm_) << "\n";
            } else {
                usage(out);
            }
        } catch (const std::exception& e) {
            out << "error: " << e.what() << "\n";
            if (cmd != "g" && cmd != "s" && cmd != "tick") usage(out);
        }
        return true;
    }

    const ArmState& arm() const { return arm_; }

private:
    static std::string trim(const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    static void usage(std::ostream& out) {
        out << "usage: g <gesture|none> | s \"<utterance>\" | tick <ms> | state | reset | quit\n";
    }

    void report(const std::vector<StepResult>& results, std::ostream& out) {
        if (results.empty()) {
            out << "phase=" << name_of(engine_.state().phase);
            if (engine_.state().has_deadline()) out << " deadline=" << engine_.state().deadline_ms << "ms";
            out << "\n";
            return;
        }
        for (const auto& r : results) {
            if (r.command) {
                const auto& c = *r.command;
                arm_ = apply_pin_high(std::move(arm_), c.action.pin, c.t_ms);
                const auto& e = arm_.log.back();
                out << "FUSED " << c.action.name() << " " << (c.source == Channel::Gesture ? "GESTURE" : "SPEECH")
                    << " t=" << c.t_ms << "ms " << e.target << " " << e.before << " -> " << e.after << "\n";
            }
            if (r.error) out << "ERROR " << name_of(r.error->kind) << " t=" << r.error->t_ms << "ms\n";
        }
        out << describe(arm_) << "\n";
    }

    FusionConfig cfg_;
    std::uint64_t seed_;
    FusionEngine engine_;
    ArmState arm_;
};

} // namespace mmfuse
