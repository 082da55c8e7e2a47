#pragma once

// Line-oriented wire format between the speech client and the fusion server.
//
//   HELLO <version>
//   EVT GESTURE <seq> <t_ms> <FIST|WAVE_IN|WAVE_OUT|FINGER_SPREAD|DOUBLE_TAP|NONE>
//   EVT SPEECH <seq> <t_ms> "<text>"
//   ACK <seq>
//   FUSED <t_ms> PIN<n> <GESTURE|SPEECH>
//   ERR <code> "<message>"
//   BYE
//
// Fields are separated by exactly one space and every line ends in '\n'.
// Numbers are unsigned decimal without leading zeros. Inside quotes '"' and
// '\' are backslash-escaped; CR and LF may not appear at all.

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "mmfuse/core.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/fusion.hpp"

namespace mmfuse::wire {

inline constexpr std::string_view kProtocolVersion = "mmfuse/1";
inline constexpr std::uint16_t kDefaultPort = 7207;

struct Hello {
    std::string version{kProtocolVersion};
    friend bool operator==(const Hello&, const Hello&) = default;
};

struct Evt {
    Channel source = Channel::Gesture;
    std::uint64_t seq = 0;
    std::int64_t t_ms = 0;
    std::string payload; ///< gesture token or utterance text
    friend bool operator==(const Evt&, const Evt&) = default;
};

struct Ack {
    std::uint64_t seq = 0;
    friend bool operator==(const Ack&, const Ack&) = default;
};

struct Fused {
    std::int64_t t_ms = 0;
    int pin = 0;
    Channel source = Channel::Gesture;
    friend bool operator==(const Fused&, const Fused&) = default;
};

struct Err {
    int code = 400;
    std::string message;
    friend bool operator==(const Err&, const Err&) = default;
};

struct Bye {
    friend bool operator==(const Bye&, const Bye&) = default;
};

using Message = std::variant<Hello, Evt, Ack, Fused, Err, Bye>;

class EncodingError : public Error {
public:
    using Error::Error;
};

class UnknownVerb : public ParseError {
public:
    using ParseError::ParseError;
};

inline std::string_view gesture_token(Gesture g) {
    switch (g) {
    case Gesture::Fist: return "FIST";
    case Gesture::WaveIn: return "WAVE_IN";
    case Gesture::WaveOut: return "WAVE_OUT";
    case Gesture::FingerSpread: return "FINGER_SPREAD";
    case Gesture::DoubleTap: return "DOUBLE_TAP";
    case Gesture::NoGesture: return "NONE";
    }
    return "NONE";
}

inline std::optional<Gesture> parse_gesture_token(std::string_view s) {
    for (Gesture g : {Gesture::Fist, Gesture::WaveIn, Gesture::WaveOut, Gesture::FingerSpread, Gesture::DoubleTap,
                      Gesture::NoGesture}) {
        if (s == gesture_token(g)) return g;
    }
    return std::nullopt;
}

inline std::string_view channel_token(Channel c) { return c == Channel::Gesture ? "GESTURE" : "SPEECH"; }

namespace detail {

inline bool is_token_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '/' || c == '.' ||
           c == '_' || c == '-';
}

inline std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '\n' || c == '\r') throw EncodingError("quoted text may not contain a line break");
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

/// Strict cursor over one line.
class Reader {
public:
    explicit Reader(std::string_view line) : line_(line) {}

    std::size_t pos() const { return pos_; }
    bool at_end() const { return pos_ == line_.size(); }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(what + " at byte " + std::to_string(pos_), pos_);
    }

    std::string_view token() {
        const std::size_t start = pos_;
        while (pos_ < line_.size() && is_token_char(line_[pos_])) ++pos_;
        if (pos_ == start) fail("expected a token");
        return line_.substr(start, pos_ - start);
    }

    void space() {
        if (pos_ >= line_.size() || line_[pos_] != ' ') fail("expected a single space");
        ++pos_;
    }

    std::uint64_t number() {
        const std::size_t start = pos_;
        while (pos_ < line_.size() && line_[pos_] >= '0' && line_[pos_] <= '9') ++pos_;
        if (pos_ == start) fail("expected a number");
        if (pos_ - start > 1 && line_[start] == '0') {
            pos_ = start;
            fail("leading zero in number");
        }
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(line_.data() + start, line_.data() + pos_, v);
        if (ec != std::errc{} || v > static_cast<std::uint64_t>(INT64_MAX)) {
            pos_ = start;
            fail("number out of range");
        }
        return v;
    }

    std::string quoted() {
        if (pos_ >= line_.size() || line_[pos_] != '"') fail("expected '\"'");
        ++pos_;
        std::string out;
        while (true) {
            if (pos_ >= line_.size()) fail("unterminated quoted text");
            const char c = line_[pos_];
            if (c == '\r' || c == '\n') fail("line break inside quoted text");
            if (c == '"') {
                ++pos_;
                return out;
            }
            if (c == '\\') {
                ++pos_;
                if (pos_ >= line_.size() || (line_[pos_] != '"' && line_[pos_] != '\\')) fail("bad escape");
            }
            out.push_back(line_[pos_]);
            ++pos_;
        }
    }

    void end() {
        if (!at_end()) fail("unexpected trailing characters");
    }

private:
    std::string_view line_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Serializes m to one '\n'-terminated line.
inline std::string encode(const Message& m) {
    struct Visitor {
        static void check_seq(std::uint64_t seq) {
            if (seq > static_cast<std::uint64_t>(INT64_MAX)) throw EncodingError("seq out of range");
        }
        std::string operator()(const Hello& h) const {
            if (h.version.empty()) throw EncodingError("empty version");
            for (char c : h.version) {
                if (!detail::is_token_char(c)) throw EncodingError("version must be a bare token");
            }
            return "HELLO " + h.version + "\n";
        }
        std::string operator()(const Evt& e) const {
            if (e.t_ms < 0) throw EncodingError("negative timestamp");
            check_seq(e.seq);
            std::string head = "EVT " + std::string(channel_token(e.source)) + " " + std::to_string(e.seq) + " " +
                               std::to_string(e.t_ms) + " ";
            if (e.source == Channel::Gesture) {
                if (!parse_gesture_token(e.payload)) throw EncodingError("unknown gesture token '" + e.payload + "'");
                return head + e.payload + "\n";
            }
            return head + detail::quote(e.payload) + "\n";
        }
        std::string operator()(const Ack& a) const {
            check_seq(a.seq);
            return "ACK " + std::to_string(a.seq) + "\n"; }
        std::string operator()(const Fused& f) const {
            if (f.t_ms < 0) throw EncodingError("negative timestamp");
            try {
                action_for_pin(f.pin);
            } catch (const InvalidInput& e) {
                throw EncodingError(e.what());
            }
            return "FUSED " + std::to_string(f.t_ms) + " PIN" + std::to_string(f.pin) + " " +
                   std::string(channel_token(f.source)) + "\n";
        }
        std::string operator()(const Err& e) const {
            if (e.code < 0) throw EncodingError("negative error code");
            return "ERR " + std::to_string(e.code) + " " + detail::quote(e.message) + "\n";
        }
        std::string operator()(const Bye&) const { return "BYE\n"; }
    };
    return std::visit(Visitor{}, m);
}

/// Strict inverse of encode. A single trailing '\n' is optional.
inline Message decode(std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    detail::Reader r(line);
    const std::string_view verb = r.token();

    if (verb == "HELLO") {
        r.space();
        Hello h{std::string(r.token())};
        r.end();
        return h;
    }
    if (verb == "EVT") {
        r.space();
        Evt e;
        const std::size_t src_at = r.pos();
        const std::string_view src = r.token();
        if (src == "GESTURE") {
            e.source = Channel::Gesture;
        } else if (src == "SPEECH") {
            e.source = Channel::Speech;
        } else {
            throw ParseError("unknown event source '" + std::string(src) + "' at byte " + std::to_string(src_at), src_at);
        }
        r.space();
        e.seq = r.number();
        r.space();
        e.t_ms = static_cast<std::int64_t>(r.number());
        r.space();
        if (e.source == Channel::Gesture) {
            const std::size_t at = r.pos();
            e.payload = std::string(r.token());
            if (!parse_gesture_token(e.payload)) {
                throw ParseError("unknown gesture '" + e.payload + "' at byte " + std::to_string(at), at);
            }
        } else {
            e.payload = r.quoted();
        }
        r.end();
        return e;
    }
    if (verb == "ACK") {
        r.space();
        Ack a{r.number()};
        r.end();
        return a;
    }
    if (verb == "FUSED") {
        r.space();
        Fused f;
        f.t_ms = static_cast<std::int64_t>(r.number());
        r.space();
        const std::size_t at = r.pos();
        try {
            f.pin = parse_action_name(r.token()).pin;
        } catch (const ParseError&) {
            throw ParseError("bad action at byte " + std::to_string(at), at);
        }
        r.space();
        const std::size_t src_at = r.pos();
        const std::string_view src = r.token();
        if (src == "GESTURE") {
            f.source = Channel::Gesture;
        } else if (src == "SPEECH") {
            f.source = Channel::Speech;
        } else {
            throw ParseError("unknown source at byte " + std::to_string(src_at), src_at);
        }
        r.end();
        return f;
    }
    if (verb == "ERR") {
        r.space();
        Err e;
        const std::uint64_t code = r.number();
        if (code > 999) r.fail("error code out of range");
        e.code = static_cast<int>(code);
        r.space();
        e.message = r.quoted();
        r.end();
        return e;
    }
    if (verb == "BYE") {
        r.end();
        return Bye{};
    }
    throw UnknownVerb("unknown verb '" + std::string(verb) + "'", 0);
}

/// Wire form of an utterance or reported gesture as a fusion event.
inline ModalityEvent to_modality_event(const Evt& e) {
    if (e.source == Channel::Speech) return ModalityEvent::speech(e.t_ms, RawUtterance{e.payload, std::nullopt}, e.seq);
    const auto g = parse_gesture_token(e.payload);
    if (!g) throw ParseError("unknown gesture '" + e.payload + "'");
    // The server cannot know what was intended; a reported gesture is taken
    // as recognized and NONE as a miss.
    const GestureOutcome o = is_real(*g) ? GestureOutcome::correct(*g) : GestureOutcome::missed(Gesture::NoGesture);
    return ModalityEvent::gesture(e.t_ms, o, e.seq);
}

inline Fused to_wire(const FusedCommand& c) { return {c.t_ms, c.action.pin, c.source}; }

} // namespace mmfuse::wire
