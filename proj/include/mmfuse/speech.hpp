#pragma once

// Simulated speech recognizer, capture-error classification and the
// many-to-one normalization from recognized text to commands.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmfuse/core.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/random.hpp"
#include "mmfuse/reference.hpp"

namespace mmfuse {

enum class SpeechErrorMode { ConfusableString, DuplicatedString, ExtraneousTokens };

inline constexpr std::size_t kSpeechErrorModeCount = 3;

struct CommandRecognition {
    double p_correct = 1.0;
    /// Weights of {ConfusableString, DuplicatedString, ExtraneousTokens}.
    std::array<double, kSpeechErrorModeCount> mode_weights = {0.5, 0.25, 0.25};
    /// Emitted for ConfusableString.
    std::string confusable;
};

/// Filler words appended for ExtraneousTokens.
inline const std::vector<std::string>& filler_tokens() {
    static const std::vector<std::string> fillers = {"please", "now", "uh"};
    return fillers;
}

/// Confusable output per command. Only "override" was actually observed;
/// the other four are placeholders.
inline std::string default_confusable(SpeechCommand c) {
    switch (c) {
    case SpeechCommand::MoveRight: return "override";
    case SpeechCommand::MoveLeft: return "movie left";
    case SpeechCommand::MoveUp: return "move op";
    case SpeechCommand::MoveDown: return "move town";
    case SpeechCommand::MoveGripper: return "move grip her";
    }
    return "";
}

struct RecognitionModel {
    std::array<CommandRecognition, kCommandCount> commands{};

    const CommandRecognition& operator[](SpeechCommand c) const { return commands.at(index_of(c)); }
    CommandRecognition& operator[](SpeechCommand c) { return commands.at(index_of(c)); }

    void validate() const {
        for (SpeechCommand c : kCommands) {
            const auto& r = (*this)[c];
            const std::string who(utterance_of(c));
            if (!(r.p_correct >= 0.0 && r.p_correct <= 1.0)) {
                throw InvalidInput("p_correct out of [0,1] for " + who);
            }
            double total = 0.0;
            for (double w : r.mode_weights) {
                if (!(w >= 0.0)) throw InvalidInput("negative error-mode weight for " + who);
                total += w;
            }
            if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("error-mode weights for " + who + " must sum to 1");
            if (r.mode_weights[0] > 0.0 && r.confusable.empty()) {
                throw InvalidInput("confusable string missing for " + who);
            }
        }
    }
};

inline RecognitionModel default_recognition_model() {
    RecognitionModel m;
    for (SpeechCommand c : kCommands) {
        auto& r = m[c];
        r.p_correct = 1.0 - reference::speech_error_rate(c);
        r.confusable = default_confusable(c);
    }
    return m;
}

inline RecognitionModel perfect_recognition_model() {
    RecognitionModel m = default_recognition_model();
    for (auto& r : m.commands) r.p_correct = 1.0;
    return m;
}

/// Recognized string plus (for simulated utterances) what was actually said.
struct RawUtterance {
    std::string text;
    std::optional<SpeechCommand> spoken;

    friend bool operator==(const RawUtterance&, const RawUtterance&) = default;
};

inline RawUtterance sample_recognition(SpeechCommand c, const RecognitionModel& model, Rng& rng) {
    const auto& r = model[c];
    const std::string canonical(utterance_of(c));
    if (rng.uniform() < r.p_correct) return {canonical, c};

    double v = rng.uniform();
    std::size_t mode = 0;
    for (; mode + 1 < kSpeechErrorModeCount; ++mode) {
        if (v < r.mode_weights[mode]) break;
        v -= r.mode_weights[mode];
    }
    switch (static_cast<SpeechErrorMode>(mode)) {
    case SpeechErrorMode::ConfusableString:
        return {r.confusable, c};
    case SpeechErrorMode::DuplicatedString:
        return {canonical + " " + canonical, c};
    case SpeechErrorMode::ExtraneousTokens: {
        const auto& fillers = filler_tokens();
        return {canonical + " " + fillers[rng.index(fillers.size())], c};
    }
    }
    return {canonical, c};
}

/// Lowercase with whitespace runs collapsed and trimmed.
inline std::string normalize_text(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char raw : s) {
        const auto ch = static_cast<unsigned char>(raw);
        if (std::isspace(ch)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(ch)));
    }
    return out;
}

/// Many-to-one map from recognized strings to commands.
class NormalizationMap {
public:
    /// Canonical utterances only.
    NormalizationMap() {
        for (SpeechCommand c : kCommands) entries_.emplace(std::string(utterance_of(c)), c);
    }

    /// Adds an accepted spelling. Re-adding the same pair is a no-op;
    /// mapping a known string to a different command throws.
    void add(std::string_view text, SpeechCommand c) {
        std::string key = normalize_text(text);
        if (key.empty()) throw InvalidInput("cannot map an empty string");
        auto [it, inserted] = entries_.emplace(key, c);
        if (!inserted && it->second != c) {
            throw InvalidInput("'" + key + "' is already mapped to " + std::string(utterance_of(it->second)));
        }
    }

    std::optional<SpeechCommand> lookup(std::string_view text) const {
        auto it = entries_.find(normalize_text(text));
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    const std::map<std::string, SpeechCommand>& entries() const { return entries_; }

private:
    std::map<std::string, SpeechCommand> entries_;
};

/// Canonical forms plus every variant the simulated recognizer produces:
/// the confusable, the doubled utterance, and utterance + each filler.
inline NormalizationMap default_normalization_map(const RecognitionModel& model = default_recognition_model()) {
    NormalizationMap map;
    for (SpeechCommand c : kCommands) {
        const std::string canonical(utterance_of(c));
        if (!model[c].confusable.empty()) map.add(model[c].confusable, c);
        map.add(canonical + " " + canonical, c);
        for (const auto& f : filler_tokens()) map.add(canonical + " " + f, c);
    }
    return map;
}

/// Unrecognized when the text is not in the map.
inline std::optional<SpeechCommand> normalize_utterance(const RawUtterance& u, const NormalizationMap& map) {
    return map.lookup(u.text);
}

enum class CaptureClass {
    Clean,      ///< exactly one canonical utterance
    Duplicated, ///< a canonical utterance appears two or more times
    Extraneous, ///< one canonical utterance plus other tokens
    Confused,   ///< no canonical utterance at all (e.g. "override")
};

inline std::string_view name_of(CaptureClass k) {
    switch (k) {
    case CaptureClass::Clean: return "clean";
    case CaptureClass::Duplicated: return "duplicated";
    case CaptureClass::Extraneous: return "extraneous";
    case CaptureClass::Confused: return "confused";
    }
    return "";
}

namespace detail {

inline std::vector<std::string> split_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    const std::string norm = normalize_text(text);
    std::size_t start = 0;
    while (start < norm.size()) {
        std::size_t end = norm.find(' ', start);
        if (end == std::string::npos) end = norm.size();
        tokens.push_back(norm.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

} // namespace detail

/// Every non-Clean capture counts as a recognition error.
inline CaptureClass classify_capture_error(const RawUtterance& u) {
    const auto tokens = detail::split_tokens(u.text);
    std::size_t best_count = 0;
    std::size_t best_len = 0;
    for (SpeechCommand c : kCommands) {
        const auto phrase = detail::split_tokens(utterance_of(c));
        std::size_t count = 0;
        for (std::size_t i = 0; i + phrase.size() <= tokens.size();) {
            if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
                ++count;
                i += phrase.size();
            } else {
                ++i;
            }
        }
        if (count > best_count) {
            best_count = count;
            best_len = phrase.size();
        }
    }
    if (best_count == 0) return CaptureClass::Confused;
    if (best_count >= 2) return CaptureClass::Duplicated;
    if (tokens.size() > best_len) return CaptureClass::Extraneous;
    return CaptureClass::Clean;
}

} // namespace mmfuse
