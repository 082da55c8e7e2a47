#pragma once

// Model configuration and its versioned text format.
//
//   mmfuse-config 1
//   # gesture: p_correct p_wrong p_missed, then confusion weights for
//   # fist wave_in wave_out finger_spread double_tap (own slot must be 0)
//   emg.fist = 0.864 0.0952 0.0408 0 1 1 1 1
//   # command: p_correct, weights confusable/duplicated/extraneous, confusable text
//   speech.move_right = 0.9 0.5 0.25 0.25 "override"
//   alias = move_right "over ride"
//   warmup.cold_multiplier = 3
//   warmup.adapt_time_s = 120
//   fusion.window_ms = 2000
//   fusion.detection.double_tap = 0.74
//
// Lines not present keep their defaults. '#' starts a comment line.

#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mmfuse/core.hpp"
#include "mmfuse/emg.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/fusion.hpp"
#include "mmfuse/speech.hpp"

namespace mmfuse {

inline constexpr int kConfigVersion = 1;

/// Everything the simulators and harness need.
struct ModelSet {
    GestureOutcomeModel gestures = default_gesture_model();
    WarmupState warmup = WarmupState::warmed();
    RecognitionModel speech = default_recognition_model();
    /// Spellings beyond the generated defaults, (text, command).
    std::vector<std::pair<std::string, SpeechCommand>> aliases;
    TimeMs fallback_window_ms = kDefaultFallbackWindowMs;
    /// Detection probabilities fixed by the config, by operation index.
    std::array<std::optional<double>, 5> detection{};

    NormalizationMap normalization() const {
        NormalizationMap map = default_normalization_map(speech);
        for (const auto& [text, c] : aliases) map.add(text, c);
        return map;
    }

    void validate() const {
        gestures.validate();
        speech.validate();
        warmup_factor(warmup);
        if (fallback_window_ms <= 0) throw InvalidInput("fallback window must be positive");
        for (const auto& d : detection) {
            if (d && !(*d >= 0.0 && *d <= 1.0)) throw InvalidInput("detection probability out of [0,1]");
        }
        normalization();
    }
};

inline std::string config_key(Gesture g) {
    std::string k(name_of(g));
    for (char& c : k) {
        if (c == ' ') c = '_';
    }
    return k;
}

inline std::string config_key(SpeechCommand c) {
    std::string k(utterance_of(c));
    for (char& ch : k) {
        if (ch == ' ') ch = '_';
    }
    return k;
}

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline double parse_double(const std::string& tok, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0' || !std::isfinite(v)) throw ParseError(where + ": not a number: '" + tok + "'");
    return v;
}

/// Splits bare words and one optional trailing "quoted" string.
inline std::pair<std::vector<std::string>, std::optional<std::string>> split_values(const std::string& s,
                                                                                   const std::string& where) {
    std::vector<std::string> words;
    std::optional<std::string> quoted;
    std::size_t i = 0;
    while (i < s.size()) {
        if (std::isspace(static_cast<unsigned char>(s[i]))) {
            ++i;
            continue;
        }
        if (s[i] == '"') {
            const std::size_t close = s.find('"', i + 1);
            if (close == std::string::npos) throw ParseError(where + ": unterminated quote");
            if (trim(s.substr(close + 1)).size() != 0) throw ParseError(where + ": text after quoted value");
            quoted = s.substr(i + 1, close - i - 1);
            break;
        }
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        words.push_back(s.substr(i, j - i));
        i = j;
    }
    return {words, quoted};
}

} // namespace detail

inline ModelSet parse_config(std::istream& in) {
    ModelSet m;
    std::string line;
    int lineno = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = "config line " + std::to_string(lineno);
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (!seen_header) {
            std::istringstream hs(t);
            std::string magic;
            int version = 0;
            if (!(hs >> magic >> version) || magic != "mmfuse-config") {
                throw ParseError(where + ": expected 'mmfuse-config " + std::to_string(kConfigVersion) + "'");
            }
            if (version != kConfigVersion) throw ParseError(where + ": unsupported config version " + std::to_string(version));
            seen_header = true;
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
        const std::string key = detail::trim(t.substr(0, eq));
        const auto [words, quoted] = detail::split_values(t.substr(eq + 1), where);
        auto nums = [&, &words = words](std::size_t min_n, std::size_t max_n) {
            if (words.size() < min_n || words.size() > max_n) throw ParseError(where + ": wrong number of values");
            std::vector<double> v;
            for (const auto& w : words) v.push_back(detail::parse_double(w, where));
            return v;
        };

        if (key.rfind("emg.", 0) == 0) {
            const Gesture g = parse_gesture_name(key.substr(4));
            const auto v = nums(3, 8);
            if (v.size() != 3 && v.size() != 8) throw ParseError(where + ": expected 3 or 8 values");
            auto& p = m.gestures[g];
            p.p_correct = v[0];
            p.p_wrong = v[1];
            p.p_missed = v[2];
            if (v.size() == 8) std::copy(v.begin() + 3, v.end(), p.confusion.begin());
        } else if (key.rfind("speech.", 0) == 0) {
            const SpeechCommand c = parse_command_name(key.substr(7));
            const auto v = nums(1, 4);
            if (v.size() != 1 && v.size() != 4) throw ParseError(where + ": expected 1 or 4 values");
            auto& r = m.speech[c];
            r.p_correct = v[0];
            if (v.size() == 4) r.mode_weights = {v[1], v[2], v[3]};
            if (quoted) r.confusable = *quoted;
        } else if (key == "alias") {
            if (words.size() != 1 || !quoted) throw ParseError(where + ": expected alias = <command> \"text\"");
            m.aliases.emplace_back(*quoted, parse_command_name(words[0]));
        } else if (key == "warmup.cold_multiplier") {
            m.warmup.cold_multiplier = nums(1, 1)[0];
        } else if (key == "warmup.adapt_time_s") {
            m.warmup.adapt_time_s = nums(1, 1)[0];
        } else if (key == "warmup.elapsed_s") {
            m.warmup.elapsed_s = nums(1, 1)[0];
        } else if (key == "fusion.window_ms") {
            m.fallback_window_ms = static_cast<TimeMs>(nums(1, 1)[0]);
        } else if (key.rfind("fusion.detection.", 0) == 0) {
            const FusionOperation op = parse_operation(key.substr(17));
            m.detection[operation_index(op)] = nums(1, 1)[0];
        } else {
            throw ParseError(where + ": unknown key '" + key + "'");
        }
    }
    if (!seen_header) throw ParseError("config is empty or lacks the 'mmfuse-config' header");
    try {
        m.validate();
    } catch (const InvalidInput& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return m;
}

inline ModelSet load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    return parse_config(in);
}

/// Explicit path, else MMFUSE_CONFIG, else built-in defaults.
inline ModelSet load_models(const std::optional<std::string>& path) {
    if (path && !path->empty()) return load_config_file(*path);
    if (const char* env = std::getenv("MMFUSE_CONFIG"); env && *env) return load_config_file(env);
    return ModelSet{};
}

/// Writes m in the format parse_config reads back.
inline void write_config(std::ostream& os, const ModelSet& m) {
    os << "mmfuse-config " << kConfigVersion << "\n";
    os << "# emg.<gesture> = p_correct p_wrong p_missed w_fist w_wave_in w_wave_out w_finger_spread w_double_tap\n";
    for (Gesture g : kGestures) {
        const auto& p = m.gestures[g];
        os << fmt::format("emg.{} = {} {} {}", config_key(g), p.p_correct, p.p_wrong, p.p_missed);
        for (double w : p.confusion) os << fmt::format(" {}", w);
        os << "\n";
    }
    os << "# speech.<command> = p_correct w_confusable w_duplicated w_extraneous \"confusable\"\n";
    for (SpeechCommand c : kCommands) {
        const auto& r = m.speech[c];
        os << fmt::format("speech.{} = {} {} {} {} \"{}\"\n", config_key(c), r.p_correct, r.mode_weights[0],
                          r.mode_weights[1], r.mode_weights[2], r.confusable);
    }
    for (const auto& [text, c] : m.aliases) os << fmt::format("alias = {} \"{}\"\n", config_key(c), text);
    os << fmt::format("warmup.cold_multiplier = {}\n", m.warmup.cold_multiplier);
    os << fmt::format("warmup.adapt_time_s = {}\n", m.warmup.adapt_time_s);
    os << fmt::format("warmup.elapsed_s = {}\n", m.warmup.elapsed_s);
    os << fmt::format("fusion.window_ms = {}\n", m.fallback_window_ms);
    for (std::size_t i = 0; i < m.detection.size(); ++i) {
        if (m.detection[i]) {
            os << fmt::format("fusion.detection.{} = {}\n", config_key(kFusionOperations[i].gesture), *m.detection[i]);
        }
    }
}

} // namespace mmfuse
