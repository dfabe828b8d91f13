#include <cctype>

#include "tmeval/judge.hpp"

namespace tmeval {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

char lower(unsigned char c) { return static_cast<char>(std::tolower(c)); }

}  // namespace

std::vector<std::string> normalize_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (unsigned char c : text) {
        if (is_word_char(c)) {
            current.push_back(lower(c));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::optional<int> parse_rating(std::string_view raw) {
    const std::size_t n = raw.size();
    auto digit = [&](std::size_t i) { return i < n && std::isdigit(static_cast<unsigned char>(raw[i])); };
    auto alpha = [&](std::size_t i) { return i < n && std::isalpha(static_cast<unsigned char>(raw[i])); };
    std::size_t i = 0;
    while (i < n) {
        if (!digit(i)) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (digit(i)) ++i;
        // Digits glued to letters ("gpt4", "3rd") are not numbers.
        if ((start > 0 && alpha(start - 1)) || alpha(i)) continue;
        const bool negative = start > 0 && raw[start - 1] == '-' && !(start > 1 && digit(start - 2));
        const bool fractional = i + 1 < n && (raw[i] == '.' || raw[i] == ',') && digit(i + 1);
        if (negative || fractional || i - start != 1) return std::nullopt;
        const int value = raw[start] - '0';
        if (value < 1 || value > 3) return std::nullopt;
        return value;
    }
    return std::nullopt;
}

std::optional<IntrusionVerdict> parse_intrusion(std::string_view raw, const IntrusionInstance& instance) {
    const auto tokens = normalize_tokens(raw);
    std::vector<std::vector<std::string>> shown;
    shown.reserve(instance.shown_words.size());
    for (const auto& w : instance.shown_words) shown.push_back(normalize_tokens(w));

    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
        // Longest match first so "new york" beats "new" at the same position.
        std::size_t best = shown.size();
        for (std::size_t s = 0; s < shown.size(); ++s) {
            const auto& seq = shown[s];
            if (seq.empty() || pos + seq.size() > tokens.size()) continue;
            bool match = true;
            for (std::size_t t = 0; t < seq.size() && match; ++t) match = tokens[pos + t] == seq[t];
            if (match && (best == shown.size() || seq.size() > shown[best].size())) best = s;
        }
        if (best != shown.size()) {
            const auto& picked = instance.shown_words[best];
            return IntrusionVerdict{picked, picked == instance.intruder};
        }
    }
    return std::nullopt;
}

std::optional<std::string> parse_label(std::string_view raw) {
    std::string cleaned;
    for (unsigned char c : raw) {
        if (c == '\'') continue;
        if (is_word_char(c)) {
            cleaned.push_back(lower(c));
        } else {
            cleaned.push_back(' ');
        }
    }
    std::string out;
    for (const auto& token : normalize_tokens(cleaned)) {
        if (!out.empty()) out.push_back(' ');
        out += token;
    }
    if (out.empty()) return std::nullopt;
    return out;
}

std::optional<Verdict> parse_verdict(JudgeTask task, std::string_view raw, const IntrusionInstance* instance) {
    switch (task) {
        case JudgeTask::rating:
            if (auto r = parse_rating(raw)) return Verdict{*r};
            return std::nullopt;
        case JudgeTask::intrusion:
            if (!instance) return std::nullopt;
            if (auto v = parse_intrusion(raw, *instance)) return Verdict{*v};
            return std::nullopt;
        case JudgeTask::doc_label:
            if (auto l = parse_label(raw)) return Verdict{*l};
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace tmeval
