#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tmeval/corpus.hpp"

namespace tmeval {

inline constexpr std::size_t kNpmiWindow = 10;
inline constexpr std::size_t kCvWindow = 110;
inline constexpr double kJointEpsilon = 1e-12;

/// Window and joint-window counts over a reference corpus.
///
/// Sliding mode (`boolean_sliding() == true`) moves a window of
/// `window_size` tokens one token at a time; a document shorter than the
/// window is a single window. Segment mode cuts each document into
/// consecutive non-overlapping windows. Either way a word or pair is
/// counted at most once per window, so every count is <= n_windows.
class CooccurrenceTable {
public:
    std::size_t window_size() const noexcept { return window_size_; }
    bool boolean_sliding() const noexcept { return boolean_sliding_; }
    std::uint64_t n_windows() const noexcept { return n_windows_; }
    /// True when the table only tracks a fixed set of target words.
    bool restricted() const noexcept { return restricted_; }

    bool contains(std::string_view word) const;
    std::uint64_t count(std::string_view word) const;
    std::uint64_t count(std::string_view a, std::string_view b) const;

    /// Every tracked word with its window count, sorted by word.
    std::vector<std::pair<std::string, std::uint64_t>> word_counts() const;

    bool operator==(const CooccurrenceTable&) const = default;

private:
    friend CooccurrenceTable build_table(const Corpus&, std::size_t, bool, const std::vector<std::string>&);
    friend std::optional<CooccurrenceTable> load_table(const std::filesystem::path&, const std::string&);
    friend void save_table(const CooccurrenceTable&, const std::string&, const std::filesystem::path&);

    static std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | b;
    }
    std::optional<std::uint32_t> id(std::string_view word) const;

    std::size_t window_size_ = 0;
    bool boolean_sliding_ = true;
    bool restricted_ = false;
    std::uint64_t n_windows_ = 0;
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::uint64_t> word_count_;
    std::unordered_map<std::uint64_t, std::uint64_t> pair_count_;
};

/// Counts windows over the tokens of `reference`. When `targets` is non-empty
/// only those words (and pairs among them) are tracked. Throws
/// InvalidArgument for window_size 0 or a reference without tokens.
CooccurrenceTable build_table(const Corpus& reference, std::size_t window_size, bool boolean_sliding,
                              const std::vector<std::string>& targets = {});

/// Identifies a table: reference token stream, window, mode and targets.
std::string table_cache_key(const Corpus& reference, std::size_t window_size, bool boolean_sliding,
                            const std::vector<std::string>& targets);

void save_table(const CooccurrenceTable& table, const std::string& key, const std::filesystem::path& path);
/// nullopt when the file is missing or was written under a different key.
std::optional<CooccurrenceTable> load_table(const std::filesystem::path& path, const std::string& key);

/// build_table backed by a cache file.
CooccurrenceTable build_table_cached(const Corpus& reference, std::size_t window_size, bool boolean_sliding,
                                     const std::vector<std::string>& targets,
                                     const std::filesystem::path& cache_file);

/// Words that had to be scored without reference evidence.
struct CoherenceDiagnostics {
    std::set<std::string> unseen_words;
    std::size_t unseen_pairs = 0;
    std::size_t zero_vectors = 0;
};

/// log(p12 / (p1 p2)) / -log(p12), with p12 smoothed by kJointEpsilon and
/// the result clamped to [-1, 1]. A pair where either word is unseen scores -1.
double npmi_pair(const CooccurrenceTable& table, std::string_view w1, std::string_view w2,
                 CoherenceDiagnostics* diagnostics = nullptr);

/// Mean NPMI over all unordered pairs. Needs at least two words.
double npmi_topic(const CooccurrenceTable& table, const std::vector<std::string>& words,
                  CoherenceDiagnostics* diagnostics = nullptr);

/// C_v: mean cosine between each word's NPMI context vector and the sum of
/// all context vectors. Requires a boolean sliding table.
double cv_topic(const CooccurrenceTable& table, const std::vector<std::string>& words, double gamma = 1.0,
                CoherenceDiagnostics* diagnostics = nullptr);

}  // namespace tmeval
