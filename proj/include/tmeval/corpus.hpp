#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace tmeval {

enum class Granularity { broad, narrow };

std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view text);

struct Document {
    std::string id;
    std::string text;
    std::vector<std::string> tokens;
    std::optional<std::string> broad_label;
    std::optional<std::string> specific_label;

    /// Label at the requested granularity ("narrow" reads specific_label).
    const std::optional<std::string>& label(Granularity g) const {
        return g == Granularity::broad ? broad_label : specific_label;
    }

    bool operator==(const Document&) const = default;
};

class Corpus {
public:
    Corpus() = default;

    /// Throws InvalidArgument on duplicate document ids.
    explicit Corpus(std::vector<Document> documents);

    const std::vector<Document>& documents() const noexcept { return documents_; }
    std::size_t size() const noexcept { return documents_.size(); }
    bool empty() const noexcept { return documents_.empty(); }
    const Document& operator[](std::size_t i) const { return documents_[i]; }

    std::optional<std::size_t> find(std::string_view id) const;

    /// Ground-truth labels for every document. Throws InvalidArgument naming
    /// the first document that lacks one.
    std::vector<std::string> labels(Granularity g) const;

    /// The `n` most frequent ground-truth labels, ties broken alphabetically.
    std::vector<std::string> most_prevalent_labels(Granularity g, std::size_t n) const;

    std::size_t total_tokens() const noexcept;

    bool operator==(const Corpus&) const = default;

private:
    std::vector<Document> documents_;
};

enum class CorpusFormat { jsonl, csv, plain_dir };

CorpusFormat parse_corpus_format(std::string_view text);

/// jsonl: one object per line {id, text, broad_label?, specific_label?, tokens?}.
/// csv: header row naming at least `id` and `text`; RFC 4180 quoting.
/// plain_dir: every regular file is one document, id = file name; sorted by id.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

/// Writes the jsonl layout, including tokens, so a reload is lossless.
void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);

class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> entries, std::vector<std::size_t> doc_freq);

    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<std::string>& entries() const noexcept { return entries_; }
    const std::string& word(std::size_t id) const { return entries_.at(id); }
    std::optional<std::size_t> id(std::string_view word) const;
    std::size_t doc_freq(std::size_t id) const { return doc_freq_.at(id); }
    std::size_t doc_freq(std::string_view word) const;

    /// SHA-256 over the ordered entries; identifies the id assignment.
    std::string fingerprint() const;

private:
    std::vector<std::string> entries_;
    std::vector<std::size_t> doc_freq_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct PreprocessConfig {
    bool lowercase = true;
    std::unordered_set<std::string> stopwords;
    std::size_t min_df = 5;
    std::size_t min_token_length = 3;

    /// lowercase on, English stopwords, min_df 5, min length 3.
    static PreprocessConfig defaults();
};

const std::unordered_set<std::string>& english_stopwords();

/// Splits raw text into candidate tokens: maximal runs of letters, digits,
/// apostrophes and underscores (bytes >= 0x80 count as letters).
std::vector<std::string> split_words(std::string_view text);

struct Preprocessed {
    Corpus corpus;
    Vocabulary vocabulary;
};

/// Vocabulary ids follow first occurrence in corpus order. Throws
/// InvalidArgument when nothing survives pruning.
Preprocessed tokenize_and_prune(const Corpus& corpus, const PreprocessConfig& config);

/// Document tokens mapped through `vocab`; tokens not in the vocabulary are skipped.
std::vector<std::vector<int>> to_word_ids(const Corpus& corpus, const Vocabulary& vocab);

/// The first `n_words` whitespace-delimited words of `text`, joined by single spaces.
std::string truncate_words(std::string_view text, std::size_t n_words = 50);

inline std::string truncate_document(const Document& doc, std::size_t n_words = 50) {
    return truncate_words(doc.text, n_words);
}

// ---------------------------------------------------------------------------
// Externally annotated topics.

enum class Dataset { nyt, wiki, other };

std::string_view to_string(Dataset d);
Dataset parse_dataset(std::string_view text);

struct Rating {
    std::string annotator_id;
    int score = 0;
    bool confident = true;
    bool operator==(const Rating&) const = default;
};

struct IntrusionTrial {
    std::vector<std::string> shown_words;
    std::string intruder;
    std::string annotator_pick;
    bool confident = true;

    bool correct() const { return annotator_pick == intruder; }
    bool operator==(const IntrusionTrial&) const = default;
};

struct AnnotatedTopicSet {
    std::string topic_id;
    std::vector<std::string> topic_words;
    Dataset dataset = Dataset::other;
    std::vector<Rating> ratings;
    std::vector<IntrusionTrial> intrusion_trials;

    std::vector<double> rating_scores() const;
    /// 1.0 for each trial where the annotator found the intruder, else 0.0.
    std::vector<double> intrusion_outcomes() const;

    bool operator==(const AnnotatedTopicSet&) const = default;
};

inline constexpr std::size_t kAnnotatedTopicWords = 10;
inline constexpr std::size_t kIntrusionShownWords = 6;

/// Reads the normalized annotation schema: jsonl (one topic per line) or a
/// single JSON array. Validates scores, shown-word counts and intruders.
std::vector<AnnotatedTopicSet> load_annotated_topics(const std::filesystem::path& path);

void save_annotated_topics(const std::vector<AnnotatedTopicSet>& topics,
                           const std::filesystem::path& path);

/// Copy keeping only confident ratings and trials.
std::vector<AnnotatedTopicSet> confident_only(const std::vector<AnnotatedTopicSet>& topics);

}  // namespace tmeval
