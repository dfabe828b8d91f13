#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "tmeval/corpus.hpp"
#include "tmeval/lda.hpp"
#include "tmeval/random.hpp"

namespace tmeval {

enum class JudgeTask { rating, intrusion, doc_label };

std::string_view to_string(JudgeTask task);
JudgeTask parse_judge_task(std::string_view text);

// ---------------------------------------------------------------------------
// Prompt templates

/// System and user text with `{name}` placeholders plus the optional
/// bindings that fill them. Rendering fails on any placeholder left unbound.
struct PromptTemplate {
    std::string id;
    JudgeTask task = JudgeTask::rating;
    std::string system_text;
    std::string user_text;
    std::optional<std::string> dataset_description;
    std::optional<Granularity> granularity;
    std::optional<std::vector<std::string>> example_labels;

    /// Bindings derived from the optional fields.
    std::map<std::string, std::string> bindings() const;
};

struct RenderedPrompt {
    std::string template_id;
    JudgeTask task = JudgeTask::rating;
    std::string system;
    std::string user;

    bool operator==(const RenderedPrompt&) const = default;
};

/// Replaces every `{name}`; throws InvalidArgument naming the first
/// placeholder without a binding. `{{` and `}}` are literal braces.
std::string render_text(std::string_view text, const std::map<std::string, std::string>& bindings);

/// Ids: rating, rating-minimal, intrusion, intrusion-minimal, rating-k, doc-label.
PromptTemplate builtin_template(std::string_view id);
std::vector<std::string> builtin_template_ids();

/// Crowd-task description shown for the annotated datasets; empty for `other`.
std::string dataset_description(Dataset dataset);

/// Text file layout: `key: value` header lines (id, task), then `[system]`
/// and `[user]` sections. Lines starting with `#` before `[system]` are comments.
PromptTemplate load_template(const std::filesystem::path& path);
std::string format_template_file(const PromptTemplate& tmpl);

/// `"a", "b", "c", "d" and "e"`
std::string format_example_labels(const std::vector<std::string>& labels);

/// Shuffles `words` (exactly 10) into the user text of a rating template.
RenderedPrompt build_rating_prompt(const std::vector<std::string>& words, const PromptTemplate& tmpl, Rng& rng);

struct IntrusionInstance {
    std::size_t topic = 0;
    std::vector<std::string> shown_words;
    std::string intruder;
    std::size_t source_topic = 0;

    bool operator==(const IntrusionInstance&) const = default;
};

inline constexpr std::size_t kIntrusionTopWords = 10;
inline constexpr std::size_t kIntrusionExclusionDepth = 50;

/// Five words sampled from the top 10 of `topic`, plus an intruder from the
/// top 10 of another topic that is absent from the first `exclusion_depth`
/// words of `topic`; the six are shuffled. `ranked_words[k]` lists topic
/// k's words by decreasing probability. Throws InvalidArgument naming the
/// topic when no intruder is eligible.
IntrusionInstance build_intrusion_instance(const std::vector<std::vector<std::string>>& ranked_words,
                                           std::size_t topic, Rng& rng,
                                           std::size_t exclusion_depth = kIntrusionExclusionDepth);

IntrusionInstance build_intrusion_instance(const TopicModel& model, const Vocabulary& vocab, std::size_t topic,
                                           Rng& rng);

RenderedPrompt build_intrusion_prompt(const IntrusionInstance& instance, const PromptTemplate& tmpl);

RenderedPrompt build_label_prompt(std::string_view document_text, const PromptTemplate& tmpl);

// ---------------------------------------------------------------------------
// Response parsing. Every parser returns nullopt for an unparseable reply.

/// First numeric token; accepted only when it is an integer in {1, 2, 3}.
std::optional<int> parse_rating(std::string_view raw);

struct IntrusionVerdict {
    std::string picked;
    bool correct = false;
    bool operator==(const IntrusionVerdict&) const = default;
};

/// The shown word occurring earliest in the reply (case-insensitive,
/// punctuation ignored).
std::optional<IntrusionVerdict> parse_intrusion(std::string_view raw, const IntrusionInstance& instance);

/// Lowercased, punctuation removed, whitespace collapsed.
std::optional<std::string> parse_label(std::string_view raw);

/// Lowercase word tokens of `text` with punctuation treated as separators.
std::vector<std::string> normalize_tokens(std::string_view text);

using Verdict = std::variant<int, IntrusionVerdict, std::string>;

// ---------------------------------------------------------------------------
// Clients

struct QueryOptions {
    std::string model_id = "gpt-3.5-turbo";
    double temperature = 1.0;
};

class JudgeClient {
public:
    virtual ~JudgeClient() = default;
    /// Returns the raw completion. Throws TransportError on network failure.
    virtual std::string complete(const RenderedPrompt& prompt, const QueryOptions& options) = 0;
};

/// Offline judge answering from ground truth: ratings from a scoring
/// function, the known intruder for intrusion prompts, the true label for
/// documents.
class OracleJudge : public JudgeClient {
public:
    using RateFn = std::function<int(const std::vector<std::string>& words)>;
    using PickFn = std::function<std::optional<std::string>(const std::vector<std::string>& shown)>;
    using LabelFn = std::function<std::optional<std::string>(const std::string& document)>;

    /// Picks the first shown word found in `intruders`.
    OracleJudge(RateFn rate, std::unordered_set<std::string> intruders, LabelFn label);
    OracleJudge(RateFn rate, PickFn pick, LabelFn label);

    std::string complete(const RenderedPrompt& prompt, const QueryOptions& options) override;

private:
    RateFn rate_;
    PickFn pick_;
    LabelFn label_;
};

/// Splits a rendered comma-separated word list back into words.
std::vector<std::string> split_word_list(std::string_view user_text);

/// OpenAI-compatible chat-completions endpoint.
class ChatCompletionsClient : public JudgeClient {
public:
    struct Options {
        std::string base_url = "https://api.openai.com";
        std::string path = "/v1/chat/completions";
        std::string api_key;
        std::chrono::seconds timeout{60};
    };

    explicit ChatCompletionsClient(Options options);

    /// Reads the key from `env_var`; throws InvalidArgument when unset.
    static std::unique_ptr<ChatCompletionsClient> from_environment(const std::string& env_var = "OPENAI_API_KEY",
                                                                   const std::string& base_url = {});

    std::string complete(const RenderedPrompt& prompt, const QueryOptions& options) override;

private:
    Options options_;
};

// ---------------------------------------------------------------------------
// Cache and query engine

enum class JudgeMode { live, replay, record };

std::string_view to_string(JudgeMode mode);
JudgeMode parse_judge_mode(std::string_view text);

struct JudgeRecord {
    std::string cache_key;
    std::string template_id;
    JudgeTask task = JudgeTask::rating;
    std::string model_id;
    double temperature = 1.0;
    std::size_t repetition = 0;
    std::string system_prompt;
    std::string user_prompt;
    std::string raw_response;
    std::optional<Verdict> parsed;
    std::string timestamp;
};

std::string cache_key(const RenderedPrompt& prompt, const QueryOptions& options, std::size_t repetition);

/// Content-addressed record store: `records/<key[0:2]>/<key>.json` plus an
/// append-only `index.jsonl` and a versioned `manifest.json`. Reads may run
/// concurrently; writes are serialized.
class ResponseCache {
public:
    static constexpr int kVersion = 1;

    /// Creates the layout when `create` is set, otherwise the directory must exist.
    explicit ResponseCache(std::filesystem::path root, bool create = true);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::optional<JudgeRecord> find(const std::string& key) const;
    void store(const JudgeRecord& record);
    /// Keys listed in the index, in insertion order.
    std::vector<std::string> keys() const;

private:
    std::filesystem::path record_path(const std::string& key) const;

    std::filesystem::path root_;
    mutable std::shared_mutex mutex_;
};

struct RetryPolicy {
    int max_attempts = 5;
    long initial_backoff_ms = 500;
    double multiplier = 2.0;
    long max_backoff_ms = 30000;
};

struct JudgeConfig {
    JudgeMode mode = JudgeMode::replay;
    QueryOptions query;
    std::filesystem::path cache_dir;
    std::size_t concurrency = 4;
    /// Minimum spacing between live request starts.
    std::chrono::milliseconds min_interval{0};
    RetryPolicy retry;
    std::size_t rating_repetitions = 1;
    std::size_t intrusion_repetitions = 8;
};

struct JudgeStats {
    std::size_t queries = 0;
    std::size_t cache_hits = 0;
    std::size_t client_calls = 0;
    std::size_t parsed = 0;
    std::size_t unparseable = 0;
    std::map<std::string, std::size_t> unparseable_by_task;

    double cache_hit_rate() const { return queries ? static_cast<double>(cache_hits) / queries : 0.0; }
};

struct QueryRequest {
    RenderedPrompt prompt;
    std::size_t repetition = 0;
    /// Needed to parse intrusion replies.
    std::optional<IntrusionInstance> instance;
};

/// Drives a client through the cache according to the mode:
/// replay serves only recorded responses, record fills the cache on misses,
/// live always calls the client and stores nothing.
class Judge {
public:
    /// `client` may be null in replay mode.
    Judge(JudgeConfig config, std::shared_ptr<JudgeClient> client);

    const JudgeConfig& config() const noexcept { return config_; }

    JudgeRecord query(const RenderedPrompt& prompt, std::size_t repetition = 0,
                      const IntrusionInstance* instance = nullptr);

    /// Runs requests through a pool of `config.concurrency` workers; results
    /// keep request order.
    std::vector<JudgeRecord> query_batch(const std::vector<QueryRequest>& requests);

    JudgeStats stats() const;

private:
    std::string call_with_retry(const RenderedPrompt& prompt);
    void wait_for_slot();
    void count_verdict(const JudgeRecord& record);

    JudgeConfig config_;
    std::shared_ptr<JudgeClient> client_;
    std::unique_ptr<ResponseCache> cache_;
    mutable std::mutex stats_mutex_;
    JudgeStats stats_;
    std::mutex rate_mutex_;
    std::chrono::steady_clock::time_point next_slot_{};
};

/// Parses `raw` for the given task (intrusion needs the instance).
std::optional<Verdict> parse_verdict(JudgeTask task, std::string_view raw, const IntrusionInstance* instance);

}  // namespace tmeval
