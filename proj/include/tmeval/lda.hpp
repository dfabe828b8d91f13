#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tmeval/corpus.hpp"
#include "tmeval/random.hpp"

namespace tmeval {

struct LdaConfig {
    std::size_t num_topics = 20;
    double alpha = 2.5;  ///< symmetric document-topic prior
    double beta = 0.01;  ///< symmetric topic-word prior
    std::size_t iterations = 1000;
    std::uint64_t seed = 1;

    /// alpha = 50/K, beta = 0.01, 1000 sweeps.
    static LdaConfig with_defaults(std::size_t num_topics, std::uint64_t seed = 1);

    /// Throws InvalidArgument unless K >= 1, alpha > 0, beta > 0, iterations >= 1.
    void validate() const;

    bool operator==(const LdaConfig&) const = default;
};

/// Collapsed-Gibbs state for one K. Immutable once training returns.
class TopicModel {
public:
    const LdaConfig& config() const noexcept { return config_; }
    std::size_t num_topics() const noexcept { return config_.num_topics; }
    std::size_t vocab_size() const noexcept { return vocab_size_; }
    std::size_t num_documents() const noexcept { return words_.size(); }
    const std::string& vocab_fingerprint() const noexcept { return vocab_fingerprint_; }

    const std::vector<std::vector<int>>& words() const noexcept { return words_; }
    const std::vector<std::vector<int>>& assignments() const noexcept { return z_; }

    int doc_topic_count(std::size_t d, std::size_t k) const { return n_dk_[d * num_topics() + k]; }
    int topic_word_count(std::size_t k, std::size_t w) const { return n_kw_[k * vocab_size_ + w]; }
    int topic_count(std::size_t k) const { return n_k_[k]; }

    /// (n_kw + beta) / (n_k + V beta)
    double phi(std::size_t k, std::size_t w) const;
    /// (n_dk + alpha) / (len(d) + K alpha)
    double theta(std::size_t d, std::size_t k) const;
    std::vector<double> phi_row(std::size_t k) const;
    std::vector<double> theta_row(std::size_t d) const;
    /// theta[.][k] for every document.
    std::vector<double> theta_column(std::size_t k) const;

    /// Recomputes every count table from z and compares with the stored ones.
    bool counts_consistent() const;

    bool operator==(const TopicModel&) const = default;

private:
    friend class GibbsSampler;
    friend TopicModel load_model(const std::filesystem::path&);

    void rebuild_counts();

    LdaConfig config_;
    std::size_t vocab_size_ = 0;
    std::string vocab_fingerprint_;
    std::vector<std::vector<int>> words_;
    std::vector<std::vector<int>> z_;
    std::vector<int> n_dk_;
    std::vector<int> n_kw_;
    std::vector<int> n_k_;
};

/// Sequential collapsed Gibbs chain. Exposes single sweeps so callers can
/// inspect the state between them.
class GibbsSampler {
public:
    /// Randomly initializes z. Throws InvalidArgument on an empty corpus,
    /// an out-of-range word id, or K larger than the token count.
    GibbsSampler(std::vector<std::vector<int>> docs, std::size_t vocab_size, const LdaConfig& config,
                 std::string vocab_fingerprint = {});

    void sweep();
    std::size_t completed_sweeps() const noexcept { return sweeps_; }
    const TopicModel& model() const noexcept { return model_; }
    TopicModel release() && { return std::move(model_); }

private:
    TopicModel model_;
    Rng rng_;
    std::vector<double> cumulative_;
    std::size_t sweeps_ = 0;
};

/// Runs `config.iterations` sweeps. `on_sweep`, when set, is called after each.
TopicModel train(std::vector<std::vector<int>> docs, std::size_t vocab_size, const LdaConfig& config,
                 const std::function<void(const GibbsSampler&)>& on_sweep = {});

TopicModel train(const Corpus& corpus, const Vocabulary& vocab, const LdaConfig& config);

/// Indices of the `n` largest scores, descending, ties by ascending index.
std::vector<std::size_t> top_indices(std::span<const double> scores, std::size_t n);

/// Word ids of the n most probable words of `topic` (T_ws).
std::vector<std::size_t> top_words(const TopicModel& model, std::size_t topic, std::size_t n);
std::vector<std::string> top_words(const TopicModel& model, const Vocabulary& vocab, std::size_t topic,
                                   std::size_t n);

/// Document indices with the highest theta[.][topic] (T_dc).
std::vector<std::size_t> top_documents(const TopicModel& model, std::size_t topic, std::size_t n);

/// Most probable topic per document, ties to the lowest topic index.
std::vector<int> induced_assignment(const TopicModel& model);

/// Snapshot: jsonl with a header line, one line per document (word ids and
/// assignments) and one line per topic with its sparse word counts.
void save_model(const TopicModel& model, const std::filesystem::path& path);
TopicModel load_model(const std::filesystem::path& path);

}  // namespace tmeval
