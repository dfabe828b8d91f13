#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tmeval/coherence.hpp"
#include "tmeval/corpus.hpp"
#include "tmeval/judge.hpp"
#include "tmeval/lda.hpp"
#include "tmeval/metrics.hpp"

namespace tmeval {

// ---------------------------------------------------------------------------
// Number-of-topics sweep

struct SweepSeeds {
    std::uint64_t lda = 1;
    std::uint64_t sampling = 2;
    std::uint64_t prompts = 3;
};

struct SweepPlan {
    std::vector<std::size_t> k_values = default_k_grid();
    std::size_t topics_sampled_per_k = 5;
    std::size_t docs_per_topic = 10;
    std::size_t words_per_topic = 10;
    Granularity granularity = Granularity::broad;
    std::size_t truncate_words = 50;
    std::size_t smoothing_window = 3;
    std::size_t rating_repetitions = 1;

    std::size_t lda_iterations = 1000;
    /// Unset: 50 / K.
    std::optional<double> alpha;
    double beta = 0.01;

    /// Noun phrase completing "The topic modeling is based on ...".
    std::string corpus_description = "a document collection";
    /// Empty: the five most prevalent ground-truth labels.
    std::vector<std::string> example_labels;

    SweepSeeds seeds;
    /// K configurations trained and judged concurrently.
    std::size_t workers = 1;

    /// 20, 40, ..., 400.
    static std::vector<std::size_t> default_k_grid();
    void validate() const;
    LdaConfig lda_config(std::size_t k) const;
};

struct SweepRow {
    std::size_t k = 0;
    double mean_rating = 0.0;
    double mean_purity = 0.0;
    std::optional<double> ari;
    std::optional<double> ami;
    std::optional<double> homogeneity;
    std::optional<double> completeness;
    /// ARI restricted to the union of the sampled top documents.
    std::optional<double> top_doc_ari;
    double smoothed_rating = 0.0;
    double smoothed_purity = 0.0;
    std::vector<std::size_t> sampled_topics;
    std::size_t label_queries = 0;
    std::size_t unparseable_ratings = 0;
    std::size_t unparseable_labels = 0;

    bool operator==(const SweepRow&) const = default;
};

struct SweepDiagnostics {
    std::size_t queries = 0;
    std::size_t cache_hits = 0;
    std::size_t unparseable_ratings = 0;
    std::size_t unparseable_labels = 0;
    std::size_t label_inventory_size = 0;

    double cache_hit_rate() const { return queries ? static_cast<double>(cache_hits) / queries : 0.0; }
    bool operator==(const SweepDiagnostics&) const = default;
};

struct SweepReport {
    Granularity granularity = Granularity::broad;
    std::size_t smoothing_window = 3;
    std::vector<SweepRow> rows;
    long long selected_k_rating = 0;
    long long selected_k_purity = 0;
    std::optional<long long> selected_k_ari;
    SweepDiagnostics diagnostics;

    bool has_truth() const { return !rows.empty() && rows.front().ari.has_value(); }
    ScoreSeries rating_series() const;
    ScoreSeries purity_series() const;
    /// Throws InvalidArgument when the sweep ran without ground truth.
    ScoreSeries ari_series() const;
    ScoreSeries top_doc_ari_series() const;

    bool operator==(const SweepReport&) const = default;
};

/// Supplies the trained model for one K; defaults to training with
/// plan.lda_config(K).
using ModelSource = std::function<TopicModel(std::size_t k)>;

/// For each K: train, sample topics, rate their word sets, label their
/// top documents, and score induced assignments against ground truth when
/// the corpus carries labels at the plan's granularity.
SweepReport run_k_sweep(const Corpus& corpus, const Vocabulary& vocab, const SweepPlan& plan, Judge& judge,
                        const ModelSource& models = {});

/// Recomputes smoothed columns and selected K values from the raw rows.
void finalize_sweep(SweepReport& report);

struct LabelAgreement {
    double ari = 0.0;
    double ami = 0.0;
};

/// Both maps go from document id to label and must cover the same documents.
LabelAgreement evaluate_label_assignment(const std::map<std::string, std::string>& llm_labels,
                                         const std::map<std::string, std::string>& truth);

/// Spearman between the top-document ARI and the full ARI across K.
double top10_ari_proxy_check(const SweepReport& report);
double top10_ari_proxy_check(const ScoreSeries& restricted, const ScoreSeries& full);

// ---------------------------------------------------------------------------
// Coherence study against human annotations

struct CoherenceStudyOptions {
    std::size_t episodes = 1000;
    std::uint64_t seed = 0;
    std::uint64_t prompt_seed = 0;
    bool confident_only = true;
    bool minimal_prompt = false;
    std::size_t rating_repetitions = 1;
    std::size_t intrusion_repetitions = 8;
    std::size_t threads = 1;
};

struct BaselineTables {
    const CooccurrenceTable* npmi = nullptr;
    const CooccurrenceTable* cv = nullptr;
};

struct CorrelationRow {
    JudgeTask task = JudgeTask::rating;
    std::string dataset;  ///< NYT, Wiki or Both
    std::size_t topics = 0;
    std::optional<BootstrapResult> npmi;
    std::optional<BootstrapResult> cv;
    /// Empty when the judge's scores are constant across topics.
    std::optional<BootstrapResult> llm;
    std::optional<BootstrapResult> ceiling;
    std::optional<double> llm_accuracy;
    std::optional<double> human_accuracy;

    bool operator==(const CorrelationRow&) const = default;
};

struct CorrelationReport {
    std::vector<CorrelationRow> rows;
    std::size_t queries = 0;
    std::size_t unparseable = 0;
    /// Topics left out of a slice for lack of annotations or parseable replies.
    std::size_t excluded_topics = 0;

    bool operator==(const CorrelationReport&) const = default;
};

/// Rating and intrusion tasks per dataset slice: bootstrap correlation of
/// LLM, NPMI and C_v scores with mean human scores, plus the human ceiling.
CorrelationReport run_coherence_study(const std::vector<AnnotatedTopicSet>& topics, Judge& judge,
                                      const BaselineTables& baselines, const CoherenceStudyOptions& options);

// ---------------------------------------------------------------------------
// Reports

std::string sweep_csv(const SweepReport& report);
std::string sweep_json(const SweepReport& report);
SweepReport sweep_report_from_json(const std::string& text);
/// Min-max normalized rating, purity and (when present) ARI curves.
std::string sweep_svg(const SweepReport& report, const std::string& title = {});

std::string correlation_csv(const CorrelationReport& report);
std::string correlation_json(const CorrelationReport& report);
CorrelationReport correlation_report_from_json(const std::string& text);

struct ReportFormats {
    bool svg = false;
};

/// Writes <stem>.csv and <stem>.json (and <stem>.svg) under `dir`. Returns the paths.
std::vector<std::filesystem::path> emit_report(const SweepReport& report, const std::filesystem::path& dir,
                                               const std::string& stem, ReportFormats formats = {});
std::vector<std::filesystem::path> emit_report(const CorrelationReport& report, const std::filesystem::path& dir,
                                               const std::string& stem);

}  // namespace tmeval
