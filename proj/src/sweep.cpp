#include "tmeval/sweep.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <thread>

#include "tmeval/error.hpp"
#include "tmeval/random.hpp"

namespace tmeval {

std::vector<std::size_t> SweepPlan::default_k_grid() {
    std::vector<std::size_t> grid;
    for (std::size_t k = 20; k <= 400; k += 20) grid.push_back(k);
    return grid;
}

void SweepPlan::validate() const {
    if (k_values.empty()) throw InvalidArgument("sweep: empty K grid");
    for (std::size_t i = 0; i < k_values.size(); ++i) {
        if (k_values[i] < 1) throw InvalidArgument("sweep: every K must be >= 1");
        if (i && k_values[i] <= k_values[i - 1]) throw InvalidArgument("sweep: K grid must be strictly increasing");
    }
    if (topics_sampled_per_k < 1) throw InvalidArgument("sweep: topics_sampled_per_k must be >= 1");
    if (docs_per_topic < 1) throw InvalidArgument("sweep: docs_per_topic must be >= 1");
    if (rating_repetitions < 1) throw InvalidArgument("sweep: rating_repetitions must be >= 1");
    if (smoothing_window == 0 || smoothing_window % 2 == 0) throw InvalidArgument("sweep: smoothing window must be odd");
}

LdaConfig SweepPlan::lda_config(std::size_t k) const {
    auto config = LdaConfig::with_defaults(k, derive_seed(seeds.lda, k));
    if (alpha) config.alpha = *alpha;
    config.beta = beta;
    config.iterations = lda_iterations;
    return config;
}

ScoreSeries SweepReport::rating_series() const {
    std::vector<long long> keys;
    std::vector<double> values;
    for (const auto& r : rows) {
        keys.push_back(static_cast<long long>(r.k));
        values.push_back(r.mean_rating);
    }
    return {std::move(keys), std::move(values)};
}

ScoreSeries SweepReport::purity_series() const {
    std::vector<long long> keys;
    std::vector<double> values;
    for (const auto& r : rows) {
        keys.push_back(static_cast<long long>(r.k));
        values.push_back(r.mean_purity);
    }
    return {std::move(keys), std::move(values)};
}

ScoreSeries SweepReport::ari_series() const {
    std::vector<long long> keys;
    std::vector<double> values;
    for (const auto& r : rows) {
        if (!r.ari) throw InvalidArgument("sweep report has no ARI column");
        keys.push_back(static_cast<long long>(r.k));
        values.push_back(*r.ari);
    }
    return {std::move(keys), std::move(values)};
}

ScoreSeries SweepReport::top_doc_ari_series() const {
    std::vector<long long> keys;
    std::vector<double> values;
    for (const auto& r : rows) {
        if (!r.top_doc_ari) throw InvalidArgument("sweep report has no top-document ARI column");
        keys.push_back(static_cast<long long>(r.k));
        values.push_back(*r.top_doc_ari);
    }
    return {std::move(keys), std::move(values)};
}

void finalize_sweep(SweepReport& report) {
    if (report.rows.empty()) return;
    const auto rating = smooth(report.rating_series(), report.smoothing_window);
    const auto purity = smooth(report.purity_series(), report.smoothing_window);
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        report.rows[i].smoothed_rating = rating.values()[i];
        report.rows[i].smoothed_purity = purity.values()[i];
    }
    report.selected_k_rating = select_k(report.rating_series(), report.smoothing_window);
    report.selected_k_purity = select_k(report.purity_series(), report.smoothing_window);
    report.selected_k_ari.reset();
    if (report.has_truth()) report.selected_k_ari = select_k(report.ari_series(), 1);
}

namespace {

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct KResult {
    SweepRow row;
    std::set<std::string> labels;
};

KResult judge_one_k(const Corpus& corpus, const Vocabulary& vocab, const SweepPlan& plan, Judge& judge,
                    const PromptTemplate& rating_tmpl, const PromptTemplate& label_tmpl,
                    const std::optional<Labeling>& truth, std::size_t k, const TopicModel& model) {
    KResult result;
    SweepRow& row = result.row;
    row.k = k;

    Rng sampler(derive_seed(plan.seeds.sampling, k));
    row.sampled_topics = sampler.sample_without_replacement(model.num_topics(), plan.topics_sampled_per_k);

    std::vector<QueryRequest> requests;
    std::vector<std::size_t> owner;  // sampled-topic slot per request
    std::vector<std::size_t> doc_union;
    for (std::size_t s = 0; s < row.sampled_topics.size(); ++s) {
        const auto topic = row.sampled_topics[s];
        const auto words = top_words(model, vocab, topic, plan.words_per_topic);
        for (std::size_t rep = 0; rep < plan.rating_repetitions; ++rep) {
            Rng shuffle(derive_seed(plan.seeds.prompts, k, topic, rep));
            requests.push_back({build_rating_prompt(words, rating_tmpl, shuffle), rep, std::nullopt});
            owner.push_back(s);
        }
        for (auto d : top_documents(model, topic, std::min(plan.docs_per_topic, model.num_documents()))) {
            requests.push_back({build_label_prompt(truncate_document(corpus[d], plan.truncate_words), label_tmpl), 0,
                                std::nullopt});
            owner.push_back(s);
            doc_union.push_back(d);
            ++row.label_queries;
        }
    }

    const auto records = judge.query_batch(requests);
    std::vector<std::vector<double>> ratings(row.sampled_topics.size());
    std::vector<std::vector<std::string>> labels(row.sampled_topics.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (rec.task == JudgeTask::rating) {
            if (rec.parsed) {
                ratings[owner[i]].push_back(std::get<int>(*rec.parsed));
            } else {
                ++row.unparseable_ratings;
            }
        } else {
            if (rec.parsed) {
                labels[owner[i]].push_back(std::get<std::string>(*rec.parsed));
                result.labels.insert(labels[owner[i]].back());
            } else {
                ++row.unparseable_labels;
            }
        }
    }

    std::vector<double> topic_ratings, purities;
    for (std::size_t s = 0; s < row.sampled_topics.size(); ++s) {
        if (!ratings[s].empty()) topic_ratings.push_back(mean(ratings[s]));
        if (!labels[s].empty()) purities.push_back(topic_purity(labels[s]));
    }
    if (topic_ratings.empty()) throw Error("no parseable rating");
    if (purities.empty()) throw Error("no parseable document label");
    row.mean_rating = mean(topic_ratings);
    row.mean_purity = mean(purities);

    if (truth) {
        const auto induced = induced_assignment(model);
        row.ari = ari(induced, *truth);
        const auto suite = clustering_suite(induced, *truth);
        row.ami = suite.ami;
        row.homogeneity = suite.homogeneity;
        row.completeness = suite.completeness;

        std::sort(doc_union.begin(), doc_union.end());
        doc_union.erase(std::unique(doc_union.begin(), doc_union.end()), doc_union.end());
        if (doc_union.size() >= 2) {
            Labeling a, b;
            for (auto d : doc_union) {
                a.push_back(induced[d]);
                b.push_back((*truth)[d]);
            }
            row.top_doc_ari = ari(a, b);
        }
    }
    return result;
}

}  // namespace

SweepReport run_k_sweep(const Corpus& corpus, const Vocabulary& vocab, const SweepPlan& plan, Judge& judge,
                        const ModelSource& models) {
    plan.validate();
    if (corpus.empty()) throw InvalidArgument("sweep: corpus is empty");

    std::optional<Labeling> truth;
    const bool labeled = std::all_of(corpus.documents().begin(), corpus.documents().end(),
                                     [&](const Document& d) { return d.label(plan.granularity).has_value(); });
    if (labeled) truth = encode_labels(corpus.labels(plan.granularity));

    auto examples = plan.example_labels;
    if (examples.empty()) {
        if (!labeled) {
            throw InvalidArgument("sweep: corpus lacks " + std::string(to_string(plan.granularity)) +
                                  " labels; pass example labels explicitly");
        }
        examples = corpus.most_prevalent_labels(plan.granularity, 5);
    }
    auto rating_tmpl = builtin_template("rating-k");
    rating_tmpl.dataset_description = plan.corpus_description;
    rating_tmpl.granularity = plan.granularity;
    rating_tmpl.example_labels = examples;
    auto label_tmpl = builtin_template("doc-label");
    label_tmpl.granularity = plan.granularity;
    label_tmpl.example_labels = examples;

    const auto before = judge.stats();
    std::vector<std::optional<KResult>> slots(plan.k_values.size());
    std::vector<std::exception_ptr> errors(plan.k_values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < plan.k_values.size(); i = next++) {
            const auto k = plan.k_values[i];
            try {
                const TopicModel model = models ? models(k) : train(corpus, vocab, plan.lda_config(k));
                slots[i] = judge_one_k(corpus, vocab, plan, judge, rating_tmpl, label_tmpl, truth, k, model);
            } catch (const std::exception& e) {
                errors[i] = std::make_exception_ptr(Error("sweep K=" + std::to_string(k) + ": " + e.what()));
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(plan.workers, 1, plan.k_values.size());
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    SweepReport report;
    report.granularity = plan.granularity;
    report.smoothing_window = plan.smoothing_window;
    std::set<std::string> inventory;
    for (auto& slot : slots) {
        report.diagnostics.unparseable_ratings += slot->row.unparseable_ratings;
        report.diagnostics.unparseable_labels += slot->row.unparseable_labels;
        inventory.insert(slot->labels.begin(), slot->labels.end());
        report.rows.push_back(std::move(slot->row));
    }
    const auto after = judge.stats();
    report.diagnostics.queries = after.queries - before.queries;
    report.diagnostics.cache_hits = after.cache_hits - before.cache_hits;
    report.diagnostics.label_inventory_size = inventory.size();
    finalize_sweep(report);
    return report;
}

LabelAgreement evaluate_label_assignment(const std::map<std::string, std::string>& llm_labels,
                                         const std::map<std::string, std::string>& truth) {
    if (llm_labels.size() != truth.size()) throw InvalidArgument("label assignment: document sets differ");
    std::vector<std::string> a, b;
    for (auto it = llm_labels.begin(), jt = truth.begin(); it != llm_labels.end(); ++it, ++jt) {
        if (it->first != jt->first) throw InvalidArgument("label assignment: document sets differ at '" + it->first + "'");
        a.push_back(it->second);
        b.push_back(jt->second);
    }
    const auto pa = encode_labels(a);
    const auto pb = encode_labels(b);
    return {ari(pa, pb), clustering_suite(pa, pb).ami};
}

double top10_ari_proxy_check(const ScoreSeries& restricted, const ScoreSeries& full) {
    if (restricted.size() < 3) throw InvalidArgument("proxy check: need at least three models");
    return spearman(restricted, full);
}

double top10_ari_proxy_check(const SweepReport& report) {
    return top10_ari_proxy_check(report.top_doc_ari_series(), report.ari_series());
}

}  // namespace tmeval
