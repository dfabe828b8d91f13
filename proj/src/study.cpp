#include <algorithm>
#include <numeric>

#include "tmeval/error.hpp"
#include "tmeval/random.hpp"
#include "tmeval/sweep.hpp"

namespace tmeval {

namespace {

PromptTemplate study_template(JudgeTask task, Dataset dataset, bool minimal) {
    const std::string base = task == JudgeTask::rating ? "rating" : "intrusion";
    const auto description = dataset_description(dataset);
    if (minimal || description.empty()) return builtin_template(base + "-minimal");
    auto tmpl = builtin_template(base);
    tmpl.dataset_description = description;
    return tmpl;
}

// A constant score series (e.g. a judge that is always right) has no rank
// correlation; the cell is left empty instead of failing the study.
template <typename Fn>
std::optional<BootstrapResult> defined_or_empty(Fn fn) {
    try {
        return fn();
    } catch (const UndefinedCorrelation&) {
        return std::nullopt;
    }
}

}  // namespace

CorrelationReport run_coherence_study(const std::vector<AnnotatedTopicSet>& input, Judge& judge,
                                      const BaselineTables& baselines, const CoherenceStudyOptions& options) {
    if (input.empty()) throw InvalidArgument("coherence study: no annotated topics");
    const auto topics = options.confident_only ? confident_only(input) : input;

    // Intruders come from other topics of the same dataset; only the top 10
    // words of an annotated topic are known, so they form the exclusion list.
    std::map<Dataset, std::vector<std::size_t>> by_dataset;
    for (std::size_t i = 0; i < topics.size(); ++i) by_dataset[topics[i].dataset].push_back(i);

    std::vector<QueryRequest> requests;
    std::vector<std::pair<std::size_t, JudgeTask>> owner;
    for (const auto& [dataset, members] : by_dataset) {
        std::vector<std::vector<std::string>> ranked;
        for (auto i : members) ranked.push_back(topics[i].topic_words);
        const auto rating_tmpl = study_template(JudgeTask::rating, dataset, options.minimal_prompt);
        const auto intrusion_tmpl = study_template(JudgeTask::intrusion, dataset, options.minimal_prompt);
        for (std::size_t m = 0; m < members.size(); ++m) {
            const auto i = members[m];
            for (std::size_t rep = 0; rep < options.rating_repetitions; ++rep) {
                Rng rng(derive_seed(options.prompt_seed, i, rep, 1));
                requests.push_back({build_rating_prompt(topics[i].topic_words, rating_tmpl, rng), rep, std::nullopt});
                owner.emplace_back(i, JudgeTask::rating);
            }
            if (members.size() < 2) continue;
            for (std::size_t rep = 0; rep < options.intrusion_repetitions; ++rep) {
                Rng rng(derive_seed(options.prompt_seed, i, rep, 2));
                auto instance = build_intrusion_instance(ranked, m, rng, kIntrusionTopWords);
                instance.topic = i;
                requests.push_back({build_intrusion_prompt(instance, intrusion_tmpl), rep, instance});
                owner.emplace_back(i, JudgeTask::intrusion);
            }
        }
    }

    const auto before = judge.stats();
    const auto records = judge.query_batch(requests);
    const auto after = judge.stats();

    CorrelationReport report;
    report.queries = after.queries - before.queries;
    report.unparseable = after.unparseable - before.unparseable;

    std::vector<std::vector<double>> llm_rating(topics.size()), llm_intrusion(topics.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& [topic, task] = owner[r];
        if (!records[r].parsed) continue;
        if (task == JudgeTask::rating) {
            llm_rating[topic].push_back(std::get<int>(*records[r].parsed));
        } else {
            llm_intrusion[topic].push_back(std::get<IntrusionVerdict>(*records[r].parsed).correct ? 1.0 : 0.0);
        }
    }

    std::vector<double> npmi_scores(topics.size()), cv_scores(topics.size());
    for (std::size_t i = 0; i < topics.size(); ++i) {
        if (baselines.npmi) npmi_scores[i] = npmi_topic(*baselines.npmi, topics[i].topic_words);
        if (baselines.cv) cv_scores[i] = cv_topic(*baselines.cv, topics[i].topic_words);
    }

    struct Slice {
        std::string name;
        std::vector<std::size_t> members;
    };
    std::vector<Slice> slices;
    for (auto [dataset, name] : {std::pair{Dataset::nyt, "NYT"}, std::pair{Dataset::wiki, "Wiki"}}) {
        if (auto it = by_dataset.find(dataset); it != by_dataset.end()) slices.push_back({name, it->second});
    }
    std::vector<std::size_t> all(topics.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    slices.push_back({"Both", all});

    BootstrapOptions boot;
    boot.episodes = options.episodes;
    boot.seed = options.seed;
    boot.threads = options.threads;

    for (const auto task : {JudgeTask::intrusion, JudgeTask::rating}) {
        for (const auto& slice : slices) {
            std::vector<std::vector<double>> human, llm, npmi, cv, ceiling;
            double human_correct = 0.0, human_trials = 0.0, llm_correct = 0.0, llm_trials = 0.0;
            for (auto i : slice.members) {
                auto h = task == JudgeTask::rating ? topics[i].rating_scores() : topics[i].intrusion_outcomes();
                const auto& l = task == JudgeTask::rating ? llm_rating[i] : llm_intrusion[i];
                if (h.empty() || l.empty()) {
                    if (slice.name == "Both") ++report.excluded_topics;
                    continue;
                }
                if (task == JudgeTask::intrusion) {
                    human_correct += std::accumulate(h.begin(), h.end(), 0.0);
                    human_trials += static_cast<double>(h.size());
                    llm_correct += std::accumulate(l.begin(), l.end(), 0.0);
                    llm_trials += static_cast<double>(l.size());
                }
                if (h.size() >= 2) ceiling.push_back(h);
                npmi.push_back({npmi_scores[i]});
                cv.push_back({cv_scores[i]});
                human.push_back(std::move(h));
                llm.push_back(l);
            }
            if (human.size() < 3) continue;

            CorrelationRow row;
            row.task = task;
            row.dataset = slice.name;
            row.topics = human.size();
            row.llm = defined_or_empty([&] { return bootstrap_correlation(human, llm, boot); });
            if (baselines.npmi) row.npmi = defined_or_empty([&] { return bootstrap_correlation(human, npmi, boot); });
            if (baselines.cv) row.cv = defined_or_empty([&] { return bootstrap_correlation(human, cv, boot); });
            if (ceiling.size() >= 3) row.ceiling = defined_or_empty([&] { return human_ceiling(ceiling, boot); });
            if (task == JudgeTask::intrusion) {
                row.llm_accuracy = llm_correct / llm_trials;
                row.human_accuracy = human_correct / human_trials;
            }
            report.rows.push_back(std::move(row));
        }
    }
    if (report.rows.empty()) throw InvalidArgument("coherence study: every dataset slice is empty");
    return report;
}

}  // namespace tmeval
