#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "support/synthetic.hpp"
#include "tmeval/corpus.hpp"
#include "tmeval/digest.hpp"
#include "tmeval/judge.hpp"
#include "tmeval/random.hpp"

namespace annot {

struct Generated {
    std::vector<tmeval::AnnotatedTopicSet> topics;
    /// Latent coherence in [1, 3] per topic id.
    std::map<std::string, double> quality;
    /// Reference corpus whose co-occurrence follows the latent quality.
    tmeval::Corpus reference;
};

inline int clamp_score(double x) { return std::clamp(static_cast<int>(std::lround(x)), 1, 3); }

// Each topic has ten private words and a latent quality q. Annotators rate
// q plus noise; they find the intruder with probability rising in q.
inline Generated generate(std::size_t per_dataset, std::size_t raters, std::size_t trials, std::uint64_t seed) {
    tmeval::Rng rng(seed);
    Generated g;
    std::size_t next_word = 0;
    std::vector<std::vector<std::string>> words_by_topic;
    for (auto dataset : {tmeval::Dataset::nyt, tmeval::Dataset::wiki}) {
        const std::size_t first = g.topics.size();
        for (std::size_t t = 0; t < per_dataset; ++t) {
            tmeval::AnnotatedTopicSet topic;
            topic.topic_id = std::string(tmeval::to_string(dataset)) + "-" + std::to_string(t);
            topic.dataset = dataset;
            for (int w = 0; w < 10; ++w) topic.topic_words.push_back(synth::word_name(next_word++));
            const double q = 1.0 + 2.0 * rng.uniform();
            g.quality[topic.topic_id] = q;
            for (std::size_t r = 0; r < raters; ++r) {
                topic.ratings.push_back(
                    {"r" + std::to_string(r), clamp_score(q + 0.8 * synth::normal(rng)), rng.uniform() < 0.8});
            }
            words_by_topic.push_back(topic.topic_words);
            g.topics.push_back(std::move(topic));
        }
        for (std::size_t i = first; i < g.topics.size(); ++i) {
            auto& topic = g.topics[i];
            const double p_find = 0.15 + 0.8 * (g.quality[topic.topic_id] - 1.0) / 2.0;
            for (std::size_t k = 0; k < trials; ++k) {
                tmeval::IntrusionTrial trial;
                for (auto w : rng.sample_without_replacement(10, 5)) trial.shown_words.push_back(topic.topic_words[w]);
                std::size_t other = first + rng.below(per_dataset - 1);
                if (other >= i) ++other;
                trial.intruder = g.topics[other].topic_words[rng.below(10)];
                trial.shown_words.push_back(trial.intruder);
                rng.shuffle(trial.shown_words);
                trial.annotator_pick =
                    rng.uniform() < p_find ? trial.intruder : trial.shown_words[rng.below(trial.shown_words.size())];
                trial.confident = rng.uniform() < 0.85;
                topic.intrusion_trials.push_back(std::move(trial));
            }
        }
    }

    // Reference documents: draw a topic, then words from it, keeping a word
    // on-topic with probability tied to the topic's quality.
    std::vector<tmeval::Document> docs;
    for (std::size_t d = 0; d < 40 * g.topics.size(); ++d) {
        const auto t = rng.below(g.topics.size());
        const double keep = 0.2 + 0.35 * (g.quality[g.topics[t].topic_id] - 1.0);
        tmeval::Document doc;
        doc.id = "ref" + std::to_string(d);
        for (int n = 0; n < 20; ++n) {
            const auto& source = rng.uniform() < keep ? words_by_topic[t] : words_by_topic[rng.below(g.topics.size())];
            doc.tokens.push_back(source[rng.below(10)]);
            doc.text += (n ? " " : "") + doc.tokens.back();
        }
        docs.push_back(std::move(doc));
    }
    g.reference = tmeval::Corpus(std::move(docs));
    return g;
}

/// Picks the shown word whose topic differs from the majority's.
inline tmeval::OracleJudge::PickFn odd_one_out(const std::vector<tmeval::AnnotatedTopicSet>& topics) {
    auto owner = std::make_shared<std::unordered_map<std::string, std::size_t>>();
    for (std::size_t t = 0; t < topics.size(); ++t) {
        for (const auto& w : topics[t].topic_words) (*owner)[w] = t;
    }
    return [owner](const std::vector<std::string>& shown) -> std::optional<std::string> {
        std::map<std::size_t, int> votes;
        for (const auto& w : shown) ++votes[owner->at(w)];
        for (const auto& w : shown) {
            if (votes[owner->at(w)] == 1) return w;
        }
        return std::nullopt;
    };
}

/// Stand-in for a live model when recording fixtures: noisy answers driven
/// by the latent quality, deterministic per prompt.
class SimulatedModel : public tmeval::JudgeClient {
public:
    SimulatedModel(const Generated& g) : pick_(odd_one_out(g.topics)) {
        for (const auto& t : g.topics) {
            for (const auto& w : t.topic_words) quality_[w] = g.quality.at(t.topic_id);
        }
    }

    std::string complete(const tmeval::RenderedPrompt& prompt, const tmeval::QueryOptions&) override {
        tmeval::Rng rng(std::stoull(tmeval::sha256_hex(prompt.system + "\n" + prompt.user).substr(0, 15), nullptr, 16));
        const auto words = tmeval::split_word_list(prompt.user);
        if (rng.uniform() < 0.03) return "I cannot determine that.";
        if (prompt.task == tmeval::JudgeTask::rating) {
            double q = 0;
            for (const auto& w : words) q += quality_.at(w) / static_cast<double>(words.size());
            return std::to_string(clamp_score(q + 0.7 * synth::normal(rng)));
        }
        const auto truth = pick_(words).value_or(words.front());
        double q = 0;
        for (const auto& w : words) {
            if (w != truth) q += quality_.at(w) / 5.0;
        }
        if (rng.uniform() < 0.3 + 0.3 * (q - 1.0)) return "The intruder is \"" + truth + "\".";
        return words[rng.below(words.size())];
    }

private:
    tmeval::OracleJudge::PickFn pick_;
    std::unordered_map<std::string, double> quality_;
};

}  // namespace annot
