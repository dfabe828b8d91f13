#include "tmeval/lda.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "tmeval/error.hpp"

namespace tmeval {

using nlohmann::json;

LdaConfig LdaConfig::with_defaults(std::size_t num_topics, std::uint64_t seed) {
    LdaConfig config;
    config.num_topics = num_topics;
    config.alpha = num_topics ? 50.0 / static_cast<double>(num_topics) : 0.0;
    config.beta = 0.01;
    config.iterations = 1000;
    config.seed = seed;
    return config;
}

void LdaConfig::validate() const {
    if (num_topics < 1) throw InvalidArgument("lda: number of topics must be >= 1");
    if (!(alpha > 0)) throw InvalidArgument("lda: alpha must be > 0");
    if (!(beta > 0)) throw InvalidArgument("lda: beta must be > 0");
    if (iterations < 1) throw InvalidArgument("lda: iterations must be >= 1");
}

double TopicModel::phi(std::size_t k, std::size_t w) const {
    const double beta = config_.beta;
    return (topic_word_count(k, w) + beta) / (n_k_[k] + static_cast<double>(vocab_size_) * beta);
}

double TopicModel::theta(std::size_t d, std::size_t k) const {
    const double alpha = config_.alpha;
    return (doc_topic_count(d, k) + alpha) /
           (static_cast<double>(words_[d].size()) + static_cast<double>(num_topics()) * alpha);
}

std::vector<double> TopicModel::phi_row(std::size_t k) const {
    std::vector<double> row(vocab_size_);
    for (std::size_t w = 0; w < vocab_size_; ++w) row[w] = phi(k, w);
    return row;
}

std::vector<double> TopicModel::theta_row(std::size_t d) const {
    std::vector<double> row(num_topics());
    for (std::size_t k = 0; k < num_topics(); ++k) row[k] = theta(d, k);
    return row;
}

std::vector<double> TopicModel::theta_column(std::size_t k) const {
    std::vector<double> col(num_documents());
    for (std::size_t d = 0; d < num_documents(); ++d) col[d] = theta(d, k);
    return col;
}

void TopicModel::rebuild_counts() {
    const std::size_t K = num_topics();
    n_dk_.assign(words_.size() * K, 0);
    n_kw_.assign(K * vocab_size_, 0);
    n_k_.assign(K, 0);
    for (std::size_t d = 0; d < words_.size(); ++d) {
        for (std::size_t i = 0; i < words_[d].size(); ++i) {
            const auto k = static_cast<std::size_t>(z_[d][i]);
            ++n_dk_[d * K + k];
            ++n_kw_[k * vocab_size_ + static_cast<std::size_t>(words_[d][i])];
            ++n_k_[k];
        }
    }
}

bool TopicModel::counts_consistent() const {
    TopicModel fresh;
    fresh.config_ = config_;
    fresh.vocab_size_ = vocab_size_;
    fresh.words_ = words_;
    fresh.z_ = z_;
    fresh.rebuild_counts();
    return fresh.n_dk_ == n_dk_ && fresh.n_kw_ == n_kw_ && fresh.n_k_ == n_k_;
}

GibbsSampler::GibbsSampler(std::vector<std::vector<int>> docs, std::size_t vocab_size, const LdaConfig& config,
                           std::string vocab_fingerprint)
    : rng_(config.seed) {
    config.validate();
    std::size_t tokens = 0;
    for (const auto& doc : docs) {
        for (int w : doc) {
            if (w < 0 || static_cast<std::size_t>(w) >= vocab_size) {
                throw InvalidArgument("lda: word id " + std::to_string(w) + " outside vocabulary");
            }
        }
        tokens += doc.size();
    }
    if (docs.empty() || tokens == 0) throw InvalidArgument("lda: corpus is empty");
    if (config.num_topics > tokens) {
        throw InvalidArgument("lda: " + std::to_string(config.num_topics) + " topics exceed " +
                              std::to_string(tokens) + " tokens");
    }

    model_.config_ = config;
    model_.vocab_size_ = vocab_size;
    model_.vocab_fingerprint_ = std::move(vocab_fingerprint);
    model_.words_ = std::move(docs);
    model_.z_.resize(model_.words_.size());
    for (std::size_t d = 0; d < model_.words_.size(); ++d) {
        auto& z = model_.z_[d];
        z.resize(model_.words_[d].size());
        for (auto& topic : z) topic = static_cast<int>(rng_.below(config.num_topics));
    }
    model_.rebuild_counts();
    cumulative_.resize(config.num_topics);
}

void GibbsSampler::sweep() {
    auto& m = model_;
    const std::size_t K = m.num_topics();
    const std::size_t V = m.vocab_size_;
    const double alpha = m.config_.alpha;
    const double beta = m.config_.beta;
    const double v_beta = static_cast<double>(V) * beta;

    for (std::size_t d = 0; d < m.words_.size(); ++d) {
        const auto& words = m.words_[d];
        auto& z = m.z_[d];
        int* n_d = m.n_dk_.data() + d * K;
        for (std::size_t i = 0; i < words.size(); ++i) {
            const auto w = static_cast<std::size_t>(words[i]);
            auto k = static_cast<std::size_t>(z[i]);
            --n_d[k];
            --m.n_kw_[k * V + w];
            --m.n_k_[k];

            double total = 0.0;
            for (std::size_t t = 0; t < K; ++t) {
                total += (n_d[t] + alpha) * (m.n_kw_[t * V + w] + beta) / (m.n_k_[t] + v_beta);
                cumulative_[t] = total;
            }
            const double u = rng_.uniform() * total;
            k = static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) -
                                         cumulative_.begin());
            if (k >= K) k = K - 1;

            z[i] = static_cast<int>(k);
            ++n_d[k];
            ++m.n_kw_[k * V + w];
            ++m.n_k_[k];
        }
    }
    ++sweeps_;
}

TopicModel train(std::vector<std::vector<int>> docs, std::size_t vocab_size, const LdaConfig& config,
                 const std::function<void(const GibbsSampler&)>& on_sweep) {
    GibbsSampler sampler(std::move(docs), vocab_size, config);
    for (std::size_t it = 0; it < config.iterations; ++it) {
        sampler.sweep();
        if (on_sweep) on_sweep(sampler);
    }
    return std::move(sampler).release();
}

TopicModel train(const Corpus& corpus, const Vocabulary& vocab, const LdaConfig& config) {
    GibbsSampler sampler(to_word_ids(corpus, vocab), vocab.size(), config, vocab.fingerprint());
    for (std::size_t it = 0; it < config.iterations; ++it) sampler.sweep();
    return std::move(sampler).release();
}

std::vector<std::size_t> top_indices(std::span<const double> scores, std::size_t n) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    n = std::min(n, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
    order.resize(n);
    return order;
}

std::vector<std::size_t> top_words(const TopicModel& model, std::size_t topic, std::size_t n) {
    if (topic >= model.num_topics()) throw InvalidArgument("top_words: topic index out of range");
    const auto row = model.phi_row(topic);
    return top_indices(row, n);
}

std::vector<std::string> top_words(const TopicModel& model, const Vocabulary& vocab, std::size_t topic,
                                   std::size_t n) {
    std::vector<std::string> out;
    for (auto id : top_words(model, topic, n)) out.push_back(vocab.word(id));
    return out;
}

std::vector<std::size_t> top_documents(const TopicModel& model, std::size_t topic, std::size_t n) {
    if (topic >= model.num_topics()) throw InvalidArgument("top_documents: topic index out of range");
    const auto column = model.theta_column(topic);
    return top_indices(column, n);
}

std::vector<int> induced_assignment(const TopicModel& model) {
    std::vector<int> out(model.num_documents());
    const std::size_t K = model.num_topics();
    for (std::size_t d = 0; d < model.num_documents(); ++d) {
        // theta is monotone in n_dk within a document
        std::size_t best = 0;
        for (std::size_t k = 1; k < K; ++k) {
            if (model.doc_topic_count(d, k) > model.doc_topic_count(d, best)) best = k;
        }
        out[d] = static_cast<int>(best);
    }
    return out;
}

namespace {
constexpr const char* kSnapshotFormat = "tmeval-lda-snapshot";
constexpr int kSnapshotVersion = 1;
}  // namespace

void save_model(const TopicModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    const auto& c = model.config();
    out << json{{"format", kSnapshotFormat},
                {"version", kSnapshotVersion},
                {"num_topics", c.num_topics},
                {"alpha", c.alpha},
                {"beta", c.beta},
                {"iterations", c.iterations},
                {"seed", c.seed},
                {"vocab_size", model.vocab_size()},
                {"vocab_hash", model.vocab_fingerprint()},
                {"num_documents", model.num_documents()}}
               .dump()
        << '\n';
    for (std::size_t d = 0; d < model.num_documents(); ++d) {
        out << json{{"doc", d}, {"w", model.words()[d]}, {"z", model.assignments()[d]}}.dump() << '\n';
    }
    for (std::size_t k = 0; k < model.num_topics(); ++k) {
        json counts = json::array();
        for (std::size_t w = 0; w < model.vocab_size(); ++w) {
            if (int n = model.topic_word_count(k, w)) counts.push_back({w, n});
        }
        out << json{{"topic", k}, {"n_kw", counts}}.dump() << '\n';
    }
}

TopicModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    const std::string source = path.string();
    std::string line;
    std::size_t record = 0;
    auto next = [&]() -> json {
        if (!std::getline(in, line)) throw FormatError(source, record, "unexpected end of snapshot");
        try {
            return json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError(source, record, e.what());
        }
    };

    TopicModel model;
    try {
        const json header = next();
        if (header.value("format", "") != kSnapshotFormat) throw FormatError(source, 0, "not an LDA snapshot");
        if (header.at("version").get<int>() != kSnapshotVersion) {
            throw FormatError(source, 0, "unsupported snapshot version");
        }
        model.config_.num_topics = header.at("num_topics").get<std::size_t>();
        model.config_.alpha = header.at("alpha").get<double>();
        model.config_.beta = header.at("beta").get<double>();
        model.config_.iterations = header.at("iterations").get<std::size_t>();
        model.config_.seed = header.at("seed").get<std::uint64_t>();
        model.config_.validate();
        model.vocab_size_ = header.at("vocab_size").get<std::size_t>();
        model.vocab_fingerprint_ = header.at("vocab_hash").get<std::string>();
        const auto n_docs = header.at("num_documents").get<std::size_t>();

        model.words_.resize(n_docs);
        model.z_.resize(n_docs);
        for (std::size_t d = 0; d < n_docs; ++d) {
            ++record;
            const json doc = next();
            model.words_[d] = doc.at("w").get<std::vector<int>>();
            model.z_[d] = doc.at("z").get<std::vector<int>>();
            if (model.words_[d].size() != model.z_[d].size()) {
                throw FormatError(source, record, "word and assignment lengths differ");
            }
            for (std::size_t i = 0; i < model.z_[d].size(); ++i) {
                if (model.z_[d][i] < 0 || static_cast<std::size_t>(model.z_[d][i]) >= model.num_topics() ||
                    model.words_[d][i] < 0 || static_cast<std::size_t>(model.words_[d][i]) >= model.vocab_size_) {
                    throw FormatError(source, record, "id out of range");
                }
            }
        }
        model.rebuild_counts();
        for (std::size_t k = 0; k < model.num_topics(); ++k) {
            ++record;
            const json topic = next();
            std::size_t total = 0;
            for (const auto& entry : topic.at("n_kw")) {
                const auto w = entry.at(0).get<std::size_t>();
                const auto n = entry.at(1).get<int>();
                if (w >= model.vocab_size_ || model.topic_word_count(k, w) != n) {
                    throw FormatError(source, record, "stored counts disagree with assignments");
                }
                total += static_cast<std::size_t>(n);
            }
            if (total != static_cast<std::size_t>(model.topic_count(k))) {
                throw FormatError(source, record, "stored counts disagree with assignments");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(source, record, e.what());
    }
    return model;
}

}  // namespace tmeval
