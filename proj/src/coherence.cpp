#include "tmeval/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tmeval/digest.hpp"
#include "tmeval/error.hpp"

namespace tmeval {

using nlohmann::json;

std::optional<std::uint32_t> CooccurrenceTable::id(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool CooccurrenceTable::contains(std::string_view word) const { return count(word) > 0; }

std::uint64_t CooccurrenceTable::count(std::string_view word) const {
    auto i = id(word);
    return i ? word_count_[*i] : 0;
}

std::uint64_t CooccurrenceTable::count(std::string_view a, std::string_view b) const {
    auto ia = id(a);
    auto ib = id(b);
    if (!ia || !ib) return 0;
    if (*ia == *ib) return word_count_[*ia];
    auto it = pair_count_.find(pair_key(*ia, *ib));
    return it == pair_count_.end() ? 0 : it->second;
}

std::vector<std::pair<std::string, std::uint64_t>> CooccurrenceTable::word_counts() const {
    std::vector<std::pair<std::string, std::uint64_t>> out;
    for (std::size_t i = 0; i < words_.size(); ++i) out.emplace_back(words_[i], word_count_[i]);
    std::sort(out.begin(), out.end());
    return out;
}

CooccurrenceTable build_table(const Corpus& reference, std::size_t window_size, bool boolean_sliding,
                              const std::vector<std::string>& targets) {
    if (window_size == 0) throw InvalidArgument("cooccurrence: window size must be >= 1");
    if (reference.total_tokens() == 0) throw InvalidArgument("cooccurrence: reference corpus has no tokens");

    CooccurrenceTable table;
    table.window_size_ = window_size;
    table.boolean_sliding_ = boolean_sliding;
    table.restricted_ = !targets.empty();
    auto intern = [&](const std::string& w) {
        auto [it, fresh] = table.index_.emplace(w, static_cast<std::uint32_t>(table.words_.size()));
        if (fresh) table.words_.push_back(w);
        return it->second;
    };
    for (const auto& t : targets) intern(t);

    std::vector<std::vector<std::int64_t>> docs;
    docs.reserve(reference.size());
    for (const auto& doc : reference.documents()) {
        std::vector<std::int64_t> ids;
        ids.reserve(doc.tokens.size());
        for (const auto& token : doc.tokens) {
            if (table.restricted_) {
                auto it = table.index_.find(token);
                ids.push_back(it == table.index_.end() ? std::int64_t{-1} : std::int64_t{it->second});
            } else {
                ids.push_back(intern(token));
            }
        }
        docs.push_back(std::move(ids));
    }
    table.word_count_.assign(table.words_.size(), 0);

    std::vector<std::uint32_t> present;
    auto count_window = [&](const std::int64_t* first, const std::int64_t* last) {
        present.clear();
        for (auto p = first; p != last; ++p) {
            if (*p >= 0) present.push_back(static_cast<std::uint32_t>(*p));
        }
        std::sort(present.begin(), present.end());
        present.erase(std::unique(present.begin(), present.end()), present.end());
        for (std::size_t i = 0; i < present.size(); ++i) {
            ++table.word_count_[present[i]];
            for (std::size_t j = i + 1; j < present.size(); ++j) {
                ++table.pair_count_[CooccurrenceTable::pair_key(present[i], present[j])];
            }
        }
        ++table.n_windows_;
    };

    for (const auto& ids : docs) {
        if (ids.empty()) continue;
        const std::int64_t* base = ids.data();
        const std::size_t length = ids.size();
        if (length <= window_size) {
            count_window(base, base + length);
        } else if (boolean_sliding) {
            for (std::size_t start = 0; start + window_size <= length; ++start) {
                count_window(base + start, base + start + window_size);
            }
        } else {
            for (std::size_t start = 0; start < length; start += window_size) {
                count_window(base + start, base + std::min(length, start + window_size));
            }
        }
    }
    return table;
}

std::string table_cache_key(const Corpus& reference, std::size_t window_size, bool boolean_sliding,
                            const std::vector<std::string>& targets) {
    std::string material;
    for (const auto& doc : reference.documents()) {
        for (const auto& t : doc.tokens) {
            material += t;
            material.push_back(' ');
        }
        material.push_back('\n');
    }
    std::string key = sha256_hex(material);
    key += ":w" + std::to_string(window_size) + (boolean_sliding ? ":sliding" : ":segment");
    if (!targets.empty()) {
        std::string joined;
        for (const auto& t : targets) joined += t + "\n";
        key += ":t" + sha256_hex(joined).substr(0, 16);
    }
    return key;
}

void save_table(const CooccurrenceTable& table, const std::string& key, const std::filesystem::path& path) {
    json pairs = json::array();
    std::vector<std::pair<std::uint64_t, std::uint64_t>> sorted(table.pair_count_.begin(), table.pair_count_.end());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [k, c] : sorted) pairs.push_back({k >> 32, k & 0xffffffffULL, c});
    const json doc = {{"key", key},
                      {"window_size", table.window_size()},
                      {"boolean_sliding", table.boolean_sliding()},
                      {"restricted", table.restricted()},
                      {"n_windows", table.n_windows()},
                      {"words", table.words_},
                      {"counts", table.word_count_},
                      {"pairs", pairs}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << doc.dump() << '\n';
}

std::optional<CooccurrenceTable> load_table(const std::filesystem::path& path, const std::string& key) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    json doc;
    try {
        doc = json::parse(in);
        if (doc.at("key").get<std::string>() != key) return std::nullopt;
        CooccurrenceTable table;
        table.window_size_ = doc.at("window_size").get<std::size_t>();
        table.boolean_sliding_ = doc.at("boolean_sliding").get<bool>();
        table.restricted_ = doc.at("restricted").get<bool>();
        table.n_windows_ = doc.at("n_windows").get<std::uint64_t>();
        table.words_ = doc.at("words").get<std::vector<std::string>>();
        table.word_count_ = doc.at("counts").get<std::vector<std::uint64_t>>();
        if (table.word_count_.size() != table.words_.size()) throw FormatError(path.string(), 0, "count size");
        for (std::uint32_t i = 0; i < table.words_.size(); ++i) table.index_.emplace(table.words_[i], i);
        for (const auto& p : doc.at("pairs")) {
            table.pair_count_[CooccurrenceTable::pair_key(p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>())] =
                p.at(2).get<std::uint64_t>();
        }
        return table;
    } catch (const json::exception& e) {
        throw FormatError(path.string(), 0, e.what());
    }
}

CooccurrenceTable build_table_cached(const Corpus& reference, std::size_t window_size, bool boolean_sliding,
                                     const std::vector<std::string>& targets,
                                     const std::filesystem::path& cache_file) {
    const auto key = table_cache_key(reference, window_size, boolean_sliding, targets);
    if (auto cached = load_table(cache_file, key)) return std::move(*cached);
    auto table = build_table(reference, window_size, boolean_sliding, targets);
    save_table(table, key, cache_file);
    return table;
}

double npmi_pair(const CooccurrenceTable& table, std::string_view w1, std::string_view w2,
                 CoherenceDiagnostics* diagnostics) {
    const auto c1 = table.count(w1);
    const auto c2 = table.count(w2);
    if (c1 == 0 || c2 == 0) {
        if (diagnostics) {
            if (c1 == 0) diagnostics->unseen_words.emplace(w1);
            if (c2 == 0) diagnostics->unseen_words.emplace(w2);
            ++diagnostics->unseen_pairs;
        }
        return -1.0;
    }
    const auto n = static_cast<double>(table.n_windows());
    const auto c12 = table.count(w1, w2);
    // Both words in every window: the normalizer vanishes, association is total.
    if (c12 == table.n_windows()) return 1.0;
    const double p1 = static_cast<double>(c1) / n;
    const double p2 = static_cast<double>(c2) / n;
    const double p12 = static_cast<double>(c12) / n + kJointEpsilon;
    const double value = std::log(p12 / (p1 * p2)) / -std::log(p12);
    return std::clamp(value, -1.0, 1.0);
}

double npmi_topic(const CooccurrenceTable& table, const std::vector<std::string>& words,
                  CoherenceDiagnostics* diagnostics) {
    if (words.size() < 2) throw InvalidArgument("npmi_topic: need at least two words");
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        for (std::size_t j = i + 1; j < words.size(); ++j) {
            sum += npmi_pair(table, words[i], words[j], diagnostics);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

double cv_topic(const CooccurrenceTable& table, const std::vector<std::string>& words, double gamma,
                CoherenceDiagnostics* diagnostics) {
    if (words.size() < 2) throw InvalidArgument("cv_topic: need at least two words");
    if (!table.boolean_sliding()) throw InvalidArgument("cv_topic: table must use boolean sliding windows");

    const std::size_t n = words.size();
    std::vector<double> vectors(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double x = npmi_pair(table, words[i], words[j], diagnostics);
            const double v = std::copysign(std::pow(std::abs(x), gamma), x);
            vectors[i * n + j] = v;
            vectors[j * n + i] = v;
        }
    }
    std::vector<double> total(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) total[j] += vectors[i * n + j];
    }
    double total_norm = 0.0;
    for (double t : total) total_norm += t * t;
    total_norm = std::sqrt(total_norm);

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        double norm = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            dot += vectors[i * n + j] * total[j];
            norm += vectors[i * n + j] * vectors[i * n + j];
        }
        if (norm == 0.0 || total_norm == 0.0) {
            if (diagnostics) ++diagnostics->zero_vectors;
            continue;
        }
        sum += dot / (std::sqrt(norm) * total_norm);
    }
    return sum / static_cast<double>(n);
}

}  // namespace tmeval
