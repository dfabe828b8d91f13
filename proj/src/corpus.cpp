#include "tmeval/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tmeval/digest.hpp"
#include "tmeval/error.hpp"

namespace tmeval {

using nlohmann::json;

std::string_view to_string(Granularity g) { return g == Granularity::broad ? "broad" : "narrow"; }

Granularity parse_granularity(std::string_view text) {
    if (text == "broad") return Granularity::broad;
    if (text == "narrow" || text == "specific") return Granularity::narrow;
    throw InvalidArgument("unknown granularity '" + std::string(text) + "'");
}

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(documents_.size());
    for (const auto& doc : documents_) {
        if (!seen.insert(doc.id).second) throw InvalidArgument("duplicate document id '" + doc.id + "'");
    }
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        if (documents_[i].id == id) return i;
    }
    return std::nullopt;
}

std::vector<std::string> Corpus::labels(Granularity g) const {
    std::vector<std::string> out;
    out.reserve(documents_.size());
    for (const auto& doc : documents_) {
        const auto& label = doc.label(g);
        if (!label) {
            throw InvalidArgument("document '" + doc.id + "' has no " + std::string(to_string(g)) +
                                  " label");
        }
        out.push_back(*label);
    }
    return out;
}

std::vector<std::string> Corpus::most_prevalent_labels(Granularity g, std::size_t n) const {
    std::map<std::string, std::size_t> counts;
    for (const auto& label : labels(g)) ++counts[label];
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ranked.size() && i < n; ++i) out.push_back(ranked[i].first);
    return out;
}

std::size_t Corpus::total_tokens() const noexcept {
    std::size_t total = 0;
    for (const auto& doc : documents_) total += doc.tokens.size();
    return total;
}

CorpusFormat parse_corpus_format(std::string_view text) {
    if (text == "jsonl") return CorpusFormat::jsonl;
    if (text == "csv") return CorpusFormat::csv;
    if (text == "plain-dir" || text == "plain_dir" || text == "dir") return CorpusFormat::plain_dir;
    throw InvalidArgument("unknown corpus format '" + std::string(text) + "'");
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return in;
}

std::optional<std::string> optional_string(const json& obj, const char* key, const std::string& source,
                                           std::size_t record) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw FormatError(source, record, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

Document document_from_json(const json& obj, const std::string& source, std::size_t record) {
    if (!obj.is_object()) throw FormatError(source, record, "expected a JSON object");
    auto id = obj.find("id");
    if (id == obj.end()) throw FormatError(source, record, "missing field 'id'");
    auto text = obj.find("text");
    if (text == obj.end()) throw FormatError(source, record, "missing field 'text'");
    if (!text->is_string()) throw FormatError(source, record, "field 'text' must be a string");

    Document doc;
    if (id->is_string()) {
        doc.id = id->get<std::string>();
    } else if (id->is_number_integer()) {
        doc.id = std::to_string(id->get<long long>());
    } else {
        throw FormatError(source, record, "field 'id' must be a string or integer");
    }
    doc.text = text->get<std::string>();
    doc.broad_label = optional_string(obj, "broad_label", source, record);
    doc.specific_label = optional_string(obj, "specific_label", source, record);
    if (auto tokens = obj.find("tokens"); tokens != obj.end()) {
        if (!tokens->is_array()) throw FormatError(source, record, "field 'tokens' must be an array");
        for (const auto& t : *tokens) {
            if (!t.is_string()) throw FormatError(source, record, "tokens must be strings");
            doc.tokens.push_back(t.get<std::string>());
        }
    }
    return doc;
}

Corpus build_corpus(std::vector<Document> docs, const std::string& source,
                    const std::vector<std::size_t>& record_of) {
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (auto [it, fresh] = seen.emplace(docs[i].id, i); !fresh) {
            throw FormatError(source, record_of[i], "duplicate id '" + docs[i].id + "'");
        }
    }
    return Corpus(std::move(docs));
}

Corpus load_jsonl(const std::filesystem::path& path) {
    auto in = open_input(path);
    const std::string source = path.string();
    std::vector<Document> docs;
    std::vector<std::size_t> records;
    std::string line;
    std::size_t record = 0;
    for (; std::getline(in, line); ++record) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError(source, record, std::string("invalid JSON: ") + e.what());
        }
        docs.push_back(document_from_json(obj, source, record));
        records.push_back(record);
    }
    return build_corpus(std::move(docs), source, records);
}

// RFC 4180 reader: quoted fields may contain separators, quotes ("") and newlines.
std::vector<std::vector<std::string>> read_csv_rows(std::istream& in, const std::string& source) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    char c;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
        row.clear();
    };
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_row();
        } else if (c == '\r') {
            if (in.peek() == '\n') in.get(c);
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (quoted) throw FormatError(source, rows.size(), "unterminated quoted field");
    if (field_started || !row.empty()) end_row();
    return rows;
}

Corpus load_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    const std::string source = path.string();
    auto rows = read_csv_rows(in, source);
    if (rows.empty()) throw FormatError(source, 0, "missing header row");
    const auto& header = rows.front();
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    };
    const auto id_col = column("id");
    const auto text_col = column("text");
    if (!id_col) throw FormatError(source, 0, "header lacks column 'id'");
    if (!text_col) throw FormatError(source, 0, "header lacks column 'text'");
    const auto broad_col = column("broad_label");
    const auto specific_col = column("specific_label");

    std::vector<Document> docs;
    std::vector<std::size_t> records;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) {
            throw FormatError(source, r, "expected " + std::to_string(header.size()) + " fields, got " +
                                             std::to_string(row.size()));
        }
        Document doc;
        doc.id = row[*id_col];
        doc.text = row[*text_col];
        if (broad_col && !row[*broad_col].empty()) doc.broad_label = row[*broad_col];
        if (specific_col && !row[*specific_col].empty()) doc.specific_label = row[*specific_col];
        docs.push_back(std::move(doc));
        records.push_back(r);
    }
    return build_corpus(std::move(docs), source, records);
}

Corpus load_plain_dir(const std::filesystem::path& path) {
    if (!std::filesystem::is_directory(path)) throw Error("'" + path.string() + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Document> docs;
    for (const auto& file : files) {
        auto in = open_input(file);
        std::ostringstream text;
        text << in.rdbuf();
        Document doc;
        doc.id = file.filename().string();
        doc.text = text.str();
        docs.push_back(std::move(doc));
    }
    return Corpus(std::move(docs));
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    switch (format) {
        case CorpusFormat::jsonl: return load_jsonl(path);
        case CorpusFormat::csv: return load_csv(path);
        case CorpusFormat::plain_dir: return load_plain_dir(path);
    }
    throw InvalidArgument("unknown corpus format");
}

void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    for (const auto& doc : corpus.documents()) {
        json obj = {{"id", doc.id}, {"text", doc.text}};
        if (doc.broad_label) obj["broad_label"] = *doc.broad_label;
        if (doc.specific_label) obj["specific_label"] = *doc.specific_label;
        if (!doc.tokens.empty()) obj["tokens"] = doc.tokens;
        out << obj.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary(std::vector<std::string> entries, std::vector<std::size_t> doc_freq)
    : entries_(std::move(entries)), doc_freq_(std::move(doc_freq)) {
    if (doc_freq_.size() != entries_.size()) throw InvalidArgument("vocabulary: doc_freq size mismatch");
    index_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!index_.emplace(entries_[i], i).second) {
            throw InvalidArgument("vocabulary: duplicate entry '" + entries_[i] + "'");
        }
    }
}

std::optional<std::size_t> Vocabulary::id(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t Vocabulary::doc_freq(std::string_view word) const {
    auto i = id(word);
    return i ? doc_freq_[*i] : 0;
}

std::string Vocabulary::fingerprint() const {
    std::string joined;
    for (const auto& e : entries_) {
        joined += e;
        joined.push_back('\n');
    }
    return sha256_hex(joined);
}

PreprocessConfig PreprocessConfig::defaults() {
    PreprocessConfig config;
    config.stopwords = english_stopwords();
    return config;
}

const std::unordered_set<std::string>& english_stopwords() {
    static const std::unordered_set<std::string> words = {
        "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
        "are", "aren't", "as", "at", "be", "because", "been", "before", "being", "below", "between",
        "both", "but", "by", "can", "cannot", "could", "couldn't", "did", "didn't", "do", "does",
        "doesn't", "doing", "don't", "down", "during", "each", "few", "for", "from", "further", "had",
        "hadn't", "has", "hasn't", "have", "haven't", "having", "he", "he'd", "he'll", "he's", "her",
        "here", "here's", "hers", "herself", "him", "himself", "his", "how", "how's", "however", "i",
        "i'd", "i'll", "i'm", "i've", "if", "in", "into", "is", "isn't", "it", "it's", "its", "itself",
        "just", "let's", "may", "me", "might", "more", "most", "must", "mustn't", "my", "myself", "no",
        "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "ought", "our", "ours",
        "ourselves", "out", "over", "own", "same", "shall", "shan't", "she", "she'd", "she'll", "she's",
        "should", "shouldn't", "since", "so", "some", "such", "than", "that", "that's", "the", "their",
        "theirs", "them", "themselves", "then", "there", "there's", "these", "they", "they'd",
        "they'll", "they're", "they've", "this", "those", "though", "through", "thus", "to", "too",
        "under", "until", "up", "upon", "us", "very", "was", "wasn't", "we", "we'd", "we'll", "we're",
        "we've", "were", "weren't", "what", "what's", "when", "when's", "where", "where's", "whether",
        "which", "while", "who", "who's", "whom", "whose", "why", "why's", "will", "with", "within",
        "without", "won't", "would", "wouldn't", "yet", "you", "you'd", "you'll", "you're", "you've",
        "your", "yours", "yourself", "yourselves"};
    return words;
}

namespace {

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '\'' || c >= 0x80;
}

bool has_letter(std::string_view token) {
    return std::any_of(token.begin(), token.end(), [](unsigned char c) { return std::isalpha(c) || c >= 0x80; });
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        // Apostrophes only glue words together; strip them at the edges.
        std::size_t end = i;
        while (start < end && text[start] == '\'') ++start;
        while (end > start && text[end - 1] == '\'') --end;
        if (end > start) out.emplace_back(text.substr(start, end - start));
    }
    return out;
}

Preprocessed tokenize_and_prune(const Corpus& corpus, const PreprocessConfig& config) {
    std::vector<std::vector<std::string>> candidate(corpus.size());
    std::vector<std::string> order;
    std::unordered_map<std::string, std::size_t> df;

    for (std::size_t d = 0; d < corpus.size(); ++d) {
        std::unordered_set<std::string> in_doc;
        for (auto& word : split_words(corpus[d].text)) {
            if (config.lowercase) {
                std::transform(word.begin(), word.end(), word.begin(),
                               [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            }
            if (word.size() < config.min_token_length || !has_letter(word)) continue;
            if (config.stopwords.count(word)) continue;
            if (in_doc.insert(word).second) {
                auto [it, fresh] = df.emplace(word, 0);
                if (fresh) order.push_back(word);
                ++it->second;
            }
            candidate[d].push_back(std::move(word));
        }
    }

    std::vector<std::string> entries;
    std::vector<std::size_t> freqs;
    for (const auto& word : order) {
        const auto f = df[word];
        if (f >= config.min_df) {
            entries.push_back(word);
            freqs.push_back(f);
        }
    }
    if (entries.empty()) throw InvalidArgument("vocabulary is empty after pruning");

    Vocabulary vocab(std::move(entries), std::move(freqs));
    std::vector<Document> docs = corpus.documents();
    for (std::size_t d = 0; d < docs.size(); ++d) {
        docs[d].tokens.clear();
        for (auto& word : candidate[d]) {
            if (vocab.id(word)) docs[d].tokens.push_back(std::move(word));
        }
    }
    return {Corpus(std::move(docs)), std::move(vocab)};
}

std::vector<std::vector<int>> to_word_ids(const Corpus& corpus, const Vocabulary& vocab) {
    std::vector<std::vector<int>> out(corpus.size());
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        out[d].reserve(corpus[d].tokens.size());
        for (const auto& token : corpus[d].tokens) {
            if (auto id = vocab.id(token)) out[d].push_back(static_cast<int>(*id));
        }
    }
    return out;
}

std::string truncate_words(std::string_view text, std::size_t n_words) {
    if (n_words == 0) throw InvalidArgument("truncate: n_words must be >= 1");
    std::string out;
    std::size_t taken = 0;
    std::size_t i = 0;
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (taken < n_words) {
        while (i < text.size() && is_space(text[i])) ++i;
        if (i == text.size()) break;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (taken) out.push_back(' ');
        out.append(text.substr(start, i - start));
        ++taken;
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Dataset d) {
    switch (d) {
        case Dataset::nyt: return "nyt";
        case Dataset::wiki: return "wiki";
        case Dataset::other: return "other";
    }
    return "other";
}

Dataset parse_dataset(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "nyt" || lower == "nytimes") return Dataset::nyt;
    if (lower == "wiki" || lower == "wikitext") return Dataset::wiki;
    return Dataset::other;
}

std::vector<double> AnnotatedTopicSet::rating_scores() const {
    std::vector<double> out;
    out.reserve(ratings.size());
    for (const auto& r : ratings) out.push_back(r.score);
    return out;
}

std::vector<double> AnnotatedTopicSet::intrusion_outcomes() const {
    std::vector<double> out;
    out.reserve(intrusion_trials.size());
    for (const auto& t : intrusion_trials) out.push_back(t.correct() ? 1.0 : 0.0);
    return out;
}

namespace {

std::vector<std::string> string_array(const json& value, const std::string& what, const std::string& source,
                                      std::size_t record) {
    if (!value.is_array()) throw FormatError(source, record, what + " must be an array");
    std::vector<std::string> out;
    for (const auto& v : value) {
        if (!v.is_string()) throw FormatError(source, record, what + " must contain strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

AnnotatedTopicSet topic_from_json(const json& obj, const std::string& source, std::size_t record) {
    if (!obj.is_object()) throw FormatError(source, record, "expected a JSON object");
    AnnotatedTopicSet topic;
    try {
        if (auto id = obj.find("topic_id"); id != obj.end()) {
            topic.topic_id = id->is_string() ? id->get<std::string>() : id->dump();
        } else {
            topic.topic_id = std::to_string(record);
        }
        topic.topic_words = string_array(obj.at("topic_words"), "topic_words", source, record);
        if (topic.topic_words.size() != kAnnotatedTopicWords) {
            throw FormatError(source, record,
                              "topic_words must hold " + std::to_string(kAnnotatedTopicWords) + " words");
        }
        topic.dataset = parse_dataset(obj.at("dataset").get<std::string>());
        for (const auto& r : obj.value("ratings", json::array())) {
            Rating rating;
            rating.annotator_id = r.value("annotator_id", std::string());
            rating.score = r.at("score").get<int>();
            rating.confident = r.value("confident", true);
            if (rating.score < 1 || rating.score > 3) {
                throw FormatError(source, record, "rating " + std::to_string(rating.score) + " outside 1-3");
            }
            topic.ratings.push_back(std::move(rating));
        }
        for (const auto& t : obj.value("intrusion_trials", json::array())) {
            IntrusionTrial trial;
            trial.shown_words = string_array(t.at("shown_words"), "shown_words", source, record);
            trial.intruder = t.at("intruder").get<std::string>();
            trial.annotator_pick = t.at("annotator_pick").get<std::string>();
            trial.confident = t.value("confident", true);
            if (trial.shown_words.size() != kIntrusionShownWords) {
                throw FormatError(source, record, "intrusion trial must show 6 words");
            }
            if (std::find(trial.shown_words.begin(), trial.shown_words.end(), trial.intruder) ==
                trial.shown_words.end()) {
                throw FormatError(source, record, "intruder '" + trial.intruder + "' not among shown words");
            }
            topic.intrusion_trials.push_back(std::move(trial));
        }
    } catch (const json::exception& e) {
        throw FormatError(source, record, e.what());
    }
    return topic;
}

json topic_to_json(const AnnotatedTopicSet& topic) {
    json ratings = json::array();
    for (const auto& r : topic.ratings) {
        ratings.push_back({{"annotator_id", r.annotator_id}, {"score", r.score}, {"confident", r.confident}});
    }
    json trials = json::array();
    for (const auto& t : topic.intrusion_trials) {
        trials.push_back({{"shown_words", t.shown_words},
                          {"intruder", t.intruder},
                          {"annotator_pick", t.annotator_pick},
                          {"confident", t.confident}});
    }
    return {{"topic_id", topic.topic_id},
            {"topic_words", topic.topic_words},
            {"dataset", to_string(topic.dataset)},
            {"ratings", ratings},
            {"intrusion_trials", trials}};
}

}  // namespace

std::vector<AnnotatedTopicSet> load_annotated_topics(const std::filesystem::path& path) {
    auto in = open_input(path);
    const std::string source = path.string();
    std::vector<AnnotatedTopicSet> topics;

    in >> std::ws;
    if (in.peek() == '[') {
        json all;
        try {
            all = json::parse(in);
        } catch (const json::parse_error& e) {
            throw FormatError(source, 0, std::string("invalid JSON: ") + e.what());
        }
        for (std::size_t i = 0; i < all.size(); ++i) topics.push_back(topic_from_json(all[i], source, i));
        return topics;
    }

    std::string line;
    std::size_t record = 0;
    for (; std::getline(in, line); ++record) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError(source, record, std::string("invalid JSON: ") + e.what());
        }
        topics.push_back(topic_from_json(obj, source, record));
    }
    return topics;
}

void save_annotated_topics(const std::vector<AnnotatedTopicSet>& topics, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    for (const auto& topic : topics) out << topic_to_json(topic).dump() << '\n';
}

std::vector<AnnotatedTopicSet> confident_only(const std::vector<AnnotatedTopicSet>& topics) {
    std::vector<AnnotatedTopicSet> out = topics;
    for (auto& topic : out) {
        std::erase_if(topic.ratings, [](const Rating& r) { return !r.confident; });
        std::erase_if(topic.intrusion_trials, [](const IntrusionTrial& t) { return !t.confident; });
    }
    return out;
}

}  // namespace tmeval
