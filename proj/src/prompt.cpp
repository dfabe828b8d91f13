#include <algorithm>
#include <fstream>
#include <sstream>

#include "tmeval/error.hpp"
#include "tmeval/judge.hpp"

namespace tmeval {

std::string_view to_string(JudgeTask task) {
    switch (task) {
        case JudgeTask::rating: return "rating";
        case JudgeTask::intrusion: return "intrusion";
        case JudgeTask::doc_label: return "doc_label";
    }
    return "rating";
}

JudgeTask parse_judge_task(std::string_view text) {
    if (text == "rating") return JudgeTask::rating;
    if (text == "intrusion") return JudgeTask::intrusion;
    if (text == "doc_label" || text == "doc-label") return JudgeTask::doc_label;
    throw InvalidArgument("unknown judge task '" + std::string(text) + "'");
}

std::string format_example_labels(const std::vector<std::string>& labels) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i > 0) out += (i + 1 == labels.size()) ? " and " : ", ";
        out += "\"" + labels[i] + "\"";
    }
    return out;
}

std::map<std::string, std::string> PromptTemplate::bindings() const {
    std::map<std::string, std::string> out;
    if (dataset_description) out["dataset_description"] = *dataset_description;
    if (granularity) out["granularity"] = std::string(to_string(*granularity));
    if (example_labels) out["example_labels"] = format_example_labels(*example_labels);
    return out;
}

std::string render_text(std::string_view text, const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
            out.push_back('{');
            ++i;
        } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
            out.push_back('}');
            ++i;
        } else if (c == '{') {
            const auto close = text.find('}', i);
            if (close == std::string_view::npos) throw InvalidArgument("template: unterminated placeholder");
            const std::string name(text.substr(i + 1, close - i - 1));
            auto it = bindings.find(name);
            if (it == bindings.end()) throw InvalidArgument("template: placeholder {" + name + "} is unbound");
            out += it->second;
            i = close;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

namespace {

constexpr const char* kWordTaskPreamble =
    "You are a helpful assistant evaluating the top words of a topic model output for a given topic. ";
constexpr const char* kRatingInstruction =
    "Please rate how related the following words are to each other on a scale from 1 to 3 "
    "(\"1\" = not very related, \"2\" = moderately related, \"3\" = very related).";
constexpr const char* kRatingReply = "Reply with a single number, indicating the overall appropriateness of the topic.";
constexpr const char* kIntrusionInstruction =
    "Select which word is the least related to all other words. If multiple words do not fit, "
    "choose the word that is most out of place.";
constexpr const char* kIntrusionReply = "Reply with a single word.";

}  // namespace

std::vector<std::string> builtin_template_ids() {
    return {"rating", "rating-minimal", "intrusion", "intrusion-minimal", "rating-k", "doc-label"};
}

PromptTemplate builtin_template(std::string_view id) {
    PromptTemplate t;
    t.id = std::string(id);
    const std::string rating = std::string(kWordTaskPreamble) + kRatingInstruction;
    const std::string intrusion = std::string(kWordTaskPreamble) + kIntrusionInstruction;
    if (id == "rating") {
        t.task = JudgeTask::rating;
        t.system_text = rating + "\n{dataset_description}\n" + kRatingReply;
        t.user_text = "{words}";
    } else if (id == "rating-minimal") {
        t.task = JudgeTask::rating;
        t.system_text = rating + "\n" + kRatingReply;
        t.user_text = "{words}";
    } else if (id == "intrusion") {
        t.task = JudgeTask::intrusion;
        t.system_text = intrusion + "\n{dataset_description}\n" + kIntrusionReply;
        t.user_text = "{words}";
    } else if (id == "intrusion-minimal") {
        t.task = JudgeTask::intrusion;
        t.system_text = intrusion + "\n" + kIntrusionReply;
        t.user_text = "{words}";
    } else if (id == "rating-k") {
        t.task = JudgeTask::rating;
        t.system_text = rating +
                        "\nThe topic modeling is based on {dataset_description}. We are interested in coherent "
                        "{granularity} topics. Typical topics in the dataset include {example_labels}.\n" +
                        kRatingReply;
        t.user_text = "{words}";
    } else if (id == "doc-label") {
        t.task = JudgeTask::doc_label;
        t.system_text =
            "You are a helpful research assistant with lots of knowledge about topic models. You are given a "
            "document assigned to a topic by a topic model. Annotate the document with a {granularity} label, "
            "for example {example_labels}.\n"
            "Reply with a single word or phrase, indicating the label of the document.";
        t.user_text = "{document}";
    } else {
        throw InvalidArgument("unknown prompt template '" + std::string(id) + "'");
    }
    return t;
}

std::string dataset_description(Dataset dataset) {
    switch (dataset) {
        case Dataset::nyt:
            return "The topic modeling is based on The New York Times corpus. The corpus consists of articles from "
                   "1987 to 2007. Sections from a typical paper include International, National, New York Regional, "
                   "Business, Technology, and Sports news; features on topics such as Dining, Movies, Travel, and "
                   "Fashion; there are also obituaries and opinion pieces.";
        case Dataset::wiki:
            return "The topic modeling is based on the Wikipedia corpus. Wikipedia is an online encyclopedia covering "
                   "a huge range of topics. Articles can include biographies (\"George Washington\"), scientific "
                   "phenomena (\"Solar Eclipse\"), art pieces (\"La Danse\"), music (\"Amazing Grace\"), "
                   "transportation (\"U.S. Route 131\"), sports (\"1952 winter olympics\"), historical events or "
                   "periods (\"Tang Dynasty\"), media and pop culture (\"The Simpsons Movie\"), places (\"Yosemite "
                   "National Park\"), plants and animals (\"koala\"), and warfare (\"USS Nevada (BB-36)\"), among "
                   "others.";
        case Dataset::other: return {};
    }
    return {};
}

PromptTemplate load_template(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    const std::string source = path.string();
    PromptTemplate t;
    enum class Section { header, system, user } section = Section::header;
    std::string system, user;
    std::string line;
    std::size_t record = 0;
    bool have_task = false;
    for (; std::getline(in, line); ++record) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == "[system]") {
            section = Section::system;
            continue;
        }
        if (line == "[user]") {
            section = Section::user;
            continue;
        }
        switch (section) {
            case Section::header: {
                if (line.empty() || line[0] == '#') break;
                const auto colon = line.find(':');
                if (colon == std::string::npos) throw FormatError(source, record, "expected 'key: value'");
                const std::string key = line.substr(0, colon);
                std::string value = line.substr(colon + 1);
                value.erase(0, value.find_first_not_of(' '));
                if (key == "id") {
                    t.id = value;
                } else if (key == "task") {
                    t.task = parse_judge_task(value);
                    have_task = true;
                } else {
                    throw FormatError(source, record, "unknown header key '" + key + "'");
                }
                break;
            }
            case Section::system: system += line + "\n"; break;
            case Section::user: user += line + "\n"; break;
        }
    }
    if (!have_task) throw FormatError(source, 0, "missing 'task' header");
    if (t.id.empty()) t.id = path.stem().string();
    if (!system.empty()) system.pop_back();
    if (!user.empty()) user.pop_back();
    t.system_text = std::move(system);
    t.user_text = std::move(user);
    return t;
}

std::string format_template_file(const PromptTemplate& tmpl) {
    std::ostringstream out;
    out << "id: " << tmpl.id << "\ntask: " << to_string(tmpl.task) << "\n[system]\n"
        << tmpl.system_text << "\n[user]\n"
        << tmpl.user_text << "\n";
    return out.str();
}

namespace {

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out += ", ";
        out += words[i];
    }
    return out;
}

RenderedPrompt render(const PromptTemplate& tmpl, const std::string& name, const std::string& value) {
    auto bindings = tmpl.bindings();
    bindings[name] = value;
    return {tmpl.id, tmpl.task, render_text(tmpl.system_text, bindings), render_text(tmpl.user_text, bindings)};
}

}  // namespace

RenderedPrompt build_rating_prompt(const std::vector<std::string>& words, const PromptTemplate& tmpl, Rng& rng) {
    if (tmpl.task != JudgeTask::rating) throw InvalidArgument("rating prompt needs a rating template");
    if (words.size() != kIntrusionTopWords) throw InvalidArgument("rating prompt needs exactly 10 words");
    auto shuffled = words;
    rng.shuffle(shuffled);
    return render(tmpl, "words", join_words(shuffled));
}

IntrusionInstance build_intrusion_instance(const std::vector<std::vector<std::string>>& ranked_words,
                                           std::size_t topic, Rng& rng, std::size_t exclusion_depth) {
    if (ranked_words.size() < 2) throw InvalidArgument("intrusion: need at least two topics");
    if (topic >= ranked_words.size()) throw InvalidArgument("intrusion: topic index out of range");
    const auto& own = ranked_words[topic];
    if (own.size() < 5) throw InvalidArgument("intrusion: topic " + std::to_string(topic) + " has fewer than 5 words");

    IntrusionInstance instance;
    instance.topic = topic;
    const std::size_t pool = std::min(own.size(), kIntrusionTopWords);
    for (auto i : rng.sample_without_replacement(pool, 5)) instance.shown_words.push_back(own[i]);

    const std::unordered_set<std::string> excluded(
        own.begin(), own.begin() + static_cast<std::ptrdiff_t>(std::min(own.size(), exclusion_depth)));
    std::vector<std::size_t> others;
    for (std::size_t k = 0; k < ranked_words.size(); ++k) {
        if (k != topic) others.push_back(k);
    }
    rng.shuffle(others);
    bool found = false;
    for (auto k : others) {
        std::vector<std::string> candidates;
        const auto& words = ranked_words[k];
        for (std::size_t i = 0; i < words.size() && i < kIntrusionTopWords; ++i) {
            if (!excluded.count(words[i])) candidates.push_back(words[i]);
        }
        if (candidates.empty()) continue;
        instance.intruder = candidates[rng.below(candidates.size())];
        instance.source_topic = k;
        found = true;
        break;
    }
    if (!found) throw InvalidArgument("intrusion: no eligible intruder for topic " + std::to_string(topic));
    instance.shown_words.push_back(instance.intruder);
    rng.shuffle(instance.shown_words);
    return instance;
}

IntrusionInstance build_intrusion_instance(const TopicModel& model, const Vocabulary& vocab, std::size_t topic,
                                           Rng& rng) {
    std::vector<std::vector<std::string>> ranked(model.num_topics());
    for (std::size_t k = 0; k < model.num_topics(); ++k) {
        ranked[k] = top_words(model, vocab, k, kIntrusionExclusionDepth);
    }
    return build_intrusion_instance(ranked, topic, rng);
}

RenderedPrompt build_intrusion_prompt(const IntrusionInstance& instance, const PromptTemplate& tmpl) {
    if (tmpl.task != JudgeTask::intrusion) throw InvalidArgument("intrusion prompt needs an intrusion template");
    return render(tmpl, "words", join_words(instance.shown_words));
}

RenderedPrompt build_label_prompt(std::string_view document_text, const PromptTemplate& tmpl) {
    if (tmpl.task != JudgeTask::doc_label) throw InvalidArgument("label prompt needs a doc_label template");
    return render(tmpl, "document", std::string(document_text));
}

std::vector<std::string> split_word_list(std::string_view user_text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= user_text.size()) {
        auto end = user_text.find(", ", start);
        if (end == std::string_view::npos) end = user_text.size();
        out.emplace_back(user_text.substr(start, end - start));
        start = end + 2;
    }
    return out;
}

}  // namespace tmeval
