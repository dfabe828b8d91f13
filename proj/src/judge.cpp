#include "tmeval/judge.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tmeval/digest.hpp"
#include "tmeval/error.hpp"

namespace tmeval {

using nlohmann::json;

std::string_view to_string(JudgeMode mode) {
    switch (mode) {
        case JudgeMode::live: return "live";
        case JudgeMode::replay: return "replay";
        case JudgeMode::record: return "record";
    }
    return "replay";
}

JudgeMode parse_judge_mode(std::string_view text) {
    if (text == "live") return JudgeMode::live;
    if (text == "replay") return JudgeMode::replay;
    if (text == "record") return JudgeMode::record;
    throw InvalidArgument("unknown judge mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

OracleJudge::OracleJudge(RateFn rate, std::unordered_set<std::string> intruders, LabelFn label)
    : rate_(std::move(rate)), label_(std::move(label)) {
    pick_ = [intruders = std::move(intruders)](const std::vector<std::string>& shown) -> std::optional<std::string> {
        for (const auto& w : shown) {
            if (intruders.count(w)) return w;
        }
        return std::nullopt;
    };
}

OracleJudge::OracleJudge(RateFn rate, PickFn pick, LabelFn label)
    : rate_(std::move(rate)), pick_(std::move(pick)), label_(std::move(label)) {}

std::string OracleJudge::complete(const RenderedPrompt& prompt, const QueryOptions&) {
    switch (prompt.task) {
        case JudgeTask::rating: {
            if (!rate_) return "no rating available";
            return std::to_string(rate_(split_word_list(prompt.user)));
        }
        case JudgeTask::intrusion: {
            if (!pick_) return "none of these";
            return pick_(split_word_list(prompt.user)).value_or("none of these");
        }
        case JudgeTask::doc_label: {
            if (!label_) return "";
            return label_(prompt.user).value_or("");
        }
    }
    return {};
}

// ---------------------------------------------------------------------------

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json verdict_to_json(const std::optional<Verdict>& verdict) {
    if (!verdict) return nullptr;
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, int>) {
                return {{"rating", v}};
            } else if constexpr (std::is_same_v<T, IntrusionVerdict>) {
                return {{"picked", v.picked}, {"correct", v.correct}};
            } else {
                return {{"label", v}};
            }
        },
        *verdict);
}

std::optional<Verdict> verdict_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    if (j.contains("rating")) return Verdict{j.at("rating").get<int>()};
    if (j.contains("picked")) {
        return Verdict{IntrusionVerdict{j.at("picked").get<std::string>(), j.at("correct").get<bool>()}};
    }
    return Verdict{j.at("label").get<std::string>()};
}

json record_to_json(const JudgeRecord& r) {
    return {{"key", r.cache_key},
            {"template_id", r.template_id},
            {"task", to_string(r.task)},
            {"model_id", r.model_id},
            {"temperature", r.temperature},
            {"repetition", r.repetition},
            {"system", r.system_prompt},
            {"user", r.user_prompt},
            {"raw_response", r.raw_response},
            {"parsed", verdict_to_json(r.parsed)},
            {"timestamp", r.timestamp}};
}

JudgeRecord record_from_json(const json& j) {
    JudgeRecord r;
    r.cache_key = j.at("key").get<std::string>();
    r.template_id = j.at("template_id").get<std::string>();
    r.task = parse_judge_task(j.at("task").get<std::string>());
    r.model_id = j.at("model_id").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    r.repetition = j.at("repetition").get<std::size_t>();
    r.system_prompt = j.at("system").get<std::string>();
    r.user_prompt = j.at("user").get<std::string>();
    r.raw_response = j.at("raw_response").get<std::string>();
    r.parsed = verdict_from_json(j.at("parsed"));
    r.timestamp = j.value("timestamp", "");
    return r;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string cache_key(const RenderedPrompt& prompt, const QueryOptions& options, std::size_t repetition) {
    std::string material;
    const char sep = '\x1f';
    material += prompt.template_id + sep + prompt.system + sep + prompt.user + sep + options.model_id + sep +
                format_double(options.temperature) + sep + std::to_string(repetition);
    return sha256_hex(material);
}

ResponseCache::ResponseCache(std::filesystem::path root, bool create) : root_(std::move(root)) {
    namespace fs = std::filesystem;
    const auto manifest = root_ / "manifest.json";
    if (!fs::exists(manifest)) {
        if (!create) throw Error("no judge cache at '" + root_.string() + "'");
        fs::create_directories(root_ / "records");
        std::ofstream out(manifest, std::ios::binary);
        out << json{{"format", "tmeval-judge-cache"}, {"version", kVersion}, {"index", "index.jsonl"}}.dump(2) << '\n';
        std::ofstream(root_ / "index.jsonl", std::ios::app);
        return;
    }
    std::ifstream in(manifest, std::ios::binary);
    json m;
    try {
        m = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(manifest.string(), 0, e.what());
    }
    if (m.value("format", "") != "tmeval-judge-cache" || m.value("version", 0) != kVersion) {
        throw FormatError(manifest.string(), 0, "unsupported judge cache manifest");
    }
}

std::filesystem::path ResponseCache::record_path(const std::string& key) const {
    return root_ / "records" / key.substr(0, 2) / (key + ".json");
}

std::optional<JudgeRecord> ResponseCache::find(const std::string& key) const {
    std::shared_lock lock(mutex_);
    const auto path = record_path(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    try {
        auto record = record_from_json(json::parse(in));
        if (record.cache_key != key) throw FormatError(path.string(), 0, "record key does not match its file name");
        return record;
    } catch (const json::exception& e) {
        throw FormatError(path.string(), 0, e.what());
    }
}

void ResponseCache::store(const JudgeRecord& record) {
    std::unique_lock lock(mutex_);
    const auto path = record_path(record.cache_key);
    const bool fresh = !std::filesystem::exists(path);
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << record_to_json(record).dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
    if (fresh) {
        std::ofstream index(root_ / "index.jsonl", std::ios::binary | std::ios::app);
        index << json{{"key", record.cache_key}, {"task", to_string(record.task)}, {"template_id", record.template_id}}
                     .dump()
              << '\n';
    }
}

std::vector<std::string> ResponseCache::keys() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    std::ifstream in(root_ / "index.jsonl", std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(json::parse(line).at("key").get<std::string>());
    }
    return out;
}

// ---------------------------------------------------------------------------

Judge::Judge(JudgeConfig config, std::shared_ptr<JudgeClient> client)
    : config_(std::move(config)), client_(std::move(client)) {
    if (config_.mode != JudgeMode::replay && !client_) {
        throw InvalidArgument("judge: " + std::string(to_string(config_.mode)) + " mode needs a client");
    }
    if (config_.mode != JudgeMode::live) {
        if (config_.cache_dir.empty()) throw InvalidArgument("judge: replay and record modes need a cache directory");
        cache_ = std::make_unique<ResponseCache>(config_.cache_dir, config_.mode == JudgeMode::record);
    }
    if (config_.concurrency == 0) config_.concurrency = 1;
}

void Judge::wait_for_slot() {
    if (config_.min_interval.count() <= 0) return;
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(rate_mutex_);
        const auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_slot_);
        next_slot_ = slot + config_.min_interval;
    }
    std::this_thread::sleep_until(slot);
}

std::string Judge::call_with_retry(const RenderedPrompt& prompt) {
    long backoff = config_.retry.initial_backoff_ms;
    for (int attempt = 1;; ++attempt) {
        wait_for_slot();
        try {
            {
                std::lock_guard lock(stats_mutex_);
                ++stats_.client_calls;
            }
            return client_->complete(prompt, config_.query);
        } catch (const TransportError& e) {
            const long next = std::min<long>(static_cast<long>(backoff * config_.retry.multiplier),
                                             config_.retry.max_backoff_ms);
            if (!e.retriable() || attempt >= config_.retry.max_attempts) {
                throw TransportError(e.what(), attempt, backoff, e.retriable());
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff = next;
        }
    }
}

void Judge::count_verdict(const JudgeRecord& record) {
    std::lock_guard lock(stats_mutex_);
    if (record.parsed) {
        ++stats_.parsed;
    } else {
        ++stats_.unparseable;
        ++stats_.unparseable_by_task[std::string(to_string(record.task))];
    }
}

JudgeRecord Judge::query(const RenderedPrompt& prompt, std::size_t repetition, const IntrusionInstance* instance) {
    const auto key = cache_key(prompt, config_.query, repetition);
    {
        std::lock_guard lock(stats_mutex_);
        ++stats_.queries;
    }
    if (cache_) {
        if (auto hit = cache_->find(key)) {
            {
                std::lock_guard lock(stats_mutex_);
                ++stats_.cache_hits;
            }
            // Re-parse so parser fixes apply to old recordings.
            hit->parsed = parse_verdict(hit->task, hit->raw_response, instance);
            count_verdict(*hit);
            return std::move(*hit);
        }
        if (config_.mode == JudgeMode::replay) throw ReplayMiss(key);
    }

    JudgeRecord record;
    record.cache_key = key;
    record.template_id = prompt.template_id;
    record.task = prompt.task;
    record.model_id = config_.query.model_id;
    record.temperature = config_.query.temperature;
    record.repetition = repetition;
    record.system_prompt = prompt.system;
    record.user_prompt = prompt.user;
    record.raw_response = call_with_retry(prompt);
    record.parsed = parse_verdict(prompt.task, record.raw_response, instance);
    record.timestamp = utc_timestamp();
    if (config_.mode == JudgeMode::record) cache_->store(record);
    count_verdict(record);
    return record;
}

std::vector<JudgeRecord> Judge::query_batch(const std::vector<QueryRequest>& requests) {
    std::vector<JudgeRecord> results(requests.size());
    std::vector<std::exception_ptr> errors(requests.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) {
            try {
                const auto& r = requests[i];
                results[i] = query(r.prompt, r.repetition, r.instance ? &*r.instance : nullptr);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(config_.concurrency, std::max<std::size_t>(1, requests.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

JudgeStats Judge::stats() const {
    std::lock_guard lock(stats_mutex_);
    return stats_;
}

}  // namespace tmeval
