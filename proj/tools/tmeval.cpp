#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "tmeval/error.hpp"
#include "tmeval/sweep.hpp"

using namespace tmeval;
namespace fs = std::filesystem;

namespace {

struct CorpusArgs {
    fs::path path;
    std::string format = "jsonl";
    std::size_t min_df = 5;
    std::size_t min_length = 3;
    bool keep_stopwords = false;

    void add(CLI::App* cmd) {
        cmd->add_option("--corpus", path, "Corpus file or directory")->required();
        cmd->add_option("--format", format, "jsonl, csv or plain_dir")->capture_default_str();
        cmd->add_option("--min-df", min_df, "Minimum document frequency")->capture_default_str();
        cmd->add_option("--min-length", min_length, "Minimum token length")->capture_default_str();
        cmd->add_flag("--keep-stopwords", keep_stopwords, "Do not remove English stopwords");
    }

    Preprocessed load() const {
        auto cfg = PreprocessConfig::defaults();
        cfg.min_df = min_df;
        cfg.min_token_length = min_length;
        if (keep_stopwords) cfg.stopwords.clear();
        return tokenize_and_prune(load_corpus(path, parse_corpus_format(format)), cfg);
    }
};

struct JudgeArgs {
    std::string mode = "replay";
    std::string model = QueryOptions{}.model_id;
    double temperature = 1.0;
    fs::path cache_dir = "judge-cache";
    std::string key_env = "OPENAI_API_KEY";
    std::string base_url;
    std::size_t concurrency = 4;
    long min_interval_ms = 0;

    void add(CLI::App* cmd) {
        cmd->add_option("--judge-mode", mode, "live, replay or record")->capture_default_str();
        cmd->add_option("--model", model, "Chat model id")->capture_default_str();
        cmd->add_option("--temperature", temperature)->capture_default_str();
        cmd->add_option("--cache-dir", cache_dir, "Response cache directory")->capture_default_str();
        cmd->add_option("--api-key-env", key_env, "Environment variable holding the API key")->capture_default_str();
        cmd->add_option("--base-url", base_url, "Chat completions endpoint base URL");
        cmd->add_option("--concurrency", concurrency)->capture_default_str();
        cmd->add_option("--min-interval-ms", min_interval_ms, "Spacing between live requests")->capture_default_str();
    }

    std::unique_ptr<Judge> make() const {
        JudgeConfig cfg;
        cfg.mode = parse_judge_mode(mode);
        cfg.query.model_id = model;
        cfg.query.temperature = temperature;
        cfg.cache_dir = cache_dir;
        cfg.concurrency = concurrency;
        cfg.min_interval = std::chrono::milliseconds(min_interval_ms);
        std::shared_ptr<JudgeClient> client;
        if (cfg.mode != JudgeMode::replay) client = ChatCompletionsClient::from_environment(key_env, base_url);
        return std::make_unique<Judge>(cfg, client);
    }
};

fs::path model_file(const fs::path& dir, std::size_t k) { return dir / ("model-K" + std::to_string(k) + ".jsonl"); }

void print_paths(const std::vector<fs::path>& paths) {
    for (const auto& p : paths) std::cout << p.string() << "\n";
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// id,label per line with an optional header.
std::map<std::string, std::string> load_label_file(const fs::path& path) {
    std::map<std::string, std::string> out;
    std::istringstream in(slurp(path));
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (line_no == 1 && line == "id,label")) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError(path.string(), line_no - 1, "expected id,label");
        out[line.substr(0, comma)] = line.substr(comma + 1);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Topic model evaluation with LLM judges"};
    app.require_subcommand(1);

    // train-sweep
    CorpusArgs train_corpus;
    std::vector<std::size_t> train_ks = SweepPlan::default_k_grid();
    std::size_t train_iterations = 1000;
    std::uint64_t train_seed = 1;
    fs::path train_out = "models";
    auto* train_cmd = app.add_subcommand("train-sweep", "Train one LDA model per K and save snapshots");
    train_corpus.add(train_cmd);
    train_cmd->add_option("--k", train_ks, "K grid")->delimiter(',');
    train_cmd->add_option("--iterations", train_iterations)->capture_default_str();
    train_cmd->add_option("--seed", train_seed)->capture_default_str();
    train_cmd->add_option("--out", train_out, "Snapshot directory")->capture_default_str();

    // k-sweep
    CorpusArgs sweep_corpus;
    JudgeArgs sweep_judge;
    SweepPlan plan;
    std::string granularity = "broad";
    fs::path models_dir, sweep_out = "out";
    bool sweep_svg_flag = false;
    auto* sweep_cmd = app.add_subcommand("k-sweep", "Rate and label topics across a K grid");
    sweep_corpus.add(sweep_cmd);
    sweep_judge.add(sweep_cmd);
    sweep_cmd->add_option("--k", plan.k_values, "K grid")->delimiter(',');
    sweep_cmd->add_option("--granularity", granularity, "broad or narrow")->capture_default_str();
    sweep_cmd->add_option("--topics-per-k", plan.topics_sampled_per_k)->capture_default_str();
    sweep_cmd->add_option("--docs-per-topic", plan.docs_per_topic)->capture_default_str();
    sweep_cmd->add_option("--smoothing", plan.smoothing_window)->capture_default_str();
    sweep_cmd->add_option("--iterations", plan.lda_iterations)->capture_default_str();
    sweep_cmd->add_option("--seed-lda", plan.seeds.lda)->capture_default_str();
    sweep_cmd->add_option("--seed-sampling", plan.seeds.sampling)->capture_default_str();
    sweep_cmd->add_option("--seed-prompts", plan.seeds.prompts)->capture_default_str();
    sweep_cmd->add_option("--workers", plan.workers)->capture_default_str();
    sweep_cmd->add_option("--corpus-description", plan.corpus_description)->capture_default_str();
    sweep_cmd->add_option("--models", models_dir, "Reuse snapshots written by train-sweep");
    sweep_cmd->add_option("--out", sweep_out)->capture_default_str();
    sweep_cmd->add_flag("--svg", sweep_svg_flag, "Also write an SVG chart");

    // coherence-study
    fs::path annotations, reference, study_out = "out";
    std::string reference_format = "jsonl";
    JudgeArgs study_judge;
    CoherenceStudyOptions study;
    bool all_ratings = false;
    auto* study_cmd = app.add_subcommand("coherence-study", "Correlate judge scores with human annotations");
    study_cmd->add_option("--annotations", annotations, "Annotated topics (jsonl or json array)")->required();
    study_cmd->add_option("--reference", reference, "Reference corpus for NPMI and C_v");
    study_cmd->add_option("--reference-format", reference_format)->capture_default_str();
    study_judge.add(study_cmd);
    study_cmd->add_option("--episodes", study.episodes)->capture_default_str();
    study_cmd->add_option("--seed", study.seed)->capture_default_str();
    study_cmd->add_option("--prompt-seed", study.prompt_seed)->capture_default_str();
    study_cmd->add_option("--intrusion-reps", study.intrusion_repetitions)->capture_default_str();
    study_cmd->add_option("--threads", study.threads)->capture_default_str();
    study_cmd->add_flag("--all-ratings", all_ratings, "Keep annotations marked not confident");
    study_cmd->add_flag("--minimal-prompt", study.minimal_prompt, "Use the prompts without task description");
    study_cmd->add_option("--out", study_out)->capture_default_str();

    // label-eval
    fs::path labels_file, truth_corpus;
    std::string truth_format = "jsonl", label_granularity = "broad";
    auto* label_cmd = app.add_subcommand("label-eval", "Compare assigned document labels with ground truth");
    label_cmd->add_option("--labels", labels_file, "CSV of id,label")->required();
    label_cmd->add_option("--corpus", truth_corpus, "Labeled corpus")->required();
    label_cmd->add_option("--format", truth_format)->capture_default_str();
    label_cmd->add_option("--granularity", label_granularity)->capture_default_str();

    // report
    fs::path report_in, report_out = "out";
    bool report_svg = false;
    auto* report_cmd = app.add_subcommand("report", "Re-render a JSON report as CSV, JSON and SVG");
    report_cmd->add_option("--input", report_in)->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--out", report_out)->capture_default_str();
    report_cmd->add_flag("--svg", report_svg);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) {
            const auto data = train_corpus.load();
            fs::create_directories(train_out);
            for (auto k : train_ks) {
                auto cfg = LdaConfig::with_defaults(k, train_seed);
                cfg.iterations = train_iterations;
                save_model(train(data.corpus, data.vocabulary, cfg), model_file(train_out, k));
                std::cerr << "trained K=" << k << "\n";
            }
        } else if (*sweep_cmd) {
            const auto data = sweep_corpus.load();
            plan.granularity = parse_granularity(granularity);
            auto judge = sweep_judge.make();
            ModelSource source;
            if (!models_dir.empty()) {
                source = [&](std::size_t k) {
                    const auto path = model_file(models_dir, k);
                    if (!fs::exists(path)) return train(data.corpus, data.vocabulary, plan.lda_config(k));
                    auto model = load_model(path);
                    if (model.vocab_fingerprint() != data.vocabulary.fingerprint()) {
                        throw InvalidArgument(path.string() + " was trained on a different vocabulary");
                    }
                    return model;
                };
            }
            const auto report = run_k_sweep(data.corpus, data.vocabulary, plan, *judge, source);
            print_paths(emit_report(report, sweep_out, "k-sweep", {sweep_svg_flag}));
        } else if (*study_cmd) {
            auto topics = load_annotated_topics(annotations);
            study.confident_only = !all_ratings;
            std::optional<CooccurrenceTable> npmi, cv;
            if (!reference.empty()) {
                const auto ref = load_corpus(reference, parse_corpus_format(reference_format));
                auto cfg = PreprocessConfig::defaults();
                cfg.min_df = 1;
                const auto tokenized = ref.documents().front().tokens.empty() ? tokenize_and_prune(ref, cfg).corpus : ref;
                npmi = build_table(tokenized, kNpmiWindow, true);
                cv = build_table(tokenized, kCvWindow, true);
            }
            auto judge = study_judge.make();
            const auto report = run_coherence_study(topics, *judge, {npmi ? &*npmi : nullptr, cv ? &*cv : nullptr}, study);
            print_paths(emit_report(report, study_out, "coherence-study"));
        } else if (*label_cmd) {
            const auto corpus = load_corpus(truth_corpus, parse_corpus_format(truth_format));
            const auto g = parse_granularity(label_granularity);
            std::map<std::string, std::string> truth;
            for (const auto& doc : corpus.documents()) {
                if (auto l = doc.label(g)) truth[doc.id] = *l;
            }
            const auto r = evaluate_label_assignment(load_label_file(labels_file), truth);
            std::cout << nlohmann::json{{"ari", r.ari}, {"ami", r.ami}, {"documents", truth.size()}}.dump(2) << "\n";
        } else if (*report_cmd) {
            const auto text = slurp(report_in);
            const auto format = nlohmann::json::parse(text).value("format", "");
            const auto stem = report_in.stem().string();
            if (format == "tmeval-sweep-report") {
                print_paths(emit_report(sweep_report_from_json(text), report_out, stem, {report_svg}));
            } else if (format == "tmeval-correlation-report") {
                print_paths(emit_report(correlation_report_from_json(text), report_out, stem));
            } else {
                throw FormatError(report_in.string(), 0, "unknown report format '" + format + "'");
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
