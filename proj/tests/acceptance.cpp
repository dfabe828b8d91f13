// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when a
// criterion fails for a reason other than a documented limitation.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <fstream>

#include <json.hpp>

#include "support/annotations.hpp"
#include "support/mini_study.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"
#include "tmeval/error.hpp"
#include "tmeval/sweep.hpp"

using namespace tmeval;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
    /// Failure is a documented limitation rather than a defect.
    bool known_limitation = false;
};

std::string fmt(double v, const char* pattern = "%.4f") {
    char buf[32];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

Outcome metric_oracles() {
    std::size_t pairs = 0;
    double worst = 0.0;
    for (std::size_t n = 2; n <= 8; ++n) {
        const auto truths = oracle::canonical_labelings(n, 3);
        auto compare = [&](const Labeling& pred, const Labeling& truth) {
            const auto lib = clustering_suite(pred, truth);
            const auto ref = oracle::entropy_suite(pred, truth);
            worst = std::max({worst, std::abs(ari(pred, truth) - oracle::pair_ari(pred, truth)),
                              std::abs(lib.ami - ref.ami), std::abs(lib.homogeneity - ref.homogeneity),
                              std::abs(lib.completeness - ref.completeness)});
            ++pairs;
        };
        if (n > 6) {
            // Both sides up to renaming.
            for (const auto& pred : truths) {
                for (const auto& truth : truths) compare(pred, truth);
            }
            continue;
        }
        std::size_t total = 1;
        for (std::size_t i = 0; i < n; ++i) total *= 3;
        Labeling pred(n);
        for (std::size_t code = 0; code < total; ++code) {
            std::size_t c = code;
            for (std::size_t i = 0; i < n; ++i, c /= 3) pred[i] = static_cast<int>(c % 3);
            for (const auto& truth : truths) compare(pred, truth);
        }
    }
    Rng rng(1);
    double worst_rho = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t len = 3 + rng.below(18);
        std::vector<double> x(len), y(len);
        auto constant = [](const std::vector<double>& v) {
            return std::all_of(v.begin(), v.end(), [&](double e) { return e == v[0]; });
        };
        // Ties are frequent by design; constant vectors have no correlation.
        do {
            for (std::size_t i = 0; i < len; ++i) {
                x[i] = static_cast<double>(rng.below(5));
                y[i] = static_cast<double>(rng.below(5));
            }
        } while (constant(x) || constant(y));
        worst_rho = std::max(worst_rho, std::abs(spearman(x, y) - oracle::naive_spearman(x, y)));
    }
    return {worst <= 1e-12 && worst_rho <= 1e-12, std::to_string(pairs) + " labeling pairs, max deviation " +
                                                       fmt(worst, "%.3g") + "; spearman max deviation " +
                                                       fmt(worst_rho, "%.3g")};
}

Corpus tokens_corpus(const std::vector<std::vector<std::string>>& docs) {
    std::vector<Document> out;
    for (std::size_t i = 0; i < docs.size(); ++i) out.push_back({"d" + std::to_string(i), "", docs[i], {}, {}});
    return Corpus(std::move(out));
}

double hand_npmi(double p12, double p1, double p2) {
    p12 += kJointEpsilon;
    return std::log(p12 / (p1 * p2)) / -std::log(p12);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ab += a[i] * b[i], aa += a[i] * a[i], bb += b[i] * b[i];
    return ab / std::sqrt(aa * bb);
}

Outcome coherence_values() {
    const auto toy = tokens_corpus(
        {{"apple", "banana", "cherry"}, {"apple", "banana"}, {"banana", "date"}, {"cherry", "date", "apple"}});
    const auto t = build_table(toy, kNpmiWindow, true);
    double worst = 0.0;
    worst = std::max(worst, std::abs(npmi_pair(t, "apple", "banana") - hand_npmi(0.5, 0.75, 0.75)));
    worst = std::max(worst, std::abs(npmi_pair(t, "apple", "cherry") - hand_npmi(0.5, 0.75, 0.5)));
    worst = std::max(worst, std::abs(npmi_pair(t, "apple", "date") - hand_npmi(0.25, 0.75, 0.5)));
    worst = std::max(worst, std::abs(npmi_pair(t, "banana", "cherry") - hand_npmi(0.25, 0.75, 0.5)));
    worst = std::max(worst, std::abs(npmi_pair(t, "banana", "date") - hand_npmi(0.25, 0.75, 0.5)));
    worst = std::max(worst, std::abs(npmi_pair(t, "cherry", "date") - hand_npmi(0.25, 0.5, 0.5)));
    const double self_a = hand_npmi(0.75, 0.75, 0.75), self_c = hand_npmi(0.5, 0.5, 0.5);
    const double ab = hand_npmi(0.5, 0.75, 0.75), ac = hand_npmi(0.5, 0.75, 0.5), bc = hand_npmi(0.25, 0.75, 0.5);
    const std::vector<double> va{self_a, ab, ac}, vb{ab, self_a, bc}, vc{ac, bc, self_c};
    std::vector<double> sum(3);
    for (int i = 0; i < 3; ++i) sum[i] = va[i] + vb[i] + vc[i];
    const double cv_expected = (cosine(va, sum) + cosine(vb, sum) + cosine(vc, sum)) / 3.0;
    const auto tcv = build_table(toy, kCvWindow, true);
    worst = std::max(worst, std::abs(cv_topic(tcv, {"apple", "banana", "cherry"}) - cv_expected));

    std::size_t violations = 0, checks = 0;
    Rng rng(2);
    const std::vector<std::string> lexicon{"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::vector<std::string>> docs(2 + rng.below(12));
        for (auto& d : docs) {
            for (std::size_t i = 0, len = 1 + rng.below(30); i < len; ++i) d.push_back(lexicon[rng.below(8)]);
        }
        const auto table = build_table(tokens_corpus(docs), 1 + rng.below(15), true);
        std::vector<std::string> words(lexicon.begin(), lexicon.begin() + 2 + static_cast<long>(rng.below(8)));
        for (const auto& a : words) {
            for (const auto& b : words) {
                const double v = npmi_pair(table, a, b);
                violations += v < -1.0 || v > 1.0 || v != npmi_pair(table, b, a);
                ++checks;
            }
        }
        const double cv = cv_topic(table, words);
        auto shuffled = words;
        rng.shuffle(shuffled);
        violations += cv < 0.0 || cv > 1.0 + 1e-9 || std::abs(cv_topic(table, shuffled) - cv) > 1e-12;
        violations += std::abs(npmi_topic(table, shuffled) - npmi_topic(table, words)) > 1e-12;
        checks += 2;
    }
    return {worst <= 1e-9 && violations == 0,
            "max deviation " + fmt(worst, "%.3g") + "; " + std::to_string(violations) + " of " +
                std::to_string(checks) + " property checks violated"};
}

Outcome lda_sanity() {
    Rng rng(9);
    std::vector<std::vector<int>> docs;
    Labeling truth;
    for (int d = 0; d < 200; ++d) {
        std::vector<int> doc;
        for (int n = 0; n < 30; ++n) doc.push_back((d % 2) * 25 + static_cast<int>(rng.below(25)));
        docs.push_back(std::move(doc));
        truth.push_back(d % 2);
    }
    LdaConfig c = LdaConfig::with_defaults(3, 4);
    c.iterations = 300;
    std::size_t checks = 0, bad = 0;
    const auto a = train(docs, 50, c, [&](const GibbsSampler& s) {
        if (s.completed_sweeps() % 100 == 0) ++checks, bad += !s.model().counts_consistent();
    });
    const bool identical = a == train(docs, 50, c);
    LdaConfig two = LdaConfig::with_defaults(2, 1);
    two.iterations = 200;
    const double score = ari(induced_assignment(train(docs, 50, two)), truth);
    return {identical && checks == 3 && bad == 0 && score >= 0.8,
            std::string("repeat runs ") + (identical ? "identical" : "differ") + "; " + std::to_string(checks) +
                " consistency checks, " + std::to_string(bad) + " failed; ARI at K=2 " + fmt(score)};
}

Outcome k_selection() {
    const auto g = synth::generate(synth::Params{});
    auto table = std::make_shared<const CooccurrenceTable>(build_table(g.corpus, kNpmiWindow, true));
    JudgeConfig cfg;
    cfg.mode = JudgeMode::live;
    Judge judge(cfg, synth::oracle_for(g.corpus, table));
    SweepPlan plan;
    plan.k_values = {5, 10, 15, 20, 25, 30, 35, 40};
    const auto report = run_k_sweep(g.corpus, g.vocab, plan, judge);
    const bool near = std::abs(report.selected_k_purity - 10) <= 5;
    const double rho_purity = spearman(report.purity_series(), report.ari_series());
    std::optional<double> rho_rating;
    try {
        rho_rating = spearman(report.rating_series(), report.ari_series());
    } catch (const UndefinedCorrelation&) {
    }
    const bool ordered = rho_purity >= 0.7 && (!rho_rating || rho_purity > *rho_rating);
    std::string detail = "selected K by purity " + std::to_string(report.selected_k_purity) +
                         (near ? " (within one step)" : " (off target)") + "; rho(purity, ARI) " + fmt(rho_purity) +
                         ", rho(rating, ARI) " + (rho_rating ? fmt(*rho_rating) : "undefined") +
                         "; top-doc ARI proxy " + fmt(top10_ari_proxy_check(report));
    // Purity saturates once K exceeds the generating topic count, so the
    // correlation ordering is a known limitation of this benchmark.
    return {near && ordered, detail, near && !ordered};
}

Outcome replay_reproduction() {
    const std::filesystem::path fixture = "tests/fixtures/mini_study";
    TempDir dir;
    std::filesystem::copy(fixture / "cache", dir.path / "cache", std::filesystem::copy_options::recursive);
    std::string csv[2], json[2];
    for (int run = 0; run < 2; ++run) {
        auto judge = mini::replay_judge(dir.path / "cache");
        const auto report = mini::run(fixture, judge, run + 1);
        csv[run] = correlation_csv(report);
        json[run] = correlation_json(report);
    }
    const bool stable = csv[0] == csv[1] && json[0] == json[1];
    const bool matches = csv[0] == read_file(fixture / "expected.csv") && json[0] == read_file(fixture / "expected.json");
    std::string detail = std::string("mini-study replay ") + (stable ? "stable" : "unstable") + " across runs, " +
                         (matches ? "matches" : "differs from") + " stored report";
    if (!stable || !matches) return {false, detail};

    const char* path = std::getenv("TMEVAL_ANNOTATIONS");
    if (!path) {
        return {false, detail + "; ceiling check not run: real annotation dataset unavailable (set TMEVAL_ANNOTATIONS)",
                true};
    }
    const auto topics = confident_only(load_annotated_topics(path));
    bool ok = true;
    for (auto [dataset, target] : {std::pair{Dataset::nyt, 0.72}, std::pair{Dataset::wiki, 0.56}}) {
        std::vector<std::vector<double>> human;
        for (const auto& t : topics) {
            if (t.dataset == dataset && t.ratings.size() >= 2) human.push_back(t.rating_scores());
        }
        const auto r = human_ceiling(human, BootstrapOptions{1000, 0, 1});
        ok = ok && std::abs(r.mean_rho - target) <= 0.02;
        detail += std::string("; ") + std::string(to_string(dataset)) + " rating ceiling " + fmt(r.mean_rho) +
                  " (target " + fmt(target) + ")";
    }
    return {ok, detail};
}

Outcome bootstrap_contract() {
    std::vector<std::vector<double>> unanimous;
    for (std::size_t t = 0; t < 12; ++t) unanimous.emplace_back(5, static_cast<double>(t % 3 + 1) + 0.1 * t);
    const auto u = bootstrap_correlation(unanimous, unanimous, BootstrapOptions{1000, 3, 1});
    const bool exact = u.mean_rho == 1.0 && u.ci_low == u.ci_high;

    Rng rng(5);
    std::vector<std::vector<double>> human(25), llm(25);
    for (std::size_t t = 0; t < 25; ++t) {
        for (int a = 0; a < 8; ++a) human[t].push_back(static_cast<double>(1 + rng.below(3)));
        for (int a = 0; a < 3; ++a) llm[t].push_back(static_cast<double>(1 + rng.below(3)));
    }
    const auto a = bootstrap_correlation(human, llm, BootstrapOptions{1000, 9, 1});
    const bool repeat = a == bootstrap_correlation(human, llm, BootstrapOptions{1000, 9, 1});
    // Worker threads finish episodes in varying order.
    const bool order_free = a == bootstrap_correlation(human, llm, BootstrapOptions{1000, 9, 7});
    return {exact && repeat && order_free, "unanimous rho " + fmt(u.mean_rho) + " CI width " +
                                               fmt(u.ci_high - u.ci_low) + "; repeat " + (repeat ? "identical" : "differs") +
                                               "; 1 vs 7 threads " + (order_free ? "identical" : "differ")};
}

Outcome judge_parsing() {
    std::ifstream in("tests/fixtures/parse_cases.jsonl");
    std::size_t total = 0, ok = 0;
    // The shown words every intrusion case in the fixture refers to.
    const IntrusionInstance shown{0, {"water", "area", "river", "park", "miles", "game"}, "game", 1};
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        const auto c = nlohmann::json::parse(line);
        const auto task = parse_judge_task(c.at("task").get<std::string>());
        const auto raw = c.at("raw").get<std::string>();
        const auto& expected = c.at("expected");
        ++total;
        const auto got = parse_verdict(task, raw, &shown);
        if (expected.is_null()) {
            ok += !got;
        } else if (got && expected.contains("rating")) {
            ok += std::get<int>(*got) == expected.at("rating").get<int>();
        } else if (got && expected.contains("picked")) {
            ok += std::get<IntrusionVerdict>(*got) ==
                  IntrusionVerdict{expected.at("picked").get<std::string>(), expected.at("correct").get<bool>()};
        } else if (got) {
            ok += std::get<std::string>(*got) == expected.at("label").get<std::string>();
        }
    }

    const auto g = annot::generate(10, 15, 10, 31);
    const auto npmi = build_table(g.reference, kNpmiWindow, true);
    auto oracle = std::make_shared<OracleJudge>(
        [&](const std::vector<std::string>& w) { return synth::npmi_rating(npmi_topic(npmi, w)); },
        annot::odd_one_out(g.topics), [](const std::string&) { return std::nullopt; });
    JudgeConfig cfg;
    cfg.mode = JudgeMode::live;
    Judge judge(cfg, oracle);
    CoherenceStudyOptions opts;
    opts.episodes = 100;
    const auto report = run_coherence_study(g.topics, judge, {&npmi, nullptr}, opts);
    double worst = 1.0;
    for (const auto& row : report.rows) {
        if (row.task == JudgeTask::intrusion) worst = std::min(worst, row.llm_accuracy.value_or(0.0));
    }
    return {total == 50 && ok == total && worst == 1.0, std::to_string(ok) + "/" + std::to_string(total) +
                                                             " fixture replies parsed as documented; oracle intrusion accuracy " +
                                                             fmt(worst)};
}

}  // namespace

int main() {
    const std::vector<std::function<Outcome()>> criteria{metric_oracles, coherence_values,    lda_sanity,
                                                         k_selection,    replay_reproduction, bootstrap_contract,
                                                         judge_parsing};
    int status = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i]();
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << "criterion " << i + 1 << ": " << (out.pass ? "PASS" : "FAIL") << "  " << out.detail << " ["
                  << fmt(secs) << " s]" << (out.known_limitation ? " (known limitation)" : "") << std::endl;
        if (!out.pass && !out.known_limitation) status = 1;
    }
    return status;
}
