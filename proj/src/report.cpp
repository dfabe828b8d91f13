#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tmeval/error.hpp"
#include "tmeval/sweep.hpp"

namespace tmeval {

using nlohmann::json;

namespace {

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fixed(const std::optional<double>& v) { return v ? fixed(*v) : std::string(); }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

json boot_json(const std::optional<BootstrapResult>& b) {
    if (!b) return nullptr;
    return {{"mean_rho", b->mean_rho},
            {"ci_low", b->ci_low},
            {"ci_high", b->ci_high},
            {"episodes", b->episodes},
            {"undefined_episodes", b->undefined_episodes}};
}

std::optional<BootstrapResult> boot_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    const auto& b = j.at(key);
    BootstrapResult r;
    r.mean_rho = b.at("mean_rho").get<double>();
    r.ci_low = b.at("ci_low").get<double>();
    r.ci_high = b.at("ci_high").get<double>();
    r.episodes = b.at("episodes").get<std::size_t>();
    r.undefined_episodes = b.at("undefined_episodes").get<std::size_t>();
    return r;
}

json parse_report(const std::string& text, const char* format) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(format, 0, e.what());
    }
    if (j.value("format", "") != format) throw FormatError(format, 0, "unexpected report format");
    return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

void prepare_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create '" + dir.string() + "': " + ec.message());
}

}  // namespace

std::string sweep_csv(const SweepReport& report) {
    std::ostringstream out;
    out << "K,mean_rating,mean_purity,ari,ami,homogeneity,completeness,smoothed_rating,smoothed_purity\n";
    for (const auto& r : report.rows) {
        out << r.k << ',' << fixed(r.mean_rating) << ',' << fixed(r.mean_purity) << ',' << fixed(r.ari) << ','
            << fixed(r.ami) << ',' << fixed(r.homogeneity) << ',' << fixed(r.completeness) << ','
            << fixed(r.smoothed_rating) << ',' << fixed(r.smoothed_purity) << '\n';
    }
    return out.str();
}

std::string sweep_json(const SweepReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"k", r.k},
                        {"mean_rating", r.mean_rating},
                        {"mean_purity", r.mean_purity},
                        {"ari", opt(r.ari)},
                        {"ami", opt(r.ami)},
                        {"homogeneity", opt(r.homogeneity)},
                        {"completeness", opt(r.completeness)},
                        {"top_doc_ari", opt(r.top_doc_ari)},
                        {"smoothed_rating", r.smoothed_rating},
                        {"smoothed_purity", r.smoothed_purity},
                        {"sampled_topics", r.sampled_topics},
                        {"label_queries", r.label_queries},
                        {"unparseable_ratings", r.unparseable_ratings},
                        {"unparseable_labels", r.unparseable_labels}});
    }
    const auto& d = report.diagnostics;
    json j = {{"format", "tmeval-sweep-report"},
              {"version", 1},
              {"granularity", to_string(report.granularity)},
              {"smoothing_window", report.smoothing_window},
              {"selected_k",
               {{"rating", report.selected_k_rating},
                {"purity", report.selected_k_purity},
                {"ari", report.selected_k_ari ? json(*report.selected_k_ari) : json(nullptr)}}},
              {"diagnostics",
               {{"queries", d.queries},
                {"cache_hits", d.cache_hits},
                {"cache_hit_rate", d.cache_hit_rate()},
                {"unparseable_ratings", d.unparseable_ratings},
                {"unparseable_labels", d.unparseable_labels},
                {"label_inventory_size", d.label_inventory_size}}},
              {"rows", rows}};
    return j.dump(2) + "\n";
}

SweepReport sweep_report_from_json(const std::string& text) {
    const auto j = parse_report(text, "tmeval-sweep-report");
    try {
        SweepReport report;
        report.granularity = parse_granularity(j.at("granularity").get<std::string>());
        report.smoothing_window = j.at("smoothing_window").get<std::size_t>();
        const auto& sel = j.at("selected_k");
        report.selected_k_rating = sel.at("rating").get<long long>();
        report.selected_k_purity = sel.at("purity").get<long long>();
        if (!sel.at("ari").is_null()) report.selected_k_ari = sel.at("ari").get<long long>();
        const auto& d = j.at("diagnostics");
        report.diagnostics.queries = d.at("queries").get<std::size_t>();
        report.diagnostics.cache_hits = d.at("cache_hits").get<std::size_t>();
        report.diagnostics.unparseable_ratings = d.at("unparseable_ratings").get<std::size_t>();
        report.diagnostics.unparseable_labels = d.at("unparseable_labels").get<std::size_t>();
        report.diagnostics.label_inventory_size = d.at("label_inventory_size").get<std::size_t>();
        for (const auto& r : j.at("rows")) {
            SweepRow row;
            row.k = r.at("k").get<std::size_t>();
            row.mean_rating = r.at("mean_rating").get<double>();
            row.mean_purity = r.at("mean_purity").get<double>();
            row.ari = opt_double(r, "ari");
            row.ami = opt_double(r, "ami");
            row.homogeneity = opt_double(r, "homogeneity");
            row.completeness = opt_double(r, "completeness");
            row.top_doc_ari = opt_double(r, "top_doc_ari");
            row.smoothed_rating = r.at("smoothed_rating").get<double>();
            row.smoothed_purity = r.at("smoothed_purity").get<double>();
            row.sampled_topics = r.at("sampled_topics").get<std::vector<std::size_t>>();
            row.label_queries = r.at("label_queries").get<std::size_t>();
            row.unparseable_ratings = r.at("unparseable_ratings").get<std::size_t>();
            row.unparseable_labels = r.at("unparseable_labels").get<std::size_t>();
            report.rows.push_back(std::move(row));
        }
        return report;
    } catch (const json::exception& e) {
        throw FormatError("tmeval-sweep-report", 0, e.what());
    }
}

std::string sweep_svg(const SweepReport& report, const std::string& title) {
    constexpr double width = 640, height = 360, left = 50, right = 130, top = 30, bottom = 40;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    struct Curve {
        std::string name;
        std::string color;
        std::vector<double> values;
    };
    std::vector<Curve> curves{{"rating", "#1f77b4", {}}, {"purity", "#2ca02c", {}}};
    if (report.has_truth()) curves.push_back({"ARI", "#d62728", {}});
    std::vector<double> ks;
    for (const auto& r : report.rows) {
        ks.push_back(static_cast<double>(r.k));
        curves[0].values.push_back(r.mean_rating);
        curves[1].values.push_back(r.mean_purity);
        if (curves.size() > 2) curves[2].values.push_back(*r.ari);
    }

    auto normalize = [](std::vector<double> v) {
        if (v.empty()) return v;
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        const double a = *lo, span = *hi - *lo;
        for (auto& x : v) x = span > 0 ? (x - a) / span : 0.5;
        return v;
    };
    const double kmin = ks.empty() ? 0 : ks.front(), kmax = ks.empty() ? 1 : ks.back();
    auto px = [&](double k) { return left + (kmax > kmin ? (k - kmin) / (kmax - kmin) : 0.5) * plot_w; };
    auto py = [&](double v) { return top + (1.0 - v) * plot_h; };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty()) out << "<text x=\"" << left << "\" y=\"18\">" << title << "</text>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
        << "\" stroke=\"black\"/>\n";
    for (double k : ks) {
        out << "<text x=\"" << num(px(k)) << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">"
            << static_cast<long long>(k) << "</text>\n";
    }
    out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 6 << "\" text-anchor=\"middle\">K</text>\n";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto v = normalize(curves[c].values);
        out << "<polyline fill=\"none\" stroke=\"" << curves[c].color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << num(px(ks[i])) << ',' << num(py(v[i]));
        out << "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(c);
        out << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + plot_w + 32
            << "\" y2=\"" << ly - 4 << "\" stroke=\"" << curves[c].color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << left + plot_w + 38 << "\" y=\"" << ly << "\">" << curves[c].name << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string correlation_csv(const CorrelationReport& report) {
    std::ostringstream out;
    out << "task,dataset,topics,npmi,npmi_low,npmi_high,cv,cv_low,cv_high,llm,llm_low,llm_high,"
           "ceiling,ceiling_low,ceiling_high,llm_accuracy,human_accuracy\n";
    auto cells = [](const std::optional<BootstrapResult>& b) {
        if (!b) return std::string(",,");
        return fixed(b->mean_rho) + ',' + fixed(b->ci_low) + ',' + fixed(b->ci_high);
    };
    for (const auto& r : report.rows) {
        out << to_string(r.task) << ',' << r.dataset << ',' << r.topics << ',' << cells(r.npmi) << ','
            << cells(r.cv) << ',' << cells(r.llm) << ',' << cells(r.ceiling) << ',' << fixed(r.llm_accuracy) << ','
            << fixed(r.human_accuracy) << '\n';
    }
    return out.str();
}

std::string correlation_json(const CorrelationReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"task", to_string(r.task)},
                        {"dataset", r.dataset},
                        {"topics", r.topics},
                        {"npmi", boot_json(r.npmi)},
                        {"cv", boot_json(r.cv)},
                        {"llm", boot_json(r.llm)},
                        {"ceiling", boot_json(r.ceiling)},
                        {"llm_accuracy", opt(r.llm_accuracy)},
                        {"human_accuracy", opt(r.human_accuracy)}});
    }
    json j = {{"format", "tmeval-correlation-report"},
              {"version", 1},
              {"queries", report.queries},
              {"unparseable", report.unparseable},
              {"excluded_topics", report.excluded_topics},
              {"rows", rows}};
    return j.dump(2) + "\n";
}

CorrelationReport correlation_report_from_json(const std::string& text) {
    const auto j = parse_report(text, "tmeval-correlation-report");
    try {
        CorrelationReport report;
        report.queries = j.at("queries").get<std::size_t>();
        report.unparseable = j.at("unparseable").get<std::size_t>();
        report.excluded_topics = j.at("excluded_topics").get<std::size_t>();
        for (const auto& r : j.at("rows")) {
            CorrelationRow row;
            row.task = parse_judge_task(r.at("task").get<std::string>());
            row.dataset = r.at("dataset").get<std::string>();
            row.topics = r.at("topics").get<std::size_t>();
            row.npmi = boot_from(r, "npmi");
            row.cv = boot_from(r, "cv");
            row.llm = boot_from(r, "llm");
            row.ceiling = boot_from(r, "ceiling");
            row.llm_accuracy = opt_double(r, "llm_accuracy");
            row.human_accuracy = opt_double(r, "human_accuracy");
            report.rows.push_back(std::move(row));
        }
        return report;
    } catch (const json::exception& e) {
        throw FormatError("tmeval-correlation-report", 0, e.what());
    }
}

std::vector<std::filesystem::path> emit_report(const SweepReport& report, const std::filesystem::path& dir,
                                               const std::string& stem, ReportFormats formats) {
    prepare_dir(dir);
    std::vector<std::filesystem::path> paths{dir / (stem + ".csv"), dir / (stem + ".json")};
    write_file(paths[0], sweep_csv(report));
    write_file(paths[1], sweep_json(report));
    if (formats.svg) {
        paths.push_back(dir / (stem + ".svg"));
        write_file(paths.back(), sweep_svg(report, stem));
    }
    return paths;
}

std::vector<std::filesystem::path> emit_report(const CorrelationReport& report, const std::filesystem::path& dir,
                                               const std::string& stem) {
    prepare_dir(dir);
    std::vector<std::filesystem::path> paths{dir / (stem + ".csv"), dir / (stem + ".json")};
    write_file(paths[0], correlation_csv(report));
    write_file(paths[1], correlation_json(report));
    return paths;
}

}  // namespace tmeval
