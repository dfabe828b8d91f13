#include "tmeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <thread>
#include <unordered_map>

#include "tmeval/error.hpp"
#include "tmeval/random.hpp"

namespace tmeval {

ScoreSeries::ScoreSeries(std::vector<long long> keys, std::vector<double> values)
    : keys_(std::move(keys)), values_(std::move(values)) {
    if (keys_.size() != values_.size()) throw InvalidArgument("series: keys and values differ in length");
    for (std::size_t i = 1; i < keys_.size(); ++i) {
        if (keys_[i] <= keys_[i - 1]) throw InvalidArgument("series: keys must be strictly increasing");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw InvalidArgument("series: values must be finite");
    }
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
        i = j;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidArgument("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw InvalidArgument("pearson: need at least two points");
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelation("correlation undefined for a constant series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidArgument("spearman: length mismatch");
    if (x.size() < 3) throw InvalidArgument("spearman: need at least three points");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

double spearman(const ScoreSeries& x, const ScoreSeries& y) {
    if (x.keys() != y.keys()) throw InvalidArgument("spearman: series keys differ");
    return spearman(x.values(), y.values());
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidArgument("percentile of an empty set");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
}

namespace {

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double resampled_mean(const std::vector<double>& values, Rng& rng) {
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) sum += values[rng.below(values.size())];
    return sum / static_cast<double>(values.size());
}

// Runs `episode(e)` for every e, writing into fixed slots, optionally in parallel.
template <typename Fn>
std::vector<std::optional<double>> run_episodes(const BootstrapOptions& options, Fn episode) {
    std::vector<std::optional<double>> slots(options.episodes);
    std::size_t threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(1, options.episodes));
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t e = begin; e < end; ++e) {
            Rng rng(derive_seed(options.seed, e));
            try {
                slots[e] = episode(rng);
            } catch (const UndefinedCorrelation&) {
                slots[e].reset();
            }
        }
    };
    if (threads <= 1) {
        work(0, options.episodes);
        return slots;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (options.episodes + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(options.episodes, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
    return slots;
}

BootstrapResult summarize(const std::vector<std::optional<double>>& slots) {
    BootstrapResult result;
    result.episodes = slots.size();
    std::vector<double> rhos;
    rhos.reserve(slots.size());
    for (const auto& s : slots) {
        if (s) {
            rhos.push_back(*s);
        } else {
            ++result.undefined_episodes;
        }
    }
    if (rhos.empty()) throw UndefinedCorrelation("bootstrap: correlation undefined in every episode");
    result.mean_rho = mean(rhos);
    result.ci_low = percentile(rhos, 2.5);
    result.ci_high = percentile(rhos, 97.5);
    return result;
}

}  // namespace

BootstrapResult bootstrap_correlation(const std::vector<std::vector<double>>& human,
                                      const std::vector<std::vector<double>>& llm,
                                      const BootstrapOptions& options) {
    if (human.size() != llm.size()) throw InvalidArgument("bootstrap: topic counts differ");
    if (options.episodes < 1) throw InvalidArgument("bootstrap: episodes must be >= 1");
    for (std::size_t t = 0; t < human.size(); ++t) {
        if (human[t].empty()) throw InvalidArgument("bootstrap: topic " + std::to_string(t) + " has no annotations");
        if (llm[t].empty()) throw InvalidArgument("bootstrap: topic " + std::to_string(t) + " has no LLM scores");
    }
    const std::size_t topics = human.size();
    auto slots = run_episodes(options, [&](Rng& rng) {
        std::vector<double> h(topics), l(topics);
        for (std::size_t t = 0; t < topics; ++t) {
            h[t] = resampled_mean(human[t], rng);
            l[t] = resampled_mean(llm[t], rng);
        }
        return spearman(h, l);
    });
    return summarize(slots);
}

BootstrapResult human_ceiling(const std::vector<std::vector<double>>& human, const BootstrapOptions& options) {
    if (options.episodes < 1) throw InvalidArgument("ceiling: episodes must be >= 1");
    for (std::size_t t = 0; t < human.size(); ++t) {
        if (human[t].size() < 2) {
            throw InvalidArgument("ceiling: topic " + std::to_string(t) + " has fewer than two annotations");
        }
    }
    const std::size_t topics = human.size();
    auto slots = run_episodes(options, [&](Rng& rng) {
        std::vector<double> first(topics), second(topics);
        for (std::size_t t = 0; t < topics; ++t) {
            auto values = human[t];
            rng.shuffle(values);
            const std::size_t half = values.size() / 2;
            first[t] = std::accumulate(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(half), 0.0) /
                       static_cast<double>(half);
            second[t] = std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(half), values.end(), 0.0) /
                        static_cast<double>(values.size() - half);
        }
        return spearman(first, second);
    });
    return summarize(slots);
}

// ---------------------------------------------------------------------------

Labeling encode_labels(const std::vector<std::string>& labels) {
    std::unordered_map<std::string, int> ids;
    Labeling out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        auto [it, fresh] = ids.emplace(l, static_cast<int>(ids.size()));
        out.push_back(it->second);
    }
    return out;
}

namespace {

struct Contingency {
    std::size_t n = 0;
    std::vector<std::size_t> row_sums;  // per cluster of a
    std::vector<std::size_t> col_sums;  // per cluster of b
    std::vector<std::size_t> cells;     // nonzero n_ij
    std::vector<std::pair<std::size_t, std::size_t>> cell_index;
};

Contingency contingency(const Labeling& a, const Labeling& b) {
    if (a.size() != b.size()) throw InvalidArgument("partitions cover different item sets");
    if (a.size() < 2) throw InvalidArgument("partitions need at least two items");
    std::map<int, std::size_t> ra, rb;
    for (int x : a) ra.emplace(x, ra.size());
    for (int x : b) rb.emplace(x, rb.size());
    Contingency c;
    c.n = a.size();
    c.row_sums.assign(ra.size(), 0);
    c.col_sums.assign(rb.size(), 0);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> cells;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto r = ra[a[i]];
        const auto s = rb[b[i]];
        ++c.row_sums[r];
        ++c.col_sums[s];
        ++cells[{r, s}];
    }
    for (const auto& [idx, count] : cells) {
        c.cell_index.push_back(idx);
        c.cells.push_back(count);
    }
    return c;
}

double choose2(std::size_t n) { return static_cast<double>(n) * static_cast<double>(n - (n > 0)) / 2.0; }

double entropy(const std::vector<std::size_t>& sums, std::size_t n) {
    double h = 0.0;
    for (auto s : sums) {
        if (s == 0) continue;
        const double p = static_cast<double>(s) / static_cast<double>(n);
        h -= p * std::log(p);
    }
    return h;
}

double mutual_information(const Contingency& c) {
    const double n = static_cast<double>(c.n);
    double mi = 0.0;
    for (std::size_t i = 0; i < c.cells.size(); ++i) {
        const double nij = static_cast<double>(c.cells[i]);
        const double ai = static_cast<double>(c.row_sums[c.cell_index[i].first]);
        const double bj = static_cast<double>(c.col_sums[c.cell_index[i].second]);
        mi += nij / n * std::log(n * nij / (ai * bj));
    }
    return std::max(mi, 0.0);
}

}  // namespace

double ari(const Labeling& a, const Labeling& b) {
    const auto c = contingency(a, b);
    double index = 0.0;
    for (auto nij : c.cells) index += choose2(nij);
    double sum_a = 0.0, sum_b = 0.0;
    for (auto s : c.row_sums) sum_a += choose2(s);
    for (auto s : c.col_sums) sum_b += choose2(s);
    const double expected = sum_a * sum_b / choose2(c.n);
    const double max_index = (sum_a + sum_b) / 2.0;
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

double expected_mutual_information(std::span<const std::size_t> row_sums, std::span<const std::size_t> col_sums) {
    const std::size_t n = std::accumulate(row_sums.begin(), row_sums.end(), std::size_t{0});
    const double N = static_cast<double>(n);
    const double lg_n = std::lgamma(N + 1.0);
    double emi = 0.0;
    for (auto ai_sz : row_sums) {
        const double ai = static_cast<double>(ai_sz);
        for (auto bj_sz : col_sums) {
            const double bj = static_cast<double>(bj_sz);
            const std::size_t lo = std::max<std::size_t>(1, ai_sz + bj_sz > n ? ai_sz + bj_sz - n : 0);
            const std::size_t hi = std::min(ai_sz, bj_sz);
            const double fixed = std::lgamma(ai + 1) + std::lgamma(bj + 1) + std::lgamma(N - ai + 1) +
                                 std::lgamma(N - bj + 1) - lg_n;
            for (std::size_t nij_sz = lo; nij_sz <= hi; ++nij_sz) {
                const double nij = static_cast<double>(nij_sz);
                const double log_p = fixed - std::lgamma(nij + 1) - std::lgamma(ai - nij + 1) -
                                     std::lgamma(bj - nij + 1) - std::lgamma(N - ai - bj + nij + 1);
                emi += nij / N * std::log(N * nij / (ai * bj)) * std::exp(log_p);
            }
        }
    }
    return emi;
}

ClusteringScores clustering_suite(const Labeling& predicted, const Labeling& truth) {
    const auto c = contingency(predicted, truth);
    const double h_pred = entropy(c.row_sums, c.n);
    const double h_true = entropy(c.col_sums, c.n);
    const double mi = mutual_information(c);

    ClusteringScores out;
    out.homogeneity = h_true == 0.0 ? 1.0 : std::clamp(mi / h_true, 0.0, 1.0);
    out.completeness = h_pred == 0.0 ? 1.0 : std::clamp(mi / h_pred, 0.0, 1.0);

    const bool identical = c.cells.size() == c.row_sums.size() && c.cells.size() == c.col_sums.size();
    if (c.row_sums.size() == 1 && c.col_sums.size() == 1) {
        out.ami = 1.0;
        return out;
    }
    const double emi = expected_mutual_information(c.row_sums, c.col_sums);
    const double denominator = (h_pred + h_true) / 2.0 - emi;
    constexpr double tiny = std::numeric_limits<double>::epsilon();
    if (std::abs(denominator) < 1e-12) {
        // Both partitions are fixed by their marginals (e.g. all singletons).
        out.ami = identical ? 1.0 : 0.0;
        return out;
    }
    out.ami = (mi - emi) / (denominator < 0 ? std::min(denominator, -tiny) : std::max(denominator, tiny));
    return out;
}

double topic_purity(const std::vector<std::string>& labels) {
    if (labels.empty()) throw InvalidArgument("purity: no labels");
    std::unordered_map<std::string, std::size_t> counts;
    std::size_t best = 0;
    for (const auto& l : labels) best = std::max(best, ++counts[l]);
    return static_cast<double>(best) / static_cast<double>(labels.size());
}

ScoreSeries smooth(const ScoreSeries& series, std::size_t window) {
    if (window == 0 || window % 2 == 0) throw InvalidArgument("smooth: window must be odd and >= 1");
    const auto& v = series.values();
    const std::size_t n = v.size();
    const std::size_t half = window / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        double sum = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) sum += v[j];
        out[i] = sum / static_cast<double>(hi - lo + 1);
    }
    return ScoreSeries(series.keys(), std::move(out));
}

long long select_k(const ScoreSeries& series, std::size_t window) {
    if (series.empty()) throw InvalidArgument("select_k: empty series");
    const auto smoothed = smooth(series, window);
    const auto& v = smoothed.values();
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return smoothed.keys()[best];
}

}  // namespace tmeval
