#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tmeval {

/// Scores keyed by an ordered id (topic index or K).
class ScoreSeries {
public:
    ScoreSeries() = default;
    /// Throws InvalidArgument unless keys are strictly increasing, sizes
    /// match, and every value is finite.
    ScoreSeries(std::vector<long long> keys, std::vector<double> values);

    const std::vector<long long>& keys() const noexcept { return keys_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return keys_.size(); }
    bool empty() const noexcept { return keys_.empty(); }

    bool operator==(const ScoreSeries&) const = default;

private:
    std::vector<long long> keys_;
    std::vector<double> values_;
};

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman's rho: Pearson correlation of average ranks. Needs >= 3 points;
/// throws UndefinedCorrelation when either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);
/// Keys must match.
double spearman(const ScoreSeries& x, const ScoreSeries& y);

struct BootstrapResult {
    double mean_rho = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t episodes = 0;
    /// Episodes where a resample came out constant and rho was undefined.
    std::size_t undefined_episodes = 0;

    bool operator==(const BootstrapResult&) const = default;
};

/// Linear-interpolated percentile (q in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double q);

struct BootstrapOptions {
    std::size_t episodes = 1000;
    std::uint64_t seed = 0;
    /// 0 = std::thread::hardware_concurrency().
    std::size_t threads = 0;
};

/// Each episode resamples every topic's human annotations and LLM scores
/// with replacement, averages them per topic and takes Spearman across
/// topics. Reports the mean rho and the 2.5/97.5 percentile interval.
/// Episode e draws from its own stream derived from (seed, e).
BootstrapResult bootstrap_correlation(const std::vector<std::vector<double>>& human,
                                      const std::vector<std::vector<double>>& llm,
                                      const BootstrapOptions& options = {});

/// Inter-annotator ceiling: each episode randomly splits every topic's
/// annotations into two halves and correlates the per-topic half means.
BootstrapResult human_ceiling(const std::vector<std::vector<double>>& human,
                              const BootstrapOptions& options = {});

// ---------------------------------------------------------------------------
// Partition agreement. Labelings are dense or sparse integer cluster ids.

using Labeling = std::vector<int>;

/// Maps arbitrary string labels to ids in order of first appearance.
Labeling encode_labels(const std::vector<std::string>& labels);

/// Adjusted Rand index from the contingency table. Returns 1.0 when both
/// partitions are trivial in the same way (the index is otherwise 0/0).
double ari(const Labeling& a, const Labeling& b);

struct ClusteringScores {
    double ami = 0.0;
    double homogeneity = 0.0;
    double completeness = 0.0;
};

/// AMI (arithmetic-mean normalization), homogeneity and completeness of
/// `predicted` against `truth`. Homogeneity is 1 when every predicted
/// cluster holds a single true class.
ClusteringScores clustering_suite(const Labeling& predicted, const Labeling& truth);

/// Expected mutual information of two random partitions with the given
/// marginals (hypergeometric model), in nats.
double expected_mutual_information(std::span<const std::size_t> row_sums, std::span<const std::size_t> col_sums);

/// Share of the most frequent label. Throws InvalidArgument on empty input.
double topic_purity(const std::vector<std::string>& labels);

/// Centered moving average; near the ends the window shrinks to the
/// neighbours that exist. window must be odd.
ScoreSeries smooth(const ScoreSeries& series, std::size_t window);

/// Key of the maximum smoothed value, smallest key on ties.
long long select_k(const ScoreSeries& series, std::size_t window);

}  // namespace tmeval
