#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support/oracles.hpp"
#include "tmeval/error.hpp"
#include "tmeval/metrics.hpp"
#include "tmeval/random.hpp"

using namespace tmeval;

namespace {

std::vector<std::vector<double>> unanimous_topics(std::size_t n, std::size_t annotators) {
    std::vector<std::vector<double>> topics;
    for (std::size_t t = 0; t < n; ++t) topics.emplace_back(annotators, static_cast<double>(t % 3 + 1) + 0.1 * t);
    return topics;
}

}  // namespace

TEST_CASE("average ranks share tied positions") {
    const std::vector<double> v{10, 20, 20, 5};
    CHECK(average_ranks(v) == std::vector<double>{2, 3.5, 3.5, 1});
}

TEST_CASE("spearman identity and reversal") {
    const std::vector<double> x{1, 4, 2, 8, 5};
    std::vector<double> rev;
    for (double v : x) rev.push_back(-v);
    CHECK(spearman(x, x) == doctest::Approx(1.0));
    CHECK(spearman(x, rev) == doctest::Approx(-1.0));
}

TEST_CASE("spearman with ties matches the naive oracle") {
    const std::vector<double> x{1, 2, 2, 3}, y{1, 3, 2, 4};
    CHECK(std::abs(spearman(x, y) - oracle::naive_spearman(x, y)) < 1e-12);
}

TEST_CASE("spearman rejects constant and short input") {
    const std::vector<double> c{2, 2, 2, 2}, x{1, 2, 3, 4};
    CHECK_THROWS_AS(spearman(c, x), UndefinedCorrelation);
    const std::vector<double> a{1, 2}, b{2, 1};
    CHECK_THROWS_AS(spearman(a, b), InvalidArgument);
}

TEST_CASE("spearman on series requires matching keys") {
    ScoreSeries a({1, 2, 3}, {1, 2, 3});
    ScoreSeries b({1, 2, 4}, {1, 2, 3});
    CHECK_THROWS_AS(spearman(a, b), InvalidArgument);
    CHECK(spearman(a, a) == doctest::Approx(1.0));
}

TEST_CASE("score series validates keys and values") {
    CHECK_THROWS_AS(ScoreSeries({2, 1}, {0, 0}), InvalidArgument);
    CHECK_THROWS_AS(ScoreSeries({1, 1}, {0, 0}), InvalidArgument);
    CHECK_THROWS_AS(ScoreSeries({1}, {std::nan("")}), InvalidArgument);
    CHECK_THROWS_AS(ScoreSeries({1, 2}, {0}), InvalidArgument);
}

TEST_CASE("spearman is invariant under monotone transforms") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 3 + rng.below(15);
        std::vector<double> x(n), y(n), tx(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<double>(rng.below(6));
            y[i] = rng.uniform();
            tx[i] = std::exp(x[i]) * 3 + 1;
        }
        try {
            CHECK(spearman(x, y) == doctest::Approx(spearman(tx, y)).epsilon(1e-12));
        } catch (const UndefinedCorrelation&) {
        }
    }
}

TEST_CASE("percentile interpolates linearly") {
    CHECK(percentile({1, 2, 3, 4, 5}, 50) == 3);
    CHECK(percentile({1, 2, 3, 4}, 50) == doctest::Approx(2.5));
    CHECK(percentile({4, 1, 3, 2}, 0) == 1);
    CHECK(percentile({4, 1, 3, 2}, 100) == 4);
}

TEST_CASE("bootstrap on unanimous annotators gives exact agreement") {
    const auto human = unanimous_topics(12, 5);
    BootstrapOptions opt;
    opt.episodes = 200;
    opt.seed = 3;
    const auto r = bootstrap_correlation(human, human, opt);
    CHECK(r.mean_rho == doctest::Approx(1.0));
    CHECK(r.ci_low == r.ci_high);
    CHECK(r.episodes == 200);
    CHECK(r.undefined_episodes == 0);
}

TEST_CASE("bootstrap is seed deterministic and thread independent") {
    Rng rng(5);
    std::vector<std::vector<double>> human(15), llm(15);
    for (std::size_t t = 0; t < 15; ++t) {
        for (int a = 0; a < 6; ++a) human[t].push_back(static_cast<double>(1 + rng.below(3)));
        for (int a = 0; a < 3; ++a) llm[t].push_back(static_cast<double>(1 + rng.below(3)));
    }
    BootstrapOptions one{300, 9, 1}, four{300, 9, 4};
    const auto a = bootstrap_correlation(human, llm, one);
    CHECK(a == bootstrap_correlation(human, llm, one));
    CHECK(a == bootstrap_correlation(human, llm, four));
    CHECK(a.ci_low <= a.mean_rho);
    CHECK(a.mean_rho <= a.ci_high);
    BootstrapOptions other{300, 10, 1};
    CHECK_FALSE(a == bootstrap_correlation(human, llm, other));
}

TEST_CASE("bootstrap rejects empty topics") {
    std::vector<std::vector<double>> human{{1}, {2}, {}}, llm{{1}, {2}, {3}};
    CHECK_THROWS_AS(bootstrap_correlation(human, llm), InvalidArgument);
}

TEST_CASE("human ceiling") {
    SUBCASE("unanimous annotators") {
        BootstrapOptions opt{100, 1, 1};
        CHECK(human_ceiling(unanimous_topics(10, 4), opt).mean_rho == doctest::Approx(1.0));
    }
    SUBCASE("single annotation is rejected") {
        std::vector<std::vector<double>> human{{1, 2}, {3}, {2, 2}};
        CHECK_THROWS_AS(human_ceiling(human), InvalidArgument);
    }
}

TEST_CASE("ari examples") {
    CHECK(ari({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5));
    CHECK(oracle::pair_ari({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5));
    const Labeling a{0, 0, 1, 1, 2, 2, 2};
    CHECK(ari(a, a) == 1.0);
    CHECK(ari(a, {5, 5, 9, 9, 7, 7, 7}) == 1.0);
    CHECK(ari(a, {0, 1, 1, 1, 2, 0, 2}) == doctest::Approx(ari(a, {3, 4, 4, 4, 1, 3, 1})));
    CHECK_THROWS_AS(ari({0, 1}, {0, 1, 1}), InvalidArgument);
}

TEST_CASE("clustering suite examples") {
    const Labeling a{0, 0, 1, 1, 2, 2};
    const auto same = clustering_suite(a, a);
    CHECK(same.ami == doctest::Approx(1.0));
    CHECK(same.homogeneity == doctest::Approx(1.0));
    CHECK(same.completeness == doctest::Approx(1.0));

    const auto singletons = clustering_suite({0, 1, 2, 3, 4, 5}, a);
    CHECK(singletons.homogeneity == doctest::Approx(1.0));

    const Labeling p{0, 0, 0, 1, 1, 2}, t{0, 0, 1, 1, 2, 2};
    const auto got = clustering_suite(p, t);
    const auto want = oracle::entropy_suite(p, t);
    CHECK(std::abs(got.ami - want.ami) < 1e-12);
    CHECK(std::abs(got.homogeneity - want.homogeneity) < 1e-12);
    CHECK(std::abs(got.completeness - want.completeness) < 1e-12);
}

TEST_CASE("expected mutual information equals the permutation average") {
    const Labeling a{0, 0, 0, 1, 1, 2}, b{0, 1, 1, 1, 2, 2};
    std::vector<int> perm{0, 1, 2, 3, 4, 5};
    double total = 0, count = 0;
    do {
        Labeling pb(6);
        for (std::size_t i = 0; i < 6; ++i) pb[i] = b[static_cast<std::size_t>(perm[i])];
        const auto s = oracle::entropy_suite(a, pb);
        // MI = homogeneity * H(b); H(b) is permutation invariant.
        const double hb = -(1.0 / 6 * std::log(1.0 / 6) + 3.0 / 6 * std::log(3.0 / 6) + 2.0 / 6 * std::log(2.0 / 6));
        total += s.homogeneity * hb;
        count += 1;
    } while (std::next_permutation(perm.begin(), perm.end()));
    const std::vector<std::size_t> rows{3, 2, 1}, cols{1, 3, 2};
    CHECK(expected_mutual_information(rows, cols) == doctest::Approx(total / count).epsilon(1e-12));
}

TEST_CASE("partition scores are invariant under renaming") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.below(10);
        Labeling a(n), b(n), rb(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<int>(rng.below(4));
            b[i] = static_cast<int>(rng.below(3));
            rb[i] = 10 - 3 * b[i];
        }
        CHECK(ari(a, b) == doctest::Approx(ari(a, rb)));
        const auto x = clustering_suite(a, b), y = clustering_suite(a, rb);
        CHECK(x.ami == doctest::Approx(y.ami));
        CHECK(x.homogeneity == doctest::Approx(y.homogeneity));
        CHECK(x.completeness == doctest::Approx(y.completeness));
    }
}

TEST_CASE("encode labels by first appearance") {
    CHECK(encode_labels({"tax", "health", "tax", "defense"}) == Labeling{0, 1, 0, 2});
}

TEST_CASE("topic purity") {
    CHECK(topic_purity(std::vector<std::string>(10, "health")) == 1.0);
    std::vector<std::string> distinct;
    for (int i = 0; i < 10; ++i) distinct.push_back("l" + std::to_string(i));
    CHECK(topic_purity(distinct) == doctest::Approx(0.1));
    std::vector<std::string> mixed(6, "health");
    mixed.insert(mixed.end(), 3, "tax");
    mixed.push_back("defense");
    CHECK(topic_purity(mixed) == doctest::Approx(0.6));
    std::reverse(mixed.begin(), mixed.end());
    CHECK(topic_purity(mixed) == doctest::Approx(0.6));
    CHECK_THROWS_AS(topic_purity({}), InvalidArgument);
}

TEST_CASE("smoothing") {
    const ScoreSeries s({20, 40, 60}, {1, 5, 1});
    CHECK(smooth(s, 1) == s);
    const auto sm = smooth(s, 3);
    CHECK(sm.keys() == s.keys());
    CHECK(sm.values()[0] == doctest::Approx(3.0));
    CHECK(sm.values()[1] == doctest::Approx(7.0 / 3.0));
    CHECK(sm.values()[2] == doctest::Approx(3.0));
    const ScoreSeries flat({1, 2, 3, 4}, {2, 2, 2, 2});
    CHECK(smooth(flat, 3) == flat);
    CHECK_THROWS_AS(smooth(s, 2), InvalidArgument);
}

TEST_CASE("smoothing stays within the series bounds") {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(20);
        std::vector<long long> keys;
        std::vector<double> values;
        for (std::size_t i = 0; i < n; ++i) {
            keys.push_back(static_cast<long long>(i * 20 + 20));
            values.push_back(rng.uniform() * 10 - 5);
        }
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        const double min = *lo, max = *hi;
        const auto sm = smooth(ScoreSeries(keys, values), 1 + 2 * rng.below(3));
        for (double v : sm.values()) {
            CHECK(v >= min - 1e-12);
            CHECK(v <= max + 1e-12);
        }
    }
}

TEST_CASE("select_k") {
    CHECK(select_k(ScoreSeries({20, 40, 60, 80}, {1, 2, 3, 4}), 1) == 80);
    CHECK(select_k(ScoreSeries({20, 40, 60}, {1, 1, 1}), 3) == 20);
    CHECK(select_k(ScoreSeries({20}, {0.3}), 3) == 20);
    CHECK(select_k(ScoreSeries({5, 10, 15, 20}, {0.2, 0.9, 0.8, 0.1}), 3) == 10);
}

TEST_CASE("select_k is invariant under positive affine transforms") {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(12);
        std::vector<long long> keys;
        std::vector<double> v, t;
        for (std::size_t i = 0; i < n; ++i) {
            keys.push_back(static_cast<long long>(5 * (i + 1)));
            // Quarter steps keep the affine image exact in binary.
            v.push_back(static_cast<double>(rng.below(8)) * 0.25);
            t.push_back(v.back() * 4 + 3);
        }
        CHECK(select_k(ScoreSeries(keys, v), 3) == select_k(ScoreSeries(keys, t), 3));
    }
}
