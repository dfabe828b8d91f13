#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "tmeval/metrics.hpp"

// Reference implementations written directly from the textbook definitions.
// Deliberately naive: no shared code with the library.
namespace oracle {

inline std::vector<double> naive_ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0, equal = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i]) less += 1;
            if (v[j] == v[i]) equal += 1;
        }
        r[i] = less + (equal + 1) / 2.0;
    }
    return r;
}

inline double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline double naive_spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return naive_pearson(naive_ranks(x), naive_ranks(y));
}

// Rand-index bookkeeping over every unordered item pair.
inline double pair_ari(const tmeval::Labeling& a, const tmeval::Labeling& b) {
    const std::size_t n = a.size();
    double both = 0, only_a = 0, only_b = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += sa && sb;
            only_a += sa;
            only_b += sb;
            pairs += 1;
        }
    }
    const double expected = only_a * only_b / pairs;
    const double max_index = (only_a + only_b) / 2.0;
    if (max_index == expected) return 1.0;
    return (both - expected) / (max_index - expected);
}

struct Suite {
    double ami, homogeneity, completeness;
};

inline double log_factorial(int n) {
    double s = 0;
    for (int i = 2; i <= n; ++i) s += std::log(static_cast<double>(i));
    return s;
}

// Entropies and MI straight from the joint histogram; EMI as the
// hypergeometric sum over every feasible cell count.
inline Suite entropy_suite(const tmeval::Labeling& pred, const tmeval::Labeling& truth) {
    const double n = static_cast<double>(pred.size());
    std::map<int, double> pa, pb;
    std::map<std::pair<int, int>, double> joint;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        pa[pred[i]] += 1;
        pb[truth[i]] += 1;
        joint[{pred[i], truth[i]}] += 1;
    }
    auto h = [&](const std::map<int, double>& m) {
        double s = 0;
        for (auto& [k, c] : m) s -= c / n * std::log(c / n);
        return s;
    };
    const double ha = h(pa), hb = h(pb);
    double mi = 0;
    for (auto& [k, c] : joint) mi += c / n * std::log(c * n / (pa[k.first] * pb[k.second]));

    Suite s{};
    s.homogeneity = hb == 0 ? 1.0 : mi / hb;
    s.completeness = ha == 0 ? 1.0 : mi / ha;
    if (pa.size() == 1 && pb.size() == 1) {
        s.ami = 1.0;
        return s;
    }
    const int N = static_cast<int>(pred.size());
    double emi = 0;
    for (auto& [ka, ca] : pa) {
        for (auto& [kb, cb] : pb) {
            const int ai = static_cast<int>(ca), bj = static_cast<int>(cb);
            for (int nij = std::max(1, ai + bj - N); nij <= std::min(ai, bj); ++nij) {
                const double logp = log_factorial(ai) + log_factorial(bj) + log_factorial(N - ai) +
                                    log_factorial(N - bj) - log_factorial(N) - log_factorial(nij) -
                                    log_factorial(ai - nij) - log_factorial(bj - nij) -
                                    log_factorial(N - ai - bj + nij);
                emi += nij / n * std::log(n * nij / (ca * cb)) * std::exp(logp);
            }
        }
    }
    const double denom = (ha + hb) / 2 - emi;
    if (std::abs(denom) < 1e-12) {
        s.ami = joint.size() == pa.size() && joint.size() == pb.size() ? 1.0 : 0.0;
        return s;
    }
    s.ami = (mi - emi) / denom;
    return s;
}

// Every labeling of n items with at most `max_labels` labels, up to renaming
// (restricted growth strings).
inline std::vector<tmeval::Labeling> canonical_labelings(std::size_t n, int max_labels) {
    std::vector<tmeval::Labeling> out;
    tmeval::Labeling cur(n, 0);
    auto rec = [&](auto&& self, std::size_t i, int used) -> void {
        if (i == n) {
            out.push_back(cur);
            return;
        }
        for (int l = 0; l <= std::min(used, max_labels - 1); ++l) {
            cur[i] = l;
            self(self, i + 1, std::max(used, l + 1));
        }
    };
    if (n) {
        cur[0] = 0;
        rec(rec, 1, 1);
    }
    return out;
}

}  // namespace oracle
