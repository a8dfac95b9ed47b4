#ifndef EAEE_PIPELINE_KNN_HPP
#define EAEE_PIPELINE_KNN_HPP

#include "eaee/common.hpp"
#include "eaee/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

namespace eaee::pipeline {

struct KnnOptions {
    int k = 5;
    double train_frac = 0.75;
    int repeats = 100;
};

struct Split {
    std::vector<Index> train;
    std::vector<Index> test;
};

/*
 * Stratified split: each class with m members contributes floor(train_frac m)
 * training points, clamped to [1, m - 1] (a singleton class goes to training).
 */
inline Split stratified_split(const std::vector<int>& labels, double train_frac, Rng& rng) {
    std::map<int, std::vector<Index>> by_class;
    for (std::size_t v = 0; v < labels.size(); ++v) {
        by_class[labels[v]].push_back(static_cast<Index>(v));
    }
    Split split;
    for (auto& [label, members] : by_class) {
        std::shuffle(members.begin(), members.end(), rng.engine());
        const std::size_t m = members.size();
        std::size_t n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(m)));
        n_train = m == 1 ? 1 : std::clamp<std::size_t>(n_train, 1, m - 1);
        split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<long>(n_train));
        split.test.insert(split.test.end(), members.begin() + static_cast<long>(n_train), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

/*
 * Euclidean k-NN majority vote. Ties between classes go to the tied class
 * that owns the nearest neighbour.
 */
inline int knn_predict(const Matrix& features, const std::vector<int>& labels, const std::vector<Index>& train,
                       Index query, int k) {
    std::vector<std::pair<double, Index>> dist;
    dist.reserve(train.size());
    for (Index t : train) {
        dist.emplace_back((features.row(t) - features.row(query)).squaredNorm(), t);
    }
    const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(kk), dist.end());

    std::map<int, int> votes;
    for (std::size_t r = 0; r < kk; ++r) {
        ++votes[labels[static_cast<std::size_t>(dist[r].second)]];
    }
    int best_votes = 0;
    for (const auto& [label, count] : votes) {
        best_votes = std::max(best_votes, count);
    }
    for (std::size_t r = 0; r < kk; ++r) {
        const int label = labels[static_cast<std::size_t>(dist[r].second)];
        if (votes[label] == best_votes) {
            return label;
        }
    }
    return labels[static_cast<std::size_t>(dist.front().second)];
}

/// Mean test misclassification rate over `repeats` independent stratified splits.
inline double knn_classify(const Matrix& features, const std::vector<int>& labels, const KnnOptions& opts, Rng& rng) {
    require(static_cast<Index>(labels.size()) == features.rows(), "knn_classify: one label per feature row required");
    require(opts.k >= 1, "knn_classify: k must be positive");
    require(opts.train_frac > 0.0 && opts.train_frac < 1.0, "knn_classify: train_frac must lie in (0, 1)");
    require(opts.repeats >= 1, "knn_classify: repeats must be positive");
    require(std::set<int>(labels.begin(), labels.end()).size() >= 2, "knn_classify: need at least two classes");

    double total = 0.0;
    for (int rep = 0; rep < opts.repeats; ++rep) {
        const Split split = stratified_split(labels, opts.train_frac, rng);
        require(!split.test.empty(), "knn_classify: degenerate label set leaves no test points");
        int errors = 0;
        for (Index q : split.test) {
            if (knn_predict(features, labels, split.train, q, opts.k) != labels[static_cast<std::size_t>(q)]) {
                ++errors;
            }
        }
        total += static_cast<double>(errors) / static_cast<double>(split.test.size());
    }
    return total / static_cast<double>(opts.repeats);
}

} // namespace eaee::pipeline

#endif
