#pragma once

// CART classification trees and a bootstrap-bagged forest for +1/-1 labels,
// plus tweet scoring and the per-day sentiment index (sum of tweet scores).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "stockcast/data_model.hpp"
#include "stockcast/detail/random.hpp"
#include "stockcast/error.hpp"
#include "stockcast/tensor.hpp"
#include "stockcast/text_vectorizer.hpp"

namespace stockcast {

enum class Criterion { gini, entropy };

struct ClassCounts {
    std::size_t positive = 0;
    std::size_t negative = 0;

    std::size_t total() const noexcept { return positive + negative; }
    bool pure() const noexcept { return positive == 0 || negative == 0; }

    void add(Sentiment s) noexcept { (s == Sentiment::positive ? positive : negative) += 1; }
    void remove(Sentiment s) noexcept { (s == Sentiment::positive ? positive : negative) -= 1; }

    // Ties go to +1.
    Sentiment majority() const noexcept {
        return positive >= negative ? Sentiment::positive : Sentiment::negative;
    }

    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

inline double gini(const ClassCounts& counts) {
    detail::require(counts.total() > 0, "gini of an empty node");
    const double n = static_cast<double>(counts.total());
    const double p = static_cast<double>(counts.positive) / n;
    const double q = static_cast<double>(counts.negative) / n;
    return 1.0 - (p * p + q * q);
}

inline double entropy(const ClassCounts& counts) {
    detail::require(counts.total() > 0, "entropy of an empty node");
    const double n = static_cast<double>(counts.total());
    double h = 0.0;
    for (const auto c : {counts.positive, counts.negative}) {
        if (c > 0) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log2(p);
        }
    }
    return h;
}

inline double impurity(const ClassCounts& counts, Criterion criterion) {
    return criterion == Criterion::gini ? gini(counts) : entropy(counts);
}

// parent impurity minus the count-weighted impurity of the two children.
inline double impurity_decrease(const ClassCounts& left, const ClassCounts& right,
                                Criterion criterion) {
    const ClassCounts parent{left.positive + right.positive, left.negative + right.negative};
    const double n = static_cast<double>(parent.total());
    const double wl = static_cast<double>(left.total()) / n;
    const double wr = static_cast<double>(right.total()) / n;
    return impurity(parent, criterion) - wl * impurity(left, criterion) -
           wr * impurity(right, criterion);
}

// Decreases at or below this are treated as "no improvement" so rounding
// noise never produces a split.
inline constexpr double kMinImpurityDecrease = 1e-12;

inline double split_midpoint(double lo, double hi) noexcept { return 0.5 * (lo + hi); }

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity_decrease = 0.0;

    friend bool operator==(const SplitCandidate&, const SplitCandidate&) = default;
};

// Samples are rows of `x` selected by `rows` (duplicates allowed, as produced
// by bootstrapping). A sample goes left iff x[feature] <= threshold.
inline std::optional<SplitCandidate> best_split(const Matrix& x, std::span<const Sentiment> y,
                                                std::span<const std::size_t> rows,
                                                std::span<const std::size_t> candidate_features,
                                                Criterion criterion,
                                                std::size_t min_samples_leaf = 1) {
    if (rows.size() < 2) {
        return std::nullopt;
    }
    ClassCounts all;
    for (const auto r : rows) {
        all.add(y[r]);
    }
    if (all.pure()) {
        return std::nullopt;
    }
    const std::size_t leaf_min = std::max<std::size_t>(min_samples_leaf, 1);

    std::optional<SplitCandidate> best;
    std::vector<std::pair<double, Sentiment>> column(rows.size());
    for (const auto feature : candidate_features) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            column[i] = {x(rows[i], feature), y[rows[i]]};
        }
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (column.front().first == column.back().first) {
            continue;
        }
        ClassCounts left;
        ClassCounts right = all;
        for (std::size_t i = 0; i + 1 < column.size(); ++i) {
            left.add(column[i].second);
            right.remove(column[i].second);
            if (column[i].first == column[i + 1].first) {
                continue;
            }
            if (left.total() < leaf_min || right.total() < leaf_min) {
                continue;
            }
            const double decrease = impurity_decrease(left, right, criterion);
            if (decrease <= kMinImpurityDecrease) {
                continue;
            }
            const double threshold = split_midpoint(column[i].first, column[i + 1].first);
            const bool better =
                !best || decrease > best->impurity_decrease ||
                (decrease == best->impurity_decrease &&
                 (feature < best->feature ||
                  (feature == best->feature && threshold < best->threshold)));
            if (better) {
                best = SplitCandidate{feature, threshold, decrease};
            }
        }
    }
    return best;
}

struct SplitNode {
    std::size_t feature = 0;
    double threshold = 0.0;
    std::size_t left = 0;   // node indices within the owning tree
    std::size_t right = 0;

    friend bool operator==(const SplitNode&, const SplitNode&) = default;
};

struct LeafNode {
    ClassCounts counts;
    Sentiment label = Sentiment::positive;

    friend bool operator==(const LeafNode&, const LeafNode&) = default;
};

using TreeNode = std::variant<SplitNode, LeafNode>;

struct TreeParams {
    std::size_t max_depth = 12;
    std::size_t min_samples_leaf = 2;
    std::size_t features_per_split = 1;
    Criterion criterion = Criterion::gini;

    friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

// Nodes are stored flat in preorder; node 0 is the root.
class DecisionTree {
public:
    DecisionTree() = default;
    DecisionTree(std::vector<TreeNode> nodes, TreeParams params)
        : nodes_(std::move(nodes)), params_(params) {
        detail::require(!nodes_.empty(), "a decision tree needs at least one node");
        // Preorder layout: children always follow their parent, so no cycles.
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (const auto* split = std::get_if<SplitNode>(&nodes_[i])) {
                detail::require(split->left > i && split->right > i &&
                                    split->left < nodes_.size() && split->right < nodes_.size(),
                                "decision tree child index out of range");
            }
        }
    }

    Sentiment predict(std::span<const double> x) const {
        std::size_t i = 0;
        while (true) {
            const auto& node = nodes_[i];
            if (const auto* leaf = std::get_if<LeafNode>(&node)) {
                return leaf->label;
            }
            const auto& split = std::get<SplitNode>(node);
            i = x[split.feature] <= split.threshold ? split.left : split.right;
        }
    }

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeParams& params() const noexcept { return params_; }

    // Longest root-to-leaf path, in edges.
    std::size_t depth() const { return depth_from(0); }

    std::size_t leaf_count() const {
        return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) {
            return std::holds_alternative<LeafNode>(n);
        }));
    }

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    std::size_t depth_from(std::size_t i) const {
        if (const auto* split = std::get_if<SplitNode>(&nodes_[i])) {
            return 1 + std::max(depth_from(split->left), depth_from(split->right));
        }
        return 0;
    }

    std::vector<TreeNode> nodes_;
    TreeParams params_;
};

namespace detail {

class TreeGrower {
public:
    TreeGrower(const Matrix& x, std::span<const Sentiment> y, const TreeParams& params, Rng& rng)
        : x_(x), y_(y), params_(params), rng_(rng) {}

    std::vector<TreeNode> grow(std::vector<std::size_t> rows) {
        build(std::move(rows), 0);
        return std::move(nodes_);
    }

private:
    std::size_t build(std::vector<std::size_t> rows, std::size_t depth) {
        ClassCounts counts;
        for (const auto r : rows) {
            counts.add(y_[r]);
        }
        const std::size_t self = nodes_.size();
        nodes_.emplace_back(LeafNode{counts, counts.majority()});

        const std::size_t leaf_min = std::max<std::size_t>(params_.min_samples_leaf, 1);
        if (depth >= params_.max_depth || counts.pure() || rows.size() < 2 * leaf_min) {
            return self;
        }
        const auto features =
            rng_.sample_without_replacement(x_.cols(), params_.features_per_split);
        const auto split = best_split(x_, y_, rows, features, params_.criterion, leaf_min);
        if (!split) {
            return self;
        }

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (const auto r : rows) {
            (x_(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        const std::size_t left = build(std::move(left_rows), depth + 1);
        const std::size_t right = build(std::move(right_rows), depth + 1);
        nodes_[self] = SplitNode{split->feature, split->threshold, left, right};
        return self;
    }

    const Matrix& x_;
    std::span<const Sentiment> y_;
    const TreeParams& params_;
    Rng& rng_;
    std::vector<TreeNode> nodes_;
};

} // namespace detail

inline DecisionTree grow_tree(const Matrix& x, std::span<const Sentiment> y,
                              std::vector<std::size_t> rows, const TreeParams& params,
                              detail::Rng& rng) {
    detail::require(!rows.empty(), "cannot grow a tree on an empty sample set");
    detail::require(x.rows() == y.size(), "feature rows and labels differ in count");
    detail::require(params.features_per_split >= 1, "features_per_split must be positive");
    for (const auto r : rows) {
        detail::require(r < x.rows(), "sample index out of range");
    }
    detail::TreeGrower grower(x, y, params, rng);
    return DecisionTree(grower.grow(std::move(rows)), params);
}

inline DecisionTree grow_tree(const Matrix& x, std::span<const Sentiment> y,
                              const TreeParams& params, detail::Rng& rng) {
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return grow_tree(x, y, std::move(rows), params, rng);
}

struct ForestParams {
    std::size_t trees = 100;
    std::size_t max_depth = 12;
    std::size_t min_samples_leaf = 2;
    std::size_t features_per_split = 0;  // 0 selects ceil(sqrt(V))
    Criterion criterion = Criterion::gini;
    std::uint64_t seed = 42;
    bool bootstrap = true;  // false trains every tree on all rows

    void validate() const {
        detail::require(trees >= 1, "forest needs at least one tree");
        detail::require(max_depth >= 1, "max_depth must be >= 1");
        detail::require(min_samples_leaf >= 1, "min_samples_leaf must be >= 1");
    }

    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

// Mean of +1/-1 votes; non-negative mean is +1.
inline Sentiment majority_vote(std::span<const Sentiment> votes) {
    detail::require(!votes.empty(), "majority vote needs at least one vote");
    long long sum = 0;
    for (const auto v : votes) {
        sum += to_int(v);
    }
    const double mean = static_cast<double>(sum) / static_cast<double>(votes.size());
    return mean >= 0.0 ? Sentiment::positive : Sentiment::negative;
}

class RandomForest {
public:
    RandomForest() = default;
    RandomForest(std::vector<DecisionTree> trees, std::size_t dimension,
                 std::size_t features_per_split, std::uint64_t seed)
        : trees_(std::move(trees)),
          dimension_(dimension),
          features_per_split_(features_per_split),
          seed_(seed) {
        detail::require(!trees_.empty(), "forest needs at least one tree");
    }

    static RandomForest fit(const Matrix& x, std::span<const Sentiment> y,
                            const ForestParams& params) {
        params.validate();
        detail::require(x.rows() == y.size(), "feature rows and labels differ in count");
        detail::require(x.rows() >= 2, "forest needs at least two samples");
        detail::require(x.cols() >= 1, "forest needs at least one feature");
        const auto positives = std::count(y.begin(), y.end(), Sentiment::positive);
        detail::require(positives > 0 && static_cast<std::size_t>(positives) < y.size(),
                        "training labels must contain both classes");

        const std::size_t dim = x.cols();
        const std::size_t fps =
            params.features_per_split == 0
                ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim))))
                : std::min(params.features_per_split, dim);
        const TreeParams tree_params{params.max_depth, params.min_samples_leaf, fps,
                                     params.criterion};

        const std::size_t n = x.rows();
        std::vector<DecisionTree> trees;
        trees.reserve(params.trees);
        for (std::size_t t = 0; t < params.trees; ++t) {
            detail::Rng rng(params.seed, t);
            std::vector<std::size_t> rows(n);
            for (std::size_t k = 0; k < n; ++k) {
                rows[k] = params.bootstrap ? rng.index(n) : k;
            }
            trees.push_back(grow_tree(x, y, std::move(rows), tree_params, rng));
        }
        return RandomForest(std::move(trees), dim, fps, params.seed);
    }

    // Mean of the per-tree +1/-1 outputs.
    double mean_vote(std::span<const double> x) const {
        check_dimension(x);
        long long sum = 0;
        for (const auto& tree : trees_) {
            sum += to_int(tree.predict(x));
        }
        return static_cast<double>(sum) / static_cast<double>(trees_.size());
    }

    Sentiment predict(std::span<const double> x) const {
        return mean_vote(x) >= 0.0 ? Sentiment::positive : Sentiment::negative;
    }

    std::size_t size() const noexcept { return trees_.size(); }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t features_per_split() const noexcept { return features_per_split_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

    friend bool operator==(const RandomForest&, const RandomForest&) = default;

private:
    void check_dimension(std::span<const double> x) const {
        if (x.size() != dimension_) {
            throw ValidationError("input dimension " + std::to_string(x.size()) +
                                  " does not match forest dimension " +
                                  std::to_string(dimension_));
        }
    }

    std::vector<DecisionTree> trees_;
    std::size_t dimension_ = 0;
    std::size_t features_per_split_ = 0;
    std::uint64_t seed_ = 0;
};

struct ScoredTweet {
    Date date;
    Sentiment score = Sentiment::positive;

    friend bool operator==(const ScoredTweet&, const ScoredTweet&) = default;
};

inline std::vector<ScoredTweet> score_tweets(const RandomForest& forest, const TfIdfModel& model,
                                             const std::vector<TweetRecord>& tweets) {
    std::vector<ScoredTweet> scored;
    scored.reserve(tweets.size());
    for (const auto& tweet : tweets) {
        const auto x = model.vectorize(tokenize(tweet.text));
        scored.push_back({tweet.date, forest.predict(x)});
    }
    return scored;
}

inline DailyIndex daily_sentiment_index(const std::vector<ScoredTweet>& scored) {
    DailyIndex index;
    for (const auto& s : scored) {
        index[s.date] += to_int(s.score);
    }
    return index;
}

} // namespace stockcast
