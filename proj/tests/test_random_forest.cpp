#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "stockcast/stockcast.hpp"

using namespace stockcast;

namespace {

constexpr auto P = Sentiment::positive;
constexpr auto N = Sentiment::negative;

ClassCounts counts(std::size_t pos, std::size_t neg) { return {pos, neg}; }

Matrix column(std::initializer_list<double> v) {
    Matrix x(v.size(), 1);
    std::size_t r = 0;
    for (double e : v) x(r++, 0) = e;
    return x;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    std::iota(r.begin(), r.end(), std::size_t{0});
    return r;
}

// Positive iff feature 0 > 0.5, with `noise` of labels flipped.
std::pair<Matrix, std::vector<Sentiment>> threshold_dataset(std::size_t n, double noise,
                                                             std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix x(n, 3);
    std::vector<Sentiment> y;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < 3; ++c) x(r, c) = u(gen);
        bool pos = x(r, 0) > 0.5;
        if (u(gen) < noise) pos = !pos;
        y.push_back(pos ? P : N);
    }
    return {std::move(x), std::move(y)};
}

} // namespace

TEST(Impurity, GiniValues) {
    EXPECT_EQ(gini(counts(8, 0)), 0.0);
    EXPECT_EQ(gini(counts(4, 4)), 0.5);
    EXPECT_DOUBLE_EQ(gini(counts(6, 2)), 0.375);
}

TEST(Impurity, EntropyValues) {
    EXPECT_EQ(entropy(counts(5, 0)), 0.0);
    EXPECT_EQ(entropy(counts(1, 1)), 1.0);
    EXPECT_NEAR(entropy(counts(3, 1)), 0.8113, 5e-5);
}

TEST(Impurity, BoundsProperty) {
    std::mt19937_64 gen(2);
    std::uniform_int_distribution<std::size_t> c(0, 10000);
    for (int i = 0; i < 2000; ++i) {
        const auto pos = c(gen);
        const auto neg = std::min<std::size_t>(c(gen), 10000 - pos);
        if (pos + neg == 0) continue;
        const double g = gini(counts(pos, neg));
        const double h = entropy(counts(pos, neg));
        EXPECT_GE(g, 0.0);
        EXPECT_LE(g, 0.5);
        EXPECT_GE(h, 0.0);
        EXPECT_LE(h, 1.0);
    }
}

TEST(Split, OneDimensionalExample) {
    const auto x = column({0, 1, 2, 3});
    const std::vector<Sentiment> y = {N, N, P, P};
    const auto rows = all_rows(4);
    const std::vector<std::size_t> f = {0};
    const auto s = best_split(x, y, rows, f, Criterion::gini);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->feature, 0u);
    EXPECT_EQ(s->threshold, 1.5);
    EXPECT_DOUBLE_EQ(s->impurity_decrease, 0.5);
}

TEST(Split, NoneForConstantFeaturesOrPureLabels) {
    const std::vector<std::size_t> f = {0};
    const auto rows = all_rows(3);
    EXPECT_FALSE(best_split(column({1, 1, 1}), std::vector<Sentiment>{N, P, N}, rows, f, Criterion::gini));
    EXPECT_FALSE(best_split(column({1, 2, 3}), std::vector<Sentiment>{P, P, P}, rows, f, Criterion::gini));
}

TEST(Split, MatchesBruteForceOracle) {
    std::mt19937_64 gen(20240601);
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = oracle::random_split_case(gen);
        for (auto crit : {Criterion::gini, Criterion::entropy}) {
            const auto got = best_split(c.x, c.y, c.rows, c.features, crit);
            const auto want = oracle::brute_force_split(c.x, c.y, c.rows, c.features, crit);
            ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
            if (got) {
                EXPECT_EQ(got->feature, want->feature) << "trial " << trial;
                EXPECT_EQ(got->threshold, want->threshold) << "trial " << trial;
                EXPECT_NEAR(got->impurity_decrease, want->decrease, 1e-12);
            }
        }
    }
}

TEST(Split, HonoursMinSamplesLeaf) {
    const auto x = column({0, 1, 2, 3, 4});
    const std::vector<Sentiment> y = {N, P, P, P, P};
    const std::vector<std::size_t> f = {0};
    const auto rows = all_rows(5);
    EXPECT_EQ(best_split(x, y, rows, f, Criterion::gini, 1)->threshold, 0.5);
    const auto s = best_split(x, y, rows, f, Criterion::gini, 2);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->threshold, 1.5);
}

TEST(Tree, PureInputIsSingleLeaf) {
    detail::Rng rng(1, 0);
    const auto t = grow_tree(column({1, 2, 3}), std::vector<Sentiment>{N, N, N}, TreeParams{}, rng);
    EXPECT_EQ(t.nodes().size(), 1u);
    EXPECT_EQ(t.predict(std::vector<double>{9.0}), N);
}

TEST(Tree, DepthZeroIsMajorityLeaf) {
    detail::Rng rng(1, 0);
    TreeParams p;
    p.max_depth = 0;
    const auto t = grow_tree(column({1, 2, 3}), std::vector<Sentiment>{N, P, N}, p, rng);
    EXPECT_EQ(t.nodes().size(), 1u);
    EXPECT_EQ(t.predict(std::vector<double>{2.0}), N);
    // Tie resolves to +1.
    const auto tie = grow_tree(column({1, 2}), std::vector<Sentiment>{N, P}, p, rng);
    EXPECT_EQ(tie.predict(std::vector<double>{1.0}), P);
}

TEST(Tree, SeparableSetIsDepthOne) {
    detail::Rng rng(1, 0);
    const auto x = column({0.1, 0.4, 0.2, 0.9, 0.7, 0.8});
    const std::vector<Sentiment> y = {N, N, N, P, P, P};
    TreeParams p;
    p.min_samples_leaf = 1;
    const auto t = grow_tree(x, y, p, rng);
    EXPECT_EQ(t.depth(), 1u);
    const auto want = oracle::brute_force_split(x, y, all_rows(6), {0}, Criterion::gini);
    EXPECT_EQ(std::get<SplitNode>(t.nodes()[0]).threshold, want->threshold);
    for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(t.predict(x.row(r)), y[r]);
}

TEST(Tree, RejectsCyclicNodeLayout) {
    std::vector<TreeNode> nodes = {SplitNode{0, 0.5, 0, 1}, LeafNode{}};
    EXPECT_THROW(DecisionTree(nodes, TreeParams{}), ValidationError);
}

TEST(Vote, MajorityAndTies) {
    EXPECT_EQ(majority_vote(std::vector<Sentiment>{P, P, N}), P);
    EXPECT_EQ(majority_vote(std::vector<Sentiment>{N, N, N}), N);
    EXPECT_EQ(majority_vote(std::vector<Sentiment>{P, N}), P);
}

TEST(Forest, DeterministicForSeed) {
    auto [x, y] = threshold_dataset(120, 0.05, 4);
    ForestParams p;
    p.trees = 10;
    p.seed = 99;
    const auto a = RandomForest::fit(x, y, p);
    const auto b = RandomForest::fit(x, y, p);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), 10u);
    EXPECT_EQ(a.features_per_split(), 2u);  // ceil(sqrt(3))
}

TEST(Forest, HoldoutAccuracyOnThresholdRule) {
    auto [x, y] = threshold_dataset(200, 0.05, 8);
    auto [tx, ty] = threshold_dataset(400, 0.0, 9);
    ForestParams p;
    p.trees = 25;
    const auto f = RandomForest::fit(x, y, p);
    std::size_t hit = 0;
    for (std::size_t r = 0; r < tx.rows(); ++r) hit += f.predict(tx.row(r)) == ty[r];
    EXPECT_GE(static_cast<double>(hit) / tx.rows(), 0.90);
}

TEST(Forest, SingleTreeForestEqualsItsTree) {
    auto [x, y] = threshold_dataset(80, 0.2, 5);
    ForestParams p;
    p.trees = 1;
    const auto f = RandomForest::fit(x, y, p);
    auto [probe, unused] = threshold_dataset(200, 0.0, 6);
    for (std::size_t r = 0; r < probe.rows(); ++r) {
        EXPECT_EQ(f.predict(probe.row(r)), f.trees()[0].predict(probe.row(r)));
    }
}

TEST(Forest, PureGrowthFitsConsistentData) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto [x, y] = threshold_dataset(60, 0.3, seed);
        ForestParams p;
        p.trees = 1;
        p.max_depth = 1000;
        p.min_samples_leaf = 1;
        p.features_per_split = 3;
        p.bootstrap = false;
        const auto f = RandomForest::fit(x, y, p);
        for (std::size_t r = 0; r < x.rows(); ++r) EXPECT_EQ(f.predict(x.row(r)), y[r]);
    }
}

TEST(Forest, Preconditions) {
    auto [x, y] = threshold_dataset(10, 0.0, 1);
    std::vector<Sentiment> one_class(10, P);
    EXPECT_THROW(RandomForest::fit(x, one_class, {}), ValidationError);
    ForestParams zero;
    zero.trees = 0;
    EXPECT_THROW(RandomForest::fit(x, y, zero), ValidationError);
    ForestParams p;
    p.trees = 2;
    const auto f = RandomForest::fit(x, y, p);
    EXPECT_THROW(f.predict(std::vector<double>{1.0}), ValidationError);
}

TEST(SentimentIndex, DailySums) {
    const Date a = *parse_date("2021-01-04");
    const Date b = *parse_date("2021-01-05");
    std::vector<ScoredTweet> s = {{a, P}, {a, N}, {a, P}};
    for (int i = 0; i < 5; ++i) s.push_back({b, P});
    for (int i = 0; i < 2; ++i) s.push_back({b, N});
    const auto idx = daily_sentiment_index(s);
    EXPECT_EQ(idx.at(a), 1);
    EXPECT_EQ(idx.at(b), 3);
    EXPECT_FALSE(idx.count(*parse_date("2021-01-06")));
    long long total = 0, scores = 0;
    for (auto& [day, v] : idx) total += v;
    for (auto& t : s) scores += to_int(t.score);
    EXPECT_EQ(total, scores);
    EXPECT_TRUE(daily_sentiment_index({}).empty());
}

TEST(SentimentIndex, ScoringRoutesOovTweets) {
    const std::vector<Tokens> corpus = {{"gain", "up"}, {"loss", "down"}, {"gain", "rally"}, {"loss", "drop"}};
    auto [m, x] = fit_transform(corpus, {1, 100});
    ForestParams p;
    p.trees = 5;
    const auto f = RandomForest::fit(x, std::vector<Sentiment>{P, N, P, N}, p);
    const std::vector<TweetRecord> tweets = {{*parse_date("2021-01-04"), "zzz qqq", std::nullopt}};
    const auto a = score_tweets(f, m, tweets);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].score, f.predict(Vector(m.dimension(), 0.0)));
    EXPECT_TRUE(score_tweets(f, m, {}).empty());
}
