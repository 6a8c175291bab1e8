#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "stockcast/stockcast.hpp"

using namespace stockcast;

namespace {

PipelineConfig small_config(std::uint64_t seed = 4) {
    PipelineConfig cfg;
    cfg.set_seed(seed);
    cfg.forest.trees = 10;
    cfg.network.hidden = 4;
    cfg.network.filters = 3;
    cfg.network.window_length = 8;
    cfg.training.epochs = 5;
    return cfg;
}

const SyntheticData& market() {
    static const auto data = generate_synthetic({.days = 120, .seed = 4});
    return data;
}

// Smooth, fully learnable closes.
std::vector<Candle> wave_candles(std::size_t n) {
    std::vector<Candle> out;
    Date day = *parse_date("2022-01-03");
    for (std::size_t t = 0; t < n; ++t) {
        const double c = 100.0 + 10.0 * std::sin(0.2 * static_cast<double>(t));
        out.push_back({day, c, c + 0.5, c - 0.5, c});
        day = add_days(day, 1);
    }
    return out;
}

} // namespace

TEST(Config, DefaultsAndOverrides) {
    const auto cfg = parse_config_text(R"({
        "candles": "c.csv", "seed": 9, "split_fraction": 0.75,
        "sentiment": {"trees": 7, "criterion": "entropy", "min_df": 1},
        "network": {"hidden": 5, "conv_activation": "relu", "epochs": 3, "learning_rate": 0.01}
    })");
    EXPECT_EQ(cfg.candles_path, "c.csv");
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_EQ(cfg.forest.seed, 9u);
    EXPECT_EQ(cfg.training.seed, 9u);
    EXPECT_EQ(cfg.forest.trees, 7u);
    EXPECT_EQ(cfg.forest.criterion, Criterion::entropy);
    EXPECT_EQ(cfg.network.hidden, 5u);
    EXPECT_EQ(cfg.network.filters, 16u);
    EXPECT_EQ(cfg.network.conv_activation, Activation::relu);
    EXPECT_EQ(cfg.split_fraction, 0.75);
    EXPECT_EQ(parse_config(to_json(cfg)).forest, cfg.forest);
}

TEST(Config, StrictValidation) {
    for (const char* bad : {
             R"({"sed": 1})",
             R"({"sentiment": {"tree": 3}})",
             R"({"network": {"hidden": -1}})",
             R"({"network": {"hidden": 0}})",
             R"({"network": {"window_length": 3, "kernel_half_width": 2}})",
             R"({"split_fraction": 1.0})",
             R"({"sentiment": {"criterion": "gain"}})",
             R"({"network": {"learning_rate": "fast"}})",
             R"([1, 2])",
             R"({"seed": 1,)",
         }) {
        EXPECT_THROW(parse_config_text(bad), ValidationError) << bad;
    }
}

TEST(Sentiment, PlantedCorpusAccuracy) {
    const auto r = train_sentiment(small_config(), generate_labeled_corpus(200, 1));
    EXPECT_EQ(r.holdout_size, 80u);
    EXPECT_GE(r.holdout_report.accuracy, 0.95);
    EXPECT_EQ(r.holdout_confusion.total(), 80u);
}

TEST(Sentiment, Preconditions) {
    auto one_class = generate_labeled_corpus(10, 1);
    std::erase_if(one_class, [](const TweetRecord& t) { return t.label == Sentiment::negative; });
    EXPECT_THROW(train_sentiment(small_config(), one_class), ValidationError);
    EXPECT_THROW(train_sentiment(small_config(), generate_labeled_corpus(4, 1)), ValidationError);
}

TEST(Sentiment, RerunIsIdentical) {
    const auto tweets = generate_labeled_corpus(40, 2);
    const auto a = train_sentiment(small_config(), tweets);
    const auto b = train_sentiment(small_config(), tweets);
    EXPECT_EQ(to_json(a), to_json(b));
    EXPECT_EQ(a.model.forest, b.model.forest);
}

TEST(Score, DailyIndexCsv) {
    const auto model = train_sentiment(small_config(), generate_labeled_corpus(40, 2)).model;
    const Date day = *parse_date("2021-06-01");
    const std::vector<TweetRecord> tweets = {{day, "gain stock", std::nullopt},
                                             {day, "shares gain today", std::nullopt},
                                             {day, "loss market", std::nullopt}};
    std::ostringstream out;
    write_daily_index(out, score_daily_index(model, tweets));
    EXPECT_EQ(out.str(), "date,index\n2021-06-01,1\n");

    std::ostringstream empty;
    write_daily_index(empty, score_daily_index(model, {}));
    EXPECT_EQ(empty.str(), "date,index\n");
}

TEST(Forecast, WithoutNlpZeroesSentimentColumn) {
    DailyIndex index;
    for (const auto& c : market().candles) index[c.date] = 3;
    index[market().candles[5].date] = -4;
    const ForecastSettings settings{Variant::without_nlp, 1, 0.8};
    const auto data = build_forecast_data(market().candles, index, settings, 8);
    for (const auto* ds : {&data.train, &data.test}) {
        for (const auto& w : ds->windows) {
            for (std::size_t r = 0; r < w.input.rows(); ++r) EXPECT_EQ(w.input(r, kSentiment), 0.0);
        }
    }
}

TEST(Forecast, VariantsDifferOnlyInSentimentColumn) {
    const auto cfg = small_config();
    const auto index = score_daily_index(train_sentiment(cfg, market().tweets).model, market().tweets);
    const auto with = build_forecast_data(market().candles, index, {Variant::with_nlp, 1, 0.8}, 8);
    const auto without = build_forecast_data(market().candles, index, {Variant::without_nlp, 1, 0.8}, 8);
    ASSERT_EQ(with.train.size(), without.train.size());
    ASSERT_EQ(with.test.size(), without.test.size());
    bool sentiment_differs = false;
    for (std::size_t k = 0; k < with.test.size(); ++k) {
        const auto& a = with.test.windows[k];
        const auto& b = without.test.windows[k];
        EXPECT_EQ(a.target, b.target);
        EXPECT_EQ(a.target_row, b.target_row);
        for (std::size_t r = 0; r < a.input.rows(); ++r) {
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                if (f == kSentiment) {
                    sentiment_differs |= a.input(r, f) != b.input(r, f);
                } else {
                    EXPECT_EQ(a.input(r, f), b.input(r, f));
                }
            }
        }
    }
    EXPECT_TRUE(sentiment_differs);
}

TEST(Forecast, SplitAndLeakage) {
    const auto data = build_forecast_data(market().candles, {}, {Variant::with_nlp, 1, 0.8}, 8);
    EXPECT_EQ(data.train_rows, 96u);
    EXPECT_EQ(data.train.size() + data.test.size(), window_count(120, 8, 1));
    for (const auto& w : data.train.windows) EXPECT_LT(w.target_row, data.train_rows);
    for (const auto& w : data.test.windows) EXPECT_GE(w.target_row, data.train_rows);
    EXPECT_EQ(data.test.size(), 24u);
    // The scaler never sees test rows.
    double train_max = 0;
    for (std::size_t r = 0; r < data.train_rows; ++r) train_max = std::max(train_max, data.series.rows[r].close);
    EXPECT_EQ(data.scaler.max()[kClose], train_max);
}

TEST(Forecast, HistoryLengthAndChecksum) {
    const auto cfg = small_config();
    const auto a = train_forecaster(cfg, market().candles, {}, Variant::without_nlp);
    const auto b = train_forecaster(cfg, market().candles, {}, Variant::without_nlp);
    EXPECT_EQ(a.loss_history.size(), cfg.training.epochs);
    EXPECT_EQ(bundle_checksum(serialize_bundle(make_bundle(cfg, nullptr, &a))),
              bundle_checksum(serialize_bundle(make_bundle(cfg, nullptr, &b))));
}

TEST(Forecast, SeriesTooShort) {
    const auto cfg = small_config();
    const std::vector<Candle> few(market().candles.begin(), market().candles.begin() + 9);
    EXPECT_THROW(train_forecaster(cfg, few, {}, Variant::with_nlp), ValidationError);
}

TEST(Evaluate, CsvMatchesReportAndWindowCount) {
    const auto cfg = small_config();
    const auto trained = train_forecaster(cfg, market().candles, {}, Variant::with_nlp);
    const auto bundle = make_bundle(cfg, nullptr, &trained);
    const auto ev = evaluate(bundle, market().candles, {}, EvalSplit::test);
    const auto data = build_forecast_data(market().candles, {}, *bundle.forecast, 8, bundle.scaler);
    EXPECT_EQ(ev.predictions.size(), data.test.size());

    std::stringstream csv;
    write_predictions(csv, ev.predictions);
    const auto back = load_predictions(csv);
    ASSERT_EQ(back.size(), ev.predictions.size());
    const auto again = report_for(back);
    EXPECT_EQ(again.mse, ev.report->mse);
    EXPECT_EQ(again.msle, ev.report->msle);
    EXPECT_EQ(again.r_squared, ev.report->r_squared);
    for (std::size_t k = 0; k < back.size(); ++k) {
        EXPECT_EQ(back[k].date, data.series.rows[data.test.windows[k].target_row].date);
    }
}

TEST(Evaluate, OverfitToyRunFitsTrainingSet) {
    auto cfg = small_config();
    cfg.network.hidden = 8;
    cfg.network.filters = 4;
    cfg.training.epochs = 300;
    cfg.training.learning_rate = 0.01;
    const auto candles = wave_candles(80);
    const auto trained = train_forecaster(cfg, candles, {}, Variant::without_nlp);
    const auto ev = evaluate(make_bundle(cfg, nullptr, &trained), candles, {}, EvalSplit::train);
    ASSERT_TRUE(ev.report->r_squared);
    EXPECT_GT(*ev.report->r_squared, 0.99);
}

TEST(Compare, SharedTestRowsAndFourMetricSchema) {
    const auto report = compare(small_config(), market().candles, market().tweets);
    ASSERT_EQ(report.with_nlp.predictions.size(), report.without_nlp.predictions.size());
    for (std::size_t k = 0; k < report.with_nlp.predictions.size(); ++k) {
        EXPECT_EQ(report.with_nlp.predictions[k].date, report.without_nlp.predictions[k].date);
    }
    const auto doc = to_json(report);
    for (const char* v : {"with_nlp", "without_nlp"}) {
        const auto& m = doc["variants"][v];
        EXPECT_EQ(m.size(), 4u);
        for (const char* key : {"mse", "rmse", "r_squared", "msle"}) EXPECT_TRUE(m.contains(key)) << key;
    }
    EXPECT_EQ(doc["seed"], 4);
    EXPECT_EQ(parameter_count(report.with_nlp.network), parameter_count(report.without_nlp.network));
}

TEST(Synthetic, OhlcInvariantOverThousandDays) {
    const auto data = generate_synthetic({.days = 1000, .seed = 21});
    ASSERT_EQ(data.candles.size(), 1000u);
    for (std::size_t t = 0; t < data.candles.size(); ++t) {
        const auto& c = data.candles[t];
        EXPECT_TRUE(c.valid()) << t;
        EXPECT_FALSE(is_weekend(c.date));
        if (t) EXPECT_LT(data.candles[t - 1].date, c.date);
    }
    for (const auto& tw : data.tweets) EXPECT_TRUE(tw.label);
}

TEST(Synthetic, SeededAndValidated) {
    EXPECT_EQ(generate_synthetic({.days = 60, .seed = 2}).tweets,
              generate_synthetic({.days = 60, .seed = 2}).tweets);
    EXPECT_THROW(generate_synthetic({.days = 49}), ValidationError);
    EXPECT_THROW(generate_synthetic({.shock_probability = 1.5}), ValidationError);
}

TEST(Synthetic, LinearProbeSeesPlantedSignal) {
    // Regress next-day log return on the day's net tweet label sum.
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (double magnitude : {0.02, 0.0}) {
            const auto data = generate_synthetic({.days = 400, .shock_magnitude = magnitude, .seed = seed});
            DailyIndex net;
            for (const auto& t : data.tweets) net[t.date] += to_int(*t.label);
            std::vector<int> x;
            for (const auto& c : data.candles) x.push_back(net.count(c.date) ? static_cast<int>(net[c.date]) : 0);
            const auto probe = oracle::linear_probe(data.candles, x);
            if (magnitude > 0) {
                EXPECT_GT(probe.t_stat, 10.0) << seed;
            } else {
                EXPECT_LT(std::abs(probe.t_stat), 4.0) << seed;
            }
        }
    }
}
