#pragma once

// End-to-end orchestration: configuration, sentiment training and scoring,
// forecaster training, evaluation, and the with/without-sentiment comparison.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "stockcast/bundle.hpp"
#include "stockcast/data_model.hpp"
#include "stockcast/detail/random.hpp"
#include "stockcast/error.hpp"
#include "stockcast/metrics.hpp"
#include "stockcast/neural_net.hpp"
#include "stockcast/random_forest.hpp"
#include "stockcast/text_vectorizer.hpp"

namespace stockcast {

using json = nlohmann::json;

struct PipelineConfig {
    std::string candles_path;
    std::string tweets_path;

    VectorizerParams vectorizer;
    ForestParams forest;

    NetworkShape network;
    std::size_t horizon = 1;
    TrainConfig training;

    double split_fraction = 0.8;
    std::uint64_t seed = 42;

    // Propagates the single run seed into every component.
    void set_seed(std::uint64_t s) {
        seed = s;
        forest.seed = s;
        training.seed = s;
    }

    void validate() const {
        forest.validate();
        detail::require(vectorizer.min_df >= 1, "sentiment.min_df must be >= 1");
        detail::require(vectorizer.max_terms >= 1, "sentiment.max_terms must be >= 1");
        network.validate();
        detail::require(horizon >= 1, "network.horizon must be >= 1");
        detail::require(training.epochs >= 1, "network.epochs must be >= 1");
        detail::require(training.batch_size >= 1, "network.batch_size must be >= 1");
        detail::require(training.learning_rate > 0.0 && std::isfinite(training.learning_rate),
                        "network.learning_rate must be positive");
        detail::require(split_fraction > 0.0 && split_fraction < 1.0,
                        "split_fraction must lie in (0, 1)");
    }
};

namespace detail {

template <class T>
T json_get(const json& value, const std::string& key) {
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config key `" + key + "` has the wrong type");
    }
}

inline std::size_t json_count(const json& value, const std::string& key) {
    if (!value.is_number_integer() || value.get<long long>() < 0) {
        throw ValidationError("config key `" + key + "` must be a non-negative integer");
    }
    return value.get<std::size_t>();
}

inline double json_real(const json& value, const std::string& key) {
    if (!value.is_number()) {
        throw ValidationError("config key `" + key + "` must be a number");
    }
    return value.get<double>();
}

inline Criterion parse_criterion(const std::string& name) {
    if (name == "gini") return Criterion::gini;
    if (name == "entropy") return Criterion::entropy;
    throw ValidationError("unknown split criterion `" + name + "`");
}

inline void require_object(const json& value, const std::string& key) {
    if (!value.is_object()) {
        throw ValidationError("config key `" + key + "` must be an object");
    }
}

} // namespace detail

// Strict: every key is optional, unknown keys are errors.
inline PipelineConfig parse_config(const json& doc) {
    detail::require_object(doc, "<root>");
    PipelineConfig cfg;
    std::optional<std::uint64_t> seed;
    for (const auto& [key, value] : doc.items()) {
        if (key == "candles") {
            cfg.candles_path = detail::json_get<std::string>(value, key);
        } else if (key == "tweets") {
            cfg.tweets_path = detail::json_get<std::string>(value, key);
        } else if (key == "seed") {
            if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0)) {
                throw ValidationError("config key `seed` must be a non-negative integer");
            }
            seed = value.get<std::uint64_t>();
        } else if (key == "split_fraction") {
            cfg.split_fraction = detail::json_real(value, key);
        } else if (key == "sentiment") {
            detail::require_object(value, key);
            for (const auto& [k, v] : value.items()) {
                const std::string path = "sentiment." + k;
                if (k == "min_df") cfg.vectorizer.min_df = detail::json_count(v, path);
                else if (k == "max_terms") cfg.vectorizer.max_terms = detail::json_count(v, path);
                else if (k == "trees") cfg.forest.trees = detail::json_count(v, path);
                else if (k == "max_depth") cfg.forest.max_depth = detail::json_count(v, path);
                else if (k == "min_samples_leaf") cfg.forest.min_samples_leaf = detail::json_count(v, path);
                else if (k == "features_per_split") cfg.forest.features_per_split = detail::json_count(v, path);
                else if (k == "criterion") cfg.forest.criterion = detail::parse_criterion(detail::json_get<std::string>(v, path));
                else throw ValidationError("unknown config key `" + path + "`");
            }
        } else if (key == "network") {
            detail::require_object(value, key);
            for (const auto& [k, v] : value.items()) {
                const std::string path = "network." + k;
                if (k == "hidden") cfg.network.hidden = detail::json_count(v, path);
                else if (k == "filters") cfg.network.filters = detail::json_count(v, path);
                else if (k == "kernel_half_width") cfg.network.half_width = detail::json_count(v, path);
                else if (k == "window_length") cfg.network.window_length = detail::json_count(v, path);
                else if (k == "conv_activation") cfg.network.conv_activation = parse_activation(detail::json_get<std::string>(v, path));
                else if (k == "output_activation") cfg.network.output_activation = parse_activation(detail::json_get<std::string>(v, path));
                else if (k == "horizon") cfg.horizon = detail::json_count(v, path);
                else if (k == "learning_rate") cfg.training.learning_rate = detail::json_real(v, path);
                else if (k == "batch_size") cfg.training.batch_size = detail::json_count(v, path);
                else if (k == "epochs") cfg.training.epochs = detail::json_count(v, path);
                else throw ValidationError("unknown config key `" + path + "`");
            }
        } else {
            throw ValidationError("unknown config key `" + key + "`");
        }
    }
    cfg.set_seed(seed.value_or(cfg.seed));
    cfg.validate();
    return cfg;
}

inline PipelineConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

inline json to_json(const PipelineConfig& cfg) {
    json doc;
    doc["candles"] = cfg.candles_path;
    doc["tweets"] = cfg.tweets_path;
    doc["seed"] = cfg.seed;
    doc["split_fraction"] = cfg.split_fraction;
    doc["sentiment"] = {
        {"min_df", cfg.vectorizer.min_df},
        {"max_terms", cfg.vectorizer.max_terms},
        {"trees", cfg.forest.trees},
        {"max_depth", cfg.forest.max_depth},
        {"min_samples_leaf", cfg.forest.min_samples_leaf},
        {"features_per_split", cfg.forest.features_per_split},
        {"criterion", cfg.forest.criterion == Criterion::gini ? "gini" : "entropy"},
    };
    doc["network"] = {
        {"hidden", cfg.network.hidden},
        {"filters", cfg.network.filters},
        {"kernel_half_width", cfg.network.half_width},
        {"window_length", cfg.network.window_length},
        {"conv_activation", std::string(to_string(cfg.network.conv_activation))},
        {"output_activation", std::string(to_string(cfg.network.output_activation))},
        {"horizon", cfg.horizon},
        {"learning_rate", cfg.training.learning_rate},
        {"batch_size", cfg.training.batch_size},
        {"epochs", cfg.training.epochs},
    };
    return doc;
}

// ---------------------------------------------------------------------------
// Sentiment
// ---------------------------------------------------------------------------

struct SentimentModel {
    TfIdfModel vectorizer;
    RandomForest forest;
};

struct SentimentTraining {
    SentimentModel model;
    ConfusionMatrix holdout_confusion;
    ClassificationReport holdout_report;
    std::size_t train_size = 0;
    std::size_t holdout_size = 0;
};

inline constexpr std::size_t kMinLabeledTweets = 10;

// Stratified 80/20 holdout; vectorizer and forest see only the 80%.
inline SentimentTraining train_sentiment(const PipelineConfig& cfg,
                                         const std::vector<TweetRecord>& tweets) {
    std::vector<const TweetRecord*> pos;
    std::vector<const TweetRecord*> neg;
    for (const auto& t : tweets) {
        if (t.label) {
            (*t.label == Sentiment::positive ? pos : neg).push_back(&t);
        }
    }
    detail::require(pos.size() + neg.size() >= kMinLabeledTweets,
                    "sentiment training needs at least " + std::to_string(kMinLabeledTweets) +
                        " labeled tweets");
    detail::require(!pos.empty() && !neg.empty(),
                    "sentiment training needs both positive and negative labels");

    detail::Rng rng(cfg.seed, 2);
    std::vector<const TweetRecord*> train_set;
    std::vector<const TweetRecord*> holdout;
    for (auto* group : {&pos, &neg}) {
        rng.shuffle(*group);
        const auto n_train = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(group->size()))));
        train_set.insert(train_set.end(), group->begin(), group->begin() + static_cast<long>(n_train));
        holdout.insert(holdout.end(), group->begin() + static_cast<long>(n_train), group->end());
    }

    std::vector<Tokens> corpus;
    std::vector<Sentiment> labels;
    corpus.reserve(train_set.size());
    for (const auto* t : train_set) {
        corpus.push_back(tokenize(t->text));
        labels.push_back(*t->label);
    }
    auto [vectorizer, x] = fit_transform(corpus, cfg.vectorizer);
    auto forest = RandomForest::fit(x, labels, cfg.forest);

    SentimentTraining out{{std::move(vectorizer), std::move(forest)}, {}, {}, train_set.size(),
                          holdout.size()};
    if (!holdout.empty()) {
        std::vector<Sentiment> predicted;
        std::vector<Sentiment> truth;
        for (const auto* t : holdout) {
            predicted.push_back(out.model.forest.predict(out.model.vectorizer.vectorize(tokenize(t->text))));
            truth.push_back(*t->label);
        }
        out.holdout_confusion = confusion(predicted, truth);
        out.holdout_report = classification_report(out.holdout_confusion);
    }
    return out;
}

inline DailyIndex score_daily_index(const SentimentModel& model,
                                    const std::vector<TweetRecord>& tweets) {
    return daily_sentiment_index(score_tweets(model.forest, model.vectorizer, tweets));
}

// ---------------------------------------------------------------------------
// Forecasting
// ---------------------------------------------------------------------------

// Everything the forecaster consumes, exposed so callers can inspect the
// exact tensors a variant is trained and tested on.
struct ForecastData {
    AlignedSeries series;
    std::size_t train_rows = 0;
    Scaler scaler;
    WindowedDataset train;  // windows whose target row lies in the training split
    WindowedDataset test;   // windows whose target row lies in the test split
};

// Windows never look ahead: a window ending on day t only sees sentiment
// dated <= t. Test windows may reach back into training rows for inputs.
inline ForecastData build_forecast_data(const std::vector<Candle>& candles, const DailyIndex& index,
                                        const ForecastSettings& settings,
                                        std::size_t window_length,
                                        const std::optional<Scaler>& fitted = std::nullopt) {
    ForecastData data;
    data.series = align_daily(candles, settings.variant == Variant::with_nlp ? index : DailyIndex{});
    auto [train, test] = chronological_split(data.series, settings.train_fraction);
    data.train_rows = train.size();
    data.scaler = fitted ? *fitted : Scaler::fit(train);

    const auto rows = data.scaler.apply(data.series);
    const auto all = make_windows(rows, window_length, settings.horizon);
    data.train.window_length = data.test.window_length = window_length;
    data.train.horizon = data.test.horizon = settings.horizon;
    for (const auto& w : all.windows) {
        (w.target_row < data.train_rows ? data.train : data.test).windows.push_back(w);
    }
    detail::require(!data.train.empty(), "series too short: no training windows");
    return data;
}

struct ForecasterTraining {
    FusionNetwork network;
    Scaler scaler;
    ForecastSettings settings;
    std::vector<double> loss_history;
};

inline ForecasterTraining train_forecaster(const PipelineConfig& cfg,
                                           const std::vector<Candle>& candles,
                                           const DailyIndex& index, Variant variant) {
    cfg.validate();
    const ForecastSettings settings{variant, cfg.horizon, cfg.split_fraction};
    const auto data = build_forecast_data(candles, index, settings, cfg.network.window_length);
    auto init = FusionNetwork::initialized(cfg.network, cfg.seed);
    auto result = train(std::move(init), data.train, cfg.training);
    return {std::move(result.network), data.scaler, settings, std::move(result.loss_history)};
}

struct PredictionRow {
    Date date;
    double actual = 0.0;
    double predicted = 0.0;
};

enum class EvalSplit { train, test, all };

inline EvalSplit parse_eval_split(std::string_view name) {
    if (name == "train") return EvalSplit::train;
    if (name == "test") return EvalSplit::test;
    if (name == "all") return EvalSplit::all;
    throw ValidationError("unknown split `" + std::string(name) + "`");
}

// Predictions in price space (inverse-scaled close).
inline std::vector<PredictionRow> predict_rows(const FusionNetwork& net, const Scaler& scaler,
                                               const ForecastData& data, EvalSplit split) {
    std::vector<const Window*> windows;
    if (split != EvalSplit::test) {
        for (const auto& w : data.train.windows) windows.push_back(&w);
    }
    if (split != EvalSplit::train) {
        for (const auto& w : data.test.windows) windows.push_back(&w);
    }
    std::vector<PredictionRow> rows;
    rows.reserve(windows.size());
    for (const auto* w : windows) {
        const auto& target = data.series.rows[w->target_row];
        rows.push_back({target.date, target.close, scaler.invert(kClose, predict(net, w->input))});
    }
    return rows;
}

inline RegressionReport report_for(const std::vector<PredictionRow>& rows) {
    std::vector<double> predicted;
    std::vector<double> actual;
    for (const auto& r : rows) {
        predicted.push_back(r.predicted);
        actual.push_back(r.actual);
    }
    return regression_report(predicted, actual);
}

struct Evaluation {
    std::vector<PredictionRow> predictions;
    std::optional<RegressionReport> report;  // absent when there is nothing to score
};

inline Evaluation evaluate(const ModelBundle& bundle, const std::vector<Candle>& candles,
                           const DailyIndex& index, EvalSplit split, bool with_metrics = true) {
    if (!bundle.has_forecaster()) {
        throw ValidationError("model bundle has no trained forecaster");
    }
    const auto data = build_forecast_data(candles, index, *bundle.forecast,
                                          bundle.network->window_length, bundle.scaler);
    Evaluation ev;
    ev.predictions = predict_rows(*bundle.network, *bundle.scaler, data, split);
    if (with_metrics && !ev.predictions.empty()) {
        ev.report = report_for(ev.predictions);
    }
    return ev;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct VariantRun {
    Variant variant = Variant::with_nlp;
    RegressionReport report;
    std::vector<PredictionRow> predictions;
    std::vector<double> loss_history;
    FusionNetwork network;
    Scaler scaler;
};

struct ComparisonReport {
    PipelineConfig config;
    SentimentTraining sentiment;
    DailyIndex daily_index;
    VariantRun with_nlp;
    VariantRun without_nlp;
};

inline VariantRun run_variant(const PipelineConfig& cfg, const std::vector<Candle>& candles,
                              const DailyIndex& index, Variant variant) {
    auto trained = train_forecaster(cfg, candles, index, variant);
    const auto data = build_forecast_data(candles, index, trained.settings,
                                          cfg.network.window_length, trained.scaler);
    detail::require(!data.test.empty(), "series too short: no test windows");
    VariantRun run;
    run.variant = variant;
    run.predictions = predict_rows(trained.network, trained.scaler, data, EvalSplit::test);
    run.report = report_for(run.predictions);
    run.loss_history = std::move(trained.loss_history);
    run.network = std::move(trained.network);
    run.scaler = trained.scaler;
    return run;
}

// One sentiment model, one split, one seed; the variants differ only in the
// sentiment column.
inline ComparisonReport compare(const PipelineConfig& cfg, const std::vector<Candle>& candles,
                                const std::vector<TweetRecord>& tweets) {
    cfg.validate();
    ComparisonReport out;
    out.config = cfg;
    out.sentiment = train_sentiment(cfg, tweets);
    out.daily_index = score_daily_index(out.sentiment.model, tweets);
    out.with_nlp = run_variant(cfg, candles, out.daily_index, Variant::with_nlp);
    out.without_nlp = run_variant(cfg, candles, out.daily_index, Variant::without_nlp);

    const auto& a = out.with_nlp.predictions;
    const auto& b = out.without_nlp.predictions;
    bool same_dates = a.size() == b.size();
    for (std::size_t k = 0; same_dates && k < a.size(); ++k) {
        same_dates = a[k].date == b[k].date && a[k].actual == b[k].actual;
    }
    if (!same_dates) {
        throw RuntimeFailure("variants were evaluated on different test rows");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline json metrics_json(const RegressionReport& r) {
    return {{"mse", r.mse},
            {"rmse", r.rmse},
            {"r_squared", r.r_squared ? json(*r.r_squared) : json(nullptr)},
            {"msle", r.msle}};
}

inline json to_json(const ConfusionMatrix& cm) {
    return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

inline json to_json(const ClassificationReport& r) {
    return {{"accuracy", r.accuracy},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f1", r.f1},
            {"precision_degenerate", r.precision_degenerate},
            {"recall_degenerate", r.recall_degenerate}};
}

inline json to_json(const SentimentTraining& s) {
    return {{"train_size", s.train_size},
            {"holdout_size", s.holdout_size},
            {"vocabulary_size", s.model.vectorizer.dimension()},
            {"trees", s.model.forest.size()},
            {"confusion", to_json(s.holdout_confusion)},
            {"classification", to_json(s.holdout_report)}};
}

inline json to_json(const ComparisonReport& c) {
    json dates = json::array();
    json actual = json::array();
    json with = json::array();
    json without = json::array();
    for (std::size_t k = 0; k < c.with_nlp.predictions.size(); ++k) {
        dates.push_back(format_date(c.with_nlp.predictions[k].date));
        actual.push_back(c.with_nlp.predictions[k].actual);
        with.push_back(c.with_nlp.predictions[k].predicted);
        without.push_back(c.without_nlp.predictions[k].predicted);
    }
    return {{"seed", c.config.seed},
            {"config", to_json(c.config)},
            {"test_windows", c.with_nlp.report.n},
            {"sentiment", to_json(c.sentiment)},
            {"variants",
             {{"with_nlp", metrics_json(c.with_nlp.report)},
              {"without_nlp", metrics_json(c.without_nlp.report)}}},
            {"predictions",
             {{"date", dates}, {"actual", actual}, {"with_nlp", with}, {"without_nlp", without}}}};
}

inline void write_predictions(std::ostream& out, const std::vector<PredictionRow>& rows) {
    out << "date,actual,predicted\n";
    for (const auto& r : rows) {
        out << format_date(r.date) << ',' << detail::format_double(r.actual) << ','
            << detail::format_double(r.predicted) << '\n';
    }
}

inline std::vector<PredictionRow> load_predictions(std::istream& in) {
    detail::CsvReader reader(in);
    detail::expect_header(reader.next(), {"date", "actual", "predicted"});
    std::vector<PredictionRow> rows;
    while (auto record = reader.next()) {
        if (record->fields.size() != 3) {
            throw ValidationError(detail::at_line(record->line) + "malformed row");
        }
        const auto date = parse_date(record->fields[0]);
        const auto actual = detail::parse_double(record->fields[1]);
        const auto predicted = detail::parse_double(record->fields[2]);
        if (!date || !actual || !predicted) {
            throw ValidationError(detail::at_line(record->line) + "malformed row");
        }
        rows.push_back({*date, *actual, *predicted});
    }
    return rows;
}

inline ModelBundle make_bundle(const PipelineConfig& cfg, const SentimentModel* sentiment,
                               const ForecasterTraining* forecaster) {
    ModelBundle bundle;
    bundle.config_json = to_json(cfg).dump();
    if (sentiment) {
        bundle.vectorizer = sentiment->vectorizer;
        bundle.forest = sentiment->forest;
    }
    if (forecaster) {
        bundle.scaler = forecaster->scaler;
        bundle.forecast = forecaster->settings;
        bundle.network = forecaster->network;
    }
    return bundle;
}

} // namespace stockcast
