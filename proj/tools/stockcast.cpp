// stockcast command-line interface.
//
// Exit codes: 0 success, 1 validation error (bad flags, files or config),
// 2 runtime failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "stockcast/stockcast.hpp"

namespace fs = std::filesystem;
using namespace stockcast;

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

PipelineConfig resolve_config(const CommonOptions& opts) {
    PipelineConfig cfg = opts.config_path.empty() ? PipelineConfig{}
                                                  : parse_config_text(read_file(opts.config_path));
    if (opts.seed) {
        cfg.set_seed(*opts.seed);
    }
    return cfg;
}

fs::path output_dir(const CommonOptions& opts) {
    fs::path dir(opts.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw RuntimeFailure("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    return dir;
}

std::ifstream open_input(const std::string& path, const char* what) {
    if (path.empty()) {
        throw ValidationError(std::string("missing ") + what + " path");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError(std::string("cannot open ") + what + " file " + path);
    }
    return in;
}

template <class Fn>
void write_text(const fs::path& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    fn(out);
    if (!out) {
        throw RuntimeFailure("cannot write " + path.string());
    }
}

void write_json(const fs::path& path, const json& doc) {
    write_text(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x", v);
    return buf;
}

std::vector<Candle> read_candles(const std::string& path) {
    auto in = open_input(path, "candles");
    return load_candles(in);
}

std::vector<TweetRecord> read_tweets(const std::string& path) {
    auto in = open_input(path, "tweets");
    return load_tweets(in);
}

// Daily index from an explicit CSV, or by scoring tweets with the bundle's
// sentiment model, or empty for the sentiment-free variant.
DailyIndex resolve_index(const std::string& index_path, const std::string& tweets_path,
                         const ModelBundle* bundle, bool needed) {
    if (!index_path.empty()) {
        auto in = open_input(index_path, "daily index");
        return load_daily_index(in);
    }
    if (!tweets_path.empty() && bundle && bundle->has_sentiment_model()) {
        return score_daily_index({*bundle->vectorizer, *bundle->forest}, read_tweets(tweets_path));
    }
    if (needed) {
        throw ValidationError("the with_nlp variant needs --index, or --tweets with a sentiment bundle");
    }
    return {};
}

void print_report_row(const char* label, const RegressionReport& r) {
    std::cout << std::left << std::setw(14) << label << std::right << std::setw(12)
              << std::setprecision(6) << r.mse << std::setw(12) << r.rmse << std::setw(12);
    if (r.r_squared) {
        std::cout << *r.r_squared;
    } else {
        std::cout << "undefined";
    }
    std::cout << std::setw(12) << r.msle << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sentiment-augmented CNN+LSTM stock price forecasting"};
    app.require_subcommand(1);

    CommonOptions common;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON configuration file");
        sub->add_option("--seed", common.seed, "Seed overriding the configuration");
        sub->add_option("--out", common.out_dir, "Output directory")->capture_default_str();
    };

    // gen-synth
    SyntheticSpec synth;
    auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic candles + tweets dataset");
    add_common(gen);
    gen->add_option("--days", synth.days, "Trading days")->capture_default_str();
    gen->add_option("--shock-prob", synth.shock_probability, "Probability of a sentiment event per day")
        ->capture_default_str();
    gen->add_option("--shock-magnitude", synth.shock_magnitude, "Next-day log-return shift per event")
        ->capture_default_str();
    gen->add_option("--noise", synth.noise, "Daily log-return standard deviation")->capture_default_str();

    // train-sentiment
    std::string tweets_path;
    auto* train_sent = app.add_subcommand("train-sentiment", "Fit TF-IDF + random forest on labeled tweets");
    add_common(train_sent);
    train_sent->add_option("--tweets", tweets_path, "Labeled tweets CSV (date,text,label)");

    // score-tweets
    std::string bundle_path;
    auto* score = app.add_subcommand("score-tweets", "Score tweets and write the daily sentiment index");
    add_common(score);
    score->add_option("--bundle", bundle_path, "Model bundle with a sentiment model")->required();
    score->add_option("--tweets", tweets_path, "Tweets CSV");

    // train-forecaster
    std::string candles_path;
    std::string index_path;
    std::string variant_name = "with_nlp";
    auto* train_fc = app.add_subcommand("train-forecaster", "Train the CNN+LSTM forecaster");
    add_common(train_fc);
    train_fc->add_option("--candles", candles_path, "Candles CSV (date,open,high,low,close)");
    train_fc->add_option("--index", index_path, "Daily sentiment index CSV (date,index)");
    train_fc->add_option("--tweets", tweets_path, "Tweets CSV, scored with --bundle when --index is absent");
    train_fc->add_option("--bundle", bundle_path, "Sentiment bundle to embed in the output bundle");
    train_fc->add_option("--variant", variant_name, "with_nlp or without_nlp")
        ->check(CLI::IsMember({"with_nlp", "without_nlp"}))
        ->capture_default_str();

    // evaluate / predict
    std::string split_name = "test";
    auto* eval = app.add_subcommand("evaluate", "Predict and score a trained forecaster");
    auto* pred = app.add_subcommand("predict", "Predict with a trained forecaster (no metrics)");
    for (auto* sub : {eval, pred}) {
        add_common(sub);
        sub->add_option("--bundle", bundle_path, "Trained model bundle")->required();
        sub->add_option("--candles", candles_path, "Candles CSV");
        sub->add_option("--index", index_path, "Daily sentiment index CSV");
        sub->add_option("--tweets", tweets_path, "Tweets CSV, scored with the bundle when --index is absent");
        sub->add_option("--split", split_name, "train, test or all")
            ->check(CLI::IsMember({"train", "test", "all"}))
            ->capture_default_str();
    }

    // compare
    auto* cmp = app.add_subcommand("compare", "Run the with/without-sentiment comparison");
    add_common(cmp);
    cmp->add_option("--candles", candles_path, "Candles CSV");
    cmp->add_option("--tweets", tweets_path, "Labeled tweets CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            const auto cfg = resolve_config(common);
            synth.seed = cfg.seed;
            const auto data = generate_synthetic(synth);
            const auto dir = output_dir(common);
            write_text(dir / "candles.csv", [&](std::ostream& o) { write_candles(o, data.candles); });
            write_text(dir / "tweets.csv", [&](std::ostream& o) { write_tweets(o, data.tweets); });
            std::cout << "wrote " << data.candles.size() << " candles and " << data.tweets.size()
                      << " tweets to " << dir.string() << '\n';
        } else if (train_sent->parsed()) {
            const auto cfg = resolve_config(common);
            const auto tweets = read_tweets(tweets_path.empty() ? cfg.tweets_path : tweets_path);
            const auto result = train_sentiment(cfg, tweets);
            const auto dir = output_dir(common);
            const auto bytes = serialize_bundle(make_bundle(cfg, &result.model, nullptr));
            write_file(dir / "model.bundle", bytes);
            write_json(dir / "metrics.json", to_json(result));
            std::cout << "holdout accuracy " << result.holdout_report.accuracy << " on "
                      << result.holdout_size << " tweets; bundle checksum "
                      << hex32(bundle_checksum(bytes)) << '\n';
        } else if (score->parsed()) {
            const auto cfg = resolve_config(common);
            const auto bundle = load_bundle(bundle_path);
            if (!bundle.has_sentiment_model()) {
                throw ValidationError("model bundle has no sentiment model");
            }
            const auto tweets = read_tweets(tweets_path.empty() ? cfg.tweets_path : tweets_path);
            const auto index = score_daily_index({*bundle.vectorizer, *bundle.forest}, tweets);
            const auto dir = output_dir(common);
            write_text(dir / "daily_index.csv", [&](std::ostream& o) { write_daily_index(o, index); });
            std::cout << "scored " << tweets.size() << " tweets over " << index.size() << " days\n";
        } else if (train_fc->parsed()) {
            const auto cfg = resolve_config(common);
            const auto variant = parse_variant(variant_name);
            std::optional<ModelBundle> sentiment;
            if (!bundle_path.empty()) {
                sentiment = load_bundle(bundle_path);
            }
            const auto index = resolve_index(index_path, tweets_path.empty() ? cfg.tweets_path : tweets_path,
                                             sentiment ? &*sentiment : nullptr,
                                             variant == Variant::with_nlp);
            const auto candles = read_candles(candles_path.empty() ? cfg.candles_path : candles_path);
            const auto trained = train_forecaster(cfg, candles, index, variant);
            std::optional<SentimentModel> embedded;
            if (sentiment && sentiment->has_sentiment_model()) {
                embedded = SentimentModel{*sentiment->vectorizer, *sentiment->forest};
            }
            const auto bytes =
                serialize_bundle(make_bundle(cfg, embedded ? &*embedded : nullptr, &trained));
            const auto dir = output_dir(common);
            write_file(dir / "model.bundle", bytes);
            write_text(dir / "history.csv", [&](std::ostream& o) {
                o << "epoch,loss\n";
                for (std::size_t e = 0; e < trained.loss_history.size(); ++e) {
                    o << e + 1 << ',' << detail::format_double(trained.loss_history[e]) << '\n';
                }
            });
            std::cout << "trained " << to_string(variant) << " for " << trained.loss_history.size()
                      << " epochs, final loss " << trained.loss_history.back()
                      << "; bundle checksum " << hex32(bundle_checksum(bytes)) << '\n';
        } else if (eval->parsed() || pred->parsed()) {
            const bool with_metrics = eval->parsed();
            const auto cfg = resolve_config(common);
            const auto bundle = load_bundle(bundle_path);
            if (!bundle.has_forecaster()) {
                throw ValidationError("model bundle has no trained forecaster");
            }
            const bool needs_index = bundle.forecast->variant == Variant::with_nlp;
            const auto index = resolve_index(index_path, tweets_path.empty() ? cfg.tweets_path : tweets_path,
                                             &bundle, needs_index);
            const auto candles = read_candles(candles_path.empty() ? cfg.candles_path : candles_path);
            const auto ev = evaluate(bundle, candles, index, parse_eval_split(split_name), with_metrics);
            const auto dir = output_dir(common);
            write_text(dir / "predictions.csv", [&](std::ostream& o) { write_predictions(o, ev.predictions); });
            if (with_metrics) {
                if (!ev.report) {
                    throw ValidationError("no windows fall in the requested split");
                }
                write_json(dir / "metrics.json", metrics_json(*ev.report));
                std::cout << std::setw(14) << "" << std::setw(12) << "MSE" << std::setw(12) << "RMSE"
                          << std::setw(12) << "R-squared" << std::setw(12) << "MSLE" << '\n';
                print_report_row(std::string(to_string(bundle.forecast->variant)).c_str(), *ev.report);
            } else {
                std::cout << "wrote " << ev.predictions.size() << " predictions\n";
            }
        } else if (cmp->parsed()) {
            const auto cfg = resolve_config(common);
            const auto candles = read_candles(candles_path.empty() ? cfg.candles_path : candles_path);
            const auto tweets = read_tweets(tweets_path.empty() ? cfg.tweets_path : tweets_path);
            const auto report = compare(cfg, candles, tweets);
            const auto dir = output_dir(common);
            write_json(dir / "comparison.json", to_json(report));
            write_text(dir / "daily_index.csv",
                       [&](std::ostream& o) { write_daily_index(o, report.daily_index); });
            write_text(dir / "predictions_with_nlp.csv",
                       [&](std::ostream& o) { write_predictions(o, report.with_nlp.predictions); });
            write_text(dir / "predictions_without_nlp.csv",
                       [&](std::ostream& o) { write_predictions(o, report.without_nlp.predictions); });
            std::cout << "sentiment holdout accuracy " << report.sentiment.holdout_report.accuracy
                      << ", " << report.with_nlp.report.n << " test windows\n"
                      << std::setw(14) << "" << std::setw(12) << "MSE" << std::setw(12) << "RMSE"
                      << std::setw(12) << "R-squared" << std::setw(12) << "MSLE" << '\n';
            print_report_row("Without NLP", report.without_nlp.report);
            print_report_row("With NLP", report.with_nlp.report);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
