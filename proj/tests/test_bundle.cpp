#include <gtest/gtest.h>

#include "stockcast/stockcast.hpp"

using namespace stockcast;

namespace {

PipelineConfig tiny_config() {
    PipelineConfig cfg;
    cfg.set_seed(3);
    cfg.forest.trees = 5;
    cfg.network.hidden = 4;
    cfg.network.filters = 2;
    cfg.network.window_length = 6;
    cfg.training.epochs = 3;
    return cfg;
}

struct Fixture {
    PipelineConfig cfg = tiny_config();
    SyntheticData data = generate_synthetic({.days = 80, .seed = 3});
    SentimentTraining sentiment = train_sentiment(cfg, data.tweets);
    DailyIndex index = score_daily_index(sentiment.model, data.tweets);
    ForecasterTraining forecaster = train_forecaster(cfg, data.candles, index, Variant::with_nlp);
    ModelBundle bundle = make_bundle(cfg, &sentiment.model, &forecaster);
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

std::string corrupt(std::string bytes, std::size_t at) {
    bytes[at] = static_cast<char>(bytes[at] ^ 0x5a);
    return bytes;
}

} // namespace

TEST(Binary, LittleEndianPrimitives) {
    BinaryWriter w;
    w.u32(0x01020304);
    w.f64(-0.1);
    w.str("ab");
    const auto bytes = w.take();
    EXPECT_EQ(bytes.substr(0, 4), std::string("\x04\x03\x02\x01", 4));
    BinaryReader r(bytes);
    EXPECT_EQ(r.u32(), 0x01020304u);
    EXPECT_EQ(r.f64(), -0.1);
    EXPECT_EQ(r.str(), "ab");
    r.expect_done("test");
    BinaryReader short_reader(bytes.substr(0, 2));
    EXPECT_THROW(short_reader.u32(), ValidationError);
}

TEST(Bundle, RoundTripPreservesComponents) {
    const auto& f = fixture();
    const auto back = parse_bundle(serialize_bundle(f.bundle));
    EXPECT_EQ(back.config_json, f.bundle.config_json);
    EXPECT_EQ(*back.vectorizer, *f.bundle.vectorizer);
    EXPECT_EQ(back.vectorizer->idf(), f.bundle.vectorizer->idf());
    EXPECT_EQ(*back.forest, *f.bundle.forest);
    EXPECT_EQ(*back.scaler, *f.bundle.scaler);
    EXPECT_EQ(*back.forecast, *f.bundle.forecast);
    EXPECT_EQ(*back.network, *f.bundle.network);
}

TEST(Bundle, RoundTripPredictionsAreBitIdentical) {
    const auto& f = fixture();
    const auto back = parse_bundle(serialize_bundle(f.bundle));
    const auto before = evaluate(f.bundle, f.data.candles, f.index, EvalSplit::all);
    const auto after = evaluate(back, f.data.candles, f.index, EvalSplit::all);
    ASSERT_EQ(before.predictions.size(), after.predictions.size());
    for (std::size_t k = 0; k < before.predictions.size(); ++k) {
        EXPECT_EQ(before.predictions[k].predicted, after.predictions[k].predicted);
    }
    EXPECT_EQ(score_daily_index({*back.vectorizer, *back.forest}, f.data.tweets), f.index);
}

TEST(Bundle, ChecksumIsDeterministic) {
    const auto& f = fixture();
    const auto again = train_forecaster(f.cfg, f.data.candles, f.index, Variant::with_nlp);
    const auto a = serialize_bundle(f.bundle);
    const auto b = serialize_bundle(make_bundle(f.cfg, &f.sentiment.model, &again));
    EXPECT_EQ(a, b);
    EXPECT_EQ(bundle_checksum(a), crc32_of(std::string_view(a).substr(0, a.size() - 4)));
}

TEST(Bundle, RejectsCorruption) {
    const auto bytes = serialize_bundle(fixture().bundle);
    EXPECT_THROW(parse_bundle(corrupt(bytes, 0)), ValidationError);
    EXPECT_THROW(parse_bundle(corrupt(bytes, bytes.size() / 2)), ValidationError);
    EXPECT_THROW(parse_bundle(corrupt(bytes, bytes.size() - 1)), ValidationError);
    EXPECT_THROW(parse_bundle(bytes.substr(0, bytes.size() - 7)), ValidationError);
    EXPECT_THROW(parse_bundle(""), ValidationError);
}

TEST(Bundle, RejectsVersionMismatch) {
    auto bytes = serialize_bundle(fixture().bundle);
    bytes[kBundleMagic.size()] = 2;  // low byte of the version
    // Re-seal so only the version is wrong.
    BinaryWriter crc;
    crc.u32(crc32_of(std::string_view(bytes).substr(0, bytes.size() - 4)));
    bytes.replace(bytes.size() - 4, 4, crc.take());
    try {
        parse_bundle(bytes);
        FAIL() << "version 2 accepted";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
    }
}

TEST(Bundle, SentimentOnlyBundle) {
    const auto& f = fixture();
    const auto back = parse_bundle(serialize_bundle(make_bundle(f.cfg, &f.sentiment.model, nullptr)));
    EXPECT_TRUE(back.has_sentiment_model());
    EXPECT_FALSE(back.has_forecaster());
    EXPECT_THROW(evaluate(back, f.data.candles, f.index, EvalSplit::test), ValidationError);
}

TEST(Bundle, FileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "stockcast_bundle_test.bundle";
    save_bundle(path, fixture().bundle);
    EXPECT_EQ(serialize_bundle(load_bundle(path)), serialize_bundle(fixture().bundle));
    std::filesystem::remove(path);
    EXPECT_THROW(load_bundle(path), ValidationError);
}
