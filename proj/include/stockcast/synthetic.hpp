#pragma once

// Seeded synthetic market + tweet generator with a planted sentiment signal.
//
// Closes follow a geometric random walk. On "event" days a burst of tweets
// with one polarity is emitted and the NEXT trading day's log return is
// shifted by polarity * shock_magnitude. Quiet days may carry a balanced
// positive/negative pair of tweets that nets to zero.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "stockcast/data_model.hpp"
#include "stockcast/detail/random.hpp"
#include "stockcast/error.hpp"

namespace stockcast {

struct SyntheticSpec {
    std::size_t days = 400;            // trading days
    double shock_probability = 0.2;
    double shock_magnitude = 0.02;     // log-return shift on the day after an event
    double noise = 0.005;              // daily log-return std dev
    double start_price = 100.0;
    Date start_date = Date{std::chrono::year{2020}, std::chrono::January, std::chrono::day{1}};
    std::uint64_t seed = 1;

    void validate() const {
        detail::require(days >= 50, "synthetic series needs at least 50 days");
        detail::require(shock_probability >= 0.0 && shock_probability <= 1.0,
                        "shock probability must lie in [0, 1]");
        detail::require(std::isfinite(shock_magnitude) && shock_magnitude >= 0.0 &&
                            shock_magnitude < 0.5,
                        "shock magnitude must lie in [0, 0.5)");
        detail::require(std::isfinite(noise) && noise >= 0.0 && noise < 0.5,
                        "noise must lie in [0, 0.5)");
        detail::require(std::isfinite(start_price) && start_price > 0.0,
                        "start price must be positive");
        detail::require(start_date.ok(), "start date is invalid");
    }
};

struct SyntheticData {
    std::vector<Candle> candles;
    std::vector<TweetRecord> tweets;
    // Polarity planted on each trading day (0 = no event), aligned with candles.
    std::vector<int> event_polarity;
};

namespace detail {

inline const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> words = {
        "stock", "shares", "today", "market", "company", "earnings", "investors",
        "news", "price", "quarter", "trading", "analysts", "report", "week"};
    return words;
}

inline const std::vector<std::string>& positive_words() {
    static const std::vector<std::string> words = {"surge", "beat", "bullish", "upgrade", "rally"};
    return words;
}

inline const std::vector<std::string>& negative_words() {
    static const std::vector<std::string> words = {"plunge", "miss", "bearish", "downgrade",
                                                   "selloff"};
    return words;
}

// Positive tweets always carry "gain", negative ones "loss", plus filler and
// sometimes a second polarity word.
inline std::string make_tweet(Sentiment polarity, Rng& rng) {
    std::vector<std::string> words;
    const auto& filler = filler_words();
    const std::size_t n_filler = 2 + rng.index(3);
    for (std::size_t k = 0; k < n_filler; ++k) {
        words.push_back(filler[rng.index(filler.size())]);
    }
    const bool positive = polarity == Sentiment::positive;
    words.emplace_back(positive ? "gain" : "loss");
    if (rng.bernoulli(0.5)) {
        const auto& extra = positive ? positive_words() : negative_words();
        words.push_back(extra[rng.index(extra.size())]);
    }
    rng.shuffle(words);
    std::string text;
    for (const auto& w : words) {
        text += (text.empty() ? "" : " ") + w;
    }
    if (rng.bernoulli(0.3)) {
        text += positive ? "!" : "...";
    }
    return text;
}

inline Date next_trading_day(Date d) {
    do {
        d = add_days(d, 1);
    } while (is_weekend(d));
    return d;
}

} // namespace detail

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    detail::Rng rng(spec.seed, 0);
    detail::Rng text_rng(spec.seed, 1);

    SyntheticData out;
    out.candles.reserve(spec.days);
    out.event_polarity.reserve(spec.days);

    Date date = spec.start_date;
    while (is_weekend(date)) {
        date = add_days(date, 1);
    }
    double prev_close = spec.start_price;
    int pending_shift = 0;
    for (std::size_t t = 0; t < spec.days; ++t) {
        const double open = prev_close * std::exp(0.25 * spec.noise * rng.normal());
        const double ret = spec.noise * rng.normal() + pending_shift * spec.shock_magnitude;
        const double close = prev_close * std::exp(ret);
        const double high =
            std::max(open, close) * std::exp(0.5 * spec.noise * std::abs(rng.normal()));
        const double low =
            std::min(open, close) * std::exp(-0.5 * spec.noise * std::abs(rng.normal()));
        out.candles.push_back({date, open, high, low, close});

        int polarity = 0;
        if (rng.bernoulli(spec.shock_probability)) {
            polarity = rng.bernoulli(0.5) ? 1 : -1;
            const auto label = polarity > 0 ? Sentiment::positive : Sentiment::negative;
            const std::size_t n = 3 + rng.index(4);
            for (std::size_t k = 0; k < n; ++k) {
                out.tweets.push_back({date, detail::make_tweet(label, text_rng), label});
            }
        } else if (rng.bernoulli(0.5)) {
            out.tweets.push_back(
                {date, detail::make_tweet(Sentiment::positive, text_rng), Sentiment::positive});
            out.tweets.push_back(
                {date, detail::make_tweet(Sentiment::negative, text_rng), Sentiment::negative});
        }
        out.event_polarity.push_back(polarity);

        // Weekend chatter: never aligned with a candle.
        const Date next = detail::next_trading_day(date);
        for (Date d = add_days(date, 1); d < next; d = add_days(d, 1)) {
            if (rng.bernoulli(0.3)) {
                const auto label = rng.bernoulli(0.5) ? Sentiment::positive : Sentiment::negative;
                out.tweets.push_back({d, detail::make_tweet(label, text_rng), label});
            }
        }

        pending_shift = polarity;
        prev_close = close;
        date = next;
    }
    return out;
}

// Balanced labeled corpus: positives mention "gain", negatives "loss".
inline std::vector<TweetRecord> generate_labeled_corpus(std::size_t per_class, std::uint64_t seed) {
    detail::Rng rng(seed, 7);
    std::vector<TweetRecord> tweets;
    tweets.reserve(2 * per_class);
    const Date base{std::chrono::year{2021}, std::chrono::March, std::chrono::day{1}};
    for (std::size_t k = 0; k < per_class; ++k) {
        const Date d = add_days(base, static_cast<int>(k % 60));
        tweets.push_back({d, detail::make_tweet(Sentiment::positive, rng), Sentiment::positive});
        tweets.push_back({d, detail::make_tweet(Sentiment::negative, rng), Sentiment::negative});
    }
    return tweets;
}

} // namespace stockcast
