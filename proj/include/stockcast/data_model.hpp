#pragma once

// Market data types, CSV ingestion, candle/sentiment alignment, splitting,
// scaling and sliding-window construction.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stockcast/detail/csv.hpp"
#include "stockcast/error.hpp"
#include "stockcast/tensor.hpp"

namespace stockcast {

using Date = std::chrono::year_month_day;

// Strict ISO-8601 calendar date, YYYY-MM-DD.
inline std::optional<Date> parse_date(std::string_view text) {
    text = detail::trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    const auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (text[i] < '0' || text[i] > '9') {
                return std::nullopt;
            }
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    const auto y = digits(0, 4);
    const auto m = digits(5, 2);
    const auto d = digits(8, 2);
    if (!y || !m || !d) {
        return std::nullopt;
    }
    const Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!date.ok()) {
        return std::nullopt;
    }
    return date;
}

inline std::string format_date(const Date& date) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

inline Date add_days(const Date& date, int days) {
    return Date{std::chrono::sys_days{date} + std::chrono::days{days}};
}

inline bool is_weekend(const Date& date) {
    const std::chrono::weekday wd{std::chrono::sys_days{date}};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

struct Candle {
    Date date;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;

    bool valid() const noexcept {
        const bool finite = std::isfinite(open) && std::isfinite(high) && std::isfinite(low) &&
                            std::isfinite(close);
        return finite && open > 0.0 && high > 0.0 && low > 0.0 && close > 0.0 && low <= high &&
               low <= open && open <= high && low <= close && close <= high;
    }

    friend bool operator==(const Candle&, const Candle&) = default;
};

enum class Sentiment : int { negative = -1, positive = 1 };

inline int to_int(Sentiment s) noexcept { return static_cast<int>(s); }

struct TweetRecord {
    Date date;
    std::string text;
    std::optional<Sentiment> label;

    friend bool operator==(const TweetRecord&, const TweetRecord&) = default;
};

// Column order of every feature row and window.
enum Feature : std::size_t { kOpen = 0, kHigh, kLow, kClose, kSentiment };
inline constexpr std::size_t kFeatureCount = 5;

using FeatureRow = std::array<double, kFeatureCount>;

struct AlignedRow {
    Date date;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    long long sentiment_index = 0;

    FeatureRow features() const noexcept {
        return {open, high, low, close, static_cast<double>(sentiment_index)};
    }

    friend bool operator==(const AlignedRow&, const AlignedRow&) = default;
};

struct AlignedSeries {
    std::vector<AlignedRow> rows;

    std::size_t size() const noexcept { return rows.size(); }
    bool empty() const noexcept { return rows.empty(); }

    friend bool operator==(const AlignedSeries&, const AlignedSeries&) = default;
};

using DailyIndex = std::map<Date, long long>;

namespace detail {

inline std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

inline void expect_header(const std::optional<CsvRecord>& header,
                          const std::vector<std::string_view>& expected) {
    bool ok = header.has_value() && header->fields.size() == expected.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i) {
        ok = trim(header->fields[i]) == expected[i];
    }
    if (!ok) {
        std::string want;
        for (const auto& name : expected) {
            want += (want.empty() ? "" : ",") + std::string(name);
        }
        throw ValidationError("missing or malformed header, expected `" + want + "`");
    }
}

} // namespace detail

inline std::vector<Candle> load_candles(std::istream& in) {
    detail::CsvReader reader(in);
    detail::expect_header(reader.next(), {"date", "open", "high", "low", "close"});

    std::vector<Candle> candles;
    while (auto record = reader.next()) {
        const auto where = detail::at_line(record->line);
        if (record->fields.size() != 5) {
            throw ValidationError(where + "malformed row, expected 5 fields");
        }
        const auto date = parse_date(record->fields[0]);
        if (!date) {
            throw ValidationError(where + "malformed row, bad date `" + record->fields[0] + "`");
        }
        std::array<double, 4> prices{};
        for (std::size_t i = 0; i < 4; ++i) {
            const auto v = detail::parse_double(record->fields[i + 1]);
            if (!v) {
                throw ValidationError(where + "malformed row, bad price `" +
                                      record->fields[i + 1] + "`");
            }
            prices[i] = *v;
        }
        Candle candle{*date, prices[0], prices[1], prices[2], prices[3]};
        if (!candle.valid()) {
            throw ValidationError(where + "OHLC invariant violated");
        }
        candles.push_back(candle);
    }

    std::stable_sort(candles.begin(), candles.end(),
                     [](const Candle& a, const Candle& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < candles.size(); ++i) {
        if (candles[i].date == candles[i - 1].date) {
            throw ValidationError("duplicate date " + format_date(candles[i].date));
        }
    }
    return candles;
}

inline std::vector<TweetRecord> load_tweets(std::istream& in) {
    detail::CsvReader reader(in);
    detail::expect_header(reader.next(), {"date", "text", "label"});

    std::vector<TweetRecord> tweets;
    while (auto record = reader.next()) {
        const auto where = detail::at_line(record->line);
        if (record->fields.size() != 3) {
            throw ValidationError(where + "malformed row, expected 3 fields");
        }
        const auto date = parse_date(record->fields[0]);
        if (!date) {
            throw ValidationError(where + "malformed row, bad date `" + record->fields[0] + "`");
        }
        if (detail::trim(record->fields[1]).empty()) {
            throw ValidationError(where + "empty text");
        }
        std::optional<Sentiment> label;
        const auto label_text = detail::trim(record->fields[2]);
        if (!label_text.empty()) {
            const auto v = detail::parse_integer(label_text);
            if (!v || (*v != 1 && *v != -1)) {
                throw ValidationError(where + "label must be +1 or -1");
            }
            label = *v == 1 ? Sentiment::positive : Sentiment::negative;
        }
        tweets.push_back({*date, std::move(record->fields[1]), label});
    }
    return tweets;
}

inline void write_candles(std::ostream& out, const std::vector<Candle>& candles) {
    out << "date,open,high,low,close\n";
    for (const auto& c : candles) {
        out << format_date(c.date) << ',' << detail::format_double(c.open) << ','
            << detail::format_double(c.high) << ',' << detail::format_double(c.low) << ','
            << detail::format_double(c.close) << '\n';
    }
}

inline void write_tweets(std::ostream& out, const std::vector<TweetRecord>& tweets) {
    out << "date,text,label\n";
    for (const auto& t : tweets) {
        out << format_date(t.date) << ',' << detail::csv_quote(t.text) << ',';
        if (t.label) {
            out << to_int(*t.label);
        }
        out << '\n';
    }
}

inline DailyIndex load_daily_index(std::istream& in) {
    detail::CsvReader reader(in);
    detail::expect_header(reader.next(), {"date", "index"});
    DailyIndex index;
    while (auto record = reader.next()) {
        const auto where = detail::at_line(record->line);
        if (record->fields.size() != 2) {
            throw ValidationError(where + "malformed row, expected 2 fields");
        }
        const auto date = parse_date(record->fields[0]);
        const auto value = detail::parse_integer(detail::trim(record->fields[1]));
        if (!date || !value) {
            throw ValidationError(where + "malformed row");
        }
        if (!index.emplace(*date, *value).second) {
            throw ValidationError("duplicate date " + format_date(*date));
        }
    }
    return index;
}

inline void write_daily_index(std::ostream& out, const DailyIndex& index) {
    out << "date,index\n";
    for (const auto& [date, value] : index) {
        out << format_date(date) << ',' << value << '\n';
    }
}

// One row per candle; tweets dated on non-trading days are dropped.
inline AlignedSeries align_daily(const std::vector<Candle>& candles, const DailyIndex& index) {
    AlignedSeries series;
    series.rows.reserve(candles.size());
    for (const auto& c : candles) {
        const auto it = index.find(c.date);
        series.rows.push_back(
            {c.date, c.open, c.high, c.low, c.close, it == index.end() ? 0 : it->second});
    }
    return series;
}

inline std::pair<AlignedSeries, AlignedSeries> chronological_split(const AlignedSeries& series,
                                                                   double train_fraction) {
    detail::require(!series.empty(), "cannot split an empty series");
    detail::require(train_fraction > 0.0 && train_fraction < 1.0,
                    "train fraction must lie in (0, 1)");
    const auto n_train =
        static_cast<std::size_t>(std::floor(static_cast<double>(series.size()) * train_fraction));
    detail::require(n_train > 0 && n_train < series.size(),
                    "split leaves the train or test portion empty");
    AlignedSeries train;
    AlignedSeries test;
    train.rows.assign(series.rows.begin(), series.rows.begin() + static_cast<long>(n_train));
    test.rows.assign(series.rows.begin() + static_cast<long>(n_train), series.rows.end());
    return {std::move(train), std::move(test)};
}

// Per-feature min-max scaling to [0, 1].
class Scaler {
public:
    Scaler() = default;
    Scaler(FeatureRow min, FeatureRow max) : min_(min), max_(max) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            detail::require(std::isfinite(min_[f]) && std::isfinite(max_[f]) && max_[f] >= min_[f],
                            "scaler bounds must be finite with max >= min");
        }
    }

    static Scaler fit(const AlignedSeries& train) {
        detail::require(!train.empty(), "cannot fit a scaler on an empty training set");
        FeatureRow lo = train.rows.front().features();
        FeatureRow hi = lo;
        for (const auto& row : train.rows) {
            const auto x = row.features();
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                lo[f] = std::min(lo[f], x[f]);
                hi[f] = std::max(hi[f], x[f]);
            }
        }
        return Scaler(lo, hi);
    }

    double apply(std::size_t feature, double x) const noexcept {
        const double range = max_[feature] - min_[feature];
        return range > 0.0 ? (x - min_[feature]) / range : 0.0;
    }

    double invert(std::size_t feature, double y) const noexcept {
        return y * (max_[feature] - min_[feature]) + min_[feature];
    }

    FeatureRow apply(const FeatureRow& row) const noexcept {
        FeatureRow out{};
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            out[f] = apply(f, row[f]);
        }
        return out;
    }

    std::vector<FeatureRow> apply(const AlignedSeries& series) const {
        std::vector<FeatureRow> out;
        out.reserve(series.size());
        for (const auto& row : series.rows) {
            out.push_back(apply(row.features()));
        }
        return out;
    }

    const FeatureRow& min() const noexcept { return min_; }
    const FeatureRow& max() const noexcept { return max_; }

    friend bool operator==(const Scaler&, const Scaler&) = default;

private:
    FeatureRow min_{};
    FeatureRow max_{};
};

struct Window {
    Matrix input;            // window_length x kFeatureCount
    double target = 0.0;     // scaled close
    std::size_t start = 0;   // row index of the first input row
    std::size_t target_row = 0;
};

struct WindowedDataset {
    std::vector<Window> windows;
    std::size_t window_length = 0;
    std::size_t horizon = 0;

    std::size_t size() const noexcept { return windows.size(); }
    bool empty() const noexcept { return windows.empty(); }
};

inline std::size_t window_count(std::size_t n, std::size_t window_length, std::size_t horizon) {
    return n >= window_length + horizon ? n - window_length - horizon + 1 : 0;
}

// Stride-1 windows. The window starting at t covers rows [t, t+L) and targets
// the close of row t+L+horizon-1.
inline WindowedDataset make_windows(const std::vector<FeatureRow>& rows, std::size_t window_length,
                                    std::size_t horizon) {
    detail::require(window_length >= 1 && horizon >= 1,
                    "window length and horizon must be positive");
    detail::require(rows.size() >= window_length + horizon, "series too short");
    WindowedDataset ds;
    ds.window_length = window_length;
    ds.horizon = horizon;
    const std::size_t count = window_count(rows.size(), window_length, horizon);
    ds.windows.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        Window w;
        w.input = Matrix(window_length, kFeatureCount);
        for (std::size_t r = 0; r < window_length; ++r) {
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                w.input(r, f) = rows[t + r][f];
            }
        }
        w.start = t;
        w.target_row = t + window_length + horizon - 1;
        w.target = rows[w.target_row][kClose];
        ds.windows.push_back(std::move(w));
    }
    return ds;
}

} // namespace stockcast
