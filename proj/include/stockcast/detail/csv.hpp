#pragma once

#include <charconv>
#include <cstddef>
#include <istream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "stockcast/error.hpp"

namespace stockcast::detail {

struct CsvRecord {
    std::size_t line = 0;  // 1-based line where the record starts
    std::vector<std::string> fields;
};

// RFC-4180 reader: quoted fields may contain commas, doubled quotes and
// line breaks. Accepts LF and CRLF endings; a UTF-8 BOM is skipped.
class CsvReader {
public:
    explicit CsvReader(std::istream& in)
        : text_(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()) {
        if (text_.size() >= 3 && text_.compare(0, 3, "\xEF\xBB\xBF") == 0) {
            pos_ = 3;
        }
    }

    std::optional<CsvRecord> next() {
        while (pos_ < text_.size()) {
            CsvRecord record;
            record.line = line_;
            if (parse_record(record.fields)) {
                return record;
            }
        }
        return std::nullopt;
    }

private:
    // Returns false for a blank line.
    bool parse_record(std::vector<std::string>& fields) {
        std::string field;
        bool quoted = false;
        bool any = false;
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (quoted) {
                if (c == '"') {
                    if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
                        field.push_back('"');
                        pos_ += 2;
                    } else {
                        quoted = false;
                        ++pos_;
                    }
                } else {
                    if (c == '\n') {
                        ++line_;
                    }
                    field.push_back(c);
                    ++pos_;
                }
                continue;
            }
            if (c == '"') {
                if (!field.empty()) {
                    throw ValidationError("line " + std::to_string(line_) +
                                          ": stray quote inside unquoted field");
                }
                quoted = true;
                any = true;
                ++pos_;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
                any = true;
                ++pos_;
            } else if (c == '\r' || c == '\n') {
                if (c == '\r' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '\n') {
                    ++pos_;
                }
                ++pos_;
                ++line_;
                break;
            } else {
                field.push_back(c);
                any = true;
                ++pos_;
            }
        }
        if (quoted) {
            throw ValidationError("line " + std::to_string(line_) + ": unterminated quoted field");
        }
        if (!any) {
            return false;
        }
        fields.push_back(std::move(field));
        return true;
    }

    std::string text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

inline std::string csv_quote(std::string_view field) {
    const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) {
        return std::string(field);
    }
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

inline std::optional<double> parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) {
        text.remove_suffix(1);
    }
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

inline std::optional<long long> parse_integer(std::string_view text) {
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    long long value = 0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
        return std::nullopt;
    }
    return value;
}

inline std::string_view trim(std::string_view text) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto first = text.find_first_not_of(ws);
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(ws);
    return text.substr(first, last - first + 1);
}

} // namespace stockcast::detail
