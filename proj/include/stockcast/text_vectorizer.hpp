#pragma once

// Tokenization and TF-IDF weighting.
//
//   tfidf(w, d) = tf(w, d) * idf(w)
//   tf(w, d)    = count(w, d) / |d|         (|d| counts every token, OOV included)
//   idf(w)      = ln(N / df(w))             (no smoothing)

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stockcast/error.hpp"
#include "stockcast/tensor.hpp"

namespace stockcast {

using Tokens = std::vector<std::string>;

namespace detail {

inline bool is_token_char(unsigned char c) noexcept {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

inline bool starts_with_url_scheme(std::string_view chunk) noexcept {
    const auto lower_prefix = [&](std::string_view prefix) {
        if (chunk.size() < prefix.size()) {
            return false;
        }
        for (std::size_t i = 0; i < prefix.size(); ++i) {
            const auto c = static_cast<unsigned char>(chunk[i]);
            const char lc = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : chunk[i];
            if (lc != prefix[i]) {
                return false;
            }
        }
        return true;
    };
    return lower_prefix("http://") || lower_prefix("https://");
}

} // namespace detail

// Lowercases ASCII, drops whitespace-delimited URLs, then splits on runs of
// non-alphanumeric characters and keeps tokens of length >= 2. Bytes >= 0x80
// count as word characters so UTF-8 words stay whole.
inline Tokens tokenize(std::string_view text) {
    Tokens tokens;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        std::size_t end = pos;
        while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) {
            ++end;
        }
        const auto chunk = text.substr(pos, end - pos);
        pos = end;
        if (chunk.empty() || detail::starts_with_url_scheme(chunk)) {
            continue;
        }
        std::string token;
        const auto flush = [&] {
            if (token.size() >= 2) {
                tokens.push_back(std::move(token));
            }
            token.clear();
        };
        for (const char ch : chunk) {
            const auto c = static_cast<unsigned char>(ch);
            if (detail::is_token_char(c)) {
                token.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
            } else {
                flush();
            }
        }
        flush();
    }
    return tokens;
}

class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> terms, std::vector<std::size_t> document_frequency)
        : terms_(std::move(terms)), df_(std::move(document_frequency)) {
        require_shape(terms_.size() == df_.size(), "vocabulary terms and frequencies differ in length");
        index_.reserve(terms_.size());
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            require_shape(index_.emplace(terms_[i], i).second, "duplicate vocabulary term");
        }
    }

    std::size_t size() const noexcept { return terms_.size(); }
    const std::vector<std::string>& terms() const noexcept { return terms_; }
    const std::vector<std::size_t>& document_frequency() const noexcept { return df_; }

    std::optional<std::size_t> find(const std::string& term) const {
        const auto it = index_.find(term);
        if (it == index_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.terms_ == b.terms_ && a.df_ == b.df_;
    }

private:
    static void require_shape(bool ok, const char* message) {
        if (!ok) {
            throw ValidationError(message);
        }
    }

    std::vector<std::string> terms_;
    std::vector<std::size_t> df_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct VectorizerParams {
    std::size_t min_df = 2;
    std::size_t max_terms = 5000;
};

class TfIdfModel {
public:
    TfIdfModel() = default;

    // Restores a fitted model (used by deserialization); validates invariants.
    TfIdfModel(Vocabulary vocabulary, std::size_t corpus_size)
        : vocabulary_(std::move(vocabulary)), corpus_size_(corpus_size) {
        detail::require(corpus_size_ >= 1, "tf-idf corpus size must be positive");
        idf_.reserve(vocabulary_.size());
        for (const auto df : vocabulary_.document_frequency()) {
            detail::require(df >= 1 && df <= corpus_size_,
                            "document frequency must lie in [1, corpus size]");
            idf_.push_back(std::log(static_cast<double>(corpus_size_) / static_cast<double>(df)));
        }
    }

    static TfIdfModel fit(const std::vector<Tokens>& corpus, VectorizerParams params = {}) {
        detail::require(!corpus.empty(), "cannot fit tf-idf on an empty corpus");
        detail::require(params.min_df >= 1 && params.max_terms >= 1,
                        "min_df and max_terms must be positive");

        std::unordered_map<std::string, std::size_t> df;
        for (const auto& doc : corpus) {
            Tokens unique = doc;
            std::sort(unique.begin(), unique.end());
            unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
            for (auto& term : unique) {
                ++df[term];
            }
        }

        std::vector<std::pair<std::string, std::size_t>> kept;
        for (auto& [term, count] : df) {
            if (count >= params.min_df) {
                kept.emplace_back(term, count);
            }
        }
        std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        if (kept.size() > params.max_terms) {
            kept.resize(params.max_terms);
        }
        detail::require(!kept.empty(), "vocabulary is empty after min_df/max_terms filtering");

        // Columns in lexicographic order.
        std::sort(kept.begin(), kept.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<std::string> terms;
        std::vector<std::size_t> freqs;
        for (auto& [term, count] : kept) {
            terms.push_back(term);
            freqs.push_back(count);
        }
        return TfIdfModel(Vocabulary(std::move(terms), std::move(freqs)), corpus.size());
    }

    std::size_t dimension() const noexcept { return vocabulary_.size(); }
    std::size_t corpus_size() const noexcept { return corpus_size_; }
    const Vocabulary& vocabulary() const noexcept { return vocabulary_; }
    const std::vector<double>& idf() const noexcept { return idf_; }

    Vector term_frequency(const Tokens& tokens) const {
        Vector tf(dimension(), 0.0);
        if (tokens.empty()) {
            return tf;
        }
        for (const auto& token : tokens) {
            if (const auto col = vocabulary_.find(token)) {
                tf[*col] += 1.0;
            }
        }
        const double length = static_cast<double>(tokens.size());
        for (auto& v : tf) {
            v /= length;
        }
        return tf;
    }

    Vector vectorize(const Tokens& tokens) const {
        Vector v = term_frequency(tokens);
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] *= idf_[i];
        }
        return v;
    }

    Matrix transform(const std::vector<Tokens>& corpus) const {
        Matrix out(corpus.size(), dimension());
        for (std::size_t r = 0; r < corpus.size(); ++r) {
            const auto v = vectorize(corpus[r]);
            std::copy(v.begin(), v.end(), out.row(r).begin());
        }
        return out;
    }

    friend bool operator==(const TfIdfModel& a, const TfIdfModel& b) {
        return a.vocabulary_ == b.vocabulary_ && a.corpus_size_ == b.corpus_size_;
    }

private:
    Vocabulary vocabulary_;
    std::vector<double> idf_;
    std::size_t corpus_size_ = 0;
};

inline std::pair<TfIdfModel, Matrix> fit_transform(const std::vector<Tokens>& corpus,
                                                   VectorizerParams params = {}) {
    auto model = TfIdfModel::fit(corpus, params);
    auto matrix = model.transform(corpus);
    return {std::move(model), std::move(matrix)};
}

} // namespace stockcast
