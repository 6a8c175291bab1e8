#pragma once

// Little-endian binary encoding of fitted components. Byte layout is
// described in docs/bundle_format.md.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stockcast/data_model.hpp"
#include "stockcast/error.hpp"
#include "stockcast/neural_net.hpp"
#include "stockcast/random_forest.hpp"
#include "stockcast/text_vectorizer.hpp"

namespace stockcast {

class BinaryWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

    void raw(std::string_view data) { bytes_.append(data); }

    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s);
    }

    void f64s(std::span<const double> values) {
        u64(values.size());
        for (const double v : values) {
            f64(v);
        }
    }

    const std::string& bytes() const noexcept { return bytes_; }
    std::string take() { return std::move(bytes_); }

private:
    void put(std::uint64_t v, int width) {
        for (int k = 0; k < width; ++k) {
            bytes_.push_back(static_cast<char>((v >> (8 * k)) & 0xFFu));
        }
    }

    std::string bytes_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::string_view data) : data_(data) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
    double f64() { return std::bit_cast<double>(get(8)); }

    std::string_view raw(std::size_t n) {
        need(n);
        const auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::string str() { return std::string(raw(u32())); }

    void f64s(std::span<double> out) {
        const auto n = u64();
        if (n != out.size()) {
            throw ValidationError("corrupt bundle: tensor has " + std::to_string(n) +
                                  " values, expected " + std::to_string(out.size()));
        }
        for (auto& v : out) {
            v = f64();
        }
    }

    std::size_t size(std::size_t limit = std::size_t{1} << 32) {
        const auto n = u64();
        if (n > limit) {
            throw ValidationError("corrupt bundle: implausible length");
        }
        return static_cast<std::size_t>(n);
    }

    bool done() const noexcept { return pos_ == data_.size(); }
    std::size_t position() const noexcept { return pos_; }

    void expect_done(std::string_view what) const {
        if (!done()) {
            throw ValidationError("corrupt bundle: trailing bytes in " + std::string(what));
        }
    }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) {
            throw ValidationError("corrupt bundle: unexpected end of data");
        }
    }

    std::uint64_t get(int width) {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int k = 0; k < width; ++k) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
        }
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// TF-IDF
// ---------------------------------------------------------------------------

inline constexpr std::string_view kIdfLogTag = "idf=ln(N/df)";

inline void encode(BinaryWriter& w, const TfIdfModel& model) {
    w.str(kIdfLogTag);
    w.u64(model.corpus_size());
    const auto& vocab = model.vocabulary();
    w.u64(vocab.size());
    for (std::size_t k = 0; k < vocab.size(); ++k) {
        w.str(vocab.terms()[k]);
        w.u64(vocab.document_frequency()[k]);
    }
}

inline TfIdfModel decode_tfidf(BinaryReader& r) {
    if (r.str() != kIdfLogTag) {
        throw ValidationError("corrupt bundle: unsupported idf convention");
    }
    const auto corpus_size = r.size();
    const auto n = r.size();
    std::vector<std::string> terms;
    std::vector<std::size_t> df;
    terms.reserve(n);
    df.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        terms.push_back(r.str());
        df.push_back(r.size());
    }
    return TfIdfModel(Vocabulary(std::move(terms), std::move(df)), corpus_size);
}

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

inline void encode(BinaryWriter& w, const DecisionTree& tree) {
    const auto& p = tree.params();
    w.u64(p.max_depth);
    w.u64(p.min_samples_leaf);
    w.u64(p.features_per_split);
    w.u8(p.criterion == Criterion::gini ? 0 : 1);
    w.u64(tree.nodes().size());
    for (const auto& node : tree.nodes()) {
        if (const auto* split = std::get_if<SplitNode>(&node)) {
            w.u8(0);
            w.u64(split->feature);
            w.f64(split->threshold);
            w.u64(split->left);
            w.u64(split->right);
        } else {
            const auto& leaf = std::get<LeafNode>(node);
            w.u8(1);
            w.u64(leaf.counts.positive);
            w.u64(leaf.counts.negative);
            w.i64(to_int(leaf.label));
        }
    }
}

inline DecisionTree decode_tree(BinaryReader& r, std::size_t dimension) {
    TreeParams p;
    p.max_depth = r.size(std::numeric_limits<std::size_t>::max());
    p.min_samples_leaf = r.size();
    p.features_per_split = r.size();
    const auto crit = r.u8();
    if (crit > 1) {
        throw ValidationError("corrupt bundle: unknown split criterion");
    }
    p.criterion = crit == 0 ? Criterion::gini : Criterion::entropy;
    const auto n = r.size();
    std::vector<TreeNode> nodes;
    nodes.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto kind = r.u8();
        if (kind == 0) {
            SplitNode s;
            s.feature = r.size();
            s.threshold = r.f64();
            s.left = r.size();
            s.right = r.size();
            if (s.feature >= dimension) {
                throw ValidationError("corrupt bundle: split feature out of range");
            }
            nodes.emplace_back(s);
        } else if (kind == 1) {
            LeafNode leaf;
            leaf.counts.positive = r.size();
            leaf.counts.negative = r.size();
            const auto label = r.i64();
            if (label != 1 && label != -1) {
                throw ValidationError("corrupt bundle: leaf label must be +1 or -1");
            }
            leaf.label = label == 1 ? Sentiment::positive : Sentiment::negative;
            nodes.emplace_back(leaf);
        } else {
            throw ValidationError("corrupt bundle: unknown tree node kind");
        }
    }
    return DecisionTree(std::move(nodes), p);
}

inline void encode(BinaryWriter& w, const RandomForest& forest) {
    w.u64(forest.dimension());
    w.u64(forest.features_per_split());
    w.u64(forest.seed());
    w.u64(forest.size());
    for (const auto& tree : forest.trees()) {
        encode(w, tree);
    }
}

inline RandomForest decode_forest(BinaryReader& r) {
    const auto dimension = r.size();
    const auto fps = r.size();
    const auto seed = r.u64();
    const auto n = r.size();
    std::vector<DecisionTree> trees;
    trees.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        trees.push_back(decode_tree(r, dimension));
    }
    return RandomForest(std::move(trees), dimension, fps, seed);
}

// ---------------------------------------------------------------------------
// Scaler
// ---------------------------------------------------------------------------

inline void encode(BinaryWriter& w, const Scaler& scaler) {
    w.u64(kFeatureCount);
    for (const double v : scaler.min()) {
        w.f64(v);
    }
    for (const double v : scaler.max()) {
        w.f64(v);
    }
}

inline Scaler decode_scaler(BinaryReader& r) {
    if (r.u64() != kFeatureCount) {
        throw ValidationError("corrupt bundle: scaler feature count mismatch");
    }
    FeatureRow lo{};
    FeatureRow hi{};
    for (auto& v : lo) {
        v = r.f64();
    }
    for (auto& v : hi) {
        v = r.f64();
    }
    return Scaler(lo, hi);
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint8_t activation_code(Activation a) {
    switch (a) {
    case Activation::linear: return 0;
    case Activation::relu: return 1;
    case Activation::tanh: return 2;
    }
    return 0;
}

inline Activation activation_from_code(std::uint8_t code) {
    switch (code) {
    case 0: return Activation::linear;
    case 1: return Activation::relu;
    case 2: return Activation::tanh;
    default: throw ValidationError("corrupt bundle: unknown activation code");
    }
}

} // namespace detail

inline void encode(BinaryWriter& w, const FusionNetwork& net) {
    const auto shape = net.shape();
    w.u64(shape.hidden);
    w.u64(shape.filters);
    w.u64(shape.half_width);
    w.u64(shape.window_length);
    w.u8(detail::activation_code(shape.conv_activation));
    w.u8(detail::activation_code(shape.output_activation));
    for_each_parameter(net, [&](std::string_view, std::span<const double> p) { w.f64s(p); });
}

inline FusionNetwork decode_network(BinaryReader& r) {
    NetworkShape shape;
    shape.hidden = r.size(1 << 16);
    shape.filters = r.size(1 << 16);
    shape.half_width = r.size(1 << 16);
    shape.window_length = r.size(1 << 20);
    shape.conv_activation = detail::activation_from_code(r.u8());
    shape.output_activation = detail::activation_from_code(r.u8());
    FusionNetwork net = FusionNetwork::zeros(shape);
    for_each_parameter(net, [&](std::string_view, std::span<double> p) {
        r.f64s(p);
        if (!detail::all_finite(p)) {
            throw ValidationError("corrupt bundle: non-finite network parameter");
        }
    });
    return net;
}

} // namespace stockcast
