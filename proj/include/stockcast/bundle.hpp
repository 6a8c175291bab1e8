#pragma once

// Model bundle: one self-describing binary file holding whichever fitted
// components a run produced.
//
//   magic "STKCBNDL" | u32 version | u32 section count
//   { u16 name length | name | u64 payload length | payload }*
//   u32 CRC-32 of every preceding byte

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "stockcast/error.hpp"
#include "stockcast/serialization.hpp"

namespace stockcast {

inline constexpr std::string_view kBundleMagic = "STKCBNDL";
inline constexpr std::uint32_t kBundleVersion = 1;

enum class Variant { with_nlp, without_nlp };

inline std::string_view to_string(Variant v) {
    return v == Variant::with_nlp ? "with_nlp" : "without_nlp";
}

inline Variant parse_variant(std::string_view name) {
    if (name == "with_nlp") return Variant::with_nlp;
    if (name == "without_nlp") return Variant::without_nlp;
    throw ValidationError("unknown variant `" + std::string(name) + "`");
}

// What the forecaster needs beyond its weights to rebuild windows.
struct ForecastSettings {
    Variant variant = Variant::with_nlp;
    std::size_t horizon = 1;
    double train_fraction = 0.8;

    friend bool operator==(const ForecastSettings&, const ForecastSettings&) = default;
};

struct ModelBundle {
    std::string config_json;
    std::optional<TfIdfModel> vectorizer;
    std::optional<RandomForest> forest;
    std::optional<Scaler> scaler;
    std::optional<ForecastSettings> forecast;
    std::optional<FusionNetwork> network;

    bool has_sentiment_model() const noexcept { return vectorizer && forest; }
    bool has_forecaster() const noexcept { return scaler && forecast && network; }
};

inline std::uint32_t crc32_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks for very large inputs.
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const std::size_t chunk = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
        crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos),
                    static_cast<uInt>(chunk));
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

inline std::string serialize_bundle(const ModelBundle& bundle) {
    std::vector<std::pair<std::string, std::string>> sections;
    sections.emplace_back("config", bundle.config_json);
    if (bundle.vectorizer) {
        BinaryWriter w;
        encode(w, *bundle.vectorizer);
        sections.emplace_back("tfidf", w.take());
    }
    if (bundle.forest) {
        BinaryWriter w;
        encode(w, *bundle.forest);
        sections.emplace_back("forest", w.take());
    }
    if (bundle.scaler) {
        BinaryWriter w;
        encode(w, *bundle.scaler);
        sections.emplace_back("scaler", w.take());
    }
    if (bundle.forecast) {
        BinaryWriter w;
        w.u8(bundle.forecast->variant == Variant::with_nlp ? 0 : 1);
        w.u64(bundle.forecast->horizon);
        w.f64(bundle.forecast->train_fraction);
        sections.emplace_back("forecast", w.take());
    }
    if (bundle.network) {
        BinaryWriter w;
        encode(w, *bundle.network);
        sections.emplace_back("network", w.take());
    }

    BinaryWriter out;
    out.raw(kBundleMagic);
    out.u32(kBundleVersion);
    out.u32(static_cast<std::uint32_t>(sections.size()));
    for (const auto& [name, payload] : sections) {
        out.u16(static_cast<std::uint16_t>(name.size()));
        out.raw(name);
        out.u64(payload.size());
        out.raw(payload);
    }
    out.u32(crc32_of(out.bytes()));
    return out.take();
}

// The trailing CRC-32 of a serialized bundle.
inline std::uint32_t bundle_checksum(std::string_view bytes) {
    if (bytes.size() < 4) {
        throw ValidationError("corrupt bundle: too short");
    }
    BinaryReader r(bytes.substr(bytes.size() - 4));
    return r.u32();
}

inline ModelBundle parse_bundle(std::string_view bytes) {
    if (bytes.size() < kBundleMagic.size() + 12 || bytes.substr(0, kBundleMagic.size()) != kBundleMagic) {
        throw ValidationError("not a model bundle (bad magic)");
    }
    const auto body = bytes.substr(0, bytes.size() - 4);
    if (crc32_of(body) != bundle_checksum(bytes)) {
        throw ValidationError("model bundle checksum mismatch");
    }
    BinaryReader r(body);
    r.raw(kBundleMagic.size());
    const auto version = r.u32();
    if (version != kBundleVersion) {
        throw ValidationError("unsupported model bundle version " + std::to_string(version) +
                              " (expected " + std::to_string(kBundleVersion) + ")");
    }
    ModelBundle bundle;
    const auto count = r.u32();
    for (std::uint32_t s = 0; s < count; ++s) {
        const std::string name(r.raw(r.u16()));
        const auto payload = r.raw(r.size(std::numeric_limits<std::size_t>::max()));
        BinaryReader section(payload);
        if (name == "config") {
            bundle.config_json = std::string(payload);
            continue;
        }
        if (name == "tfidf") {
            bundle.vectorizer = decode_tfidf(section);
        } else if (name == "forest") {
            bundle.forest = decode_forest(section);
        } else if (name == "scaler") {
            bundle.scaler = decode_scaler(section);
        } else if (name == "forecast") {
            ForecastSettings fs;
            const auto code = section.u8();
            if (code > 1) {
                throw ValidationError("corrupt bundle: unknown variant code");
            }
            fs.variant = code == 0 ? Variant::with_nlp : Variant::without_nlp;
            fs.horizon = section.size();
            fs.train_fraction = section.f64();
            bundle.forecast = fs;
        } else if (name == "network") {
            bundle.network = decode_network(section);
        } else {
            throw ValidationError("model bundle has unknown section `" + name + "`");
        }
        section.expect_done(name);
    }
    r.expect_done("bundle");
    if (bundle.vectorizer && bundle.forest &&
        bundle.vectorizer->dimension() != bundle.forest->dimension()) {
        throw ValidationError("model bundle vectorizer and forest dimensions differ");
    }
    return bundle;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw RuntimeFailure("cannot write " + path.string());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
    write_file(path, serialize_bundle(bundle));
}

inline ModelBundle load_bundle(const std::filesystem::path& path) {
    return parse_bundle(read_file(path));
}

} // namespace stockcast
