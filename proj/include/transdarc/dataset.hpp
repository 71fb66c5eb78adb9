#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "transdarc/binary_io.hpp"
#include "transdarc/error.hpp"

namespace transdarc {

enum class View : std::uint8_t { Plain = 0, AugmentedView = 1 };

/// A labelled matrix of embeddings, one row per clip.
///
/// Rows are stored contiguously (row-major, 32-bit floats). `meta` carries
/// free-form tags such as "modality", "split" and "source"; it round-trips
/// through the optional JSON sidecar, not through the binary file.
struct EmbeddingDataset {
    std::size_t dim = 0;
    std::vector<float> embeddings;
    std::vector<std::uint32_t> labels;
    std::vector<std::string> class_names;
    View view = View::Plain;
    std::map<std::string, std::string> meta;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t n_classes() const noexcept { return class_names.size(); }

    std::span<const float> row(std::size_t i) const { return {embeddings.data() + i * dim, dim}; }
    std::span<float> row(std::size_t i) { return {embeddings.data() + i * dim, dim}; }

    void push_back(std::span<const float> features, std::uint32_t label) {
        embeddings.insert(embeddings.end(), features.begin(), features.end());
        labels.push_back(label);
    }

    std::string meta_or(const std::string& key, std::string fallback = {}) const {
        auto it = meta.find(key);
        return it == meta.end() ? fallback : it->second;
    }

    bool operator==(const EmbeddingDataset&) const = default;
};

inline const char* to_string(View v) { return v == View::Plain ? "plain" : "augmented"; }

/// Throws ValidationError on the first broken invariant.
inline void validate(const EmbeddingDataset& d) {
    if (d.dim == 0) throw ValidationError("dataset dim must be positive");
    if (d.embeddings.size() != d.labels.size() * d.dim)
        throw ValidationError("embedding matrix holds " + std::to_string(d.embeddings.size()) + " values, expected " +
                              std::to_string(d.labels.size()) + " x " + std::to_string(d.dim));
    for (std::size_t i = 0; i < d.labels.size(); ++i)
        if (d.labels[i] >= d.n_classes())
            throw ValidationError("label " + std::to_string(d.labels[i]) + " at row " + std::to_string(i) +
                                  " is outside the class table of size " + std::to_string(d.n_classes()));
    for (std::size_t i = 0; i < d.embeddings.size(); ++i)
        if (!std::isfinite(d.embeddings[i]))
            throw ValidationError("non-finite value at row " + std::to_string(i / d.dim) + ", channel " +
                                  std::to_string(i % d.dim));
}

inline std::vector<std::size_t> class_counts(const EmbeddingDataset& d) {
    std::vector<std::size_t> counts(d.n_classes(), 0);
    for (auto l : d.labels) ++counts.at(l);
    return counts;
}

/// Row indices grouped by label, each group in ascending row order.
inline std::vector<std::vector<std::size_t>> rows_by_class(const EmbeddingDataset& d) {
    std::vector<std::vector<std::size_t>> out(d.n_classes());
    for (std::size_t i = 0; i < d.size(); ++i) out.at(d.labels[i]).push_back(i);
    return out;
}

inline void require_same_class_table(const EmbeddingDataset& a, const EmbeddingDataset& b, const std::string& a_name,
                                     const std::string& b_name) {
    if (a.class_names != b.class_names)
        throw ValidationError("class table of " + b_name + " does not match " + a_name + " (" +
                              std::to_string(b.n_classes()) + " vs " + std::to_string(a.n_classes()) +
                              " classes, names or order differ)");
    if (a.dim != b.dim)
        throw ValidationError("dimension of " + b_name + " (" + std::to_string(b.dim) + ") does not match " + a_name +
                              " (" + std::to_string(a.dim) + ")");
}

// ---------------------------------------------------------------------------
// DARC1 binary format (little-endian):
//   "DARC" | u32 version=1 | u32 dim | u64 n | u32 n_classes | u8 view
//   | n_classes x (u32 len, utf-8 bytes) | n x u32 labels | n*dim x f32
// ---------------------------------------------------------------------------

inline constexpr std::string_view kDarcMagic = "DARC";
inline constexpr std::uint32_t kDarcVersion = 1;

inline std::string encode_dataset(const EmbeddingDataset& d) {
    validate(d);
    io::ByteWriter w;
    w.bytes(kDarcMagic);
    w.u32(kDarcVersion);
    w.u32(static_cast<std::uint32_t>(d.dim));
    w.u64(d.size());
    w.u32(static_cast<std::uint32_t>(d.n_classes()));
    w.u8(static_cast<std::uint8_t>(d.view));
    for (const auto& name : d.class_names) {
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.bytes(name);
    }
    for (auto l : d.labels) w.u32(l);
    for (auto v : d.embeddings) w.f32(v);
    return w.buffer();
}

inline EmbeddingDataset decode_dataset(std::string_view bytes, const std::string& what = "DARC1 data") {
    io::ByteReader r(bytes, what);
    if (bytes.size() < kDarcMagic.size() || r.bytes(kDarcMagic.size()) != kDarcMagic)
        throw FormatError(what + ": bad magic (expected \"DARC\")");
    const auto version = r.u32();
    if (version != kDarcVersion) throw FormatError(what + ": unsupported version " + std::to_string(version));

    EmbeddingDataset d;
    d.dim = r.u32();
    const auto n = r.u64();
    const auto n_classes = r.u32();
    const auto view = r.u8();
    if (view > 1) throw FormatError(what + ": unknown view tag " + std::to_string(view));
    d.view = static_cast<View>(view);
    if (d.dim == 0) throw ValidationError(what + ": dim must be positive");

    d.class_names.reserve(n_classes);
    for (std::uint32_t c = 0; c < n_classes; ++c) {
        const auto len = r.u32();
        d.class_names.emplace_back(r.bytes(len));
    }
    // Check the whole payload length up front so that a corrupt header cannot
    // trigger a huge allocation.
    const std::uint64_t budget = r.remaining() / 4;
    const bool fits = n <= budget && (n == 0 || d.dim <= budget / n) && n + n * d.dim <= budget;
    const std::uint64_t floats = fits ? n * d.dim : 0;
    if (!fits || (n + floats) * 4 > r.remaining())
        throw LengthError(what + ": truncated payload (header declares n=" + std::to_string(n) +
                          ", dim=" + std::to_string(d.dim) + ", but only " + std::to_string(r.remaining()) +
                          " bytes follow the class table)");
    d.labels.resize(n);
    for (auto& l : d.labels) l = r.u32();
    d.embeddings.resize(floats);
    for (auto& v : d.embeddings) v = r.f32();
    if (r.remaining() != 0)
        throw FormatError(what + ": " + std::to_string(r.remaining()) + " trailing bytes after payload");
    try {
        validate(d);
    } catch (const ValidationError& e) {
        throw ValidationError(what + ": " + e.what());
    }
    return d;
}

inline std::filesystem::path meta_sidecar_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".meta.json");
}

/// Writes the DARC1 file and, when `meta` is non-empty, the JSON sidecar.
/// Validation happens before anything touches the filesystem.
inline void save_dataset(const EmbeddingDataset& d, const std::filesystem::path& path) {
    const auto bytes = encode_dataset(d);
    io::write_file(path, bytes);
    const auto sidecar = meta_sidecar_path(path);
    if (!d.meta.empty()) {
        nlohmann::json j = d.meta;
        io::write_file(sidecar, j.dump(2) + "\n");
    } else if (std::filesystem::exists(sidecar)) {
        std::filesystem::remove(sidecar);
    }
}

inline EmbeddingDataset load_dataset(const std::filesystem::path& path) {
    auto d = decode_dataset(io::read_file(path), path.string());
    const auto sidecar = meta_sidecar_path(path);
    if (std::filesystem::exists(sidecar)) {
        try {
            auto j = nlohmann::json::parse(io::read_file(sidecar));
            for (auto& [key, value] : j.items())
                d.meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(sidecar.string() + ": " + e.what());
        }
    }
    return d;
}

/// Row-wise concatenation; class tables and dims must agree.
inline EmbeddingDataset concat(const EmbeddingDataset& a, const EmbeddingDataset& b) {
    require_same_class_table(a, b, "first dataset", "second dataset");
    EmbeddingDataset out = a;
    out.embeddings.insert(out.embeddings.end(), b.embeddings.begin(), b.embeddings.end());
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    return out;
}

}  // namespace transdarc
