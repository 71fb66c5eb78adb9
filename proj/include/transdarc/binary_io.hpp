#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>

#include "transdarc/error.hpp"

namespace transdarc::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

/// Little-endian encoder into a growable byte buffer.
class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.append(s); }

    template <typename T>
    void le(T value) {
        static_assert(std::is_trivially_copyable_v<T>);
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        buf_.append(reinterpret_cast<const char*>(raw), sizeof(T));
    }

    void u8(std::uint8_t v) { le(v); }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void f32(float v) { le(v); }

    const std::string& buffer() const noexcept { return buf_; }

private:
    std::string buf_;
};

/// Bounds-checked little-endian decoder; running off the end is a LengthError.
class ByteReader {
public:
    ByteReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

    std::string_view bytes(std::size_t n) {
        need(n);
        auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    template <typename T>
    T le() {
        need(sizeof(T));
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, data_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, raw, sizeof(T));
        return value;
    }

    std::uint8_t u8() { return le<std::uint8_t>(); }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    float f32() { return le<float>(); }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }

    void need(std::size_t n) const {
        if (remaining() < n)
            throw LengthError(what_ + ": truncated payload (need " + std::to_string(n) + " more bytes at offset " +
                              std::to_string(pos_) + ", have " + std::to_string(remaining()) + ")");
    }

private:
    std::string_view data_;
    std::string what_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace transdarc::io
