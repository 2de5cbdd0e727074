#pragma once

// Little-endian byte encoding shared by every on-disk format.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "gq/error.hpp"

namespace gq::io {

static_assert(std::endian::native == std::endian::little, "on-disk formats assume a little-endian host");

class ByteWriter {
public:
    void magic(std::string_view m) { raw(m.data(), m.size()); }

    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T v) {
        raw(&v, sizeof(T));
    }

    void bytes(std::span<const std::uint8_t> b) { raw(b.data(), b.size()); }

    void raw(const void* p, std::size_t n) {
        const auto* c = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }

    std::size_t size() const noexcept { return buf_.size(); }
    const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data, std::string what = "file")
        : data_(data), what_(std::move(what)) {}

    void expect_magic(std::string_view m) {
        need(m.size(), "magic");
        const std::string_view got(reinterpret_cast<const char*>(data_.data() + pos_), m.size());
        if (got != m) {
            throw FormatError(what_ + ": magic mismatch, expected \"" + std::string(m) + "\" got \"" +
                                  printable(got) + "\"",
                              static_cast<std::int64_t>(pos_));
        }
        pos_ += m.size();
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get(const char* field) {
        need(sizeof(T), field);
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::span<const std::uint8_t> bytes(std::size_t n, const char* field) {
        need(n, field);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    const std::string& what() const noexcept { return what_; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw FormatError(what_ + ": " + msg, static_cast<std::int64_t>(pos_));
    }

    void expect_end() const {
        if (pos_ != data_.size()) {
            fail(std::to_string(data_.size() - pos_) + " trailing bytes");
        }
    }

private:
    void need(std::size_t n, const char* field) const {
        if (data_.size() - pos_ < n) {
            throw FormatError(what_ + ": truncated while reading " + field, static_cast<std::int64_t>(pos_));
        }
    }

    static std::string printable(std::string_view s) {
        std::string out;
        for (char c : s) {
            out += (c >= 0x20 && c < 0x7f) ? c : '?';
        }
        return out;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    std::string what_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it over path.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace gq::io
