#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "../error.hpp"

namespace deltasketch::detail {

// Little-endian append-only encoder.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }

    void u16(std::uint16_t v) { put_le(v, 2); }
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void bytes(std::span<const std::uint8_t> data) { out_.insert(out_.end(), data.begin(), data.end()); }

    const std::vector<std::uint8_t>& buffer() const noexcept { return out_; }
    std::vector<std::uint8_t> release() noexcept { return std::move(out_); }

private:
    void put_le(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> out_;
};

// Bounds-checked little-endian decoder; running off the end is a format error.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) noexcept : data_(data) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
    std::uint64_t u64() { return get_le(8); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::span<const std::uint8_t> bytes(std::size_t count) {
        require(count);
        auto view = data_.subspan(pos_, count);
        pos_ += count;
        return view;
    }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }

private:
    void require(std::size_t count) const {
        if (count > remaining()) throw Error(ErrorKind::format, "truncated input");
    }

    std::uint64_t get_le(int width) {
        require(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

}  // namespace deltasketch::detail
