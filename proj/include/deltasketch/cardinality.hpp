#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "detail/bytes.hpp"
#include "error.hpp"

namespace deltasketch {

inline constexpr std::uint64_t kDefaultSeed = 0x9e3779b97f4a7c15ULL;

namespace detail {

// Murmur3 finalizer.
constexpr std::uint64_t fmix64(std::uint64_t x) noexcept {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

}  // namespace detail

// Mergeable count-distinct sketch with 2^p max-of-rank registers.
//
// Items are re-hashed with a seeded mixer: the top p bits select a register,
// the remaining bits supply the rank (1 + leading zeros). Registers only ever
// grow, so the state is a function of the item set alone. The estimate uses
// Ertl's improved raw estimator, which covers the small range (where it
// behaves like linear counting) and the large range without a switch-over
// point, and is non-decreasing in every register below the saturation value.
class CardinalitySketch {
public:
    static constexpr int kMinPrecision = 4;
    static constexpr int kMaxPrecision = 20;
    static constexpr int kDefaultPrecision = 14;

    explicit CardinalitySketch(int precision = kDefaultPrecision, std::uint64_t seed = kDefaultSeed)
        : precision_(check_precision(precision)),
          seed_(seed),
          seed_mix_(detail::fmix64(seed ^ 0x6a09e667f3bcc909ULL)),
          registers_(std::size_t{1} << precision_, 0) {}

    int precision() const noexcept { return precision_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t register_count() const noexcept { return registers_.size(); }
    std::span<const std::uint8_t> registers() const noexcept { return registers_; }

    // Largest value a register can hold for this precision.
    int max_rank() const noexcept { return 64 - precision_ + 1; }

    void add(std::uint64_t item) noexcept {
        const std::uint64_t h = detail::fmix64(item ^ seed_mix_);
        const std::size_t index = static_cast<std::size_t>(h >> (64 - precision_));
        const std::uint64_t tail = (h << precision_) | (std::uint64_t{1} << (precision_ - 1));
        const auto rank = static_cast<std::uint8_t>(std::countl_zero(tail) + 1);
        if (registers_[index] < rank) registers_[index] = rank;
    }

    bool empty() const noexcept {
        return std::all_of(registers_.begin(), registers_.end(), [](std::uint8_t r) { return r == 0; });
    }

    void merge(const CardinalitySketch& other) {
        check_compatible(other);
        for (std::size_t i = 0; i < registers_.size(); ++i) {
            registers_[i] = std::max(registers_[i], other.registers_[i]);
        }
    }

    void check_compatible(const CardinalitySketch& other) const {
        if (precision_ != other.precision_) {
            throw Error(ErrorKind::parameter_mismatch, "precision differs (" + std::to_string(precision_) +
                                                           " vs " + std::to_string(other.precision_) + ")");
        }
        if (seed_ != other.seed_) throw Error(ErrorKind::parameter_mismatch, "hash seed differs");
    }

    double estimate() const noexcept {
        const int q = 64 - precision_;
        std::array<std::uint64_t, 66> histogram{};
        for (std::uint8_t r : registers_) ++histogram[r];
        const double m = static_cast<double>(registers_.size());
        if (histogram[0] == registers_.size()) return 0.0;

        double z = m * tau(1.0 - static_cast<double>(histogram[q + 1]) / m);
        for (int k = q; k >= 1; --k) z = 0.5 * (z + static_cast<double>(histogram[k]));
        z += m * sigma(static_cast<double>(histogram[0]) / m);
        return m * m / (2.0 * std::log(2.0) * z);
    }

    friend bool operator==(const CardinalitySketch&, const CardinalitySketch&) = default;

    // Register block: p (1 byte), seed (8 bytes LE), 2^p register bytes.
    std::vector<std::uint8_t> serialize() const {
        detail::ByteWriter out;
        out.u8(static_cast<std::uint8_t>(precision_));
        out.u64(seed_);
        out.bytes(registers_);
        return out.release();
    }

    static CardinalitySketch deserialize(std::span<const std::uint8_t> data) {
        detail::ByteReader in(data);
        const int p = in.u8();
        if (p < kMinPrecision || p > kMaxPrecision) throw Error(ErrorKind::format, "bad register precision");
        const std::uint64_t seed = in.u64();
        auto regs = in.bytes(std::size_t{1} << p);
        if (in.remaining() != 0) throw Error(ErrorKind::format, "trailing bytes after register block");
        return from_registers(p, seed, regs);
    }

    static CardinalitySketch from_registers(int precision, std::uint64_t seed, std::span<const std::uint8_t> regs) {
        CardinalitySketch sk(precision, seed);
        if (regs.size() != sk.registers_.size()) throw Error(ErrorKind::format, "register count mismatch");
        for (std::uint8_t r : regs) {
            if (r > sk.max_rank()) throw Error(ErrorKind::format, "register value out of range");
        }
        std::copy(regs.begin(), regs.end(), sk.registers_.begin());
        return sk;
    }

private:
    static int check_precision(int p) {
        if (p < kMinPrecision || p > kMaxPrecision) {
            throw Error(ErrorKind::invalid_parameter, "register precision must be in [4, 20], got " + std::to_string(p));
        }
        return p;
    }

    static double sigma(double x) noexcept {
        if (x == 1.0) return std::numeric_limits<double>::infinity();
        double y = 1.0;
        double z = x;
        double previous;
        do {
            x *= x;
            previous = z;
            z += x * y;
            y += y;
        } while (previous != z);
        return z;
    }

    static double tau(double x) noexcept {
        if (x == 0.0 || x == 1.0) return 0.0;
        double y = 1.0;
        double z = 1.0 - x;
        double previous;
        do {
            x = std::sqrt(x);
            previous = z;
            y *= 0.5;
            z -= (1.0 - x) * (1.0 - x) * y;
        } while (previous != z);
        return z / 3.0;
    }

    int precision_;
    std::uint64_t seed_;
    std::uint64_t seed_mix_;
    std::vector<std::uint8_t> registers_;
};

inline CardinalitySketch merged(CardinalitySketch a, const CardinalitySketch& b) {
    a.merge(b);
    return a;
}

}  // namespace deltasketch
