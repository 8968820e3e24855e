#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace deltasketch {

using Residue = std::uint64_t;

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;
inline constexpr std::uint64_t kByteBase = 256;

namespace detail {

using u128 = unsigned __int128;

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t q) noexcept {
    return static_cast<std::uint64_t>(static_cast<u128>(a) * b % q);
}

// x < 2^122
inline std::uint64_t reduce_mersenne61(u128 x) noexcept {
    std::uint64_t v = (static_cast<std::uint64_t>(x) & kMersenne61) + static_cast<std::uint64_t>(x >> 61);
    v = (v & kMersenne61) + (v >> 61);
    return v >= kMersenne61 ? v - kMersenne61 : v;
}

// (head * 256 + c) mod 2^61-1 for head < 2^61 with 64-bit arithmetic only.
inline std::uint64_t append_mersenne61(std::uint64_t head, std::uint8_t c) noexcept {
    std::uint64_t v = ((head << 8) & kMersenne61) + (head >> 53) + c;
    return v >= kMersenne61 ? v - kMersenne61 : v;
}

// Deterministic Miller-Rabin; the base set is exact for all 64-bit inputs.
inline bool is_prime(std::uint64_t n) noexcept {
    if (n < 2) return false;
    for (std::uint64_t p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
        if (n % p == 0) return n == p;
    }
    std::uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    auto pow_mod = [n](std::uint64_t b, std::uint64_t e) {
        std::uint64_t r = 1;
        b %= n;
        while (e > 0) {
            if (e & 1) r = mul_mod(r, b, n);
            b = mul_mod(b, b, n);
            e >>= 1;
        }
        return r;
    };
    for (std::uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
        std::uint64_t x = pow_mod(a, d);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = mul_mod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

}  // namespace detail

/// base^exponent mod q by square-and-multiply. Requires q >= 2.
inline Residue mod_pow(Residue base, std::uint64_t exponent, std::uint64_t q) noexcept {
    Residue result = 1 % q;
    base %= q;
    while (exponent > 0) {
        if (exponent & 1) result = detail::mul_mod(result, base, q);
        base = detail::mul_mod(base, base, q);
        exponent >>= 1;
    }
    return result;
}

/// Rabin fingerprinting over bytes (base 256) modulo a prime q.
///
/// The context owns the table of leading powers 256^(k-1) mod q for the
/// window lengths it was built for; sliding a window of length k requires
/// k to be in that table. Immutable after construction.
class FingerprintContext {
public:
    explicit FingerprintContext(std::span<const std::uint64_t> window_lengths = {},
                                std::uint64_t modulus = kMersenne61)
        : modulus_(modulus), mersenne_(modulus == kMersenne61) {
        if (modulus <= kByteBase || modulus >= (std::uint64_t{1} << 63) || !detail::is_prime(modulus)) {
            throw Error(ErrorKind::invalid_parameter,
                        "fingerprint modulus must be a prime in (256, 2^63): " + std::to_string(modulus));
        }
        powers_.reserve(window_lengths.size());
        for (std::uint64_t k : window_lengths) {
            if (k == 0) throw Error(ErrorKind::invalid_parameter, "window length must be positive");
            powers_.emplace_back(k, mod_pow(kByteBase, k - 1, modulus_));
        }
        std::sort(powers_.begin(), powers_.end());
        powers_.erase(std::unique(powers_.begin(), powers_.end()), powers_.end());
    }

    std::uint64_t modulus() const noexcept { return modulus_; }
    static constexpr std::uint64_t base() noexcept { return kByteBase; }

    /// Horner evaluation of the whole sequence; the empty sequence maps to 0.
    Residue fingerprint(std::span<const std::uint8_t> bytes) const noexcept {
        Residue fp = 0;
        for (std::uint8_t b : bytes) fp = append(fp, b);
        return fp;
    }

    /// Fingerprint of W·incoming given the fingerprint of W.
    Residue append(Residue fp, std::uint8_t incoming) const noexcept {
        if (mersenne_) {
            return detail::append_mersenne61(fp, incoming);
        }
        return static_cast<Residue>((static_cast<detail::u128>(fp) * kByteBase + incoming) % modulus_);
    }

    /// 256^(k-1) mod q.
    Residue leading_power(std::uint64_t k) const {
        auto it = std::lower_bound(powers_.begin(), powers_.end(), std::pair<std::uint64_t, Residue>{k, 0});
        if (it == powers_.end() || it->first != k) {
            throw Error(ErrorKind::missing_power, "no precomputed power for window length " + std::to_string(k));
        }
        return it->second;
    }

    /// Shifts a length-k window one byte to the right.
    Residue slide(Residue fp, std::uint8_t outgoing, std::uint8_t incoming, std::uint64_t k) const {
        return slide_with_power(fp, outgoing, incoming, leading_power(k));
    }

    /// slide() with the leading power supplied by the caller (hot loops).
    Residue slide_with_power(Residue fp, std::uint8_t outgoing, std::uint8_t incoming,
                             Residue power) const noexcept {
        Residue drop;
        if (mersenne_) {
            drop = detail::reduce_mersenne61(static_cast<detail::u128>(outgoing) * power);
        } else {
            drop = detail::mul_mod(outgoing, power, modulus_);
        }
        Residue head = fp >= drop ? fp - drop : fp + (modulus_ - drop);
        return append(head, incoming);
    }

    std::span<const std::pair<std::uint64_t, Residue>> power_table() const noexcept { return powers_; }

private:
    std::uint64_t modulus_;
    bool mersenne_;
    std::vector<std::pair<std::uint64_t, Residue>> powers_;
};

}  // namespace deltasketch
