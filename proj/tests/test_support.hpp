#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace deltasketch::testing {

using ByteString = std::vector<std::uint8_t>;

inline ByteString bytes(std::string_view s) { return ByteString(s.begin(), s.end()); }

inline std::span<const std::uint8_t> view(const ByteString& s) { return s; }

inline ByteString random_string(std::size_t n, unsigned sigma, std::mt19937_64& rng) {
    std::uniform_int_distribution<unsigned> pick(0, sigma - 1);
    ByteString s(n);
    for (auto& c : s) c = static_cast<std::uint8_t>(sigma <= 26 ? 'a' + pick(rng) : pick(rng));
    return s;
}

inline ByteString fibonacci_word(std::size_t n) {
    std::string a = "a", b = "ab";
    while (b.size() < n) {
        std::string next = b + a;
        a = std::move(b);
        b = std::move(next);
    }
    return bytes(std::string_view(b).substr(0, n));
}

inline ByteString thue_morse(std::size_t n) {
    ByteString s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = (__builtin_popcountll(i) & 1) ? 'b' : 'a';
    return s;
}

inline ByteString periodic(std::size_t n, std::string_view period) {
    ByteString s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<std::uint8_t>(period[i % period.size()]);
    return s;
}

/// The string families used throughout: random over 2, 4 and 26 letters,
/// Fibonacci, Thue-Morse and periodic with a random period.
inline ByteString family_string(unsigned family, std::size_t n, std::mt19937_64& rng) {
    switch (family % 6) {
    case 0: return random_string(n, 2, rng);
    case 1: return random_string(n, 4, rng);
    case 2: return random_string(n, 26, rng);
    case 3: return fibonacci_word(n);
    case 4: return thue_morse(n);
    default: {
        std::uniform_int_distribution<std::size_t> len(2, 40);
        ByteString p = random_string(len(rng), 4, rng);
        return periodic(n, std::string_view(reinterpret_cast<const char*>(p.data()), p.size()));
    }
    }
}

inline const char* family_name(unsigned family) {
    static const char* names[] = {"random2", "random4", "random26", "fibonacci", "thue-morse", "periodic"};
    return names[family % 6];
}

}  // namespace deltasketch::testing
