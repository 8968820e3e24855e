#pragma once

// Exact (brute-force) reference computations. Nothing here is hashed: every
// count is obtained from exact comparisons of substrings, so the results are
// unconditionally collision-free. Intended for tests, acceptance runs and the
// `exact` / `dk` CLI commands, not for large inputs.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "rlbwt.hpp"

namespace deltasketch::oracle {

using Bytes = std::span<const std::uint8_t>;

/// Non-negative fraction kept unreduced (numerator d_k, denominator k).
struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

    friend bool operator<(const Rational& a, const Rational& b) noexcept {
        return static_cast<unsigned __int128>(a.num) * b.den < static_cast<unsigned __int128>(b.num) * a.den;
    }
    friend bool operator>(const Rational& a, const Rational& b) noexcept { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) noexcept { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) noexcept { return !(a < b); }
    /// Equality of values, not of representations.
    friend bool operator==(const Rational& a, const Rational& b) noexcept { return !(a < b) && !(b < a); }

    std::string to_string() const { return std::to_string(num) + "/" + std::to_string(den); }
};

struct ComplexityProfile {
    std::vector<std::uint64_t> d;  // d[k] = d_k for k in [1, n]; d[0] unused
    Rational delta;
    std::uint64_t k_hat = 0;  // smallest maximising k

    std::uint64_t length() const noexcept { return d.empty() ? 0 : d.size() - 1; }
};

namespace detail {

// Suffix array by prefix doubling over an integer alphabet.
inline std::vector<std::uint32_t> suffix_array(const std::vector<std::int32_t>& text) {
    const std::size_t n = text.size();
    std::vector<std::uint32_t> sa(n);
    std::iota(sa.begin(), sa.end(), 0u);
    std::vector<std::int64_t> rank(text.begin(), text.end());
    std::vector<std::int64_t> next(n);
    for (std::size_t len = 1;; len <<= 1) {
        auto key = [&](std::uint32_t i) {
            return std::pair{rank[i], i + len < n ? rank[i + len] : std::int64_t{-1}};
        };
        std::sort(sa.begin(), sa.end(), [&](std::uint32_t a, std::uint32_t b) { return key(a) < key(b); });
        if (n == 0) break;
        next[sa[0]] = 0;
        for (std::size_t i = 1; i < n; ++i) next[sa[i]] = next[sa[i - 1]] + (key(sa[i - 1]) < key(sa[i]) ? 1 : 0);
        rank.swap(next);
        if (rank[sa[n - 1]] == static_cast<std::int64_t>(n - 1) || len >= n) break;
    }
    return sa;
}

// Kasai: lcp[i] = LCP(suffix sa[i-1], suffix sa[i]), lcp[0] = 0.
inline std::vector<std::uint32_t> lcp_array(const std::vector<std::int32_t>& text, const std::vector<std::uint32_t>& sa) {
    const std::size_t n = text.size();
    std::vector<std::uint32_t> inverse(n), lcp(n, 0);
    for (std::size_t i = 0; i < n; ++i) inverse[sa[i]] = static_cast<std::uint32_t>(i);
    std::size_t h = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (inverse[i] == 0) {
            h = 0;
            continue;
        }
        const std::size_t j = sa[inverse[i] - 1];
        while (i + h < n && j + h < n && text[i + h] == text[j + h]) ++h;
        lcp[inverse[i]] = static_cast<std::uint32_t>(h);
        if (h > 0) --h;
    }
    return lcp;
}

inline std::size_t longest(std::span<const Bytes> strings) {
    std::size_t m = 0;
    for (auto s : strings) m = std::max(m, s.size());
    return m;
}

}  // namespace detail

/// |union over strings of D_k(string)| for every k in [1, longest], through a
/// suffix array of the strings joined by unique separators. Windows never
/// cross a separator. Entry 0 is unused.
inline std::vector<std::uint64_t> distinct_counts(std::span<const Bytes> strings) {
    const std::size_t longest = detail::longest(strings);
    std::vector<std::int32_t> text;
    std::vector<std::uint32_t> piece_end;  // exclusive end of the piece holding each position
    for (std::size_t s = 0; s < strings.size(); ++s) {
        const auto end = static_cast<std::uint32_t>(text.size() + strings[s].size());
        for (std::uint8_t b : strings[s]) {
            text.push_back(std::int32_t{b} + 1);
            piece_end.push_back(end);
        }
        text.push_back(257 + static_cast<std::int32_t>(s));
        piece_end.push_back(end);
    }
    const auto sa = detail::suffix_array(text);
    const auto lcp = detail::lcp_array(text, sa);
    std::vector<std::int64_t> diff(longest + 2, 0);
    for (std::size_t i = 0; i < sa.size(); ++i) {
        const std::uint32_t p = sa[i];
        if (text[p] > 256) continue;  // separator
        const std::uint64_t reach = piece_end[p] - p;
        if (lcp[i] >= reach) continue;
        ++diff[lcp[i] + 1];
        --diff[reach + 1];
    }
    std::vector<std::uint64_t> d(longest + 1, 0);
    std::int64_t running = 0;
    for (std::size_t k = 1; k <= longest; ++k) {
        running += diff[k];
        d[k] = static_cast<std::uint64_t>(running);
    }
    return d;
}

/// Same quantity as distinct_counts, computed by refining exact equivalence
/// classes of windows one length at a time: the class of a length-(k+1)
/// window is determined by (class of its length-k prefix, last byte).
/// Quadratic; used as an independent cross-check.
inline std::vector<std::uint64_t> naive_distinct_counts(std::span<const Bytes> strings) {
    const std::size_t longest = detail::longest(strings);
    std::vector<std::uint64_t> d(longest + 1, 0);
    if (longest == 0) return d;
    std::vector<std::vector<std::uint64_t>> cls(strings.size());
    std::vector<bool> seen(256, false);
    for (std::size_t s = 0; s < strings.size(); ++s) {
        for (std::uint8_t b : strings[s]) {
            cls[s].push_back(b);
            if (!seen[b]) {
                seen[b] = true;
                ++d[1];
            }
        }
    }
    std::unordered_map<std::uint64_t, std::uint64_t> ids;
    for (std::size_t k = 2; k <= longest; ++k) {
        ids.clear();
        for (std::size_t s = 0; s < strings.size(); ++s) {
            auto& c = cls[s];
            if (strings[s].size() < k) {
                c.clear();
                continue;
            }
            const std::size_t windows = strings[s].size() - k + 1;
            for (std::size_t p = 0; p < windows; ++p) {
                const std::uint64_t key = (c[p] << 8) | strings[s][p + k - 1];
                c[p] = ids.try_emplace(key, ids.size()).first->second;
            }
            c.resize(windows);
        }
        d[k] = ids.size();
        // Once every window is unique, longer windows stay unique.
        std::uint64_t total = 0;
        for (auto s : strings) total += s.size() >= k ? s.size() - k + 1 : 0;
        if (d[k] == total) {
            for (std::size_t j = k + 1; j <= longest; ++j) {
                d[j] = 0;
                for (auto s : strings) d[j] += s.size() >= j ? s.size() - j + 1 : 0;
            }
            break;
        }
    }
    return d;
}

inline ComplexityProfile profile_from_counts(std::vector<std::uint64_t> d) {
    ComplexityProfile prof;
    prof.d = std::move(d);
    for (std::uint64_t k = 1; k < prof.d.size(); ++k) {
        const Rational candidate{prof.d[k], k};
        if (prof.k_hat == 0 || candidate > prof.delta) {
            prof.delta = candidate;
            prof.k_hat = k;
        }
    }
    return prof;
}

/// d_k for every k, delta = max_k d_k / k and the smallest maximiser.
inline ComplexityProfile exact_profile(Bytes s) {
    if (s.empty()) throw Error(ErrorKind::invalid_parameter, "exact profile of the empty string");
    const Bytes one[] = {s};
    return profile_from_counts(distinct_counts(one));
}

/// delta(S, T) = max_k |D_k(S) u D_k(T)| / k.
inline Rational exact_delta_pair(Bytes s, Bytes t) {
    if (s.empty() || t.empty()) throw Error(ErrorKind::invalid_parameter, "pairwise delta of an empty string");
    const Bytes both[] = {s, t};
    return profile_from_counts(distinct_counts(both)).delta;
}

inline double ncd_value(double ds, double dt, double dst) {
    const double hi = std::max(ds, dt);
    if (hi == 0.0) throw Error(ErrorKind::zero_denominator, "both complexities are zero");
    return (dst - std::min(ds, dt)) / hi;
}

inline double exact_ncd(Bytes s, Bytes t) {
    const double ds = exact_profile(s).delta.value();
    const double dt = exact_profile(t).delta.value();
    return ncd_value(ds, dt, exact_delta_pair(s, t).value());
}

struct NaiveBwt {
    std::vector<Symbol> bwt;        // BWT of reverse(S) with the sentinel, 1-based positions map to index-1
    std::uint64_t r = 0;
    std::uint64_t r_prime = 0;
    std::vector<std::uint64_t> lf;  // lf[j] for j in [1, n]; the sentinel row maps to 1
};

/// BWT of reverse(S)·$ by sorting every suffix with plain lexicographic
/// comparison.
inline NaiveBwt naive_bwt(Bytes s) {
    std::vector<Symbol> text(s.rbegin(), s.rend());
    text.push_back(kSentinel);
    const std::size_t n = text.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(text.begin() + static_cast<std::ptrdiff_t>(a), text.end(),
                                            text.begin() + static_cast<std::ptrdiff_t>(b), text.end());
    });
    NaiveBwt out;
    out.bwt.reserve(n);
    for (std::size_t i : order) out.bwt.push_back(text[(i + n - 1) % n]);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0 || out.bwt[i] != out.bwt[i - 1]) ++out.r;
    }
    Symbol previous = kSentinel;
    for (Symbol c : out.bwt) {
        if (c == kSentinel) continue;
        if (previous == kSentinel || c != previous) ++out.r_prime;
        previous = c;
    }
    std::vector<std::uint64_t> less(258, 0), seen(258, 0);
    for (Symbol c : out.bwt) ++less[static_cast<std::size_t>(c + 2)];
    std::partial_sum(less.begin(), less.end(), less.begin());  // less[c + 1] = #symbols < c
    out.lf.assign(n + 1, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        const auto c = static_cast<std::size_t>(out.bwt[j - 1] + 1);
        out.lf[j] = less[c] + ++seen[c];
    }
    return out;
}

}  // namespace deltasketch::oracle
