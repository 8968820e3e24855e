#include <gtest/gtest.h>

#include <random>
#include <set>

#include "deltasketch/oracle.hpp"
#include "deltasketch/rlbwt.hpp"
#include "test_support.hpp"

using namespace deltasketch;
using deltasketch::testing::ByteString;
using deltasketch::testing::bytes;

namespace {

DynamicRLBWT build(const ByteString& s) {
    DynamicRLBWT b;
    for (std::uint8_t c : s) b.extend(c);
    return b;
}

std::vector<Symbol> symbols(std::string_view with_dollar) {
    std::vector<Symbol> out;
    for (char c : with_dollar) out.push_back(c == '$' ? kSentinel : static_cast<Symbol>(static_cast<std::uint8_t>(c)));
    return out;
}

// Full comparison of content, run counts and LF against sorted rotations.
void expect_matches_naive(const DynamicRLBWT& b, const ByteString& s) {
    const auto naive = oracle::naive_bwt(s);
    ASSERT_EQ(b.content(), naive.bwt);
    ASSERT_EQ(b.runs().r, naive.r);
    ASSERT_EQ(b.runs().r_prime, naive.r_prime);
    ASSERT_EQ(b.run_nodes(), naive.r_prime);
    for (std::uint64_t j = 1; j <= b.size(); ++j) {
        ASSERT_EQ(b.access(j), naive.bwt[j - 1]);
        if (naive.bwt[j - 1] != kSentinel) ASSERT_EQ(b.lf(j), naive.lf[j]) << "j=" << j;
    }
}

}  // namespace

TEST(DynamicRLBWT, EmptyStructure) {
    DynamicRLBWT b;
    EXPECT_EQ(b.size(), 1u);
    EXPECT_EQ(b.access(1), kSentinel);
    EXPECT_EQ(b.runs().r, 1u);
    EXPECT_EQ(b.runs().r_prime, 0u);
    EXPECT_THROW(b.lf(1), Error);
    EXPECT_THROW(b.access(2), Error);
    EXPECT_THROW(b.access(0), Error);
}

TEST(DynamicRLBWT, SentinelReplacedOnEachExtension) {
    DynamicRLBWT b;
    EXPECT_EQ(b.extend('b'), 2u);
    EXPECT_EQ(b.content(), symbols("b$"));
    EXPECT_EQ(b.extend('a'), 2u);
    EXPECT_EQ(b.content(), symbols("b$a"));
    EXPECT_EQ(b.extend('a'), 2u);
    EXPECT_EQ(b.content(), symbols("b$aa"));
}

TEST(DynamicRLBWT, Babba) {
    const auto b = build(bytes("babba"));
    EXPECT_EQ(b.content(), symbols("bb$aba"));
    EXPECT_EQ(b.runs().r, 5u);
    EXPECT_EQ(b.runs().r_prime, 4u);
    EXPECT_EQ(b.lf(2), 5u);
    EXPECT_EQ(b.access(3), kSentinel);
    try {
        (void)b.lf(3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::sentinel_position);
    }
    EXPECT_EQ(b.dump(), "bx2 $x1 ax1 bx1 ax1");
}

TEST(DynamicRLBWT, SingleCharacter) {
    const auto b = build(bytes("a"));
    EXPECT_EQ(b.content(), symbols("a$"));
    const auto naive = oracle::naive_bwt(bytes("a"));
    EXPECT_EQ(b.lf(1), naive.lf[1]);
    EXPECT_EQ(b.lf(1), 2u);
}

TEST(DynamicRLBWT, ExhaustiveBinaryAgainstNaive) {
    for (std::size_t len = 1; len <= 12; ++len) {
        for (std::uint32_t mask = 0; mask < (1u << len); ++mask) {
            ByteString s(len);
            for (std::size_t i = 0; i < len; ++i) s[i] = (mask >> i) & 1 ? 'b' : 'a';
            const auto b = build(s);
            expect_matches_naive(b, s);
            if (::testing::Test::HasFatalFailure()) {
                ADD_FAILURE() << "string " << std::string(s.begin(), s.end());
                return;
            }
            // LF is a bijection from non-sentinel rows onto rows 2..n.
            std::set<std::uint64_t> images;
            for (std::uint64_t j = 1; j <= b.size(); ++j) {
                if (j != b.sentinel_position()) images.insert(b.lf(j));
            }
            ASSERT_EQ(images.size(), len);
            ASSERT_EQ(*images.begin(), 2u);
        }
    }
}

TEST(DynamicRLBWT, RandomStringsAgainstNaive) {
    std::mt19937_64 rng(17);
    for (unsigned sigma : {2u, 4u, 26u, 256u}) {
        for (int trial = 0; trial < 25; ++trial) {
            const auto s = deltasketch::testing::random_string(1 + rng() % 600, sigma, rng);
            expect_matches_naive(build(s), s);
            if (::testing::Test::HasFatalFailure()) return;
        }
    }
    for (unsigned family = 0; family < 6; ++family) {
        const auto s = deltasketch::testing::family_string(family, 700, rng);
        expect_matches_naive(build(s), s);
    }
}

TEST(DynamicRLBWT, RankMatchesCounting) {
    std::mt19937_64 rng(23);
    const auto s = deltasketch::testing::random_string(400, 4, rng);
    const auto b = build(s);
    const auto content = b.content();
    for (std::uint8_t c = 'a'; c < 'a' + 4; ++c) {
        std::uint64_t count = 0;
        EXPECT_EQ(b.rank(c, 0), 0u);
        for (std::uint64_t j = 1; j <= b.size(); ++j) {
            if (content[j - 1] == c) ++count;
            ASSERT_EQ(b.rank(c, j), count);
        }
    }
    EXPECT_THROW(b.rank('a', b.size() + 1), Error);
}

TEST(DynamicRLBWT, UnaryStreamHasOneRun) {
    DynamicRLBWT b;
    for (int i = 0; i < 1000; ++i) {
        b.extend('a');
        ASSERT_EQ(b.runs().r_prime, 1u);
    }
}

TEST(DynamicRLBWT, RunCountNeverDecreases) {
    std::mt19937_64 rng(29);
    for (unsigned sigma : {2u, 3u, 256u}) {
        DynamicRLBWT b;
        std::uint64_t previous = 0;
        for (int i = 0; i < 3000; ++i) {
            b.extend(static_cast<std::uint8_t>('a' + rng() % sigma));
            const auto runs = b.runs();
            ASSERT_GE(runs.r_prime, previous);
            ASSERT_LE(runs.r_prime, runs.r);
            ASSERT_LE(runs.r, runs.r_prime + 2);
            ASSERT_EQ(b.run_nodes(), runs.r_prime);
            previous = runs.r_prime;
        }
    }
}

TEST(Bookmark, InitAndAdvanceOnShortStream) {
    DynamicRLBWT b;
    b.extend('b');
    EXPECT_THROW(bookmark_init(b, 2), Error);
    b.extend('a');
    auto bm = bookmark_init(b, 2);
    EXPECT_EQ(bm.j, 1u);
    EXPECT_EQ(b.access(bm.j), 'b');
    const auto inserted = b.extend('a');
    EXPECT_EQ(inserted, 2u);
    bookmark_advance(bm, b, inserted);
    EXPECT_EQ(bm.j, 4u);
    EXPECT_EQ(b.access(bm.j), 'a');
    try {
        (void)bookmark_init(b, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::wrong_phase);
    }
}

TEST(Bookmark, SingleByteWindow) {
    DynamicRLBWT b;
    b.extend('x');
    auto bm = bookmark_init(b, 1);
    EXPECT_EQ(b.access(bm.j), 'x');
    bookmark_advance(bm, b, b.extend('y'));
    EXPECT_EQ(b.access(bm.j), 'y');
}

TEST(Bookmark, InvariantAgainstRetainedStream) {
    std::mt19937_64 rng(31);
    for (unsigned sigma : {1u, 2u, 4u, 256u}) {
        const std::size_t n = 2000;
        const auto s = deltasketch::testing::random_string(n, sigma, rng);
        const std::vector<std::uint64_t> ks = {1, 2, 3, 7, 50, 333, 1999};
        std::vector<Bookmark> marks;
        for (auto k : ks) marks.push_back(Bookmark{k, 0, BookmarkState::pending});
        DynamicRLBWT b;
        bool saw_shift = false;
        for (std::size_t m = 1; m <= n; ++m) {
            const auto inserted = b.extend(s[m - 1]);
            for (auto& bm : marks) {
                if (bm.state == BookmarkState::active) {
                    saw_shift |= bm.j >= inserted;
                    bookmark_advance(bm, b, inserted);
                } else if (bm.k == m) {
                    bm = bookmark_init(b, bm.k);
                }
                if (bm.state == BookmarkState::active) {
                    ASSERT_EQ(b.access(bm.j), s[m - bm.k]) << "sigma=" << sigma << " k=" << bm.k << " m=" << m;
                }
            }
        }
        if (sigma > 1) EXPECT_TRUE(saw_shift) << sigma;
    }
}
