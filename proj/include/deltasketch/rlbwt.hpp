#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace deltasketch {

/// A BWT symbol: a byte value 0..255, or the sentinel, which sorts first.
using Symbol = std::int16_t;
inline constexpr Symbol kSentinel = -1;

struct RunCounts {
    std::uint64_t r = 0;        // runs including the sentinel
    std::uint64_t r_prime = 0;  // runs after deleting the sentinel
};

/// Run-length BWT of the reversed stream, built online by right-extensions
/// of the stream.
///
/// Positions are 1-based over the full BWT (sentinel included). The sentinel
/// is kept implicit: the run sequence stores the BWT with the sentinel
/// removed, so its node count is exactly r'. Runs live in two treaps that
/// share nodes: one over all runs in text order (subtree lengths give
/// positional search), and one per symbol (subtree lengths give rank).
class DynamicRLBWT {
public:
    DynamicRLBWT() { roots_sym_.fill(kNil); }

    /// Length including the sentinel.
    std::uint64_t size() const noexcept { return data_len_ + 1; }
    std::uint64_t data_length() const noexcept { return data_len_; }
    std::uint64_t sentinel_position() const noexcept { return sentinel_; }
    std::size_t run_nodes() const noexcept { return nodes_.size(); }

    /// Replaces the sentinel with `a` and reinserts the sentinel at the rank
    /// of the new reversed stream. Returns that new sentinel position.
    std::uint64_t extend(std::uint8_t a) {
        const std::uint64_t q = sentinel_ - 1;
        const std::uint32_t run = insert(q, a);
        ++data_len_;
        add_count(a);
        const std::uint64_t offset = q - position(run);
        sentinel_ = 1 + count_less(a) + rank_before(run) + offset + 1;
        return sentinel_;
    }

    Symbol access(std::uint64_t j) const {
        check_position(j);
        if (j == sentinel_) return kSentinel;
        return nodes_[locate(data_index(j)).first].sym;
    }

    /// LF mapping of a non-sentinel position.
    std::uint64_t lf(std::uint64_t j) const {
        check_position(j);
        if (j == sentinel_) throw Error(ErrorKind::sentinel_position, "LF of the sentinel position");
        const auto [run, offset] = locate(data_index(j));
        return 1 + count_less(nodes_[run].sym) + rank_before(run) + offset + 1;
    }

    /// Occurrences of byte c in positions [1, j] of the full BWT.
    std::uint64_t rank(std::uint8_t c, std::uint64_t j) const {
        if (j > size()) throw Error(ErrorKind::out_of_range, "rank position " + std::to_string(j));
        std::uint64_t p = j >= sentinel_ ? j - 1 : j;  // data prefix length
        std::uint64_t acc = 0;
        std::uint32_t x = roots_sym_[c];
        while (x != kNil) {
            const std::uint64_t start = position(x);
            const Node& n = nodes_[x];
            if (start >= p) {
                x = n.link[kBySymbol].left;
            } else if (start + n.len >= p) {
                return acc + sum(n.link[kBySymbol].left, kBySymbol) + (p - start);
            } else {
                acc += sum(n.link[kBySymbol].left, kBySymbol) + n.len;
                x = n.link[kBySymbol].right;
            }
        }
        return acc;
    }

    RunCounts runs() const noexcept {
        RunCounts counts;
        counts.r_prime = nodes_.size();
        counts.r = counts.r_prime + 1;
        if (sentinel_ > 1 && sentinel_ < size()) {
            // The sentinel splits a run when both neighbours carry the same byte.
            const auto left = locate(sentinel_ - 2).first;
            const auto right = locate(sentinel_ - 1).first;
            if (left == right) ++counts.r;
        }
        return counts;
    }

    std::vector<Symbol> content() const {
        std::vector<Symbol> out;
        out.reserve(size());
        for (std::uint32_t x = leftmost(root_, kByPosition); x != kNil; x = successor(x, kByPosition)) {
            out.insert(out.end(), nodes_[x].len, nodes_[x].sym);
        }
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(sentinel_ - 1), kSentinel);
        return out;
    }

    /// One "symbol x length" pair per run, sentinel shown as '$'.
    std::string dump() const {
        std::ostringstream os;
        std::uint64_t pos = 1;
        bool placed = false;
        auto put_sentinel = [&] {
            os << "$x1 ";
            placed = true;
            ++pos;
        };
        for (std::uint32_t x = leftmost(root_, kByPosition); x != kNil; x = successor(x, kByPosition)) {
            const Node& n = nodes_[x];
            if (!placed && sentinel_ == pos) put_sentinel();
            if (!placed && sentinel_ > pos && sentinel_ < pos + n.len) {
                const std::uint64_t head = sentinel_ - pos;
                os << n.sym << 'x' << head << ' ';
                pos += head;
                put_sentinel();
                os << n.sym << 'x' << (n.len - head) << ' ';
                pos += n.len - head;
                continue;
            }
            os << n.sym << 'x' << n.len << ' ';
            pos += n.len;
        }
        if (!placed) put_sentinel();
        std::string s = os.str();
        s.pop_back();
        return s;
    }

    std::size_t memory_bytes() const noexcept { return sizeof(*this) + nodes_.capacity() * sizeof(Node); }

private:
    static constexpr std::uint32_t kNil = std::numeric_limits<std::uint32_t>::max();
    static constexpr int kByPosition = 0;
    static constexpr int kBySymbol = 1;

    struct Link {
        std::uint32_t left = kNil;
        std::uint32_t right = kNil;
        std::uint32_t parent = kNil;
        std::uint64_t sum = 0;
    };

    struct Node {
        std::uint64_t len = 0;
        std::uint32_t priority = 0;
        std::uint8_t sym = 0;
        std::array<Link, 2> link;
    };

    void check_position(std::uint64_t j) const {
        if (j < 1 || j > size()) {
            throw Error(ErrorKind::out_of_range, "BWT position " + std::to_string(j) + " outside [1, " +
                                                     std::to_string(size()) + "]");
        }
    }

    // 0-based index into the sentinel-free sequence.
    std::uint64_t data_index(std::uint64_t j) const noexcept { return j < sentinel_ ? j - 1 : j - 2; }

    std::uint64_t sum(std::uint32_t x, int w) const noexcept { return x == kNil ? 0 : nodes_[x].link[w].sum; }

    std::uint32_t& root(int w, std::uint8_t sym) noexcept { return w == kByPosition ? root_ : roots_sym_[sym]; }

    void pull(std::uint32_t x, int w) noexcept {
        Link& l = nodes_[x].link[w];
        l.sum = nodes_[x].len + sum(l.left, w) + sum(l.right, w);
    }

    // Rotates x above its parent.
    void rotate_up(std::uint32_t x, int w) noexcept {
        const std::uint32_t p = nodes_[x].link[w].parent;
        const std::uint32_t g = nodes_[p].link[w].parent;
        Link& lx = nodes_[x].link[w];
        Link& lp = nodes_[p].link[w];
        if (lp.left == x) {
            lp.left = lx.right;
            if (lx.right != kNil) nodes_[lx.right].link[w].parent = p;
            lx.right = p;
        } else {
            lp.right = lx.left;
            if (lx.left != kNil) nodes_[lx.left].link[w].parent = p;
            lx.left = p;
        }
        lp.parent = x;
        lx.parent = g;
        if (g == kNil) {
            root(w, nodes_[x].sym) = x;
        } else if (nodes_[g].link[w].left == p) {
            nodes_[g].link[w].left = x;
        } else {
            nodes_[g].link[w].right = x;
        }
        pull(p, w);
        pull(x, w);
    }

    // Links fresh node y directly after `pred` in tree w (at the front when
    // pred is nil), then restores the heap order on priorities.
    void insert_after(std::uint32_t pred, std::uint32_t y, int w) {
        std::uint32_t& r = root(w, nodes_[y].sym);
        Link& ly = nodes_[y].link[w];
        ly = Link{};
        ly.sum = nodes_[y].len;
        if (r == kNil) {
            r = y;
            return;
        }
        std::uint32_t parent;
        bool as_left;
        if (pred == kNil) {
            parent = leftmost(r, w);
            as_left = true;
        } else if (nodes_[pred].link[w].right == kNil) {
            parent = pred;
            as_left = false;
        } else {
            parent = leftmost(nodes_[pred].link[w].right, w);
            as_left = true;
        }
        (as_left ? nodes_[parent].link[w].left : nodes_[parent].link[w].right) = y;
        ly.parent = parent;
        for (std::uint32_t a = parent; a != kNil; a = nodes_[a].link[w].parent) nodes_[a].link[w].sum += nodes_[y].len;
        while (ly.parent != kNil && nodes_[ly.parent].priority < nodes_[y].priority) rotate_up(y, w);
    }

    void grow(std::uint32_t x, std::int64_t delta) noexcept {
        nodes_[x].len = static_cast<std::uint64_t>(static_cast<std::int64_t>(nodes_[x].len) + delta);
        for (int w : {kByPosition, kBySymbol}) {
            for (std::uint32_t a = x; a != kNil; a = nodes_[a].link[w].parent) {
                nodes_[a].link[w].sum = static_cast<std::uint64_t>(static_cast<std::int64_t>(nodes_[a].link[w].sum) + delta);
            }
        }
    }

    std::uint32_t leftmost(std::uint32_t x, int w) const noexcept {
        if (x == kNil) return kNil;
        while (nodes_[x].link[w].left != kNil) x = nodes_[x].link[w].left;
        return x;
    }

    std::uint32_t rightmost(std::uint32_t x, int w) const noexcept {
        if (x == kNil) return kNil;
        while (nodes_[x].link[w].right != kNil) x = nodes_[x].link[w].right;
        return x;
    }

    std::uint32_t successor(std::uint32_t x, int w) const noexcept {
        if (nodes_[x].link[w].right != kNil) return leftmost(nodes_[x].link[w].right, w);
        std::uint32_t p = nodes_[x].link[w].parent;
        while (p != kNil && nodes_[p].link[w].right == x) {
            x = p;
            p = nodes_[p].link[w].parent;
        }
        return p;
    }

    std::uint32_t predecessor(std::uint32_t x, int w) const noexcept {
        if (nodes_[x].link[w].left != kNil) return rightmost(nodes_[x].link[w].left, w);
        std::uint32_t p = nodes_[x].link[w].parent;
        while (p != kNil && nodes_[p].link[w].left == x) {
            x = p;
            p = nodes_[p].link[w].parent;
        }
        return p;
    }

    // Number of data characters in runs before x, in text order (w = 0) or
    // among runs of the same symbol (w = 1).
    std::uint64_t prefix_before(std::uint32_t x, int w) const noexcept {
        std::uint64_t s = sum(nodes_[x].link[w].left, w);
        for (std::uint32_t p = nodes_[x].link[w].parent; p != kNil; x = p, p = nodes_[p].link[w].parent) {
            if (nodes_[p].link[w].right == x) s += sum(nodes_[p].link[w].left, w) + nodes_[p].len;
        }
        return s;
    }

    std::uint64_t position(std::uint32_t x) const noexcept { return prefix_before(x, kByPosition); }
    std::uint64_t rank_before(std::uint32_t x) const noexcept { return prefix_before(x, kBySymbol); }

    // Run containing data index q (q < data_len_), with the offset inside it.
    std::pair<std::uint32_t, std::uint64_t> locate(std::uint64_t q) const noexcept {
        std::uint32_t x = root_;
        for (;;) {
            const Node& n = nodes_[x];
            const std::uint64_t left = sum(n.link[kByPosition].left, kByPosition);
            if (q < left) {
                x = n.link[kByPosition].left;
            } else if (q < left + n.len) {
                return {x, q - left};
            } else {
                q -= left + n.len;
                x = n.link[kByPosition].right;
            }
        }
    }

    std::uint32_t new_node(std::uint8_t sym, std::uint64_t len) {
        if (nodes_.size() >= kNil) throw Error(ErrorKind::capacity_exceeded, "too many BWT runs");
        Node n;
        n.sym = sym;
        n.len = len;
        n.priority = next_priority();
        nodes_.push_back(n);
        return static_cast<std::uint32_t>(nodes_.size() - 1);
    }

    // Places a fresh run y after `pred` in text order and into its symbol tree.
    void place(std::uint32_t pred, std::uint32_t y) {
        insert_after(pred, y, kByPosition);
        const std::uint64_t start = position(y);
        std::uint32_t sym_pred = kNil;
        for (std::uint32_t z = roots_sym_[nodes_[y].sym]; z != kNil;) {
            if (position(z) < start) {
                sym_pred = z;
                z = nodes_[z].link[kBySymbol].right;
            } else {
                z = nodes_[z].link[kBySymbol].left;
            }
        }
        insert_after(sym_pred, y, kBySymbol);
    }

    // Inserts byte c at data index q; returns the run now holding it.
    std::uint32_t insert(std::uint64_t q, std::uint8_t c) {
        if (root_ == kNil) {
            const std::uint32_t y = new_node(c, 1);
            place(kNil, y);
            return y;
        }
        if (q == data_len_) {
            const std::uint32_t last = rightmost(root_, kByPosition);
            if (nodes_[last].sym == c) {
                grow(last, 1);
                return last;
            }
            const std::uint32_t y = new_node(c, 1);
            place(last, y);
            return y;
        }
        const auto [x, offset] = locate(q);
        if (nodes_[x].sym == c) {
            grow(x, 1);
            return x;
        }
        if (offset == 0) {
            const std::uint32_t prev = predecessor(x, kByPosition);
            if (prev != kNil && nodes_[prev].sym == c) {
                grow(prev, 1);
                return prev;
            }
            const std::uint32_t y = new_node(c, 1);
            place(prev, y);
            return y;
        }
        // Split x around the insertion point.
        const std::uint64_t tail_len = nodes_[x].len - offset;
        grow(x, -static_cast<std::int64_t>(tail_len));
        const std::uint32_t tail = new_node(nodes_[x].sym, tail_len);
        insert_after(x, tail, kByPosition);
        insert_after(x, tail, kBySymbol);
        const std::uint32_t y = new_node(c, 1);
        place(x, y);
        return y;
    }

    void add_count(std::uint8_t c) noexcept {
        for (std::size_t i = std::size_t{c} + 1; i <= 256; i += i & (~i + 1)) ++fenwick_[i];
    }

    // Data characters strictly smaller than c.
    std::uint64_t count_less(std::uint8_t c) const noexcept {
        std::uint64_t s = 0;
        for (std::size_t i = c; i > 0; i -= i & (~i + 1)) s += fenwick_[i];
        return s;
    }

    std::uint32_t next_priority() noexcept {
        // xorshift64*; deterministic so that runs are reproducible.
        rng_ ^= rng_ >> 12;
        rng_ ^= rng_ << 25;
        rng_ ^= rng_ >> 27;
        return static_cast<std::uint32_t>((rng_ * 0x2545f4914f6cdd1dULL) >> 32);
    }

    std::vector<Node> nodes_;
    std::uint32_t root_ = kNil;
    std::array<std::uint32_t, 256> roots_sym_{};
    std::array<std::uint64_t, 257> fenwick_{};
    std::uint64_t sentinel_ = 1;
    std::uint64_t data_len_ = 0;
    std::uint64_t rng_ = 0x853c49e6748fea9bULL;
};

enum class BookmarkState : std::uint8_t { pending, active, retired };

/// A BWT position j tracking the byte k positions back from the end of the
/// stream: access(j) == S[|S| - k + 1] after every completed extension.
struct Bookmark {
    std::uint64_t k = 0;
    std::uint64_t j = 0;
    BookmarkState state = BookmarkState::pending;
};

/// Activates a bookmark right after the extension that brought the stream
/// to exactly k data bytes (k + 1 with the sentinel). The LF image of the
/// sentinel row is row 1, whose BWT character is the first stream byte.
inline Bookmark bookmark_init(const DynamicRLBWT& bwt, std::uint64_t k) {
    if (k == 0 || bwt.data_length() != k) {
        throw Error(ErrorKind::wrong_phase, "bookmark for k = " + std::to_string(k) + " initialised at stream length " +
                                                std::to_string(bwt.data_length()));
    }
    return Bookmark{k, 1, BookmarkState::active};
}

/// Re-establishes the invariant after bwt.extend() returned `inserted_at`.
inline void bookmark_advance(Bookmark& bm, const DynamicRLBWT& bwt, std::uint64_t inserted_at) {
    if (bm.state != BookmarkState::active) return;
    if (bm.j >= inserted_at) ++bm.j;
    bm.j = bwt.lf(bm.j);
}

}  // namespace deltasketch
