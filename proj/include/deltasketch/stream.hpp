#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "rlbwt.hpp"
#include "sketch.hpp"

namespace deltasketch {

/// ceil(sqrt(n) * log2(n)), capped at n.
inline std::uint64_t default_window(std::uint64_t n) {
    const double nd = static_cast<double>(n);
    const auto k = static_cast<std::uint64_t>(std::ceil(std::sqrt(nd) * std::log2(nd)));
    return std::clamp<std::uint64_t>(k, 1, n);
}

/// Run count at which the RLBWT is discarded: 8 n log2(n)^2 / K.
inline double drop_threshold(std::uint64_t n, std::uint64_t window) {
    const double lg = std::log2(static_cast<double>(n));
    return 8.0 * static_cast<double>(n) * lg * lg / static_cast<double>(window);
}

struct StreamOptions {
    std::optional<std::uint64_t> window;  // overrides the default K
    bool rlbwt = false;
    unsigned threads = 1;
    std::size_t block_size = std::size_t{1} << 16;
};

struct DropEvent {
    std::uint64_t stream_length = 0;  // bytes seen when the RLBWT was discarded
    std::uint64_t r_prime = 0;
};

/// One-pass computation of the sketch over a stream whose length is bounded
/// by params.n_max. Lengths k <= K are served from a sliding window of the
/// last K bytes; longer lengths from bookmarks into a run-length BWT of the
/// reversed stream, which is discarded once its run count shows that the
/// maximising length fits in the window.
class StreamEstimator {
public:
    struct Result {
        double estimate = 0.0;
        DeltaSketch sketch;
    };

    explicit StreamEstimator(const SketchParams& params, StreamOptions options = {})
        : sketch_(params), options_(options) {
        const std::uint64_t n = params.n_max;
        if (options_.window && *options_.window == 0) {
            throw Error(ErrorKind::invalid_parameter, "window length must be positive");
        }
        window_cap_ = std::min(options_.window.value_or(default_window(n)), n);
        threshold_ = drop_threshold(n, window_cap_);
        window_.assign(window_cap_, 0);
        if (options_.rlbwt && params.epsilon < 1.0 / std::sqrt(static_cast<double>(n))) {
            throw Error(ErrorKind::invalid_parameter, "epsilon below n^-1/2 is not supported with the RLBWT");
        }
        const auto lengths = sketch_.lengths();
        rlbwt_active_ = options_.rlbwt && lengths.back() > window_cap_;
        if (rlbwt_active_) {
            rlbwt_.emplace();
            for (std::uint64_t k : lengths) {
                if (k > window_cap_) bookmarks_.push_back(Bookmark{k, 0, BookmarkState::pending});
            }
        } else {
            sketch_.freeze_above(window_cap_);
        }
        sketch_bytes_ = sketch_.memory_bytes();
        update_peak();
    }

    void push(std::uint8_t byte) {
        if (sketch_.stream_length() >= sketch_.params().n_max) {
            throw Error(ErrorKind::capacity_exceeded,
                        "stream longer than declared bound " + std::to_string(sketch_.params().n_max));
        }
        sketch_.extend(byte, [this](std::uint64_t k) -> std::uint8_t {
            if (k <= window_cap_) return window_back(k);
            const Bookmark& bm = bookmark_for(k);
            return static_cast<std::uint8_t>(rlbwt_->access(bm.j));
        });
        window_push(byte);
        if (rlbwt_active_) advance_rlbwt(byte);
        update_peak();
    }

    void push(std::span<const std::uint8_t> bytes) {
        if (bytes.size() > sketch_.params().n_max - sketch_.stream_length()) {
            throw Error(ErrorKind::capacity_exceeded,
                        "stream longer than declared bound " + std::to_string(sketch_.params().n_max));
        }
        std::size_t pos = 0;
        while (pos < bytes.size() && rlbwt_active_) push(bytes[pos++]);
        const std::size_t block = std::max<std::size_t>(options_.block_size, window_cap_);
        while (pos < bytes.size()) {
            const std::size_t take = std::min(block, bytes.size() - pos);
            push_block(bytes.subspan(pos, take));
            pos += take;
        }
    }

    Result finalize() && {
        const double est = sketch_.estimate();
        return Result{est, std::move(sketch_)};
    }

    const DeltaSketch& sketch() const noexcept { return sketch_; }
    std::uint64_t bytes_seen() const noexcept { return sketch_.stream_length(); }
    std::uint64_t window_capacity() const noexcept { return window_cap_; }
    double drop_threshold_runs() const noexcept { return threshold_; }
    bool rlbwt_active() const noexcept { return rlbwt_active_; }
    const DynamicRLBWT* rlbwt() const noexcept { return rlbwt_ ? &*rlbwt_ : nullptr; }
    std::span<const Bookmark> bookmarks() const noexcept { return bookmarks_; }
    const std::optional<DropEvent>& drop_event() const noexcept { return drop_; }

    /// Working memory on top of the input: window, block buffer, RLBWT,
    /// bookmarks and the sketch itself.
    std::size_t aux_bytes() const noexcept {
        std::size_t total = sizeof(*this) + window_.capacity() + block_.capacity() + sketch_bytes_ +
                            bookmarks_.capacity() * sizeof(Bookmark);
        if (rlbwt_) total += rlbwt_->memory_bytes();
        return total;
    }
    std::size_t peak_aux_bytes() const noexcept { return peak_; }

private:
    std::uint8_t window_back(std::uint64_t k) const noexcept {
        const std::uint64_t idx = (head_ + window_cap_ - k) % window_cap_;
        return window_[idx];
    }

    void window_push(std::uint8_t byte) noexcept {
        window_[head_] = byte;
        head_ = head_ + 1 == window_cap_ ? 0 : head_ + 1;
    }

    const Bookmark& bookmark_for(std::uint64_t k) const {
        auto it = std::lower_bound(bookmarks_.begin(), bookmarks_.end(), k,
                                   [](const Bookmark& b, std::uint64_t key) { return b.k < key; });
        if (it == bookmarks_.end() || it->k != k || it->state != BookmarkState::active) {
            throw Error(ErrorKind::wrong_phase, "no active bookmark for window length " + std::to_string(k));
        }
        return *it;
    }

    void advance_rlbwt(std::uint8_t byte) {
        const std::uint64_t inserted_at = rlbwt_->extend(byte);
        const std::uint64_t len = rlbwt_->data_length();
        for (Bookmark& bm : bookmarks_) {
            if (bm.state == BookmarkState::active) {
                bookmark_advance(bm, *rlbwt_, inserted_at);
            } else if (bm.state == BookmarkState::pending && bm.k == len) {
                bm = bookmark_init(*rlbwt_, bm.k);
            }
        }
        if (static_cast<double>(rlbwt_->run_nodes()) >= threshold_) {
            drop_ = DropEvent{len, rlbwt_->run_nodes()};
            rlbwt_.reset();
            bookmarks_.clear();
            bookmarks_.shrink_to_fit();
            rlbwt_active_ = false;
            sketch_.freeze_above(window_cap_);
        }
    }

    void push_block(std::span<const std::uint8_t> chunk) {
        const std::size_t context = static_cast<std::size_t>(std::min(sketch_.stream_length(), window_cap_));
        block_.resize(context + chunk.size());
        for (std::size_t i = 0; i < context; ++i) block_[i] = window_back(context - i);
        std::copy(chunk.begin(), chunk.end(), block_.begin() + static_cast<std::ptrdiff_t>(context));
        sketch_.extend_block(block_, context, options_.threads);
        const std::size_t keep = std::min<std::size_t>(chunk.size(), window_cap_);
        for (std::size_t i = chunk.size() - keep; i < chunk.size(); ++i) window_push(chunk[i]);
        update_peak();
    }

    void update_peak() noexcept { peak_ = std::max(peak_, aux_bytes()); }

    DeltaSketch sketch_;
    StreamOptions options_;
    std::uint64_t window_cap_ = 1;
    double threshold_ = 0.0;
    std::vector<std::uint8_t> window_;
    std::uint64_t head_ = 0;
    std::vector<std::uint8_t> block_;
    std::optional<DynamicRLBWT> rlbwt_;
    bool rlbwt_active_ = false;
    std::vector<Bookmark> bookmarks_;
    std::optional<DropEvent> drop_;
    std::size_t sketch_bytes_ = 0;
    std::size_t peak_ = 0;
};

}  // namespace deltasketch
