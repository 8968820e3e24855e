#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <zlib.h>

#include "cardinality.hpp"
#include "detail/bytes.hpp"
#include "detail/parallel.hpp"
#include "error.hpp"
#include "fingerprint.hpp"

namespace deltasketch {

/// Parameters shared by every sketch that may later be merged together.
struct SketchParams {
    double epsilon = 0.2;
    double alpha = 1.05;  // sample rate of the length grid
    std::uint64_t n_max = 2;
    int precision = CardinalitySketch::kDefaultPrecision;
    std::uint64_t modulus = kMersenne61;
    std::uint64_t seed = kDefaultSeed;

    /// Multiplicative error epsilon with the matching grid alpha = 1 + epsilon/4.
    static SketchParams for_error(double epsilon, std::uint64_t n_max) {
        SketchParams p;
        p.epsilon = epsilon;
        p.alpha = 1.0 + epsilon / 4.0;
        p.n_max = n_max;
        return p;
    }

    void validate() const {
        if (!(epsilon > 0.0 && epsilon <= 1.0)) {
            throw Error(ErrorKind::invalid_parameter, "epsilon must be in (0, 1], got " + std::to_string(epsilon));
        }
        if (!(alpha > 1.0) || !std::isfinite(alpha)) {
            throw Error(ErrorKind::invalid_parameter, "alpha must be > 1, got " + std::to_string(alpha));
        }
        if (n_max < 2) throw Error(ErrorKind::invalid_parameter, "n_max must be at least 2");
        if (precision < CardinalitySketch::kMinPrecision || precision > CardinalitySketch::kMaxPrecision) {
            throw Error(ErrorKind::invalid_parameter, "register precision must be in [4, 20]");
        }
    }

    /// Name of the first field that differs, or an empty string.
    std::string first_difference(const SketchParams& o) const {
        if (epsilon != o.epsilon) return "epsilon";
        if (alpha != o.alpha) return "alpha";
        if (n_max != o.n_max) return "n_max";
        if (precision != o.precision) return "precision";
        if (modulus != o.modulus) return "modulus";
        if (seed != o.seed) return "seed";
        return {};
    }

    friend bool operator==(const SketchParams&, const SketchParams&) = default;
};

/// Deduplicated, sorted {ceil(alpha^i) : 0 <= i <= floor(log_alpha n_max)}.
inline std::vector<std::uint64_t> sampled_lengths(double alpha, std::uint64_t n_max) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) {
        throw Error(ErrorKind::invalid_parameter, "alpha must be > 1");
    }
    if (n_max < 2) throw Error(ErrorKind::invalid_parameter, "n_max must be at least 2");
    std::vector<std::uint64_t> lengths;
    const auto limit = static_cast<double>(n_max);
    for (int i = 0;; ++i) {
        const double power = std::pow(alpha, i);
        if (power > limit) break;
        const auto k = static_cast<std::uint64_t>(std::ceil(power));
        if (lengths.empty() || lengths.back() != k) lengths.push_back(k);
    }
    return lengths;
}

inline constexpr std::uint16_t kSketchFormatVersion = 1;
inline constexpr char kSketchMagic[4] = {'D', 'S', 'K', '1'};

/// The sketch of a string (or, after merge, of a set of strings): one
/// count-distinct sketch per sampled window length k, fed with the
/// fingerprints of all length-k windows.
class DeltaSketch {
public:
    enum class Unary : std::uint8_t { empty = 0, unary = 1, mixed = 2 };

    explicit DeltaSketch(const SketchParams& params)
        : params_(validated(params)),
          lengths_(sampled_lengths(params_.alpha, params_.n_max)),
          context_(lengths_, params_.modulus),
          tracking_limit_(params_.n_max) {
        powers_.reserve(lengths_.size());
        for (std::uint64_t k : lengths_) powers_.push_back(context_.leading_power(k));
        cds_.assign(lengths_.size(), CardinalitySketch(params_.precision, params_.seed));
        fps_.assign(lengths_.size(), 0);
    }

    const SketchParams& params() const noexcept { return params_; }
    std::span<const std::uint64_t> lengths() const noexcept { return lengths_; }
    std::size_t length_count() const noexcept { return lengths_.size(); }
    const CardinalitySketch& cardinality(std::size_t index) const { return cds_.at(index); }
    const FingerprintContext& fingerprints() const noexcept { return context_; }
    std::uint64_t stream_length() const noexcept { return stream_len_; }
    std::uint64_t tracking_limit() const noexcept { return tracking_limit_; }

    /// Merged sketches and sketches loaded without fingerprints cannot grow.
    bool extendable() const noexcept { return extendable_; }
    /// Extendable, and every length is still tracked (no window was frozen).
    bool resumable() const noexcept { return extendable_ && !truncated_; }
    Unary unary_state() const noexcept { return unary_; }
    std::uint8_t unary_byte() const noexcept { return unary_byte_; }

    /// Fingerprint of the last min(k, stream length) bytes, for the k at index.
    Residue fingerprint(std::size_t index) const {
        const std::uint64_t k = lengths_.at(index);
        return k <= stream_len_ ? fps_[index] : prefix_fp_;
    }

    /// Stops updating lengths above `limit` once their first window has been
    /// recorded. Their sketches keep what they saw so far.
    void freeze_above(std::uint64_t limit) noexcept {
        tracking_limit_ = std::min(tracking_limit_, limit);
        note_truncation();
    }

    /// Appends one byte. history(k) must return the byte k positions back
    /// from the end of the current stream (history(1) is the last byte); it
    /// is called only for tracked k with k <= stream length.
    template <class History>
        requires std::invocable<History&, std::uint64_t>
    void extend(std::uint8_t byte, History&& history) {
        check_extendable(1);
        const std::uint64_t new_len = stream_len_ + 1;
        prefix_fp_ = context_.append(prefix_fp_, byte);
        for (std::size_t i = 0; i < lengths_.size(); ++i) {
            const std::uint64_t k = lengths_[i];
            if (k > new_len) break;
            if (k == new_len) {
                fps_[i] = prefix_fp_;
            } else if (k > tracking_limit_) {
                continue;
            } else {
                const auto outgoing = static_cast<std::uint8_t>(history(k));
                fps_[i] = context_.slide_with_power(fps_[i], outgoing, byte, powers_[i]);
            }
            cds_[i].add(fps_[i]);
        }
        stream_len_ = new_len;
        note_byte(byte);
        note_truncation();
    }

    /// Appends data[offset..]; data[..offset) must hold the bytes preceding
    /// them, at least as many as the largest tracked length that can slide
    /// (min of stream length and tracking limit). Lengths are processed
    /// independently and may be spread over `threads` workers; the result is
    /// identical for every thread count.
    void extend_block(std::span<const std::uint8_t> data, std::size_t offset, unsigned threads = 1) {
        if (offset > data.size()) throw Error(ErrorKind::out_of_range, "block offset past end of data");
        const std::uint64_t count = data.size() - offset;
        if (count == 0) return;
        check_extendable(count);
        const std::uint64_t needed = std::min({stream_len_, tracking_limit_, lengths_.back()});
        if (offset < needed) {
            throw Error(ErrorKind::invalid_parameter, "block context holds " + std::to_string(offset) +
                                                          " bytes, need " + std::to_string(needed));
        }
        const std::uint64_t len0 = stream_len_;

        // Whole-prefix fingerprints, needed only while some window is still filling.
        std::vector<Residue> prefix;
        Residue running = prefix_fp_;
        for (std::uint64_t t = 0; t < count && len0 + t < lengths_.back(); ++t) {
            running = context_.append(running, data[offset + t]);
            prefix.push_back(running);
        }
        if (len0 + count <= lengths_.back()) {
            prefix_fp_ = running;
        }

        // Per length: the first fill (if it happens in this block) from the
        // prefix, then position where sliding starts.
        std::vector<std::size_t> slide_from(lengths_.size(), data.size());
        for (std::size_t i = 0; i < lengths_.size(); ++i) {
            const std::uint64_t k = lengths_[i];
            if (len0 + count < k) continue;
            std::uint64_t t = k > len0 ? k - len0 - 1 : 0;
            if (len0 + t + 1 == k) {
                fps_[i] = prefix[t];
                cds_[i].add(fps_[i]);
                ++t;
            }
            if (k <= tracking_limit_) slide_from[i] = offset + t;
        }

        // Lengths in groups of four so that independent fingerprint chains overlap.
        constexpr std::size_t kGroup = 4;
        const std::size_t groups = (lengths_.size() + kGroup - 1) / kGroup;
        detail::parallel_for(groups, threads, [&](std::size_t g) {
            const std::size_t first = g * kGroup;
            const std::size_t last = std::min(first + kGroup, lengths_.size());
            std::size_t common = 0;
            for (std::size_t i = first; i < last; ++i) common = std::max(common, slide_from[i]);
            for (std::size_t i = first; i < last; ++i) slide_range(data, i, slide_from[i], common);
            if (last - first == kGroup && common < data.size()) {
                slide_group(data, first, common);
            } else {
                for (std::size_t i = first; i < last; ++i) slide_range(data, i, common, data.size());
            }
        });

        stream_len_ = len0 + count;
        for (std::size_t pos = offset; pos < data.size() && unary_ != Unary::mixed; ++pos) note_byte(data[pos]);
        note_truncation();
    }

    /// max over sampled k of estimate(CD_k)/k; exactly 1 for a unary stream.
    double estimate() const noexcept {
        if (unary_ == Unary::unary) return 1.0;
        if (unary_ == Unary::empty) return 0.0;
        double best = 0.0;
        for (std::size_t i = 0; i < lengths_.size() && lengths_[i] <= stream_len_; ++i) {
            best = std::max(best, cds_[i].estimate() / static_cast<double>(lengths_[i]));
        }
        return best;
    }

    /// Sketch of the set {a, b}: register-wise union per length. The result
    /// cannot be extended.
    friend DeltaSketch merge(const DeltaSketch& a, const DeltaSketch& b) {
        if (auto field = a.params_.first_difference(b.params_); !field.empty()) {
            throw Error(ErrorKind::parameter_mismatch, "sketch parameter '" + field + "' differs");
        }
        DeltaSketch out = a;
        for (std::size_t i = 0; i < out.cds_.size(); ++i) out.cds_[i].merge(b.cds_[i]);
        out.extendable_ = false;
        out.truncated_ = a.truncated_ || b.truncated_;
        std::fill(out.fps_.begin(), out.fps_.end(), 0);
        out.prefix_fp_ = 0;
        out.stream_len_ = std::max(a.stream_len_, b.stream_len_);
        out.tracking_limit_ = std::min(a.tracking_limit_, b.tracking_limit_);
        if (a.unary_ == Unary::empty) {
            out.unary_ = b.unary_;
            out.unary_byte_ = b.unary_byte_;
        } else if (b.unary_ != Unary::empty &&
                   (a.unary_ != b.unary_ || a.unary_byte_ != b.unary_byte_)) {
            out.unary_ = Unary::mixed;
        }
        return out;
    }

    /// Memory held by the sketch proper: registers, fingerprints, powers.
    std::size_t memory_bytes() const noexcept {
        std::size_t total = sizeof(*this);
        for (const auto& cd : cds_) total += cd.register_count() + sizeof(cd);
        total += lengths_.size() * (sizeof(std::uint64_t) + 2 * sizeof(Residue));
        return total;
    }

    // DSK1: magic, version u16, epsilon f64, alpha f64, n_max u64, q u64,
    // p u8, seed u64, resumable u8, |A| u32, A (u64 each), |A| register
    // blocks of 2^p bytes, stream_len u64, unary state u8, unary byte u8,
    // [|A| fingerprints u64 if resumable], CRC-32 of everything before it.
    std::vector<std::uint8_t> serialize() const {
        detail::ByteWriter out;
        for (char c : kSketchMagic) out.u8(static_cast<std::uint8_t>(c));
        out.u16(kSketchFormatVersion);
        out.f64(params_.epsilon);
        out.f64(params_.alpha);
        out.u64(params_.n_max);
        out.u64(params_.modulus);
        out.u8(static_cast<std::uint8_t>(params_.precision));
        out.u64(params_.seed);
        out.u8(resumable() ? 1 : 0);
        out.u32(static_cast<std::uint32_t>(lengths_.size()));
        for (std::uint64_t k : lengths_) out.u64(k);
        for (const auto& cd : cds_) out.bytes(cd.registers());
        out.u64(stream_len_);
        out.u8(static_cast<std::uint8_t>(unary_));
        out.u8(unary_byte_);
        if (resumable()) {
            for (std::size_t i = 0; i < lengths_.size(); ++i) out.u64(fingerprint(i));
        }
        const auto& buf = out.buffer();
        out.u32(static_cast<std::uint32_t>(::crc32(0L, buf.data(), static_cast<uInt>(buf.size()))));
        return out.release();
    }

    static DeltaSketch deserialize(std::span<const std::uint8_t> data) {
        if (data.size() < 4 + 4) throw Error(ErrorKind::format, "truncated sketch");
        const auto body = data.first(data.size() - 4);
        detail::ByteReader tail(data.last(4));
        if (tail.u32() != static_cast<std::uint32_t>(::crc32(0L, body.data(), static_cast<uInt>(body.size())))) {
            throw Error(ErrorKind::format, "checksum mismatch");
        }
        detail::ByteReader in(body);
        for (char c : kSketchMagic) {
            if (in.u8() != static_cast<std::uint8_t>(c)) throw Error(ErrorKind::format, "bad magic");
        }
        if (const auto version = in.u16(); version != kSketchFormatVersion) {
            throw Error(ErrorKind::format, "unsupported format version " + std::to_string(version));
        }
        SketchParams params;
        params.epsilon = in.f64();
        params.alpha = in.f64();
        params.n_max = in.u64();
        params.modulus = in.u64();
        params.precision = in.u8();
        params.seed = in.u64();
        const std::uint8_t resumable = in.u8();
        if (resumable > 1) throw Error(ErrorKind::format, "bad resumable flag");

        DeltaSketch sk = [&] {
            try {
                return DeltaSketch(params);
            } catch (const Error& e) {
                throw Error(ErrorKind::format, std::string("invalid parameters: ") + e.what());
            }
        }();
        if (in.u32() != sk.lengths_.size()) throw Error(ErrorKind::format, "length grid size mismatch");
        for (std::uint64_t k : sk.lengths_) {
            if (in.u64() != k) throw Error(ErrorKind::format, "length grid does not match alpha and n_max");
        }
        const std::size_t block = std::size_t{1} << params.precision;
        for (auto& cd : sk.cds_) cd = CardinalitySketch::from_registers(params.precision, params.seed, in.bytes(block));
        sk.stream_len_ = in.u64();
        if (sk.stream_len_ > params.n_max) throw Error(ErrorKind::format, "stream length exceeds n_max");
        const std::uint8_t unary = in.u8();
        if (unary > 2) throw Error(ErrorKind::format, "bad unary state");
        sk.unary_ = static_cast<Unary>(unary);
        sk.unary_byte_ = in.u8();
        sk.extendable_ = resumable == 1;
        if (resumable == 1) {
            for (std::size_t i = 0; i < sk.lengths_.size(); ++i) {
                const Residue fp = in.u64();
                if (fp >= params.modulus) throw Error(ErrorKind::format, "fingerprint out of range");
                sk.fps_[i] = fp;
                if (sk.lengths_[i] > sk.stream_len_ && sk.prefix_fp_ == 0) sk.prefix_fp_ = fp;
            }
        }
        if (in.remaining() != 0) throw Error(ErrorKind::format, "trailing bytes");
        return sk;
    }

    friend bool operator==(const DeltaSketch& a, const DeltaSketch& b) {
        if (a.params_ != b.params_ || a.stream_len_ != b.stream_len_ || a.cds_ != b.cds_ ||
            a.resumable() != b.resumable() || a.extendable_ != b.extendable_ || a.unary_ != b.unary_ ||
            a.unary_byte_ != b.unary_byte_) {
            return false;
        }
        if (a.resumable()) {
            for (std::size_t i = 0; i < a.lengths_.size(); ++i) {
                if (a.fingerprint(i) != b.fingerprint(i)) return false;
            }
        }
        return true;
    }

private:
    using DropTable = std::array<Residue, 256>;  // c * 256^(k-1) mod q

    DropTable drop_table(std::size_t i) const {
        DropTable drop;
        for (unsigned c = 0; c < 256; ++c) drop[c] = detail::mul_mod(c, powers_[i], params_.modulus);
        return drop;
    }

    Residue slide_step(Residue fp, Residue drop, std::uint8_t incoming) const noexcept {
        const Residue q = params_.modulus;
        const Residue head = fp >= drop ? fp - drop : fp + (q - drop);
        return q == kMersenne61 ? detail::append_mersenne61(head, incoming) : context_.append(head, incoming);
    }

    // Slides length lengths_[i] over data positions [from, to).
    void slide_range(std::span<const std::uint8_t> data, std::size_t i, std::size_t from, std::size_t to) {
        if (from >= to) return;
        const std::uint64_t k = lengths_[i];
        const DropTable drop = drop_table(i);
        Residue fp = fps_[i];
        CardinalitySketch& cd = cds_[i];
        for (std::size_t pos = from; pos < to; ++pos) {
            fp = slide_step(fp, drop[data[pos - k]], data[pos]);
            cd.add(fp);
        }
        fps_[i] = fp;
    }

    // Four consecutive lengths from data position `from` to the end.
    void slide_group(std::span<const std::uint8_t> data, std::size_t first, std::size_t from) {
        const std::uint64_t k0 = lengths_[first], k1 = lengths_[first + 1];
        const std::uint64_t k2 = lengths_[first + 2], k3 = lengths_[first + 3];
        const DropTable d0 = drop_table(first), d1 = drop_table(first + 1);
        const DropTable d2 = drop_table(first + 2), d3 = drop_table(first + 3);
        Residue f0 = fps_[first], f1 = fps_[first + 1], f2 = fps_[first + 2], f3 = fps_[first + 3];
        CardinalitySketch &c0 = cds_[first], &c1 = cds_[first + 1], &c2 = cds_[first + 2], &c3 = cds_[first + 3];
        for (std::size_t pos = from; pos < data.size(); ++pos) {
            const std::uint8_t in = data[pos];
            f0 = slide_step(f0, d0[data[pos - k0]], in);
            f1 = slide_step(f1, d1[data[pos - k1]], in);
            f2 = slide_step(f2, d2[data[pos - k2]], in);
            f3 = slide_step(f3, d3[data[pos - k3]], in);
            c0.add(f0);
            c1.add(f1);
            c2.add(f2);
            c3.add(f3);
        }
        fps_[first] = f0;
        fps_[first + 1] = f1;
        fps_[first + 2] = f2;
        fps_[first + 3] = f3;
    }

    static const SketchParams& validated(const SketchParams& p) {
        p.validate();
        return p;
    }

    void check_extendable(std::uint64_t count) const {
        if (!extendable_) throw Error(ErrorKind::non_resumable, "merged or fingerprint-less sketch cannot be extended");
        if (count > params_.n_max - stream_len_) {
            throw Error(ErrorKind::capacity_exceeded, "stream longer than n_max = " + std::to_string(params_.n_max));
        }
    }

    void note_byte(std::uint8_t byte) noexcept {
        if (unary_ == Unary::empty) {
            unary_ = Unary::unary;
            unary_byte_ = byte;
        } else if (unary_ == Unary::unary && byte != unary_byte_) {
            unary_ = Unary::mixed;
        }
    }

    void note_truncation() noexcept {
        auto above = std::upper_bound(lengths_.begin(), lengths_.end(), tracking_limit_);
        if (above != lengths_.end() && *above < stream_len_) truncated_ = true;
    }

    SketchParams params_;
    std::vector<std::uint64_t> lengths_;
    FingerprintContext context_;
    std::vector<Residue> powers_;
    std::vector<CardinalitySketch> cds_;
    std::vector<Residue> fps_;
    Residue prefix_fp_ = 0;
    std::uint64_t stream_len_ = 0;
    std::uint64_t tracking_limit_;
    bool extendable_ = true;
    bool truncated_ = false;
    Unary unary_ = Unary::empty;
    std::uint8_t unary_byte_ = 0;
};

/// In-memory construction from a byte string.
inline DeltaSketch build_sketch(const SketchParams& params, std::span<const std::uint8_t> bytes, unsigned threads = 1) {
    DeltaSketch sk(params);
    sk.extend_block(bytes, 0, threads);
    return sk;
}

}  // namespace deltasketch
