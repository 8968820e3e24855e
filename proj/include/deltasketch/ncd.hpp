#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "detail/parallel.hpp"
#include "error.hpp"
#include "sketch.hpp"

namespace deltasketch {

struct NcdValue {
    double raw = 0.0;
    double clamped = 0.0;
};

/// (d(S,T) - min(d(S), d(T))) / max(d(S), d(T)), raw and clamped to [0, 1].
inline NcdValue ncd_from_estimates(double ds, double dt, double dst) {
    const double hi = std::max(ds, dt);
    if (!(hi > 0.0)) throw Error(ErrorKind::zero_denominator, "both complexity estimates are zero");
    const double raw = (dst - std::min(ds, dt)) / hi;
    return NcdValue{raw, std::clamp(raw, 0.0, 1.0)};
}

/// NCD from the two sketches and their merge; the inputs are left untouched.
inline NcdValue ncd_from_sketches(const DeltaSketch& a, const DeltaSketch& b) {
    const DeltaSketch both = merge(a, b);
    return ncd_from_estimates(a.estimate(), b.estimate(), both.estimate());
}

/// For an additive NCD error eps, each complexity estimate must be within a
/// factor (1 +- eps/5).
inline double sketch_error_for_ncd(double ncd_epsilon) noexcept { return ncd_epsilon / 5.0; }

struct DistanceMatrix {
    std::vector<std::string> names;
    std::vector<double> values;  // clamped, row-major
    std::vector<double> raw;     // unclamped, row-major

    std::size_t size() const noexcept { return names.size(); }
    double at(std::size_t i, std::size_t j) const { return values.at(i * size() + j); }
    double raw_at(std::size_t i, std::size_t j) const { return raw.at(i * size() + j); }
};

/// All-pairs NCD, one merge per unordered pair; the diagonal is 0.
inline DistanceMatrix ncd_matrix(std::span<const DeltaSketch> sketches, std::vector<std::string> names,
                                 unsigned threads = 1) {
    const std::size_t n = sketches.size();
    if (n < 2) throw Error(ErrorKind::invalid_parameter, "a distance matrix needs at least two sketches");
    if (names.size() != n) throw Error(ErrorKind::invalid_parameter, "one name per sketch is required");
    for (std::size_t i = 1; i < n; ++i) {
        if (auto field = sketches[0].params().first_difference(sketches[i].params()); !field.empty()) {
            throw Error(ErrorKind::parameter_mismatch,
                        "sketch parameter '" + field + "' of " + names[i] + " differs from " + names[0]);
        }
    }
    std::vector<double> single(n);
    detail::parallel_for(n, threads, [&](std::size_t i) { single[i] = sketches[i].estimate(); });

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    DistanceMatrix m;
    m.names = std::move(names);
    m.values.assign(n * n, 0.0);
    m.raw.assign(n * n, 0.0);
    detail::parallel_for(pairs.size(), threads, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        const double joint = merge(sketches[i], sketches[j]).estimate();
        const NcdValue v = ncd_from_estimates(single[i], single[j], joint);
        m.values[i * n + j] = m.values[j * n + i] = v.clamped;
        m.raw[i * n + j] = m.raw[j * n + i] = v.raw;
    });
    return m;
}

/// Square PHYLIP distance matrix: the count, then one row per taxon with the
/// name padded or truncated to 10 characters and six-decimal distances.
inline std::string write_phylip(const DistanceMatrix& m) {
    std::string out = std::to_string(m.size()) + "\n";
    char buf[32];
    for (std::size_t i = 0; i < m.size(); ++i) {
        std::string name = m.names[i].substr(0, 10);
        name.resize(10, ' ');
        out += name;
        for (std::size_t j = 0; j < m.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.6f", m.at(i, j));
            if (j > 0) out += ' ';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

/// One line per unordered pair: name, name, raw, clamped.
inline std::string write_tsv(const DistanceMatrix& m) {
    std::string out = "name_a\tname_b\traw\tclamped\n";
    char buf[64];
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = i + 1; j < m.size(); ++j) {
            std::snprintf(buf, sizeof buf, "\t%.6f\t%.6f\n", m.raw_at(i, j), m.at(i, j));
            out += m.names[i] + "\t" + m.names[j] + buf;
        }
    }
    return out;
}

}  // namespace deltasketch
