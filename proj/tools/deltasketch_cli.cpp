#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "deltasketch/deltasketch.hpp"

namespace fs = std::filesystem;
using namespace deltasketch;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kIo = 2, kMismatch = 3, kCapacity = 4 };

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Config {
    double epsilon = 0.2;
    int preset = 0;
    int precision = 14;
    unsigned threads = 1;
    std::uint64_t n_max = 0;
    bool rlbwt = false;
    std::uint64_t window = 0;
    std::string seed = "default";
    bool force = false;
    bool raw_inputs = false;
    std::string output;
    std::string tsv;
    std::string from_sketch;
    std::vector<std::string> inputs;
};

constexpr double kPresetEpsilon[] = {1.0, 0.5, 0.25, 0.1, 0.05};

void add_sketch_options(CLI::App* cmd, Config& cfg) {
    cmd->add_option("-e,--epsilon", cfg.epsilon, "relative error in (0, 1]")->check(CLI::Range(1e-9, 1.0));
    cmd->add_option("-p,--preset", cfg.preset, "sampling density 1 (sparse) .. 5 (dense)")->check(CLI::Range(1, 5));
    cmd->add_option("--precision", cfg.precision, "log2 of registers per length")->check(CLI::Range(4, 20));
    cmd->add_option("-t,--threads", cfg.threads, "worker threads, 0 = all cores");
    cmd->add_option("--n-max", cfg.n_max, "upper bound on the input length (required for stdin)");
    cmd->add_option("--seed", cfg.seed, "64-bit seed or 'random'");
}

std::uint64_t parse_seed(const std::string& text) {
    if (text == "default") return kDefaultSeed;
    if (text == "random") {
        std::random_device rd;
        return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    try {
        std::size_t used = 0;
        const auto v = std::stoull(text, &used, 0);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::invalid_parameter, "invalid seed '" + text + "'");
}

double effective_epsilon(const Config& cfg, const CLI::App* cmd) {
    if (cmd->count("--epsilon") == 0 && cfg.preset > 0) return kPresetEpsilon[cfg.preset - 1];
    return cfg.epsilon;
}

SketchParams make_params(const Config& cfg, const CLI::App* cmd, std::uint64_t n_max, bool for_ncd) {
    double eps = effective_epsilon(cfg, cmd);
    if (for_ncd) eps = sketch_error_for_ncd(eps);
    auto p = SketchParams::for_error(eps, std::max<std::uint64_t>(n_max, 2));
    p.precision = cfg.precision;
    p.seed = parse_seed(cfg.seed);
    p.validate();
    return p;
}

// Declared bound: --n-max if given, else the size of a regular file.
std::uint64_t input_bound(const std::string& path, const Config& cfg) {
    if (cfg.n_max > 0) return cfg.n_max;
    if (path == "-") throw Error(ErrorKind::invalid_parameter, "reading standard input requires --n-max");
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    if (ec) throw IoError("cannot stat " + path + ": " + ec.message());
    return size;
}

template <class Sink>
void read_chunks(const std::string& path, Sink&& sink) {
    std::ifstream file;
    std::istream* in = &std::cin;
    if (path != "-") {
        file.open(path, std::ios::binary);
        if (!file) throw IoError("cannot open " + path);
        in = &file;
    }
    std::vector<std::uint8_t> buf(std::size_t{1} << 20);
    while (*in) {
        in->read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        const auto got = static_cast<std::size_t>(in->gcount());
        if (got > 0) sink(std::span<const std::uint8_t>(buf.data(), got));
    }
    if (in->bad()) throw IoError("read error on " + path);
}

std::vector<std::uint8_t> read_all(const std::string& path) {
    std::vector<std::uint8_t> out;
    read_chunks(path, [&](std::span<const std::uint8_t> chunk) { out.insert(out.end(), chunk.begin(), chunk.end()); });
    return out;
}

void write_file(const std::string& path, std::span<const std::uint8_t> data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write error on " + path);
}

void write_text(const std::string& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

StreamEstimator::Result stream_input(const std::string& path, const SketchParams& params, const Config& cfg) {
    StreamOptions opts;
    opts.rlbwt = cfg.rlbwt;
    opts.threads = detail::resolve_threads(cfg.threads);
    if (cfg.window > 0) opts.window = cfg.window;
    StreamEstimator est(params, opts);
    read_chunks(path, [&](std::span<const std::uint8_t> chunk) { est.push(chunk); });
    return std::move(est).finalize();
}

DeltaSketch load_sketch(const std::string& path) {
    const auto blob = read_all(path);
    try {
        return DeltaSketch::deserialize(blob);
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

std::string taxon_name(const std::string& path) { return fs::path(path).stem().string(); }

// Sketches for NCD: either DSK1 files or raw sequences sketched with one shared bound.
std::vector<DeltaSketch> sketches_for(const Config& cfg, const CLI::App* cmd) {
    std::vector<DeltaSketch> out;
    if (!cfg.raw_inputs) {
        for (const auto& path : cfg.inputs) out.push_back(load_sketch(path));
        return out;
    }
    std::uint64_t bound = cfg.n_max;
    if (bound == 0) {
        for (const auto& path : cfg.inputs) bound = std::max(bound, input_bound(path, cfg));
    }
    const auto params = make_params(cfg, cmd, bound, true);
    for (const auto& path : cfg.inputs) {
        Config one = cfg;
        one.n_max = bound;
        out.push_back(stream_input(path, params, one).sketch);
    }
    return out;
}

void guard_size(const std::string& path, const Config& cfg) {
    if (cfg.force || path == "-") return;
    if (input_bound(path, Config{}) > 1000000) {
        throw Error(ErrorKind::invalid_parameter, path + " exceeds 10^6 bytes; pass --force for the quadratic oracle");
    }
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::format:
            return kIo;
        case ErrorKind::parameter_mismatch:
            return kMismatch;
        case ErrorKind::capacity_exceeded:
            return kCapacity;
        default:
            return kUsage;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sketch-based estimation of normalized substring complexity"};
    app.require_subcommand(1);
    Config cfg;

    auto* estimate = app.add_subcommand("estimate", "print the estimated delta of a file or stdin");
    add_sketch_options(estimate, cfg);
    estimate->add_option("input", cfg.inputs, "input file, '-' for stdin")->expected(0, 1);
    estimate->add_option("--from-sketch", cfg.from_sketch, "read a DSK1 sketch instead of raw input");
    estimate->add_flag("--rlbwt", cfg.rlbwt, "track lengths beyond the window with a run-length BWT");
    estimate->add_option("--window", cfg.window, "sliding window length K");

    auto* sketch = app.add_subcommand("sketch", "write the DSK1 sketch of a file or stdin");
    add_sketch_options(sketch, cfg);
    sketch->add_option("input", cfg.inputs, "input file, '-' for stdin")->required()->expected(1);
    sketch->add_option("-o,--output", cfg.output, "output path")->required();
    sketch->add_flag("--rlbwt", cfg.rlbwt, "track lengths beyond the window with a run-length BWT");
    sketch->add_option("--window", cfg.window, "sliding window length K");
    bool ncd_mode = false;
    sketch->add_flag("--ncd", ncd_mode, "build for NCD: the sketch error is epsilon/5");

    auto* merge_cmd = app.add_subcommand("merge", "merge DSK1 sketches");
    merge_cmd->add_option("inputs", cfg.inputs, "sketch files")->required()->expected(2, -1);
    merge_cmd->add_option("-o,--output", cfg.output, "output path")->required();

    auto* ncd = app.add_subcommand("ncd", "NCD between two sketches (or raw files with --raw)");
    add_sketch_options(ncd, cfg);
    ncd->add_option("inputs", cfg.inputs, "two files")->required()->expected(2);
    ncd->add_flag("--raw", cfg.raw_inputs, "inputs are sequences; sketch them with error epsilon/5");

    auto* matrix = app.add_subcommand("matrix", "all-pairs NCD as a PHYLIP distance matrix");
    add_sketch_options(matrix, cfg);
    matrix->add_option("inputs", cfg.inputs, "files")->required()->expected(2, -1);
    matrix->add_flag("--raw", cfg.raw_inputs, "inputs are sequences; sketch them with error epsilon/5");
    matrix->add_option("-o,--output", cfg.output, "PHYLIP output path (default stdout)");
    matrix->add_option("--tsv", cfg.tsv, "also write name/name/raw/clamped rows");

    auto* exact = app.add_subcommand("exact", "exact delta and k_hat (quadratic)");
    exact->add_option("input", cfg.inputs, "input file, '-' for stdin")->required()->expected(1);
    exact->add_flag("--force", cfg.force, "allow inputs above 10^6 bytes");

    auto* dk = app.add_subcommand("dk", "exact d_k table (quadratic)");
    dk->add_option("input", cfg.inputs, "input file, '-' for stdin")->required()->expected(1);
    dk->add_flag("--force", cfg.force, "allow inputs above 10^6 bytes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (estimate->parsed()) {
            if (!cfg.from_sketch.empty()) {
                std::printf("%.6f\n", load_sketch(cfg.from_sketch).estimate());
                return kOk;
            }
            const std::string path = cfg.inputs.empty() ? "-" : cfg.inputs.front();
            const auto params = make_params(cfg, estimate, input_bound(path, cfg), false);
            std::printf("%.6f\n", stream_input(path, params, cfg).estimate);
        } else if (sketch->parsed()) {
            const std::string& path = cfg.inputs.front();
            const auto params = make_params(cfg, sketch, input_bound(path, cfg), ncd_mode);
            const auto result = stream_input(path, params, cfg);
            const auto blob = result.sketch.serialize();
            write_file(cfg.output, blob);
            std::printf("bytes %llu lengths %zu written %zu\n",
                        static_cast<unsigned long long>(result.sketch.stream_length()), result.sketch.length_count(),
                        blob.size());
        } else if (merge_cmd->parsed()) {
            DeltaSketch acc = load_sketch(cfg.inputs.front());
            for (std::size_t i = 1; i < cfg.inputs.size(); ++i) acc = merge(acc, load_sketch(cfg.inputs[i]));
            write_file(cfg.output, acc.serialize());
            std::printf("%.6f\n", acc.estimate());
        } else if (ncd->parsed()) {
            const auto sketches = sketches_for(cfg, ncd);
            const auto v = ncd_from_sketches(sketches[0], sketches[1]);
            std::printf("%.6f %.6f\n", v.clamped, v.raw);
        } else if (matrix->parsed()) {
            const auto sketches = sketches_for(cfg, matrix);
            std::vector<std::string> names;
            for (const auto& path : cfg.inputs) names.push_back(taxon_name(path));
            const auto m = ncd_matrix(sketches, names, detail::resolve_threads(cfg.threads));
            const auto text = write_phylip(m);
            if (cfg.output.empty()) {
                std::fwrite(text.data(), 1, text.size(), stdout);
            } else {
                write_text(cfg.output, text);
            }
            if (!cfg.tsv.empty()) write_text(cfg.tsv, write_tsv(m));
        } else if (exact->parsed() || dk->parsed()) {
            const std::string& path = cfg.inputs.front();
            guard_size(path, cfg);
            const auto data = read_all(path);
            if (data.empty()) throw Error(ErrorKind::invalid_parameter, "empty input");
            const auto prof = oracle::exact_profile(data);
            if (exact->parsed()) {
                std::printf("delta = %s = %.6f, k_hat = %llu\n", prof.delta.to_string().c_str(), prof.delta.value(),
                            static_cast<unsigned long long>(prof.k_hat));
            } else {
                std::string line;
                for (std::uint64_t k = 1; k < prof.d.size(); ++k) {
                    if (k > 1) line += ' ';
                    line += std::to_string(k) + ":" + std::to_string(prof.d[k]);
                }
                std::printf("%s\n", line.c_str());
            }
        }
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kIo;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kIo;
    }
    return kOk;
}
