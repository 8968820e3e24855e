#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "deltasketch/deltasketch.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace deltasketch;
using deltasketch::testing::ByteString;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(DELTASKETCH_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    std::array<char, 4096> buf{};
    std::size_t got = 0;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("deltasketch_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string file(const std::string& name, const ByteString& content) {
        const auto path = (dir_ / name).string();
        std::ofstream out(path, std::ios::binary);
        out.write(reinterpret_cast<const char*>(content.data()), static_cast<std::streamsize>(content.size()));
        return path;
    }
    std::string file(const std::string& name, std::string_view content) {
        return file(name, deltasketch::testing::bytes(content));
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, ExactAndDk) {
    EXPECT_EQ(run("exact " + file("b.txt", "banana")).out, "delta = 3/1 = 3.000000, k_hat = 1\n");
    EXPECT_EQ(run("dk " + file("ab.txt", "abab")).out, "1:2 2:2 3:2 4:1\n");
    EXPECT_EQ(run("exact " + file("u.txt", "zzzzzzz")).out, "delta = 1/1 = 1.000000, k_hat = 1\n");
    const auto big = file("big.txt", ByteString(1000001, 'a'));
    EXPECT_EQ(run("exact " + big).code, 1);
    EXPECT_EQ(run("exact --force " + big).out, "delta = 1/1 = 1.000000, k_hat = 1\n");
}

TEST_F(CliTest, Estimate) {
    const auto r = run("estimate -e 0.1 " + file("b.txt", "banana"));
    ASSERT_EQ(r.code, 0);
    const double v = std::stod(r.out);
    EXPECT_GE(v, 2.7);
    EXPECT_LE(v, 3.3);
    EXPECT_EQ(run("estimate " + file("a.txt", ByteString(1000000, 'a'))).out, "1.000000\n");
    EXPECT_EQ(run("estimate --rlbwt " + path("a.txt")).out, "1.000000\n");
}

TEST_F(CliTest, StdinNeedsBound) {
    const auto b = file("b.txt", "banana");
    EXPECT_EQ(run("estimate < " + b).code, 1);
    EXPECT_EQ(run("estimate - < " + b).code, 1);
    EXPECT_EQ(run("estimate --n-max 6 - < " + b).out, run("estimate " + b).out);
    EXPECT_EQ(run("estimate --n-max 5 - < " + b).code, 4);
}

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    const auto b = file("b.txt", "banana");
    EXPECT_EQ(run("estimate -e 0 " + b).code, 1);
    EXPECT_EQ(run("estimate -e 1.5 " + b).code, 1);
    EXPECT_EQ(run("estimate --precision 3 " + b).code, 1);
    EXPECT_EQ(run("estimate --seed banana " + b).code, 1);
    EXPECT_EQ(run("estimate " + path("missing.txt")).code, 2);
    EXPECT_EQ(run("estimate --from-sketch " + b).code, 2);
}

TEST_F(CliTest, SketchRoundTripAndDeterminism) {
    std::mt19937_64 rng(3);
    const auto s = file("s.txt", deltasketch::testing::random_string(20000, 4, rng));
    const auto direct = run("estimate " + s);
    ASSERT_EQ(direct.code, 0);
    ASSERT_EQ(run("sketch " + s + " -o " + path("s.dsk")).code, 0);
    EXPECT_EQ(run("estimate --from-sketch " + path("s.dsk")).out, direct.out);
    ASSERT_EQ(run("sketch -t 3 " + s + " -o " + path("s3.dsk")).code, 0);
    std::ifstream a(path("s.dsk"), std::ios::binary), b(path("s3.dsk"), std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(run("estimate -t 4 " + s).out, direct.out);

    const auto empty = file("e.txt", "");
    ASSERT_EQ(run("sketch " + empty + " -o " + path("e.dsk")).code, 0);
    EXPECT_EQ(run("estimate --from-sketch " + path("e.dsk")).out, "0.000000\n");
}

TEST_F(CliTest, PresetsAndSeeds) {
    std::mt19937_64 rng(5);
    const auto s = file("s.txt", deltasketch::testing::random_string(5000, 3, rng));
    EXPECT_EQ(run("estimate -p 3 " + s).out, run("estimate -e 0.25 " + s).out);
    EXPECT_EQ(run("estimate -p 1 -e 0.25 " + s).out, run("estimate -e 0.25 " + s).out);
    EXPECT_EQ(run("estimate --seed 42 " + s).out, run("estimate --seed 42 " + s).out);
    EXPECT_EQ(run("estimate --seed random " + s).code, 0);
}

TEST_F(CliTest, MergeNcdAndMismatch) {
    std::mt19937_64 rng(7);
    const auto s1 = deltasketch::testing::random_string(3000, 4, rng);
    const auto s2 = deltasketch::testing::random_string(3000, 4, rng);
    const auto f1 = file("one.txt", s1), f2 = file("two.txt", s2);
    ASSERT_EQ(run("sketch --ncd --n-max 3000 " + f1 + " -o " + path("one.dsk")).code, 0);
    ASSERT_EQ(run("sketch --ncd --n-max 3000 " + f2 + " -o " + path("two.dsk")).code, 0);
    EXPECT_EQ(run("ncd " + path("one.dsk") + " " + path("one.dsk")).out, "0.000000 0.000000\n");

    // In-process recomputation with the same parameters.
    auto p = SketchParams::for_error(sketch_error_for_ncd(0.2), 3000);
    const auto v = ncd_from_sketches(build_sketch(p, s1), build_sketch(p, s2));
    char expected[64];
    std::snprintf(expected, sizeof expected, "%.6f %.6f\n", v.clamped, v.raw);
    EXPECT_EQ(run("ncd " + path("one.dsk") + " " + path("two.dsk")).out, expected);
    EXPECT_EQ(run("ncd --raw " + f1 + " " + f2).out, expected);

    ASSERT_EQ(run("sketch --n-max 3000 " + f1 + " -o " + path("plain.dsk")).code, 0);
    const auto self = run("merge " + path("plain.dsk") + " " + path("plain.dsk") + " -o " + path("m.dsk"));
    EXPECT_EQ(self.out, run("estimate --from-sketch " + path("plain.dsk")).out);
    EXPECT_EQ(run("estimate --from-sketch " + path("m.dsk")).out, self.out);

    ASSERT_EQ(run("sketch --seed 9 --n-max 3000 " + f1 + " -o " + path("seeded.dsk")).code, 0);
    EXPECT_EQ(run("ncd " + path("one.dsk") + " " + path("seeded.dsk")).code, 3);
    EXPECT_EQ(run("merge " + path("plain.dsk") + " " + path("seeded.dsk") + " -o " + path("x.dsk")).code, 3);
}

TEST_F(CliTest, Matrix) {
    std::mt19937_64 rng(11);
    std::string files;
    for (int i = 0; i < 5; ++i) {
        files += " " + file("taxon_number_" + std::to_string(i) + ".fa", deltasketch::testing::random_string(1500, 2 + i, rng));
    }
    const auto r = run("matrix --raw -e 0.5" + files + " -o " + path("m.phy") + " --tsv " + path("m.tsv"));
    ASSERT_EQ(r.code, 0);
    std::ifstream in(path("m.phy"));
    std::size_t count = 0;
    in >> count;
    ASSERT_EQ(count, 5u);
    std::vector<std::vector<double>> d(5, std::vector<double>(5));
    std::string line;
    std::getline(in, line);
    for (std::size_t i = 0; i < 5; ++i) {
        std::getline(in, line);
        ASSERT_GE(line.size(), 10u);
        EXPECT_EQ(line.substr(0, 10), "taxon_numb");
        std::istringstream row(line.substr(10));
        for (auto& x : d[i]) row >> x;
    }
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(d[i][i], 0.0);
        for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(d[i][j], d[j][i]);
    }
    std::ifstream tsv(path("m.tsv"));
    std::size_t lines = 0;
    while (std::getline(tsv, line)) ++lines;
    EXPECT_EQ(lines, 1u + 10u);
    EXPECT_EQ(run("matrix --raw -e 0.5" + files).out.substr(0, 2), "5\n");
    EXPECT_EQ(run("matrix --raw -e 0.5 -t 4" + files).out, run("matrix --raw -e 0.5 -t 1" + files).out);
}
