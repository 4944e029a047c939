#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "duquant/cli.hpp"
#include "duquant/npy.hpp"
#include "duquant/report.hpp"
#include "duquant/tensor.hpp"
#include "oracles.hpp"

using duquant::Matrix;
using duquant::report::json;
namespace fs = std::filesystem;
namespace npy = duquant::npy;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = duquant::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const fs::path& p) {
  std::ifstream f(p);
  return json::parse(f);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

class CliTest : public ::testing::Test {
 protected:
  fs::path dir = oracle::scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
  std::string x, w;

  void SetUp() override {
    x = (dir / "x.npy").string();
    w = (dir / "w.npy").string();
    ASSERT_EQ(cli({"synth", "--rows", "32", "--cols", "128", "--normal-channels", "5,70", "--massive", "1", "-o", x,
                   "--seed", "2"})
                  .code,
              0);
    npy::write_matrix(w, oracle::gaussian(128, 32, 9, 0.05));
  }
  void TearDown() override { fs::remove_all(dir); }

  std::vector<std::string> small(std::vector<std::string> args) const {
    for (const char* a : {"--block-size", "64", "--steps", "16", "--seed", "1"}) args.emplace_back(a);
    return args;
  }
};

}  // namespace

TEST_F(CliTest, SynthExample) {
  const std::string o = (dir / "s.npy").string();
  ASSERT_EQ(cli({"synth", "--rows", "256", "--cols", "1024", "--massive", "1", "--massive-mag", "1400", "--seed",
                 "0", "-o", o})
                .code,
            0);
  const Matrix m = npy::read_matrix(o);
  EXPECT_EQ(m.rows(), 256u);
  EXPECT_EQ(m.cols(), 1024u);
  int hits = 0;
  for (double v : m.data()) hits += std::abs(v) == 1400.0;
  EXPECT_EQ(hits, 1);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(cli({"synth", "--rows", "4"}).code, 2);
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"bogus"}).code, 2);
  EXPECT_EQ(cli({"quantize", x, w, "-o", (dir / "q").string(), "--perm", "sideways"}).code, 2);
  EXPECT_EQ(cli({"verify", "--trials", "0"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
  // Block size must be a power of two dividing the channel count.
  const auto r = cli({"calibrate", x, w, "-o", (dir / "b").string(), "--block-size", "48", "--steps", "4"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliTest, IoErrors) {
  EXPECT_EQ(cli(small({"quantize", (dir / "missing.npy").string(), w, "-o", (dir / "q").string()})).code, 3);
  {
    std::ofstream f(dir / "junk.npy");
    f << "not an npy file";
  }
  EXPECT_EQ(cli({"profile", (dir / "junk.npy").string()}).code, 3);
  EXPECT_EQ(cli(small({"quantize", x, w, "-o", (dir / "q").string(), "--bundle", (dir / "nobundle").string()})).code,
            3);
}

TEST_F(CliTest, SeedFromEnvironment) {
  const std::string a = (dir / "a.npy").string(), b = (dir / "b.npy").string(), c = (dir / "c.npy").string();
  ASSERT_EQ(cli({"synth", "--rows", "8", "--cols", "16", "--seed", "42", "-o", a}).code, 0);
  ::setenv("DUQUANT_SEED", "42", 1);
  ASSERT_EQ(cli({"synth", "--rows", "8", "--cols", "16", "-o", b}).code, 0);
  ::setenv("DUQUANT_SEED", "43", 1);
  ASSERT_EQ(cli({"synth", "--rows", "8", "--cols", "16", "-o", c}).code, 0);
  ::setenv("DUQUANT_SEED", "x1", 1);
  EXPECT_EQ(cli({"synth", "--rows", "8", "--cols", "16", "-o", c}).code, 2);
  ::unsetenv("DUQUANT_SEED");
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_NE(slurp(a), slurp(c));
}

TEST_F(CliTest, ProfileReport) {
  const auto r = cli({"profile", x, x});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["profile"]["num_samples"], 2);
  ASSERT_EQ(j["classification"].size(), 2u);
  EXPECT_EQ(j["classification"][0]["normal_channels"].dump(), "[5,70]");
  EXPECT_EQ(j["classification"][0]["massive_positions"].size(), 1u);
}

TEST_F(CliTest, QuantizeWritesArtifacts) {
  const fs::path q = dir / "q";
  const auto r = cli(small({"quantize", x, w, "-o", q.string(), "--report", (dir / "r.json").string()}));
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"manifest.json", "report.json", "weight_codes.npy", "weight_deltas.npy", "weight_zeros.npy",
                        "weight_offsets.npy", "r1.npy", "perm.npy"})
    EXPECT_TRUE(fs::exists(q / f)) << f;
  const auto rep = read_json(q / "report.json");
  EXPECT_TRUE(rep["metrics"].contains("quant_relative_error"));
  EXPECT_EQ(rep, read_json(dir / "r.json"));

  const std::string codes = slurp(q / "weight_codes.npy");
  ASSERT_EQ(codes.size(), 128u + 128u * 32u);
  EXPECT_NE(codes.find("'descr': '|u1'"), std::string::npos);
  EXPECT_NE(codes.find("(128, 32)"), std::string::npos);
  for (std::size_t i = 128; i < codes.size(); ++i) EXPECT_LE(static_cast<unsigned char>(codes[i]), 15u);
}

TEST_F(CliTest, QuantizeIsDeterministicAndReusesBundle) {
  ASSERT_EQ(cli(small({"quantize", x, w, "-o", (dir / "a").string()})).code, 0);
  ASSERT_EQ(cli(small({"quantize", x, w, "-o", (dir / "b").string()})).code, 0);
  EXPECT_EQ(slurp(dir / "a" / "report.json"), slurp(dir / "b" / "report.json"));
  EXPECT_EQ(slurp(dir / "a" / "weight_codes.npy"), slurp(dir / "b" / "weight_codes.npy"));

  ASSERT_EQ(cli(small({"calibrate", x, w, "-o", (dir / "bundle").string()})).code, 0);
  ASSERT_EQ(cli({"quantize", x, w, "-o", (dir / "c").string(), "--bundle", (dir / "bundle").string()}).code, 0);
  EXPECT_EQ(slurp(dir / "a" / "weight_codes.npy"), slurp(dir / "c" / "weight_codes.npy"));
  EXPECT_EQ(read_json(dir / "a" / "report.json")["metrics"], read_json(dir / "c" / "report.json")["metrics"]);
}

TEST_F(CliTest, ZigzagLowersBlockVariance) {
  ASSERT_EQ(cli(small({"quantize", x, w, "-o", (dir / "z").string()})).code, 0);
  ASSERT_EQ(cli(small({"quantize", x, w, "-o", (dir / "n").string(), "--perm", "none"})).code, 0);
  const double z = read_json(dir / "z" / "report.json")["metrics"]["block_variance_after"];
  const double n = read_json(dir / "n" / "report.json")["metrics"]["block_variance_after"];
  EXPECT_LT(z, n);
}

TEST_F(CliTest, MoreBitsLowerError) {
  ASSERT_EQ(cli(small({"quantize", x, w, "-o", (dir / "4").string()})).code, 0);
  ASSERT_EQ(cli(small({"quantize", x, w, "-o", (dir / "6").string(), "--bits-w", "6", "--bits-a", "6"})).code, 0);
  const double e4 = read_json(dir / "4" / "report.json")["metrics"]["quant_relative_error"];
  const double e6 = read_json(dir / "6" / "report.json")["metrics"]["quant_relative_error"];
  EXPECT_LT(e6, e4);
}

TEST_F(CliTest, SweepKeysAndDeterminism) {
  const auto a = cli(small({"sweep", x, w}));
  ASSERT_EQ(a.code, 0) << a.err;
  const auto j = json::parse(a.out);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"R1", "R1+P+R2", "S", "S+R1", "full"}));
  const double full = j["full"]["metrics"]["quant_relative_error"];
  for (const auto& [k, v] : j.items()) EXPECT_LE(full, v["metrics"]["quant_relative_error"].get<double>()) << k;
  EXPECT_EQ(cli(small({"sweep", x, w})).out, a.out);
}

TEST(CliVerify, PassesAndIsReproducible) {
  const auto a = cli({"verify", "--trials", "1000", "--seed", "3"});
  EXPECT_EQ(a.code, 0) << a.out;
  EXPECT_NE(a.out.find("all checks passed"), std::string::npos);
  EXPECT_EQ(cli({"verify", "--trials", "1000", "--seed", "3"}).out, a.out);
}
