#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "proxyhash/binary_codes.hpp"
#include "proxyhash/binary_io.hpp"
#include "proxyhash/config.hpp"
#include "proxyhash/dataset.hpp"
#include "proxyhash/hashing_layer.hpp"
#include "proxyhash/proxy_design.hpp"
#include "proxyhash/proxy_set.hpp"

using namespace proxyhash;
namespace fs = std::filesystem;

namespace {

// Hand-built little-endian byte strings, independent of ByteWriter.
struct Bytes {
  std::vector<std::uint8_t> v;
  void tag(const char* s) { v.insert(v.end(), s, s + 4); }
  template <class T>
  void le(T x) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &x, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    v.insert(v.end(), raw, raw + sizeof(T));
  }
};

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("proxyhash_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path path(const std::string& name) const { return dir_ / name; }
  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  fs::path dir_;
};

std::size_t format_error_offset(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "expected FormatError";
  return 0;
}

TEST(ProxyFile, ByteLayout) {
  MatrixXd w(2, 3);
  w << 1, -1, 1,
       1, 1, -1;
  const ProxySet p(w, ProxyKind::hclm);
  Bytes b;
  b.tag("PHPX");
  b.le<std::uint32_t>(1);
  b.le<std::uint32_t>(3);
  b.le<std::uint32_t>(2);
  b.le<std::uint8_t>(2);
  b.le<double>(2.0);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 2; ++r) b.le<double>(w(r, c));
  EXPECT_EQ(serialize(p), b.v);
  ByteReader reader(b.v);
  EXPECT_TRUE(deserialize_proxies(reader) == p);
}

TEST(ProxyFile, CorruptionOffsets) {
  const auto good = serialize(random_proxies(3, 4, 0));
  auto bad_magic = good;
  bad_magic[1] = 'X';
  EXPECT_EQ(format_error_offset([&] { ByteReader r(bad_magic); deserialize_proxies(r); }), 0u);
  auto bad_version = good;
  bad_version[4] = 9;
  EXPECT_EQ(format_error_offset([&] { ByteReader r(bad_version); deserialize_proxies(r); }), 4u);
  auto bad_kind = good;
  bad_kind[16] = 42;
  EXPECT_EQ(format_error_offset([&] { ByteReader r(bad_kind); deserialize_proxies(r); }), 16u);
  auto truncated = good;
  truncated.resize(good.size() - 3);
  EXPECT_EQ(format_error_offset([&] { ByteReader r(truncated); deserialize_proxies(r); }), 25u);
}

TEST(LayerFile, ByteLayoutEmbedsProxies) {
  const ProxySet p = random_binary_proxies(2, 3, 1);
  MatrixXd l(2, 3);
  l << 0.5, -1.25, 2,
       3, 4, -0.125;
  VectorXd bias(3);
  bias << 0.1, 0.2, 0.3;
  const HashingLayer layer(l, bias, p);
  Bytes b;
  b.tag("PHLY");
  b.le<std::uint32_t>(1);
  b.le<std::uint32_t>(2);
  b.le<std::uint32_t>(3);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) b.le<double>(l(r, c));
  for (int j = 0; j < 3; ++j) b.le<double>(bias(j));
  const auto proxy_bytes = serialize(p);
  b.v.insert(b.v.end(), proxy_bytes.begin(), proxy_bytes.end());
  EXPECT_EQ(serialize(layer), b.v);
  const HashingLayer back = deserialize_layer(b.v);
  EXPECT_EQ(back.projection(), l);
  EXPECT_EQ(back.bias(), bias);
  EXPECT_TRUE(back.proxies() == p);
  auto trailing = b.v;
  trailing.push_back(0);
  EXPECT_EQ(format_error_offset([&] { deserialize_layer(trailing); }), b.v.size());
}

TEST(CodeFile, ByteLayoutAndPadding) {
  BinaryCodes codes(2, 70);
  codes.set_bit(0, 0, true);
  codes.set_bit(0, 69, true);
  codes.set_bit(1, 64, true);
  Bytes b;
  b.tag("PHSH");
  b.le<std::uint32_t>(1);
  b.le<std::uint64_t>(2);
  b.le<std::uint32_t>(70);
  b.le<std::uint64_t>(1);
  b.le<std::uint64_t>(std::uint64_t{1} << 5);
  b.le<std::uint64_t>(0);
  b.le<std::uint64_t>(1);
  EXPECT_EQ(serialize(codes), b.v);
  EXPECT_EQ(deserialize_codes(b.v), codes);
  auto dirty_padding = b.v;
  dirty_padding[20 + 15] = 0x80;
  EXPECT_THROW(deserialize_codes(dirty_padding), FormatError);
  auto short_payload = b.v;
  short_payload.resize(b.v.size() - 8);
  EXPECT_EQ(format_error_offset([&] { deserialize_codes(short_payload); }), 20u);
}

TEST(FeatureFile, ByteLayout) {
  FeatureMatrix f(2, 3);
  f.values = {1.5f, -2.0f, 0.25f, 3.0f, 4.0f, -0.5f};
  Bytes b;
  b.tag("PFTR");
  b.le<std::uint32_t>(1);
  b.le<std::uint64_t>(2);
  b.le<std::uint32_t>(3);
  for (float x : f.values) b.le<float>(x);
  EXPECT_EQ(serialize(f), b.v);
  EXPECT_EQ(deserialize_features(b.v), f);
  auto truncated = b.v;
  truncated.pop_back();
  EXPECT_EQ(format_error_offset([&] { deserialize_features(truncated); }), 20u);
  EXPECT_EQ(f.to_columns()(2, 1), -0.5);
}

TEST_F(TempDir, FeaturesBinaryAndCsvAgree) {
  FeatureMatrix f(3, 2);
  f.values = {1.0f, 2.5f, -3.0f, 0.125f, 7.0f, -0.0f};
  save_features(f, path("f.pf"));
  save_features_csv(f, path("f.csv"));
  EXPECT_EQ(load_features(path("f.pf")), f);
  EXPECT_EQ(load_features_csv(path("f.csv")), f);
  write("bad.csv", "1,2\n3\n");
  try {
    load_features_csv(path("bad.csv"));
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST_F(TempDir, LabelsAreOneBasedText) {
  const std::vector<int> labels{0, 2, 1};
  save_labels(labels, path("y.lbl"));
  std::ifstream in(path("y.lbl"));
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(text, "1\n3\n2\n");
  EXPECT_EQ(load_labels(path("y.lbl")), labels);
  write("zero.lbl", "1\n0\n");
  EXPECT_THROW(load_labels(path("zero.lbl")), std::runtime_error);
}

TEST_F(TempDir, TagsRoundTripAndValidate) {
  TagMatrix t(2, 3);
  t(0, 0) = t(0, 2) = t(1, 1) = 1;
  save_tags(t, path("t.tags"));
  EXPECT_EQ(load_tags(path("t.tags")), t);
  write("ragged.tags", "1 0 1\n1 0\n");
  EXPECT_THROW(load_tags(path("ragged.tags")), std::runtime_error);
  write("empty_row.tags", "1 0\n0 0\n");
  EXPECT_THROW(load_tags(path("empty_row.tags")), std::runtime_error);
}

TEST_F(TempDir, IngestChecksConsistency) {
  FeatureMatrix f(2, 2);
  save_features(f, path("f.pf"));
  save_labels(std::vector<int>{0, 1}, path("y.lbl"));
  save_labels(std::vector<int>{0}, path("short.lbl"));
  const auto ds = ingest(path("f.pf"), path("y.lbl"), std::nullopt);
  EXPECT_EQ(ds.num_classes(), 2);
  EXPECT_THROW(ingest(path("f.pf"), path("short.lbl"), std::nullopt), std::invalid_argument);
  EXPECT_THROW(ingest(path("f.pf"), path("y.lbl"), std::nullopt, IngestOptions{1}), std::runtime_error);
  EXPECT_THROW(ingest(path("f.pf"), std::nullopt, std::nullopt), std::invalid_argument);
}

TEST_F(TempDir, AtomicWriteLeavesNoPartialFile) {
  EXPECT_THROW(write_text_atomic(path("missing/dir/file.txt"), "x"), std::exception);
  EXPECT_FALSE(fs::exists(path("missing")));
  write_text_atomic(path("ok.txt"), "hello");
  EXPECT_EQ(fs::file_size(path("ok.txt")), 5u);
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_)) ++entries;
  EXPECT_EQ(entries, 1u);
}

TEST(Config, ParsesCommentsAndRejectsUnknownKeys) {
  const auto v = parse_config_text("# comment\nbits = 32\n\nlambda=0.5  # trailing\nkinds=hclm,shclm\n");
  ExperimentConfig cfg;
  apply_config(v, cfg);
  EXPECT_EQ(cfg.bits, 32);
  EXPECT_DOUBLE_EQ(cfg.train.lambda, 0.5);
  EXPECT_EQ(cfg.kinds, (std::vector<ProxyKind>{ProxyKind::hclm, ProxyKind::shclm}));
  EXPECT_THROW(apply_config(parse_config_text("bitz=3\n"), cfg), std::invalid_argument);
  EXPECT_THROW(apply_config(parse_config_text("bits=three\n"), cfg), std::invalid_argument);
  try {
    parse_config_text("bits=3\nno equals sign\n");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Config, SeedPropagatesAndDescribeRoundTrips) {
  ExperimentConfig cfg;
  apply_config(parse_config_text("seed=17\nnoise=1.25\nmulti_label=true\nprecision_ks=1,5\n"), cfg);
  EXPECT_EQ(cfg.seed, 17u);
  EXPECT_EQ(cfg.train.seed, 17u);
  EXPECT_EQ(cfg.synth.seed, 17u);
  EXPECT_TRUE(cfg.synth.multi_label);
  ExperimentConfig copy;
  apply_config(describe(cfg), copy);
  EXPECT_EQ(describe(copy), describe(cfg));
  EXPECT_DOUBLE_EQ(copy.synth.noise, 1.25);
  EXPECT_EQ(copy.precision_ks, (std::vector<std::size_t>{1, 5}));
}

}  // namespace
