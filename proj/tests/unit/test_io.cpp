#include "escgnn/io.hpp"

#include <gtest/gtest.h>

#include <cstring>

using namespace escgnn;

namespace {

std::vector<std::uint8_t> le32(std::uint32_t v) {
  return {std::uint8_t(v), std::uint8_t(v >> 8), std::uint8_t(v >> 16), std::uint8_t(v >> 24)};
}

std::vector<std::uint8_t> le64(std::uint64_t v) {
  std::vector<std::uint8_t> out;
  for (int b = 0; b < 8; ++b) out.push_back(std::uint8_t(v >> (8 * b)));
  return out;
}

void append(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& more) {
  out.insert(out.end(), more.begin(), more.end());
}

std::uint64_t bits(double x) {
  std::uint64_t u;
  std::memcpy(&u, &x, 8);
  return u;
}

DatasetRecord vector_record() {
  VectorFieldDatasetConfig c;
  c.num_graphs = 1;
  c.n_small = 20;
  c.n_large = 80;
  c.num_eigs = 4;
  c.seed = 2;
  return make_vector_target_dataset(c).front();
}

}  // namespace

TEST(Io, ExactByteLayout) {
  io::ArrayFile f;
  f.magic = io::kRecordMagic;
  f.add_f64("x", {2}, {1.0, -0.5});
  f.add_i32("e", {1, 2}, {7, -1});
  std::vector<std::uint8_t> want{'E', 'S', 'C', 'G', 'R', 'E', 'C', '1'};
  append(want, le32(1));  // version
  append(want, le32(2));  // arrays
  append(want, le32(1));
  want.push_back('x');
  append(want, {0, 0, 0, 0});  // dtype f64 + pad
  append(want, le32(1));
  append(want, le64(2));
  append(want, le64(bits(1.0)));
  append(want, le64(bits(-0.5)));
  append(want, le32(1));
  want.push_back('e');
  append(want, {1, 0, 0, 0});  // dtype i32 + pad
  append(want, le32(2));
  append(want, le64(1));
  append(want, le64(2));
  append(want, le32(7));
  append(want, le32(0xFFFFFFFFu));
  EXPECT_EQ(io::encode(f), want);

  const io::ArrayFile back = io::decode(want, io::kRecordMagic);
  EXPECT_EQ(back.get("x").f64, (std::vector<double>{1.0, -0.5}));
  EXPECT_EQ(back.get("e").i32, (std::vector<std::int32_t>{7, -1}));
  EXPECT_EQ(back.get("e").shape, (std::vector<std::uint64_t>{1, 2}));
}

TEST(Io, RejectsMalformedFiles) {
  io::ArrayFile f;
  f.magic = io::kRecordMagic;
  f.add_f64("x", {3}, {1, 2, 3});
  const auto good = io::encode(f);
  auto expect_format_error = [](const std::vector<std::uint8_t>& bytes, const io::Magic& m) {
    try {
      io::decode(bytes, m);
      ADD_FAILURE() << "decode accepted malformed bytes";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::FormatError);
    }
  };
  expect_format_error(good, io::kCacheMagic);
  auto bad_version = good;
  bad_version[8] = 2;
  expect_format_error(bad_version, io::kRecordMagic);
  expect_format_error({good.begin(), good.end() - 1}, io::kRecordMagic);
  auto trailing = good;
  trailing.push_back(0);
  expect_format_error(trailing, io::kRecordMagic);
  EXPECT_THROW(f.get("missing"), Error);
}

TEST(Io, Fnv1a64KnownValues) {
  EXPECT_EQ(io::fnv1a64({}), 0xcbf29ce484222325ULL);
  const std::vector<std::uint8_t> a{'a'};
  EXPECT_EQ(io::fnv1a64(a), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(io::hex64(0xaf63dc4c8601ec8cULL), "af63dc4c8601ec8c");
}

TEST(Io, RecordRoundTrip) {
  DiameterDatasetConfig c;
  c.num_graphs = 2;
  c.n_points = 24;
  for (const DatasetRecord& rec : make_diameter_dataset(c)) {
    const auto bytes = io::encode_record(rec);
    const DatasetRecord back = io::decode_record(bytes);
    EXPECT_EQ(back.graph.coords, rec.graph.coords);
    EXPECT_EQ(back.graph.adjacency, rec.graph.adjacency);
    EXPECT_EQ(back.graph.epsilon, rec.graph.epsilon);
    EXPECT_EQ(back.graph.scalar_signals, rec.graph.scalar_signals);
    EXPECT_EQ(back.graph_target, rec.graph_target);
    EXPECT_EQ(back.sample_seed, rec.sample_seed);
    EXPECT_EQ(io::encode_record(back), bytes);
  }
  const DatasetRecord v = vector_record();
  const DatasetRecord back = io::decode_record(io::encode_record(v));
  ASSERT_TRUE(back.node_targets.has_value());
  EXPECT_EQ(*back.node_targets, *v.node_targets);
  EXPECT_FALSE(back.graph_target.has_value());
  EXPECT_EQ(back.graph.vector_signals, v.graph.vector_signals);
}

TEST(Io, CacheRoundTripAndKey) {
  const DatasetRecord rec = vector_record();
  FeatureConfig cfg;
  cfg.scalar_bank = dyadic_scales(2);
  cfg.vector_bank = dyadic_scales(3);
  const io::FeatureCache cache = io::compute_cache(rec.graph, cfg);
  const auto bytes = io::encode_cache(cache);
  const io::FeatureCache back = io::decode_cache(bytes);
  EXPECT_EQ(back.features.scalar, cache.features.scalar);
  EXPECT_EQ(back.features.vector, cache.features.vector);
  EXPECT_EQ(back.p.values, cache.p.values);
  ASSERT_TRUE(back.q.has_value());
  EXPECT_EQ(back.q->blocks, cache.q->blocks);
  EXPECT_EQ(io::encode_cache(back), bytes);

  const auto rb = io::encode_record(rec);
  FeatureConfig other = cfg;
  other.vector_bank = dyadic_scales(2);
  EXPECT_EQ(io::cache_key(rb, cfg), io::cache_key(rb, cfg));
  EXPECT_NE(io::cache_key(rb, cfg), io::cache_key(rb, other));
  EXPECT_NE(io::cache_key(rb, cfg), io::cache_key(io::encode_record(rotate_record(rec, default_test_rotation())), cfg));
  EXPECT_EQ(io::parse_feature_config(io::describe(cfg)).vector_bank, cfg.vector_bank);
}

TEST(Io, ModelRoundTrip) {
  ModelConfig mc;
  mc.scalar_paths = 5;
  mc.vector_paths = 5;
  mc.scalar_hidden = {4};
  mc.vector_hidden = {4};
  mc.head_hidden = {3};
  mc.output_scale = 0.7;
  mc.output_shift = 2.0;
  EscGnn m(mc);
  m.initialize(3);
  io::ModelFile f;
  f.config = mc;
  f.features.scalar_bank = dyadic_scales(1);
  f.features.vector_bank = dyadic_scales(1);
  f.fold = 3;
  f.seed = 99;
  f.best_epoch = 12;
  f.best_val_mse = 0.125;
  f.params = m.params();
  f.manifest = m.manifest();
  const auto bytes = io::encode_model(f);
  const io::ModelFile back = io::decode_model(bytes);
  EXPECT_EQ(back.params, f.params);
  EXPECT_EQ(back.fold, 3);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.best_epoch, 12);
  EXPECT_EQ(back.best_val_mse, 0.125);
  EXPECT_EQ(back.config.output_scale, 0.7);
  EXPECT_EQ(io::encode_model(back), bytes);

  f.manifest.front().rows += 1;
  EXPECT_THROW(io::decode_model(io::encode_model(f)), Error);
}
