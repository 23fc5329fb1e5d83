#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <random>

#include "oracles.hpp"
#include "qtmtt/dataset.hpp"
#include "qtmtt/error.hpp"

namespace qtmtt::data {
namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::kInvalidArgument;
}

BlockSample random_sample(std::mt19937_64& rng, std::uint32_t image) {
  BlockSample s;
  for (auto& p : s.pixels) p = static_cast<std::uint8_t>(rng());
  s.qp = 22 + 5 * static_cast<int>(rng() % 4);
  s.tree = testing::random_tree(rng, root_geometry());
  s.soft_label = tree_to_edge_vector(s.tree);
  s.source = {image, static_cast<std::uint32_t>(rng() % 9)};
  return s;
}

TEST(Patch, ContextAndUnavailable) {
  Frame f(128, 128, 0);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) f.at(x, y) = static_cast<std::uint8_t>((x + 3 * y) & 0xff);
  }
  const Patch corner = extract_patch(f, {0, 0});
  EXPECT_EQ(corner[0], kUnavailableSample);
  EXPECT_EQ(corner[3 * kPatchSize + 10], kUnavailableSample);
  EXPECT_EQ(corner[4 * kPatchSize + 4], f.at(0, 0));
  const Patch inner = extract_patch(f, {64, 64});
  EXPECT_EQ(inner[0], f.at(60, 60));
  EXPECT_EQ(inner[67 * kPatchSize + 67], f.at(127, 127));
}

TEST(Samples, OnePerTileLabelledByTree) {
  std::mt19937_64 rng(1);
  const Frame f = testing::random_frame(rng, 130, 64);
  const auto s = extract_samples(f, 37, 5);
  ASSERT_EQ(s.size(), 3u);
  for (std::uint32_t i = 0; i < 3; ++i) {
    EXPECT_EQ(s[i].source.image, 5u);
    EXPECT_EQ(s[i].source.tile, i);
    EXPECT_EQ(s[i].qp, 37);
    EXPECT_EQ(s[i].soft_label, tree_to_edge_vector(s[i].tree));
  }
}

TEST(DepthClass, Buckets) {
  EdgeVector v;
  EXPECT_EQ(depth_class(v).index, 0);
  const std::vector<std::pair<int, int>> cases = {{1, 1},  {8, 1},   {9, 2},   {16, 2},  {17, 3},
                                                  {32, 3}, {33, 4},  {64, 4},  {65, 5},  {128, 5},
                                                  {129, 6}, {256, 6}, {257, 7}, {480, 7}};
  for (auto [n, cls] : cases) {
    EdgeVector e;
    for (int i = 0; i < n; ++i) e[i] = 1.0;
    EXPECT_EQ(depth_class(e).index, cls) << n;
  }
}

TEST(BalanceSoft, CapsCellsAndKeepsOrder) {
  std::mt19937_64 rng(2);
  std::vector<BlockSample> all;
  for (std::uint32_t i = 0; i < 200; ++i) all.push_back(random_sample(rng, i));
  SoftBalanceOptions opt;
  opt.per_class_target = 5;
  opt.seed = 9;
  const auto kept = balance_soft(all, opt);
  std::map<std::pair<int, int>, int> cells;
  for (const auto& s : kept) ++cells[{depth_class(s.soft_label).index, s.qp}];
  for (const auto& [k, n] : cells) EXPECT_LE(n, 5);
  for (std::size_t i = 1; i < kept.size(); ++i) EXPECT_LT(kept[i - 1].source.image, kept[i].source.image);
  EXPECT_EQ(balance_soft(all, opt), kept);
  opt.seed = 10;
  EXPECT_EQ(balance_soft(all, opt).size(), kept.size());
  opt.per_class_target = 0;
  EXPECT_FALSE(balance_soft(all, opt).empty());
}

TEST(ExplodeHard, OneRecordPerClassifiedNode) {
  std::mt19937_64 rng(3);
  std::vector<BlockSample> all;
  for (std::uint32_t i = 0; i < 20; ++i) all.push_back(random_sample(rng, i));
  const auto hard = explode_hard(all);
  std::size_t expect = 0;
  for (const auto& s : all) {
    std::function<void(const PartitionTree&)> count = [&](const PartitionTree& n) {
      if (size_index(n.geometry().width, n.geometry().height)) ++expect;
      for (const auto& c : n.children()) count(c);
    };
    count(s.tree);
  }
  EXPECT_EQ(total_records(hard), expect);
  for (int id = 0; id < kNumCuSizes; ++id) {
    for (const auto& r : hard[static_cast<std::size_t>(id)]) {
      const auto sz = kCuSizes[static_cast<std::size_t>(id)];
      EXPECT_EQ(r.geometry.width, sz.width);
      EXPECT_EQ(r.size_id, id);
      EXPECT_EQ(static_cast<int>(r.features.size()), crop_length(sz.width, sz.height));
      EXPECT_TRUE(legal_splits(r.geometry).contains(r.label));
    }
  }
  ASSERT_EQ(hard[0].size(), all.size());
  EXPECT_EQ(hard[0][3].label, all[3].tree.split_type());
}

TEST(ExplodeHard, UsesGivenFeatures) {
  std::mt19937_64 rng(4);
  std::vector<BlockSample> all{random_sample(rng, 0)};
  std::vector<EdgeVector> feats(1);
  feats[0].values.fill(0.25);
  const auto hard = explode_hard(all, feats);
  for (const auto& r : hard[0]) {
    for (double v : r.features) EXPECT_EQ(v, 0.25);
  }
  std::vector<EdgeVector> wrong(2);
  EXPECT_THROW(explode_hard(all, wrong), Error);
}

TEST(BalanceHard, CapsLabelQpCells) {
  std::mt19937_64 rng(5);
  std::vector<BlockSample> all;
  for (std::uint32_t i = 0; i < 60; ++i) all.push_back(random_sample(rng, i));
  const auto hard = explode_hard(all);
  const auto bal = balance_hard(hard, {.per_cell_target = 3, .seed = 1});
  for (const auto& recs : bal) {
    std::map<std::pair<int, int>, int> cells;
    for (const auto& r : recs) ++cells[{index_of(r.label), r.qp}];
    for (const auto& [k, n] : cells) EXPECT_LE(n, 3);
  }
  EXPECT_LT(total_records(bal), total_records(hard));
}

TEST(DatasetFile, RoundTripBitExact) {
  std::mt19937_64 rng(6);
  std::vector<BlockSample> all;
  for (std::uint32_t i = 0; i < 12; ++i) all.push_back(random_sample(rng, i));
  const auto bytes = encode_dataset(all);
  EXPECT_EQ(decode_dataset(bytes), all);
  EXPECT_EQ(encode_dataset(decode_dataset(bytes)), bytes);
  const auto path = std::filesystem::temp_directory_path() / "qtmtt_dataset_test.qtmt";
  write_dataset(path, all);
  EXPECT_EQ(read_dataset(path), all);
  std::filesystem::remove(path);
}

TEST(DatasetFile, StructuredErrors) {
  std::mt19937_64 rng(7);
  std::vector<BlockSample> all{random_sample(rng, 0), random_sample(rng, 1)};
  const auto good = encode_dataset(all);
  auto bad = good;
  bad[0] = 'X';
  EXPECT_EQ(kind_of([&] { decode_dataset(bad); }), ErrorKind::kBadMagic);
  bad = good;
  bad[4] = 9;
  EXPECT_EQ(kind_of([&] { decode_dataset(bad); }), ErrorKind::kBadVersion);
  std::vector<std::uint8_t> cut(good.begin(), good.end() - 3);
  EXPECT_EQ(kind_of([&] { decode_dataset(cut); }), ErrorKind::kTruncated);
  bad = good;
  bad.push_back(0);
  EXPECT_EQ(kind_of([&] { decode_dataset(bad); }), ErrorKind::kCorrupt);
  bad = good;
  bad[16] = 200;  // qp of record 0
  EXPECT_EQ(kind_of([&] { decode_dataset(bad); }), ErrorKind::kCorrupt);
  bad = good;
  bad[17 + kPatchPixels] ^= 1;  // soft label no longer matches the tree
  EXPECT_EQ(kind_of([&] { decode_dataset(bad); }), ErrorKind::kCorrupt);
  EXPECT_EQ(kind_of([&] { read_dataset("/nonexistent/qtmtt.bin"); }), ErrorKind::kIo);
}

TEST(Manifest, RoundTrip) {
  const std::vector<ManifestEntry> m = {{0, 0x0123456789abcdefull, "a.pgm"}, {1, 42, "b c.pgm"}};
  const auto path = std::filesystem::temp_directory_path() / "qtmtt_manifest_test.tsv";
  write_manifest(path, m);
  const auto back = read_manifest(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].hash, m[0].hash);
  EXPECT_EQ(back[1].name, "b c.pgm");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace qtmtt::data
