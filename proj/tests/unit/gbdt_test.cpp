#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "qtmtt/error.hpp"
#include "qtmtt/gbdt.hpp"

namespace qtmtt::gbdt {
namespace {

constexpr int k16x16 = 8;

// Label is the bin of feature 3; everything else is noise.
std::vector<data::HardRecord> separable(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<data::HardRecord> out;
  for (int i = 0; i < n; ++i) {
    data::HardRecord r;
    r.geometry = CuGeometry{0, 0, 16, 16, 0};
    r.size_id = k16x16;
    r.features.resize(static_cast<std::size_t>(crop_length(16, 16)));
    for (auto& f : r.features) f = u(rng);
    r.qp = 22 + 5 * (i % 4);
    r.label = static_cast<SplitType>(std::min(5, static_cast<int>(r.features[3] * 6)));
    out.push_back(std::move(r));
  }
  return out;
}

TEST(Tree, EvaluateFollowsThresholds) {
  RegressionTree t;
  t.nodes = {{0, 0.5f, 1, 2, 0.0f}, {-1, 0, -1, -1, -1.0f}, {-1, 0, -1, -1, 2.0f}};
  const std::vector<double> lo = {0.5}, hi = {0.75};
  EXPECT_EQ(t.evaluate(lo), -1.0);
  EXPECT_EQ(t.evaluate(hi), 2.0);
}

TEST(Model, EmptyIsUniformOverLegal) {
  const auto m = empty_model(k16x16);
  EXPECT_EQ(m.feature_length, crop_length(16, 16) + 1);
  const auto legal = legal_splits(CuGeometry{0, 0, 16, 16, 1});
  const auto d = m.predict(std::vector<double>(25, 0.0), legal);
  EXPECT_EQ(d[SplitType::kQuad], 0.0);
  EXPECT_DOUBLE_EQ(d[SplitType::kNoSplit], 0.2);
  EXPECT_THROW(m.logits(std::vector<double>(3, 0.0)), Error);
}

TEST(Train, SeparableReachesFullAccuracy) {
  std::mt19937_64 rng(1);
  const auto recs = separable(rng, 600);
  TrainOptions opt;
  opt.rounds = 30;
  opt.max_depth = 3;
  TrainReport rep;
  const auto m = train_model(k16x16, recs, opt, &rep);
  ASSERT_EQ(rep.loss.size(), 31u);
  for (std::size_t i = 1; i < rep.loss.size(); ++i) EXPECT_LE(rep.loss[i], rep.loss[i - 1]);
  EXPECT_NEAR(rep.loss[0], std::log(6.0), 1e-12);
  int hit = 0;
  for (const auto& r : recs) {
    const auto d = m.predict(feature_vector(r), legal_splits(r.geometry));
    hit += top_n(d, legal_splits(r.geometry), 1)[0] == r.label;
  }
  EXPECT_EQ(hit, 600);
  EXPECT_NEAR(cross_entropy(m, recs), rep.loss.back(), 1e-9);
}

TEST(Train, DeterministicAndSubsampled) {
  std::mt19937_64 rng(2);
  const auto recs = separable(rng, 200);
  TrainOptions opt;
  opt.rounds = 5;
  opt.subsample = 0.5;
  opt.seed = 3;
  EXPECT_EQ(train_model(k16x16, recs, opt), train_model(k16x16, recs, opt));
}

TEST(Train, IllegalClassesGetZeroTrees) {
  std::mt19937_64 rng(3);
  auto recs = separable(rng, 100);
  for (auto& r : recs) {
    r.geometry = CuGeometry{0, 0, 16, 8, 1};
    r.size_id = 9;
    r.features.resize(static_cast<std::size_t>(crop_length(16, 8)));
    r.label = r.features[0] < 0.5 ? SplitType::kBinaryH : SplitType::kNoSplit;
  }
  TrainOptions opt;
  opt.rounds = 3;
  const auto m = train_model(9, recs, opt);
  for (const auto& round : m.trees) {
    EXPECT_EQ(round[index_of(SplitType::kQuad)].nodes.size(), 1u);
    EXPECT_EQ(round[index_of(SplitType::kQuad)].nodes[0].value, 0.0f);
  }
  EXPECT_THROW(train_model(k16x16, recs, opt), Error);
}

TEST(Accuracy, TopNIsMonotone) {
  std::mt19937_64 rng(4);
  auto recs = separable(rng, 300);
  for (auto& r : recs) {
    if (rng() % 3 == 0) r.label = static_cast<SplitType>(rng() % 6);
  }
  ModelBank bank;
  TrainOptions opt;
  opt.rounds = 10;
  bank.models[k16x16] = train_model(k16x16, recs, opt);
  data::HardDataset ds;
  ds[k16x16] = recs;
  const auto acc = top_n_accuracy(bank, ds);
  EXPECT_EQ(acc.records[k16x16], 300u);
  const auto& row = acc.per_size[k16x16];
  ASSERT_TRUE(row[0] && row[1] && row[2]);
  EXPECT_LE(*row[0], *row[1]);
  EXPECT_LE(*row[1], *row[2]);
  EXPECT_FALSE(acc.per_size[0][0].has_value());
  EXPECT_EQ(class_count(0), 2);
  EXPECT_EQ(class_count(k16x16), 6);
}

TEST(BankFile, RoundTripAndErrors) {
  std::mt19937_64 rng(5);
  ModelBank bank;
  TrainOptions opt;
  opt.rounds = 4;
  bank.models[k16x16] = train_model(k16x16, separable(rng, 100), opt);
  const auto bytes = encode_bank(bank);
  EXPECT_EQ(decode_bank(bytes), bank);
  EXPECT_EQ(encode_bank(decode_bank(bytes)), bytes);
  auto kind = [](std::vector<std::uint8_t> b) {
    try {
      decode_bank(b);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kInvalidArgument;
  };
  auto bad = bytes;
  bad[0] = 'x';
  EXPECT_EQ(kind(bad), ErrorKind::kBadMagic);
  bad = bytes;
  bad[4] = 0;
  EXPECT_EQ(kind(bad), ErrorKind::kBadVersion);
  bad = bytes;
  bad[8] = 15;
  EXPECT_EQ(kind(bad), ErrorKind::kMissingModel);
  bad = bytes;
  bad[12] = 3;  // size id of model 0
  EXPECT_EQ(kind(bad), ErrorKind::kMissingModel);
  bad = bytes;
  bad[16] = 7;  // feature length of model 0
  EXPECT_EQ(kind(bad), ErrorKind::kShapeMismatch);
  EXPECT_EQ(kind({bytes.begin(), bytes.end() - 2}), ErrorKind::kTruncated);
  bad = bytes;
  bad.push_back(0);
  EXPECT_EQ(kind(bad), ErrorKind::kCorrupt);
}

TEST(Predict, BankDispatchesBySize) {
  ModelBank bank;
  const auto d = predict(bank, CuGeometry{0, 0, 8, 4, 2}, std::vector<double>(crop_length(8, 4) + 1, 0.0));
  EXPECT_DOUBLE_EQ(d[SplitType::kBinaryV], 0.5);
  EXPECT_THROW(predict(bank, CuGeometry{0, 0, 4, 4, 2}, std::vector<double>(1, 0.0)), Error);
  EXPECT_THROW(predict(bank, CuGeometry{0, 0, 8, 4, 2}, std::vector<double>(3, 0.0)), Error);
}

}  // namespace
}  // namespace qtmtt::gbdt
