#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qtmtt/error.hpp"
#include "qtmtt/rdo_search.hpp"

namespace qtmtt::rdo {
namespace {

// Seeded random distributions over the legal set.
class RandomPredictor final : public SplitPredictor {
 public:
  explicit RandomPredictor(std::uint64_t seed) : seed_(seed) {}
  SplitDistribution predict(const RootContext& ctx, const CuGeometry& g, const EdgeVector&) const override {
    std::mt19937_64 rng(seed_ ^ (static_cast<std::uint64_t>(ctx.origin.x) << 40) ^
                        (static_cast<std::uint64_t>(g.x * 64 + g.y) << 20) ^
                        static_cast<std::uint64_t>(g.width * 64 + g.height + 4096 * g.mtt_depth));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SplitDistribution d;
    for (auto& p : d.probs) p = u(rng);
    return mask_and_normalize(d, legal_splits(g));
  }

 private:
  std::uint64_t seed_;
};

class BrokenPredictor final : public SplitPredictor {
 public:
  SplitDistribution predict(const RootContext&, const CuGeometry&, const EdgeVector&) const override {
    return SplitDistribution::one_hot(SplitType::kTernaryV);
  }
};

TEST(SignalBits, Values) {
  EXPECT_EQ(signal_bits(SplitType::kQuad, legal_splits(root_geometry())), 2.0);
  EXPECT_EQ(signal_bits(SplitType::kNoSplit, legal_splits(root_geometry())), 1.0);
  EXPECT_EQ(signal_bits(SplitType::kNoSplit, legal_splits(CuGeometry{0, 0, 4, 4, 1})), 0.0);
}

TEST(Exhaustive, MatchesBruteForceOn8x8And16x16) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 12; ++i) {
    const Frame f = testing::random_frame(rng, 64, 64);
    const int size = i % 3 == 0 ? 8 : 16;
    const CuGeometry root{16, 32, size, size, 0};
    const int qp = 22 + 5 * (i % 4);
    const auto best = testing::brute_force_rdo(f, {}, root, qp);
    const auto r = rdo_exhaustive(f, {}, root, qp);
    EXPECT_EQ(r.rd.cost, best.cost);
    EXPECT_EQ(r.tree.preorder(), best.preorder);
  }
}

TEST(Exhaustive, TreeCountOf16x16) {
  std::size_t n = 0;
  testing::enumerate_trees(root_geometry(16), [&](const auto&) { ++n; });
  std::size_t n8 = 0;
  testing::enumerate_trees(root_geometry(8), [&](const auto&) { ++n8; });
  EXPECT_EQ(n8, 9u);
  EXPECT_GT(n, 9u * 9 * 9 * 9);
}

TEST(Exhaustive, CostMatchesTreeWalk) {
  std::mt19937_64 rng(8);
  const Frame f = testing::random_frame(rng, 64, 64);
  const auto r = rdo_exhaustive(f, {}, root_geometry(), 27);
  const auto w = evaluate_tree(f, {}, r.tree, 27);
  EXPECT_DOUBLE_EQ(r.rd.cost, w.cost);
  EXPECT_DOUBLE_EQ(r.rd.rate, w.rate);
  EXPECT_DOUBLE_EQ(r.rd.distortion, w.distortion);
  EXPECT_NO_THROW(r.tree.validate());
}

TEST(Exhaustive, FlatBlockStaysWhole) {
  Frame f(64, 64, 77);
  const auto r = rdo_exhaustive(f, {}, root_geometry(), 32);
  EXPECT_TRUE(r.tree.is_leaf());
}

TEST(Pruned, NeverBeatsExhaustive) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 6; ++i) {
    const Frame f = testing::random_frame(rng, 64, 64);
    const auto ex = rdo_exhaustive(f, {}, root_geometry(), 27);
    for (int p = 0; p < 3; ++p) {
      const RandomPredictor pred(static_cast<std::uint64_t>(100 * i + p));
      for (const char* preset : {"C1", "C4"}) {
        const auto pr = rdo_pruned(f, {}, root_geometry(), 27, pred, TopNConfig::preset(preset));
        EXPECT_GE(pr.rd.cost, ex.rd.cost);
        EXPECT_LE(pr.stats.evaluated_nodes, ex.stats.evaluated_nodes);
        EXPECT_EQ(pr.stats.predictor_calls, pr.stats.evaluated_nodes);
        EXPECT_DOUBLE_EQ(evaluate_tree(f, {}, pr.tree, 27).cost, pr.rd.cost);
      }
    }
  }
}

TEST(Pruned, FullConfigIsExhaustive) {
  std::mt19937_64 rng(5);
  const Frame f = testing::random_frame(rng, 64, 64);
  const RandomPredictor pred(1);
  const auto ex = rdo_exhaustive(f, {}, root_geometry(), 32);
  const auto pr = rdo_pruned(f, {}, root_geometry(), 32, pred, TopNConfig::full());
  EXPECT_EQ(pr.tree, ex.tree);
  EXPECT_EQ(pr.rd.cost, ex.rd.cost);
  EXPECT_EQ(pr.stats.evaluated_nodes, ex.stats.evaluated_nodes);
}

TEST(Pruned, OracleWithTopOneRecoversExhaustive) {
  std::mt19937_64 rng(6);
  const Frame f = testing::random_frame(rng, 64, 64);
  const auto ex = rdo_exhaustive(f, {}, root_geometry(), 22);
  OraclePredictor oracle;
  oracle.add_tree({}, ex.tree);
  const auto pr = rdo_pruned(f, {}, root_geometry(), 22, oracle, TopNConfig::uniform(1));
  EXPECT_EQ(pr.tree, ex.tree);
  EXPECT_EQ(pr.rd.cost, ex.rd.cost);
  EXPECT_EQ(pr.stats.evaluated_nodes, ex.tree.node_count());
}

TEST(Pruned, NestedConfigsEvaluateFewerNodes) {
  std::mt19937_64 rng(12);
  const Frame f = testing::random_frame(rng, 64, 64);
  const RandomPredictor pred(4);
  std::uint64_t last = ~0ull;
  for (const char* p : {"C1", "C2", "C3", "C4"}) {
    const auto r = rdo_pruned(f, {}, root_geometry(), 27, pred, TopNConfig::preset(p));
    EXPECT_LE(r.stats.evaluated_nodes, last);
    last = r.stats.evaluated_nodes;
  }
}

TEST(Pruned, RejectsMalformedPrediction) {
  Frame f(64, 64, 10);
  try {
    rdo_pruned(f, {}, root_geometry(), 27, BrokenPredictor{}, TopNConfig::uniform(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMalformedDistribution);
  }
}

TEST(TopN, ParseAndPresets) {
  const auto c = TopNConfig::parse("6:3,5:3,4:3,3:3,2:2");
  EXPECT_EQ(c, TopNConfig::preset("C2"));
  EXPECT_EQ(c.n_for(6), 3);
  EXPECT_EQ(c.n_for(1), 1);
  EXPECT_EQ(TopNConfig::parse("6:2").n_for(4), 4);
  EXPECT_TRUE(TopNConfig::preset("C4").nested_in(TopNConfig::preset("C3")));
  EXPECT_TRUE(TopNConfig::preset("C3").nested_in(TopNConfig::preset("C2")));
  EXPECT_TRUE(TopNConfig::preset("C2").nested_in(TopNConfig::preset("C1")));
  EXPECT_FALSE(TopNConfig::preset("C1").nested_in(TopNConfig::preset("C4")));
  EXPECT_EQ(TopNConfig::parse(c.to_string()), c);
  EXPECT_EQ(TopNConfig::uniform(9).n_for(6), 6);
  EXPECT_THROW(TopNConfig::parse("6:7"), Error);
  EXPECT_THROW(TopNConfig::parse("6:0"), Error);
  EXPECT_THROW(TopNConfig::parse("x"), Error);
  EXPECT_THROW(TopNConfig::preset("C9"), Error);
}

TEST(EncodeFrame, TilesAndSums) {
  std::mt19937_64 rng(14);
  const Frame f = testing::random_frame(rng, 100, 70);
  EncodeOptions opt;
  const auto r = encode_frame(f, 32, opt);
  EXPECT_EQ(r.coded_width, 128);
  EXPECT_EQ(r.coded_height, 128);
  ASSERT_EQ(r.blocks.size(), 4u);
  EXPECT_EQ(r.blocks[1].origin.x, 64);
  EXPECT_EQ(r.blocks[2].origin.y, 64);
  double cost = 0.0;
  std::uint64_t nodes = 0;
  for (const auto& b : r.blocks) {
    cost += b.rd.cost;
    nodes += b.stats.evaluated_nodes;
  }
  EXPECT_DOUBLE_EQ(r.total.cost, cost);
  EXPECT_EQ(r.stats.evaluated_nodes, nodes);
  EncodeOptions pruned;
  pruned.mode = SearchMode::kPruned;
  EXPECT_THROW(encode_frame(f, 32, pruned), Error);
}

}  // namespace
}  // namespace qtmtt::rdo
