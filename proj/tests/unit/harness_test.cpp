#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qtmtt/error.hpp"
#include "qtmtt/harness.hpp"

namespace qtmtt::harness {
namespace {

std::vector<RdPoint> curve(double scale) {
  return {{22, 9000 * scale, 41.2}, {27, 5200 * scale, 38.0}, {32, 2900 * scale, 35.1}, {37, 1500 * scale, 32.4}};
}

TEST(DeltaEt, MeanRelativeSaving) {
  const std::vector<double> ref(4, 100.0), test(4, 50.0);
  EXPECT_EQ(delta_et(ref, test), 0.5);
  const std::vector<double> r2 = {10, 20}, t2 = {5, 20};
  EXPECT_DOUBLE_EQ(delta_et(r2, t2), 0.25);
  EXPECT_THROW(delta_et(r2, test), Error);
  const std::vector<double> zero = {0, 1};
  EXPECT_THROW(delta_et(zero, t2), Error);
}

TEST(BdRate, UniformShift) {
  const auto a = curve(1.0);
  EXPECT_NEAR(bd_rate(a, curve(1.05)), 5.0, 1e-6);
  EXPECT_NEAR(bd_rate(a, curve(0.9)), -10.0, 1e-6);
  EXPECT_EQ(bd_rate(a, a), 0.0);
}

TEST(BdRate, IndependentOfPointOrder) {
  auto a = curve(1.0);
  auto b = curve(1.2);
  b[1].psnr += 0.3;
  const double x = bd_rate(a, b);
  std::reverse(a.begin(), a.end());
  EXPECT_NEAR(bd_rate(a, b), x, 1e-9);
}

TEST(BdRate, RejectsDegenerateCurves) {
  auto a = curve(1.0);
  auto short_curve = a;
  short_curve.pop_back();
  EXPECT_THROW(bd_rate(a, short_curve), Error);
  auto dup = a;
  dup[1].psnr = dup[0].psnr;
  EXPECT_THROW(bd_rate(a, dup), Error);
  auto neg = a;
  neg[2].rate = 0.0;
  EXPECT_THROW(bd_rate(a, neg), Error);
  auto far = a;
  for (auto& p : far) p.psnr += 100.0;
  EXPECT_THROW(bd_rate(a, far), Error);
}

TEST(Psnr, Values) {
  EXPECT_TRUE(std::isinf(psnr(0.0, 100)));
  EXPECT_NEAR(psnr(255.0 * 255.0, 1), 0.0, 1e-12);
  EXPECT_NEAR(psnr(1.0, 1), 20 * std::log10(255.0), 1e-12);
}

TEST(Roc, HandComputedCurve) {
  const std::vector<double> s = {0.9, 0.8, 0.8, 0.3, 0.1};
  const std::vector<bool> pos = {true, false, true, false, false};
  const auto r = roc_from_scores(s, pos);
  EXPECT_EQ(r.positives, 2u);
  EXPECT_EQ(r.negatives, 3u);
  // Points: (0,0) (0,.5) (1/3,1) (2/3,1) (1,1).
  ASSERT_EQ(r.points.size(), 5u);
  EXPECT_DOUBLE_EQ(r.points[2].fpr, 1.0 / 3);
  EXPECT_DOUBLE_EQ(r.points[2].tpr, 1.0);
  EXPECT_NEAR(r.auc, 0.5 * (1.0 / 3) * 1.5 + 2.0 / 3, 1e-12);
  const std::vector<bool> all(5, true);
  EXPECT_THROW(roc_from_scores(s, all), Error);
}

TEST(Roc, PerfectAndInverted) {
  const std::vector<double> s = {4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(roc_from_scores(s, {true, true, false, false}).auc, 1.0);
  EXPECT_DOUBLE_EQ(roc_from_scores(s, {false, false, true, true}).auc, 0.0);
}

TEST(Roc, BoundaryEdges) {
  const CuGeometry g{0, 0, 16, 16, 0};
  EXPECT_EQ(split_boundary_edges(g, SplitType::kBinaryH).size(), 4u);
  EXPECT_EQ(split_boundary_edges(g, SplitType::kTernaryV).size(), 8u);
  EXPECT_EQ(split_boundary_edges(g, SplitType::kQuad).size(), 8u);
  EdgeVector v = tree_to_edge_vector(PartitionTree::split(root_geometry(), SplitType::kQuad));
  EXPECT_EQ(split_score(v, root_geometry(), SplitType::kQuad), 1.0);
  EXPECT_EQ(split_score(v, CuGeometry{0, 0, 32, 32, 0}, SplitType::kQuad), 0.0);
}

TEST(Roc, PerfectPredictionsGiveUnitAuc) {
  std::mt19937_64 rng(5);
  std::vector<data::BlockSample> samples(40);
  std::vector<EdgeVector> preds;
  for (auto& s : samples) {
    s.tree = testing::random_tree(rng, root_geometry());
    s.soft_label = tree_to_edge_vector(s.tree);
    preds.push_back(s.soft_label);
  }
  // Every positive scores 1; a negative can too when its children draw the
  // same cross.
  const auto r = roc_curve(samples, preds, SplitType::kQuad, 1);
  EXPECT_GT(r.positives, 0u);
  EXPECT_GT(r.negatives, 0u);
  EXPECT_GT(r.auc, 0.9);
  EXPECT_GT(r.points[1].tpr, 0.99);
}

RunReport report(const std::string& name, double nodes, double bd) {
  RunReport r;
  r.config = name;
  r.delta_nodes = nodes;
  r.bd_rate = bd;
  QpSummary q;
  q.anchor_stats.evaluated_nodes = 1000;
  q.test_stats.evaluated_nodes = static_cast<std::uint64_t>(1000 * (1.0 - nodes));
  r.per_qp.push_back(q);
  return r;
}

TEST(Tradeoff, CheckAndCsv) {
  std::vector<RunReport> ok = {report("a", 0.2, 0.1), report("b", 0.4, 0.1), report("c", 0.5, 0.9)};
  EXPECT_EQ(check_tradeoff(ok), "");
  auto flat = ok;
  flat[1] = report("b", 0.2, 0.1);
  EXPECT_NE(check_tradeoff(flat), "");
  auto worse = ok;
  worse[2].bd_rate = 0.0;
  EXPECT_NE(check_tradeoff(worse), "");
  const auto csv = tradeoff_csv(ok);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "config_id,delta_nodes,delta_et,bd_rate");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Corpus, SyntheticIsDeterministic) {
  const Frame a = synthetic_image(96, 64, 3);
  EXPECT_EQ(a, synthetic_image(96, 64, 3));
  EXPECT_NE(a, synthetic_image(96, 64, 4));
  const auto dir = std::filesystem::temp_directory_path() / "qtmtt_corpus_test";
  std::filesystem::remove_all(dir);
  const auto files = make_corpus(dir, 3, 64, 64, 1);
  ASSERT_EQ(files.size(), 3u);
  const auto images = load_corpus(dir);
  ASSERT_EQ(images.size(), 3u);
  EXPECT_EQ(images[0].name, "img_000.pgm");
  std::filesystem::remove_all(dir);
}

TEST(Corpus, DisjointnessCheck) {
  const std::vector<CorpusImage> eval = {{"x.pgm", synthetic_image(64, 64, 1)}};
  const std::vector<data::ManifestEntry> other = {{0, content_hash(synthetic_image(64, 64, 2)), "y.pgm"}};
  EXPECT_NO_THROW(check_disjoint(other, eval));
  const std::vector<data::ManifestEntry> same = {{0, content_hash(eval[0].frame), "renamed.pgm"}};
  EXPECT_THROW(check_disjoint(same, eval), Error);
}

TEST(Predictor, TwoStageGivesValidDistributions) {
  nn::NetSpec spec = nn::NetSpec::desk(2, 2, 2);
  nn::Model cnn{spec, nn::init_params(spec, 1)};
  const TwoStagePredictor pred(cnn, gbdt::ModelBank{});
  const Frame f = synthetic_image(64, 64, 7);
  const rdo::RootContext ctx{f, {0, 0}, 27};
  const EdgeVector e = pred.prepare(ctx);
  for (double v : e.values) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  const CuGeometry g{0, 0, 32, 16, 1};
  EXPECT_TRUE(is_valid_distribution(pred.predict(ctx, g, e), legal_splits(g)));
  const CuGeometry tiny{0, 0, 4, 4, 3};
  EXPECT_EQ(pred.predict(ctx, tiny, e)[SplitType::kNoSplit], 1.0);
  nn::NetSpec wrong = nn::NetSpec::desk(2, 2, 2, 36);
  EXPECT_THROW(TwoStagePredictor(nn::Model{wrong, nn::init_params(wrong, 1)}, gbdt::ModelBank{}), Error);
}

TEST(Evaluate, OracleRunMatchesAnchor) {
  const std::vector<CorpusImage> images = {{"a", synthetic_image(64, 64, 11)}, {"b", synthetic_image(64, 64, 12)}};
  const std::vector<int> qps = {22, 27, 32, 37};
  rdo::EncodeOptions ex;
  const auto anchor = run_corpus(images, qps, ex);
  const auto again = run_corpus(images, qps, ex);
  const auto rep = compare_runs(anchor, again, "same");
  EXPECT_TRUE(rep.trees_identical);
  EXPECT_EQ(rep.delta_nodes, 0.0);
  EXPECT_EQ(rep.bd_rate, 0.0);
  EXPECT_NE(summary_text(rep).find("same"), std::string::npos);
  const auto csv = detail_csv(std::vector<RunReport>{rep});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

}  // namespace
}  // namespace qtmtt::harness
