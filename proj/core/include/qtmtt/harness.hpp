#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qtmtt/dataset.hpp"
#include "qtmtt/gbdt.hpp"
#include "qtmtt/nn.hpp"
#include "qtmtt/pgm.hpp"
#include "qtmtt/rdo_search.hpp"

namespace qtmtt::harness {

inline constexpr std::array<int, 4> kTestQps = {22, 27, 32, 37};

// Mean over QPs of (T_ref - T_test) / T_ref. Throws on non-positive times
// or mismatched lengths.
double delta_et(std::span<const double> ref_times, std::span<const double> test_times);

struct RdPoint {
  int qp = 0;
  double rate = 0.0;  // bits
  double psnr = 0.0;  // dB
};

// 10 log10(255^2 * pixels / sse); +inf for sse == 0.
double psnr(double sse, std::size_t pixels);

// Bjontegaard delta rate in percent: cubic fits of log10(rate) against
// PSNR, integrated over the shared PSNR interval. Needs at least four points
// per curve with distinct finite PSNRs and positive rates.
double bd_rate(std::span<const RdPoint> anchor, std::span<const RdPoint> test);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0, 0) to (1, 1)
  double auc = 0.0;              // trapezoidal
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Threshold sweep over distinct scores, highest first. Throws
// kInvalidArgument without both classes.
RocCurve roc_from_scores(std::span<const double> scores, const std::vector<bool>& positive);

// Edges strictly inside g that separate two children of `split`.
std::vector<int> split_boundary_edges(const CuGeometry& g, SplitType split);

// Mean predicted probability on the boundary lines of `split` within g.
double split_score(const EdgeVector& predicted, const CuGeometry& g, SplitType split);

// One point per tree node of the given size at which `target` is legal;
// positive when the node's reference split is `target`.
RocCurve roc_curve(std::span<const data::BlockSample> samples, std::span<const EdgeVector> predictions,
                   SplitType target, int size_id);

// CNN once per root, then the per-size classifier at every node. CUs
// without a classifier (4x4) can only be NS.
class TwoStagePredictor final : public rdo::SplitPredictor {
 public:
  TwoStagePredictor(nn::Model cnn, gbdt::ModelBank bank, PartitionLimits limits = {});

  EdgeVector prepare(const rdo::RootContext& ctx) const override;
  SplitDistribution predict(const rdo::RootContext& ctx, const CuGeometry& g, const EdgeVector& cached) const override;

  const nn::Model& cnn() const { return cnn_; }
  const gbdt::ModelBank& bank() const { return bank_; }

 private:
  nn::Model cnn_;
  gbdt::ModelBank bank_;
  PartitionLimits limits_;
};

struct CorpusImage {
  std::string name;
  Frame frame;
};

// Every *.pgm of dir, sorted by file name.
std::vector<CorpusImage> load_corpus(const std::filesystem::path& dir);

struct DatasetBuild {
  std::vector<data::BlockSample> samples;
  std::vector<data::ManifestEntry> manifest;
};

// Exhaustive-search samples of every image at every QP. Image ids follow
// the input order.
DatasetBuild build_dataset(std::span<const CorpusImage> images, std::span<const int> qps,
                           const rdo::SearchOptions& search = {});

struct ImageQpResult {
  double rate = 0.0;
  double sse = 0.0;
  std::size_t pixels = 0;
  rdo::SearchStats stats;
  std::vector<rdo::BlockResult> blocks;
};

struct CorpusRun {
  std::vector<int> qps;
  std::vector<std::string> names;
  std::vector<std::vector<ImageQpResult>> results;  // [image][qp index]
};

CorpusRun run_corpus(std::span<const CorpusImage> images, std::span<const int> qps, const rdo::EncodeOptions& options);

struct QpSummary {
  int qp = 0;
  RdPoint anchor;
  RdPoint test;
  rdo::SearchStats anchor_stats;
  rdo::SearchStats test_stats;
};

struct RunReport {
  std::string config;
  std::vector<QpSummary> per_qp;
  double delta_et = 0.0;     // wall clock
  double delta_nodes = 0.0;  // evaluated nodes
  double bd_rate = 0.0;      // mean of the per-image BD-rates
  double bd_rate_aggregate = 0.0;
  std::vector<double> per_image_bd;
  std::vector<std::string> skipped_images;  // degenerate RD curves
  double predictor_overhead = 0.0;          // predictor seconds / anchor seconds
  bool trees_identical = false;
  std::optional<gbdt::AccuracyReport> accuracy;
};

RunReport compare_runs(const CorpusRun& anchor, const CorpusRun& test, const std::string& config);

// Hard records of the anchor trees with features from the stage-1 network.
data::HardDataset anchor_records(std::span<const CorpusImage> images, const CorpusRun& anchor,
                                 const TwoStagePredictor& predictor);

// Throws kInvalidArgument when any image also appears in the training
// manifest (same content hash).
void check_disjoint(std::span<const data::ManifestEntry> training, std::span<const CorpusImage> eval);

struct EvalOptions {
  std::vector<int> qps{kTestQps.begin(), kTestQps.end()};
  rdo::TopNConfig topn = rdo::TopNConfig::preset("C2");
  rdo::SearchOptions search;
  bool with_accuracy = true;
};

// Exhaustive anchor and pruned test over the corpus.
RunReport evaluate(std::span<const CorpusImage> images, const TwoStagePredictor& predictor, const EvalOptions& options);

// Reports for each config against one shared anchor run.
std::vector<RunReport> sweep(std::span<const CorpusImage> images, const rdo::SplitPredictor& predictor,
                             std::span<const rdo::TopNConfig> configs, std::span<const int> qps,
                             const rdo::SearchOptions& search = {});

// Configs ordered least to most aggressive: evaluated nodes must strictly
// fall and BD-rate must not fall. Returns an empty string when it holds.
std::string check_tradeoff(std::span<const RunReport> reports);

// "config_id,delta_nodes,delta_et,bd_rate".
std::string tradeoff_csv(std::span<const RunReport> reports);
// One row per (config, qp) with anchor and test rate, PSNR, nodes and time.
std::string detail_csv(std::span<const RunReport> reports);
std::string summary_text(const RunReport& report);

// Textured grey-level test image: smooth ramps, blocks with sharp edges,
// oriented stripes and noisy patches in seeded proportions.
Frame synthetic_image(int width, int height, std::uint64_t seed);

// Writes `count` synthetic PGMs named img_000.pgm, ... into dir.
std::vector<std::filesystem::path> make_corpus(const std::filesystem::path& dir, int count, int width, int height,
                                               std::uint64_t seed);

}  // namespace qtmtt::harness
