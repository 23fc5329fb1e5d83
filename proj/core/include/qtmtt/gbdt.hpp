#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "qtmtt/dataset.hpp"
#include "qtmtt/partition.hpp"
#include "qtmtt/split_distribution.hpp"

// Stage-2: one softmax gradient-boosted tree ensemble per CU size, mapping
// (cropped edge probabilities, QP) to a split distribution.
namespace qtmtt::gbdt {

// Internal nodes send x[feature] <= threshold to `left`. Leaves have
// feature == -1 and carry `value` (already scaled by the learning rate).
struct TreeNode {
  std::int32_t feature = -1;
  float threshold = 0.0f;
  std::int32_t left = -1;
  std::int32_t right = -1;
  float value = 0.0f;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double evaluate(std::span<const double> x) const;
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

struct BoostedModel {
  int size_id = 0;
  int feature_length = 0;  // crop length + 1 for the QP
  float shrinkage = 0.1f;
  // trees[round][class]; classes never legal at this size hold a zero leaf.
  std::vector<std::array<RegressionTree, kNumSplitTypes>> trees;

  int rounds() const { return static_cast<int>(trees.size()); }
  std::array<double, kNumSplitTypes> logits(std::span<const double> features) const;
  // Softmax, zero the illegal classes, renormalise.
  SplitDistribution predict(std::span<const double> features, SplitSet legal) const;

  friend bool operator==(const BoostedModel&, const BoostedModel&) = default;
};

// An untrained model predicts uniformly over the legal classes.
BoostedModel empty_model(int size_id);

struct ModelBank {
  std::array<BoostedModel, kNumCuSizes> models;

  ModelBank();
  friend bool operator==(const ModelBank&, const ModelBank&) = default;
};

// Cropped edge vector with the raw QP appended.
std::vector<double> feature_vector(std::span<const double> crop, int qp);
std::vector<double> feature_vector(const data::HardRecord& record);

// Throws kShapeMismatch when the feature length does not fit the size, and
// kInvalidArgument for a size without a classifier.
SplitDistribution predict(const ModelBank& bank, const CuGeometry& g, std::span<const double> features);

struct TrainOptions {
  int rounds = 100;
  double shrinkage = 0.1;
  int max_depth = 4;
  int min_samples_leaf = 1;
  double l2 = 1.0;         // added to the hessian sum of every leaf
  double subsample = 1.0;  // row fraction drawn per round
  std::uint64_t seed = 0;
};

struct TrainReport {
  // Mean cross-entropy on the training records: entry 0 before any round,
  // entry k after round k. Never increases.
  std::vector<double> loss;
};

// Each round fits one depth-limited regression tree per legal class to the
// softmax gradient with Newton leaf values, then halves the round's step
// until the training loss does not increase.
BoostedModel train_model(int size_id, std::span<const data::HardRecord> records, const TrainOptions& options,
                         TrainReport* report = nullptr);

double cross_entropy(const BoostedModel& model, std::span<const data::HardRecord> records);

// Hit rate of the label within the top-n predictions. A size reports top-n
// only for n below its class count.
struct AccuracyReport {
  static constexpr int kMaxN = 3;
  using Row = std::array<std::optional<double>, kMaxN>;

  std::array<std::size_t, kNumCuSizes> records{};
  std::array<Row, kNumCuSizes> per_size{};
  std::map<int, Row> by_class_count;  // mean over sizes with that class count
  Row overall{};                      // mean over sizes
};

int class_count(int size_id);

AccuracyReport top_n_accuracy(const ModelBank& bank, const data::HardDataset& records);

// "QTDT" | u32 version | u32 model count (16)
// | per model: u32 size id, u32 feature length, u32 rounds, f32 shrinkage,
//   then per round and class: u32 node count, nodes as
//   (i32 feature, f32 threshold, i32 left, i32 right, f32 value).
inline constexpr std::uint32_t kBankVersion = 1;

std::vector<std::uint8_t> encode_bank(const ModelBank& bank);
ModelBank decode_bank(std::span<const std::uint8_t> bytes);
void save_bank(const std::filesystem::path& path, const ModelBank& bank);
ModelBank load_bank(const std::filesystem::path& path);

}  // namespace qtmtt::gbdt
