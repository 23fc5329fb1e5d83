#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "qtmtt/intra_codec.hpp"
#include "qtmtt/partition.hpp"
#include "qtmtt/pgm.hpp"
#include "qtmtt/split_distribution.hpp"

namespace qtmtt::rdo {

using codec::BlockOrigin;
using codec::RdResult;

struct RootContext {
  const Frame& frame;
  BlockOrigin origin;
  int qp;
};

// Proposes a split distribution for each CU visited by the pruned search.
// prepare() runs once per root and its result is handed back to every
// predict() call for that root. Implementations must be callable
// concurrently.
class SplitPredictor {
 public:
  virtual ~SplitPredictor() = default;

  virtual EdgeVector prepare(const RootContext& ctx) const;
  virtual SplitDistribution predict(const RootContext& ctx, const CuGeometry& g,
                                    const EdgeVector& cached) const = 0;
};

// Uniform over the legal splits.
class UniformPredictor final : public SplitPredictor {
 public:
  explicit UniformPredictor(PartitionLimits limits = {}) : limits_(limits) {}
  SplitDistribution predict(const RootContext& ctx, const CuGeometry& g, const EdgeVector& cached) const override;

 private:
  PartitionLimits limits_;
};

// One-hot on the split a reference tree chose at each of its nodes; uniform
// over legal splits elsewhere.
class OraclePredictor final : public SplitPredictor {
 public:
  explicit OraclePredictor(PartitionLimits limits = {}) : limits_(limits) {}

  void add_tree(BlockOrigin origin, const PartitionTree& tree);

  SplitDistribution predict(const RootContext& ctx, const CuGeometry& g, const EdgeVector& cached) const override;

 private:
  using Key = std::tuple<int, int, int, int, int, int>;
  void add_nodes(BlockOrigin origin, const PartitionTree& node);

  PartitionLimits limits_;
  std::map<Key, SplitType> choices_;
};

// How many splits to expand at a node, keyed by its number of legal classes.
class TopNConfig {
 public:
  // N equal to the class count everywhere: no pruning.
  static TopNConfig full();
  // Same N for every class count, clamped to the count.
  static TopNConfig uniform(int n);
  // "6:3,5:3,4:3,3:3,2:2"; unspecified class counts keep no pruning.
  static TopNConfig parse(std::string_view text);
  // Named trade-off points C1 (least aggressive) through C4.
  static TopNConfig preset(std::string_view name);

  void set(int class_count, int n);
  int n_for(int class_count) const;

  // Componentwise N <= other's N.
  bool nested_in(const TopNConfig& other) const;
  std::string to_string() const;

  friend bool operator==(const TopNConfig&, const TopNConfig&) = default;

 private:
  TopNConfig();
  std::array<int, kNumSplitTypes + 1> n_{};
};

struct SearchStats {
  std::uint64_t evaluated_nodes = 0;
  std::uint64_t leaf_evaluations = 0;
  std::uint64_t predictor_calls = 0;
  double wall_time = 0.0;       // seconds, whole search including predictor
  double predictor_time = 0.0;  // seconds spent inside prepare/predict

  SearchStats& operator+=(const SearchStats& other);
};

struct SearchResult {
  PartitionTree tree;
  RdResult rd;
  SearchStats stats;
};

struct SearchOptions {
  PartitionLimits limits;
};

// Split-signalling bits: 2 for any split, 1 for NS when other splits were
// available, 0 for a forced NS.
double signal_bits(SplitType split, SplitSet legal);

// Minimum-cost partition of `root` over every legal recursive split.
// Subtree results are memoised per (geometry, MTT state); evaluated_nodes
// counts memo misses. Ties go to the lowest canonical split index.
SearchResult rdo_exhaustive(const Frame& frame, BlockOrigin origin, const CuGeometry& root, int qp,
                            const SearchOptions& options = {});

// Same recursion, but each node expands only the top-N splits proposed by
// `predictor`. Throws kMalformedDistribution on an invalid prediction.
SearchResult rdo_pruned(const Frame& frame, BlockOrigin origin, const CuGeometry& root, int qp,
                        const SplitPredictor& predictor, const TopNConfig& config,
                        const SearchOptions& options = {});

// Cost of a given tree recomputed by walking it.
RdResult evaluate_tree(const Frame& frame, BlockOrigin origin, const PartitionTree& tree, int qp,
                       const PartitionLimits& limits = {});

enum class SearchMode { kExhaustive, kPruned };

std::string_view to_string(SearchMode mode);

struct EncodeOptions {
  SearchMode mode = SearchMode::kExhaustive;
  const SplitPredictor* predictor = nullptr;
  TopNConfig topn = TopNConfig::full();
  SearchOptions search;
};

struct BlockResult {
  BlockOrigin origin;
  PartitionTree tree;
  RdResult rd;
  SearchStats stats;
};

struct FrameResult {
  int coded_width = 0;
  int coded_height = 0;
  std::vector<BlockResult> blocks;
  RdResult total;
  SearchStats stats;
};

// Pads to a multiple of 64 by edge replication, then searches each 64x64
// root in raster order. Totals are plain sums over the roots.
FrameResult encode_frame(const Frame& frame, int qp, const EncodeOptions& options);

}  // namespace qtmtt::rdo
