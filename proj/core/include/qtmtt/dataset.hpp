#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qtmtt/partition.hpp"
#include "qtmtt/pgm.hpp"
#include "qtmtt/rdo_search.hpp"

namespace qtmtt::data {

inline constexpr int kContext = 4;
inline constexpr int kPatchSize = kRootSize + kContext;  // 68
inline constexpr int kPatchPixels = kPatchSize * kPatchSize;
inline constexpr std::uint8_t kUnavailableSample = 128;

// 68x68 luma: the 64x64 root plus four rows above and four columns left.
using Patch = std::array<std::uint8_t, kPatchPixels>;

struct SourceId {
  std::uint32_t image = 0;
  std::uint32_t tile = 0;

  friend auto operator<=>(const SourceId&, const SourceId&) = default;
};

struct BlockSample {
  Patch pixels{};
  int qp = 0;
  EdgeVector soft_label;
  PartitionTree tree{root_geometry()};
  SourceId source;

  friend bool operator==(const BlockSample&, const BlockSample&) = default;
};

Patch extract_patch(const Frame& frame, rdo::BlockOrigin origin);

// One sample per 64x64 tile (after edge-replication padding), labelled by
// the exhaustive search. Tiles are numbered in raster order.
std::vector<BlockSample> extract_samples(const Frame& frame, int qp, std::uint32_t image_id,
                                         const rdo::SearchOptions& options = {});

inline constexpr int kNumDepthClasses = 8;

struct DepthClass {
  int index = 0;

  friend auto operator<=>(const DepthClass&, const DepthClass&) = default;
};

// Buckets on the number of active edges: 0, 1-8, 9-16, 17-32, 33-64,
// 65-128, 129-256, 257-480.
DepthClass depth_class(const EdgeVector& soft_label);

struct SoftBalanceOptions {
  // Samples kept per (depth class, qp) cell; 0 picks the median non-empty
  // cell count.
  std::size_t per_class_target = 0;
  // When non-zero, caps each cell at per_qp_target / 8.
  std::size_t per_qp_target = 0;
  std::uint64_t seed = 0;
};

// Uniform subsampling without replacement per (depth class, qp) cell.
// Cells below target keep everything. Survivors keep their input order.
std::vector<BlockSample> balance_soft(const std::vector<BlockSample>& samples, const SoftBalanceOptions& options);

// Per-node training record for the split classifiers.
struct HardRecord {
  CuGeometry geometry;
  int size_id = 0;
  std::vector<double> features;  // crop_edge_vector of the node
  int qp = 0;
  SplitType label = SplitType::kNoSplit;
  SourceId source;
};

using HardDataset = std::array<std::vector<HardRecord>, kNumCuSizes>;

// One record per tree node whose size has a classifier. Features come from
// `edge_features[i]` for sample i when given (stage-1 predictions), else
// from the sample's own soft label.
HardDataset explode_hard(const std::vector<BlockSample>& samples, std::span<const EdgeVector> edge_features = {});

std::size_t total_records(const HardDataset& d);

struct HardBalanceOptions {
  // Records kept per (label, qp) cell of each size; 0 picks the median
  // non-empty cell count of that size.
  std::size_t per_cell_target = 0;
  std::uint64_t seed = 0;
};

HardDataset balance_hard(const HardDataset& records, const HardBalanceOptions& options);

// Binary dataset file:
//   "QTMT" | u32 version | u64 count | records...
//   record: u8 qp | 4624 pixel bytes | 60-byte soft label (LSB-first bitmap)
//           | preorder split bytes | u32 image | u32 tile
// All integers little-endian.
inline constexpr std::uint32_t kDatasetVersion = 1;

std::vector<std::uint8_t> encode_dataset(std::span<const BlockSample> samples);
std::vector<BlockSample> decode_dataset(std::span<const std::uint8_t> bytes);
void write_dataset(const std::filesystem::path& path, std::span<const BlockSample> samples);
std::vector<BlockSample> read_dataset(const std::filesystem::path& path);

// Text manifest of the images behind a dataset: "id<TAB>hash<TAB>name".
struct ManifestEntry {
  std::uint32_t image_id = 0;
  std::uint64_t hash = 0;
  std::string name;
};

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

// *.pgm files of a directory, sorted by file name.
std::vector<std::filesystem::path> list_pgm_files(const std::filesystem::path& dir);

}  // namespace qtmtt::data
