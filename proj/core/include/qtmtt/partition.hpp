#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qtmtt {

// Split types of the QT-MTT grammar. The numeric value is the canonical
// class index used by split distributions and every on-disk format.
enum class SplitType : std::uint8_t {
  kNoSplit = 0,
  kQuad = 1,
  kBinaryH = 2,
  kBinaryV = 3,
  kTernaryH = 4,
  kTernaryV = 5,
};

inline constexpr int kNumSplitTypes = 6;

inline constexpr std::array<SplitType, kNumSplitTypes> kAllSplitTypes = {
    SplitType::kNoSplit, SplitType::kQuad,     SplitType::kBinaryH,
    SplitType::kBinaryV, SplitType::kTernaryH, SplitType::kTernaryV};

constexpr int index_of(SplitType s) { return static_cast<int>(s); }

std::string_view to_string(SplitType s);
std::optional<SplitType> parse_split_type(std::string_view name);

inline constexpr int kRootSize = 64;
inline constexpr int kCellSize = 4;
inline constexpr int kGridCells = kRootSize / kCellSize;            // 16
inline constexpr int kHorizontalEdges = kGridCells * (kGridCells - 1);  // 240
inline constexpr int kEdgeCount = 2 * kHorizontalEdges;                 // 480

// A coding unit inside a 64x64 root. Offsets are relative to the root.
// mtt_depth counts BT/TT splits among the ancestors; the QT-after-MTT
// restriction only needs mtt_depth > 0, the depth itself feeds the optional
// MTT depth cap.
struct CuGeometry {
  int x = 0;
  int y = 0;
  int width = kRootSize;
  int height = kRootSize;
  int mtt_depth = 0;

  bool mtt_ancestor() const { return mtt_depth > 0; }
  int area() const { return width * height; }

  friend auto operator<=>(const CuGeometry&, const CuGeometry&) = default;
};

CuGeometry root_geometry(int size = kRootSize);

bool is_valid(const CuGeometry& g);
std::string to_string(const CuGeometry& g);

// Small fixed set of split types.
class SplitSet {
 public:
  constexpr SplitSet() = default;

  constexpr void insert(SplitType s) { bits_ |= static_cast<std::uint8_t>(1u << index_of(s)); }
  constexpr bool contains(SplitType s) const { return (bits_ >> index_of(s)) & 1u; }
  constexpr int size() const { return __builtin_popcount(bits_); }
  constexpr std::uint8_t bits() const { return bits_; }

  std::vector<SplitType> to_vector() const;

  friend constexpr bool operator==(SplitSet, SplitSet) = default;

 private:
  std::uint8_t bits_ = 0;
};

// Encoder-side restrictions on top of the grammar. A negative max_mtt_depth
// means no cap beyond the 4-pixel size floor.
struct PartitionLimits {
  int max_mtt_depth = -1;

  bool capped() const { return max_mtt_depth >= 0; }
};

// Legal splits for a CU. NS is always present. BT and TT apply only to CUs
// whose sides are both at most 32, which makes the 64x64 root a QT-or-NS node.
SplitSet legal_splits(const CuGeometry& g, const PartitionLimits& limits = {});

// Children tiling the parent in raster order. Throws kIllegalSplit when the
// split is not legal for the geometry (NS included).
std::vector<CuGeometry> child_geometries(const CuGeometry& g, SplitType split,
                                         const PartitionLimits& limits = {});

int child_count(SplitType split);

// Number of interior 4x4 edges of a square block: (n/2)(n/4 - 1).
int np_length(int block_size);

// The sixteen CU sizes that carry a split classifier, in the order used by
// model banks and reports.
struct CuSize {
  int width;
  int height;

  friend constexpr bool operator==(CuSize, CuSize) = default;
};

inline constexpr int kNumCuSizes = 16;
inline constexpr std::array<CuSize, kNumCuSizes> kCuSizes = {{
    {64, 64}, {32, 32}, {32, 16}, {16, 32}, {32, 8}, {8, 32}, {32, 4}, {4, 32},
    {16, 16}, {16, 8},  {8, 16},  {16, 4},  {4, 16}, {8, 8},  {8, 4},  {4, 8},
}};

// Index into kCuSizes, or nullopt for sizes without a classifier (4x4).
std::optional<int> size_index(int width, int height);
std::string size_name(int size_id);

class PartitionTree {
 public:
  PartitionTree() = default;
  explicit PartitionTree(CuGeometry geometry);
  PartitionTree(CuGeometry geometry, SplitType split, std::vector<PartitionTree> children);

  static PartitionTree leaf(CuGeometry geometry) { return PartitionTree(geometry); }

  // Builds the tree with `split` at this node; children start as leaves.
  static PartitionTree split(CuGeometry geometry, SplitType split,
                             const PartitionLimits& limits = {});

  const CuGeometry& geometry() const { return geometry_; }
  SplitType split_type() const { return split_; }
  const std::vector<PartitionTree>& children() const { return children_; }
  std::vector<PartitionTree>& mutable_children() { return children_; }
  bool is_leaf() const { return children_.empty(); }

  std::size_t node_count() const;
  std::vector<CuGeometry> leaves() const;

  // Preorder split-type sequence; fully determines the tree given the root.
  std::vector<SplitType> preorder() const;
  static PartitionTree from_preorder(const CuGeometry& root, std::span<const SplitType> splits,
                                     const PartitionLimits& limits = {});

  // Throws if any structural or legality invariant is broken.
  void validate(const PartitionLimits& limits = {}) const;

  friend bool operator==(const PartitionTree&, const PartitionTree&) = default;

 private:
  CuGeometry geometry_{};
  SplitType split_ = SplitType::kNoSplit;
  std::vector<PartitionTree> children_;
};

// Indented text dump, one node per line: "x,y,WxH SPLIT".
std::string format_tree(const PartitionTree& tree);

// Soft representation of a 64x64 partition.
//
// Layout: indices [0, 240) are horizontal edges, the bottom edge of cell
// (r, c) for r in [0, 15), c in [0, 16), at 16 r + c. Indices [240, 480) are
// vertical edges, the right edge of cell (r, c) for c in [0, 15), r in [0, 16),
// at 240 + 16 c + r.
struct EdgeVector {
  std::array<double, kEdgeCount> values{};

  double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }

  bool is_binary() const;
  int active_count() const;

  friend bool operator==(const EdgeVector&, const EdgeVector&) = default;
};

constexpr int horizontal_edge_index(int row, int col) { return kGridCells * row + col; }
constexpr int vertical_edge_index(int row, int col) {
  return kHorizontalEdges + kGridCells * col + row;
}

EdgeVector tree_to_edge_vector(const PartitionTree& tree);

// Connected components of the 16x16 cell grid, merging neighbours whose
// shared edge is zero. Labels are numbered in raster order of first cell.
struct LeafMap {
  std::array<int, kGridCells * kGridCells> labels{};
  int component_count = 0;

  int at(int row, int col) const { return labels[static_cast<std::size_t>(row * kGridCells + col)]; }
};

LeafMap edge_vector_to_leaf_map(const EdgeVector& v);

// True iff the leaf map partitions the grid exactly into the tree's leaves.
bool leaf_map_matches(const LeafMap& map, const std::vector<CuGeometry>& leaves);

// Edges strictly inside g: horizontal edges in (row, col) raster order, then
// vertical edges column by column. The full-root crop is the identity.
std::vector<double> crop_edge_vector(const EdgeVector& v, const CuGeometry& g);
int crop_length(int width, int height);

}  // namespace qtmtt
