#include "qtmtt/partition.hpp"

#include <algorithm>
#include <sstream>

#include "qtmtt/error.hpp"

namespace qtmtt {

namespace {

constexpr std::array<std::string_view, kNumSplitTypes> kSplitNames = {"NS",  "QT",  "BTH",
                                                                      "BTV", "TTH", "TTV"};

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

void append_preorder(const PartitionTree& t, std::vector<SplitType>& out) {
  out.push_back(t.split_type());
  for (const auto& c : t.children()) append_preorder(c, out);
}

PartitionTree build_preorder(const CuGeometry& g, std::span<const SplitType> splits,
                             std::size_t& cursor, const PartitionLimits& limits) {
  if (cursor >= splits.size()) fail(ErrorKind::kCorrupt, "preorder split stream ended early");
  const SplitType s = splits[cursor++];
  if (index_of(s) < 0 || index_of(s) >= kNumSplitTypes) {
    fail(ErrorKind::kCorrupt, "split byte out of range");
  }
  if (!legal_splits(g, limits).contains(s)) {
    fail(ErrorKind::kIllegalSplit, std::string(to_string(s)) + " at " + to_string(g));
  }
  if (s == SplitType::kNoSplit) return PartitionTree(g);
  std::vector<PartitionTree> children;
  for (const auto& cg : child_geometries(g, s, limits)) {
    children.push_back(build_preorder(cg, splits, cursor, limits));
  }
  return PartitionTree(g, s, std::move(children));
}

void format_node(const PartitionTree& t, int depth, std::ostringstream& os) {
  const auto& g = t.geometry();
  os << std::string(static_cast<std::size_t>(2 * depth), ' ') << g.x << ',' << g.y << ','
     << g.width << 'x' << g.height << ' ' << to_string(t.split_type()) << '\n';
  for (const auto& c : t.children()) format_node(c, depth + 1, os);
}

void collect_leaves(const PartitionTree& t, std::vector<CuGeometry>& out) {
  if (t.is_leaf()) {
    out.push_back(t.geometry());
    return;
  }
  for (const auto& c : t.children()) collect_leaves(c, out);
}

}  // namespace

std::string_view to_string(SplitType s) { return kSplitNames[static_cast<std::size_t>(index_of(s))]; }

std::optional<SplitType> parse_split_type(std::string_view name) {
  for (int i = 0; i < kNumSplitTypes; ++i) {
    if (kSplitNames[static_cast<std::size_t>(i)] == name) return static_cast<SplitType>(i);
  }
  return std::nullopt;
}

CuGeometry root_geometry(int size) { return CuGeometry{0, 0, size, size, 0}; }

bool is_valid(const CuGeometry& g) {
  if (!is_pow2(g.width) || !is_pow2(g.height)) return false;
  if (g.width < kCellSize || g.height < kCellSize) return false;
  if (g.width > kRootSize || g.height > kRootSize) return false;
  if (g.x < 0 || g.y < 0 || g.x % kCellSize != 0 || g.y % kCellSize != 0) return false;
  if (g.x + g.width > kRootSize || g.y + g.height > kRootSize) return false;
  return g.mtt_depth >= 0;
}

std::string to_string(const CuGeometry& g) {
  std::ostringstream os;
  os << '(' << g.x << ',' << g.y << ' ' << g.width << 'x' << g.height;
  if (g.mtt_ancestor()) os << " mtt" << g.mtt_depth;
  os << ')';
  return os.str();
}

std::vector<SplitType> SplitSet::to_vector() const {
  std::vector<SplitType> out;
  for (SplitType s : kAllSplitTypes) {
    if (contains(s)) out.push_back(s);
  }
  return out;
}

SplitSet legal_splits(const CuGeometry& g, const PartitionLimits& limits) {
  SplitSet set;
  set.insert(SplitType::kNoSplit);
  const int w = g.width;
  const int h = g.height;
  if (w == h && w >= 16 && !g.mtt_ancestor()) set.insert(SplitType::kQuad);
  const bool mtt_allowed =
      w <= 32 && h <= 32 && (!limits.capped() || g.mtt_depth < limits.max_mtt_depth);
  if (mtt_allowed) {
    if (h >= 8) set.insert(SplitType::kBinaryH);
    if (w >= 8) set.insert(SplitType::kBinaryV);
    if (h >= 16) set.insert(SplitType::kTernaryH);
    if (w >= 16) set.insert(SplitType::kTernaryV);
  }
  return set;
}

int child_count(SplitType split) {
  switch (split) {
    case SplitType::kNoSplit: return 0;
    case SplitType::kQuad: return 4;
    case SplitType::kBinaryH:
    case SplitType::kBinaryV: return 2;
    case SplitType::kTernaryH:
    case SplitType::kTernaryV: return 3;
  }
  return 0;
}

std::vector<CuGeometry> child_geometries(const CuGeometry& g, SplitType split,
                                         const PartitionLimits& limits) {
  if (split == SplitType::kNoSplit || !legal_splits(g, limits).contains(split)) {
    fail(ErrorKind::kIllegalSplit, std::string(to_string(split)) + " at " + to_string(g));
  }
  const int x = g.x;
  const int y = g.y;
  const int w = g.width;
  const int h = g.height;
  const int d = g.mtt_depth + 1;
  switch (split) {
    case SplitType::kQuad: {
      const int hw = w / 2;
      const int hh = h / 2;
      return {{x, y, hw, hh, g.mtt_depth},
              {x + hw, y, hw, hh, g.mtt_depth},
              {x, y + hh, hw, hh, g.mtt_depth},
              {x + hw, y + hh, hw, hh, g.mtt_depth}};
    }
    case SplitType::kBinaryH:
      return {{x, y, w, h / 2, d}, {x, y + h / 2, w, h / 2, d}};
    case SplitType::kBinaryV:
      return {{x, y, w / 2, h, d}, {x + w / 2, y, w / 2, h, d}};
    case SplitType::kTernaryH:
      return {{x, y, w, h / 4, d}, {x, y + h / 4, w, h / 2, d}, {x, y + 3 * h / 4, w, h / 4, d}};
    case SplitType::kTernaryV:
      return {{x, y, w / 4, h, d}, {x + w / 4, y, w / 2, h, d}, {x + 3 * w / 4, y, w / 4, h, d}};
    case SplitType::kNoSplit: break;
  }
  return {};
}

int np_length(int block_size) {
  if (block_size != 8 && block_size != 16 && block_size != 32 && block_size != 64) {
    fail(ErrorKind::kInvalidArgument, "np_length: unsupported block size " + std::to_string(block_size));
  }
  return (block_size / 2) * (block_size / 4 - 1);
}

std::optional<int> size_index(int width, int height) {
  for (int i = 0; i < kNumCuSizes; ++i) {
    if (kCuSizes[static_cast<std::size_t>(i)] == CuSize{width, height}) return i;
  }
  return std::nullopt;
}

std::string size_name(int size_id) {
  const auto& s = kCuSizes.at(static_cast<std::size_t>(size_id));
  return std::to_string(s.width) + "x" + std::to_string(s.height);
}

PartitionTree::PartitionTree(CuGeometry geometry) : geometry_(geometry) {}

PartitionTree::PartitionTree(CuGeometry geometry, SplitType split, std::vector<PartitionTree> children)
    : geometry_(geometry), split_(split), children_(std::move(children)) {}

PartitionTree PartitionTree::split(CuGeometry geometry, SplitType split, const PartitionLimits& limits) {
  if (split == SplitType::kNoSplit) return PartitionTree(geometry);
  std::vector<PartitionTree> children;
  for (const auto& cg : child_geometries(geometry, split, limits)) children.emplace_back(cg);
  return PartitionTree(geometry, split, std::move(children));
}

std::size_t PartitionTree::node_count() const {
  std::size_t n = 1;
  for (const auto& c : children_) n += c.node_count();
  return n;
}

std::vector<CuGeometry> PartitionTree::leaves() const {
  std::vector<CuGeometry> out;
  collect_leaves(*this, out);
  return out;
}

std::vector<SplitType> PartitionTree::preorder() const {
  std::vector<SplitType> out;
  append_preorder(*this, out);
  return out;
}

PartitionTree PartitionTree::from_preorder(const CuGeometry& root, std::span<const SplitType> splits,
                                           const PartitionLimits& limits) {
  std::size_t cursor = 0;
  PartitionTree t = build_preorder(root, splits, cursor, limits);
  if (cursor != splits.size()) fail(ErrorKind::kCorrupt, "trailing bytes after preorder split stream");
  return t;
}

void PartitionTree::validate(const PartitionLimits& limits) const {
  if (!is_valid(geometry_)) fail(ErrorKind::kInvalidArgument, "invalid geometry " + to_string(geometry_));
  if (!legal_splits(geometry_, limits).contains(split_)) {
    fail(ErrorKind::kIllegalSplit, std::string(to_string(split_)) + " at " + to_string(geometry_));
  }
  if (split_ == SplitType::kNoSplit) {
    if (!children_.empty()) fail(ErrorKind::kCorrupt, "NS node with children at " + to_string(geometry_));
    return;
  }
  const auto expected = child_geometries(geometry_, split_, limits);
  if (expected.size() != children_.size()) {
    fail(ErrorKind::kCorrupt, "child count mismatch at " + to_string(geometry_));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (children_[i].geometry() != expected[i]) {
      fail(ErrorKind::kCorrupt, "child geometry mismatch at " + to_string(geometry_));
    }
    children_[i].validate(limits);
  }
}

std::string format_tree(const PartitionTree& tree) {
  std::ostringstream os;
  format_node(tree, 0, os);
  return os.str();
}

bool EdgeVector::is_binary() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

int EdgeVector::active_count() const {
  return static_cast<int>(std::count_if(values.begin(), values.end(), [](double v) { return v >= 0.5; }));
}

EdgeVector tree_to_edge_vector(const PartitionTree& tree) {
  if (tree.geometry() != root_geometry()) {
    fail(ErrorKind::kInvalidArgument, "edge vector requires a tree rooted at the full 64x64 block");
  }
  std::array<int, kGridCells * kGridCells> owner{};
  int id = 0;
  for (const auto& leaf : tree.leaves()) {
    for (int r = leaf.y / kCellSize; r < (leaf.y + leaf.height) / kCellSize; ++r) {
      for (int c = leaf.x / kCellSize; c < (leaf.x + leaf.width) / kCellSize; ++c) {
        owner[static_cast<std::size_t>(r * kGridCells + c)] = id;
      }
    }
    ++id;
  }
  auto at = [&](int r, int c) { return owner[static_cast<std::size_t>(r * kGridCells + c)]; };
  EdgeVector v;
  for (int r = 0; r + 1 < kGridCells; ++r) {
    for (int c = 0; c < kGridCells; ++c) {
      v[horizontal_edge_index(r, c)] = at(r, c) != at(r + 1, c) ? 1.0 : 0.0;
    }
  }
  for (int c = 0; c + 1 < kGridCells; ++c) {
    for (int r = 0; r < kGridCells; ++r) {
      v[vertical_edge_index(r, c)] = at(r, c) != at(r, c + 1) ? 1.0 : 0.0;
    }
  }
  return v;
}

LeafMap edge_vector_to_leaf_map(const EdgeVector& v) {
  LeafMap map;
  map.labels.fill(-1);
  std::vector<int> stack;
  for (int start = 0; start < kGridCells * kGridCells; ++start) {
    if (map.labels[static_cast<std::size_t>(start)] >= 0) continue;
    const int label = map.component_count++;
    map.labels[static_cast<std::size_t>(start)] = label;
    stack.assign(1, start);
    while (!stack.empty()) {
      const int cell = stack.back();
      stack.pop_back();
      const int r = cell / kGridCells;
      const int c = cell % kGridCells;
      auto visit = [&](int nr, int nc, int edge) {
        const auto n = static_cast<std::size_t>(nr * kGridCells + nc);
        if (v[edge] == 0.0 && map.labels[n] < 0) {
          map.labels[n] = label;
          stack.push_back(static_cast<int>(n));
        }
      };
      if (r > 0) visit(r - 1, c, horizontal_edge_index(r - 1, c));
      if (r + 1 < kGridCells) visit(r + 1, c, horizontal_edge_index(r, c));
      if (c > 0) visit(r, c - 1, vertical_edge_index(r, c - 1));
      if (c + 1 < kGridCells) visit(r, c + 1, vertical_edge_index(r, c));
    }
  }
  return map;
}

bool leaf_map_matches(const LeafMap& map, const std::vector<CuGeometry>& leaves) {
  if (static_cast<int>(leaves.size()) != map.component_count) return false;
  std::vector<int> seen(leaves.size(), 0);
  std::size_t covered = 0;
  for (const auto& leaf : leaves) {
    const int label = map.at(leaf.y / kCellSize, leaf.x / kCellSize);
    if (label < 0 || static_cast<std::size_t>(label) >= seen.size() || seen[static_cast<std::size_t>(label)]) {
      return false;
    }
    seen[static_cast<std::size_t>(label)] = 1;
    for (int r = leaf.y / kCellSize; r < (leaf.y + leaf.height) / kCellSize; ++r) {
      for (int c = leaf.x / kCellSize; c < (leaf.x + leaf.width) / kCellSize; ++c) {
        if (map.at(r, c) != label) return false;
        ++covered;
      }
    }
  }
  return covered == static_cast<std::size_t>(kGridCells * kGridCells);
}

int crop_length(int width, int height) {
  const int cw = width / kCellSize;
  const int ch = height / kCellSize;
  return cw * (ch - 1) + ch * (cw - 1);
}

std::vector<double> crop_edge_vector(const EdgeVector& v, const CuGeometry& g) {
  const int c0 = g.x / kCellSize;
  const int r0 = g.y / kCellSize;
  const int cw = g.width / kCellSize;
  const int ch = g.height / kCellSize;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(crop_length(g.width, g.height)));
  for (int r = r0; r < r0 + ch - 1; ++r) {
    for (int c = c0; c < c0 + cw; ++c) out.push_back(v[horizontal_edge_index(r, c)]);
  }
  for (int c = c0; c < c0 + cw - 1; ++c) {
    for (int r = r0; r < r0 + ch; ++r) out.push_back(v[vertical_edge_index(r, c)]);
  }
  return out;
}

}  // namespace qtmtt
