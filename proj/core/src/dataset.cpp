#include "qtmtt/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "binary_io.hpp"
#include "qtmtt/error.hpp"

namespace qtmtt::data {

namespace {

constexpr std::string_view kMagic = "QTMT";
constexpr std::size_t kBitmapBytes = kEdgeCount / 8;

// Keeps `target` of `members` (indices into some list) chosen uniformly,
// returned in ascending order.
std::vector<std::size_t> subsample(std::vector<std::size_t> members, std::size_t target,
                                   std::seed_seq& seq) {
  if (members.size() <= target) return members;
  std::mt19937_64 rng(seq);
  std::shuffle(members.begin(), members.end(), rng);
  members.resize(target);
  std::sort(members.begin(), members.end());
  return members;
}

std::size_t median_count(std::vector<std::size_t> counts) {
  std::erase(counts, 0);
  if (counts.empty()) return 0;
  std::sort(counts.begin(), counts.end());
  return counts[counts.size() / 2];
}

void add_records(const PartitionTree& node, const EdgeVector& features, const BlockSample& s, HardDataset& out) {
  const CuGeometry& g = node.geometry();
  if (const auto id = size_index(g.width, g.height)) {
    HardRecord r;
    r.geometry = g;
    r.size_id = *id;
    r.features = crop_edge_vector(features, g);
    r.qp = s.qp;
    r.label = node.split_type();
    r.source = s.source;
    out[static_cast<std::size_t>(*id)].push_back(std::move(r));
  }
  for (const PartitionTree& c : node.children()) add_records(c, features, s, out);
}

PartitionTree read_tree(io::ByteReader& r, const CuGeometry& g) {
  const std::uint8_t code = r.u8();
  if (code >= kNumSplitTypes) fail(ErrorKind::kCorrupt, "invalid split code " + std::to_string(code));
  const auto split = static_cast<SplitType>(code);
  if (split == SplitType::kNoSplit) return PartitionTree(g);
  if (!legal_splits(g).contains(split)) {
    fail(ErrorKind::kCorrupt, "illegal split " + std::string(to_string(split)) + " at " + to_string(g));
  }
  std::vector<PartitionTree> children;
  for (const CuGeometry& c : child_geometries(g, split)) children.push_back(read_tree(r, c));
  return PartitionTree(g, split, std::move(children));
}

}  // namespace

Patch extract_patch(const Frame& frame, rdo::BlockOrigin origin) {
  Patch p;
  for (int j = 0; j < kPatchSize; ++j) {
    const int y = origin.y - kContext + j;
    for (int i = 0; i < kPatchSize; ++i) {
      const int x = origin.x - kContext + i;
      const bool inside = x >= 0 && y >= 0 && x < frame.width() && y < frame.height();
      p[static_cast<std::size_t>(j * kPatchSize + i)] = inside ? frame.at(x, y) : kUnavailableSample;
    }
  }
  return p;
}

std::vector<BlockSample> extract_samples(const Frame& frame, int qp, std::uint32_t image_id,
                                         const rdo::SearchOptions& options) {
  const Frame coded = pad_to_multiple(frame, kRootSize);
  std::vector<BlockSample> out;
  std::uint32_t tile = 0;
  for (int y = 0; y < coded.height(); y += kRootSize) {
    for (int x = 0; x < coded.width(); x += kRootSize) {
      const rdo::BlockOrigin origin{x, y};
      BlockSample s;
      s.pixels = extract_patch(coded, origin);
      s.qp = qp;
      s.tree = rdo::rdo_exhaustive(coded, origin, root_geometry(), qp, options).tree;
      s.soft_label = tree_to_edge_vector(s.tree);
      s.source = {image_id, tile++};
      out.push_back(std::move(s));
    }
  }
  return out;
}

DepthClass depth_class(const EdgeVector& soft_label) {
  const int e = soft_label.active_count();
  if (e == 0) return {0};
  // 1-8 -> 1, 9-16 -> 2, 17-32 -> 3, ... 257-480 -> 7.
  const int k = std::bit_width(static_cast<unsigned>(e - 1));
  return {std::clamp(k - 2, 1, kNumDepthClasses - 1)};
}

std::vector<BlockSample> balance_soft(const std::vector<BlockSample>& samples, const SoftBalanceOptions& options) {
  std::map<std::pair<int, int>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    cells[{samples[i].qp, depth_class(samples[i].soft_label).index}].push_back(i);
  }
  std::size_t target = options.per_class_target;
  if (target == 0) {
    std::vector<std::size_t> counts;
    for (const auto& [key, members] : cells) counts.push_back(members.size());
    target = median_count(counts);
  }
  if (options.per_qp_target > 0) target = std::min(target, options.per_qp_target / kNumDepthClasses);

  std::vector<std::size_t> keep;
  for (auto& [key, members] : cells) {
    std::seed_seq seq{options.seed, options.seed >> 32, static_cast<std::uint64_t>(key.first), static_cast<std::uint64_t>(key.second)};
    const auto kept = subsample(members, target, seq);
    keep.insert(keep.end(), kept.begin(), kept.end());
  }
  std::sort(keep.begin(), keep.end());
  std::vector<BlockSample> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(samples[i]);
  return out;
}

HardDataset explode_hard(const std::vector<BlockSample>& samples, std::span<const EdgeVector> edge_features) {
  if (!edge_features.empty() && edge_features.size() != samples.size()) {
    fail(ErrorKind::kShapeMismatch, "need one feature vector per sample");
  }
  HardDataset out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const EdgeVector& f = edge_features.empty() ? samples[i].soft_label : edge_features[i];
    add_records(samples[i].tree, f, samples[i], out);
  }
  return out;
}

std::size_t total_records(const HardDataset& d) {
  std::size_t n = 0;
  for (const auto& v : d) n += v.size();
  return n;
}

HardDataset balance_hard(const HardDataset& records, const HardBalanceOptions& options) {
  HardDataset out;
  for (std::size_t s = 0; s < records.size(); ++s) {
    const auto& in = records[s];
    std::map<std::pair<int, int>, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < in.size(); ++i) cells[{index_of(in[i].label), in[i].qp}].push_back(i);
    std::size_t target = options.per_cell_target;
    if (target == 0) {
      std::vector<std::size_t> counts;
      for (const auto& [key, members] : cells) counts.push_back(members.size());
      target = median_count(counts);
    }
    std::vector<std::size_t> keep;
    for (auto& [key, members] : cells) {
      std::seed_seq seq{options.seed, options.seed >> 32, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(key.first),
                        static_cast<std::uint64_t>(key.second)};
      const auto kept = subsample(members, target, seq);
      keep.insert(keep.end(), kept.begin(), kept.end());
    }
    std::sort(keep.begin(), keep.end());
    for (std::size_t i : keep) out[s].push_back(in[i]);
  }
  return out;
}

std::vector<std::uint8_t> encode_dataset(std::span<const BlockSample> samples) {
  io::ByteWriter w;
  io::begin_format(w, kMagic, kDatasetVersion);
  w.u64(samples.size());
  for (const BlockSample& s : samples) {
    if (s.qp < codec::kMinQp || s.qp > codec::kMaxQp) fail(ErrorKind::kInvalidArgument, "qp out of range");
    if (s.tree.geometry() != root_geometry()) fail(ErrorKind::kInvalidArgument, "sample tree must be rooted at 64x64");
    w.u8(static_cast<std::uint8_t>(s.qp));
    w.bytes(s.pixels.data(), s.pixels.size());
    std::array<std::uint8_t, kBitmapBytes> bitmap{};
    for (int i = 0; i < kEdgeCount; ++i) {
      if (s.soft_label[i] >= 0.5) bitmap[static_cast<std::size_t>(i / 8)] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
    w.bytes(bitmap.data(), bitmap.size());
    for (SplitType t : s.tree.preorder()) w.u8(static_cast<std::uint8_t>(index_of(t)));
    w.u32(s.source.image);
    w.u32(s.source.tile);
  }
  return w.take();
}

std::vector<BlockSample> decode_dataset(std::span<const std::uint8_t> bytes) {
  io::ByteReader r = io::open_format(bytes, kMagic, kDatasetVersion, "dataset");
  const std::uint64_t count = r.u64();
  // Smallest record: qp, pixels, bitmap, one split byte, source.
  constexpr std::size_t kMinRecord = 1 + kPatchPixels + kBitmapBytes + 1 + 8;
  if (count > r.remaining() / kMinRecord) fail(ErrorKind::kTruncated, "record count exceeds file size");

  std::vector<BlockSample> out;
  out.reserve(count);
  for (std::uint64_t n = 0; n < count; ++n) {
    BlockSample s;
    s.qp = r.u8();
    if (s.qp > codec::kMaxQp) fail(ErrorKind::kCorrupt, "qp out of range in record " + std::to_string(n));
    auto px = r.bytes(kPatchPixels);
    std::copy(px.begin(), px.end(), s.pixels.begin());
    auto bitmap = r.bytes(kBitmapBytes);
    for (int i = 0; i < kEdgeCount; ++i) s.soft_label[i] = (bitmap[static_cast<std::size_t>(i / 8)] >> (i % 8)) & 1u;
    s.tree = read_tree(r, root_geometry());
    s.source.image = r.u32();
    s.source.tile = r.u32();
    if (tree_to_edge_vector(s.tree) != s.soft_label) {
      fail(ErrorKind::kCorrupt, "soft label disagrees with tree in record " + std::to_string(n));
    }
    out.push_back(std::move(s));
  }
  if (r.remaining() != 0) fail(ErrorKind::kCorrupt, "trailing bytes after last record");
  return out;
}

void write_dataset(const std::filesystem::path& path, std::span<const BlockSample> samples) {
  io::write_file(path, encode_dataset(samples));
}

std::vector<BlockSample> read_dataset(const std::filesystem::path& path) { return decode_dataset(io::read_file(path)); }

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot create " + path.string());
  for (const ManifestEntry& e : entries) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(e.hash));
    out << e.image_id << '\t' << hex << '\t' << e.name << '\n';
  }
  if (!out) fail(ErrorKind::kIo, "write failed: " + path.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string hex;
    if (!(ls >> e.image_id >> hex)) fail(ErrorKind::kCorrupt, "bad manifest line: " + line);
    e.hash = std::stoull(hex, nullptr, 16);
    std::getline(ls >> std::ws, e.name);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::filesystem::path> list_pgm_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorKind::kIo, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace qtmtt::data
