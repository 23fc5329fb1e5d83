#include "qtmtt/rdo_search.hpp"

#include <bit>
#include <chrono>
#include <optional>
#include <sstream>

#include "qtmtt/error.hpp"

namespace qtmtt::rdo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int log2_side(int n) { return std::countr_zero(static_cast<unsigned>(n)) - 2; }  // 4 -> 0 ... 64 -> 4

struct NodeResult {
  double cost = 0.0;
  double distortion = 0.0;
  double rate = 0.0;
  SplitType split = SplitType::kNoSplit;
};

// One memoised search over a single root.
class Search {
 public:
  Search(const Frame& frame, BlockOrigin origin, int qp, const SearchOptions& options,
         const SplitPredictor* predictor, const TopNConfig* topn)
      : ctx_{frame, origin, qp},
        lambda_(codec::lambda_of_qp(qp)),
        limits_(options.limits),
        predictor_(predictor),
        topn_(topn),
        depth_slots_(limits_.capped() ? limits_.max_mtt_depth + 1 : 2),
        memo_(static_cast<std::size_t>(depth_slots_) * kGeometrySlots),
        leaves_(kGeometrySlots) {}

  SearchResult run(const CuGeometry& root) {
    if (!is_valid(root)) fail(ErrorKind::kInvalidArgument, "invalid root geometry " + to_string(root));
    const auto start = Clock::now();
    if (predictor_ != nullptr) {
      const auto t0 = Clock::now();
      edges_ = predictor_->prepare(ctx_);
      stats_.predictor_time += seconds_since(t0);
    }
    const NodeResult& r = solve(root);
    SearchResult out;
    out.rd = RdResult{r.cost, r.distortion, r.rate, stats_.evaluated_nodes, codec::IntraMode::kDc};
    out.tree = build(root);
    stats_.wall_time = seconds_since(start);
    out.stats = stats_;
    return out;
  }

 private:
  static constexpr std::size_t kGeometrySlots = 16 * 16 * 5 * 5;

  static std::size_t geometry_slot(const CuGeometry& g) {
    return ((static_cast<std::size_t>(log2_side(g.width)) * 5 + static_cast<std::size_t>(log2_side(g.height))) * 16 +
            static_cast<std::size_t>(g.y / kCellSize)) *
               16 +
           static_cast<std::size_t>(g.x / kCellSize);
  }

  std::size_t memo_slot(const CuGeometry& g) const {
    const int depth = limits_.capped() ? g.mtt_depth : (g.mtt_ancestor() ? 1 : 0);
    return static_cast<std::size_t>(depth) * kGeometrySlots + geometry_slot(g);
  }

  const RdResult& leaf(const CuGeometry& g) {
    auto& slot = leaves_[geometry_slot(g)];
    if (!slot) {
      slot = codec::rd_cost_leaf(ctx_.frame, ctx_.origin, g, ctx_.qp);
      ++stats_.leaf_evaluations;
    }
    return *slot;
  }

  SplitSet candidates(const CuGeometry& g, SplitSet legal) {
    if (predictor_ == nullptr) return legal;
    const auto t0 = Clock::now();
    const SplitDistribution d = predictor_->predict(ctx_, g, edges_);
    stats_.predictor_time += seconds_since(t0);
    ++stats_.predictor_calls;
    if (!is_valid_distribution(d, legal)) {
      fail(ErrorKind::kMalformedDistribution, "predictor output invalid at " + to_string(g));
    }
    SplitSet chosen;
    for (SplitType s : top_n(d, legal, topn_->n_for(legal.size()))) chosen.insert(s);
    return chosen;
  }

  const NodeResult& solve(const CuGeometry& g) {
    auto& slot = memo_[memo_slot(g)];
    if (slot) return *slot;
    ++stats_.evaluated_nodes;

    const SplitSet legal = legal_splits(g, limits_);
    const SplitSet expand = candidates(g, legal);
    NodeResult best;
    bool have_best = false;
    for (SplitType s : kAllSplitTypes) {
      if (!expand.contains(s)) continue;
      const double bits = signal_bits(s, legal);
      NodeResult r;
      r.split = s;
      if (s == SplitType::kNoSplit) {
        const RdResult& l = leaf(g);
        r.cost = bits * lambda_ + l.cost;
        r.distortion = l.distortion;
        r.rate = bits + l.rate;
      } else {
        double cost = 0.0;
        double distortion = 0.0;
        double rate = 0.0;
        for (const auto& child : child_geometries(g, s, limits_)) {
          const NodeResult& c = solve(child);
          cost += c.cost;
          distortion += c.distortion;
          rate += c.rate;
        }
        r.cost = bits * lambda_ + cost;
        r.distortion = distortion;
        r.rate = bits + rate;
      }
      if (!have_best || r.cost < best.cost) {
        best = r;
        have_best = true;
      }
    }
    slot = best;
    return *slot;
  }

  PartitionTree build(const CuGeometry& g) const {
    const SplitType s = memo_[memo_slot(g)]->split;
    if (s == SplitType::kNoSplit) return PartitionTree(g);
    std::vector<PartitionTree> children;
    for (const auto& child : child_geometries(g, s, limits_)) children.push_back(build(child));
    return PartitionTree(g, s, std::move(children));
  }

  RootContext ctx_;
  double lambda_;
  PartitionLimits limits_;
  const SplitPredictor* predictor_;
  const TopNConfig* topn_;
  int depth_slots_;
  std::vector<std::optional<NodeResult>> memo_;
  std::vector<std::optional<RdResult>> leaves_;
  EdgeVector edges_{};
  SearchStats stats_;
};

RdResult walk(const Frame& frame, BlockOrigin origin, const PartitionTree& node, int qp, double lambda,
              const PartitionLimits& limits) {
  const SplitSet legal = legal_splits(node.geometry(), limits);
  const double bits = signal_bits(node.split_type(), legal);
  RdResult r;
  r.evaluated_nodes = 1;
  if (node.is_leaf()) {
    const RdResult l = codec::rd_cost_leaf(frame, origin, node.geometry(), qp);
    r.cost = bits * lambda + l.cost;
    r.distortion = l.distortion;
    r.rate = bits + l.rate;
    r.best_mode = l.best_mode;
    return r;
  }
  double cost = 0.0;
  for (const auto& c : node.children()) {
    const RdResult cr = walk(frame, origin, c, qp, lambda, limits);
    cost += cr.cost;
    r.distortion += cr.distortion;
    r.rate += cr.rate;
    r.evaluated_nodes += cr.evaluated_nodes;
  }
  r.cost = bits * lambda + cost;
  r.rate += bits;
  return r;
}

}  // namespace

EdgeVector SplitPredictor::prepare(const RootContext&) const { return {}; }

SplitDistribution UniformPredictor::predict(const RootContext&, const CuGeometry& g, const EdgeVector&) const {
  return SplitDistribution::uniform(legal_splits(g, limits_));
}

void OraclePredictor::add_tree(BlockOrigin origin, const PartitionTree& tree) { add_nodes(origin, tree); }

void OraclePredictor::add_nodes(BlockOrigin origin, const PartitionTree& node) {
  const auto& g = node.geometry();
  choices_[Key{origin.x, origin.y, g.x, g.y, g.width, g.height}] = node.split_type();
  for (const auto& c : node.children()) add_nodes(origin, c);
}

SplitDistribution OraclePredictor::predict(const RootContext& ctx, const CuGeometry& g, const EdgeVector&) const {
  const SplitSet legal = legal_splits(g, limits_);
  const auto it = choices_.find(Key{ctx.origin.x, ctx.origin.y, g.x, g.y, g.width, g.height});
  if (it == choices_.end() || !legal.contains(it->second)) return SplitDistribution::uniform(legal);
  return SplitDistribution::one_hot(it->second);
}

TopNConfig::TopNConfig() {
  for (int c = 0; c <= kNumSplitTypes; ++c) n_[static_cast<std::size_t>(c)] = c;
}

TopNConfig TopNConfig::full() { return TopNConfig(); }

TopNConfig TopNConfig::uniform(int n) {
  if (n < 1) fail(ErrorKind::kInvalidArgument, "top-N must be at least 1");
  TopNConfig c;
  for (int k = 1; k <= kNumSplitTypes; ++k) c.n_[static_cast<std::size_t>(k)] = std::min(n, k);
  return c;
}

TopNConfig TopNConfig::parse(std::string_view text) {
  TopNConfig c;
  std::string s(text);
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) fail(ErrorKind::kInvalidArgument, "top-N entry needs 'classes:n': " + item);
    try {
      c.set(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
    } catch (const std::logic_error&) {
      fail(ErrorKind::kInvalidArgument, "bad top-N entry: " + item);
    }
  }
  return c;
}

TopNConfig TopNConfig::preset(std::string_view name) {
  if (name == "C1") return parse("6:3,5:4,4:4,3:3,2:2");
  if (name == "C2") return parse("6:3,5:3,4:3,3:3,2:2");
  if (name == "C3") return parse("6:2,5:3,4:3,3:3,2:2");
  if (name == "C4") return parse("6:2,5:2,4:2,3:2,2:2");
  if (name == "full") return full();
  fail(ErrorKind::kInvalidArgument, "unknown top-N preset " + std::string(name));
}

void TopNConfig::set(int class_count, int n) {
  if (class_count < 2 || class_count > kNumSplitTypes) {
    fail(ErrorKind::kInvalidArgument, "class count must be in [2, 6], got " + std::to_string(class_count));
  }
  if (n < 1 || n > class_count) {
    fail(ErrorKind::kInvalidArgument, "top-N for " + std::to_string(class_count) + " classes must be in [1, " +
                                          std::to_string(class_count) + "], got " + std::to_string(n));
  }
  n_[static_cast<std::size_t>(class_count)] = n;
}

int TopNConfig::n_for(int class_count) const {
  if (class_count < 1 || class_count > kNumSplitTypes) {
    fail(ErrorKind::kInvalidArgument, "class count out of range");
  }
  return n_[static_cast<std::size_t>(class_count)];
}

bool TopNConfig::nested_in(const TopNConfig& other) const {
  for (int c = 1; c <= kNumSplitTypes; ++c) {
    if (n_for(c) > other.n_for(c)) return false;
  }
  return true;
}

std::string TopNConfig::to_string() const {
  std::ostringstream os;
  for (int c = kNumSplitTypes; c >= 2; --c) {
    os << c << ':' << n_for(c) << (c > 2 ? "," : "");
  }
  return os.str();
}

SearchStats& SearchStats::operator+=(const SearchStats& other) {
  evaluated_nodes += other.evaluated_nodes;
  leaf_evaluations += other.leaf_evaluations;
  predictor_calls += other.predictor_calls;
  wall_time += other.wall_time;
  predictor_time += other.predictor_time;
  return *this;
}

double signal_bits(SplitType split, SplitSet legal) {
  if (split != SplitType::kNoSplit) return 2.0;
  return legal.size() > 1 ? 1.0 : 0.0;
}

SearchResult rdo_exhaustive(const Frame& frame, BlockOrigin origin, const CuGeometry& root, int qp,
                            const SearchOptions& options) {
  return Search(frame, origin, qp, options, nullptr, nullptr).run(root);
}

SearchResult rdo_pruned(const Frame& frame, BlockOrigin origin, const CuGeometry& root, int qp,
                        const SplitPredictor& predictor, const TopNConfig& config, const SearchOptions& options) {
  return Search(frame, origin, qp, options, &predictor, &config).run(root);
}

RdResult evaluate_tree(const Frame& frame, BlockOrigin origin, const PartitionTree& tree, int qp,
                       const PartitionLimits& limits) {
  tree.validate(limits);
  return walk(frame, origin, tree, qp, codec::lambda_of_qp(qp), limits);
}

std::string_view to_string(SearchMode mode) {
  return mode == SearchMode::kExhaustive ? "exhaustive" : "pruned";
}

FrameResult encode_frame(const Frame& frame, int qp, const EncodeOptions& options) {
  if (options.mode == SearchMode::kPruned && options.predictor == nullptr) {
    fail(ErrorKind::kInvalidArgument, "pruned encoding requires a predictor");
  }
  const Frame padded = pad_to_multiple(frame, kRootSize);
  FrameResult out;
  out.coded_width = padded.width();
  out.coded_height = padded.height();
  for (int y = 0; y < padded.height(); y += kRootSize) {
    for (int x = 0; x < padded.width(); x += kRootSize) {
      const BlockOrigin origin{x, y};
      SearchResult r = options.mode == SearchMode::kExhaustive
                           ? rdo_exhaustive(padded, origin, root_geometry(), qp, options.search)
                           : rdo_pruned(padded, origin, root_geometry(), qp, *options.predictor, options.topn,
                                        options.search);
      out.total.cost += r.rd.cost;
      out.total.distortion += r.rd.distortion;
      out.total.rate += r.rd.rate;
      out.total.evaluated_nodes += r.rd.evaluated_nodes;
      out.stats += r.stats;
      out.blocks.push_back(BlockResult{origin, std::move(r.tree), r.rd, r.stats});
    }
  }
  return out;
}

}  // namespace qtmtt::rdo
