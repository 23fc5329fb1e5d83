#include "qtmtt/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "binary_io.hpp"
#include "qtmtt/error.hpp"

namespace qtmtt::gbdt {

namespace {

constexpr std::string_view kMagic = "QTDT";
constexpr double kMinHessian = 1e-12;
constexpr int kMaxHalvings = 30;

SplitSet size_classes(int size_id) {
  const CuSize s = kCuSizes.at(static_cast<std::size_t>(size_id));
  return legal_splits(CuGeometry{0, 0, s.width, s.height, 0});
}

int expected_features(int size_id) {
  const CuSize s = kCuSizes.at(static_cast<std::size_t>(size_id));
  return crop_length(s.width, s.height) + 1;
}

RegressionTree constant_tree(float value) { return RegressionTree{{TreeNode{-1, 0.0f, -1, -1, value}}}; }

// Row-major scores with a softmax restricted to each row's legal classes.
void softmax_rows(const std::vector<double>& scores, const std::vector<std::uint8_t>& legal, std::vector<double>& p) {
  const std::size_t n = legal.size();
  p.assign(n * kNumSplitTypes, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* s = &scores[i * kNumSplitTypes];
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kNumSplitTypes; ++k) {
      if ((legal[i] >> k) & 1u) mx = std::max(mx, s[k]);
    }
    double z = 0.0;
    for (int k = 0; k < kNumSplitTypes; ++k) {
      if ((legal[i] >> k) & 1u) {
        p[i * kNumSplitTypes + static_cast<std::size_t>(k)] = std::exp(s[k] - mx);
        z += p[i * kNumSplitTypes + static_cast<std::size_t>(k)];
      }
    }
    for (int k = 0; k < kNumSplitTypes; ++k) p[i * kNumSplitTypes + static_cast<std::size_t>(k)] /= z;
  }
}

double mean_cross_entropy(const std::vector<double>& scores, const std::vector<std::uint8_t>& legal,
                          const std::vector<int>& labels) {
  std::vector<double> p;
  softmax_rows(scores, legal, p);
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double q = p[i * kNumSplitTypes + static_cast<std::size_t>(labels[i])];
    sum -= std::log(std::max(q, std::numeric_limits<double>::min()));
  }
  return sum / static_cast<double>(labels.size());
}

// Exact greedy regression-tree fit on presorted columns, grown level by
// level. Rows with node id -1 do not take part.
class TreeBuilder {
 public:
  TreeBuilder(const std::vector<double>& x, const std::vector<std::vector<std::uint32_t>>& sorted, std::size_t n_rows,
              const TrainOptions& opt)
      : x_(x), sorted_(sorted), n_(n_rows), opt_(opt) {}

  RegressionTree build(const std::vector<double>& g, const std::vector<double>& h, std::vector<int> node_of) {
    RegressionTree tree;
    tree.nodes.push_back(TreeNode{});
    std::vector<int> open = {0};
    std::vector<NodeStats> stats(1);
    for (std::size_t i = 0; i < n_; ++i) {
      if (node_of[i] >= 0) stats[0].add(g[i], h[i]);
    }
    for (int depth = 0; depth < opt_.max_depth && !open.empty(); ++depth) {
      std::vector<Candidate> best(tree.nodes.size());
      find_splits(g, h, node_of, stats, best);
      std::vector<int> next_open;
      for (int id : open) {
        const Candidate& c = best[static_cast<std::size_t>(id)];
        if (c.feature < 0) continue;
        const auto left = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes[static_cast<std::size_t>(id)].feature = c.feature;
        tree.nodes[static_cast<std::size_t>(id)].threshold = c.threshold;
        tree.nodes[static_cast<std::size_t>(id)].left = left;
        tree.nodes[static_cast<std::size_t>(id)].right = left + 1;
        tree.nodes.push_back(TreeNode{});
        tree.nodes.push_back(TreeNode{});
        stats.push_back(c.left);
        NodeStats right = stats[static_cast<std::size_t>(id)];
        right.remove(c.left);
        stats.push_back(right);
        next_open.push_back(left);
        next_open.push_back(left + 1);
      }
      if (next_open.empty()) break;
      for (std::size_t i = 0; i < n_; ++i) {
        const int id = node_of[i];
        if (id < 0) continue;
        const TreeNode& nd = tree.nodes[static_cast<std::size_t>(id)];
        if (nd.feature < 0) continue;
        node_of[i] = x_[col(nd.feature) + i] <= static_cast<double>(nd.threshold) ? nd.left : nd.right;
      }
      open = std::move(next_open);
    }
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      TreeNode& nd = tree.nodes[id];
      if (nd.feature >= 0) continue;
      const NodeStats& s = stats[id];
      nd.value = static_cast<float>(-s.g / (s.h + opt_.l2));
    }
    return tree;
  }

 private:
  struct NodeStats {
    double g = 0.0;
    double h = 0.0;
    std::size_t count = 0;
    void add(double gi, double hi) {
      g += gi;
      h += hi;
      ++count;
    }
    void remove(const NodeStats& o) {
      g -= o.g;
      h -= o.h;
      count -= o.count;
    }
  };

  struct Candidate {
    double gain = 0.0;
    std::int32_t feature = -1;
    float threshold = 0.0f;
    NodeStats left;
  };

  struct Scan {
    NodeStats left;
    double last = 0.0;
    bool seen = false;
  };

  std::size_t col(int f) const { return static_cast<std::size_t>(f) * n_; }

  double score(const NodeStats& s) const { return s.g * s.g / (s.h + opt_.l2); }

  void find_splits(const std::vector<double>& g, const std::vector<double>& h, const std::vector<int>& node_of,
                   const std::vector<NodeStats>& stats, std::vector<Candidate>& best) const {
    const auto min_leaf = static_cast<std::size_t>(std::max(1, opt_.min_samples_leaf));
    std::vector<Scan> scan(best.size());
    for (std::size_t f = 0; f < sorted_.size(); ++f) {
      std::fill(scan.begin(), scan.end(), Scan{});
      const double* xf = &x_[col(static_cast<int>(f))];
      for (std::uint32_t i : sorted_[f]) {
        const int id = node_of[i];
        if (id < 0) continue;
        Scan& sc = scan[static_cast<std::size_t>(id)];
        const double v = xf[i];
        if (sc.seen && v > sc.last && sc.left.count >= min_leaf) {
          const NodeStats& total = stats[static_cast<std::size_t>(id)];
          if (total.count - sc.left.count >= min_leaf) {
            NodeStats right = total;
            right.remove(sc.left);
            const double gain = score(sc.left) + score(right) - score(total);
            Candidate& b = best[static_cast<std::size_t>(id)];
            if (gain > b.gain + 1e-12) {
              if (const auto t = separating_threshold(sc.last, v)) {
                b = Candidate{gain, static_cast<std::int32_t>(f), *t, sc.left};
              }
            }
          }
        }
        sc.left.add(g[i], h[i]);
        sc.last = v;
        sc.seen = true;
      }
    }
  }

  // A float t with lo <= t < hi, if one exists.
  static std::optional<float> separating_threshold(double lo, double hi) {
    float t = static_cast<float>(lo + (hi - lo) / 2.0);
    const float inf = std::numeric_limits<float>::infinity();
    while (static_cast<double>(t) >= hi) t = std::nextafter(t, -inf);
    while (static_cast<double>(t) < lo) t = std::nextafter(t, inf);
    if (static_cast<double>(t) >= hi) return std::nullopt;
    return t;
  }

  const std::vector<double>& x_;
  const std::vector<std::vector<std::uint32_t>>& sorted_;
  std::size_t n_;
  const TrainOptions& opt_;
};

void check_records(int size_id, std::span<const data::HardRecord> records) {
  if (size_id < 0 || size_id >= kNumCuSizes) fail(ErrorKind::kInvalidArgument, "bad size id");
  const CuSize s = kCuSizes[static_cast<std::size_t>(size_id)];
  const auto n_crop = static_cast<std::size_t>(crop_length(s.width, s.height));
  for (const data::HardRecord& r : records) {
    if (r.size_id != size_id || r.geometry.width != s.width || r.geometry.height != s.height) {
      fail(ErrorKind::kInvalidArgument, "record of another size in the " + size_name(size_id) + " set");
    }
    if (r.features.size() != n_crop) fail(ErrorKind::kShapeMismatch, "record feature length");
    if (!legal_splits(r.geometry).contains(r.label)) {
      fail(ErrorKind::kInvalidArgument, "record label illegal at " + to_string(r.geometry));
    }
  }
}

void check_tree(const RegressionTree& t, int feature_length) {
  if (t.nodes.empty()) fail(ErrorKind::kCorrupt, "empty tree");
  const auto n = static_cast<std::int32_t>(t.nodes.size());
  for (std::int32_t i = 0; i < n; ++i) {
    const TreeNode& nd = t.nodes[static_cast<std::size_t>(i)];
    if (nd.feature < 0) {
      if (nd.feature != -1 || !std::isfinite(nd.value)) fail(ErrorKind::kCorrupt, "bad leaf");
      continue;
    }
    if (nd.feature >= feature_length) fail(ErrorKind::kCorrupt, "tree feature index out of range");
    if (nd.left <= i || nd.right <= i || nd.left >= n || nd.right >= n || !std::isfinite(nd.threshold)) {
      fail(ErrorKind::kCorrupt, "bad tree node links");
    }
  }
}

}  // namespace

double RegressionTree::evaluate(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const TreeNode& nd = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= static_cast<double>(nd.threshold)
                                     ? nd.left
                                     : nd.right);
  }
  return nodes[i].value;
}

std::array<double, kNumSplitTypes> BoostedModel::logits(std::span<const double> features) const {
  if (features.size() != static_cast<std::size_t>(feature_length)) {
    fail(ErrorKind::kShapeMismatch, size_name(size_id) + " model expects " + std::to_string(feature_length) +
                                        " features, got " + std::to_string(features.size()));
  }
  std::array<double, kNumSplitTypes> z{};
  for (const auto& round : trees) {
    for (int k = 0; k < kNumSplitTypes; ++k) z[static_cast<std::size_t>(k)] += round[static_cast<std::size_t>(k)].evaluate(features);
  }
  return z;
}

SplitDistribution BoostedModel::predict(std::span<const double> features, SplitSet legal) const {
  const auto z = logits(features);
  const double mx = *std::max_element(z.begin(), z.end());
  SplitDistribution d;
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    d.probs[k] = std::exp(z[k] - mx);
    sum += d.probs[k];
  }
  for (double& p : d.probs) p /= sum;
  return mask_and_normalize(d, legal);
}

BoostedModel empty_model(int size_id) {
  if (size_id < 0 || size_id >= kNumCuSizes) fail(ErrorKind::kInvalidArgument, "bad size id");
  BoostedModel m;
  m.size_id = size_id;
  m.feature_length = expected_features(size_id);
  return m;
}

ModelBank::ModelBank() {
  for (int i = 0; i < kNumCuSizes; ++i) models[static_cast<std::size_t>(i)] = empty_model(i);
}

std::vector<double> feature_vector(std::span<const double> crop, int qp) {
  std::vector<double> f(crop.begin(), crop.end());
  f.push_back(static_cast<double>(qp));
  return f;
}

std::vector<double> feature_vector(const data::HardRecord& record) { return feature_vector(record.features, record.qp); }

SplitDistribution predict(const ModelBank& bank, const CuGeometry& g, std::span<const double> features) {
  const auto id = size_index(g.width, g.height);
  if (!id) fail(ErrorKind::kInvalidArgument, "no classifier for " + to_string(g));
  return bank.models[static_cast<std::size_t>(*id)].predict(features, legal_splits(g));
}

BoostedModel train_model(int size_id, std::span<const data::HardRecord> records, const TrainOptions& options,
                         TrainReport* report) {
  if (records.empty()) fail(ErrorKind::kInvalidArgument, "no training records for " + size_name(size_id));
  if (options.rounds < 0 || options.max_depth < 0 || !(options.shrinkage >= 0.0) || !(options.l2 >= 0.0) ||
      !(options.subsample > 0.0 && options.subsample <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "bad boosting options");
  }
  check_records(size_id, records);

  BoostedModel model = empty_model(size_id);
  model.shrinkage = static_cast<float>(options.shrinkage);
  const std::size_t n = records.size();
  const auto n_feat = static_cast<std::size_t>(model.feature_length);

  std::vector<double> x(n_feat * n);
  std::vector<std::uint8_t> legal(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = feature_vector(records[i]);
    for (std::size_t j = 0; j < n_feat; ++j) x[j * n + i] = f[j];
    legal[i] = legal_splits(records[i].geometry).bits();
    labels[i] = index_of(records[i].label);
  }
  std::vector<std::vector<std::uint32_t>> sorted(n_feat, std::vector<std::uint32_t>(n));
  for (std::size_t j = 0; j < n_feat; ++j) {
    std::iota(sorted[j].begin(), sorted[j].end(), 0u);
    const double* col = &x[j * n];
    std::stable_sort(sorted[j].begin(), sorted[j].end(), [col](std::uint32_t a, std::uint32_t b) {
      return col[a] < col[b];
    });
  }

  const SplitSet trained = size_classes(size_id);
  std::vector<double> scores(n * kNumSplitTypes, 0.0);
  double loss = mean_cross_entropy(scores, legal, labels);
  if (report) report->loss = {loss};

  TreeBuilder builder(x, sorted, n, options);
  std::mt19937_64 rng(options.seed);
  std::bernoulli_distribution keep_row(options.subsample);
  std::vector<double> p;
  std::vector<double> g(n);
  std::vector<double> h(n);
  std::vector<double> row(n_feat);

  for (int round = 0; round < options.rounds; ++round) {
    softmax_rows(scores, legal, p);
    std::vector<bool> in_round(n, true);
    if (options.subsample < 1.0) {
      for (std::size_t i = 0; i < n; ++i) in_round[i] = keep_row(rng);
    }
    std::array<RegressionTree, kNumSplitTypes> fitted;
    for (int k = 0; k < kNumSplitTypes; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      if (!trained.contains(static_cast<SplitType>(k))) {
        fitted[ks] = constant_tree(0.0f);
        continue;
      }
      std::vector<int> node_of(n, -1);
      for (std::size_t i = 0; i < n; ++i) {
        if (!in_round[i] || !((legal[i] >> k) & 1u)) continue;
        const double pk = p[i * kNumSplitTypes + ks];
        g[i] = pk - (labels[i] == k ? 1.0 : 0.0);
        h[i] = std::max(pk * (1.0 - pk), kMinHessian);
        node_of[i] = 0;
      }
      fitted[ks] = builder.build(g, h, std::move(node_of));
    }

    // Bake the step into the leaves and back off until the loss does not rise.
    double scale = options.shrinkage;
    std::array<RegressionTree, kNumSplitTypes> step;
    std::vector<double> next(scores.size());
    double next_loss = loss;
    bool accepted = false;
    for (int attempt = 0; attempt <= kMaxHalvings && !accepted; ++attempt, scale /= 2.0) {
      step = fitted;
      for (auto& t : step) {
        for (TreeNode& nd : t.nodes) {
          if (nd.feature < 0) nd.value = static_cast<float>(nd.value * scale);
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n_feat; ++j) row[j] = x[j * n + i];
        for (std::size_t k = 0; k < kNumSplitTypes; ++k) {
          next[i * kNumSplitTypes + k] = scores[i * kNumSplitTypes + k] + step[k].evaluate(row);
        }
      }
      next_loss = mean_cross_entropy(next, legal, labels);
      accepted = next_loss <= loss;
    }
    if (!accepted) {
      for (auto& t : step) t = constant_tree(0.0f);
      next = scores;
      next_loss = loss;
    }
    scores = std::move(next);
    loss = next_loss;
    model.trees.push_back(std::move(step));
    if (report) report->loss.push_back(loss);
  }
  return model;
}

double cross_entropy(const BoostedModel& model, std::span<const data::HardRecord> records) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const data::HardRecord& r : records) {
    const auto d = model.predict(feature_vector(r), legal_splits(r.geometry));
    sum -= std::log(std::max(d[r.label], std::numeric_limits<double>::min()));
  }
  return sum / static_cast<double>(records.size());
}

int class_count(int size_id) { return size_classes(size_id).size(); }

AccuracyReport top_n_accuracy(const ModelBank& bank, const data::HardDataset& records) {
  AccuracyReport rep;
  std::map<int, std::array<std::pair<double, int>, AccuracyReport::kMaxN>> sums;
  std::array<std::pair<double, int>, AccuracyReport::kMaxN> all{};
  for (int s = 0; s < kNumCuSizes; ++s) {
    const auto& recs = records[static_cast<std::size_t>(s)];
    rep.records[static_cast<std::size_t>(s)] = recs.size();
    if (recs.empty()) continue;
    const int classes = class_count(s);
    std::array<std::size_t, AccuracyReport::kMaxN> hits{};
    for (const data::HardRecord& r : recs) {
      const SplitSet legal = legal_splits(r.geometry);
      const auto d = bank.models[static_cast<std::size_t>(s)].predict(feature_vector(r), legal);
      const auto ranked = top_n(d, legal, legal.size());
      const auto pos = static_cast<std::size_t>(std::find(ranked.begin(), ranked.end(), r.label) - ranked.begin());
      for (std::size_t k = pos; k < AccuracyReport::kMaxN; ++k) ++hits[k];
    }
    for (int k = 0; k < AccuracyReport::kMaxN; ++k) {
      if (k + 1 >= classes && k > 0) continue;
      const double acc = static_cast<double>(hits[static_cast<std::size_t>(k)]) / static_cast<double>(recs.size());
      rep.per_size[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)] = acc;
      auto& cell = sums[classes][static_cast<std::size_t>(k)];
      cell.first += acc;
      ++cell.second;
      all[static_cast<std::size_t>(k)].first += acc;
      ++all[static_cast<std::size_t>(k)].second;
    }
  }
  for (const auto& [classes, cells] : sums) {
    AccuracyReport::Row row{};
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (cells[k].second > 0) row[k] = cells[k].first / cells[k].second;
    }
    rep.by_class_count[classes] = row;
  }
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (all[k].second > 0) rep.overall[k] = all[k].first / all[k].second;
  }
  return rep;
}

std::vector<std::uint8_t> encode_bank(const ModelBank& bank) {
  io::ByteWriter w;
  io::begin_format(w, kMagic, kBankVersion);
  w.u32(kNumCuSizes);
  for (const BoostedModel& m : bank.models) {
    w.u32(static_cast<std::uint32_t>(m.size_id));
    w.u32(static_cast<std::uint32_t>(m.feature_length));
    w.u32(static_cast<std::uint32_t>(m.rounds()));
    w.f32(m.shrinkage);
    for (const auto& round : m.trees) {
      for (const RegressionTree& t : round) {
        w.u32(static_cast<std::uint32_t>(t.nodes.size()));
        for (const TreeNode& nd : t.nodes) {
          w.i32(nd.feature);
          w.f32(nd.threshold);
          w.i32(nd.left);
          w.i32(nd.right);
          w.f32(nd.value);
        }
      }
    }
  }
  return w.take();
}

ModelBank decode_bank(std::span<const std::uint8_t> bytes) {
  io::ByteReader r = io::open_format(bytes, kMagic, kBankVersion, "model bank");
  const std::uint32_t count = r.u32();
  if (count != kNumCuSizes) {
    fail(ErrorKind::kMissingModel, "model bank holds " + std::to_string(count) + " models, expected 16");
  }
  ModelBank bank;
  for (int s = 0; s < kNumCuSizes; ++s) {
    BoostedModel m;
    m.size_id = static_cast<int>(r.u32());
    if (m.size_id != s) fail(ErrorKind::kMissingModel, "model for " + size_name(s) + " missing");
    m.feature_length = static_cast<int>(r.u32());
    if (m.feature_length != expected_features(s)) fail(ErrorKind::kShapeMismatch, "feature length of " + size_name(s));
    const std::uint32_t rounds = r.u32();
    m.shrinkage = r.f32();
    // Each round needs at least six one-node trees.
    if (rounds > r.remaining() / (kNumSplitTypes * 24)) fail(ErrorKind::kTruncated, "model bank is truncated");
    m.trees.resize(rounds);
    for (auto& round : m.trees) {
      for (RegressionTree& t : round) {
        const std::uint32_t nodes = r.u32();
        if (nodes > r.remaining() / 20) fail(ErrorKind::kTruncated, "model bank is truncated");
        t.nodes.resize(nodes);
        for (TreeNode& nd : t.nodes) {
          nd.feature = r.i32();
          nd.threshold = r.f32();
          nd.left = r.i32();
          nd.right = r.i32();
          nd.value = r.f32();
        }
        check_tree(t, m.feature_length);
      }
    }
    bank.models[static_cast<std::size_t>(s)] = std::move(m);
  }
  if (r.remaining() != 0) fail(ErrorKind::kCorrupt, "trailing bytes in model bank");
  return bank;
}

void save_bank(const std::filesystem::path& path, const ModelBank& bank) { io::write_file(path, encode_bank(bank)); }

ModelBank load_bank(const std::filesystem::path& path) { return decode_bank(io::read_file(path)); }

}  // namespace qtmtt::gbdt
