#include "qtmtt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "qtmtt/error.hpp"

namespace qtmtt::harness {

namespace {

// log10(rate) as a cubic in u = (psnr - center) / scale.
struct CubicFit {
  std::array<double, 4> coef{};
  double center = 0.0;
  double scale = 1.0;

  double antiderivative(double u) const {
    return u * (coef[0] + u * (coef[1] / 2.0 + u * (coef[2] / 3.0 + u * coef[3] / 4.0)));
  }
  // Integral over psnr in [lo, hi].
  double integral(double lo, double hi) const {
    return scale * (antiderivative((hi - center) / scale) - antiderivative((lo - center) / scale));
  }
};

CubicFit fit_cubic(std::span<const RdPoint> pts) {
  CubicFit f;
  double lo = pts[0].psnr;
  double hi = pts[0].psnr;
  for (const RdPoint& p : pts) {
    lo = std::min(lo, p.psnr);
    hi = std::max(hi, p.psnr);
  }
  f.center = (lo + hi) / 2.0;
  f.scale = (hi - lo) / 2.0;
  // Normal equations A^T A c = A^T y, solved by Gaussian elimination.
  std::array<std::array<double, 5>, 4> m{};
  for (const RdPoint& p : pts) {
    const double u = (p.psnr - f.center) / f.scale;
    const double y = std::log10(p.rate);
    std::array<double, 4> pow{1.0, u, u * u, u * u * u};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) m[r][c] += pow[r] * pow[c];
      m[r][4] += pow[r] * y;
    }
  }
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    std::swap(m[col], m[piv]);
    if (std::abs(m[col][col]) < 1e-300) fail(ErrorKind::kInvalidArgument, "RD points do not determine a cubic");
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double k = m[r][col] / m[col][col];
      for (int c = col; c < 5; ++c) m[r][c] -= k * m[col][c];
    }
  }
  for (int r = 0; r < 4; ++r) f.coef[static_cast<std::size_t>(r)] = m[r][4] / m[r][r];
  return f;
}

void check_curve(std::span<const RdPoint> pts, const char* which) {
  if (pts.size() < 4) fail(ErrorKind::kInvalidArgument, std::string(which) + " curve needs at least 4 points");
  std::vector<double> ps;
  for (const RdPoint& p : pts) {
    if (!(p.rate > 0.0) || !std::isfinite(p.rate)) fail(ErrorKind::kInvalidArgument, std::string(which) + " rate");
    if (!std::isfinite(p.psnr)) fail(ErrorKind::kInvalidArgument, std::string(which) + " PSNR is not finite");
    ps.push_back(p.psnr);
  }
  std::sort(ps.begin(), ps.end());
  if (std::adjacent_find(ps.begin(), ps.end()) != ps.end()) {
    fail(ErrorKind::kInvalidArgument, std::string(which) + " curve has duplicate PSNR values");
  }
}

std::pair<double, double> psnr_range(std::span<const RdPoint> pts) {
  auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(),
                                      [](const RdPoint& a, const RdPoint& b) { return a.psnr < b.psnr; });
  return {lo->psnr, hi->psnr};
}

std::uint64_t total_nodes(const RunReport& r) {
  std::uint64_t n = 0;
  for (const QpSummary& q : r.per_qp) n += q.test_stats.evaluated_nodes;
  return n;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

void paint_rect(std::vector<double>& img, int w, int h, int x0, int y0, int rw, int rh, double v, bool add) {
  for (int y = std::max(0, y0); y < std::min(h, y0 + rh); ++y) {
    for (int x = std::max(0, x0); x < std::min(w, x0 + rw); ++x) {
      double& p = img[static_cast<std::size_t>(y * w + x)];
      p = add ? p + v : v;
    }
  }
}

}  // namespace

double delta_et(std::span<const double> ref_times, std::span<const double> test_times) {
  if (ref_times.empty() || ref_times.size() != test_times.size()) {
    fail(ErrorKind::kInvalidArgument, "time vectors must be non-empty and of equal length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < ref_times.size(); ++i) {
    if (!(ref_times[i] > 0.0) || !(test_times[i] > 0.0)) {
      fail(ErrorKind::kInvalidArgument, "encoding times must be positive");
    }
    sum += (ref_times[i] - test_times[i]) / ref_times[i];
  }
  return sum / static_cast<double>(ref_times.size());
}

double psnr(double sse, std::size_t pixels) {
  if (sse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 * static_cast<double>(pixels) / sse);
}

double bd_rate(std::span<const RdPoint> anchor, std::span<const RdPoint> test) {
  check_curve(anchor, "anchor");
  check_curve(test, "test");
  const auto [alo, ahi] = psnr_range(anchor);
  const auto [tlo, thi] = psnr_range(test);
  const double lo = std::max(alo, tlo);
  const double hi = std::min(ahi, thi);
  if (!(hi > lo)) fail(ErrorKind::kInvalidArgument, "RD curves do not overlap in PSNR");
  const CubicFit fa = fit_cubic(anchor);
  const CubicFit ft = fit_cubic(test);
  const double avg = (ft.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
  return 100.0 * (std::pow(10.0, avg) - 1.0);
}

RocCurve roc_from_scores(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) fail(ErrorKind::kInvalidArgument, "scores and labels differ in length");
  RocCurve roc;
  for (bool p : positive) (p ? roc.positives : roc.negatives) += 1;
  if (roc.positives == 0 || roc.negatives == 0) {
    fail(ErrorKind::kInvalidArgument, "ROC needs both positive and negative examples");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double np = static_cast<double>(roc.positives);
  const double nn = static_cast<double>(roc.negatives);
  std::size_t tp = 0;
  std::size_t fp = 0;
  roc.points.push_back({0.0, 0.0});
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (positive[order[i]] ? tp : fp) += 1;
      ++i;
    }
    const RocPoint pt{static_cast<double>(fp) / nn, static_cast<double>(tp) / np};
    const RocPoint& prev = roc.points.back();
    roc.auc += (pt.fpr - prev.fpr) * (pt.tpr + prev.tpr) / 2.0;
    roc.points.push_back(pt);
  }
  return roc;
}

std::vector<int> split_boundary_edges(const CuGeometry& g, SplitType split) {
  const auto children = child_geometries(g, split);
  const int cw = g.width / kCellSize;
  const int ch = g.height / kCellSize;
  const int r0 = g.y / kCellSize;
  const int c0 = g.x / kCellSize;
  std::vector<int> owner(static_cast<std::size_t>(cw * ch), -1);
  for (std::size_t k = 0; k < children.size(); ++k) {
    const CuGeometry& c = children[k];
    for (int r = c.y / kCellSize; r < (c.y + c.height) / kCellSize; ++r) {
      for (int q = c.x / kCellSize; q < (c.x + c.width) / kCellSize; ++q) {
        owner[static_cast<std::size_t>((r - r0) * cw + (q - c0))] = static_cast<int>(k);
      }
    }
  }
  auto own = [&](int r, int c) { return owner[static_cast<std::size_t>((r - r0) * cw + (c - c0))]; };
  std::vector<int> edges;
  for (int r = r0; r < r0 + ch - 1; ++r) {
    for (int c = c0; c < c0 + cw; ++c) {
      if (own(r, c) != own(r + 1, c)) edges.push_back(horizontal_edge_index(r, c));
    }
  }
  for (int c = c0; c < c0 + cw - 1; ++c) {
    for (int r = r0; r < r0 + ch; ++r) {
      if (own(r, c) != own(r, c + 1)) edges.push_back(vertical_edge_index(r, c));
    }
  }
  return edges;
}

double split_score(const EdgeVector& predicted, const CuGeometry& g, SplitType split) {
  const auto edges = split_boundary_edges(g, split);
  double sum = 0.0;
  for (int e : edges) sum += predicted[e];
  return sum / static_cast<double>(edges.size());
}

RocCurve roc_curve(std::span<const data::BlockSample> samples, std::span<const EdgeVector> predictions,
                   SplitType target, int size_id) {
  if (target == SplitType::kNoSplit) fail(ErrorKind::kInvalidArgument, "ROC target must be a split");
  if (samples.size() != predictions.size()) fail(ErrorKind::kShapeMismatch, "one prediction per sample");
  const CuSize size = kCuSizes.at(static_cast<std::size_t>(size_id));
  std::vector<double> scores;
  std::vector<bool> positive;
  std::vector<const PartitionTree*> stack;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    stack.assign(1, &samples[i].tree);
    while (!stack.empty()) {
      const PartitionTree* node = stack.back();
      stack.pop_back();
      for (const PartitionTree& c : node->children()) stack.push_back(&c);
      const CuGeometry& g = node->geometry();
      if (g.width != size.width || g.height != size.height || !legal_splits(g).contains(target)) continue;
      scores.push_back(split_score(predictions[i], g, target));
      positive.push_back(node->split_type() == target);
    }
  }
  return roc_from_scores(scores, positive);
}

TwoStagePredictor::TwoStagePredictor(nn::Model cnn, gbdt::ModelBank bank, PartitionLimits limits)
    : cnn_(std::move(cnn)), bank_(std::move(bank)), limits_(limits) {
  if (cnn_.spec.input_size != data::kPatchSize || cnn_.spec.output_length() != kEdgeCount) {
    fail(ErrorKind::kShapeMismatch, "stage-1 network must map 68x68 patches to 480 edges");
  }
}

EdgeVector TwoStagePredictor::prepare(const rdo::RootContext& ctx) const {
  return nn::predict_edges(cnn_.spec, cnn_.params, data::extract_patch(ctx.frame, ctx.origin), ctx.qp);
}

SplitDistribution TwoStagePredictor::predict(const rdo::RootContext& ctx, const CuGeometry& g,
                                             const EdgeVector& cached) const {
  const auto id = size_index(g.width, g.height);
  const SplitSet legal = legal_splits(g, limits_);
  if (!id) return SplitDistribution::uniform(legal);
  const auto features = gbdt::feature_vector(crop_edge_vector(cached, g), ctx.qp);
  return bank_.models[static_cast<std::size_t>(*id)].predict(features, legal);
}

std::vector<CorpusImage> load_corpus(const std::filesystem::path& dir) {
  std::vector<CorpusImage> out;
  for (const auto& p : data::list_pgm_files(dir)) out.push_back({p.filename().string(), read_pgm(p)});
  return out;
}

DatasetBuild build_dataset(std::span<const CorpusImage> images, std::span<const int> qps,
                           const rdo::SearchOptions& search) {
  DatasetBuild out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto id = static_cast<std::uint32_t>(i);
    out.manifest.push_back({id, content_hash(images[i].frame), images[i].name});
    for (int qp : qps) {
      auto s = data::extract_samples(images[i].frame, qp, id, search);
      std::move(s.begin(), s.end(), std::back_inserter(out.samples));
    }
  }
  return out;
}

CorpusRun run_corpus(std::span<const CorpusImage> images, std::span<const int> qps, const rdo::EncodeOptions& options) {
  CorpusRun run;
  run.qps.assign(qps.begin(), qps.end());
  for (const CorpusImage& img : images) {
    run.names.push_back(img.name);
    std::vector<ImageQpResult> per_qp;
    for (int qp : qps) {
      rdo::FrameResult fr = rdo::encode_frame(img.frame, qp, options);
      ImageQpResult r;
      r.rate = fr.total.rate;
      r.sse = fr.total.distortion;
      r.pixels = static_cast<std::size_t>(fr.coded_width) * static_cast<std::size_t>(fr.coded_height);
      r.stats = fr.stats;
      r.blocks = std::move(fr.blocks);
      per_qp.push_back(std::move(r));
    }
    run.results.push_back(std::move(per_qp));
  }
  return run;
}

RunReport compare_runs(const CorpusRun& anchor, const CorpusRun& test, const std::string& config) {
  if (anchor.qps != test.qps || anchor.names != test.names) {
    fail(ErrorKind::kInvalidArgument, "anchor and test runs cover different images or QPs");
  }
  RunReport rep;
  rep.config = config;
  rep.trees_identical = true;
  std::vector<double> ref_time;
  std::vector<double> test_time;
  std::vector<double> ref_nodes;
  std::vector<double> test_nodes;
  std::vector<RdPoint> anchor_curve;
  std::vector<RdPoint> test_curve;
  double anchor_seconds = 0.0;
  double predictor_seconds = 0.0;
  for (std::size_t q = 0; q < anchor.qps.size(); ++q) {
    QpSummary s;
    s.qp = anchor.qps[q];
    double a_rate = 0.0;
    double a_sse = 0.0;
    double t_rate = 0.0;
    double t_sse = 0.0;
    std::size_t pixels = 0;
    for (std::size_t i = 0; i < anchor.names.size(); ++i) {
      const ImageQpResult& a = anchor.results[i][q];
      const ImageQpResult& t = test.results[i][q];
      a_rate += a.rate;
      a_sse += a.sse;
      t_rate += t.rate;
      t_sse += t.sse;
      pixels += a.pixels;
      s.anchor_stats += a.stats;
      s.test_stats += t.stats;
      for (std::size_t b = 0; b < a.blocks.size() && rep.trees_identical; ++b) {
        if (!(a.blocks[b].tree == t.blocks[b].tree)) rep.trees_identical = false;
      }
    }
    s.anchor = {s.qp, a_rate, psnr(a_sse, pixels)};
    s.test = {s.qp, t_rate, psnr(t_sse, pixels)};
    ref_time.push_back(s.anchor_stats.wall_time);
    test_time.push_back(s.test_stats.wall_time);
    ref_nodes.push_back(static_cast<double>(s.anchor_stats.evaluated_nodes));
    test_nodes.push_back(static_cast<double>(s.test_stats.evaluated_nodes));
    anchor_curve.push_back(s.anchor);
    test_curve.push_back(s.test);
    anchor_seconds += s.anchor_stats.wall_time;
    predictor_seconds += s.test_stats.predictor_time;
    rep.per_qp.push_back(s);
  }
  rep.delta_et = delta_et(ref_time, test_time);
  rep.delta_nodes = delta_et(ref_nodes, test_nodes);
  rep.predictor_overhead = anchor_seconds > 0.0 ? predictor_seconds / anchor_seconds : 0.0;
  try {
    rep.bd_rate_aggregate = bd_rate(anchor_curve, test_curve);
  } catch (const Error&) {
    rep.bd_rate_aggregate = std::numeric_limits<double>::quiet_NaN();
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < anchor.names.size(); ++i) {
    std::vector<RdPoint> a;
    std::vector<RdPoint> t;
    for (std::size_t q = 0; q < anchor.qps.size(); ++q) {
      const ImageQpResult& ar = anchor.results[i][q];
      const ImageQpResult& tr = test.results[i][q];
      a.push_back({anchor.qps[q], ar.rate, psnr(ar.sse, ar.pixels)});
      t.push_back({anchor.qps[q], tr.rate, psnr(tr.sse, tr.pixels)});
    }
    try {
      const double bd = bd_rate(a, t);
      rep.per_image_bd.push_back(bd);
      sum += bd;
    } catch (const Error&) {
      rep.skipped_images.push_back(anchor.names[i]);
    }
  }
  rep.bd_rate = rep.per_image_bd.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : sum / static_cast<double>(rep.per_image_bd.size());
  return rep;
}

data::HardDataset anchor_records(std::span<const CorpusImage> images, const CorpusRun& anchor,
                                 const TwoStagePredictor& predictor) {
  if (images.size() != anchor.names.size()) fail(ErrorKind::kInvalidArgument, "corpus and run differ");
  std::vector<data::BlockSample> samples;
  std::vector<EdgeVector> features;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Frame coded = pad_to_multiple(images[i].frame, kRootSize);
    for (std::size_t q = 0; q < anchor.qps.size(); ++q) {
      for (const rdo::BlockResult& b : anchor.results[i][q].blocks) {
        data::BlockSample s;
        s.qp = anchor.qps[q];
        s.tree = b.tree;
        s.source = {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(samples.size())};
        features.push_back(predictor.prepare(rdo::RootContext{coded, b.origin, s.qp}));
        samples.push_back(std::move(s));
      }
    }
  }
  return data::explode_hard(samples, features);
}

void check_disjoint(std::span<const data::ManifestEntry> training, std::span<const CorpusImage> eval) {
  std::set<std::uint64_t> seen;
  for (const auto& e : training) seen.insert(e.hash);
  for (const CorpusImage& img : eval) {
    if (seen.count(content_hash(img.frame))) {
      fail(ErrorKind::kInvalidArgument, "evaluation image " + img.name + " is part of the training corpus");
    }
  }
}

RunReport evaluate(std::span<const CorpusImage> images, const TwoStagePredictor& predictor,
                   const EvalOptions& options) {
  rdo::EncodeOptions anchor_opt;
  anchor_opt.search = options.search;
  const CorpusRun anchor = run_corpus(images, options.qps, anchor_opt);

  rdo::EncodeOptions test_opt;
  test_opt.mode = rdo::SearchMode::kPruned;
  test_opt.predictor = &predictor;
  test_opt.topn = options.topn;
  test_opt.search = options.search;
  const CorpusRun test = run_corpus(images, options.qps, test_opt);

  RunReport rep = compare_runs(anchor, test, options.topn.to_string());
  if (options.with_accuracy) rep.accuracy = gbdt::top_n_accuracy(predictor.bank(), anchor_records(images, anchor, predictor));
  return rep;
}

std::vector<RunReport> sweep(std::span<const CorpusImage> images, const rdo::SplitPredictor& predictor,
                             std::span<const rdo::TopNConfig> configs, std::span<const int> qps,
                             const rdo::SearchOptions& search) {
  rdo::EncodeOptions anchor_opt;
  anchor_opt.search = search;
  const CorpusRun anchor = run_corpus(images, qps, anchor_opt);
  std::vector<RunReport> out;
  for (const rdo::TopNConfig& cfg : configs) {
    rdo::EncodeOptions opt;
    opt.mode = rdo::SearchMode::kPruned;
    opt.predictor = &predictor;
    opt.topn = cfg;
    opt.search = search;
    out.push_back(compare_runs(anchor, run_corpus(images, qps, opt), cfg.to_string()));
  }
  return out;
}

std::string check_tradeoff(std::span<const RunReport> reports) {
  for (std::size_t i = 1; i < reports.size(); ++i) {
    const RunReport& a = reports[i - 1];
    const RunReport& b = reports[i];
    if (!(total_nodes(b) < total_nodes(a))) {
      return "evaluated nodes do not fall from " + a.config + " (" + std::to_string(total_nodes(a)) + ") to " +
             b.config + " (" + std::to_string(total_nodes(b)) + ")";
    }
    if (!(b.bd_rate >= a.bd_rate - 1e-9)) {
      return "BD-rate falls from " + a.config + " (" + fmt(a.bd_rate) + "%) to " + b.config + " (" +
             fmt(b.bd_rate) + "%)";
    }
  }
  return {};
}

namespace {

// RFC 4180 quoting for fields that carry commas or quotes.
std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string tradeoff_csv(std::span<const RunReport> reports) {
  std::ostringstream os;
  os.precision(10);
  os << "config_id,delta_nodes,delta_et,bd_rate\n";
  for (const RunReport& r : reports) os << csv_field(r.config) << ',' << r.delta_nodes << ',' << r.delta_et << ',' << r.bd_rate << '\n';
  return os.str();
}

std::string detail_csv(std::span<const RunReport> reports) {
  std::ostringstream os;
  os.precision(10);
  os << "config_id,qp,anchor_rate,anchor_psnr,test_rate,test_psnr,anchor_nodes,test_nodes,anchor_time,test_time,"
        "predictor_time\n";
  for (const RunReport& r : reports) {
    for (const QpSummary& q : r.per_qp) {
      os << csv_field(r.config) << ',' << q.qp << ',' << q.anchor.rate << ',' << q.anchor.psnr << ',' << q.test.rate << ','
         << q.test.psnr << ',' << q.anchor_stats.evaluated_nodes << ',' << q.test_stats.evaluated_nodes << ','
         << q.anchor_stats.wall_time << ',' << q.test_stats.wall_time << ',' << q.test_stats.predictor_time << '\n';
    }
  }
  return os.str();
}

std::string summary_text(const RunReport& r) {
  std::ostringstream os;
  os << "config            " << r.config << '\n';
  os << "delta nodes       " << fmt(100.0 * r.delta_nodes, 4) << " %\n";
  os << "delta ET          " << fmt(100.0 * r.delta_et, 4) << " %\n";
  os << "BD-rate           " << fmt(r.bd_rate, 4) << " % (mean of " << r.per_image_bd.size() << " images)\n";
  os << "BD-rate (pooled)  " << fmt(r.bd_rate_aggregate, 4) << " %\n";
  os << "predictor time    " << fmt(100.0 * r.predictor_overhead, 4) << " % of anchor time\n";
  os << "trees identical   " << (r.trees_identical ? "yes" : "no") << '\n';
  if (!r.skipped_images.empty()) {
    os << "skipped (degenerate RD curve):";
    for (const auto& n : r.skipped_images) os << ' ' << n;
    os << '\n';
  }
  os << "qp  anchor_bits  anchor_psnr  test_bits  test_psnr  anchor_nodes  test_nodes\n";
  for (const QpSummary& q : r.per_qp) {
    char line[160];
    std::snprintf(line, sizeof line, "%-3d %12.0f %12.4f %10.0f %10.4f %13llu %11llu\n", q.qp, q.anchor.rate,
                  q.anchor.psnr, q.test.rate, q.test.psnr,
                  static_cast<unsigned long long>(q.anchor_stats.evaluated_nodes),
                  static_cast<unsigned long long>(q.test_stats.evaluated_nodes));
    os << line;
  }
  if (r.accuracy) {
    os << "size   records  top1    top2    top3\n";
    for (int s = 0; s < kNumCuSizes; ++s) {
      const auto& row = r.accuracy->per_size[static_cast<std::size_t>(s)];
      char line[120];
      std::snprintf(line, sizeof line, "%-6s %7zu", size_name(s).c_str(), r.accuracy->records[static_cast<std::size_t>(s)]);
      os << line;
      for (const auto& v : row) os << "  " << (v ? fmt(100.0 * *v, 4) : std::string("-"));
      os << '\n';
    }
    os << "mean         ";
    for (const auto& v : r.accuracy->overall) os << "  " << (v ? fmt(100.0 * *v, 4) : std::string("-"));
    os << '\n';
  }
  return os.str();
}

Frame synthetic_image(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<double> img(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  // Smooth background: a ramp plus one slow wave.
  const double base = uni(60.0, 190.0);
  const double gx = uni(-0.4, 0.4);
  const double gy = uni(-0.4, 0.4);
  const double amp = uni(5.0, 30.0);
  const double fx = uni(0.005, 0.03);
  const double fy = uni(0.005, 0.03);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      img[static_cast<std::size_t>(y * width + x)] =
          base + gx * (x - width / 2.0) + gy * (y - height / 2.0) + amp * std::sin(fx * x + fy * y);
    }
  }

  const int shapes = (width * height) / 2048 + pick(0, 8);
  for (int k = 0; k < shapes; ++k) {
    const int kind = pick(0, 9);
    const int rw = pick(4, std::max(4, width / 3));
    const int rh = pick(4, std::max(4, height / 3));
    const int x0 = pick(-rw / 2, width - rw / 2);
    const int y0 = pick(-rh / 2, height - rh / 2);
    if (kind <= 3) {
      // Flat patch with sharp borders.
      paint_rect(img, width, height, x0, y0, rw, rh, uni(0.0, 255.0), false);
    } else if (kind <= 5) {
      // Stripes along one axis.
      const bool horizontal = pick(0, 1) == 1;
      const int period = 1 << pick(2, 4);
      const double a = uni(15.0, 60.0);
      for (int y = std::max(0, y0); y < std::min(height, y0 + rh); ++y) {
        for (int x = std::max(0, x0); x < std::min(width, x0 + rw); ++x) {
          const int t = horizontal ? y : x;
          img[static_cast<std::size_t>(y * width + x)] += ((t / (period / 2)) % 2 == 0) ? a : -a;
        }
      }
    } else if (kind <= 7) {
      // Noisy texture.
      const double sigma = uni(4.0, 30.0);
      for (int y = std::max(0, y0); y < std::min(height, y0 + rh); ++y) {
        for (int x = std::max(0, x0); x < std::min(width, x0 + rw); ++x) {
          img[static_cast<std::size_t>(y * width + x)] += sigma * noise(rng);
        }
      }
    } else {
      // Straight edge at a random angle through the patch.
      const double ang = uni(0.0, 3.14159265358979);
      const double c = std::cos(ang);
      const double s = std::sin(ang);
      const double step = uni(-80.0, 80.0);
      const double cx = x0 + rw / 2.0;
      const double cy = y0 + rh / 2.0;
      for (int y = std::max(0, y0); y < std::min(height, y0 + rh); ++y) {
        for (int x = std::max(0, x0); x < std::min(width, x0 + rw); ++x) {
          if ((x - cx) * c + (y - cy) * s > 0.0) img[static_cast<std::size_t>(y * width + x)] += step;
        }
      }
    }
  }

  std::vector<std::uint8_t> luma(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    luma[i] = static_cast<std::uint8_t>(std::clamp(std::lround(img[i]), 0L, 255L));
  }
  return Frame(width, height, std::move(luma));
}

std::vector<std::filesystem::path> make_corpus(const std::filesystem::path& dir, int count, int width, int height,
                                               std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%03d.pgm", i);
    const auto path = dir / name;
    write_pgm(path, synthetic_image(width, height, seed + static_cast<std::uint64_t>(i)));
    out.push_back(path);
  }
  return out;
}

}  // namespace qtmtt::harness
