#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qtmtt/dataset.hpp"
#include "qtmtt/error.hpp"
#include "qtmtt/gbdt.hpp"
#include "qtmtt/harness.hpp"
#include "qtmtt/nn.hpp"
#include "qtmtt/partition.hpp"
#include "qtmtt/rdo_search.hpp"

namespace fs = std::filesystem;
using namespace qtmtt;

namespace {

using KeyValues = std::map<std::string, std::string>;

// "key = value" lines; '#' starts a comment.
KeyValues read_config(const std::string& path) {
  KeyValues kv;
  if (path.empty()) return kv;
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open config " + path);
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::kInvalidArgument, path + ":" + std::to_string(n) + ": expected key=value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::string take(KeyValues& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) return {};
  std::string v = it->second;
  kv.erase(it);
  return v;
}

void reject_unknown(const KeyValues& kv, const std::string& command) {
  if (!kv.empty()) fail(ErrorKind::kInvalidArgument, "unknown config key '" + kv.begin()->first + "' for " + command);
}

std::vector<int> parse_qps(const std::string& text) {
  std::vector<int> qps;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int qp = -1;
    try {
      qp = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || qp < codec::kMinQp || qp > codec::kMaxQp) {
      fail(ErrorKind::kInvalidArgument, "bad QP '" + item + "'");
    }
    qps.push_back(qp);
  }
  if (qps.empty()) fail(ErrorKind::kInvalidArgument, "empty QP list");
  return qps;
}

rdo::TopNConfig parse_topn(const std::string& text) {
  if (text.size() == 2 && text[0] == 'C') return rdo::TopNConfig::preset(text);
  if (text == "full") return rdo::TopNConfig::full();
  return rdo::TopNConfig::parse(text);
}

std::vector<harness::CorpusImage> load_inputs(const std::vector<std::string>& inputs) {
  std::vector<harness::CorpusImage> images;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      auto dir = harness::load_corpus(in);
      for (auto& img : dir) images.push_back(std::move(img));
    } else {
      images.push_back({fs::path(in).filename().string(), read_pgm(in)});
    }
  }
  if (images.empty()) fail(ErrorKind::kInvalidArgument, "no input images");
  return images;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorKind::kIo, "write failed for " + path);
}

fs::path manifest_path(const fs::path& dataset) {
  fs::path m = dataset;
  m += ".manifest.tsv";
  return m;
}

harness::TwoStagePredictor load_predictor(const std::string& weights, const std::string& bank) {
  if (weights.empty() || bank.empty()) fail(ErrorKind::kInvalidArgument, "pruned search needs --weights and --bank");
  return harness::TwoStagePredictor(nn::load_weights(weights), gbdt::load_bank(bank));
}

struct Shared {
  std::string qps;
  std::uint64_t seed = 0;
  std::string config;
  bool seed_set = false;
};

void add_shared(CLI::App* cmd, Shared& s) {
  cmd->add_option("--qps", s.qps, "Comma-separated QP list")->default_str("22,27,32,37");
  cmd->add_option("--seed", s.seed, "Random seed");
  cmd->add_option("--config", s.config, "key=value configuration file");
}

// Flags win over the config file.
std::vector<int> resolve_qps(const Shared& s, KeyValues& kv) {
  const std::string from_config = take(kv, "qps");
  if (!s.qps.empty()) return parse_qps(s.qps);
  if (!from_config.empty()) return parse_qps(from_config);
  return {harness::kTestQps.begin(), harness::kTestQps.end()};
}

std::uint64_t resolve_seed(const Shared& s, KeyValues& kv) {
  const std::string v = take(kv, "seed");
  if (s.seed_set || v.empty()) return s.seed;
  return std::stoull(v);
}

// ---- encode

struct EncodeArgs {
  Shared shared;
  std::vector<std::string> inputs;
  std::string mode = "exhaustive";
  std::string topn;
  std::string report;
  std::string dump_tree;
  std::string weights;
  std::string bank;
};

int run_encode(EncodeArgs& a) {
  KeyValues kv = read_config(a.shared.config);
  const auto qps = resolve_qps(a.shared, kv);
  std::string topn_text = take(kv, "topn");
  if (!a.topn.empty()) topn_text = a.topn;
  reject_unknown(kv, "encode");

  rdo::EncodeOptions opt;
  std::optional<harness::TwoStagePredictor> predictor;
  if (a.mode == "pruned") {
    predictor.emplace(load_predictor(a.weights, a.bank));
    opt.mode = rdo::SearchMode::kPruned;
    opt.predictor = &*predictor;
    opt.topn = parse_topn(topn_text.empty() ? "C2" : topn_text);
  } else if (a.mode != "exhaustive") {
    fail(ErrorKind::kInvalidArgument, "mode must be exhaustive or pruned");
  }

  const auto images = load_inputs(a.inputs);
  std::ostringstream csv;
  csv.precision(10);
  csv << "image,qp,mode,topn,rate_bits,sse,psnr,evaluated_nodes,wall_time,predictor_time\n";
  std::ostringstream trees;
  for (const auto& img : images) {
    for (int qp : qps) {
      const auto r = rdo::encode_frame(img.frame, qp, opt);
      const std::size_t pixels = static_cast<std::size_t>(r.coded_width) * static_cast<std::size_t>(r.coded_height);
      csv << img.name << ',' << qp << ',' << rdo::to_string(opt.mode) << ','
          << '"' << (opt.mode == rdo::SearchMode::kPruned ? opt.topn.to_string() : "full") << "\"," << r.total.rate << ','
          << r.total.distortion << ',' << harness::psnr(r.total.distortion, pixels) << ',' << r.stats.evaluated_nodes
          << ',' << r.stats.wall_time << ',' << r.stats.predictor_time << '\n';
      std::cerr << img.name << " qp " << qp << ": " << r.total.rate << " bits, psnr "
                << harness::psnr(r.total.distortion, pixels) << ", " << r.stats.evaluated_nodes << " nodes\n";
      if (!a.dump_tree.empty()) {
        for (const auto& b : r.blocks) {
          trees << "# " << img.name << " qp " << qp << " root " << b.origin.x << ',' << b.origin.y << '\n'
                << format_tree(b.tree);
        }
      }
    }
  }
  write_text(a.report, csv.str());
  if (!a.dump_tree.empty()) write_text(a.dump_tree, trees.str());
  return 0;
}

// ---- dataset

struct DatasetArgs {
  Shared shared;
  std::string images;
  std::string out;
  bool balance = false;
  std::size_t per_class = 0;
  std::size_t per_qp = 0;
};

int run_dataset(DatasetArgs& a) {
  KeyValues kv = read_config(a.shared.config);
  const auto qps = resolve_qps(a.shared, kv);
  const auto seed = resolve_seed(a.shared, kv);
  if (auto v = take(kv, "per_class_target"); !v.empty() && a.per_class == 0) a.per_class = std::stoull(v);
  if (auto v = take(kv, "per_qp_target"); !v.empty() && a.per_qp == 0) a.per_qp = std::stoull(v);
  reject_unknown(kv, "dataset");

  const auto images = harness::load_corpus(a.images);
  std::cerr << "labelling " << images.size() << " images at " << qps.size() << " QPs\n";
  auto build = harness::build_dataset(images, qps);
  std::cerr << build.samples.size() << " samples\n";
  if (a.balance) {
    data::SoftBalanceOptions b;
    b.per_class_target = a.per_class;
    b.per_qp_target = a.per_qp;
    b.seed = seed;
    build.samples = data::balance_soft(build.samples, b);
    std::cerr << build.samples.size() << " samples after balancing\n";
  }
  data::write_dataset(a.out, build.samples);
  data::write_manifest(manifest_path(a.out), build.manifest);
  return 0;
}

// ---- train-cnn

struct TrainCnnArgs {
  Shared shared;
  std::string dataset;
  std::string out;
  std::string curve;
  double validation = 0.1;
};

int run_train_cnn(TrainCnnArgs& a) {
  KeyValues kv = read_config(a.shared.config);
  if (a.shared.seed_set) kv["seed"] = std::to_string(a.shared.seed);
  take(kv, "qps");
  nn::NetSpec spec = nn::NetSpec::desk();
  nn::TrainConfig cfg;
  nn::apply_overrides(kv, spec, cfg);

  const auto samples = data::read_dataset(a.dataset);
  std::set<std::uint32_t> ids;
  for (const auto& s : samples) ids.insert(s.source.image);
  // Whole images go to validation, the last ones by id.
  const auto n_val = static_cast<std::size_t>(a.validation * static_cast<double>(ids.size()));
  std::set<std::uint32_t> val_ids;
  for (auto it = ids.rbegin(); it != ids.rend() && val_ids.size() < n_val; ++it) val_ids.insert(*it);
  std::vector<nn::Example> train_set;
  std::vector<nn::Example> val_set;
  for (const auto& s : samples) (val_ids.count(s.source.image) ? val_set : train_set).push_back(nn::to_example(s));
  std::cerr << train_set.size() << " training and " << val_set.size() << " validation examples, "
            << spec.param_count() << " parameters\n";

  std::ostringstream curve;
  curve << "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  auto on_epoch = [&](const nn::EpochReport& r) {
    curve << r.epoch << ',' << r.train.loss << ',' << r.train.binary_accuracy << ',';
    if (r.has_validation) curve << r.validation.loss << ',' << r.validation.binary_accuracy;
    else curve << ',';
    curve << '\n';
    std::fprintf(stderr, "epoch %3d  loss %.4f  acc %.4f", r.epoch, r.train.loss, r.train.binary_accuracy);
    if (r.has_validation) std::fprintf(stderr, "  val loss %.4f  val acc %.4f", r.validation.loss, r.validation.binary_accuracy);
    std::fprintf(stderr, "\n");
  };
  const auto result = nn::train(spec, nn::init_params(spec, cfg.seed), train_set, val_set, cfg, on_epoch);
  nn::save_weights(a.out, spec, result.params);
  if (!a.curve.empty()) write_text(a.curve, curve.str());
  return 0;
}

// ---- train-dt

struct TrainDtArgs {
  Shared shared;
  std::string dataset;
  std::string weights;
  bool teacher_forcing = false;
  std::string out;
  bool balance = false;
  gbdt::TrainOptions options;
};

void apply_dt_config(KeyValues& kv, gbdt::TrainOptions& o) {
  if (auto v = take(kv, "rounds"); !v.empty()) o.rounds = std::stoi(v);
  if (auto v = take(kv, "shrinkage"); !v.empty()) o.shrinkage = std::stod(v);
  if (auto v = take(kv, "max_depth"); !v.empty()) o.max_depth = std::stoi(v);
  if (auto v = take(kv, "min_samples_leaf"); !v.empty()) o.min_samples_leaf = std::stoi(v);
  if (auto v = take(kv, "l2"); !v.empty()) o.l2 = std::stod(v);
  if (auto v = take(kv, "subsample"); !v.empty()) o.subsample = std::stod(v);
}

int run_train_dt(TrainDtArgs& a, const CLI::App& cmd) {
  if (a.teacher_forcing == !a.weights.empty()) {
    fail(ErrorKind::kInvalidArgument, "give exactly one of --weights and --teacher-forcing");
  }
  KeyValues kv = read_config(a.shared.config);
  take(kv, "qps");
  gbdt::TrainOptions from_file;
  apply_dt_config(kv, from_file);
  const auto seed = resolve_seed(a.shared, kv);
  reject_unknown(kv, "train-dt");
  // Config values apply where no flag was given.
  if (cmd.count("--rounds") == 0) a.options.rounds = from_file.rounds;
  if (cmd.count("--shrinkage") == 0) a.options.shrinkage = from_file.shrinkage;
  if (cmd.count("--max-depth") == 0) a.options.max_depth = from_file.max_depth;
  if (cmd.count("--min-samples-leaf") == 0) a.options.min_samples_leaf = from_file.min_samples_leaf;
  if (cmd.count("--l2") == 0) a.options.l2 = from_file.l2;
  if (cmd.count("--subsample") == 0) a.options.subsample = from_file.subsample;
  a.options.seed = seed;

  const auto samples = data::read_dataset(a.dataset);
  data::HardDataset hard;
  if (a.teacher_forcing) {
    hard = data::explode_hard(samples);
  } else {
    const auto model = nn::load_weights(a.weights);
    std::vector<EdgeVector> features;
    features.reserve(samples.size());
    for (const auto& s : samples) features.push_back(nn::predict_edges(model.spec, model.params, s.pixels, s.qp));
    hard = data::explode_hard(samples, features);
  }
  if (a.balance) hard = data::balance_hard(hard, {.per_cell_target = 0, .seed = seed});

  gbdt::ModelBank bank;
  for (int id = 0; id < kNumCuSizes; ++id) {
    const auto& recs = hard[static_cast<std::size_t>(id)];
    if (recs.empty()) {
      std::cerr << size_name(id) << ": no records, uniform model\n";
      continue;
    }
    gbdt::TrainReport rep;
    bank.models[static_cast<std::size_t>(id)] = gbdt::train_model(id, recs, a.options, &rep);
    std::fprintf(stderr, "%-6s %7zu records  loss %.4f -> %.4f\n", size_name(id).c_str(), recs.size(),
                 rep.loss.front(), rep.loss.back());
  }
  gbdt::save_bank(a.out, bank);
  return 0;
}

// ---- eval

struct EvalArgs {
  Shared shared;
  std::string images;
  std::string weights;
  std::string bank;
  std::string topn;
  std::string manifest;
  std::string report;
  std::string summary;
  std::string roc;
};

int run_eval(EvalArgs& a) {
  KeyValues kv = read_config(a.shared.config);
  harness::EvalOptions opt;
  opt.qps = resolve_qps(a.shared, kv);
  std::string topn_text = take(kv, "topn");
  if (!a.topn.empty()) topn_text = a.topn;
  if (!topn_text.empty()) opt.topn = parse_topn(topn_text);
  reject_unknown(kv, "eval");

  const auto images = harness::load_corpus(a.images);
  if (!a.manifest.empty()) {
    harness::check_disjoint(data::read_manifest(a.manifest), images);
  } else {
    std::cerr << "warning: no --manifest given, train/eval disjointness not checked\n";
  }
  const auto predictor = load_predictor(a.weights, a.bank);
  const auto rep = harness::evaluate(images, predictor, opt);
  write_text(a.summary, harness::summary_text(rep));
  if (!a.report.empty()) write_text(a.report, harness::detail_csv(std::vector<harness::RunReport>{rep}));

  if (!a.roc.empty()) {
    const auto build = harness::build_dataset(images, opt.qps);
    std::vector<EdgeVector> preds;
    for (const auto& s : build.samples) {
      preds.push_back(nn::predict_edges(predictor.cnn().spec, predictor.cnn().params, s.pixels, s.qp));
    }
    std::ostringstream csv;
    csv << "size,split,auc,fpr,tpr\n";
    for (int id : {0, 1, 8}) {
      for (SplitType s : legal_splits(CuGeometry{0, 0, kCuSizes[static_cast<std::size_t>(id)].width,
                                                 kCuSizes[static_cast<std::size_t>(id)].height, 0})
                             .to_vector()) {
        if (s == SplitType::kNoSplit) continue;
        harness::RocCurve c;
        try {
          c = harness::roc_curve(build.samples, preds, s, id);
        } catch (const Error&) {
          continue;  // one class only
        }
        for (const auto& p : c.points) {
          csv << size_name(id) << ',' << to_string(s) << ',' << c.auc << ',' << p.fpr << ',' << p.tpr << '\n';
        }
      }
    }
    write_text(a.roc, csv.str());
  }
  return 0;
}

// ---- sweep

struct SweepArgs {
  Shared shared;
  std::string images;
  std::string weights;
  std::string bank;
  std::vector<std::string> configs{"C1", "C2", "C3", "C4"};
  std::string manifest;
  std::string out;
  std::string detail;
  std::string gnuplot;
};

int run_sweep(SweepArgs& a) {
  KeyValues kv = read_config(a.shared.config);
  const auto qps = resolve_qps(a.shared, kv);
  reject_unknown(kv, "sweep");
  const auto images = harness::load_corpus(a.images);
  if (!a.manifest.empty()) harness::check_disjoint(data::read_manifest(a.manifest), images);
  const auto predictor = load_predictor(a.weights, a.bank);
  std::vector<rdo::TopNConfig> configs;
  for (const auto& c : a.configs) configs.push_back(parse_topn(c));
  auto reports = harness::sweep(images, predictor, configs, qps);
  for (std::size_t i = 0; i < reports.size(); ++i) reports[i].config = a.configs[i];
  write_text(a.out, harness::tradeoff_csv(reports));
  if (!a.detail.empty()) write_text(a.detail, harness::detail_csv(reports));
  if (!a.gnuplot.empty()) {
    std::ostringstream dat;
    dat << "# delta_nodes(%) bd_rate(%) config\n";
    for (const auto& r : reports) dat << 100.0 * r.delta_nodes << ' ' << r.bd_rate << ' ' << r.config << '\n';
    write_text(a.gnuplot, dat.str());
  }
  const std::string problem = harness::check_tradeoff(reports);
  if (!problem.empty()) std::cerr << "trade-off not monotone: " << problem << '\n';
  return 0;
}

// ---- make-corpus

struct CorpusArgs {
  std::string out;
  int count = 10;
  int width = 128;
  int height = 128;
  std::uint64_t seed = 0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QT-MTT partition search with learned split pruning"};
  app.require_subcommand(1);

  EncodeArgs enc;
  auto* c_enc = app.add_subcommand("encode", "Encode PGM images and report rate, PSNR and search effort");
  add_shared(c_enc, enc.shared);
  c_enc->add_option("--input", enc.inputs, "PGM files or directories")->required();
  c_enc->add_option("--mode", enc.mode, "exhaustive or pruned")->check(CLI::IsMember({"exhaustive", "pruned"}));
  c_enc->add_option("--topn", enc.topn, "C1..C4, full, or e.g. 6:3,5:3,4:3,3:3,2:2");
  c_enc->add_option("--weights", enc.weights, "Stage-1 network weights");
  c_enc->add_option("--bank", enc.bank, "Stage-2 model bank");
  c_enc->add_option("--report", enc.report, "CSV report (stdout when omitted)");
  c_enc->add_option("--dump-tree", enc.dump_tree, "Write the partition trees here ('-' for stdout)");

  DatasetArgs ds;
  auto* c_ds = app.add_subcommand("dataset", "Label 64x64 blocks by exhaustive search");
  add_shared(c_ds, ds.shared);
  c_ds->add_option("--images", ds.images, "Directory of PGM images")->required();
  c_ds->add_option("--out", ds.out, "Dataset file")->required();
  c_ds->add_flag("--balance", ds.balance, "Balance (depth class, QP) cells");
  c_ds->add_option("--per-class", ds.per_class, "Samples per cell (0: median cell)");
  c_ds->add_option("--per-qp", ds.per_qp, "Samples per QP, split evenly over depth classes");

  TrainCnnArgs tc;
  auto* c_tc = app.add_subcommand("train-cnn", "Train the stage-1 edge network");
  add_shared(c_tc, tc.shared);
  c_tc->add_option("--dataset", tc.dataset, "Dataset file")->required();
  c_tc->add_option("--out", tc.out, "Weights file")->required();
  c_tc->add_option("--curve", tc.curve, "Learning curve CSV");
  c_tc->add_option("--validation", tc.validation, "Fraction of images held out")->check(CLI::Range(0.0, 0.9));

  TrainDtArgs td;
  auto* c_td = app.add_subcommand("train-dt", "Train the stage-2 split classifiers");
  add_shared(c_td, td.shared);
  c_td->add_option("--dataset", td.dataset, "Dataset file")->required();
  c_td->add_option("--weights", td.weights, "Stage-1 weights providing the features");
  c_td->add_flag("--teacher-forcing", td.teacher_forcing, "Use ground-truth edge vectors as features");
  c_td->add_option("--out", td.out, "Model bank file")->required();
  c_td->add_flag("--balance", td.balance, "Balance (label, QP) cells per size");
  c_td->add_option("--rounds", td.options.rounds)->check(CLI::Range(0, 100000));
  c_td->add_option("--shrinkage", td.options.shrinkage)->check(CLI::Range(1e-6, 1.0));
  c_td->add_option("--max-depth", td.options.max_depth)->check(CLI::Range(1, 16));
  c_td->add_option("--min-samples-leaf", td.options.min_samples_leaf)->check(CLI::Range(1, 1000000));
  c_td->add_option("--l2", td.options.l2)->check(CLI::Range(0.0, 1e9));
  c_td->add_option("--subsample", td.options.subsample)->check(CLI::Range(1e-3, 1.0));

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Pruned versus exhaustive encoding of a held-out corpus");
  add_shared(c_ev, ev.shared);
  c_ev->add_option("--images", ev.images, "Directory of evaluation PGMs")->required();
  c_ev->add_option("--weights", ev.weights)->required();
  c_ev->add_option("--bank", ev.bank)->required();
  c_ev->add_option("--topn", ev.topn, "C1..C4, full, or an explicit N list");
  c_ev->add_option("--manifest", ev.manifest, "Training manifest, checked for overlap");
  c_ev->add_option("--report", ev.report, "Per-QP CSV");
  c_ev->add_option("--summary", ev.summary, "Plain-text summary (stdout when omitted)");
  c_ev->add_option("--roc", ev.roc, "ROC points CSV for the 64x64, 32x32 and 16x16 splits");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "Trade-off curve over top-N configurations");
  add_shared(c_sw, sw.shared);
  c_sw->add_option("--images", sw.images, "Directory of evaluation PGMs")->required();
  c_sw->add_option("--weights", sw.weights)->required();
  c_sw->add_option("--bank", sw.bank)->required();
  c_sw->add_option("--configs", sw.configs, "Least to most aggressive")->delimiter(',');
  c_sw->add_option("--manifest", sw.manifest, "Training manifest, checked for overlap");
  c_sw->add_option("--out", sw.out, "Trade-off CSV (stdout when omitted)");
  c_sw->add_option("--detail", sw.detail, "Per-config, per-QP CSV");
  c_sw->add_option("--gnuplot", sw.gnuplot, "Whitespace-separated data file");

  CorpusArgs mc;
  auto* c_mc = app.add_subcommand("make-corpus", "Write synthetic test PGMs");
  c_mc->add_option("--out", mc.out, "Output directory")->required();
  c_mc->add_option("--count", mc.count)->check(CLI::Range(1, 100000));
  c_mc->add_option("--width", mc.width)->check(CLI::Range(kMinFrameSize, 16384));
  c_mc->add_option("--height", mc.height)->check(CLI::Range(kMinFrameSize, 16384));
  c_mc->add_option("--seed", mc.seed);

  CLI11_PARSE(app, argc, argv);
  const std::pair<CLI::App*, Shared*> shared[] = {{c_enc, &enc.shared}, {c_ds, &ds.shared}, {c_tc, &tc.shared},
                                                  {c_td, &td.shared},  {c_ev, &ev.shared}, {c_sw, &sw.shared}};
  for (auto [cmd, s] : shared) s->seed_set = cmd->count("--seed") > 0;

  try {
    if (*c_enc) return run_encode(enc);
    if (*c_ds) return run_dataset(ds);
    if (*c_tc) return run_train_cnn(tc);
    if (*c_td) return run_train_dt(td, *c_td);
    if (*c_ev) return run_eval(ev);
    if (*c_sw) return run_sweep(sw);
    if (*c_mc) {
      for (const auto& p : harness::make_corpus(mc.out, mc.count, mc.width, mc.height, mc.seed)) {
        std::cout << p.string() << '\n';
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
