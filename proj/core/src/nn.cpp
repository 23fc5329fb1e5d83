#include "qtmtt/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "binary_io.hpp"
#include "qtmtt/error.hpp"

namespace qtmtt::nn {

namespace {

using layers::Tensor;

constexpr std::string_view kMagic = "QTNN";
constexpr std::uint32_t kMaxLayers = 1024;

[[noreturn]] void shape_error(std::size_t layer, const std::string& what) {
  fail(ErrorKind::kShapeMismatch, "layer " + std::to_string(layer) + ": " + what);
}

std::span<const float> view(const NetParams& p, const ParamRange& r) {
  return std::span<const float>(p.values).subspan(r.offset, r.size);
}

std::span<double> view(std::vector<double>& g, const ParamRange& r) {
  return std::span<double>(g).subspan(r.offset, r.size);
}

Tensor flat(int n) { return Tensor(n, 1, 1); }

struct Trace {
  std::vector<Tensor> acts;  // acts[i] feeds layer i; acts.back() is the output
  std::vector<std::vector<std::size_t>> argmax;
};

void run_forward(const NetSpec& spec, const std::vector<std::vector<ParamRange>>& layout, const NetParams& params,
                 std::span<const double> pixels, double qp_norm, Trace& t) {
  const int s = spec.input_size;
  if (pixels.size() != static_cast<std::size_t>(s * s)) {
    fail(ErrorKind::kShapeMismatch, "expected " + std::to_string(s * s) + " input pixels, got " +
                                        std::to_string(pixels.size()));
  }
  if (params.values.size() != spec.param_count()) fail(ErrorKind::kShapeMismatch, "parameter count mismatch");
  t.acts.assign(spec.layers.size() + 1, Tensor());
  t.argmax.assign(spec.layers.size(), {});
  t.acts[0] = Tensor(1, s, s);
  std::copy(pixels.begin(), pixels.end(), t.acts[0].data.begin());

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const Tensor& in = t.acts[i];
    Tensor& out = t.acts[i + 1];
    const auto& pr = layout[i];
    switch (l.kind) {
      case LayerKind::kConv:
        layers::conv_forward(in, view(params, pr[0]), view(params, pr[1]), l.kernel, l.out, out);
        break;
      case LayerKind::kResidual: {
        Tensor shortcut;
        layers::conv_forward(in, view(params, pr[0]), view(params, pr[1]), 3, l.out, out);
        layers::conv_forward(in, view(params, pr[2]), view(params, pr[3]), 1, l.out, shortcut);
        for (std::size_t k = 0; k < out.size(); ++k) out.data[k] += shortcut.data[k];
        break;
      }
      case LayerKind::kRelu:
        layers::relu_forward(in, out);
        break;
      case LayerKind::kMaxPool:
        layers::maxpool_forward(in, out, t.argmax[i]);
        break;
      case LayerKind::kFlatten:
        out = flat(static_cast<int>(in.size()));
        out.data = in.data;
        break;
      case LayerKind::kConcatQp:
        out = flat(static_cast<int>(in.size()) + 1);
        std::copy(in.data.begin(), in.data.end(), out.data.begin());
        out.data.back() = qp_norm;
        break;
      case LayerKind::kDense:
        out = flat(l.out);
        layers::dense_forward(in.data, view(params, pr[0]), view(params, pr[1]), out.data);
        break;
      case LayerKind::kSigmoid:
        out = Tensor(in.channels, in.height, in.width);
        layers::sigmoid_forward(in.data, out.data);
        break;
    }
  }
}

// Accumulates d(loss)/d(param) into `grad` given d(loss)/d(output).
void run_backward(const NetSpec& spec, const std::vector<std::vector<ParamRange>>& layout, const NetParams& params,
                  const Trace& t, Tensor grad_out, std::vector<double>& grad) {
  for (std::size_t ii = spec.layers.size(); ii-- > 0;) {
    const LayerSpec& l = spec.layers[ii];
    const Tensor& in = t.acts[ii];
    const auto& pr = layout[ii];
    const bool need_input_grad = ii > 0;
    Tensor grad_in;
    switch (l.kind) {
      case LayerKind::kConv:
        layers::conv_backward(in, view(params, pr[0]), l.kernel, grad_out, need_input_grad ? &grad_in : nullptr,
                              view(grad, pr[0]), view(grad, pr[1]));
        break;
      case LayerKind::kResidual: {
        Tensor from_shortcut;
        layers::conv_backward(in, view(params, pr[0]), 3, grad_out, need_input_grad ? &grad_in : nullptr,
                              view(grad, pr[0]), view(grad, pr[1]));
        layers::conv_backward(in, view(params, pr[2]), 1, grad_out, need_input_grad ? &from_shortcut : nullptr,
                              view(grad, pr[2]), view(grad, pr[3]));
        if (need_input_grad) {
          for (std::size_t k = 0; k < grad_in.size(); ++k) grad_in.data[k] += from_shortcut.data[k];
        }
        break;
      }
      case LayerKind::kRelu:
        layers::relu_backward(in, grad_out, grad_in);
        break;
      case LayerKind::kMaxPool:
        layers::maxpool_backward(in, t.argmax[ii], grad_out, grad_in);
        break;
      case LayerKind::kFlatten:
        grad_in = Tensor(in.channels, in.height, in.width);
        grad_in.data = grad_out.data;
        break;
      case LayerKind::kConcatQp:
        grad_in = flat(static_cast<int>(in.size()));
        std::copy(grad_out.data.begin(), grad_out.data.end() - 1, grad_in.data.begin());
        break;
      case LayerKind::kDense:
        grad_in = flat(static_cast<int>(in.size()));
        layers::dense_backward(in.data, view(params, pr[0]), grad_out.data, grad_in.data, view(grad, pr[0]),
                               view(grad, pr[1]));
        break;
      case LayerKind::kSigmoid:
        grad_in = Tensor(in.channels, in.height, in.width);
        layers::sigmoid_backward(t.acts[ii + 1].data, grad_out.data, grad_in.data);
        break;
    }
    grad_out = std::move(grad_in);
  }
}

int count_correct(std::span<const double> pred, std::span<const double> truth) {
  int n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) n += (pred[i] >= 0.5) == (truth[i] >= 0.5);
  return n;
}

void check_finite(double loss, const std::string& where) {
  if (!std::isfinite(loss)) fail(ErrorKind::kDiverged, "non-finite loss " + where);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::kInvalidArgument, "bad integer for " + key + ": " + v);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::kInvalidArgument, "bad number for " + key + ": " + v);
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kResidual: return "residual";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kConcatQp: return "concat_qp";
    case LayerKind::kDense: return "dense";
    case LayerKind::kSigmoid: return "sigmoid";
  }
  return "?";
}

NetSpec NetSpec::desk(int c1, int c2, int c3, int input_size) {
  NetSpec s;
  s.input_size = input_size;
  s.layers = {
      {LayerKind::kConv, 3, 1, c1},   {LayerKind::kRelu},    {LayerKind::kResidual, 3, c1, c1},
      {LayerKind::kMaxPool},          {LayerKind::kConv, 3, c1, c2},
      {LayerKind::kRelu},             {LayerKind::kMaxPool}, {LayerKind::kConv, 3, c2, c3},
      {LayerKind::kRelu},             {LayerKind::kMaxPool}, {LayerKind::kFlatten},
      {LayerKind::kConcatQp},
  };
  int side = input_size;
  for (int k = 0; k < 3; ++k) side /= 2;
  s.layers.push_back({LayerKind::kDense, 0, c3 * side * side + 1, kEdgeCount});
  s.layers.push_back({LayerKind::kSigmoid});
  return s;
}

std::vector<Shape> NetSpec::shapes() const {
  if (input_size < 1) fail(ErrorKind::kShapeMismatch, "input size must be positive");
  std::vector<Shape> out{{1, input_size, input_size}};
  int qp_layer = -1;
  int dense_after_qp = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    Shape s = out.back();
    const bool is_flat = s.height == 1 && s.width == 1;
    if (qp_layer >= 0 && l.kind != LayerKind::kDense && l.kind != LayerKind::kSigmoid) {
      shape_error(i, std::string(to_string(l.kind)) + " after the QP input");
    }
    switch (l.kind) {
      case LayerKind::kConv:
        if (l.kernel != 1 && l.kernel != 3) shape_error(i, "conv kernel must be 1 or 3");
        [[fallthrough]];
      case LayerKind::kResidual:
        if (l.in != s.channels) shape_error(i, "expects " + std::to_string(l.in) + " channels, gets " +
                                                   std::to_string(s.channels));
        if (l.out < 1) shape_error(i, "needs at least one output channel");
        s.channels = l.out;
        break;
      case LayerKind::kRelu:
      case LayerKind::kSigmoid:
        break;
      case LayerKind::kMaxPool:
        if (s.height < 2 || s.width < 2) shape_error(i, "max pool input smaller than 2x2");
        s.height /= 2;
        s.width /= 2;
        break;
      case LayerKind::kFlatten:
        s = {s.size(), 1, 1};
        break;
      case LayerKind::kConcatQp:
        if (!is_flat) shape_error(i, "QP must join a flat vector");
        if (qp_layer >= 0) shape_error(i, "QP concatenated twice");
        qp_layer = static_cast<int>(i);
        s.channels += 1;
        break;
      case LayerKind::kDense:
        if (!is_flat) shape_error(i, "dense needs a flat input");
        if (l.in != s.channels) shape_error(i, "dense expects " + std::to_string(l.in) + " inputs, gets " +
                                                   std::to_string(s.channels));
        if (l.out < 1) shape_error(i, "dense needs at least one output");
        if (qp_layer >= 0 && ++dense_after_qp > 1) shape_error(i, "only one dense layer may follow the QP input");
        s.channels = l.out;
        break;
    }
    out.push_back(s);
  }
  if (qp_layer < 0) fail(ErrorKind::kShapeMismatch, "network never receives the QP");
  if (dense_after_qp != 1) fail(ErrorKind::kShapeMismatch, "the QP must feed a dense layer");
  return out;
}

int NetSpec::output_length() const { return shapes().back().size(); }

std::vector<std::vector<ParamRange>> NetSpec::param_layout() const {
  std::vector<std::vector<ParamRange>> out;
  std::size_t offset = 0;
  auto take = [&](std::vector<ParamRange>& v, int n) {
    v.push_back({offset, static_cast<std::size_t>(n)});
    offset += static_cast<std::size_t>(n);
  };
  for (const LayerSpec& l : layers) {
    std::vector<ParamRange> v;
    switch (l.kind) {
      case LayerKind::kConv:
        take(v, l.out * l.in * l.kernel * l.kernel);
        take(v, l.out);
        break;
      case LayerKind::kResidual:
        take(v, l.out * l.in * 9);
        take(v, l.out);
        take(v, l.out * l.in);
        take(v, l.out);
        break;
      case LayerKind::kDense:
        take(v, l.out * l.in);
        take(v, l.out);
        break;
      default:
        break;
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::size_t NetSpec::param_count() const {
  std::size_t n = 0;
  for (const auto& v : param_layout()) {
    for (const ParamRange& r : v) n += r.size;
  }
  return n;
}

NetParams init_params(const NetSpec& spec, std::uint64_t seed) {
  spec.shapes();
  NetParams p;
  p.values.assign(spec.param_count(), 0.0f);
  std::mt19937_64 rng(seed);
  const auto layout = spec.param_layout();
  auto fill = [&](const ParamRange& r, int fan_in) {
    const double limit = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t k = 0; k < r.size; ++k) p.values[r.offset + k] = static_cast<float>(dist(rng));
  };
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::kConv: fill(layout[i][0], l.in * l.kernel * l.kernel); break;
      case LayerKind::kResidual:
        fill(layout[i][0], l.in * 9);
        fill(layout[i][2], l.in);
        break;
      case LayerKind::kDense: fill(layout[i][0], l.in); break;
      default: break;
    }
  }
  return p;
}

std::vector<double> normalize_pixels(const data::Patch& patch) {
  std::vector<double> out(patch.size());
  for (std::size_t i = 0; i < patch.size(); ++i) out[i] = patch[i] / 255.0;
  return out;
}

double normalize_qp(int qp) { return qp / 51.0; }

Example to_example(const data::BlockSample& sample) {
  return {normalize_pixels(sample.pixels), normalize_qp(sample.qp),
          std::vector<double>(sample.soft_label.values.begin(), sample.soft_label.values.end())};
}

std::vector<double> forward(const NetSpec& spec, const NetParams& params, std::span<const double> pixels,
                            double qp_norm) {
  spec.shapes();
  Trace t;
  run_forward(spec, spec.param_layout(), params, pixels, qp_norm, t);
  return std::move(t.acts.back().data);
}

EdgeVector predict_edges(const NetSpec& spec, const NetParams& params, const data::Patch& patch, int qp) {
  if (spec.input_size != data::kPatchSize || spec.output_length() != kEdgeCount) {
    fail(ErrorKind::kShapeMismatch, "network does not map a 68x68 patch to 480 edges");
  }
  const auto out = forward(spec, params, normalize_pixels(patch), normalize_qp(qp));
  EdgeVector v;
  std::copy(out.begin(), out.end(), v.values.begin());
  return v;
}

double loss_mse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) fail(ErrorKind::kShapeMismatch, "loss operands differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sum += d * d;
  }
  return sum;
}

double loss_mse_mean(std::span<const double> pred, std::span<const double> truth) {
  if (pred.empty()) return 0.0;
  return loss_mse(pred, truth) / static_cast<double>(pred.size());
}

Gradients backward(const NetSpec& spec, const NetParams& params, std::span<const Example> batch) {
  if (batch.empty()) fail(ErrorKind::kInvalidArgument, "empty batch");
  const int n_out = spec.output_length();
  const auto layout = spec.param_layout();
  Gradients g;
  g.values.assign(spec.param_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  Trace t;
  for (const Example& ex : batch) {
    if (ex.target.size() != static_cast<std::size_t>(n_out)) fail(ErrorKind::kShapeMismatch, "target length");
    run_forward(spec, layout, params, ex.pixels, ex.qp_norm, t);
    const Tensor& out = t.acts.back();
    g.loss += loss_mse(out.data, ex.target) * scale;
    g.correct += count_correct(out.data, ex.target);
    Tensor grad_out(out.channels, out.height, out.width);
    for (std::size_t k = 0; k < out.size(); ++k) grad_out.data[k] = 2.0 * (out.data[k] - ex.target[k]) * scale;
    run_backward(spec, layout, params, t, std::move(grad_out), g.values);
  }
  return g;
}

Metrics evaluate(const NetSpec& spec, const NetParams& params, std::span<const Example> examples) {
  Metrics m;
  if (examples.empty()) return m;
  const auto layout = spec.param_layout();
  const int n_out = spec.output_length();
  Trace t;
  double correct = 0.0;
  for (const Example& ex : examples) {
    run_forward(spec, layout, params, ex.pixels, ex.qp_norm, t);
    m.loss += loss_mse(t.acts.back().data, ex.target);
    correct += count_correct(t.acts.back().data, ex.target);
  }
  const double n = static_cast<double>(examples.size());
  m.loss /= n;
  m.mean_loss = m.loss / n_out;
  m.binary_accuracy = correct / (n * n_out);
  return m;
}

TrainResult train(const NetSpec& spec, NetParams params, std::span<const Example> train_set,
                  std::span<const Example> validation_set, const TrainConfig& config, const EpochCallback& on_epoch) {
  if (train_set.empty()) fail(ErrorKind::kInvalidArgument, "empty training set");
  if (config.batch_size < 1) fail(ErrorKind::kInvalidArgument, "batch size must be at least 1");
  if (config.epochs < 0) fail(ErrorKind::kInvalidArgument, "negative epoch count");
  const int n_out = spec.output_length();
  const std::size_t n_params = spec.param_count();
  if (params.values.size() != n_params) fail(ErrorKind::kShapeMismatch, "parameter count mismatch");

  std::vector<double> m(n_params, 0.0);
  std::vector<double> v(n_params, 0.0);
  std::uint64_t step = 0;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  TrainResult result;
  std::vector<Example> batch;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    double correct = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(train_set[order[k]]);
      const Gradients g = backward(spec, params, batch);
      check_finite(g.loss, "in epoch " + std::to_string(epoch));
      loss_sum += g.loss * static_cast<double>(batch.size());
      correct += g.correct;

      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < n_params; ++k) {
        const double gk = g.values[k];
        m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * gk;
        v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * gk * gk;
        const double update = config.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config.epsilon);
        params.values[k] = static_cast<float>(params.values[k] - update);
      }
    }
    EpochReport rep;
    rep.epoch = epoch;
    const double n = static_cast<double>(train_set.size());
    rep.train.loss = loss_sum / n;
    rep.train.mean_loss = rep.train.loss / n_out;
    rep.train.binary_accuracy = correct / (n * n_out);
    if (!validation_set.empty()) {
      rep.validation = evaluate(spec, params, validation_set);
      rep.has_validation = true;
      check_finite(rep.validation.loss, "on validation after epoch " + std::to_string(epoch));
    }
    result.curve.push_back(rep);
    if (on_epoch) on_epoch(rep);
  }
  result.params = std::move(params);
  return result;
}

void apply_overrides(const std::map<std::string, std::string>& kv, NetSpec& spec, TrainConfig& config) {
  int c1 = 8;
  int c2 = 16;
  int c3 = 16;
  bool arch = false;
  for (const auto& [key, value] : kv) {
    if (key == "c1") {
      c1 = parse_int(key, value);
      arch = true;
    } else if (key == "c2") {
      c2 = parse_int(key, value);
      arch = true;
    } else if (key == "c3") {
      c3 = parse_int(key, value);
      arch = true;
    } else if (key == "batch_size") {
      config.batch_size = parse_int(key, value);
    } else if (key == "learning_rate") {
      config.learning_rate = parse_double(key, value);
    } else if (key == "epochs") {
      config.epochs = parse_int(key, value);
    } else if (key == "seed") {
      config.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else {
      fail(ErrorKind::kInvalidArgument, "unknown network setting: " + key);
    }
  }
  if (arch) spec = NetSpec::desk(c1, c2, c3, spec.input_size);
  spec.shapes();
}

std::vector<std::uint8_t> encode_weights(const NetSpec& spec, const NetParams& params) {
  spec.shapes();
  if (params.values.size() != spec.param_count()) fail(ErrorKind::kShapeMismatch, "parameter count mismatch");
  io::ByteWriter w;
  io::begin_format(w, kMagic, kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(spec.input_size));
  w.u32(static_cast<std::uint32_t>(spec.layers.size()));
  for (const LayerSpec& l : spec.layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u8(static_cast<std::uint8_t>(l.kernel));
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
  }
  w.u64(params.values.size());
  for (float x : params.values) w.f32(x);
  return w.take();
}

Model decode_weights(std::span<const std::uint8_t> bytes) {
  io::ByteReader r = io::open_format(bytes, kMagic, kWeightsVersion, "weight file");
  Model m;
  m.spec.input_size = static_cast<int>(r.u32());
  const std::uint32_t n_layers = r.u32();
  if (n_layers > kMaxLayers) fail(ErrorKind::kCorrupt, "implausible layer count " + std::to_string(n_layers));
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(LayerKind::kSigmoid)) {
      fail(ErrorKind::kCorrupt, "unknown layer kind " + std::to_string(kind));
    }
    l.kind = static_cast<LayerKind>(kind);
    l.kernel = r.u8();
    l.in = static_cast<int>(r.u32());
    l.out = static_cast<int>(r.u32());
    m.spec.layers.push_back(l);
  }
  m.spec.shapes();
  const std::uint64_t count = r.u64();
  if (count != m.spec.param_count()) {
    fail(ErrorKind::kShapeMismatch, "weight file holds " + std::to_string(count) + " parameters, layers need " +
                                        std::to_string(m.spec.param_count()));
  }
  if (r.remaining() < count * 4) fail(ErrorKind::kTruncated, "weight file is truncated");
  m.params.values.resize(count);
  for (float& x : m.params.values) {
    x = r.f32();
    if (!std::isfinite(x)) fail(ErrorKind::kCorrupt, "non-finite parameter in weight file");
  }
  if (r.remaining() != 0) fail(ErrorKind::kCorrupt, "trailing bytes in weight file");
  return m;
}

void save_weights(const std::filesystem::path& path, const NetSpec& spec, const NetParams& params) {
  io::write_file(path, encode_weights(spec, params));
}

Model load_weights(const std::filesystem::path& path) { return decode_weights(io::read_file(path)); }

}  // namespace qtmtt::nn
