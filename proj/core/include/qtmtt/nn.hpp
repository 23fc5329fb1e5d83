#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qtmtt/dataset.hpp"
#include "qtmtt/nn_layers.hpp"
#include "qtmtt/partition.hpp"

// Stage-1 network: (68x68 luma patch, QP) -> 480 edge probabilities.
namespace qtmtt::nn {

enum class LayerKind : std::uint8_t {
  kConv = 0,
  kRelu = 1,
  kMaxPool = 2,
  kResidual = 3,  // 3x3 conv path plus 1x1 conv shortcut, summed
  kFlatten = 4,
  kConcatQp = 5,  // appends the normalised QP to a flat vector
  kDense = 6,
  kSigmoid = 7,
};

std::string_view to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  int kernel = 0;  // conv only: 1 or 3
  int in = 0;      // channels for conv/residual, features for dense
  int out = 0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  int size() const { return channels * height * width; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

struct ParamRange {
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct NetSpec {
  int input_size = data::kPatchSize;
  std::vector<LayerSpec> layers;

  // conv3(1->c1), relu, residual(c1->c1), pool, conv3(c1->c2), relu, pool,
  // conv3(c2->c3), relu, pool, flatten, concat QP, dense(->480), sigmoid.
  static NetSpec desk(int c1 = 8, int c2 = 16, int c3 = 16, int input_size = data::kPatchSize);

  // Activation shape after each layer (index 0 is the input). Throws
  // kShapeMismatch if the chain does not type-check, if QP is not
  // concatenated exactly once, or if anything but a dense layer (optionally
  // followed by sigmoid) comes after it.
  std::vector<Shape> shapes() const;
  int output_length() const;

  // Parameter tensors per layer in storage order: conv {w, b}, residual
  // {w3, b3, w1, b1}, dense {w, b}; empty for the rest.
  std::vector<std::vector<ParamRange>> param_layout() const;
  std::size_t param_count() const;

  friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

struct NetParams {
  std::vector<float> values;

  friend bool operator==(const NetParams&, const NetParams&) = default;
};

// Fan-in scaled uniform weights, zero biases.
NetParams init_params(const NetSpec& spec, std::uint64_t seed);

struct Example {
  std::vector<double> pixels;  // input_size^2, scaled to [0, 1]
  double qp_norm = 0.0;        // qp / 51
  std::vector<double> target;
};

Example to_example(const data::BlockSample& sample);
std::vector<double> normalize_pixels(const data::Patch& patch);
double normalize_qp(int qp);

std::vector<double> forward(const NetSpec& spec, const NetParams& params, std::span<const double> pixels,
                            double qp_norm);
EdgeVector predict_edges(const NetSpec& spec, const NetParams& params, const data::Patch& patch, int qp);

// Sum of squared differences.
double loss_mse(std::span<const double> pred, std::span<const double> truth);
// Per-component mean, for reporting.
double loss_mse_mean(std::span<const double> pred, std::span<const double> truth);

struct Gradients {
  std::vector<double> values;  // d(mean batch loss) / d(param)
  double loss = 0.0;           // mean over the batch of the summed loss
  double correct = 0.0;        // thresholded outputs matching targets
};

Gradients backward(const NetSpec& spec, const NetParams& params, std::span<const Example> batch);

struct TrainConfig {
  int batch_size = 128;
  double learning_rate = 1e-3;
  int epochs = 100;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct Metrics {
  double loss = 0.0;             // mean summed loss per example
  double mean_loss = 0.0;        // per component
  double binary_accuracy = 0.0;  // outputs thresholded at 0.5
};

Metrics evaluate(const NetSpec& spec, const NetParams& params, std::span<const Example> examples);

struct EpochReport {
  int epoch = 0;
  Metrics train;  // accumulated over the epoch's pre-update forward passes
  Metrics validation;
  bool has_validation = false;
};

struct TrainResult {
  NetParams params;
  std::vector<EpochReport> curve;
};

using EpochCallback = std::function<void(const EpochReport&)>;

// Adam over shuffled mini-batches. Throws kDiverged on a non-finite loss.
TrainResult train(const NetSpec& spec, NetParams params, std::span<const Example> train_set,
                  std::span<const Example> validation_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Applies "key=value" overrides: c1, c2, c3 (architecture) and batch_size,
// learning_rate, epochs, seed. Unknown keys throw kInvalidArgument.
void apply_overrides(const std::map<std::string, std::string>& kv, NetSpec& spec, TrainConfig& config);

// "QTNN" | u32 version | u32 input size | u32 layer count
// | per layer: u8 kind, u8 kernel, u32 in, u32 out
// | u64 parameter count | float32 parameters. Little-endian.
inline constexpr std::uint32_t kWeightsVersion = 1;

struct Model {
  NetSpec spec;
  NetParams params;
};

std::vector<std::uint8_t> encode_weights(const NetSpec& spec, const NetParams& params);
Model decode_weights(std::span<const std::uint8_t> bytes);
void save_weights(const std::filesystem::path& path, const NetSpec& spec, const NetParams& params);
Model load_weights(const std::filesystem::path& path);

}  // namespace qtmtt::nn
