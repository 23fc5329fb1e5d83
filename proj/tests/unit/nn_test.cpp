#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qtmtt/error.hpp"
#include "qtmtt/nn.hpp"

namespace qtmtt::nn {
namespace {

NetSpec tiny_spec() {
  NetSpec s;
  s.input_size = 8;
  s.layers = {
      {LayerKind::kConv, 3, 1, 2},     {LayerKind::kRelu, 0, 0, 0},   {LayerKind::kResidual, 3, 2, 2},
      {LayerKind::kMaxPool, 0, 0, 0},  {LayerKind::kConv, 1, 2, 2},   {LayerKind::kFlatten, 0, 0, 0},
      {LayerKind::kConcatQp, 0, 0, 0}, {LayerKind::kDense, 0, 33, 5}, {LayerKind::kSigmoid, 0, 0, 0},
  };
  return s;
}

std::vector<Example> random_examples(std::mt19937_64& rng, int n, int pixels, int outputs) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Example> out(static_cast<std::size_t>(n));
  for (auto& e : out) {
    e.pixels.resize(static_cast<std::size_t>(pixels));
    for (auto& p : e.pixels) p = u(rng);
    e.qp_norm = u(rng);
    e.target.resize(static_cast<std::size_t>(outputs));
    for (auto& t : e.target) t = u(rng) < 0.5 ? 0.0 : 1.0;
  }
  return out;
}

TEST(NetSpecTest, DeskShapes) {
  const auto spec = NetSpec::desk();
  const auto shapes = spec.shapes();
  EXPECT_EQ(shapes.front(), (Shape{1, 68, 68}));
  EXPECT_EQ(spec.output_length(), kEdgeCount);
  EXPECT_EQ(spec.layers[spec.layers.size() - 2].in, 16 * 8 * 8 + 1);
  std::size_t total = 0;
  for (const auto& layer : spec.param_layout()) {
    for (const auto& r : layer) {
      EXPECT_EQ(r.offset, total);
      total += r.size;
    }
  }
  EXPECT_EQ(total, spec.param_count());
}

TEST(NetSpecTest, RejectsBadChains) {
  auto s = tiny_spec();
  s.layers[2].in = 3;
  EXPECT_THROW(s.shapes(), Error);
  s = tiny_spec();
  s.layers.erase(s.layers.begin() + 6);
  EXPECT_THROW(s.shapes(), Error);
  s = tiny_spec();
  s.layers.push_back({LayerKind::kRelu, 0, 0, 0});
  EXPECT_THROW(s.shapes(), Error);
}

TEST(Gradient, FiniteDifferencesEveryParameter) {
  const auto spec = tiny_spec();
  auto params = init_params(spec, 3);
  std::mt19937_64 rng(4);
  // Non-zero biases so that relu inputs sit away from their kink.
  std::uniform_real_distribution<float> b(-0.2f, 0.2f);
  for (auto& v : params.values) v += b(rng) * 0.5f;
  const auto batch = random_examples(rng, 3, 64, 5);
  const auto g = backward(spec, params, batch);
  ASSERT_EQ(g.values.size(), params.values.size());
  auto loss = [&] { return evaluate(spec, params, batch).loss; };
  int bad = 0;
  for (std::size_t i = 0; i < params.values.size(); ++i) {
    const double num = testing::central_difference(loss, params.values[i], 1e-4f);
    if (!testing::gradient_close(g.values[i], num)) {
      ++bad;
      ADD_FAILURE() << "param " << i << " analytic " << g.values[i] << " numeric " << num;
    }
  }
  EXPECT_EQ(bad, 0);
  EXPECT_NEAR(g.loss, loss(), 1e-12);
}

TEST(Gradient, DenseBiasClosedForm) {
  NetSpec s;
  s.input_size = 4;
  s.layers = {{LayerKind::kFlatten, 0, 0, 0},
              {LayerKind::kConcatQp, 0, 0, 0},
              {LayerKind::kDense, 0, 17, 3},
              {LayerKind::kSigmoid, 0, 0, 0}};
  const auto params = init_params(s, 1);
  std::mt19937_64 rng(2);
  const auto batch = random_examples(rng, 4, 16, 3);
  const auto g = backward(s, params, batch);
  const auto layout = s.param_layout()[2];
  for (int o = 0; o < 3; ++o) {
    double expect = 0.0;
    for (const auto& e : batch) {
      const auto y = forward(s, params, e.pixels, e.qp_norm);
      const double yo = y[static_cast<std::size_t>(o)];
      expect += 2.0 * (yo - e.target[static_cast<std::size_t>(o)]) * yo * (1.0 - yo);
    }
    expect /= static_cast<double>(batch.size());
    EXPECT_NEAR(g.values[layout[1].offset + static_cast<std::size_t>(o)], expect, 1e-12);
  }
}

TEST(Gradient, DuplicatedBatchHasSameGradient) {
  const auto spec = tiny_spec();
  const auto params = init_params(spec, 8);
  std::mt19937_64 rng(9);
  const auto one = random_examples(rng, 2, 64, 5);
  auto two = one;
  two.insert(two.end(), one.begin(), one.end());
  const auto a = backward(spec, params, one);
  const auto b = backward(spec, params, two);
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-12);
}

TEST(Layers, ConvInputGradient) {
  using layers::Tensor;
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor in(2, 5, 5);
  for (auto& v : in.data) v = u(rng);
  std::vector<float> w(3 * 2 * 9), bias(3, 0.1f);
  for (auto& v : w) v = static_cast<float>(u(rng));
  Tensor probe(3, 5, 5);
  for (auto& v : probe.data) v = u(rng);
  auto objective = [&](const Tensor& x) {
    Tensor out;
    layers::conv_forward(x, w, bias, 3, 3, out);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.data[i] * probe.data[i];
    return s;
  };
  Tensor gin;
  std::vector<double> gw(w.size()), gb(3);
  layers::conv_backward(in, w, 3, probe, &gin, gw, gb);
  for (std::size_t i = 0; i < in.size(); ++i) {
    Tensor p = in, m = in;
    p.data[i] += 1e-5;
    m.data[i] -= 1e-5;
    EXPECT_NEAR(gin.data[i], (objective(p) - objective(m)) / 2e-5, 1e-6);
  }
}

TEST(Layers, MaxPoolRoutesToFirstMax) {
  layers::Tensor in(1, 2, 2);
  in.data = {1.0, 3.0, 3.0, 0.0};
  layers::Tensor out, gin;
  std::vector<std::size_t> arg;
  layers::maxpool_forward(in, out, arg);
  EXPECT_EQ(out.data[0], 3.0);
  layers::Tensor g(1, 1, 1);
  g.data[0] = 2.0;
  layers::maxpool_backward(in, arg, g, gin);
  EXPECT_EQ(gin.data, (std::vector<double>{0.0, 2.0, 0.0, 0.0}));
}

TEST(Layers, SigmoidStable) {
  EXPECT_EQ(layers::sigmoid(-1000.0), 0.0);
  EXPECT_EQ(layers::sigmoid(1000.0), 1.0);
  EXPECT_DOUBLE_EQ(layers::sigmoid(0.0), 0.5);
}

TEST(Forward, ZeroWeightsGiveHalf) {
  const auto spec = tiny_spec();
  NetParams p{std::vector<float>(spec.param_count(), 0.0f)};
  const auto y = forward(spec, p, std::vector<double>(64, 0.3), 0.5);
  for (double v : y) EXPECT_EQ(v, 0.5);
  EXPECT_THROW(forward(spec, p, std::vector<double>(63, 0.3), 0.5), Error);
}

TEST(Loss, SumAndMean) {
  const std::vector<double> a = {0.0, 1.0, 0.5};
  const std::vector<double> b = {1.0, 1.0, 0.0};
  EXPECT_DOUBLE_EQ(loss_mse(a, b), 1.25);
  EXPECT_DOUBLE_EQ(loss_mse_mean(a, b), 1.25 / 3);
}

TEST(Training, LossFallsOnTinySet) {
  const auto spec = tiny_spec();
  std::mt19937_64 rng(11);
  const auto data = random_examples(rng, 8, 64, 5);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 60;
  cfg.learning_rate = 1e-2;
  const auto before = evaluate(spec, init_params(spec, 1), data).loss;
  const auto r = train(spec, init_params(spec, 1), data, {}, cfg);
  ASSERT_EQ(r.curve.size(), 60u);
  EXPECT_LT(evaluate(spec, r.params, data).loss, 0.5 * before);
  const auto again = train(spec, init_params(spec, 1), data, {}, cfg);
  EXPECT_EQ(again.params, r.params);
}

TEST(Training, DivergenceIsReported) {
  const auto spec = tiny_spec();
  std::mt19937_64 rng(12);
  auto data = random_examples(rng, 4, 64, 5);
  data[0].target[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.epochs = 1;
  try {
    train(spec, init_params(spec, 1), data, {}, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDiverged);
  }
}

TEST(Overrides, AppliesKnownKeys) {
  NetSpec spec = NetSpec::desk();
  TrainConfig cfg;
  apply_overrides({{"c1", "4"}, {"epochs", "7"}, {"learning_rate", "0.01"}}, spec, cfg);
  EXPECT_EQ(spec, NetSpec::desk(4));
  EXPECT_EQ(cfg.epochs, 7);
  EXPECT_DOUBLE_EQ(cfg.learning_rate, 0.01);
  EXPECT_THROW(apply_overrides({{"depth", "3"}}, spec, cfg), Error);
  EXPECT_THROW(apply_overrides({{"epochs", "many"}}, spec, cfg), Error);
}

TEST(WeightsFile, RoundTripAndErrors) {
  const auto spec = tiny_spec();
  const auto params = init_params(spec, 5);
  const auto bytes = encode_weights(spec, params);
  const auto m = decode_weights(bytes);
  EXPECT_EQ(m.spec, spec);
  EXPECT_EQ(m.params, params);
  EXPECT_EQ(encode_weights(m.spec, m.params), bytes);
  auto kind = [](std::vector<std::uint8_t> b) {
    try {
      decode_weights(b);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kInvalidArgument;
  };
  auto bad = bytes;
  bad[1] = '?';
  EXPECT_EQ(kind(bad), ErrorKind::kBadMagic);
  bad = bytes;
  bad[4] = 2;
  EXPECT_EQ(kind(bad), ErrorKind::kBadVersion);
  EXPECT_EQ(kind({bytes.begin(), bytes.end() - 1}), ErrorKind::kTruncated);
  bad = bytes;
  bad[16] = 99;  // layer kind
  EXPECT_EQ(kind(bad), ErrorKind::kCorrupt);
  bad = bytes;
  bad.push_back(1);
  EXPECT_EQ(kind(bad), ErrorKind::kCorrupt);
}

}  // namespace
}  // namespace qtmtt::nn
