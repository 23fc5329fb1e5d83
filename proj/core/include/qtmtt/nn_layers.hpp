#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Single-sample layer kernels on CHW tensors. Parameters are float, every
// activation and gradient is double. Backward functions accumulate into the
// parameter gradients and overwrite the input gradient.
namespace qtmtt::nn::layers {

struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * static_cast<std::size_t>(h * w)) {}

  std::size_t size() const { return data.size(); }
  double& at(int c, int y, int x) { return data[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data[index(c, y, x)]; }
  double* plane(int c) { return data.data() + index(c, 0, 0); }
  const double* plane(int c) const { return data.data() + index(c, 0, 0); }

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * static_cast<std::size_t>(height) + static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
};

// Stride 1, zero "same" padding, odd kernel. Weights [out][in][k][k].
void conv_forward(const Tensor& in, std::span<const float> w, std::span<const float> b, int kernel, int out_ch,
                  Tensor& out);
void conv_backward(const Tensor& in, std::span<const float> w, int kernel, const Tensor& grad_out, Tensor* grad_in,
                   std::span<double> grad_w, std::span<double> grad_b);

void relu_forward(const Tensor& in, Tensor& out);
void relu_backward(const Tensor& in, const Tensor& grad_out, Tensor& grad_in);

// 2x2 stride 2, floor semantics: odd trailing rows/columns are dropped.
// `argmax` records the flat input index each output came from (first max
// in raster order wins).
void maxpool_forward(const Tensor& in, Tensor& out, std::vector<std::size_t>& argmax);
void maxpool_backward(const Tensor& in, const std::vector<std::size_t>& argmax, const Tensor& grad_out,
                      Tensor& grad_in);

// Weights [out][in].
void dense_forward(std::span<const double> in, std::span<const float> w, std::span<const float> b,
                   std::span<double> out);
void dense_backward(std::span<const double> in, std::span<const float> w, std::span<const double> grad_out,
                    std::span<double> grad_in, std::span<double> grad_w, std::span<double> grad_b);

double sigmoid(double x);
void sigmoid_forward(std::span<const double> in, std::span<double> out);
// Uses the forward output y: dy/dx = y (1 - y).
void sigmoid_backward(std::span<const double> out, std::span<const double> grad_out, std::span<double> grad_in);

}  // namespace qtmtt::nn::layers
