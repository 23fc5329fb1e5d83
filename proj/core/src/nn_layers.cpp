#include "qtmtt/nn_layers.hpp"

#include <algorithm>
#include <cmath>

#include "qtmtt/error.hpp"

namespace qtmtt::nn::layers {

namespace {

std::size_t widx(int o, int i, int ky, int kx, int in_ch, int k) {
  return static_cast<std::size_t>(((o * in_ch + i) * k + ky) * k + kx);
}

void check_conv(const Tensor& in, std::size_t wsize, int kernel, int out_ch) {
  if (kernel % 2 == 0 || kernel < 1) fail(ErrorKind::kShapeMismatch, "conv kernel must be odd");
  const auto expect = static_cast<std::size_t>(out_ch * in.channels * kernel * kernel);
  if (wsize != expect) fail(ErrorKind::kShapeMismatch, "conv weight size mismatch");
}

}  // namespace

void conv_forward(const Tensor& in, std::span<const float> w, std::span<const float> b, int kernel, int out_ch,
                  Tensor& out) {
  check_conv(in, w.size(), kernel, out_ch);
  const int pad = kernel / 2;
  const int h = in.height;
  const int wd = in.width;
  out = Tensor(out_ch, h, wd);
  for (int o = 0; o < out_ch; ++o) {
    double* dst = out.plane(o);
    std::fill(dst, dst + h * wd, static_cast<double>(b[static_cast<std::size_t>(o)]));
    for (int i = 0; i < in.channels; ++i) {
      const double* src = in.plane(i);
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const double c = w[widx(o, i, ky, kx, in.channels, kernel)];
          const int dy = ky - pad;
          const int dx = kx - pad;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(h, h - dy);
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(wd, wd - dx);
          for (int y = y0; y < y1; ++y) {
            double* drow = dst + y * wd;
            const double* srow = src + (y + dy) * wd + dx;
            for (int x = x0; x < x1; ++x) drow[x] += c * srow[x];
          }
        }
      }
    }
  }
}

void conv_backward(const Tensor& in, std::span<const float> w, int kernel, const Tensor& grad_out, Tensor* grad_in,
                   std::span<double> grad_w, std::span<double> grad_b) {
  const int out_ch = grad_out.channels;
  check_conv(in, w.size(), kernel, out_ch);
  const int pad = kernel / 2;
  const int h = in.height;
  const int wd = in.width;
  if (grad_in) *grad_in = Tensor(in.channels, h, wd);
  for (int o = 0; o < out_ch; ++o) {
    const double* g = grad_out.plane(o);
    double gb = 0.0;
    for (int p = 0; p < h * wd; ++p) gb += g[p];
    grad_b[static_cast<std::size_t>(o)] += gb;
    for (int i = 0; i < in.channels; ++i) {
      const double* src = in.plane(i);
      double* gin = grad_in ? grad_in->plane(i) : nullptr;
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const std::size_t wi = widx(o, i, ky, kx, in.channels, kernel);
          const double c = w[wi];
          const int dy = ky - pad;
          const int dx = kx - pad;
          const int y0 = std::max(0, -dy);
          const int y1 = std::min(h, h - dy);
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(wd, wd - dx);
          double acc = 0.0;
          for (int y = y0; y < y1; ++y) {
            const double* grow = g + y * wd;
            const double* srow = src + (y + dy) * wd + dx;
            for (int x = x0; x < x1; ++x) acc += grow[x] * srow[x];
            if (gin) {
              double* irow = gin + (y + dy) * wd + dx;
              for (int x = x0; x < x1; ++x) irow[x] += c * grow[x];
            }
          }
          grad_w[wi] += acc;
        }
      }
    }
  }
}

void relu_forward(const Tensor& in, Tensor& out) {
  out = Tensor(in.channels, in.height, in.width);
  for (std::size_t i = 0; i < in.size(); ++i) out.data[i] = in.data[i] > 0.0 ? in.data[i] : 0.0;
}

void relu_backward(const Tensor& in, const Tensor& grad_out, Tensor& grad_in) {
  grad_in = Tensor(in.channels, in.height, in.width);
  for (std::size_t i = 0; i < in.size(); ++i) grad_in.data[i] = in.data[i] > 0.0 ? grad_out.data[i] : 0.0;
}

void maxpool_forward(const Tensor& in, Tensor& out, std::vector<std::size_t>& argmax) {
  const int oh = in.height / 2;
  const int ow = in.width / 2;
  if (oh == 0 || ow == 0) fail(ErrorKind::kShapeMismatch, "max pool input smaller than 2x2");
  out = Tensor(in.channels, oh, ow);
  argmax.assign(out.size(), 0);
  std::size_t o = 0;
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x, ++o) {
        const std::size_t base = (static_cast<std::size_t>(c) * static_cast<std::size_t>(in.height) +
                                  static_cast<std::size_t>(2 * y)) *
                                     static_cast<std::size_t>(in.width) +
                                 static_cast<std::size_t>(2 * x);
        const std::size_t cand[4] = {base, base + 1, base + static_cast<std::size_t>(in.width),
                                     base + static_cast<std::size_t>(in.width) + 1};
        std::size_t best = cand[0];
        for (std::size_t k = 1; k < 4; ++k) {
          if (in.data[cand[k]] > in.data[best]) best = cand[k];
        }
        argmax[o] = best;
        out.data[o] = in.data[best];
      }
    }
  }
}

void maxpool_backward(const Tensor& in, const std::vector<std::size_t>& argmax, const Tensor& grad_out,
                      Tensor& grad_in) {
  grad_in = Tensor(in.channels, in.height, in.width);
  for (std::size_t o = 0; o < argmax.size(); ++o) grad_in.data[argmax[o]] += grad_out.data[o];
}

void dense_forward(std::span<const double> in, std::span<const float> w, std::span<const float> b,
                   std::span<double> out) {
  const std::size_t n_in = in.size();
  if (w.size() != n_in * out.size() || b.size() != out.size()) {
    fail(ErrorKind::kShapeMismatch, "dense parameter size mismatch");
  }
  for (std::size_t o = 0; o < out.size(); ++o) {
    const float* row = &w[o * n_in];
    double acc = b[o];
    for (std::size_t i = 0; i < n_in; ++i) acc += static_cast<double>(row[i]) * in[i];
    out[o] = acc;
  }
}

void dense_backward(std::span<const double> in, std::span<const float> w, std::span<const double> grad_out,
                    std::span<double> grad_in, std::span<double> grad_w, std::span<double> grad_b) {
  const std::size_t n_in = in.size();
  std::fill(grad_in.begin(), grad_in.end(), 0.0);
  for (std::size_t o = 0; o < grad_out.size(); ++o) {
    const double g = grad_out[o];
    grad_b[o] += g;
    if (g == 0.0) continue;
    const float* row = &w[o * n_in];
    double* gw = &grad_w[o * n_in];
    for (std::size_t i = 0; i < n_in; ++i) {
      gw[i] += g * in[i];
      grad_in[i] += g * static_cast<double>(row[i]);
    }
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void sigmoid_forward(std::span<const double> in, std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = sigmoid(in[i]);
}

void sigmoid_backward(std::span<const double> out, std::span<const double> grad_out, std::span<double> grad_in) {
  for (std::size_t i = 0; i < out.size(); ++i) grad_in[i] = grad_out[i] * out[i] * (1.0 - out[i]);
}

}  // namespace qtmtt::nn::layers
