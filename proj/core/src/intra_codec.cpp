#include "qtmtt/intra_codec.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <numbers>

#include "qtmtt/error.hpp"

namespace qtmtt::codec {

namespace {

constexpr int kNeutral = 128;

void check_qp(int qp) {
  if (qp < kMinQp || qp > kMaxQp) fail(ErrorKind::kInvalidArgument, "qp out of [0, 51]: " + std::to_string(qp));
}

int log2_side(int n) {
  if (n < 4 || n > 64 || !std::has_single_bit(static_cast<unsigned>(n))) {
    fail(ErrorKind::kInvalidArgument, "transform side must be a power of two in [4, 64], got " + std::to_string(n));
  }
  return std::countr_zero(static_cast<unsigned>(n));
}

// Row k holds basis function k sampled at n points.
class DctBasis {
 public:
  DctBasis() {
    for (int lg = 2; lg <= 6; ++lg) {
      const int n = 1 << lg;
      auto& m = matrices_[static_cast<std::size_t>(lg)];
      m.resize(static_cast<std::size_t>(n * n));
      for (int k = 0; k < n; ++k) {
        const double a = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (int i = 0; i < n; ++i) {
          m[static_cast<std::size_t>(k * n + i)] = a * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
        }
      }
    }
  }

  const double* matrix(int n) const { return matrices_[static_cast<std::size_t>(log2_side(n))].data(); }

 private:
  std::array<std::vector<double>, 7> matrices_;
};

const DctBasis& basis() {
  static const DctBasis instance;
  return instance;
}

// Forward: C_h X C_w^T. Inverse: C_h^T Y C_w.
SampleBlock separable(const SampleBlock& in, bool inverse) {
  const int w = in.width;
  const int h = in.height;
  const double* cw = basis().matrix(w);
  const double* ch = basis().matrix(h);
  SampleBlock tmp(w, h);
  for (int y = 0; y < h; ++y) {
    const double* row = &in.data[static_cast<std::size_t>(y * w)];
    double* dst = &tmp.data[static_cast<std::size_t>(y * w)];
    for (int k = 0; k < w; ++k) {
      double acc = 0.0;
      if (inverse) {
        for (int i = 0; i < w; ++i) acc += row[i] * cw[i * w + k];
      } else {
        for (int i = 0; i < w; ++i) acc += row[i] * cw[k * w + i];
      }
      dst[k] = acc;
    }
  }
  SampleBlock out(w, h);
  for (int k = 0; k < h; ++k) {
    double* dst = &out.data[static_cast<std::size_t>(k * w)];
    for (int i = 0; i < h; ++i) {
      const double c = inverse ? ch[i * h + k] : ch[k * h + i];
      const double* src = &tmp.data[static_cast<std::size_t>(i * w)];
      for (int x = 0; x < w; ++x) dst[x] += c * src[x];
    }
  }
  return out;
}

SampleBlock original_block(const Frame& frame, int x, int y, int w, int h) {
  SampleBlock b(w, h);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) b.at(i, j) = frame.at(x + i, y + j);
  }
  return b;
}

struct Encoded {
  double distortion = 0.0;
  double rate = 0.0;
  SampleBlock reconstruction;
};

Encoded encode_with(const SampleBlock& original, const SampleBlock& prediction, int qp, bool keep_recon) {
  SampleBlock residual(original.width, original.height);
  for (std::size_t i = 0; i < residual.data.size(); ++i) residual.data[i] = original.data[i] - prediction.data[i];
  const LevelBlock levels = quantize(dct2(residual), qp);
  const SampleBlock decoded = idct2(dequantize(levels, qp));
  Encoded e;
  e.rate = rate_model(levels.levels);
  for (std::size_t i = 0; i < decoded.data.size(); ++i) {
    const double diff = original.data[i] - (prediction.data[i] + decoded.data[i]);
    e.distortion += diff * diff;
  }
  if (keep_recon) {
    e.reconstruction = prediction;
    for (std::size_t i = 0; i < decoded.data.size(); ++i) e.reconstruction.data[i] += decoded.data[i];
  }
  return e;
}

void check_in_frame(const Frame& frame, BlockOrigin origin, const CuGeometry& g) {
  if (origin.x < 0 || origin.y < 0 || origin.x + g.x + g.width > frame.width() ||
      origin.y + g.y + g.height > frame.height()) {
    fail(ErrorKind::kInvalidArgument, "CU " + to_string(g) + " lies outside the frame");
  }
}

}  // namespace

std::string_view to_string(IntraMode mode) {
  switch (mode) {
    case IntraMode::kDc: return "DC";
    case IntraMode::kPlanar: return "PLANAR";
    case IntraMode::kHorizontal: return "HOR";
    case IntraMode::kVertical: return "VER";
  }
  return "?";
}

double lambda_of_qp(int qp) {
  check_qp(qp);
  return 0.57 * std::exp2((qp - 12) / 3.0);
}

double quant_step(int qp) {
  check_qp(qp);
  return std::exp2((qp - 4) / 6.0);
}

SampleBlock predict_block(const Frame& frame, int x, int y, int width, int height, IntraMode mode) {
  const bool has_top = y > 0;
  const bool has_left = x > 0;
  std::vector<double> top(static_cast<std::size_t>(width), kNeutral);
  std::vector<double> left(static_cast<std::size_t>(height), kNeutral);
  if (has_top) {
    for (int i = 0; i < width; ++i) {
      if (x + i < frame.width()) top[static_cast<std::size_t>(i)] = frame.at(x + i, y - 1);
    }
  }
  if (has_left) {
    for (int j = 0; j < height; ++j) {
      if (y + j < frame.height()) left[static_cast<std::size_t>(j)] = frame.at(x - 1, y + j);
    }
  }

  SampleBlock pred(width, height);
  switch (mode) {
    case IntraMode::kDc: {
      double sum = 0.0;
      int count = 0;
      if (has_top) {
        for (double v : top) sum += v;
        count += width;
      }
      if (has_left) {
        for (double v : left) sum += v;
        count += height;
      }
      const double dc = count > 0 ? sum / count : kNeutral;
      pred.data.assign(pred.data.size(), dc);
      break;
    }
    case IntraMode::kHorizontal:
      for (int j = 0; j < height; ++j) {
        for (int i = 0; i < width; ++i) pred.at(i, j) = left[static_cast<std::size_t>(j)];
      }
      break;
    case IntraMode::kVertical:
      for (int j = 0; j < height; ++j) {
        for (int i = 0; i < width; ++i) pred.at(i, j) = top[static_cast<std::size_t>(i)];
      }
      break;
    case IntraMode::kPlanar:
      for (int j = 0; j < height; ++j) {
        for (int i = 0; i < width; ++i) {
          pred.at(i, j) = 0.5 * (left[static_cast<std::size_t>(j)] + top[static_cast<std::size_t>(i)]);
        }
      }
      break;
  }
  return pred;
}

SampleBlock dct2(const SampleBlock& block) {
  log2_side(block.width);
  log2_side(block.height);
  return separable(block, false);
}

SampleBlock idct2(const SampleBlock& coeffs) {
  log2_side(coeffs.width);
  log2_side(coeffs.height);
  return separable(coeffs, true);
}

LevelBlock quantize(const SampleBlock& coeffs, int qp) {
  const double step = quant_step(qp);
  LevelBlock out{coeffs.width, coeffs.height, std::vector<std::int32_t>(coeffs.data.size())};
  for (std::size_t i = 0; i < coeffs.data.size(); ++i) {
    out.levels[i] = static_cast<std::int32_t>(std::round(coeffs.data[i] / step));
  }
  return out;
}

SampleBlock dequantize(const LevelBlock& levels, int qp) {
  const double step = quant_step(qp);
  SampleBlock out(levels.width, levels.height);
  for (std::size_t i = 0; i < levels.levels.size(); ++i) out.data[i] = levels.levels[i] * step;
  return out;
}

double rate_model(std::span<const std::int32_t> levels, bool include_header) {
  double bits = include_header ? 4.0 : 0.0;
  for (std::int32_t l : levels) {
    if (l == 0) continue;
    const auto mag = static_cast<std::uint32_t>(l < 0 ? -static_cast<std::int64_t>(l) : l);
    bits += 3.0 + 2.0 * (std::bit_width(mag) - 1);
  }
  return bits;
}

RdResult rd_cost_leaf(const Frame& frame, BlockOrigin origin, const CuGeometry& g, int qp) {
  check_in_frame(frame, origin, g);
  const double lambda = lambda_of_qp(qp);
  const int x = origin.x + g.x;
  const int y = origin.y + g.y;
  const SampleBlock original = original_block(frame, x, y, g.width, g.height);
  RdResult best;
  bool first = true;
  for (IntraMode mode : kIntraModes) {
    const Encoded e = encode_with(original, predict_block(frame, x, y, g.width, g.height, mode), qp, false);
    const double cost = e.distortion + lambda * e.rate;
    if (first || cost < best.cost) {
      best = RdResult{cost, e.distortion, e.rate, 1, mode};
      first = false;
    }
  }
  return best;
}

SampleBlock reconstruct_leaf(const Frame& frame, BlockOrigin origin, const CuGeometry& g, int qp, IntraMode mode) {
  check_in_frame(frame, origin, g);
  const int x = origin.x + g.x;
  const int y = origin.y + g.y;
  return encode_with(original_block(frame, x, y, g.width, g.height),
                     predict_block(frame, x, y, g.width, g.height, mode), qp, true)
      .reconstruction;
}

}  // namespace qtmtt::codec
