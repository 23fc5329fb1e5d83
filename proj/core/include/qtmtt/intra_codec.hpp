#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "qtmtt/partition.hpp"
#include "qtmtt/pgm.hpp"

// A deliberately small intra codec: four predictors, an orthonormal DCT,
// a uniform quantiser and a coefficient-magnitude rate proxy. It exists to
// give every CU an exact, deterministic RD cost J = D + lambda * R.
namespace qtmtt::codec {

enum class IntraMode : std::uint8_t { kDc = 0, kPlanar = 1, kHorizontal = 2, kVertical = 3 };

inline constexpr std::array<IntraMode, 4> kIntraModes = {IntraMode::kDc, IntraMode::kPlanar,
                                                         IntraMode::kHorizontal, IntraMode::kVertical};

std::string_view to_string(IntraMode mode);

inline constexpr int kMinQp = 0;
inline constexpr int kMaxQp = 51;

// Pixel position of a 64x64 root inside the frame.
struct BlockOrigin {
  int x = 0;
  int y = 0;
};

struct SampleBlock {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  SampleBlock() = default;
  SampleBlock(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y * width + x)]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y * width + x)]; }
};

struct LevelBlock {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> levels;
};

// 0.57 * 2^((qp - 12) / 3).
double lambda_of_qp(int qp);

// 2^((qp - 4) / 6).
double quant_step(int qp);

// Prediction from the original samples bordering the block: the row above
// and the column to the left. Neighbours outside the frame read as 128 and
// are excluded from the DC mean; with no neighbour available DC is 128.
// (x, y) is the absolute pixel position of the block.
SampleBlock predict_block(const Frame& frame, int x, int y, int width, int height, IntraMode mode);

// Orthonormal separable 2-D DCT-II and its inverse. Sides must be powers of
// two in [4, 64].
SampleBlock dct2(const SampleBlock& block);
SampleBlock idct2(const SampleBlock& coeffs);

LevelBlock quantize(const SampleBlock& coeffs, int qp);
SampleBlock dequantize(const LevelBlock& levels, int qp);

// 4 header bits (when requested) plus 3 + 2 floor(log2 |l|) per non-zero level.
double rate_model(std::span<const std::int32_t> levels, bool include_header = true);

struct RdResult {
  double cost = 0.0;
  double distortion = 0.0;
  double rate = 0.0;
  std::uint64_t evaluated_nodes = 0;
  IntraMode best_mode = IntraMode::kDc;
};

// Best of the four intra modes for one CU of the root at `origin`.
RdResult rd_cost_leaf(const Frame& frame, BlockOrigin origin, const CuGeometry& g, int qp);

// Reconstructed samples of one CU coded with `mode`; used for diagnostics.
SampleBlock reconstruct_leaf(const Frame& frame, BlockOrigin origin, const CuGeometry& g, int qp,
                             IntraMode mode);

}  // namespace qtmtt::codec
