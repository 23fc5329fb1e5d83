#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace qtmtt {

// 8-bit luma frame, row-major. Both dimensions are at least 64.
class Frame {
 public:
  Frame(int width, int height, std::uint8_t fill = 128);
  Frame(int width, int height, std::vector<std::uint8_t> luma);

  int width() const { return width_; }
  int height() const { return height_; }

  std::uint8_t at(int x, int y) const {
    return luma_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
  }
  std::uint8_t& at(int x, int y) {
    return luma_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)];
  }
  std::span<const std::uint8_t> luma() const { return luma_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> luma_;
};

inline constexpr int kMinFrameSize = 64;

// Binary PGM ("P5"). Header tokens may be separated by any whitespace and
// '#' comments running to end of line; maxval must be 255; exactly one
// whitespace byte separates the header from the raster.
Frame parse_pgm(std::span<const std::uint8_t> bytes);
Frame read_pgm(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_pgm(const Frame& frame);
void write_pgm(const std::filesystem::path& path, const Frame& frame);

// Pads right/bottom to a multiple of `multiple` by replicating the last
// column and row.
Frame pad_to_multiple(const Frame& frame, int multiple);

// FNV-1a over dimensions and samples; identifies corpus images in manifests.
std::uint64_t content_hash(const Frame& frame);

}  // namespace qtmtt
