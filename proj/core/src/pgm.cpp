#include "qtmtt/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "qtmtt/error.hpp"

namespace qtmtt {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const auto ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(ch)) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  int read_uint(const char* what) {
    skip_separators();
    if (pos_ >= bytes_.size()) fail(ErrorKind::kTruncated, std::string("PGM header ends before ") + what);
    if (!std::isdigit(bytes_[pos_])) fail(ErrorKind::kCorrupt, std::string("PGM header: expected ") + what);
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000) fail(ErrorKind::kCorrupt, std::string("PGM header: ") + what + " too large");
      ++pos_;
    }
    return static_cast<int>(value);
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Frame::Frame(int width, int height, std::uint8_t fill)
    : Frame(width, height,
            std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                          static_cast<std::size_t>(std::max(height, 0)),
                                      fill)) {}

Frame::Frame(int width, int height, std::vector<std::uint8_t> luma)
    : width_(width), height_(height), luma_(std::move(luma)) {
  if (width < kMinFrameSize || height < kMinFrameSize) {
    fail(ErrorKind::kInvalidArgument, "frame must be at least 64x64, got " + std::to_string(width) + "x" +
                                          std::to_string(height));
  }
  if (luma_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    fail(ErrorKind::kShapeMismatch, "frame sample count does not match dimensions");
  }
}

Frame parse_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2) fail(ErrorKind::kTruncated, "PGM shorter than its magic");
  if (bytes[0] != 'P' || bytes[1] != '5') fail(ErrorKind::kBadMagic, "expected binary PGM (P5)");
  HeaderReader reader(bytes);
  reader.advance(2);
  const int width = reader.read_uint("width");
  const int height = reader.read_uint("height");
  const int maxval = reader.read_uint("maxval");
  if (maxval != 255) fail(ErrorKind::kCorrupt, "PGM maxval must be 255, got " + std::to_string(maxval));
  if (reader.pos() >= bytes.size() || !std::isspace(bytes[reader.pos()])) {
    fail(ErrorKind::kTruncated, "PGM header not terminated by whitespace");
  }
  reader.advance(1);
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - reader.pos() < count) fail(ErrorKind::kTruncated, "PGM raster shorter than width*height");
  const auto* first = bytes.data() + reader.pos();
  return Frame(width, height, std::vector<std::uint8_t>(first, first + count));
}

Frame read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_pgm(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_pgm(const Frame& frame) {
  const std::string header =
      "P5\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), frame.luma().begin(), frame.luma().end());
  return out;
}

void write_pgm(const std::filesystem::path& path, const Frame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot create " + path.string());
  const auto bytes = encode_pgm(frame);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

Frame pad_to_multiple(const Frame& frame, int multiple) {
  const int w = (frame.width() + multiple - 1) / multiple * multiple;
  const int h = (frame.height() + multiple - 1) / multiple * multiple;
  if (w == frame.width() && h == frame.height()) return frame;
  Frame out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(y, frame.height() - 1);
    for (int x = 0; x < w; ++x) out.at(x, y) = frame.at(std::min(x, frame.width() - 1), sy);
  }
  return out;
}

std::uint64_t content_hash(const Frame& frame) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint8_t b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (int shift = 0; shift < 32; shift += 8) {
    mix(static_cast<std::uint8_t>(static_cast<std::uint32_t>(frame.width()) >> shift));
    mix(static_cast<std::uint8_t>(static_cast<std::uint32_t>(frame.height()) >> shift));
  }
  for (auto b : frame.luma()) mix(b);
  return h;
}

}  // namespace qtmtt
