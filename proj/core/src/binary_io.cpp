#include "binary_io.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "qtmtt/error.hpp"

namespace qtmtt::io {

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n) {
  if (in_.size() - pos_ < n) fail(ErrorKind::kTruncated, what_ + " is truncated");
  auto s = in_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint32_t ByteReader::u32() {
  auto b = bytes(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = bytes(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

ByteReader open_format(std::span<const std::uint8_t> bytes, std::string_view magic, std::uint32_t version,
                       const std::string& what) {
  const std::size_t n = std::min(bytes.size(), magic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n), magic.begin())) {
    fail(ErrorKind::kBadMagic, what + " has a bad magic number");
  }
  ByteReader r(bytes, what);
  r.bytes(magic.size());
  const std::uint32_t v = r.u32();
  if (v != version) {
    fail(ErrorKind::kBadVersion, what + " version " + std::to_string(v) + ", expected " + std::to_string(version));
  }
  return r;
}

void begin_format(ByteWriter& w, std::string_view magic, std::uint32_t version) {
  w.bytes(magic.data(), magic.size());
  w.u32(version);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIo, "write failed: " + path.string());
}

}  // namespace qtmtt::io
