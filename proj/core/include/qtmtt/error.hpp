#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qtmtt {

// Failure categories surfaced to callers. Readers of the binary formats
// distinguish the header problems so tools can report them precisely.
enum class ErrorKind {
  kInvalidArgument,
  kIllegalSplit,
  kIo,
  kBadMagic,
  kBadVersion,
  kTruncated,
  kCorrupt,
  kShapeMismatch,
  kMissingModel,
  kDiverged,
  kMalformedDistribution,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace qtmtt
