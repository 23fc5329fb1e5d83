#include "qtmtt/error.hpp"

namespace qtmtt {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kIllegalSplit: return "illegal split";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kBadMagic: return "bad magic";
    case ErrorKind::kBadVersion: return "bad version";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kCorrupt: return "corrupt";
    case ErrorKind::kShapeMismatch: return "shape mismatch";
    case ErrorKind::kMissingModel: return "missing model";
    case ErrorKind::kDiverged: return "diverged";
    case ErrorKind::kMalformedDistribution: return "malformed distribution";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace qtmtt
