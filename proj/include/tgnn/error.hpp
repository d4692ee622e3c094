#pragma once

#include <stdexcept>
#include <string>

namespace tgnn {

/// Failure categories used across the library. Tests match on the kind,
/// messages are for humans.
enum class ErrorKind {
  DimensionMismatch,
  ZeroFanIn,
  InvalidEdge,
  NotNeighbor,
  ShapeMismatch,
  BadDims,
  EmptyBatch,
  DegenerateColumn,
  TooFewWindows,
  LengthMismatch,
  Empty,
  DegenerateSpread,
  TooFew,
  NoQualifyingSamples,
  BadHeader,
  BadRow,
  NonMonotonicTimestamps,
  TooShort,
  BadConfig,
  BadFraction,
  VersionMismatch,
  CorruptCheckpoint,
  NonFinite,
  IoError,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace tgnn
