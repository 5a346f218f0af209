#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace meshmem {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid machine/workgroup/heap configuration or unparsable config file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Global address that cannot be encoded, decoded, or accessed: coordinate
/// outside the live grid, offset past the end of a core's memory, or a
/// misaligned atomic target.
class AddressError : public Error {
 public:
  using Error::Error;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Symmetric-heap misuse. The allocator enforces strict stack ordering on
/// free/realloc; violations are reported as kind out_of_order.
class HeapError : public Error {
 public:
  enum class Kind { out_of_order, unknown_block, bad_alignment };

  HeapError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Corrupted synchronization words, mismatched collective arguments, or an
/// undersized SyncWork.
class SyncError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class BenchError : public Error {
 public:
  using Error::Error;
};

struct BlockedPe {
  int pe = -1;
  std::string waiting_on;
};

/// Raised when every unfinished PE is blocked and no event can wake any of
/// them. Carries the blocked ranks and their wait conditions.
class DeadlockError : public Error {
 public:
  explicit DeadlockError(std::vector<BlockedPe> blocked)
      : Error(format(blocked)), blocked_(std::move(blocked)) {}

  const std::vector<BlockedPe>& blocked() const { return blocked_; }

 private:
  static std::string format(const std::vector<BlockedPe>& blocked) {
    std::string msg = "deadlock:";
    for (const auto& b : blocked) {
      msg += " PE " + std::to_string(b.pe) + " [" + b.waiting_on + "]";
    }
    return msg;
  }

  std::vector<BlockedPe> blocked_;
};

}  // namespace meshmem
