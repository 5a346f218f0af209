#pragma once

#include <cstdint>
#include <vector>

#include "meshmem/types.hpp"

namespace meshmem {

/// Per-PE symmetric heap: a brk-style linear allocator over the byte range
/// [base, limit) of one core's memory. Allocation bumps the break;
/// reallocation and freeing are restricted to the most recent live block
/// and retreat the break exactly, so identical call sequences yield
/// identical offsets on every PE. Exhaustion returns the null offset 0;
/// ordering violations throw HeapError.
class SymmetricHeap {
 public:
  static constexpr std::uint32_t kNull = 0;
  static constexpr std::uint32_t kMinAlign = 8;

  SymmetricHeap(std::uint32_t base_offset, std::uint32_t limit_offset);

  /// Bump-allocates nbytes (rounded up to 8-byte granularity). Returns the
  /// block offset, or kNull when the break would pass the limit.
  std::uint32_t alloc(std::uint32_t nbytes);

  /// Pops the top allocation record and retreats the break to the record's
  /// pre-padding start. Freeing any block but the top one is an ordering
  /// violation.
  void free(std::uint32_t offset);

  /// Resizes the top block in place; contents up to min(old, new) size are
  /// untouched since the block never moves. Returns the (unchanged) offset,
  /// kNull when growth would pass the limit (block left intact), or frees
  /// the block when nbytes is 0.
  std::uint32_t realloc(std::uint32_t offset, std::uint32_t nbytes);

  /// alloc with the result offset a multiple of alignment (a power of two
  /// >= 8). Padding is recorded with the block so stack discipline holds.
  std::uint32_t memalign(std::uint32_t alignment, std::uint32_t nbytes);

  std::uint32_t base() const { return base_; }
  std::uint32_t limit() const { return limit_; }
  std::uint32_t brk() const { return brk_; }
  std::size_t live_blocks() const { return blocks_.size(); }

  /// True iff [offset, offset+len) lies inside the heap range.
  bool in_range(std::uint32_t offset, std::uint64_t len) const {
    return offset >= base_ && static_cast<std::uint64_t>(offset) + len <= limit_;
  }

 private:
  struct Block {
    std::uint32_t start;   // break value before this allocation
    std::uint32_t offset;  // aligned offset handed to the caller
    std::uint32_t size;    // rounded-up size
  };

  struct Placed {
    std::uint32_t offset;
    std::uint32_t new_brk;
    bool fits;
  };
  Placed place(std::uint32_t alignment, std::uint32_t nbytes) const;

  std::uint32_t base_;
  std::uint32_t limit_;
  std::uint32_t brk_;
  std::vector<Block> blocks_;
};

}  // namespace meshmem
