#include "meshmem/heap.hpp"

#include <bit>

#include "meshmem/errors.hpp"

namespace meshmem {

namespace {
std::uint32_t round_up(std::uint32_t v, std::uint32_t align) {
  return (v + align - 1) / align * align;
}
}  // namespace

SymmetricHeap::SymmetricHeap(std::uint32_t base_offset,
                             std::uint32_t limit_offset)
    : base_(base_offset), limit_(limit_offset), brk_(base_offset) {
  if (base_ == kNull || base_ % kMinAlign != 0 || base_ > limit_) {
    throw ConfigError("symmetric heap range [" + std::to_string(base_) + "," +
                      std::to_string(limit_) +
                      ") must be 8-aligned, nonzero-based and nondecreasing");
  }
}

SymmetricHeap::Placed SymmetricHeap::place(std::uint32_t alignment,
                                           std::uint32_t nbytes) const {
  std::uint64_t offset = round_up(brk_, alignment);
  std::uint64_t new_brk = offset + round_up(nbytes, kMinAlign);
  return Placed{static_cast<std::uint32_t>(offset),
                static_cast<std::uint32_t>(new_brk), new_brk <= limit_};
}

std::uint32_t SymmetricHeap::alloc(std::uint32_t nbytes) {
  if (nbytes == 0) {
    return kNull;
  }
  Placed p = place(kMinAlign, nbytes);
  if (!p.fits) {
    return kNull;
  }
  blocks_.push_back(Block{brk_, p.offset, p.new_brk - p.offset});
  brk_ = p.new_brk;
  return p.offset;
}

void SymmetricHeap::free(std::uint32_t offset) {
  if (blocks_.empty() || offset < base_ || offset >= brk_) {
    throw HeapError(HeapError::Kind::unknown_block,
                    "free of unknown heap offset " + std::to_string(offset));
  }
  if (blocks_.back().offset != offset) {
    for (const Block& b : blocks_) {
      if (b.offset == offset) {
        throw HeapError(HeapError::Kind::out_of_order,
                        "free of offset " + std::to_string(offset) +
                            " violates linear ordering: not the most recent "
                            "live allocation");
      }
    }
    throw HeapError(HeapError::Kind::unknown_block,
                    "free of unknown heap offset " + std::to_string(offset));
  }
  brk_ = blocks_.back().start;
  blocks_.pop_back();
}

std::uint32_t SymmetricHeap::realloc(std::uint32_t offset,
                                     std::uint32_t nbytes) {
  if (nbytes == 0) {
    free(offset);
    return kNull;
  }
  if (blocks_.empty() || blocks_.back().offset != offset) {
    bool known = false;
    for (const Block& b : blocks_) {
      known = known || b.offset == offset;
    }
    if (known) {
      throw HeapError(HeapError::Kind::out_of_order,
                      "realloc of offset " + std::to_string(offset) +
                          " violates linear ordering: not the most recent "
                          "live allocation");
    }
    throw HeapError(HeapError::Kind::unknown_block,
                    "realloc of unknown heap offset " + std::to_string(offset));
  }
  std::uint64_t new_brk =
      static_cast<std::uint64_t>(offset) + round_up(nbytes, kMinAlign);
  if (new_brk > limit_) {
    return kNull;  // block left intact
  }
  blocks_.back().size = static_cast<std::uint32_t>(new_brk) - offset;
  brk_ = static_cast<std::uint32_t>(new_brk);
  return offset;
}

std::uint32_t SymmetricHeap::memalign(std::uint32_t alignment,
                                      std::uint32_t nbytes) {
  if (alignment < kMinAlign || !std::has_single_bit(alignment)) {
    throw HeapError(HeapError::Kind::bad_alignment,
                    "alignment " + std::to_string(alignment) +
                        " is not a power of two >= 8");
  }
  if (nbytes == 0) {
    return kNull;
  }
  Placed p = place(alignment, nbytes);
  if (!p.fits) {
    return kNull;
  }
  blocks_.push_back(Block{brk_, p.offset, p.new_brk - p.offset});
  brk_ = p.new_brk;
  return p.offset;
}

}  // namespace meshmem
