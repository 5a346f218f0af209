#include "meshmem/shmem.hpp"

#include <algorithm>

#include "meshmem/errors.hpp"

namespace meshmem {

namespace {
constexpr Cycles kLockBackoffInitialCycles = 16;
constexpr Cycles kLockBackoffCapCycles = 256;
}  // namespace

std::uint32_t InternalLayout::bytes_required() {
  std::uint32_t words = kMaxLogPes        // barrier pSync
                        + 1 + 1           // linear count + release
                        + 2 * kMaxLogPes + 1;  // static pSync
  return words * 8 + kStaticWrkElems * 8 + kScratchBytes;
}

InternalLayout InternalLayout::at(std::uint32_t heap_base) {
  InternalLayout l;
  l.area_base = heap_base - bytes_required();
  std::uint32_t at = l.area_base;
  l.barrier_psync = at;
  at += kMaxLogPes * 8;
  l.linear_count = at;
  at += 8;
  l.linear_release = at;
  at += 8;
  l.static_psync = at;
  at += (2 * kMaxLogPes + 1) * 8;
  l.static_pwrk = at;
  at += kStaticWrkElems * 8;
  l.scratch = at;
  return l;
}

ShmemCtx::ShmemCtx(PeContext& pe, const Workgroup& wg)
    : pe_(&pe),
      wg_(&wg),
      rank_(wg.pe_of_coord(pe.coord())),
      heap_(pe.config().heap_base, pe.config().effective_heap_limit()),
      internal_(InternalLayout::at(pe.config().heap_base)) {
  if (pe.config().heap_base < InternalLayout::bytes_required()) {
    throw ConfigError(
        "heap_base " + std::to_string(pe.config().heap_base) +
        " leaves no room for the runtime's reserved-region data (need " +
        std::to_string(InternalLayout::bytes_required()) + " bytes)");
  }
}

bool ShmemCtx::addr_accessible(std::uint32_t sym_offset, int pe) const {
  return pe_accessible(pe) && sym_offset >= heap_.base() &&
         sym_offset < heap_.limit();
}

GlobalAddress ShmemCtx::sym_addr(std::uint32_t offset, int pe) const {
  if (!pe_accessible(pe)) {
    throw AddressError("target PE " + std::to_string(pe) +
                       " is outside the workgroup [0," +
                       std::to_string(n_pes()) + ")");
  }
  return encode_address(wg_->coord_of_pe(pe), offset);
}

void ShmemCtx::check_heap_range(std::uint32_t offset, std::uint64_t len,
                                int pe, const char* what) const {
  if (!pe_accessible(pe)) {
    throw AddressError(std::string(what) + ": target PE " +
                       std::to_string(pe) + " is outside the workgroup [0," +
                       std::to_string(n_pes()) + ")");
  }
  if (!heap_.in_range(offset, len)) {
    throw AddressError(std::string(what) + ": [" + std::to_string(offset) +
                       "," + std::to_string(offset + len) +
                       ") is outside the symmetric heap [" +
                       std::to_string(heap_.base()) + "," +
                       std::to_string(heap_.limit()) + ")");
  }
}

void ShmemCtx::put_mem(std::uint32_t dest, std::span<const std::uint8_t> src,
                       int pe) {
  check_heap_range(dest, src.size(), pe, "put");
  pe_->write(sym_addr(dest, pe), src);
}

void ShmemCtx::get_mem(std::span<std::uint8_t> dest, std::uint32_t src,
                       int pe) {
  check_heap_range(src, dest.size(), pe, "get");
  pe_->read(sym_addr(src, pe), dest);
}

void ShmemCtx::check_strides(std::uint32_t sym_offset,
                             std::uint32_t sym_stride, std::size_t local_elems,
                             std::uint32_t local_stride, std::uint32_t nelems,
                             std::size_t elem_sz, int pe) const {
  if (sym_stride < 1 || local_stride < 1) {
    throw InvalidArgument("strides must be >= 1 element");
  }
  if (nelems == 0) return;
  std::uint64_t last_sym =
      sym_offset + static_cast<std::uint64_t>(nelems - 1) * sym_stride * elem_sz;
  check_heap_range(static_cast<std::uint32_t>(last_sym), elem_sz, pe,
                   "strided copy");
  check_heap_range(sym_offset, elem_sz, pe, "strided copy");
  std::uint64_t last_local = static_cast<std::uint64_t>(nelems - 1) * local_stride;
  if (last_local >= local_elems) {
    throw InvalidArgument("strided copy overruns the local buffer");
  }
}

std::uint64_t ShmemCtx::atomic_raw(std::uint32_t dest, AtomicOp op,
                                   unsigned width, std::uint64_t operand,
                                   std::uint64_t compare, int pe) {
  check_heap_range(dest, width, pe, "atomic");
  return pe_->atomic_rmw(sym_addr(dest, pe), op, width, operand, compare);
}

void ShmemCtx::fence() {
  pe_->trace_marker(TraceKind::fence);
  pe_->advance(timing().fence_cycles);
}

void ShmemCtx::quiet() {
  pe_->trace_marker(TraceKind::quiet);
  pe_->advance(timing().fence_cycles);
}

void ShmemCtx::set_lock(std::uint32_t lock_offset) {
  check_heap_range(lock_offset, 4, 0, "lock");
  Cycles backoff = kLockBackoffInitialCycles;
  for (;;) {
    std::uint64_t old =
        pe_->atomic_rmw(sym_addr(lock_offset, 0), AtomicOp::test_and_set, 4, 1);
    if (old == 0) {
      return;
    }
    if (mode() == Mode::timed) {
      pe_->advance(backoff);
      backoff = std::min<Cycles>(backoff * 2, kLockBackoffCapCycles);
    }
    // Functional mode re-attempts on its next scheduler turn; the
    // atomic_rmw above is itself the turn boundary.
  }
}

bool ShmemCtx::test_lock(std::uint32_t lock_offset) {
  check_heap_range(lock_offset, 4, 0, "lock");
  std::uint64_t old =
      pe_->atomic_rmw(sym_addr(lock_offset, 0), AtomicOp::test_and_set, 4, 1);
  return old != 0;  // false = acquired
}

void ShmemCtx::clear_lock(std::uint32_t lock_offset) {
  check_heap_range(lock_offset, 4, 0, "lock");
  pe_->atomic_rmw(sym_addr(lock_offset, 0), AtomicOp::swap, 4, 0);
}

std::uint64_t ShmemCtx::next_collective_call(std::uint32_t psync_offset) {
  return collective_calls_[psync_offset]++;
}

SyncWork ShmemCtx::alloc_sync(int max_k, std::uint32_t max_nreduce,
                              ElemType widest) {
  SyncWork sync;
  sync.psync_words =
      std::max(barrier_sync_words(max_k), reduce_sync_words(max_k));
  sync.pwrk_bytes = reduce_wrk_elems(max_k, max_nreduce) *
                    static_cast<std::uint32_t>(elem_size(widest));
  sync.psync_offset = heap_.alloc(std::max(sync.psync_words, 1u) * 8);
  sync.pwrk_offset = heap_.alloc(std::max(sync.pwrk_bytes, 8u));
  if (sync.psync_offset == SymmetricHeap::kNull ||
      sync.pwrk_offset == SymmetricHeap::kNull) {
    throw SyncError("symmetric heap exhausted while allocating SyncWork");
  }
  // Reused heap bytes may hold junk; pSync must start at the sentinel.
  std::vector<std::uint8_t> zeros(std::max(sync.psync_words, 1u) * 8, 0);
  pe_->write(sym_addr(sync.psync_offset, rank_), zeros);
  return sync;
}

SyncWork ShmemCtx::static_sync() const {
  SyncWork sync;
  sync.psync_offset = internal_.static_psync;
  sync.psync_words = 2 * InternalLayout::kMaxLogPes + 1;
  sync.pwrk_offset = internal_.static_pwrk;
  sync.pwrk_bytes = InternalLayout::kStaticWrkElems * 8;
  return sync;
}

MachineReport shmem_run(Machine& m, const Workgroup& wg,
                        const ShmemProgram& program) {
  validate_workgroup(wg, m.grid());
  return m.run_spmd([&wg, &program](PeContext& pe) -> int {
    if (!wg.is_live(pe.coord())) {
      return 0;
    }
    ShmemCtx ctx(pe, wg);
    return program(ctx);
  });
}

MachineReport shmem_run(Machine& m, const ShmemProgram& program) {
  return shmem_run(m, m.grid(), program);
}

}  // namespace meshmem
