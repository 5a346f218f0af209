#pragma once

#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "meshmem/collectives.hpp"
#include "meshmem/heap.hpp"
#include "meshmem/machine.hpp"
#include "meshmem/topology.hpp"

namespace meshmem {

/// Offsets of the runtime's per-PE static symmetric data. The area sits at
/// the top of the reserved region, just below the heap base, at identical
/// offsets on every PE: internal barrier pSync, the linear-barrier count
/// and release words, a statically sized SyncWork for harness use, and a
/// small scratch block.
struct InternalLayout {
  static constexpr int kMaxLogPes = 12;  // grids up to 64x64
  static constexpr std::uint32_t kStaticWrkElems = 64;
  static constexpr std::uint32_t kScratchBytes = 64;

  std::uint32_t area_base = 0;
  std::uint32_t barrier_psync = 0;   // kMaxLogPes words
  std::uint32_t linear_count = 0;    // 1 word
  std::uint32_t linear_release = 0;  // 1 word
  std::uint32_t static_psync = 0;    // 2*kMaxLogPes + 1 words
  std::uint32_t static_pwrk = 0;     // kStaticWrkElems * 8 bytes
  std::uint32_t scratch = 0;         // kScratchBytes

  static std::uint32_t bytes_required();
  static InternalLayout at(std::uint32_t heap_base);
};

/// The per-PE runtime surface an SPMD program calls: accessibility queries,
/// symmetric heap management, put/get families, atomics, waits, ordering
/// points, locks, and the collectives. Valid only inside the PE's logical
/// process for one run.
class ShmemCtx {
 public:
  ShmemCtx(PeContext& pe, const Workgroup& wg);

  // -- setup / accessibility ------------------------------------------------
  int my_pe() const { return rank_; }
  int n_pes() const { return wg_->n_pes(); }
  bool pe_accessible(int pe) const { return pe >= 0 && pe < n_pes(); }
  /// True iff the symmetric offset decodes into pe's heap region.
  bool addr_accessible(std::uint32_t sym_offset, int pe) const;

  const Workgroup& workgroup() const { return *wg_; }
  PeContext& machine_pe() { return *pe_; }
  const PeContext& machine_pe() const { return *pe_; }
  Mode mode() const { return pe_->mode(); }
  Timestamp clock() const { return pe_->clock(); }
  const TimingParams& timing() const { return pe_->timing(); }
  const InternalLayout& internal_layout() const { return internal_; }

  // -- symmetric heap -------------------------------------------------------
  std::uint32_t malloc(std::uint32_t nbytes) { return heap_.alloc(nbytes); }
  void free(std::uint32_t offset) { heap_.free(offset); }
  std::uint32_t realloc(std::uint32_t offset, std::uint32_t nbytes) {
    return heap_.realloc(offset, nbytes);
  }
  std::uint32_t memalign(std::uint32_t alignment, std::uint32_t nbytes) {
    return heap_.memalign(alignment, nbytes);
  }
  SymmetricHeap& heap() { return heap_; }

  // -- put / get ------------------------------------------------------------
  /// Block copy of raw bytes into the target PE's heap; blocking until
  /// delivered, charged with the cpu-engine transfer model.
  void put_mem(std::uint32_t dest, std::span<const std::uint8_t> src, int pe);
  void get_mem(std::span<std::uint8_t> dest, std::uint32_t src, int pe);

  template <typename T>
  void put(std::uint32_t dest, std::span<const T> src, int pe) {
    put_mem(dest, as_bytes_span(src), pe);
  }
  template <typename T>
  void put_elem(std::uint32_t dest, T value, int pe) {
    put(dest, std::span<const T>(&value, 1), pe);
  }
  template <typename T>
  void get(std::span<T> dest, std::uint32_t src, int pe) {
    get_mem({reinterpret_cast<std::uint8_t*>(dest.data()),
             dest.size() * sizeof(T)},
            src, pe);
  }
  template <typename T>
  T get_elem(std::uint32_t src, int pe) {
    T v{};
    get(std::span<T>(&v, 1), src, pe);
    return v;
  }

  /// Strided element copy, a loop of elemental transfers. Strides are in
  /// elements and must be >= 1; every strided index is range-checked before
  /// any transfer happens.
  template <typename T>
  void strided_put(std::uint32_t dest, std::uint32_t dest_stride,
                   std::span<const T> src, std::uint32_t src_stride,
                   std::uint32_t nelems, int pe) {
    check_strides(dest, dest_stride, src.size(), src_stride, nelems,
                  sizeof(T), pe);
    for (std::uint32_t k = 0; k < nelems; ++k) {
      put_elem<T>(dest + k * dest_stride * sizeof(T), src[k * src_stride], pe);
    }
  }
  template <typename T>
  void strided_get(std::span<T> dest, std::uint32_t dest_stride,
                   std::uint32_t src, std::uint32_t src_stride,
                   std::uint32_t nelems, int pe) {
    check_strides(src, src_stride, dest.size(), dest_stride, nelems,
                  sizeof(T), pe);
    for (std::uint32_t k = 0; k < nelems; ++k) {
      dest[k * dest_stride] = get_elem<T>(src + k * src_stride * sizeof(T), pe);
    }
  }

  /// Local load/store convenience over the put/get-to-self path.
  template <typename T>
  void store(std::uint32_t offset, T value) {
    put_elem<T>(offset, value, rank_);
  }
  template <typename T>
  T load(std::uint32_t offset) {
    return get_elem<T>(offset, rank_);
  }

  // -- atomics (32/64-bit integers) ------------------------------------------
  template <typename T>
  T atomic_fetch_add(std::uint32_t dest, T value, int pe) {
    return static_cast<T>(atomic_raw(dest, AtomicOp::add, sizeof(T),
                                     static_cast<std::uint64_t>(value), 0, pe));
  }
  template <typename T>
  void atomic_add(std::uint32_t dest, T value, int pe) {
    atomic_fetch_add(dest, value, pe);
  }
  template <typename T>
  T atomic_fetch_inc(std::uint32_t dest, int pe) {
    return atomic_fetch_add<T>(dest, T{1}, pe);
  }
  template <typename T>
  void atomic_inc(std::uint32_t dest, int pe) {
    atomic_fetch_add<T>(dest, T{1}, pe);
  }
  template <typename T>
  T atomic_swap(std::uint32_t dest, T value, int pe) {
    return static_cast<T>(atomic_raw(dest, AtomicOp::swap, sizeof(T),
                                     static_cast<std::uint64_t>(value), 0, pe));
  }
  template <typename T>
  T atomic_compare_swap(std::uint32_t dest, T expected, T desired, int pe) {
    return static_cast<T>(
        atomic_raw(dest, AtomicOp::compare_swap, sizeof(T),
                   static_cast<std::uint64_t>(desired),
                   static_cast<std::uint64_t>(expected), pe));
  }

  // -- waits and ordering ----------------------------------------------------
  /// Returns once memory-at-offset cmp value holds on this PE. The blocked
  /// PE consumes no scheduler turns; in timed mode the clock advances to
  /// the satisfying store's timestamp plus one poll quantum.
  template <typename T>
  void wait_until(std::uint32_t offset, Cmp cmp, T value) {
    check_heap_range(offset, sizeof(T), rank_, "wait_until target");
    std::uint64_t bits = 0;
    std::memcpy(&bits, &value, sizeof(T));
    pe_->wait_word(offset, elem_type_of_v<T>, cmp, bits, WakeRule::add_poll,
                   "wait_until");
  }

  /// Ordering points. Under the strong visibility model both are
  /// functional no-ops; each costs fence_cycles and is recorded in the
  /// event trace.
  void fence();
  void quiet();

  // -- locks ------------------------------------------------------------------
  /// The lock word lives on the workgroup's rank-0 PE and must start 0.
  /// set_lock spins on test-and-set, with exponential backoff in timed
  /// mode; test_lock is a single attempt returning false on acquisition;
  /// clear_lock releases unconditionally.
  void set_lock(std::uint32_t lock_offset);
  bool test_lock(std::uint32_t lock_offset);
  void clear_lock(std::uint32_t lock_offset);

  // -- collectives (defined in collectives.cpp) -------------------------------
  /// Full-workgroup barrier. Uses the chip's wait-on-AND event when the
  /// workgroup covers the whole chip with no disabled cores, and the
  /// dissemination barrier otherwise.
  void barrier_all();
  /// Dissemination barrier over an active set: ceil(log2 k) signal rounds,
  /// round r signaling member (i + 2^r) mod k.
  void barrier(const ActiveSet& aset, const SyncWork& sync);
  /// eSDK-style linear barrier, kept as a calibrated benchmark reference:
  /// non-root PEs signal rank 0 and wait for its release.
  void linear_barrier_reference();
  /// Recursive-doubling reduction over the active set; every member ends
  /// with op over all members' source arrays in dest. Non-power-of-two
  /// sets fold the extras into the lower power of two before the exchange
  /// rounds and broadcast the result back after.
  void reduce_to_all(ReduceKind op, ElemType type, std::uint32_t dest,
                     std::uint32_t src, std::uint32_t nreduce,
                     const ActiveSet& aset, const SyncWork& sync);
  template <typename T>
  void reduce_to_all(ReduceKind op, std::uint32_t dest, std::uint32_t src,
                     std::uint32_t nreduce, const ActiveSet& aset,
                     const SyncWork& sync) {
    reduce_to_all(op, elem_type_of_v<T>, dest, src, nreduce, aset, sync);
  }

  /// Heap-allocates a zeroed SyncWork sized for barriers and reductions
  /// over up to max_k members with vectors up to max_nreduce elements.
  SyncWork alloc_sync(int max_k, std::uint32_t max_nreduce = 1,
                      ElemType widest = ElemType::i64);
  /// The statically placed SyncWork in the reserved region; serves any
  /// active set on this machine without touching the heap.
  SyncWork static_sync() const;

 private:
  friend struct CollectiveCall;

  template <typename T>
  static std::span<const std::uint8_t> as_bytes_span(std::span<const T> s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()),
            s.size() * sizeof(T)};
  }

  GlobalAddress sym_addr(std::uint32_t offset, int pe) const;
  void check_heap_range(std::uint32_t offset, std::uint64_t len, int pe,
                        const char* what) const;
  void check_strides(std::uint32_t sym_offset, std::uint32_t sym_stride,
                     std::size_t local_elems, std::uint32_t local_stride,
                     std::uint32_t nelems, std::size_t elem_sz, int pe) const;
  std::uint64_t atomic_raw(std::uint32_t dest, AtomicOp op, unsigned width,
                           std::uint64_t operand, std::uint64_t compare,
                           int pe);
  std::uint64_t next_collective_call(std::uint32_t psync_offset);

  PeContext* pe_;
  const Workgroup* wg_;
  int rank_;
  SymmetricHeap heap_;
  InternalLayout internal_;
  std::map<std::uint32_t, std::uint64_t> collective_calls_;
};

using ShmemProgram = std::function<int(ShmemCtx&)>;

/// Runs an SPMD program over the workgroup's PEs. Machine cores outside
/// the workgroup exit immediately with status 0.
MachineReport shmem_run(Machine& m, const Workgroup& wg,
                        const ShmemProgram& program);
/// Same, with the workgroup spanning the whole machine.
MachineReport shmem_run(Machine& m, const ShmemProgram& program);

}  // namespace meshmem
