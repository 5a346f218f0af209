#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "meshmem/machine.hpp"
#include "meshmem/types.hpp"

namespace meshmem {

/// OpenSHMEM 1.2 active-set triple naming the PEs of a collective:
/// workgroup ranks pe_start + i * 2^log_pe_stride for i in [0, pe_size).
struct ActiveSet {
  int pe_start = 0;
  int log_pe_stride = 0;
  int pe_size = 1;

  int stride() const { return 1 << log_pe_stride; }
  int world_rank(int index) const { return pe_start + index * stride(); }
};

/// Caller-provided symmetric synchronization and scratch storage for the
/// collectives. pSync is an array of 64-bit words at the same offset on
/// every member; between collective calls every word holds the sentinel
/// value 0. Signals are additive (atomic add of a tag, consumed by
/// subtracting it), so a signal for the next call arriving early never
/// corrupts the current one.
struct SyncWork {
  std::uint32_t psync_offset = 0;
  std::uint32_t psync_words = 0;
  std::uint32_t pwrk_offset = 0;
  std::uint32_t pwrk_bytes = 0;
};

inline constexpr std::int64_t kSyncSentinel = 0;
inline constexpr std::int64_t kBarrierSignal = 1;
/// Reduction signals carry 2 + nreduce so mismatched member arguments are
/// detectable; values 0 and 1 stay reserved for the sentinel and barriers.
inline constexpr std::int64_t kReduceTagBase = 2;

enum class ReduceKind : std::uint8_t { sum, prod, min, max, band, bor, bxor };

inline const char* reduce_name(ReduceKind k) {
  switch (k) {
    case ReduceKind::sum: return "sum";
    case ReduceKind::prod: return "prod";
    case ReduceKind::min: return "min";
    case ReduceKind::max: return "max";
    case ReduceKind::band: return "and";
    case ReduceKind::bor: return "or";
    case ReduceKind::bxor: return "xor";
  }
  return "?";
}

inline bool reduce_applicable(ReduceKind k, ElemType t) {
  if (k == ReduceKind::band || k == ReduceKind::bor || k == ReduceKind::bxor) {
    return is_integer(t);
  }
  return true;
}

inline int ceil_log2(int n) {
  return n <= 1 ? 0 : std::bit_width(static_cast<unsigned>(n - 1));
}

/// pSync words a barrier over k members needs: one per dissemination round.
inline std::uint32_t barrier_sync_words(int k) {
  return static_cast<std::uint32_t>(ceil_log2(k));
}

/// pSync words a reduction over k members needs: two call-parity banks of
/// recursive-doubling round slots plus one fold slot when k is not a power
/// of two. Never exceeds 2 * ceil(log2 k).
inline std::uint32_t reduce_sync_words(int k) {
  if (k <= 1) return 0;
  int m = std::bit_floor(static_cast<unsigned>(k));
  int rounds = ceil_log2(m);
  return static_cast<std::uint32_t>(2 * rounds + (k != m ? 1 : 0));
}

/// pWrk slots a reduction over k members subdivides into: two call-parity
/// banks of (rounds x 2 ping-pong halves) plus 2 fold halves when k is not
/// a power of two. The chunk size per slot is pwrk capacity / this.
inline std::uint32_t reduce_wrk_slots(int k) {
  if (k <= 1) return 0;
  int m = std::bit_floor(static_cast<unsigned>(k));
  int rounds = ceil_log2(m);
  return static_cast<std::uint32_t>(4 * rounds + (k != m ? 2 : 0));
}

/// Element count for a pWrk that serves reductions over up to k members:
/// the OpenSHMEM minimum max(nreduce/2+1, 16), raised when k needs more
/// slots than that.
inline std::uint32_t reduce_wrk_elems(int k, std::uint32_t nreduce) {
  std::uint32_t spec_min = std::max<std::uint32_t>(nreduce / 2 + 1, 16);
  return std::max(spec_min, reduce_wrk_slots(k));
}

/// Scans a machine trace for barrier-safety violations: within one barrier
/// instance, no PE's exit may precede any PE's entry, and entries must pair
/// with exits. Ordering uses timestamps in timed mode and the global trace
/// sequence otherwise. Returns one description per violation; empty means
/// the trace is safe.
std::vector<std::string> check_barrier_trace(
    const std::vector<TraceEvent>& trace, Mode mode);

}  // namespace meshmem
