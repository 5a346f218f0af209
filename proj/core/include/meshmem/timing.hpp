#pragma once

#include <cstdint>

#include "meshmem/types.hpp"

namespace meshmem {

/// Calibration constants of the cycle model. Defaults reproduce the
/// measured device behavior: 600 MHz clock (16 cores x 2 flops/cycle =
/// 19.2 GFLOPS peak), 60-cycle hardware barrier (0.1 us), 75 cycles/PE
/// linear barrier (2.0 us at 16 PEs), and a CPU-copy/DMA cost pair whose
/// ratio stays inside the measured 2.1-9.9x band over 8 B..8 KiB.
struct TimingParams {
  double clock_hz = 6.0e8;
  std::uint32_t cpu_copy_overhead_cycles = 12;
  std::uint32_t cpu_cycles_per_dword = 2;
  std::uint32_t dma_setup_cycles = 120;
  std::uint32_t dma_cycles_per_2dwords = 9;
  std::uint32_t hop_cycles = 1;
  std::uint32_t remote_store_base_cycles = 8;
  std::uint32_t wand_barrier_cycles = 60;
  std::uint32_t linear_barrier_cycles_per_pe = 75;
  std::uint32_t dissemination_round_cycles = 90;
  std::uint32_t flops_per_cycle_per_core = 2;
  // Completion of a blocked wait or a DMA transfer is noticed by polling,
  // not instantly; both costs are quantized by this.
  std::uint32_t poll_quantum_cycles = 10;
  std::uint32_t fence_cycles = 4;

  /// Throws ConfigError unless every constant is strictly positive.
  void validate() const;
};

enum class CopyEngine { cpu, dma };

/// XY-routed mesh distance: |delta row| + |delta col|.
int hops(Coord src, Coord dst);

/// Optimized copy loop: overhead + per-double-word cost, partial dwords
/// round up. Defaults: 12 + 2*ceil(n/8).
Cycles cpu_copy_cycles(const TimingParams& tp, std::uint64_t nbytes);

/// Synchronous DMA transfer: setup + ceil(rate*ceil(n/8)/2). Defaults:
/// 120 + ceil(9*ceil(n/8)/2).
Cycles dma_copy_cycles(const TimingParams& tp, std::uint64_t nbytes);

/// End-to-end cost of one remote transfer: engine copy cycles plus one hop
/// cost per mesh hop plus the fixed remote-store base. src == dst adds no
/// hop term.
Cycles remote_transfer_cycles(const TimingParams& tp, Coord src, Coord dst,
                              std::uint64_t nbytes, CopyEngine engine);

double cycles_to_seconds(const TimingParams& tp, Cycles c);

/// Next poll tick at or after ts: ceil(ts / quantum) * quantum.
Timestamp round_up_to_poll(const TimingParams& tp, Timestamp ts);

}  // namespace meshmem
