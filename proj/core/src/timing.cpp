#include "meshmem/timing.hpp"

#include <cstdlib>

#include "meshmem/errors.hpp"

namespace meshmem {

void TimingParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0)) {
      throw ConfigError(std::string("timing parameter ") + name +
                        " must be strictly positive");
    }
  };
  positive(clock_hz, "clock_hz");
  positive(cpu_copy_overhead_cycles, "cpu_copy_overhead_cycles");
  positive(cpu_cycles_per_dword, "cpu_cycles_per_dword");
  positive(dma_setup_cycles, "dma_setup_cycles");
  positive(dma_cycles_per_2dwords, "dma_cycles_per_2dwords");
  positive(hop_cycles, "hop_cycles");
  positive(remote_store_base_cycles, "remote_store_base_cycles");
  positive(wand_barrier_cycles, "wand_barrier_cycles");
  positive(linear_barrier_cycles_per_pe, "linear_barrier_cycles_per_pe");
  positive(dissemination_round_cycles, "dissemination_round_cycles");
  positive(flops_per_cycle_per_core, "flops_per_cycle_per_core");
  positive(poll_quantum_cycles, "poll_quantum_cycles");
  positive(fence_cycles, "fence_cycles");
}

int hops(Coord src, Coord dst) {
  return std::abs(src.row - dst.row) + std::abs(src.col - dst.col);
}

namespace {
inline std::uint64_t dwords(std::uint64_t nbytes) { return (nbytes + 7) / 8; }
}  // namespace

Cycles cpu_copy_cycles(const TimingParams& tp, std::uint64_t nbytes) {
  return tp.cpu_copy_overhead_cycles + tp.cpu_cycles_per_dword * dwords(nbytes);
}

Cycles dma_copy_cycles(const TimingParams& tp, std::uint64_t nbytes) {
  return tp.dma_setup_cycles + (tp.dma_cycles_per_2dwords * dwords(nbytes) + 1) / 2;
}

Cycles remote_transfer_cycles(const TimingParams& tp, Coord src, Coord dst,
                              std::uint64_t nbytes, CopyEngine engine) {
  Cycles copy = engine == CopyEngine::cpu ? cpu_copy_cycles(tp, nbytes)
                                          : dma_copy_cycles(tp, nbytes);
  return copy + static_cast<Cycles>(tp.hop_cycles) * hops(src, dst) +
         tp.remote_store_base_cycles;
}

double cycles_to_seconds(const TimingParams& tp, Cycles c) {
  return static_cast<double>(c) / tp.clock_hz;
}

Timestamp round_up_to_poll(const TimingParams& tp, Timestamp ts) {
  const Timestamp q = tp.poll_quantum_cycles;
  return (ts + q - 1) / q * q;
}

}  // namespace meshmem
