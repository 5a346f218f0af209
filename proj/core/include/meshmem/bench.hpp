#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "meshmem/machine.hpp"

namespace meshmem {

/// Tabular result of one benchmark run. Cells are preformatted so that a
/// CSV round trip reproduces every value exactly; derived columns are
/// recomputable from the raw ones (seconds = cycles / clock_hz, and so on).
struct BenchReport {
  std::string benchmark;
  std::string machine_desc;  // comma-free, appears in the machine column
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Header line plus one line per row, '.' decimal, no locale.
  std::string to_csv() const;
};

std::string format_double(double v);  // round-trip exact (%.17g)
std::string format_u64(std::uint64_t v);

/// Barrier latency rows (wand barrier_all, linear reference, dissemination)
/// at k = n_pes, with a speedup-vs-linear column. Requires a timed machine.
BenchReport bench_barrier(Machine& m);

/// Copy-engine cost sweep from the machine's calibrated model: per size,
/// cpu cycles, dma cycles, dma/cpu speedup, and cpu-copy bandwidth.
BenchReport bench_copy(Machine& m, std::span<const std::uint64_t> sizes);
std::vector<std::uint64_t> default_copy_sizes();  // 8,16,...,8192

/// SPMD dot product: per-PE fused multiply-add loop over two n_per_pe
/// float vectors, then a one-float SUM reduction to all. Reports flops,
/// elapsed time, GFLOPS, efficiency against the model peak, the
/// reduction-phase time, the 4 bytes/flop data rate, and the dot value.
/// Requires a timed machine; vectors must fit the symmetric heap.
BenchReport bench_dotprod(Machine& m, std::uint32_t n_per_pe);

/// The same SPMD program in any mode, returning just the dot value.
double run_dotprod_value(Machine& m, std::uint32_t n_per_pe);

/// Sequential host-side oracle for the same data the machine program sees.
double dotprod_oracle(const Machine& m, std::uint32_t n_per_pe);

}  // namespace meshmem
