#pragma once

#include <cstring>
#include <string>
#include <vector>

#include "meshmem/collectives.hpp"
#include "meshmem/shmem.hpp"

namespace meshmem::test {

inline MachineConfig make_config(Mode mode = Mode::timed,
                                 std::uint64_t seed = 1, int rows = 4,
                                 int cols = 4) {
  MachineConfig cfg;
  cfg.rows = rows;
  cfg.cols = cols;
  cfg.mode = mode;
  cfg.seed = seed;
  return cfg;
}

/// Runs the program over the whole machine and fails the test if any PE
/// program threw.
inline MachineReport run_ok(Machine& m, const ShmemProgram& program) {
  MachineReport report = shmem_run(m, program);
  for (std::size_t pe = 0; pe < report.failures.size(); ++pe) {
    if (!report.failures[pe].empty()) {
      FAIL("PE " << pe << " failed: " << report.failures[pe]);
    }
  }
  return report;
}

inline MachineReport run_ok(Machine& m, const Workgroup& wg,
                            const ShmemProgram& program) {
  MachineReport report = shmem_run(m, wg, program);
  for (std::size_t pe = 0; pe < report.failures.size(); ++pe) {
    if (!report.failures[pe].empty()) {
      FAIL("PE " << pe << " failed: " << report.failures[pe]);
    }
  }
  return report;
}

/// Sequential fold over member contributions in rank order: the
/// independent oracle the reductions are checked against. Integer sum and
/// product wrap modulo the type width, matching word arithmetic.
template <typename T>
std::vector<T> fold_oracle(ReduceKind op,
                           const std::vector<std::vector<T>>& per_member) {
  std::vector<T> acc = per_member.at(0);
  for (std::size_t i = 1; i < per_member.size(); ++i) {
    for (std::size_t e = 0; e < acc.size(); ++e) {
      T b = per_member[i][e];
      if constexpr (std::is_integral_v<T>) {
        using U = std::make_unsigned_t<T>;
        switch (op) {
          case ReduceKind::sum:
            acc[e] = static_cast<T>(static_cast<U>(acc[e]) + static_cast<U>(b));
            break;
          case ReduceKind::prod:
            acc[e] = static_cast<T>(static_cast<U>(acc[e]) * static_cast<U>(b));
            break;
          case ReduceKind::min: acc[e] = std::min(acc[e], b); break;
          case ReduceKind::max: acc[e] = std::max(acc[e], b); break;
          case ReduceKind::band: acc[e] = static_cast<T>(acc[e] & b); break;
          case ReduceKind::bor: acc[e] = static_cast<T>(acc[e] | b); break;
          case ReduceKind::bxor: acc[e] = static_cast<T>(acc[e] ^ b); break;
        }
      } else {
        switch (op) {
          case ReduceKind::sum: acc[e] = acc[e] + b; break;
          case ReduceKind::prod: acc[e] = acc[e] * b; break;
          case ReduceKind::min: acc[e] = std::min(acc[e], b); break;
          case ReduceKind::max: acc[e] = std::max(acc[e], b); break;
          default: break;
        }
      }
    }
  }
  return acc;
}

}  // namespace meshmem::test
