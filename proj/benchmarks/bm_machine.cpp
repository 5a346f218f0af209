// Host-side throughput of the simulator itself: scheduler turns, event
// application, and the allocator/codec fast paths.

#include <benchmark/benchmark.h>

#include "meshmem/heap.hpp"
#include "meshmem/machine.hpp"

using namespace meshmem;

namespace {

MachineConfig config(Mode mode) {
  MachineConfig cfg;
  cfg.mode = mode;
  return cfg;
}

void BM_FunctionalTurns(benchmark::State& state) {
  Machine m(config(Mode::functional));
  const int spins = static_cast<int>(state.range(0));
  std::uint64_t turns = 0;
  for (auto _ : state) {
    MachineReport r = m.run_spmd([&](PeContext& pe) -> int {
      for (int i = 0; i < spins; ++i) pe.yield();
      return 0;
    });
    turns += r.turns;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(turns));
}

void BM_TimedPutEvents(benchmark::State& state) {
  Machine m(config(Mode::timed));
  const int puts = static_cast<int>(state.range(0));
  std::uint64_t events = 0;
  for (auto _ : state) {
    MachineReport r = m.run_spmd([&](PeContext& pe) -> int {
      std::uint8_t data[8] = {1, 2, 3, 4, 5, 6, 7, 8};
      int next = (pe.pe() + 1) % pe.n_pes();
      GlobalAddress dst =
          encode_address(pe.coord().row == 0 ? pe.coord()
                                             : Coord{32 + next / 4, 8 + next % 4},
                         16384);
      for (int i = 0; i < puts; ++i) {
        pe.write(dst, data);
      }
      return 0;
    });
    events += r.events_applied;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(events));
}

void BM_AtomicContention(benchmark::State& state) {
  Machine m(config(Mode::functional));
  const int adds = static_cast<int>(state.range(0));
  std::uint64_t total = 0;
  for (auto _ : state) {
    MachineReport r = m.run_spmd([&](PeContext& pe) -> int {
      GlobalAddress counter = encode_address(Coord{32, 8}, 16384);
      for (int i = 0; i < adds; ++i) {
        pe.atomic_rmw(counter, AtomicOp::add, 8, 1);
      }
      return 0;
    });
    total += r.turns;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(total));
}

void BM_HeapAllocFree(benchmark::State& state) {
  for (auto _ : state) {
    SymmetricHeap h(16384, 32768);
    for (int i = 0; i < 64; ++i) {
      benchmark::DoNotOptimize(h.alloc(64));
    }
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * 64);
}

void BM_AddressCodec(benchmark::State& state) {
  std::uint32_t offset = 0;
  for (auto _ : state) {
    GlobalAddress ga = encode_address(Coord{32, 8}, offset & 0xFFFFF);
    benchmark::DoNotOptimize(ga.coord());
    benchmark::DoNotOptimize(ga.offset());
    ++offset;
  }
  state.SetItemsProcessed(state.iterations());
}

}  // namespace

BENCHMARK(BM_FunctionalTurns)->Arg(100)->Arg(1000);
BENCHMARK(BM_TimedPutEvents)->Arg(100);
BENCHMARK(BM_AtomicContention)->Arg(100);
BENCHMARK(BM_HeapAllocFree);
BENCHMARK(BM_AddressCodec);
