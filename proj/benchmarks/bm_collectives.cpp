// Collectives per second as seen by the host, timed and functional.

#include <benchmark/benchmark.h>

#include "meshmem/collectives.hpp"
#include "meshmem/shmem.hpp"

using namespace meshmem;

namespace {

MachineConfig config(Mode mode) {
  MachineConfig cfg;
  cfg.mode = mode;
  return cfg;
}

void BM_BarrierAll(benchmark::State& state) {
  Machine m(config(static_cast<Mode>(state.range(0))));
  const int reps = 100;
  for (auto _ : state) {
    shmem_run(m, [&](ShmemCtx& ctx) -> int {
      for (int i = 0; i < reps; ++i) ctx.barrier_all();
      return 0;
    });
  }
  state.SetItemsProcessed(state.iterations() * reps);
}

void BM_DisseminationBarrier(benchmark::State& state) {
  Machine m(config(static_cast<Mode>(state.range(0))));
  const int reps = 100;
  for (auto _ : state) {
    shmem_run(m, [&](ShmemCtx& ctx) -> int {
      SyncWork sync = ctx.alloc_sync(16);
      for (int i = 0; i < reps; ++i) {
        ctx.barrier(ActiveSet{0, 0, 16}, sync);
      }
      return 0;
    });
  }
  state.SetItemsProcessed(state.iterations() * reps);
}

void BM_ReduceToAll(benchmark::State& state) {
  Machine m(config(static_cast<Mode>(state.range(0))));
  const int reps = 50;
  for (auto _ : state) {
    shmem_run(m, [&](ShmemCtx& ctx) -> int {
      SyncWork sync = ctx.alloc_sync(16);
      std::uint32_t src = ctx.malloc(4);
      std::uint32_t dst = ctx.malloc(4);
      ctx.store<float>(src, 1.0f);
      for (int i = 0; i < reps; ++i) {
        ctx.reduce_to_all(ReduceKind::sum, ElemType::f32, dst, src, 1,
                          ActiveSet{0, 0, 16}, sync);
      }
      return 0;
    });
  }
  state.SetItemsProcessed(state.iterations() * reps);
}

}  // namespace

BENCHMARK(BM_BarrierAll)
    ->Arg(static_cast<int>(Mode::functional))
    ->Arg(static_cast<int>(Mode::timed));
BENCHMARK(BM_DisseminationBarrier)
    ->Arg(static_cast<int>(Mode::functional))
    ->Arg(static_cast<int>(Mode::timed));
BENCHMARK(BM_ReduceToAll)
    ->Arg(static_cast<int>(Mode::functional))
    ->Arg(static_cast<int>(Mode::timed));
