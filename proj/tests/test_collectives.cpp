#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "meshmem/collectives.hpp"
#include "meshmem/errors.hpp"
#include "meshmem/shmem.hpp"
#include "support/helpers.hpp"

using namespace meshmem;
using meshmem::test::fold_oracle;
using meshmem::test::make_config;
using meshmem::test::run_ok;

TEST_CASE("full-chip barrier_all costs the calibrated wand constant") {
  Machine m(make_config());
  run_ok(m, [](ShmemCtx& ctx) -> int {
    ctx.barrier_all();  // align clocks
    Timestamp c0 = ctx.clock();
    ctx.barrier_all();
    CHECK(ctx.clock() - c0 == 60);  // 0.1 us at 600 MHz
    return 0;
  });
}

TEST_CASE("barrier_all falls back to dissemination with a disabled core") {
  MachineConfig cfg = make_config();
  cfg.disabled = {Coord{33, 9}};
  Machine m(cfg);
  run_ok(m, [](ShmemCtx& ctx) -> int {
    CHECK(ctx.n_pes() == 15);
    ctx.barrier_all();
    Timestamp c0 = ctx.clock();
    ctx.barrier_all();
    CHECK(ctx.clock() - c0 == 4 * 90);  // ceil(log2 15) rounds
    return 0;
  });
}

TEST_CASE("single-PE barrier_all returns immediately") {
  Machine m(make_config(Mode::timed, 1, 1, 1));
  run_ok(m, [](ShmemCtx& ctx) -> int {
    Timestamp c0 = ctx.clock();
    ctx.barrier_all();
    CHECK(ctx.clock() == c0);
    return 0;
  });
}

TEST_CASE("dissemination barrier rounds follow ceil(log2 k)") {
  Machine m(make_config());
  run_ok(m, [](ShmemCtx& ctx) -> int {
    SyncWork sync = ctx.alloc_sync(16);
    ctx.barrier_all();

    Timestamp c0 = ctx.clock();
    ctx.barrier(ActiveSet{0, 0, 16}, sync);
    Timestamp full = ctx.clock() - c0;
    CHECK(full == 360);   // 4 rounds
    CHECK(full < 1200);   // cheaper than the linear reference

    c0 = ctx.clock();
    ctx.barrier(ActiveSet{0, 0, 16}, sync);  // reuse the same SyncWork
    CHECK(ctx.clock() - c0 == 360);

    if (ctx.my_pe() < 2) {
      c0 = ctx.clock();
      ctx.barrier(ActiveSet{0, 0, 2}, sync);
      CHECK(ctx.clock() - c0 == 90);  // one round
    }
    ctx.barrier_all();

    c0 = ctx.clock();
    ctx.barrier(ActiveSet{ctx.my_pe(), 0, 1}, sync);
    CHECK(ctx.clock() == c0);  // k = 1 is immediate
    return 0;
  });
}

TEST_CASE("barrier over a strided active set") {
  Machine m(make_config(Mode::functional, 3));
  run_ok(m, [](ShmemCtx& ctx) -> int {
    SyncWork sync = ctx.alloc_sync(8);
    // even ranks only: start 0, stride 2^1, size 8
    if (ctx.my_pe() % 2 == 0) {
      ctx.barrier(ActiveSet{0, 1, 8}, sync);
    }
    ctx.barrier_all();
    return 0;
  });
}

TEST_CASE("non-member barrier calls are rejected") {
  Machine m(make_config(Mode::functional, 3));
  run_ok(m, [](ShmemCtx& ctx) -> int {
    SyncWork sync = ctx.alloc_sync(4);
    if (ctx.my_pe() == 9) {
      CHECK_THROWS_AS(ctx.barrier(ActiveSet{0, 0, 4}, sync), InvalidArgument);
      CHECK_THROWS_AS(ctx.barrier(ActiveSet{0, 0, 17}, sync), InvalidArgument);
    }
    return 0;
  });
}

TEST_CASE("linear reference barrier is calibrated to 75 cycles per PE") {
  Machine m(make_config());
  run_ok(m, [](ShmemCtx& ctx) -> int {
    ctx.barrier_all();
    Timestamp c0 = ctx.clock();
    ctx.linear_barrier_reference();
    CHECK(ctx.clock() - c0 == 1200);  // 2.0 us at 600 MHz, 20x the wand
    return 0;
  });
  Machine one(make_config(Mode::timed, 1, 1, 1));
  run_ok(one, [](ShmemCtx& ctx) -> int {
    Timestamp c0 = ctx.clock();
    ctx.linear_barrier_reference();
    CHECK(ctx.clock() - c0 == 75);
    return 0;
  });
}

TEST_CASE("barrier safety holds across random subsets") {
  Machine m(make_config(Mode::functional, 17));
  m.set_trace_enabled(true);
  std::mt19937_64 rng(17);
  std::vector<ActiveSet> sets;
  for (int i = 0; i < 200; ++i) {
    int size = 1 + static_cast<int>(rng() % 16);
    int start = static_cast<int>(rng() % (16 - (size - 1)));
    sets.push_back(ActiveSet{start, 0, size});
  }
  run_ok(m, [&](ShmemCtx& ctx) -> int {
    std::vector<SyncWork> pool;
    for (int i = 0; i < 8; ++i) pool.push_back(ctx.alloc_sync(16));
    for (std::size_t i = 0; i < sets.size(); ++i) {
      int delta = ctx.my_pe() - sets[i].pe_start;
      if (delta >= 0 && delta < sets[i].pe_size) {
        ctx.barrier(sets[i], pool[i % pool.size()]);
      }
      if (i % pool.size() == pool.size() - 1) {
        ctx.barrier_all();
      }
    }
    ctx.barrier_all();
    return 0;
  });
  CHECK(check_barrier_trace(m.trace(), Mode::functional).empty());
}

TEST_CASE("pSync words rest at the sentinel between calls") {
  Machine m(make_config(Mode::functional, 23));
  std::uint32_t psync_offset = 0;
  std::uint32_t psync_words = 0;
  run_ok(m, [&](ShmemCtx& ctx) -> int {
    SyncWork sync = ctx.alloc_sync(16);
    psync_offset = sync.psync_offset;
    psync_words = sync.psync_words;
    for (int i = 0; i < 50; ++i) {
      ctx.barrier(ActiveSet{0, 0, 16}, sync);
    }
    return 0;
  });
  for (int pe = 0; pe < 16; ++pe) {
    auto bytes = m.debug_read(pe, psync_offset, psync_words * 8);
    for (std::uint8_t b : bytes) {
      REQUIRE(b == 0);
    }
  }
}

TEST_CASE("a corrupted pSync word is detected") {
  Machine m(make_config(Mode::functional, 29, 1, 2));
  MachineReport report = shmem_run(m, [](ShmemCtx& ctx) -> int {
    SyncWork sync = ctx.alloc_sync(2);
    if (ctx.my_pe() == 1) {
      ctx.store<std::int64_t>(sync.psync_offset, -5);
    }
    ctx.barrier(ActiveSet{0, 0, 2}, sync);
    return 0;
  });
  CHECK(report.failures[1].find("corrupted pSync") != std::string::npos);
}

TEST_CASE("sum over ranks reaches every member") {
  Machine m(make_config());
  run_ok(m, [](ShmemCtx& ctx) -> int {
    SyncWork sync = ctx.alloc_sync(16);
    std::uint32_t src = ctx.malloc(4);
    std::uint32_t dst = ctx.malloc(4);
    ctx.store<float>(src, static_cast<float>(ctx.my_pe()));
    ctx.reduce_to_all(ReduceKind::sum, ElemType::f32, dst, src, 1,
                      ActiveSet{0, 0, 16}, sync);
    CHECK(ctx.load<float>(dst) == 120.0f);  // 0+1+...+15
    return 0;
  });
}

TEST_CASE("single-member reduction copies source to dest") {
  Machine m(make_config(Mode::timed, 1, 1, 1));
  run_ok(m, [](ShmemCtx& ctx) -> int {
    SyncWork sync = ctx.alloc_sync(1);
    std::uint32_t src = ctx.malloc(8);
    std::uint32_t dst = ctx.malloc(8);
    ctx.store<double>(src, 3.25);
    ctx.reduce_to_all(ReduceKind::prod, ElemType::f64, dst, src, 1,
                      ActiveSet{0, 0, 1}, sync);
    CHECK(ctx.load<double>(dst) == 3.25);
    return 0;
  });
}

TEST_CASE("one-float sum over 16 PEs lands on the measured latency") {
  Machine m(make_config());
  run_ok(m, [](ShmemCtx& ctx) -> int {
    SyncWork sync = ctx.alloc_sync(16);
    std::uint32_t src = ctx.malloc(4);
    std::uint32_t dst = ctx.malloc(4);
    ctx.store<float>(src, 1.0f);
    ctx.barrier_all();
    Timestamp c0 = ctx.clock();
    ctx.reduce_to_all(ReduceKind::sum, ElemType::f32, dst, src, 1,
                      ActiveSet{0, 0, 16}, sync);
    Timestamp cost = ctx.clock() - c0;
    // 0.632 us at 600 MHz is 379.2 cycles; stay within +-30%
    CHECK(cost >= 266);
    CHECK(cost <= 493);
    return 0;
  });
}

TEST_CASE("reduction rejects malformed calls") {
  Machine m(make_config(Mode::functional, 31));
  run_ok(m, [](ShmemCtx& ctx) -> int {
    SyncWork sync = ctx.alloc_sync(16);
    std::uint32_t buf = ctx.malloc(64);
    if (ctx.my_pe() == 0) {
      CHECK_THROWS_AS(
          ctx.reduce_to_all(ReduceKind::band, ElemType::f32, buf, buf + 32, 1,
                            ActiveSet{0, 0, 16}, sync),
          InvalidArgument);  // bitwise op on floats
      CHECK_THROWS_AS(
          ctx.reduce_to_all(ReduceKind::sum, ElemType::f32, buf, buf + 8, 4,
                            ActiveSet{0, 0, 16}, sync),
          InvalidArgument);  // overlapping ranges
      CHECK_THROWS_AS(
          ctx.reduce_to_all(ReduceKind::sum, ElemType::f32, buf, buf + 32, 0,
                            ActiveSet{0, 0, 16}, sync),
          InvalidArgument);  // empty vector
    }
    return 0;
  });
}

TEST_CASE("mismatched nreduce across members is detected") {
  Machine m(make_config(Mode::functional, 37, 1, 2));
  try {
    shmem_run(m, [](ShmemCtx& ctx) -> int {
      SyncWork sync = ctx.alloc_sync(2, 4);
      std::uint32_t src = ctx.malloc(32);
      std::uint32_t dst = ctx.malloc(32);
      std::uint32_t n = ctx.my_pe() == 0 ? 1 : 2;
      ctx.reduce_to_all(ReduceKind::sum, ElemType::i32, dst, src, n,
                        ActiveSet{0, 0, 2}, sync);
      return 0;
    });
    FAIL("expected mismatch detection");
  } catch (const DeadlockError& e) {
    bool mismatch = false;
    for (const auto& b : e.blocked()) {
      mismatch =
          mismatch || b.waiting_on.find("inconsistent") != std::string::npos;
    }
    CHECK(mismatch);
  }
}

namespace {

template <typename T>
void reduce_oracle_case(Machine& m, ReduceKind op, int k, int pe_start,
                        int log_stride, std::uint32_t nreduce,
                        std::mt19937_64& rng) {
  std::vector<std::vector<T>> data(static_cast<std::size_t>(k));
  for (auto& v : data) {
    v.resize(nreduce);
    for (auto& x : v) {
      if constexpr (std::is_floating_point_v<T>) {
        if (op == ReduceKind::prod) {
          x = static_cast<T>(0.9 + 0.2 * static_cast<double>(rng() % 1000) /
                                       1000.0);
        } else {
          x = static_cast<T>(static_cast<double>(rng() % 2000) / 200.0 - 5.0);
        }
      } else {
        if (op == ReduceKind::prod) {
          x = static_cast<T>(1 + rng() % 3);
        } else {
          x = static_cast<T>(rng());
        }
      }
    }
  }
  std::vector<T> expect = fold_oracle<T>(op, data);
  run_ok(m, [&](ShmemCtx& ctx) -> int {
    SyncWork sync = ctx.alloc_sync(k, nreduce, elem_type_of_v<T>);
    std::uint32_t src = ctx.malloc(nreduce * sizeof(T));
    std::uint32_t dst = ctx.malloc(nreduce * sizeof(T));
    ctx.barrier_all();
    int delta = ctx.my_pe() - pe_start;
    int stride = 1 << log_stride;
    bool member = delta >= 0 && delta % stride == 0 && delta / stride < k;
    if (member) {
      int idx = delta / stride;
      for (std::uint32_t e = 0; e < nreduce; ++e) {
        ctx.store<T>(src + e * sizeof(T), data[idx][e]);
      }
      ctx.reduce_to_all(op, elem_type_of_v<T>, dst, src, nreduce,
                        ActiveSet{pe_start, log_stride, k}, sync);
      for (std::uint32_t e = 0; e < nreduce; ++e) {
        T got = ctx.load<T>(dst + e * sizeof(T));
        if constexpr (std::is_floating_point_v<T>) {
          if (op == ReduceKind::sum || op == ReduceKind::prod) {
            REQUIRE(std::abs(static_cast<double>(got - expect[e])) <=
                    1e-5 * std::max(1.0,
                                    std::abs(static_cast<double>(expect[e]))));
          } else {
            REQUIRE(got == expect[e]);
          }
        } else {
          REQUIRE(got == expect[e]);
        }
      }
    }
    ctx.barrier_all();
    return 0;
  });
  m.reset();
}

}  // namespace

TEST_CASE("reductions match the sequential fold oracle") {
  std::mt19937_64 rng(101);
  Machine m(make_config(Mode::functional, 41));
  const ReduceKind all_ops[] = {ReduceKind::sum,  ReduceKind::prod,
                                ReduceKind::min,  ReduceKind::max,
                                ReduceKind::band, ReduceKind::bor,
                                ReduceKind::bxor};
  for (ReduceKind op : all_ops) {
    for (int k : {1, 2, 3, 5, 7, 8, 12, 15, 16}) {
      std::uint32_t nreduce = 1 + static_cast<std::uint32_t>(rng() % 7);
      int type_pick = static_cast<int>(rng() % 6);
      switch (type_pick) {
        case 0: reduce_oracle_case<std::int8_t>(m, op, k, 0, 0, nreduce, rng); break;
        case 1: reduce_oracle_case<std::int16_t>(m, op, k, 0, 0, nreduce, rng); break;
        case 2: reduce_oracle_case<std::int32_t>(m, op, k, 0, 0, nreduce, rng); break;
        case 3: reduce_oracle_case<std::int64_t>(m, op, k, 0, 0, nreduce, rng); break;
        case 4:
          if (!reduce_applicable(op, ElemType::f32)) {
            reduce_oracle_case<std::int32_t>(m, op, k, 0, 0, nreduce, rng);
          } else {
            reduce_oracle_case<float>(m, op, k, 0, 0, nreduce, rng);
          }
          break;
        default:
          if (!reduce_applicable(op, ElemType::f64)) {
            reduce_oracle_case<std::int64_t>(m, op, k, 0, 0, nreduce, rng);
          } else {
            reduce_oracle_case<double>(m, op, k, 0, 0, nreduce, rng);
          }
          break;
      }
    }
  }
  // strided and offset active sets
  reduce_oracle_case<std::int32_t>(m, ReduceKind::sum, 8, 0, 1, 3, rng);
  reduce_oracle_case<std::int64_t>(m, ReduceKind::max, 4, 3, 1, 2, rng);
  reduce_oracle_case<float>(m, ReduceKind::sum, 5, 2, 1, 4, rng);
}

TEST_CASE("every member sees the identical reduced value") {
  Machine m(make_config(Mode::functional, 43));
  std::vector<float> results(16, 0.0f);
  run_ok(m, [&](ShmemCtx& ctx) -> int {
    SyncWork sync = ctx.alloc_sync(16);
    std::uint32_t src = ctx.malloc(4);
    std::uint32_t dst = ctx.malloc(4);
    ctx.store<float>(src, 0.1f * static_cast<float>(ctx.my_pe() + 1));
    ctx.reduce_to_all(ReduceKind::sum, ElemType::f32, dst, src, 1,
                      ActiveSet{0, 0, 16}, sync);
    results[ctx.my_pe()] = ctx.load<float>(dst);
    return 0;
  });
  for (int pe = 1; pe < 16; ++pe) {
    CHECK(results[pe] == results[0]);  // bitwise identical on every PE
  }
}
