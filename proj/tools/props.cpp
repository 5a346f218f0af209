#include <cmath>
#include <cstring>
#include <ostream>
#include <random>
#include <set>
#include <vector>

#include "cli.hpp"
#include "meshmem/bench.hpp"
#include "meshmem/collectives.hpp"
#include "meshmem/errors.hpp"
#include "meshmem/shmem.hpp"

namespace meshmem {

namespace {

struct PropRunner {
  std::ostream& out;
  int failures = 0;

  template <typename Fn>
  void check(const char* name, Fn&& fn) {
    try {
      std::string detail = fn();
      if (detail.empty()) {
        out << "PASS " << name << "\n";
      } else {
        ++failures;
        out << "FAIL " << name << ": " << detail << "\n";
      }
    } catch (const std::exception& e) {
      ++failures;
      out << "FAIL " << name << ": " << e.what() << "\n";
    }
  }
};

std::string prop_address_codec(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int i = 0; i < 1000; ++i) {
    Coord c{static_cast<int>(rng() % 64), static_cast<int>(rng() % 64)};
    std::uint32_t offset = static_cast<std::uint32_t>(rng() % (1u << 20));
    GlobalAddress ga = encode_address(c, offset);
    if (ga.coord() != c || ga.offset() != offset) {
      return "encode/decode mismatch at " + to_string(c) + " offset " +
             std::to_string(offset);
    }
  }
  if (encode_address(Coord{32, 8}, 0).raw() != 0x80800000u) {
    return "(32,8) offset 0 must encode to 0x80800000";
  }
  return "";
}

std::string prop_copy_band(const TimingParams& tp) {
  double prev = 1e30;
  for (std::uint64_t size = 8; size <= 8192; size *= 2) {
    double ratio = static_cast<double>(dma_copy_cycles(tp, size)) /
                   static_cast<double>(cpu_copy_cycles(tp, size));
    if (ratio < 2.1 || ratio > 9.9) {
      return "size " + std::to_string(size) + " ratio " +
             std::to_string(ratio) + " outside [2.1, 9.9]";
    }
    if (ratio > prev) {
      return "ratio not monotone nonincreasing at size " +
             std::to_string(size);
    }
    prev = ratio;
  }
  return "";
}

std::string prop_topology_bijection(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int trial = 0; trial < 200; ++trial) {
    int rows = 1 + static_cast<int>(rng() % 6);
    int cols = 1 + static_cast<int>(rng() % 6);
    Coord origin{1 + static_cast<int>(rng() % 32),
                 1 + static_cast<int>(rng() % 32)};
    std::vector<Coord> disabled;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (rows * cols > 1 && rng() % 5 == 0) {
          disabled.push_back(Coord{origin.row + r, origin.col + c});
        }
      }
    }
    if (static_cast<int>(disabled.size()) == rows * cols) {
      disabled.pop_back();
    }
    Workgroup wg(origin, rows, cols, disabled);
    for (int pe = 0; pe < wg.n_pes(); ++pe) {
      if (wg.pe_of_coord(wg.coord_of_pe(pe)) != pe) {
        return "rank " + std::to_string(pe) + " does not round-trip";
      }
    }
  }
  return "";
}

std::string prop_heap_symmetry(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<SymmetricHeap> replicas;
    for (int i = 0; i < 4; ++i) replicas.emplace_back(16384, 32768);
    std::vector<std::uint32_t> live;
    for (int step = 0; step < 200; ++step) {
      std::uint64_t roll = rng() % 4;
      std::uint32_t nbytes = 1 + static_cast<std::uint32_t>(rng() % 512);
      std::uint32_t align = 8u << (rng() % 4);
      bool is_alloc = roll == 0 || live.empty();
      std::uint32_t result0 = 0;
      for (std::size_t i = 0; i < replicas.size(); ++i) {
        std::uint32_t r = 0;
        if (is_alloc) {
          r = replicas[i].alloc(nbytes);
        } else if (roll == 1) {
          replicas[i].free(live.back());
        } else if (roll == 2) {
          r = replicas[i].realloc(live.back(), nbytes);
        } else {
          r = replicas[i].memalign(align, nbytes);
        }
        if (i == 0) {
          result0 = r;
        } else if (r != result0) {
          return "replica " + std::to_string(i) +
                 " diverged on step " + std::to_string(step);
        }
      }
      if ((is_alloc || roll == 3) && result0 != SymmetricHeap::kNull) {
        live.push_back(result0);
      } else if (!is_alloc && roll == 1) {
        live.pop_back();
      }
      // realloc keeps the same offset (or fails leaving the block), so the
      // shadow list is unchanged either way
    }
    // out-of-order free must raise
    SymmetricHeap h(16384, 32768);
    std::uint32_t a = h.alloc(8);
    std::uint32_t b = h.alloc(8);
    (void)b;
    bool raised = false;
    try {
      h.free(a);
    } catch (const HeapError& e) {
      raised = e.kind() == HeapError::Kind::out_of_order;
    }
    if (!raised) return "out-of-order free did not raise";
  }
  return "";
}

MachineConfig small_functional_config(std::uint64_t seed) {
  MachineConfig cfg;
  cfg.mode = Mode::functional;
  cfg.seed = seed;
  return cfg;
}

std::string prop_lock_exclusion(std::uint64_t seed) {
  constexpr int kIncrements = 20;
  for (std::uint64_t s = seed; s < seed + 10; ++s) {
    MachineConfig cfg = small_functional_config(s);
    Machine m(cfg);
    int inside = 0;
    bool overlap = false;
    MachineReport report = shmem_run(m, [&](ShmemCtx& ctx) -> int {
      std::uint32_t lock = ctx.malloc(4);
      std::uint32_t counter = ctx.malloc(8);
      for (int i = 0; i < kIncrements; ++i) {
        ctx.set_lock(lock);
        if (++inside != 1) overlap = true;
        auto v = ctx.get_elem<std::int64_t>(counter, 0);
        ctx.put_elem<std::int64_t>(counter, v + 1, 0);
        --inside;
        ctx.clear_lock(lock);
      }
      ctx.barrier_all();
      return 0;
    });
    for (const auto& f : report.failures) {
      if (!f.empty()) return "program failed: " + f;
    }
    auto bytes = m.debug_read(0, cfg.heap_base + 8, 8);
    std::int64_t counter = 0;
    std::memcpy(&counter, bytes.data(), 8);
    std::int64_t expect = static_cast<std::int64_t>(m.n_pes()) * kIncrements;
    if (overlap) return "two PEs were inside the critical section";
    if (counter != expect) {
      return "seed " + std::to_string(s) + ": counter " +
             std::to_string(counter) + " != " + std::to_string(expect);
    }
  }
  return "";
}

std::string prop_reduce_oracle(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int k = 1; k <= 16; ++k) {
    MachineConfig cfg = small_functional_config(seed + k);
    Machine m(cfg);
    // two sample cases per k
    for (int rep = 0; rep < 2; ++rep) {
      std::uint32_t nreduce = 1 + static_cast<std::uint32_t>(rng() % 4);
      std::vector<double> data(static_cast<std::size_t>(k) * nreduce);
      for (auto& d : data) {
        d = static_cast<double>(rng() % 1000) / 250.0;
      }
      std::vector<double> expect(data.begin(), data.begin() + nreduce);
      for (int i = 1; i < k; ++i) {
        for (std::uint32_t e = 0; e < nreduce; ++e) {
          expect[e] += data[static_cast<std::size_t>(i) * nreduce + e];
        }
      }
      bool mismatch = false;
      MachineReport report = shmem_run(m, [&](ShmemCtx& ctx) -> int {
        SyncWork sync = ctx.alloc_sync(k, nreduce, ElemType::f64);
        std::uint32_t src = ctx.malloc(nreduce * 8);
        std::uint32_t dst = ctx.malloc(nreduce * 8);
        ctx.barrier_all();
        if (ctx.my_pe() < k) {
          for (std::uint32_t e = 0; e < nreduce; ++e) {
            ctx.store<double>(
                src + e * 8,
                data[static_cast<std::size_t>(ctx.my_pe()) * nreduce + e]);
          }
          ctx.reduce_to_all(ReduceKind::sum, ElemType::f64, dst, src, nreduce,
                            ActiveSet{0, 0, k}, sync);
          for (std::uint32_t e = 0; e < nreduce; ++e) {
            double got = ctx.load<double>(dst + e * 8);
            if (std::abs(got - expect[e]) >
                1e-5 * std::max(1.0, std::abs(expect[e]))) {
              mismatch = true;
            }
          }
        }
        ctx.barrier_all();
        return 0;
      });
      for (const auto& f : report.failures) {
        if (!f.empty()) return "program failed: " + f;
      }
      if (mismatch) {
        return "k=" + std::to_string(k) + " sum differs from sequential fold";
      }
    }
  }
  return "";
}

std::string prop_barrier_safety(std::uint64_t seed) {
  MachineConfig cfg = small_functional_config(seed);
  Machine m(cfg);
  m.set_trace_enabled(true);
  const int n = m.n_pes();
  std::mt19937_64 rng(seed);
  std::vector<ActiveSet> sets;
  for (int i = 0; i < 100; ++i) {
    int size = 1 + static_cast<int>(rng() % n);
    int start = static_cast<int>(rng() % (n - (size - 1)));
    sets.push_back(ActiveSet{start, 0, size});
  }
  MachineReport report = shmem_run(m, [&](ShmemCtx& ctx) -> int {
    std::vector<SyncWork> pool;
    for (int i = 0; i < 8; ++i) pool.push_back(ctx.alloc_sync(n));
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const ActiveSet& aset = sets[i];
      int delta = ctx.my_pe() - aset.pe_start;
      if (delta >= 0 && delta < aset.pe_size) {
        ctx.barrier(aset, pool[i % pool.size()]);
      }
      if (i % pool.size() == pool.size() - 1) {
        ctx.barrier_all();  // quiesce before SyncWork reuse
      }
    }
    ctx.barrier_all();
    return 0;
  });
  for (const auto& f : report.failures) {
    if (!f.empty()) return "program failed: " + f;
  }
  auto violations = check_barrier_trace(m.trace(), cfg.mode);
  if (!violations.empty()) {
    return violations.front();
  }
  return "";
}

}  // namespace

int run_props(const ParsedConfig& pc, std::ostream& out) {
  PropRunner runner{out};
  const std::uint64_t seed = pc.machine.seed;
  runner.check("address-codec", [&] { return prop_address_codec(seed); });
  runner.check("copy-band",
               [&] { return prop_copy_band(pc.machine.timing); });
  runner.check("topology-bijection",
               [&] { return prop_topology_bijection(seed); });
  runner.check("heap-symmetry", [&] { return prop_heap_symmetry(seed); });
  runner.check("lock-exclusion", [&] { return prop_lock_exclusion(seed); });
  runner.check("reduce-oracle", [&] { return prop_reduce_oracle(seed); });
  runner.check("barrier-safety", [&] { return prop_barrier_safety(seed); });
  out << (runner.failures == 0 ? "all properties passed\n"
                               : std::to_string(runner.failures) +
                                     " properties failed\n");
  return runner.failures;
}

}  // namespace meshmem
