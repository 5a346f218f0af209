#include "meshmem/bench.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>

#include "meshmem/collectives.hpp"
#include "meshmem/errors.hpp"
#include "meshmem/shmem.hpp"

namespace meshmem {

namespace {
// Loop setup and drain around the fused multiply-add kernel.
constexpr Cycles kDotLoopOverheadCycles = 20;

std::string mode_name(Mode m) {
  return m == Mode::timed ? "timed" : "functional";
}

std::string machine_desc(const Machine& m) {
  const MachineConfig& c = m.config();
  char buf[128];
  std::snprintf(buf, sizeof buf, "%dx%d@(%d:%d) mem=%u mode=%s seed=%llu",
                c.rows, c.cols, c.origin.row, c.origin.col, c.mem_per_core,
                mode_name(c.mode).c_str(),
                static_cast<unsigned long long>(c.seed));
  std::string desc(buf);
  if (!c.disabled.empty()) {
    desc += " disabled=" + std::to_string(c.disabled.size());
  }
  return desc;
}

std::uint64_t read_u64(const Machine& m, int pe, std::uint32_t offset) {
  auto bytes = m.debug_read(pe, offset, 8);
  std::uint64_t v = 0;
  std::memcpy(&v, bytes.data(), 8);
  return v;
}

float read_f32(const Machine& m, int pe, std::uint32_t offset) {
  auto bytes = m.debug_read(pe, offset, 4);
  float v = 0;
  std::memcpy(&v, bytes.data(), 4);
  return v;
}

/// Deterministic per-PE vector data in [0.5, 1.5) so the float sum has no
/// catastrophic cancellation; derived from the machine seed.
void fill_dot_data(const MachineConfig& cfg, int pe, std::uint32_t n,
                   std::vector<float>& x, std::vector<float>& y) {
  std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ull *
                                  (static_cast<std::uint64_t>(pe) + 1)));
  x.resize(n);
  y.resize(n);
  auto next = [&rng] {
    return 0.5f + static_cast<float>(rng() >> 40) * (1.0f / 16777216.0f);
  };
  for (std::uint32_t i = 0; i < n; ++i) x[i] = next();
  for (std::uint32_t i = 0; i < n; ++i) y[i] = next();
}

struct DotOutcome {
  double value = 0;
  Cycles t0 = 0;
  Cycles t_mid = 0;
  Cycles t1 = 0;
};

DotOutcome run_dot_program(Machine& m, std::uint32_t n_per_pe) {
  const MachineConfig& cfg = m.config();
  const std::uint64_t vec_bytes = ((std::uint64_t{n_per_pe} * 4 + 7) / 8) * 8;
  if (cfg.heap_base + 2 * vec_bytes > cfg.effective_heap_limit()) {
    throw BenchError("dot-product vectors (" + std::to_string(2 * vec_bytes) +
                     " B) exceed the symmetric heap");
  }
  const InternalLayout layout = InternalLayout::at(cfg.heap_base);
  const std::uint32_t x_off = cfg.heap_base;
  const std::uint32_t y_off = cfg.heap_base + static_cast<std::uint32_t>(vec_bytes);

  std::vector<float> x, y;
  for (int pe = 0; pe < m.n_pes(); ++pe) {
    fill_dot_data(cfg, pe, n_per_pe, x, y);
    m.debug_write(pe, x_off,
                  {reinterpret_cast<const std::uint8_t*>(x.data()),
                   x.size() * 4});
    m.debug_write(pe, y_off,
                  {reinterpret_cast<const std::uint8_t*>(y.data()),
                   y.size() * 4});
  }

  const std::uint32_t scratch = layout.scratch;
  MachineReport report = shmem_run(m, [&](ShmemCtx& ctx) -> int {
    std::uint32_t xo = ctx.malloc(n_per_pe * 4);
    std::uint32_t yo = ctx.malloc(n_per_pe * 4);
    if (xo != x_off || yo != y_off) {
      throw BenchError("dot-product vector allocation mismatch");
    }
    ctx.barrier_all();
    const Cycles t0 = ctx.clock();

    // Local fused multiply-add kernel: 2 flops per element, charged at the
    // model's flops-per-cycle rate plus loop overhead.
    PeContext& pe = ctx.machine_pe();
    auto xb = pe.peek_bytes(xo, std::uint64_t{n_per_pe} * 4);
    auto yb = pe.peek_bytes(yo, std::uint64_t{n_per_pe} * 4);
    const float* xf = reinterpret_cast<const float*>(xb.data());
    const float* yf = reinterpret_cast<const float*>(yb.data());
    float acc = 0.0f;
    for (std::uint32_t i = 0; i < n_per_pe; ++i) {
      acc += xf[i] * yf[i];
    }
    const std::uint32_t fpc = ctx.timing().flops_per_cycle_per_core;
    pe.advance((2 * std::uint64_t{n_per_pe} + fpc - 1) / fpc +
               kDotLoopOverheadCycles);

    std::uint8_t accb[4];
    std::memcpy(accb, &acc, 4);
    pe.poke_bytes(scratch + 0, accb);
    const Cycles t_mid = ctx.clock();

    ctx.reduce_to_all(ReduceKind::sum, ElemType::f32, scratch + 8, scratch + 0,
                      1, ActiveSet{0, 0, ctx.n_pes()}, ctx.static_sync());
    const Cycles t1 = ctx.clock();

    std::uint8_t times[24];
    std::memcpy(times + 0, &t0, 8);
    std::memcpy(times + 8, &t_mid, 8);
    std::memcpy(times + 16, &t1, 8);
    pe.poke_bytes(scratch + 16, times);
    return 0;
  });
  for (const std::string& failure : report.failures) {
    if (!failure.empty()) {
      throw BenchError("dot-product program failed: " + failure);
    }
  }

  DotOutcome out;
  out.value = read_f32(m, 0, scratch + 8);
  out.t0 = read_u64(m, 0, scratch + 16);
  out.t_mid = read_u64(m, 0, scratch + 24);
  out.t1 = read_u64(m, 0, scratch + 32);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_u64(std::uint64_t v) {
  return std::to_string(v);
}

std::string BenchReport::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out += (i ? "," : "") + columns[i];
  }
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += (i ? "," : "") + row[i];
    }
    out += "\n";
  }
  return out;
}

std::vector<std::uint64_t> default_copy_sizes() {
  std::vector<std::uint64_t> sizes;
  for (std::uint64_t s = 8; s <= 8192; s *= 2) {
    sizes.push_back(s);
  }
  return sizes;
}

BenchReport bench_barrier(Machine& m) {
  if (m.mode() != Mode::timed) {
    throw BenchError("bench barrier requires a timed machine");
  }
  const InternalLayout layout = InternalLayout::at(m.config().heap_base);
  const std::uint32_t scratch = layout.scratch;
  MachineReport report = shmem_run(m, [&](ShmemCtx& ctx) -> int {
    const int k = ctx.n_pes();
    SyncWork sync = ctx.alloc_sync(k);
    ctx.barrier_all();  // align clocks before measuring

    const Cycles w0 = ctx.clock();
    ctx.barrier_all();
    const Cycles w1 = ctx.clock();

    const Cycles l0 = ctx.clock();
    ctx.linear_barrier_reference();
    const Cycles l1 = ctx.clock();

    const Cycles d0 = ctx.clock();
    ctx.barrier(ActiveSet{0, 0, k}, sync);
    const Cycles d1 = ctx.clock();

    std::uint8_t buf[24];
    const Cycles wand = w1 - w0, linear = l1 - l0, dissem = d1 - d0;
    std::memcpy(buf + 0, &wand, 8);
    std::memcpy(buf + 8, &linear, 8);
    std::memcpy(buf + 16, &dissem, 8);
    ctx.machine_pe().poke_bytes(scratch, buf);
    return 0;
  });
  for (const std::string& failure : report.failures) {
    if (!failure.empty()) {
      throw BenchError("barrier program failed: " + failure);
    }
  }

  const TimingParams& tp = m.config().timing;
  const std::uint64_t wand = read_u64(m, 0, scratch + 0);
  const std::uint64_t linear = read_u64(m, 0, scratch + 8);
  const std::uint64_t dissem = read_u64(m, 0, scratch + 16);

  BenchReport r;
  r.benchmark = "barrier";
  r.machine_desc = machine_desc(m);
  r.columns = {"benchmark", "machine",  "name",     "k",
               "cycles",    "seconds",  "clock_hz", "speedup_vs_linear"};
  auto add = [&](const char* name, std::uint64_t cycles) {
    double ratio = cycles == 0 ? 0.0
                               : static_cast<double>(linear) /
                                     static_cast<double>(cycles);
    r.rows.push_back({r.benchmark, r.machine_desc, name,
                      format_u64(static_cast<std::uint64_t>(m.n_pes())),
                      format_u64(cycles),
                      format_double(cycles_to_seconds(tp, cycles)),
                      format_double(tp.clock_hz), format_double(ratio)});
  };
  add("wand", wand);
  add("linear", linear);
  add("dissemination", dissem);
  return r;
}

BenchReport bench_copy(Machine& m, std::span<const std::uint64_t> sizes) {
  if (sizes.empty()) {
    throw BenchError("bench copy needs at least one transfer size");
  }
  const TimingParams& tp = m.config().timing;
  BenchReport r;
  r.benchmark = "copy";
  r.machine_desc = machine_desc(m);
  r.columns = {"benchmark",  "machine",  "size_bytes",
               "cpu_cycles", "dma_cycles", "clock_hz",
               "speedup",    "cpu_bandwidth_bytes_per_s"};
  for (std::uint64_t size : sizes) {
    if (size == 0) {
      throw BenchError("transfer sizes must be >= 1 byte");
    }
    const Cycles cpu = cpu_copy_cycles(tp, size);
    const Cycles dma = dma_copy_cycles(tp, size);
    const double speedup = static_cast<double>(dma) / static_cast<double>(cpu);
    const double bw = static_cast<double>(size) / cycles_to_seconds(tp, cpu);
    r.rows.push_back({r.benchmark, r.machine_desc, format_u64(size),
                      format_u64(cpu), format_u64(dma),
                      format_double(tp.clock_hz), format_double(speedup),
                      format_double(bw)});
  }
  return r;
}

BenchReport bench_dotprod(Machine& m, std::uint32_t n_per_pe) {
  if (m.mode() != Mode::timed) {
    throw BenchError("bench dotprod requires a timed machine");
  }
  DotOutcome out = run_dot_program(m, n_per_pe);
  const TimingParams& tp = m.config().timing;
  const int n_pes = m.n_pes();

  const double flops = 2.0 * n_per_pe * n_pes;
  const Cycles elapsed = out.t1 - out.t0;
  const Cycles reduce = out.t1 - out.t_mid;
  const double seconds = cycles_to_seconds(tp, elapsed);
  const double gflops = flops / seconds / 1e9;
  const double peak =
      static_cast<double>(n_pes) * tp.flops_per_cycle_per_core * tp.clock_hz /
      1e9;
  const double efficiency = gflops / peak;
  const double data_rate = 4.0 * gflops * 1e9;  // 4 bytes per flop

  BenchReport r;
  r.benchmark = "dotprod";
  r.machine_desc = machine_desc(m);
  r.columns = {"benchmark",      "machine",
               "n_pes",          "n_per_pe",
               "total_flops",    "elapsed_cycles",
               "elapsed_seconds", "clock_hz",
               "gflops",         "peak_gflops",
               "efficiency",     "reduce_cycles",
               "reduce_seconds", "data_rate_bytes_per_s",
               "dot_value"};
  r.rows.push_back(
      {r.benchmark, r.machine_desc, format_u64(n_pes), format_u64(n_per_pe),
       format_double(flops), format_u64(elapsed), format_double(seconds),
       format_double(tp.clock_hz), format_double(gflops), format_double(peak),
       format_double(efficiency), format_u64(reduce),
       format_double(cycles_to_seconds(tp, reduce)), format_double(data_rate),
       format_double(out.value)});
  return r;
}

double run_dotprod_value(Machine& m, std::uint32_t n_per_pe) {
  return run_dot_program(m, n_per_pe).value;
}

double dotprod_oracle(const Machine& m, std::uint32_t n_per_pe) {
  std::vector<float> x, y;
  double total = 0;
  for (int pe = 0; pe < m.n_pes(); ++pe) {
    fill_dot_data(m.config(), pe, n_per_pe, x, y);
    for (std::uint32_t i = 0; i < n_per_pe; ++i) {
      total += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    }
  }
  return total;
}

}  // namespace meshmem
