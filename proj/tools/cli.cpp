#include "cli.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meshmem/bench.hpp"
#include "meshmem/collectives.hpp"
#include "meshmem/errors.hpp"
#include "meshmem/shmem.hpp"

namespace meshmem {

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path,
                  "machine config file (key=value)");
  cmd->add_option("--seed", opts.seed, "override the machine RNG seed");
  cmd->add_option("--mode", opts.mode, "execution mode")
      ->check(CLI::IsMember({"functional", "timed"}));
}

ParsedConfig load_common(const CommonOpts& opts) {
  ParsedConfig pc;
  if (!opts.config_path.empty()) {
    pc = load_config_file(opts.config_path);
  }
  if (opts.seed) {
    pc.machine.seed = *opts.seed;
  }
  if (opts.mode) {
    pc.machine.mode = *opts.mode == "timed" ? Mode::timed : Mode::functional;
  }
  pc.machine.validate();
  return pc;
}

void emit_csv(const BenchReport& report, const std::string& csv_path) {
  if (csv_path.empty()) {
    std::cout << report.to_csv();
    return;
  }
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) {
    throw BenchError("cannot write CSV file '" + csv_path + "'");
  }
  out << report.to_csv();
}

int run_hello(Machine& m, const Workgroup& wg) {
  MachineReport report = shmem_run(m, wg, [](ShmemCtx& ctx) -> int {
    return ctx.my_pe();
  });
  std::printf("%d PEs on a %dx%d grid at (%d,%d)\n", wg.n_pes(), wg.rows(),
              wg.cols(), wg.origin().row, wg.origin().col);
  for (int pe = 0; pe < wg.n_pes(); ++pe) {
    Coord c = wg.coord_of_pe(pe);
    int machine_rank = m.grid().pe_of_coord(c);
    std::printf("pe %d at (%d,%d) exit=%d\n", pe, c.row, c.col,
                report.exit_codes[machine_rank]);
  }
  return 0;
}

int run_counter(Machine& m, const Workgroup& wg) {
  constexpr int kIncrements = 100;
  MachineReport report = shmem_run(m, wg, [](ShmemCtx& ctx) -> int {
    std::uint32_t lock = ctx.malloc(4);
    std::uint32_t counter = ctx.malloc(8);
    if (lock == SymmetricHeap::kNull || counter == SymmetricHeap::kNull) {
      throw BenchError("heap exhausted");
    }
    for (int i = 0; i < kIncrements; ++i) {
      ctx.set_lock(lock);
      auto v = ctx.get_elem<std::int64_t>(counter, 0);
      ctx.put_elem<std::int64_t>(counter, v + 1, 0);
      ctx.clear_lock(lock);
    }
    ctx.barrier_all();
    return 0;
  });
  for (const auto& f : report.failures) {
    if (!f.empty()) throw Error("counter program failed: " + f);
  }
  // The counter sits right after the 4-byte lock, 8-aligned.
  auto bytes = m.debug_read(0, m.config().heap_base + 8, 8);
  std::int64_t counter = 0;
  std::memcpy(&counter, bytes.data(), 8);
  std::printf("counter=%lld expected=%lld\n",
              static_cast<long long>(counter),
              static_cast<long long>(wg.n_pes()) * kIncrements);
  return counter == static_cast<std::int64_t>(wg.n_pes()) * kIncrements ? 0 : 1;
}

int run_dotprod_cmd(Machine& m, std::uint32_t n_per_pe) {
  if (m.mode() == Mode::timed) {
    BenchReport r = bench_dotprod(m, n_per_pe);
    const auto& row = r.rows.at(0);
    std::printf("dot=%s\n", row.back().c_str());
    std::printf("elapsed_cycles=%s elapsed_seconds=%s gflops=%s\n",
                row[5].c_str(), row[6].c_str(), row[8].c_str());
  } else {
    double value = run_dotprod_value(m, n_per_pe);
    std::printf("dot=%s\n", format_double(value).c_str());
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"meshmem: 2D-mesh many-core simulator with an "
               "OpenSHMEM-style runtime"};
  app.require_subcommand(1);

  CommonOpts bench_opts, run_opts, props_opts;
  std::string csv_path;
  std::string sizes_str;
  std::uint32_t n_per_pe = 2048;
  std::string program_name;

  auto* bench = app.add_subcommand(
      "bench", "run a calibrated benchmark and emit CSV");
  bench->require_subcommand(1);
  auto* bench_barrier_cmd = bench->add_subcommand(
      "barrier", "wand/linear/dissemination barrier latencies");
  auto* bench_copy_cmd = bench->add_subcommand(
      "copy", "cpu-copy vs DMA cycle sweep over transfer sizes");
  auto* bench_dot_cmd = bench->add_subcommand(
      "dotprod", "SPMD dot product with a sum reduction");
  for (auto* cmd : {bench_barrier_cmd, bench_copy_cmd, bench_dot_cmd}) {
    add_common(cmd, bench_opts);
    cmd->add_option("--csv", csv_path, "write CSV here instead of stdout");
  }
  bench_copy_cmd->add_option("--sizes", sizes_str,
                             "comma-separated transfer sizes in bytes");
  bench_dot_cmd->add_option("--n-per-pe", n_per_pe,
                            "vector elements per PE (default 2048)");

  auto* run = app.add_subcommand("run", "run a builtin SPMD program");
  run->add_option("program", program_name, "hello | dotprod | counter")
      ->required()
      ->check(CLI::IsMember({"hello", "dotprod", "counter"}));
  add_common(run, run_opts);
  run->add_option("--n-per-pe", n_per_pe, "dotprod vector elements per PE");

  auto* props = app.add_subcommand("props", "run the property self-check suite");
  add_common(props, props_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (bench->parsed()) {
      ParsedConfig pc = load_common(bench_opts);
      Machine m(pc.machine);
      if (bench_barrier_cmd->parsed()) {
        emit_csv(bench_barrier(m), csv_path);
      } else if (bench_copy_cmd->parsed()) {
        std::vector<std::uint64_t> sizes;
        if (sizes_str.empty()) {
          sizes = default_copy_sizes();
        } else {
          std::size_t start = 0;
          while (start <= sizes_str.size()) {
            std::size_t comma = sizes_str.find(',', start);
            std::string item = sizes_str.substr(
                start, comma == std::string::npos ? std::string::npos
                                                  : comma - start);
            if (!item.empty()) sizes.push_back(std::stoull(item));
            if (comma == std::string::npos) break;
            start = comma + 1;
          }
          if (sizes.empty()) {
            throw BenchError("--sizes lists no transfer sizes");
          }
        }
        emit_csv(bench_copy(m, sizes), csv_path);
      } else {
        emit_csv(bench_dotprod(m, n_per_pe), csv_path);
      }
      return 0;
    }
    if (run->parsed()) {
      ParsedConfig pc = load_common(run_opts);
      Machine m(pc.machine);
      Workgroup wg = pc.workgroup.build(pc.machine);
      if (program_name == "hello") return run_hello(m, wg);
      if (program_name == "counter") return run_counter(m, wg);
      return run_dotprod_cmd(m, n_per_pe);
    }
    if (props->parsed()) {
      ParsedConfig pc = load_common(props_opts);
      int failures = run_props(pc, std::cout);
      return failures == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace meshmem
