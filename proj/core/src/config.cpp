#include "meshmem/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "meshmem/errors.hpp"

namespace meshmem {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

long long parse_int(const std::string& v, int line) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    fail(line, "expected an integer, got '" + v + "'");
  }
  if (pos != v.size()) fail(line, "trailing characters in integer '" + v + "'");
  return out;
}

double parse_real(const std::string& v, int line) {
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    fail(line, "expected a number, got '" + v + "'");
  }
  if (pos != v.size()) fail(line, "trailing characters in number '" + v + "'");
  return out;
}

Coord parse_coord(const std::string& v, int line) {
  std::size_t comma = v.find(',');
  if (comma == std::string::npos) {
    fail(line, "expected 'row,col', got '" + v + "'");
  }
  Coord c;
  c.row = static_cast<int>(parse_int(trim(v.substr(0, comma)), line));
  c.col = static_cast<int>(parse_int(trim(v.substr(comma + 1)), line));
  return c;
}

std::vector<Coord> parse_coord_list(const std::string& v, int line) {
  std::vector<Coord> coords;
  std::string item;
  std::istringstream in(v);
  while (in >> item) {
    // allow both "r,c r,c" and "r,c;r,c"
    std::size_t start = 0;
    while (start < item.size()) {
      std::size_t semi = item.find(';', start);
      std::string pair = semi == std::string::npos
                             ? item.substr(start)
                             : item.substr(start, semi - start);
      if (!pair.empty()) coords.push_back(parse_coord(pair, line));
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
  }
  return coords;
}

bool set_timing_key(TimingParams& tp, const std::string& key,
                    const std::string& value, int line) {
  auto u32 = [&] { return static_cast<std::uint32_t>(parse_int(value, line)); };
  if (key == "clock_hz") tp.clock_hz = parse_real(value, line);
  else if (key == "cpu_copy_overhead_cycles") tp.cpu_copy_overhead_cycles = u32();
  else if (key == "cpu_cycles_per_dword") tp.cpu_cycles_per_dword = u32();
  else if (key == "dma_setup_cycles") tp.dma_setup_cycles = u32();
  else if (key == "dma_cycles_per_2dwords") tp.dma_cycles_per_2dwords = u32();
  else if (key == "hop_cycles") tp.hop_cycles = u32();
  else if (key == "remote_store_base_cycles") tp.remote_store_base_cycles = u32();
  else if (key == "wand_barrier_cycles") tp.wand_barrier_cycles = u32();
  else if (key == "linear_barrier_cycles_per_pe") tp.linear_barrier_cycles_per_pe = u32();
  else if (key == "dissemination_round_cycles") tp.dissemination_round_cycles = u32();
  else if (key == "flops_per_cycle_per_core") tp.flops_per_cycle_per_core = u32();
  else if (key == "poll_quantum_cycles") tp.poll_quantum_cycles = u32();
  else if (key == "fence_cycles") tp.fence_cycles = u32();
  else return false;
  return true;
}

}  // namespace

Workgroup WorkgroupSpec::build(const MachineConfig& mc) const {
  Coord o = origin.value_or(mc.origin);
  int r = rows.value_or(mc.rows);
  int c = cols.value_or(mc.cols);
  std::vector<Coord> dis = disabled;
  if (dis.empty()) {
    // Machine-disabled cores inside the rectangle must be excluded.
    for (Coord d : mc.disabled) {
      if (d.row >= o.row && d.row < o.row + r && d.col >= o.col &&
          d.col < o.col + c) {
        dis.push_back(d);
      }
    }
  }
  return Workgroup(o, r, c, std::move(dis));
}

ParsedConfig parse_config_text(const std::string& text) {
  ParsedConfig pc;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key=value, got '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty()) fail(line, "empty key");

    MachineConfig& mc = pc.machine;
    if (key == "rows") mc.rows = static_cast<int>(parse_int(value, line));
    else if (key == "cols") mc.cols = static_cast<int>(parse_int(value, line));
    else if (key == "origin") mc.origin = parse_coord(value, line);
    else if (key == "mem_per_core") mc.mem_per_core = static_cast<std::uint32_t>(parse_int(value, line));
    else if (key == "disabled") mc.disabled = parse_coord_list(value, line);
    else if (key == "heap_base") mc.heap_base = static_cast<std::uint32_t>(parse_int(value, line));
    else if (key == "heap_limit") mc.heap_limit = static_cast<std::uint32_t>(parse_int(value, line));
    else if (key == "seed") mc.seed = static_cast<std::uint64_t>(parse_int(value, line));
    else if (key == "mode") {
      if (value == "functional") mc.mode = Mode::functional;
      else if (value == "timed") mc.mode = Mode::timed;
      else fail(line, "mode must be 'functional' or 'timed', got '" + value + "'");
    } else if (key == "wg.origin") pc.workgroup.origin = parse_coord(value, line);
    else if (key == "wg.rows") pc.workgroup.rows = static_cast<int>(parse_int(value, line));
    else if (key == "wg.cols") pc.workgroup.cols = static_cast<int>(parse_int(value, line));
    else if (key == "wg.disabled") pc.workgroup.disabled = parse_coord_list(value, line);
    else if (key.rfind("timing.", 0) == 0) {
      if (!set_timing_key(mc.timing, key.substr(7), value, line)) {
        fail(line, "unknown timing parameter '" + key + "'");
      }
    } else {
      fail(line, "unknown key '" + key + "'");
    }
  }
  pc.machine.validate();
  return pc;
}

ParsedConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace meshmem
