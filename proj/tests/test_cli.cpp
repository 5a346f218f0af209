#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "meshmem/bench.hpp"

using namespace meshmem;

namespace {

int cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"meshmem"};
  argv.insert(argv.end(), args.begin(), args.end());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

struct CaptureStdout {
  std::ostringstream captured;
  std::streambuf* old;
  CaptureStdout() : old(std::cout.rdbuf(captured.rdbuf())) {}
  ~CaptureStdout() { std::cout.rdbuf(old); }
};

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(
          start, comma == std::string::npos ? std::string::npos
                                            : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(cells);
  }
  return rows;
}

int column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

TEST_CASE("bench barrier writes a three-row CSV") {
  std::string path = temp_path("meshmem_barrier.csv");
  CHECK(cli({"bench", "barrier", "--csv", path.c_str()}) == 0);
  auto rows = parse_csv(slurp(path));
  REQUIRE(rows.size() == 4);  // header + wand/linear/dissemination
  int name = column(rows[0], "name");
  CHECK(rows[1][name] == "wand");
  CHECK(rows[2][name] == "linear");
  CHECK(rows[3][name] == "dissemination");
  std::filesystem::remove(path);
}

TEST_CASE("bench copy honors an explicit size list") {
  std::string path = temp_path("meshmem_copy.csv");
  CHECK(cli({"bench", "copy", "--sizes", "8,64,4096", "--csv",
             path.c_str()}) == 0);
  auto rows = parse_csv(slurp(path));
  REQUIRE(rows.size() == 4);
  int size_col = column(rows[0], "size_bytes");
  CHECK(rows[1][size_col] == "8");
  CHECK(rows[2][size_col] == "64");
  CHECK(rows[3][size_col] == "4096");
  std::filesystem::remove(path);
}

TEST_CASE("CSV derived columns recompute exactly from the raw ones") {
  std::string path = temp_path("meshmem_roundtrip.csv");
  CHECK(cli({"bench", "barrier", "--csv", path.c_str()}) == 0);
  auto rows = parse_csv(slurp(path));
  int cycles_col = column(rows[0], "cycles");
  int seconds_col = column(rows[0], "seconds");
  int clock_col = column(rows[0], "clock_hz");
  REQUIRE(cycles_col >= 0);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double cycles = std::stod(rows[i][cycles_col]);
    double seconds = std::stod(rows[i][seconds_col]);
    double clock = std::stod(rows[i][clock_col]);
    CHECK(seconds == cycles / clock);  // exact round trip
  }
  std::filesystem::remove(path);

  CHECK(cli({"bench", "dotprod", "--csv", path.c_str()}) == 0);
  rows = parse_csv(slurp(path));
  int gflops_col = column(rows[0], "gflops");
  int rate_col = column(rows[0], "data_rate_bytes_per_s");
  int eff_col = column(rows[0], "efficiency");
  int peak_col = column(rows[0], "peak_gflops");
  double gflops = std::stod(rows[1][gflops_col]);
  CHECK(std::stod(rows[1][rate_col]) == 4.0 * gflops * 1e9);
  CHECK(std::stod(rows[1][eff_col]) ==
        gflops / std::stod(rows[1][peak_col]));
  std::filesystem::remove(path);
}

TEST_CASE("benchmark CSV is byte-identical across reruns of one seed") {
  std::string a = temp_path("meshmem_rerun_a.csv");
  std::string b = temp_path("meshmem_rerun_b.csv");
  for (const char* sub : {"barrier", "dotprod"}) {
    CHECK(cli({"bench", sub, "--seed", "5", "--csv", a.c_str()}) == 0);
    CHECK(cli({"bench", sub, "--seed", "5", "--csv", b.c_str()}) == 0);
    CHECK(slurp(a) == slurp(b));
  }
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST_CASE("run dotprod in functional mode prints the value only") {
  CaptureStdout cap;
  CHECK(cli({"run", "dotprod", "--mode", "functional", "--n-per-pe",
             "64"}) == 0);
  std::string out = cap.captured.str();
  CHECK(out.rfind("dot=", 0) == 0);
  CHECK(out.find('\n') == out.size() - 1);  // a single line
  CHECK(out.find("cycles") == std::string::npos);
}

TEST_CASE("run counter reaches the expected total") {
  CaptureStdout cap;
  CHECK(cli({"run", "counter", "--mode", "functional", "--seed", "3"}) == 0);
  CHECK(cap.captured.str().find("counter=1600") != std::string::npos);
}

TEST_CASE("run hello lists every PE") {
  CaptureStdout cap;
  CHECK(cli({"run", "hello"}) == 0);
  std::string out = cap.captured.str();
  CHECK(out.find("16 PEs") != std::string::npos);
  CHECK(out.find("pe 15 at (35,11)") != std::string::npos);
}

TEST_CASE("bad invocations exit nonzero") {
  CHECK(cli({"frobnicate"}) != 0);
  CHECK(cli({"bench"}) != 0);                       // missing sub-subcommand
  CHECK(cli({"run", "no-such-program"}) != 0);
  CHECK(cli({"bench", "barrier", "--config", "/nonexistent.cfg"}) != 0);
  CHECK(cli({"bench", "barrier", "--mode", "functional"}) != 0);  // needs timed
}

TEST_CASE("config file drives the machine") {
  std::string cfg_path = temp_path("meshmem_test.cfg");
  {
    std::ofstream out(cfg_path);
    out << "rows=2\ncols=2\nseed=9\n";
  }
  CaptureStdout cap;
  CHECK(cli({"run", "hello", "--config", cfg_path.c_str()}) == 0);
  CHECK(cap.captured.str().find("4 PEs") != std::string::npos);
  std::filesystem::remove(cfg_path);
}

TEST_CASE("props subcommand passes") {
  CaptureStdout cap;
  CHECK(cli({"props", "--seed", "2"}) == 0);
  CHECK(cap.captured.str().find("all properties passed") != std::string::npos);
}
