#pragma once

#include <optional>
#include <string>

#include "meshmem/machine.hpp"

namespace meshmem {

/// Optional workgroup override from a config file; unset fields default to
/// the machine's full grid.
struct WorkgroupSpec {
  std::optional<Coord> origin;
  std::optional<int> rows;
  std::optional<int> cols;
  std::vector<Coord> disabled;

  Workgroup build(const MachineConfig& mc) const;
};

struct ParsedConfig {
  MachineConfig machine;
  WorkgroupSpec workgroup;
};

/// Parses the plain-text key=value machine configuration. Lines starting
/// with '#' and blank lines are ignored. Keys: rows, cols, origin ("r,c"),
/// mem_per_core, disabled ("r,c r,c ..."), heap_base, heap_limit, mode
/// (functional|timed), seed, wg.origin, wg.rows, wg.cols, wg.disabled, and
/// every timing.<param>. Unknown keys or unparsable values raise
/// ConfigError with the line number.
ParsedConfig parse_config_text(const std::string& text);

/// parse_config_text over a file's contents; unreadable files raise
/// ConfigError.
ParsedConfig load_config_file(const std::string& path);

}  // namespace meshmem
