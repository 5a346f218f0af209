#pragma once

#include <iosfwd>

#include "meshmem/config.hpp"

namespace meshmem {

/// CLI entry point. Subcommands: `bench barrier|copy|dotprod`,
/// `run hello|dotprod|counter`, and `props`. Returns the process exit
/// code: 0 on success, nonzero with a message on stderr otherwise.
int run_cli(int argc, const char* const* argv);

/// The `props` property suite: randomized self-checks of the address
/// codec, copy-cost band, topology bijection, heap symmetry, lock mutual
/// exclusion, reduction oracle, and barrier trace safety. Prints one
/// PASS/FAIL line per property and returns the number of failures.
int run_props(const ParsedConfig& pc, std::ostream& out);

}  // namespace meshmem
