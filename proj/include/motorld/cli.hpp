#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace motorld {

/// Command-line front end. Subcommands: simulate, hamiltonian, velocity,
/// action, verify. Returns 0 on success, 1 for invalid input, 2 for
/// numerical failure (including failed checks), 3 for I/O errors. Data go
/// to files or `out`, diagnostics to `err`. The MOTORLD_THREADS environment
/// variable sets the worker count for ensembles; results do not depend on it.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace motorld
