#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nids {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitIo = 2, kExitInternal = 3 };

/// Runs the nids command line. args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nids
