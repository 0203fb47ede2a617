#pragma once

#include <string>
#include <vector>

namespace seqcls::cli {

// Entry point behind the seqcls binary; returns a process exit code
// (0 ok, 2 config error, 3 data error, 4 training divergence, 5 internal).
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

} // namespace seqcls::cli
