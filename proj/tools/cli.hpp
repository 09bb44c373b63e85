#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace schedsynth::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// Runs the command line `args` (without the program name). Diagnostics go to
// `err`, summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace schedsynth::cli
