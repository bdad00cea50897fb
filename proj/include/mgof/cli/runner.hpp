#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mgof/cli/config.hpp"

namespace mgof::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIncomplete = 1;  // failed replications or unconverged fits
inline constexpr int kExitUsage = 2;       // usage, config or data error

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<std::string> files;  // written result and extract files
};

/// Validates `cfg`, prepares the data and runs `proc`. Config, data and
/// parameter errors are reported before any file is created and give
/// kExitUsage. Diagnostics go to `err`.
RunOutcome run(Procedure proc, ExperimentConfig cfg, std::ostream& err);

}  // namespace mgof::cli
