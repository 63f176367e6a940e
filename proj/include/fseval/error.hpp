#pragma once

#include <stdexcept>
#include <string>

namespace fseval {

// Exit codes used by the CLI. Library code throws the matching exception.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitDegenerateSplit = 3,
  kExitReplayMismatch = 4,
};

// Invalid configuration, schema violation, malformed input file.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A split strategy produced an unusable split (e.g. empty dev set).
struct DegenerateSplitError : std::runtime_error {
  explicit DegenerateSplitError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Replay re-aggregation did not reproduce the stored summary.
struct ReplayMismatchError : std::runtime_error {
  explicit ReplayMismatchError(const std::string& msg)
      : std::runtime_error(msg) {}
};

}  // namespace fseval
