#pragma once

#include <string>
#include <vector>

namespace lexigan::cli {

struct CheckResult {
  std::string module;
  std::string op;
  bool passed = false;
  std::string detail;
};

/// Gradient checks, convolution oracles, penalty identity, WAV and checkpoint
/// round trips. With `inject_fault` the leaky-relu backward rule is corrupted
/// for the duration of the run.
std::vector<CheckResult> run_selftest(bool inject_fault);

}  // namespace lexigan::cli
