#pragma once

#include <string>
#include <utility>
#include <vector>

namespace motorld {

/// Outcome of one numerical check. `passed` is decided by the check that
/// produced the report; `measured` holds the quantities it compared.
struct CheckReport {
  std::string name;
  bool passed = false;
  std::vector<std::pair<std::string, double>> measured;
  double tolerance = 0.0;
  std::string context;
  /// Human-readable failure description with the witness point; empty on pass.
  std::string detail;
  double wall_time = 0.0;
};

inline bool all_passed(const std::vector<CheckReport>& reports) {
  for (const auto& r : reports)
    if (!r.passed) return false;
  return true;
}

}  // namespace motorld
