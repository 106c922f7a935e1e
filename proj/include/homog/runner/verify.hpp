#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace homog {

/// One acceptance criterion outcome. status is PASS, FAIL or SKIP (not in
/// the tier).
struct CriterionResult {
  int id = 0;
  std::string title;
  std::string status;
  std::string measured;
  std::string expected;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::string tier = "fast";  // fast | full
  /// -1 simulates the mis-signed drift +grad V (mutation check).
  double drift_sign = 1.0;
  /// Working directory for the reproducibility criterion; a temporary
  /// directory when empty.
  std::filesystem::path scratch;
  /// Restricts the run to these ids (others report SKIP). Empty: the tier.
  std::vector<int> only;
  /// Called as each criterion finishes.
  std::function<void(const CriterionResult&)> on_result;
};

/// Criteria 1-13; the fast tier runs the ones that finish in a few minutes
/// on one core, the full tier runs all of them. Every id is reported exactly
/// once, in order. Seeds are fixed.
std::vector<CriterionResult> verify_suite(const VerifyOptions& options);

std::vector<int> tier_criteria(const std::string& tier);

/// "[PASS] 3 title: measured (expected)".
std::string format_result(const CriterionResult& r);

}  // namespace homog
