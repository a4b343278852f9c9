#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "jsvb/common.hpp"
#include "jsvb/harness.hpp"

namespace jsvb::score {

// Disjoint CWE equivalence classes (attack-pattern families). Ids not
// listed anywhere compare by identity.
class CweClasses {
 public:
  static Result<CweClasses> parse(std::string_view text);
  static Result<CweClasses> load(const std::string& path);
  static CweClasses empty();

  bool equivalent(std::string_view a, std::string_view b) const;
  std::optional<int> class_of(std::string_view cwe) const;

 private:
  std::map<std::string, int, std::less<>> class_ids_;
};

enum class MatchMode { EQUIVALENCE, STRICT };
const char* match_mode_name(MatchMode mode);
Result<MatchMode> parse_match_mode(std::string_view name);

// STRICT ignores the table entirely.
bool cwe_match(std::string_view predicted, std::string_view truth, const CweClasses& classes,
               MatchMode mode);

struct GroundTruth {
  bool is_vulnerable = false;
  std::set<std::string> cwe_ids;
  std::set<std::string> files;      // paths of vulnerable files
  std::set<std::string> functions;  // vulnerable function names
};

struct PredictedPair {
  std::string file;
  std::string function;  // empty when underivable
  int line = 0;
  double confidence = 0.8;
};

struct Prediction {
  bool is_vulnerable = false;
  std::set<std::string> cwe_ids;
  std::vector<PredictedPair> pairs;
  std::optional<double> max_confidence;
};

// Collapses findings at or above the threshold into one per-case
// prediction. max_confidence is taken over all findings so threshold
// sweeps can reconstruct positivity at any cutoff.
Prediction build_prediction(const std::vector<harness::Finding>& findings,
                            double confidence_threshold);

enum class Outcome { TP, TN, FP, FN };
const char* outcome_name(Outcome outcome);

// Project granularity: a vulnerable project is TP iff the verdict is
// positive and some predicted CWE matches some ground-truth CWE; a benign
// project is TN iff the verdict is negative.
Outcome match_project(const GroundTruth& truth, const Prediction& pred,
                      const CweClasses& classes, MatchMode mode);

enum class FnReason { NONE, MISSED, TYPE_MISMATCH, FILE_MISS, FUNC_MISS };
const char* fn_reason_name(FnReason reason);

struct FunctionMatch {
  Outcome outcome = Outcome::TN;
  FnReason fn_reason = FnReason::NONE;
};

// Function granularity: all of (1) positive verdict, (2) CWE match,
// (3) some predicted file basename in the ground-truth basenames,
// (4) that pair's normalized function name in the normalized ground-truth
// names. fn_reason records the first condition that failed.
FunctionMatch match_function(const GroundTruth& truth, const Prediction& pred,
                             const CweClasses& classes, MatchMode mode);

// Trim, strip quotes, drop a parenthesized suffix, lowercase (ASCII).
std::string normalize_function_name(std::string_view name);

struct ConfusionCounts {
  int64_t tp = 0;
  int64_t tn = 0;
  int64_t fp = 0;
  int64_t fn = 0;

  void add(Outcome outcome);
  int64_t vulnerable() const { return tp + fn; }
  int64_t benign() const { return tn + fp; }
  int64_t total() const { return tp + tn + fp + fn; }
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Zero denominators yield zero, not NaN.
Metrics compute_metrics(const ConfusionCounts& counts);

struct VdsItem {
  bool is_vulnerable = false;
  // max finding confidence; nullopt = no findings at all (never positive)
  std::optional<double> confidence;
  // would the case score TP at a threshold its confidence clears
  bool would_be_tp = false;
};

struct VdsConfig {
  double fpr_budget = 0.005;  // r
};

struct VdsResult {
  double vds = 0.0;        // FNR at the chosen threshold
  double threshold = 0.0;  // smallest confidence cutoff meeting the budget
  int64_t fp = 0;
  int64_t fn = 0;
};

// Sweeps candidate thresholds (every distinct confidence, ascending, plus
// a sentinel above all of them), picks the smallest one whose FP count
// stays within floor(n_benign * r), and reports FN / n_vuln there.
// No vulnerable samples at all is an error, not a zero.
Result<VdsResult> compute_vds(const std::vector<VdsItem>& items, const VdsConfig& config);

}  // namespace jsvb::score
