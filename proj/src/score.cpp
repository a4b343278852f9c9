#include "jsvb/score.hpp"

#include <algorithm>
#include <cmath>

namespace jsvb::score {

namespace {

std::string canonical_cwe(std::string_view raw) {
  auto normalized = harness::normalize_cwe_id(raw);
  return normalized ? *normalized : std::string(raw);
}

}  // namespace

Result<CweClasses> CweClasses::parse(std::string_view text) {
  CweClasses classes;
  int next_class = 0;
  int line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    int class_id = next_class++;
    int members = 0;
    std::size_t pos = 0;
    while (pos <= t.size()) {
      std::size_t comma = t.find(',', pos);
      std::string token = trim(t.substr(pos, comma == std::string::npos ? comma : comma - pos));
      pos = comma == std::string::npos ? t.size() + 1 : comma + 1;
      if (token.empty()) continue;
      auto id = harness::normalize_cwe_id(token);
      if (!id) {
        return Error{Errc::ConfigError, "line " + std::to_string(line_no) + ": '" + token +
                                            "' is not a CWE id"};
      }
      auto [it, inserted] = classes.class_ids_.try_emplace(*id, class_id);
      if (!inserted && it->second != class_id) {
        return Error{Errc::ConfigError,
                     "line " + std::to_string(line_no) + ": " + *id + " is already in a class"};
      }
      ++members;
    }
    if (members == 0) {
      return Error{Errc::ConfigError, "line " + std::to_string(line_no) + ": empty class"};
    }
  }
  return classes;
}

Result<CweClasses> CweClasses::load(const std::string& path) {
  auto text = read_file(path);
  if (!text.ok()) return text.error();
  auto parsed = parse(text.value());
  if (!parsed.ok()) return Error{parsed.error().code, path + ": " + parsed.error().message};
  return parsed;
}

CweClasses CweClasses::empty() { return CweClasses{}; }

bool CweClasses::equivalent(std::string_view a, std::string_view b) const {
  std::string ca = canonical_cwe(a);
  std::string cb = canonical_cwe(b);
  if (ca == cb) return true;
  auto ia = class_ids_.find(ca);
  auto ib = class_ids_.find(cb);
  return ia != class_ids_.end() && ib != class_ids_.end() && ia->second == ib->second;
}

std::optional<int> CweClasses::class_of(std::string_view cwe) const {
  auto it = class_ids_.find(canonical_cwe(cwe));
  if (it == class_ids_.end()) return std::nullopt;
  return it->second;
}

const char* match_mode_name(MatchMode mode) {
  return mode == MatchMode::EQUIVALENCE ? "equivalence" : "strict";
}

Result<MatchMode> parse_match_mode(std::string_view name) {
  std::string u = to_lower_ascii(name);
  if (u == "equivalence" || u == "equiv") return MatchMode::EQUIVALENCE;
  if (u == "strict") return MatchMode::STRICT;
  return Error{Errc::ConfigError, "unknown match mode: " + std::string(name)};
}

bool cwe_match(std::string_view predicted, std::string_view truth, const CweClasses& classes,
               MatchMode mode) {
  if (mode == MatchMode::STRICT) return canonical_cwe(predicted) == canonical_cwe(truth);
  return classes.equivalent(predicted, truth);
}

Prediction build_prediction(const std::vector<harness::Finding>& findings,
                            double confidence_threshold) {
  Prediction pred;
  for (const auto& finding : findings) {
    if (!pred.max_confidence || finding.confidence > *pred.max_confidence) {
      pred.max_confidence = finding.confidence;
    }
    if (finding.confidence < confidence_threshold) continue;
    pred.is_vulnerable = true;
    pred.cwe_ids.insert(finding.category);
    pred.pairs.push_back({finding.file, "", finding.line, finding.confidence});
  }
  return pred;
}

const char* outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::TP: return "TP";
    case Outcome::TN: return "TN";
    case Outcome::FP: return "FP";
    case Outcome::FN: return "FN";
  }
  return "TN";
}

namespace {

// An advisory without CWE ids cannot constrain the predicted type.
bool any_cwe_match(const GroundTruth& truth, const Prediction& pred, const CweClasses& classes,
                   MatchMode mode) {
  if (truth.cwe_ids.empty()) return true;
  for (const auto& predicted : pred.cwe_ids) {
    for (const auto& expected : truth.cwe_ids) {
      if (cwe_match(predicted, expected, classes, mode)) return true;
    }
  }
  return false;
}

}  // namespace

Outcome match_project(const GroundTruth& truth, const Prediction& pred,
                      const CweClasses& classes, MatchMode mode) {
  if (!truth.is_vulnerable) return pred.is_vulnerable ? Outcome::FP : Outcome::TN;
  if (!pred.is_vulnerable) return Outcome::FN;
  return any_cwe_match(truth, pred, classes, mode) ? Outcome::TP : Outcome::FN;
}

const char* fn_reason_name(FnReason reason) {
  switch (reason) {
    case FnReason::NONE:          return "none";
    case FnReason::MISSED:        return "missed";
    case FnReason::TYPE_MISMATCH: return "type-mismatch";
    case FnReason::FILE_MISS:     return "file-miss";
    case FnReason::FUNC_MISS:     return "func-miss";
  }
  return "none";
}

std::string normalize_function_name(std::string_view name) {
  std::string t = trim(name);
  while (t.size() >= 2) {
    char first = t.front();
    char last = t.back();
    if ((first == '"' && last == '"') || (first == '\'' && last == '\'') ||
        (first == '`' && last == '`')) {
      t = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    break;
  }
  auto paren = t.find('(');
  if (paren != std::string::npos) t = trim(std::string_view(t).substr(0, paren));
  return to_lower_ascii(t);
}

FunctionMatch match_function(const GroundTruth& truth, const Prediction& pred,
                             const CweClasses& classes, MatchMode mode) {
  if (!truth.is_vulnerable) {
    return {pred.is_vulnerable ? Outcome::FP : Outcome::TN, FnReason::NONE};
  }
  if (!pred.is_vulnerable) return {Outcome::FN, FnReason::MISSED};
  if (!any_cwe_match(truth, pred, classes, mode)) {
    return {Outcome::FN, FnReason::TYPE_MISMATCH};
  }

  std::set<std::string> truth_basenames;
  for (const auto& file : truth.files) truth_basenames.insert(basename_of(file));
  std::set<std::string> truth_functions;
  for (const auto& fn : truth.functions) truth_functions.insert(normalize_function_name(fn));

  bool file_hit = false;
  for (const auto& pair : pred.pairs) {
    if (!truth_basenames.count(basename_of(pair.file))) continue;
    file_hit = true;
    std::string fn = normalize_function_name(pair.function);
    if (!fn.empty() && truth_functions.count(fn)) return {Outcome::TP, FnReason::NONE};
  }
  return {Outcome::FN, file_hit ? FnReason::FUNC_MISS : FnReason::FILE_MISS};
}

void ConfusionCounts::add(Outcome outcome) {
  switch (outcome) {
    case Outcome::TP: ++tp; break;
    case Outcome::TN: ++tn; break;
    case Outcome::FP: ++fp; break;
    case Outcome::FN: ++fn; break;
  }
}

Metrics compute_metrics(const ConfusionCounts& counts) {
  Metrics m;
  if (counts.tp + counts.fp > 0) {
    m.precision = static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fp);
  }
  if (counts.tp + counts.fn > 0) {
    m.recall = static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn);
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

Result<VdsResult> compute_vds(const std::vector<VdsItem>& items, const VdsConfig& config) {
  int64_t n_vuln = 0;
  int64_t n_benign = 0;
  std::vector<double> candidates;
  for (const auto& item : items) {
    (item.is_vulnerable ? n_vuln : n_benign)++;
    if (item.confidence) candidates.push_back(*item.confidence);
  }
  if (n_vuln == 0) {
    return Error{Errc::NoVulnerableSamples, "VD-S needs at least one vulnerable sample"};
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  double sentinel = candidates.empty() ? 1.0 : candidates.back() + 1.0;
  candidates.push_back(sentinel);

  int64_t fp_max = static_cast<int64_t>(std::floor(static_cast<double>(n_benign) *
                                                   config.fpr_budget));
  for (double threshold : candidates) {
    int64_t fp = 0;
    int64_t tp = 0;
    for (const auto& item : items) {
      bool positive = item.confidence && *item.confidence >= threshold;
      if (!positive) continue;
      if (!item.is_vulnerable) ++fp;
      else if (item.would_be_tp) ++tp;
    }
    if (fp > fp_max) continue;
    VdsResult result;
    result.threshold = threshold;
    result.fp = fp;
    result.fn = n_vuln - tp;
    result.vds = static_cast<double>(result.fn) / static_cast<double>(n_vuln);
    return result;
  }
  return Error{Errc::NoVulnerableSamples, "threshold sweep exhausted"};  // unreachable
}

}  // namespace jsvb::score
