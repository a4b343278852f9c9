#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "jsvb/common.hpp"

namespace jsvb::parse {

// ============================================================
// Function spans
// ============================================================

enum class FunctionKind {
  DECLARATION,
  FUNCTION_EXPRESSION,  // includes object-literal methods
  ARROW,
  CLASS_METHOD,
};

const char* function_kind_name(FunctionKind kind);
Result<FunctionKind> parse_function_kind(std::string_view name);

struct FunctionSpan {
  std::string name;   // declared/inferred name or "<anonymous:LINE>"
  int start_line = 0; // line of first header token (modifiers included)
  int end_line = 0;   // line of closing brace / last expression token
  FunctionKind kind = FunctionKind::DECLARATION;

  bool operator==(const FunctionSpan&) const = default;
};

struct ExtractResult {
  std::vector<FunctionSpan> spans;  // ordered by start_line, outer before inner
  std::vector<std::string> diagnostics;
};

// Token-level scanner: matches bracket pairs, classifies braces by their
// preceding token, and recognises declarations, function expressions,
// arrows (block and expression bodied), class methods and object-literal
// shorthand methods. Unbalanced headers are reported and skipped; the
// rest of the file is still scanned.
ExtractResult extract_functions(std::string_view source);

// ============================================================
// Line diff
// ============================================================

enum class ChangeKind { MODIFIED, INSERTED, DELETED };

const char* change_kind_name(ChangeKind kind);

// Lines carry their terminator, so applying the script reproduces the new
// text byte for byte, trailing newline included.
struct ChangedLine {
  ChangeKind kind = ChangeKind::MODIFIED;
  std::optional<int> old_line;  // set for MODIFIED and DELETED
  std::optional<int> new_line;  // set for MODIFIED and INSERTED
  std::string old_text;
  std::string new_text;
};

// Longest-matching-block diff over terminator-preserving lines. Replacement
// runs of equal length pair up as MODIFIED; unequal runs decompose into
// DELETED plus INSERTED. Output is ordered by position.
std::vector<ChangedLine> line_diff(std::string_view old_text, std::string_view new_text);

// Reconstructs the new text from the old text plus an ordered edit script.
std::string apply_line_diff(std::string_view old_text, const std::vector<ChangedLine>& changes);

// ============================================================
// Change-to-function mapping (old-file coordinates)
// ============================================================

struct FunctionChange {
  FunctionSpan span;
  std::vector<int> changed_lines;  // sorted ascending, deduplicated
};

struct ChangeMapping {
  std::vector<FunctionChange> functions;    // vulnerable functions, span order
  std::vector<int> unattributed_lines;      // changes outside any span
};

// Attributes each change to the innermost enclosing span in the vulnerable
// (old) file. INSERTED changes use the last unchanged old line at or above
// the insertion point as their anchor; insertions at the top of the file
// anchor to line 1.
ChangeMapping map_changes_to_functions(const std::vector<FunctionSpan>& spans,
                                       const std::vector<ChangedLine>& changes);

// "19-70,49,50" for one function; functions joined by ';';
// multi-file inputs prefixed "path:" and joined by '|'.
std::string format_line_ranges(const ChangeMapping& mapping);
std::string format_line_ranges(
    const std::vector<std::pair<std::string, ChangeMapping>>& per_file);

// ============================================================
// Labels, project type, splits
// ============================================================

enum class FunctionLabel { ONEFUNC, NVDCHECK, SUSPICION };
const char* function_label_name(FunctionLabel label);
Result<FunctionLabel> parse_function_label(std::string_view name);

struct LabelInput {
  // (file path, vulnerable function names in that file)
  std::vector<std::pair<std::string, std::vector<std::string>>> vulnerable_functions;
  std::string advisory_text;  // CVE description
};

// ONEFUNC: exactly one vulnerable function project-wide.
// NVDCHECK: a vulnerable function name or file basename appears in the
// advisory text as a standalone token (case sensitive, identifier
// boundaries).
// SUSPICION: everything else.
FunctionLabel assign_label(const LabelInput& input);

enum class ProjectType { FRONTEND, BACKEND, FULLSTACK };
const char* project_type_name(ProjectType type);
Result<ProjectType> parse_project_type(std::string_view name);

struct ProjectTypeResult {
  ProjectType type = ProjectType::BACKEND;
  bool low_confidence = false;        // no signal either way
  std::vector<std::string> evidence;  // human-readable trail
};

// Token-level heuristics: Node builtin imports and server manifest fields
// vote backend; DOM globals, DOM member names and .html files vote
// frontend; both vote fullstack; neither defaults to backend with the
// low-confidence flag set.
ProjectTypeResult classify_project_type(
    const std::map<std::string, std::string>& files,  // path -> text (JS and manifests)
    const std::vector<std::string>& all_paths);       // every path in the patch pair

enum class Split { COMPLETE, DENOISED };
const char* split_name(Split split);

// DENOISED keeps ONEFUNC and NVDCHECK cases.
bool in_denoised_split(FunctionLabel label);

bool is_javascript_path(std::string_view path);

}  // namespace jsvb::parse
