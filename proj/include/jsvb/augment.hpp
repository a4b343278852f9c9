#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "jsvb/common.hpp"

namespace jsvb::augment {

enum class SinkCategory { FILE_IO, DATABASE, DOM, PROCESS, NETWORK, EVAL_LIKE, OTHER };
const char* sink_category_name(SinkCategory category);
Result<SinkCategory> parse_sink_category(std::string_view name);

struct DecoySink {
  int sink_id = 0;  // position in the catalog, 1-based
  SinkCategory category = SinkCategory::OTHER;
  // One line of code; $1..$9 are fresh local names filled at insertion
  // time. Free identifiers must be environment globals (require,
  // document, ...), never names bound by the host file.
  std::string template_text;
};

struct SinkCatalog {
  std::vector<DecoySink> sinks;
};

// Line format: CATEGORY|template. '#' starts a comment. Each template is
// checked against the environment-global whitelist at load time.
Result<SinkCatalog> parse_sink_catalog(std::string_view text);
Result<SinkCatalog> load_sink_catalog(const std::string& path);

enum class PromptKind { FALSE_SAFE, FALSE_VULN };
const char* prompt_kind_name(PromptKind kind);

struct PromptTemplate {
  PromptKind kind = PromptKind::FALSE_SAFE;
  std::string text;  // full comment line, starts with //
};

struct PromptLibrary {
  std::vector<PromptTemplate> prompts;
  bool has_kind(PromptKind kind) const;
};

// Line format: KIND|// comment text. Both kinds must be present.
Result<PromptLibrary> parse_prompt_library(std::string_view text);
Result<PromptLibrary> load_prompt_library(const std::string& path);

// Line numbers (1..n+1) in front of which a whole-line statement can be
// inserted: not inside a multi-line token, previous significant token
// ends a statement, next token starts one. n+1 is end of file.
std::vector<int> statement_boundary_lines(std::string_view source);

struct InsertionResult {
  std::string text;
  // Original line numbers each inserted line went in front of, in
  // insertion order (ascending, duplicates allowed).
  std::vector<int> inserted_before;
  std::vector<std::string> diagnostics;
};

struct NoiseOptions {
  int lines_per_decoy = 30;  // one decoy per this many lines, min 1
  uint64_t seed = 0;
};

InsertionResult inject_noise(std::string_view source, const SinkCatalog& catalog,
                             const NoiseOptions& options);

struct PromptInjectionOptions {
  int lines_per_comment = 50;  // floor(lines / this) comments
  uint64_t seed = 0;
};

InsertionResult inject_prompts(std::string_view source, const PromptLibrary& library,
                               const PromptInjectionOptions& options);

struct ObfuscationOptions {
  uint64_t seed = 0;
  bool rename_identifiers = true;
  bool encode_strings = true;
  bool wrap_bodies = false;  // off: wrapping rewrites control flow
};

struct ObfuscationResult {
  std::string text;
  std::map<std::string, std::string> rename_map;  // original -> hex alias
  bool skipped = false;                           // minified or unparseable
  std::vector<std::string> diagnostics;
};

// Renames locally declared identifiers to _0x aliases, hex-encodes string
// literal contents, optionally wraps simple function bodies in arrow
// IIFEs. Line count is preserved so span annotations survive.
ObfuscationResult obfuscate(std::string_view source, const ObfuscationOptions& options);

// remapped = line + number of insertions at or above it.
int remap_line(int line, const std::vector<int>& inserted_before);

enum class Variant { ORIGINAL, NOISE, OBFUSCATED, NOISE_OBFUSCATED, PROMPT_INJECTION };
const char* variant_name(Variant variant);
Result<Variant> parse_variant(std::string_view name);
const std::vector<Variant>& all_variants();

struct AugmentationConfig {
  Variant variant = Variant::ORIGINAL;
  uint64_t global_seed = 1;
  NoiseOptions noise;
  PromptInjectionOptions prompts;
  ObfuscationOptions obfuscation;
};

struct CaseFiles {
  std::map<std::string, std::string> vulnerable;  // path -> text
  std::map<std::string, std::string> fixed;
};

struct FileTransform {
  std::vector<int> inserted_before;               // for line remapping
  std::map<std::string, std::string> rename_map;  // for name remapping
};

struct AugmentedCase {
  CaseFiles files;
  std::map<std::string, FileTransform> vulnerable_transforms;  // path -> transform
  std::vector<std::string> diagnostics;
};

// Applies the variant to both versions of every analyzable file; other
// files pass through. Per-file randomness comes from
// derive_seed(global_seed, case_id, path), so runs are reproducible and
// independent of iteration order.
AugmentedCase augment_case(const CaseFiles& files, const std::string& case_id,
                           const AugmentationConfig& config, const SinkCatalog& catalog,
                           const PromptLibrary& library);

}  // namespace jsvb::augment
