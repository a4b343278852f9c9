#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jsvb/augment.hpp"
#include "jsvb/common.hpp"
#include "jsvb/harness.hpp"
#include "jsvb/ingest.hpp"
#include "jsvb/jsparse.hpp"
#include "jsvb/score.hpp"

namespace jsvb::pipeline {

struct Config {
  std::string records_path;
  std::string fixtures_root;   // DirectoryFetcher root
  std::string dataset_root;    // all stage outputs live here
  std::string data_dir;        // catalog, prompt library, CWE table, system prompt
  std::vector<std::string> variants;  // empty = all five
  std::string split = "full";         // full | dn
  harness::PayloadMode mode = harness::PayloadMode::PROJECT;
  score::MatchMode matching = score::MatchMode::EQUIVALENCE;
  uint64_t seed = 1;
  double vds_r = 0.005;
  int workers = 1;
  std::string replay_path;            // transcripts for offline detection
  std::vector<std::string> models;
  double temperature = 0.7;
  int timeout_s = 60;
  double confidence_threshold = 0.8;
  int64_t input_token_budget = 100000;
  std::string endpoint_host;          // live HTTP client, optional
  int endpoint_port = 0;
  std::string endpoint_route = "/v1/complete";
};

Result<Config> load_config(const std::string& path);
void apply_config_json(Config& config, const std::string& json_text);

// One fully annotated benchmark case.
struct CaseRecord {
  std::string case_id;
  std::string cve_id;
  std::string cve_description;
  ingest::Severity severity = ingest::Severity::MEDIUM;
  std::vector<std::string> cwe_ids;
  std::string published_date;
  std::vector<std::string> sources;
  std::string project_name;  // owner/repo
  std::string commit_sha;
  std::string parent_sha;
  parse::ProjectType project_type = parse::ProjectType::BACKEND;
  bool project_type_low_confidence = false;
  int n_code_links = 0;
  parse::FunctionLabel label = parse::FunctionLabel::SUSPICION;
  std::string vulnerable_line_ranges;
  // path -> vulnerable function names (old-file coordinates)
  std::map<std::string, std::vector<std::string>> vulnerable_functions;
  // path -> vulnerable span (start, end) + changed lines, for snippets
  std::map<std::string, std::vector<std::tuple<std::string, int, int>>> spans;
  std::vector<std::string> analyzable_files;
  std::vector<std::string> all_files;
  bool minified = false;
  std::vector<std::string> diagnostics;
};

std::string case_record_to_json(const CaseRecord& record);
Result<CaseRecord> case_record_from_json(const std::string& line);

// Stable on-disk names for one case's files: "<stem>_vulnerable<ext>" /
// "<stem>_fixed<ext>", directory-prefixed only when two paths share a
// basename.
std::map<std::string, std::string> materialized_names(const std::vector<std::string>& paths,
                                                      harness::CaseVersion version);

// Rebuilds the detection payload for one case version from a variant tree
// (original repo paths, analyzable files only, spans included for snippet
// mode).
Result<harness::CasePayload> load_case_payload(const Config& config,
                                               const std::string& variant,
                                               const CaseRecord& record,
                                               harness::CaseVersion version);

// Stage entry points. Each reads its inputs from dataset_root (or the
// records/fixtures paths), writes its outputs there, and returns a short
// human-readable summary.

struct StageSummary {
  int processed = 0;
  int rejected = 0;
  std::vector<std::string> notes;
};

// records file -> databackup/<case_id>/<stem>_vulnerable.js etc. plus
// cases.jsonl and manifest.json
Result<StageSummary> run_ingest(const Config& config);

// annotates cases.jsonl with spans, labels, ranges, project type
Result<StageSummary> run_analyze(const Config& config);

// <variant>/<case_id>/... trees plus per-variant cases.jsonl with
// remapped annotations
Result<StageSummary> run_augment(const Config& config);

// results/<model>/<variant>.jsonl, one record per case version
Result<StageSummary> run_detect(const Config& config);

// reports/report.jsonl + reports/report.txt
Result<StageSummary> run_score(const Config& config);

// prints reports/report.txt to stdout (regenerating the table from
// report.jsonl when present)
Result<StageSummary> run_report(const Config& config);

// Human-readable vulnerability class for a CWE id ("CWE-1321" ->
// "Prototype Pollution"); falls back to the id itself.
std::string vulnerability_class_name(const std::string& cwe_id);

}  // namespace jsvb::pipeline
