#include "jsvb/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "jsvb/jstoken.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

namespace jsvb::pipeline {

namespace {

std::string join_path(const std::string& a, const std::string& b) {
  return (fs::path(a) / b).string();
}

std::vector<std::string> string_list(const json& node) {
  std::vector<std::string> out;
  if (!node.is_array()) return out;
  for (const auto& item : node) {
    if (item.is_string()) out.push_back(item.get<std::string>());
  }
  return out;
}

// Model ids may contain '/'; keep results directories flat.
std::string sanitize_component(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (c == '/' || c == '\\' || c == ':') c = '_';
  }
  return out;
}

Result<std::vector<std::string>> resolve_variants(const Config& config) {
  std::vector<std::string> names;
  if (config.variants.empty()) {
    for (auto variant : augment::all_variants()) {
      names.push_back(augment::variant_name(variant));
    }
    return names;
  }
  for (const auto& requested : config.variants) {
    auto variant = augment::parse_variant(requested);
    if (!variant.ok()) return variant.error();
    names.push_back(augment::variant_name(variant.value()));
  }
  return names;
}

void update_manifest(const Config& config, const std::string& stage, ordered_json section) {
  std::string path = join_path(config.dataset_root, "manifest.json");
  ordered_json manifest = ordered_json::object();
  if (auto existing = read_file(path); existing.ok()) {
    auto parsed = ordered_json::parse(existing.value(), nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object()) manifest = parsed;
  }
  manifest[stage] = std::move(section);
  write_file(path, manifest.dump(2) + "\n");
}

Result<std::vector<CaseRecord>> read_case_file(const std::string& path) {
  auto text = read_file(path);
  if (!text.ok()) return text.error();
  std::vector<CaseRecord> records;
  int line_no = 0;
  for (const auto& line : split_lines(text.value())) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto record = case_record_from_json(line);
    if (!record.ok()) {
      return Error{record.error().code,
                   path + ":" + std::to_string(line_no) + ": " + record.error().message};
    }
    records.push_back(std::move(record).take());
  }
  return records;
}

Status write_case_file(const std::string& path, const std::vector<CaseRecord>& records) {
  std::string out;
  for (const auto& record : records) out += case_record_to_json(record) + "\n";
  return write_file(path, out);
}

struct CaseTexts {
  std::map<std::string, std::string> vulnerable;
  std::map<std::string, std::string> fixed;
};

Result<CaseTexts> load_case_texts(const std::string& tree_dir, const CaseRecord& record) {
  CaseTexts texts;
  auto vuln_names = materialized_names(record.all_files, harness::CaseVersion::VULNERABLE);
  auto fixed_names = materialized_names(record.all_files, harness::CaseVersion::FIXED);
  for (const auto& path : record.all_files) {
    auto vuln = read_file(join_path(tree_dir, vuln_names.at(path)));
    if (!vuln.ok()) return vuln.error();
    auto fixed = read_file(join_path(tree_dir, fixed_names.at(path)));
    if (!fixed.ok()) return fixed.error();
    texts.vulnerable[path] = std::move(vuln).take();
    texts.fixed[path] = std::move(fixed).take();
  }
  return texts;
}

// Function spans and changed lines per analyzable file, old-file
// coordinates; files whose changes touch no function still appear so the
// unattributed lines can be reported.
std::vector<std::pair<std::string, parse::ChangeMapping>> compute_mappings(
    const CaseRecord& record, const CaseTexts& texts) {
  std::vector<std::pair<std::string, parse::ChangeMapping>> mappings;
  for (const auto& path : record.analyzable_files) {
    const auto& old_text = texts.vulnerable.at(path);
    const auto& new_text = texts.fixed.at(path);
    auto changes = parse::line_diff(old_text, new_text);
    if (changes.empty()) continue;
    auto extracted = parse::extract_functions(old_text);
    mappings.push_back({path, parse::map_changes_to_functions(extracted.spans, changes)});
  }
  return mappings;
}

std::string remap_function_name(const std::string& name, const augment::FileTransform& t) {
  auto renamed = t.rename_map.find(name);
  if (renamed != t.rename_map.end()) return renamed->second;
  if (name.starts_with("<anonymous:") && name.ends_with(">")) {
    int line = std::atoi(name.c_str() + 11);
    if (line > 0) {
      return "<anonymous:" + std::to_string(augment::remap_line(line, t.inserted_before)) + ">";
    }
  }
  return name;
}

void fill_annotations(CaseRecord& record,
                      const std::vector<std::pair<std::string, parse::ChangeMapping>>& mappings,
                      const std::map<std::string, augment::FileTransform>& transforms) {
  static const augment::FileTransform kIdentity;
  record.spans.clear();
  record.vulnerable_functions.clear();
  std::vector<std::pair<std::string, parse::ChangeMapping>> formatted;
  for (const auto& [path, mapping] : mappings) {
    auto found = transforms.find(path);
    const auto& t = found == transforms.end() ? kIdentity : found->second;
    parse::ChangeMapping remapped;
    remapped.unattributed_lines = mapping.unattributed_lines;
    for (const auto& fc : mapping.functions) {
      parse::FunctionChange out = fc;
      out.span.name = remap_function_name(fc.span.name, t);
      out.span.start_line = augment::remap_line(fc.span.start_line, t.inserted_before);
      out.span.end_line = augment::remap_line(fc.span.end_line, t.inserted_before);
      for (int& line : out.changed_lines) line = augment::remap_line(line, t.inserted_before);
      remapped.functions.push_back(std::move(out));
      record.spans[path].push_back({remapped.functions.back().span.name,
                                    remapped.functions.back().span.start_line,
                                    remapped.functions.back().span.end_line});
      record.vulnerable_functions[path].push_back(remapped.functions.back().span.name);
    }
    if (!remapped.functions.empty()) formatted.push_back({path, std::move(remapped)});
    if (!mapping.unattributed_lines.empty()) {
      record.diagnostics.push_back(path + ": " +
                                   std::to_string(mapping.unattributed_lines.size()) +
                                   " changed line(s) outside any function");
    }
  }
  record.vulnerable_line_ranges = format_line_ranges(formatted);
}

}  // namespace

// ============================================================
// Case record serialization
// ============================================================

std::string case_record_to_json(const CaseRecord& record) {
  ordered_json j;
  j["case_id"] = record.case_id;
  j["cve_id"] = record.cve_id;
  j["cve_description"] = record.cve_description;
  j["severity"] = ingest::severity_name(record.severity);
  j["cwe_ids"] = record.cwe_ids;
  j["published_date"] = record.published_date;
  j["sources"] = record.sources;
  j["project_name"] = record.project_name;
  j["commit_sha"] = record.commit_sha;
  j["parent_sha"] = record.parent_sha;
  j["project_type"] = parse::project_type_name(record.project_type);
  j["project_type_low_confidence"] = record.project_type_low_confidence;
  j["n_code_links"] = record.n_code_links;
  j["label"] = parse::function_label_name(record.label);
  j["vulnerable_line_ranges"] = record.vulnerable_line_ranges;
  ordered_json functions = ordered_json::object();
  for (const auto& [path, names] : record.vulnerable_functions) functions[path] = names;
  j["vulnerable_functions"] = functions;
  ordered_json spans = ordered_json::object();
  for (const auto& [path, list] : record.spans) {
    ordered_json rows = ordered_json::array();
    for (const auto& [name, start, end] : list) {
      rows.push_back(ordered_json::array({name, start, end}));
    }
    spans[path] = rows;
  }
  j["spans"] = spans;
  j["analyzable_files"] = record.analyzable_files;
  j["all_files"] = record.all_files;
  j["minified"] = record.minified;
  j["diagnostics"] = record.diagnostics;
  return j.dump();
}

Result<CaseRecord> case_record_from_json(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return Error{Errc::ParseError, "case record is not a JSON object"};
  }
  CaseRecord record;
  record.case_id = j.value("case_id", "");
  record.cve_id = j.value("cve_id", "");
  record.cve_description = j.value("cve_description", "");
  if (j.contains("severity")) {
    auto severity = ingest::parse_severity(j["severity"].get<std::string>());
    if (!severity.ok()) return severity.error();
    record.severity = severity.value();
  }
  record.cwe_ids = string_list(j.value("cwe_ids", json::array()));
  record.published_date = j.value("published_date", "");
  record.sources = string_list(j.value("sources", json::array()));
  record.project_name = j.value("project_name", "");
  record.commit_sha = j.value("commit_sha", "");
  record.parent_sha = j.value("parent_sha", "");
  if (j.contains("project_type")) {
    auto type = parse::parse_project_type(j["project_type"].get<std::string>());
    if (!type.ok()) return type.error();
    record.project_type = type.value();
  }
  record.project_type_low_confidence = j.value("project_type_low_confidence", false);
  record.n_code_links = j.value("n_code_links", 0);
  if (j.contains("label")) {
    auto label = parse::parse_function_label(j["label"].get<std::string>());
    if (!label.ok()) return label.error();
    record.label = label.value();
  }
  record.vulnerable_line_ranges = j.value("vulnerable_line_ranges", "");
  if (j.contains("vulnerable_functions") && j["vulnerable_functions"].is_object()) {
    for (const auto& [path, names] : j["vulnerable_functions"].items()) {
      record.vulnerable_functions[path] = string_list(names);
    }
  }
  if (j.contains("spans") && j["spans"].is_object()) {
    for (const auto& [path, rows] : j["spans"].items()) {
      for (const auto& row : rows) {
        if (row.is_array() && row.size() == 3) {
          record.spans[path].push_back(
              {row[0].get<std::string>(), row[1].get<int>(), row[2].get<int>()});
        }
      }
    }
  }
  record.analyzable_files = string_list(j.value("analyzable_files", json::array()));
  record.all_files = string_list(j.value("all_files", json::array()));
  record.minified = j.value("minified", false);
  record.diagnostics = string_list(j.value("diagnostics", json::array()));
  return record;
}

// ============================================================
// Config
// ============================================================

void apply_config_json(Config& config, const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return;
  auto set_string = [&](const char* key, std::string& field) {
    if (j.contains(key) && j[key].is_string()) field = j[key].get<std::string>();
  };
  set_string("records_path", config.records_path);
  set_string("fixtures_root", config.fixtures_root);
  set_string("dataset_root", config.dataset_root);
  set_string("data_dir", config.data_dir);
  set_string("split", config.split);
  set_string("replay_path", config.replay_path);
  set_string("endpoint_host", config.endpoint_host);
  set_string("endpoint_route", config.endpoint_route);
  if (j.contains("variants")) config.variants = string_list(j["variants"]);
  if (j.contains("models")) config.models = string_list(j["models"]);
  if (j.contains("mode") && j["mode"].is_string()) {
    if (auto mode = harness::parse_payload_mode(j["mode"].get<std::string>()); mode.ok()) {
      config.mode = mode.value();
    }
  }
  if (j.contains("matching") && j["matching"].is_string()) {
    if (auto mode = score::parse_match_mode(j["matching"].get<std::string>()); mode.ok()) {
      config.matching = mode.value();
    }
  }
  if (j.contains("seed") && j["seed"].is_number()) config.seed = j["seed"].get<uint64_t>();
  if (j.contains("vds_r") && j["vds_r"].is_number()) config.vds_r = j["vds_r"].get<double>();
  if (j.contains("workers") && j["workers"].is_number()) config.workers = j["workers"].get<int>();
  if (j.contains("temperature") && j["temperature"].is_number()) {
    config.temperature = j["temperature"].get<double>();
  }
  if (j.contains("timeout_s") && j["timeout_s"].is_number()) {
    config.timeout_s = j["timeout_s"].get<int>();
  }
  if (j.contains("confidence_threshold") && j["confidence_threshold"].is_number()) {
    config.confidence_threshold = j["confidence_threshold"].get<double>();
  }
  if (j.contains("input_token_budget") && j["input_token_budget"].is_number()) {
    config.input_token_budget = j["input_token_budget"].get<int64_t>();
  }
  if (j.contains("endpoint_port") && j["endpoint_port"].is_number()) {
    config.endpoint_port = j["endpoint_port"].get<int>();
  }
}

Result<Config> load_config(const std::string& path) {
  auto text = read_file(path);
  if (!text.ok()) return text.error();
  json j = json::parse(text.value(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return Error{Errc::ConfigError, path + ": config must be a JSON object"};
  }
  Config config;
  apply_config_json(config, text.value());
  return config;
}

// ============================================================
// File naming
// ============================================================

std::map<std::string, std::string> materialized_names(const std::vector<std::string>& paths,
                                                      harness::CaseVersion version) {
  std::map<std::string, int> base_count;
  for (const auto& path : paths) base_count[basename_of(path)]++;
  std::string suffix =
      version == harness::CaseVersion::VULNERABLE ? "_vulnerable" : "_fixed";
  std::map<std::string, std::string> names;
  for (const auto& path : paths) {
    std::string base = basename_of(path);
    std::string stem = base;
    std::string ext;
    auto dot = base.rfind('.');
    if (dot != std::string::npos && dot != 0) {
      stem = base.substr(0, dot);
      ext = base.substr(dot);
    }
    std::string prefix;
    if (base_count[base] > 1 && path.size() > base.size()) {
      prefix = path.substr(0, path.size() - base.size() - 1);
      for (char& c : prefix) {
        if (c == '/') c = '_';
      }
      prefix += "__";
    }
    names[path] = prefix + stem + suffix + ext;
  }
  return names;
}

// ============================================================
// Ingest
// ============================================================

Result<StageSummary> run_ingest(const Config& config) {
  if (config.dataset_root.empty()) {
    return Error{Errc::ConfigError, "dataset_root is not set"};
  }
  auto outcome = ingest::read_records_file(config.records_path);
  if (!outcome.ok()) return outcome.error();

  StageSummary summary;
  ordered_json rejected = ordered_json::array();
  for (const auto& reject : outcome.value().rejected) {
    ++summary.rejected;
    rejected.push_back({{"cve_id", reject.cve_id},
                        {"record_index", reject.record_index},
                        {"reason", errc_name(reject.reason.code)},
                        {"message", reject.reason.message}});
    summary.notes.push_back((reject.cve_id.empty() ? "record " + std::to_string(
                                                         reject.record_index)
                                                   : reject.cve_id) +
                            " rejected: " + reject.reason.to_string());
  }

  ingest::DirectoryFetcher fetcher(config.fixtures_root);
  std::vector<CaseRecord> cases;
  ordered_json case_ids = ordered_json::array();
  const auto& accepted = outcome.value().accepted;
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    const auto& advisory = accepted[i];
    const auto& refs = outcome.value().parsed_refs[i];
    const auto& ref = refs.front();
    auto pair = ingest::fetch_patch_pair(ref, fetcher);
    if (!pair.ok()) {
      ++summary.rejected;
      rejected.push_back({{"cve_id", advisory.cve_id},
                          {"record_index", i},
                          {"reason", errc_name(pair.error().code)},
                          {"message", pair.error().message}});
      summary.notes.push_back(advisory.cve_id + " rejected: " + pair.error().to_string());
      continue;
    }

    CaseRecord record;
    record.case_id = advisory.cve_id + "__" + ref.owner + "__" + ref.repo;
    record.cve_id = advisory.cve_id;
    record.cve_description = advisory.cve_description;
    record.severity = advisory.severity;
    record.cwe_ids = advisory.cwe_ids;
    record.published_date = advisory.published_date;
    record.sources = advisory.sources;
    record.project_name = ref.owner + "/" + ref.repo;
    record.commit_sha = ref.commit_sha;
    record.parent_sha = pair.value().parent_sha;
    record.n_code_links = static_cast<int>(refs.size());
    record.diagnostics = pair.value().diagnostics;
    for (const auto& [path, text] : pair.value().vulnerable_files) {
      record.all_files.push_back(path);
      if (parse::is_javascript_path(path) && !pair.value().added_by_patch.count(path) &&
          !pair.value().removed_by_patch.count(path)) {
        record.analyzable_files.push_back(path);
      }
    }

    std::string case_dir = join_path(join_path(config.dataset_root, "databackup"),
                                     record.case_id);
    auto vuln_names = materialized_names(record.all_files, harness::CaseVersion::VULNERABLE);
    auto fixed_names = materialized_names(record.all_files, harness::CaseVersion::FIXED);
    for (const auto& [path, text] : pair.value().vulnerable_files) {
      auto status = write_file(join_path(case_dir, vuln_names.at(path)), text);
      if (!status.ok()) return status.error();
    }
    for (const auto& [path, text] : pair.value().fixed_files) {
      auto status = write_file(join_path(case_dir, fixed_names.at(path)), text);
      if (!status.ok()) return status.error();
    }

    case_ids.push_back(record.case_id);
    cases.push_back(std::move(record));
    ++summary.processed;
  }

  if (cases.empty()) {
    return Error{Errc::MissingMetadata, "no cases survived ingest"};
  }
  auto status = write_case_file(join_path(config.dataset_root, "cases.jsonl"), cases);
  if (!status.ok()) return status.error();

  update_manifest(config, "ingest",
                  {{"records_path", config.records_path},
                   {"cases", summary.processed},
                   {"rejected", rejected},
                   {"case_ids", case_ids},
                   {"seed", config.seed}});
  summary.notes.push_back(std::to_string(summary.processed) + " case(s) materialized");
  return summary;
}

// ============================================================
// Analyze
// ============================================================

Result<StageSummary> run_analyze(const Config& config) {
  auto cases_path = join_path(config.dataset_root, "cases.jsonl");
  auto records = read_case_file(cases_path);
  if (!records.ok()) return records.error();

  StageSummary summary;
  std::map<std::string, int> label_tally;
  std::map<std::string, int> type_tally;
  for (auto& record : records.value()) {
    auto texts = load_case_texts(
        join_path(join_path(config.dataset_root, "databackup"), record.case_id), record);
    if (!texts.ok()) return texts.error();

    // Re-running analyze must not stack its own notes.
    std::erase_if(record.diagnostics, [](const std::string& note) {
      return note.find("outside any function") != std::string::npos ||
             note.find("looks minified") != std::string::npos;
    });

    record.minified = false;
    for (const auto& path : record.analyzable_files) {
      if (js::looks_minified(texts.value().vulnerable.at(path))) {
        record.minified = true;
        record.diagnostics.push_back(path + ": looks minified");
      }
    }

    auto mappings = compute_mappings(record, texts.value());
    fill_annotations(record, mappings, {});

    parse::LabelInput label_input;
    for (const auto& [path, names] : record.vulnerable_functions) {
      label_input.vulnerable_functions.push_back({path, names});
    }
    label_input.advisory_text = record.cve_description;
    record.label = parse::assign_label(label_input);

    std::map<std::string, std::string> type_files;
    for (const auto& path : record.all_files) {
      const auto& vuln = texts.value().vulnerable.at(path);
      type_files[path] = vuln.empty() ? texts.value().fixed.at(path) : vuln;
    }
    auto type = parse::classify_project_type(type_files, record.all_files);
    record.project_type = type.type;
    record.project_type_low_confidence = type.low_confidence;

    ++label_tally[parse::function_label_name(record.label)];
    ++type_tally[parse::project_type_name(record.project_type)];
    ++summary.processed;
  }

  auto status = write_case_file(cases_path, records.value());
  if (!status.ok()) return status.error();

  ordered_json labels = ordered_json::object();
  for (const auto& [name, count] : label_tally) labels[name] = count;
  ordered_json types = ordered_json::object();
  for (const auto& [name, count] : type_tally) types[name] = count;
  update_manifest(config, "analyze",
                  {{"cases", summary.processed}, {"labels", labels}, {"types", types}});
  for (const auto& [name, count] : label_tally) {
    summary.notes.push_back(std::string(name) + ": " + std::to_string(count));
  }
  return summary;
}

// ============================================================
// Augment
// ============================================================

Result<StageSummary> run_augment(const Config& config) {
  auto records = read_case_file(join_path(config.dataset_root, "cases.jsonl"));
  if (!records.ok()) return records.error();
  auto catalog = augment::load_sink_catalog(join_path(config.data_dir, "catalog.sinks"));
  if (!catalog.ok()) return catalog.error();
  auto library = augment::load_prompt_library(join_path(config.data_dir, "prompts.lib"));
  if (!library.ok()) return library.error();
  auto variants = resolve_variants(config);
  if (!variants.ok()) return variants.error();

  StageSummary summary;
  ordered_json manifest_variants = ordered_json::array();
  for (const auto& variant_name : variants.value()) {
    auto variant = augment::parse_variant(variant_name);
    std::vector<CaseRecord> variant_records;
    for (const auto& record : records.value()) {
      auto texts = load_case_texts(
          join_path(join_path(config.dataset_root, "databackup"), record.case_id), record);
      if (!texts.ok()) return texts.error();

      augment::AugmentationConfig acfg;
      acfg.variant = variant.value();
      acfg.global_seed = config.seed;
      augment::CaseFiles files{texts.value().vulnerable, texts.value().fixed};
      auto augmented = augment::augment_case(files, record.case_id, acfg, catalog.value(),
                                             library.value());

      std::string case_dir = join_path(join_path(config.dataset_root, variant_name),
                                       record.case_id);
      auto vuln_names = materialized_names(record.all_files, harness::CaseVersion::VULNERABLE);
      auto fixed_names = materialized_names(record.all_files, harness::CaseVersion::FIXED);
      for (const auto& [path, text] : augmented.files.vulnerable) {
        auto status = write_file(join_path(case_dir, vuln_names.at(path)), text);
        if (!status.ok()) return status.error();
      }
      for (const auto& [path, text] : augmented.files.fixed) {
        auto status = write_file(join_path(case_dir, fixed_names.at(path)), text);
        if (!status.ok()) return status.error();
      }

      CaseRecord variant_record = record;
      auto mappings = compute_mappings(record, texts.value());
      variant_record.diagnostics = record.diagnostics;
      fill_annotations(variant_record, mappings, augmented.vulnerable_transforms);
      for (const auto& note : augmented.diagnostics) {
        variant_record.diagnostics.push_back(note);
      }
      variant_records.push_back(std::move(variant_record));
      ++summary.processed;
    }
    auto status = write_case_file(
        join_path(join_path(config.dataset_root, variant_name), "cases.jsonl"),
        variant_records);
    if (!status.ok()) return status.error();
    manifest_variants.push_back(
        {{"variant", variant_name}, {"cases", variant_records.size()}});
    summary.notes.push_back(variant_name + ": " + std::to_string(variant_records.size()) +
                            " case(s)");
  }

  update_manifest(config, "augment",
                  {{"seed", config.seed}, {"variants", manifest_variants}});
  return summary;
}

// ============================================================
// Detect
// ============================================================

Result<harness::CasePayload> load_case_payload(const Config& config,
                                               const std::string& variant,
                                               const CaseRecord& record,
                                               harness::CaseVersion version) {
  harness::CasePayload payload;
  payload.case_id = record.case_id;
  payload.project_name = record.project_name;
  auto names = materialized_names(record.all_files, version);
  std::string case_dir = join_path(join_path(config.dataset_root, variant), record.case_id);
  for (const auto& path : record.analyzable_files) {
    auto text = read_file(join_path(case_dir, names.at(path)));
    if (!text.ok()) return text.error();
    payload.files[path] = std::move(text).take();
  }
  for (const auto& [path, spans] : record.spans) {
    for (const auto& [name, start, end] : spans) {
      payload.snippet_spans.push_back({path, start, end});
    }
  }
  return payload;
}

namespace {

ordered_json finding_to_json(const harness::Finding& finding) {
  return {{"file", finding.file},
          {"line", finding.line},
          {"severity", harness::finding_severity_name(finding.severity)},
          {"category", finding.category},
          {"description", finding.description},
          {"exploit_scenario", finding.exploit_scenario},
          {"recommendation", finding.recommendation},
          {"confidence", finding.confidence}};
}

std::string detection_result_to_json(const harness::DetectionResult& result) {
  ordered_json j;
  j["case_id"] = result.case_id;
  j["version"] = harness::case_version_name(result.version);
  j["model_id"] = result.model_id;
  ordered_json findings = ordered_json::array();
  for (const auto& finding : result.findings) findings.push_back(finding_to_json(finding));
  j["findings"] = findings;
  j["raw_response"] = result.raw_response;
  j["usage"] = {{"input", result.token_usage.input}, {"output", result.token_usage.output}};
  j["wall_time_s"] = result.wall_time_s;
  j["errored"] = result.errored;
  j["diagnostics"] = result.diagnostics;
  return j.dump();
}

Result<harness::DetectionResult> detection_result_from_json(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return Error{Errc::ParseError, "detection record is not a JSON object"};
  }
  harness::DetectionResult result;
  result.case_id = j.value("case_id", "");
  auto version = harness::parse_case_version(j.value("version", "vulnerable"));
  if (!version.ok()) return version.error();
  result.version = version.value();
  result.model_id = j.value("model_id", "");
  if (j.contains("findings") && j["findings"].is_array()) {
    for (const auto& node : j["findings"]) {
      harness::Finding finding;
      finding.file = node.value("file", "");
      finding.line = node.value("line", 0);
      auto severity = harness::parse_finding_severity(node.value("severity", "MEDIUM"));
      if (severity.ok()) finding.severity = severity.value();
      finding.category = node.value("category", "");
      finding.description = node.value("description", "");
      finding.exploit_scenario = node.value("exploit_scenario", "");
      finding.recommendation = node.value("recommendation", "");
      finding.confidence = node.value("confidence", 0.8);
      result.findings.push_back(std::move(finding));
    }
  }
  result.raw_response = j.value("raw_response", "");
  if (j.contains("usage") && j["usage"].is_object()) {
    result.token_usage.input = j["usage"].value("input", static_cast<int64_t>(0));
    result.token_usage.output = j["usage"].value("output", static_cast<int64_t>(0));
  }
  result.wall_time_s = j.value("wall_time_s", 0.0);
  result.errored = j.value("errored", false);
  result.diagnostics = string_list(j.value("diagnostics", json::array()));
  return result;
}

}  // namespace

Result<StageSummary> run_detect(const Config& config) {
  if (config.models.empty()) {
    return Error{Errc::ConfigError, "no models configured"};
  }
  auto system_prompt = read_file(join_path(config.data_dir, "system_prompt.txt"));
  if (!system_prompt.ok()) return system_prompt.error();
  auto variants = resolve_variants(config);
  if (!variants.ok()) return variants.error();

  StageSummary summary;
  for (const auto& model : config.models) {
    std::string model_dir =
        join_path(join_path(config.dataset_root, "results"), sanitize_component(model));
    for (const auto& variant : variants.value()) {
      auto records = read_case_file(
          join_path(join_path(config.dataset_root, variant), "cases.jsonl"));
      if (!records.ok()) {
        return Error{records.error().code,
                     records.error().message + " (run augment before detect)"};
      }

      std::unique_ptr<harness::ModelClient> replay;
      std::unique_ptr<harness::HttpJsonClient> live;
      std::unique_ptr<harness::RecordingClient> recorder;
      harness::ModelClient* client = nullptr;
      if (!config.replay_path.empty()) {
        auto loaded = harness::ReplayClient::load(config.replay_path);
        if (!loaded.ok()) return loaded.error();
        replay = std::make_unique<harness::ReplayClient>(std::move(loaded).take());
        client = replay.get();
      } else if (!config.endpoint_host.empty()) {
        live = std::make_unique<harness::HttpJsonClient>(
            config.endpoint_host, config.endpoint_port, config.endpoint_route);
        fs::create_directories(model_dir);  // the recorder appends, it cannot mkdir
        recorder = std::make_unique<harness::RecordingClient>(
            *live, join_path(model_dir, variant + ".transcript.jsonl"));
        client = recorder.get();
      } else {
        return Error{Errc::ConfigError,
                     "no model client configured (set replay_path or endpoint_host)"};
      }

      harness::DetectConfig detect;
      detect.model_id = model;
      detect.temperature = config.temperature;
      detect.timeout_s = config.timeout_s;
      detect.mode = config.mode;
      detect.prompt.system_prompt = system_prompt.value();
      detect.prompt.input_token_budget = config.input_token_budget;

      struct Task {
        const CaseRecord* record;
        harness::CaseVersion version;
      };
      std::vector<Task> tasks;
      for (const auto& record : records.value()) {
        tasks.push_back({&record, harness::CaseVersion::VULNERABLE});
        tasks.push_back({&record, harness::CaseVersion::FIXED});
      }
      std::vector<harness::DetectionResult> results(tasks.size());
      std::vector<Error> failures;
      std::mutex failures_mutex;

      auto run_task = [&](std::size_t index) {
        auto payload = load_case_payload(config, variant, *tasks[index].record,
                                         tasks[index].version);
        if (!payload.ok()) {
          std::lock_guard<std::mutex> lock(failures_mutex);
          failures.push_back(payload.error());
          return;
        }
        results[index] =
            harness::run_detection(payload.value(), tasks[index].version, *client, detect);
      };

      int workers = std::max(1, config.workers);
      if (int cap = client->max_concurrency(); cap > 0) workers = std::min(workers, cap);
      if (workers <= 1 || tasks.size() <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
      } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> cursor{0};
        for (int w = 0; w < workers; ++w) {
          pool.emplace_back([&] {
            for (std::size_t i = cursor.fetch_add(1); i < tasks.size();
                 i = cursor.fetch_add(1)) {
              run_task(i);
            }
          });
        }
        for (auto& thread : pool) thread.join();
      }
      if (!failures.empty()) return failures.front();

      std::string out;
      int errored = 0;
      for (const auto& result : results) {
        out += detection_result_to_json(result) + "\n";
        if (result.errored) ++errored;
        ++summary.processed;
      }
      summary.rejected += errored;
      auto status = write_file(join_path(model_dir, variant + ".jsonl"), out);
      if (!status.ok()) return status.error();
      summary.notes.push_back(model + "/" + variant + ": " + std::to_string(results.size()) +
                              " detection(s), " + std::to_string(errored) + " errored");
    }
  }
  update_manifest(config, "detect",
                  {{"models", config.models},
                   {"detections", summary.processed},
                   {"errored", summary.rejected}});
  return summary;
}

// ============================================================
// Score
// ============================================================

namespace {

struct RowKey {
  std::string model;
  std::string variant;
  std::string split;
  std::string granularity;
};

struct RowStats {
  score::ConfusionCounts counts;
  score::Metrics metrics;
  std::optional<score::VdsResult> vds;
  std::string vds_note;
  int cases = 0;
  int errored = 0;
};

// Predicted (file, function) pairs name their function by locating the
// finding line inside the variant file's extracted spans (innermost wins).
class FunctionDeriver {
 public:
  FunctionDeriver(const Config& config, const std::string& variant, const CaseRecord& record)
      : config_(config), variant_(variant), record_(record) {}

  std::string function_at(const std::string& file, int line) {
    auto resolved = resolve_path(file);
    if (!resolved) return "";
    const auto* spans = spans_for(*resolved);
    if (!spans) return "";
    const parse::FunctionSpan* best = nullptr;
    for (const auto& span : *spans) {
      if (line < span.start_line || line > span.end_line) continue;
      if (!best ||
          span.end_line - span.start_line <= best->end_line - best->start_line) {
        best = &span;
      }
    }
    return best ? best->name : "";
  }

 private:
  std::optional<std::string> resolve_path(const std::string& file) {
    for (const auto& path : record_.analyzable_files) {
      if (path == file) return path;
    }
    std::optional<std::string> match;
    for (const auto& path : record_.analyzable_files) {
      if (basename_of(path) != basename_of(file)) continue;
      if (match) return std::nullopt;  // ambiguous
      match = path;
    }
    return match;
  }

  const std::vector<parse::FunctionSpan>* spans_for(const std::string& path) {
    auto cached = cache_.find(path);
    if (cached != cache_.end()) return &cached->second;
    auto names = materialized_names(record_.all_files, harness::CaseVersion::VULNERABLE);
    auto text = read_file(join_path(
        join_path(join_path(config_.dataset_root, variant_), record_.case_id),
        names.at(path)));
    if (!text.ok()) return nullptr;
    auto extracted = parse::extract_functions(text.value());
    return &cache_.emplace(path, std::move(extracted.spans)).first->second;
  }

  const Config& config_;
  std::string variant_;
  const CaseRecord& record_;
  std::map<std::string, std::vector<parse::FunctionSpan>> cache_;
};

score::GroundTruth truth_for(const CaseRecord& record, harness::CaseVersion version) {
  score::GroundTruth truth;
  truth.is_vulnerable = version == harness::CaseVersion::VULNERABLE;
  if (!truth.is_vulnerable) return truth;
  truth.cwe_ids.insert(record.cwe_ids.begin(), record.cwe_ids.end());
  for (const auto& [path, names] : record.vulnerable_functions) {
    truth.files.insert(path);
    truth.functions.insert(names.begin(), names.end());
  }
  return truth;
}

std::string format_fraction(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%5.1f", value * 100.0);
  return buf;
}

std::string render_row(const ordered_json& row) {
  char buf[256];
  std::string vds = "    -";
  if (row.contains("vds") && row["vds"].is_object()) {
    vds = format_fraction(row["vds"]["value"].get<double>());
  }
  std::snprintf(buf, sizeof(buf),
                "%-14s %-18s %-5s %-9s %-12s %4d %4d %4d %4d %4d  %s %s %s  %s",
                row["model"].get<std::string>().c_str(),
                row["variant"].get<std::string>().c_str(),
                row["split"].get<std::string>().c_str(),
                row["granularity"].get<std::string>().c_str(),
                row["matching"].get<std::string>().c_str(), row["cases"].get<int>(),
                row["counts"]["tp"].get<int>(), row["counts"]["fp"].get<int>(),
                row["counts"]["tn"].get<int>(), row["counts"]["fn"].get<int>(),
                format_fraction(row["precision"].get<double>()).c_str(),
                format_fraction(row["recall"].get<double>()).c_str(),
                format_fraction(row["f1"].get<double>()).c_str(), vds.c_str());
  return buf;
}

std::string render_header() {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-14s %-18s %-5s %-9s %-12s %4s %4s %4s %4s %4s  %5s %5s %5s  %5s",
                "model", "variant", "split", "gran", "match", "n", "tp", "fp", "tn", "fn",
                "prec", "rec", "f1", "vd-s");
  return buf;
}

std::string render_report(const std::vector<ordered_json>& rows) {
  std::string text = render_header() + "\n";
  text += std::string(render_header().size(), '-') + "\n";
  for (const auto& row : rows) text += render_row(row) + "\n";
  return text;
}

}  // namespace

Result<StageSummary> run_score(const Config& config) {
  auto classes = score::CweClasses::load(join_path(config.data_dir, "cwe_classes.txt"));
  score::CweClasses table = score::CweClasses::empty();
  if (classes.ok()) {
    table = std::move(classes).take();
  } else if (config.matching == score::MatchMode::EQUIVALENCE) {
    return classes.error();
  }
  if (config.models.empty()) {
    return Error{Errc::ConfigError, "no models configured"};
  }
  auto variants = resolve_variants(config);
  if (!variants.ok()) return variants.error();

  StageSummary summary;
  std::vector<ordered_json> rows;
  for (const auto& model : config.models) {
    std::string model_dir =
        join_path(join_path(config.dataset_root, "results"), sanitize_component(model));
    for (const auto& variant : variants.value()) {
      auto records = read_case_file(
          join_path(join_path(config.dataset_root, variant), "cases.jsonl"));
      if (!records.ok()) return records.error();
      std::map<std::string, const CaseRecord*> by_id;
      for (const auto& record : records.value()) by_id[record.case_id] = &record;

      auto results_text = read_file(join_path(model_dir, variant + ".jsonl"));
      if (!results_text.ok()) {
        return Error{results_text.error().code,
                     results_text.error().message + " (run detect before score)"};
      }
      std::vector<harness::DetectionResult> results;
      for (const auto& line : split_lines(results_text.value())) {
        if (trim(line).empty()) continue;
        auto result = detection_result_from_json(line);
        if (!result.ok()) return result.error();
        results.push_back(std::move(result).take());
      }

      // Derived pairs are shared across the four (split, granularity) rows.
      std::map<std::string, FunctionDeriver> derivers;
      auto derive_pairs = [&](const harness::DetectionResult& result,
                              score::Prediction& pred) {
        auto found = by_id.find(result.case_id);
        if (found == by_id.end()) return;
        auto deriver = derivers.find(result.case_id);
        if (deriver == derivers.end()) {
          deriver = derivers
                        .emplace(std::piecewise_construct,
                                 std::forward_as_tuple(result.case_id),
                                 std::forward_as_tuple(config, variant, *found->second))
                        .first;
        }
        for (auto& pair : pred.pairs) {
          pair.function = deriver->second.function_at(pair.file, pair.line);
        }
      };

      for (const std::string& split : {std::string("full"), std::string("dn")}) {
        for (const std::string& granularity :
             {std::string("project"), std::string("function")}) {
          RowStats stats;
          std::vector<score::VdsItem> vds_items;
          for (const auto& result : results) {
            auto found = by_id.find(result.case_id);
            if (found == by_id.end()) {
              summary.notes.push_back(variant + ": no case record for " + result.case_id);
              continue;
            }
            const CaseRecord& record = *found->second;
            if (split == "dn" && !parse::in_denoised_split(record.label)) continue;
            ++stats.cases;
            if (result.errored) ++stats.errored;

            auto truth = truth_for(record, result.version);
            auto pred = score::build_prediction(result.findings, config.confidence_threshold);
            auto pred_all = score::build_prediction(result.findings, 0.0);
            if (result.version == harness::CaseVersion::VULNERABLE &&
                granularity == "function") {
              derive_pairs(result, pred);
              derive_pairs(result, pred_all);
            }

            score::Outcome outcome;
            score::Outcome unthresholded;
            if (granularity == "project") {
              outcome = score::match_project(truth, pred, table, config.matching);
              unthresholded = score::match_project(truth, pred_all, table, config.matching);
            } else {
              outcome = score::match_function(truth, pred, table, config.matching).outcome;
              unthresholded =
                  score::match_function(truth, pred_all, table, config.matching).outcome;
            }
            stats.counts.add(outcome);
            vds_items.push_back({truth.is_vulnerable, pred_all.max_confidence,
                                 unthresholded == score::Outcome::TP});
          }
          stats.metrics = score::compute_metrics(stats.counts);
          auto vds = score::compute_vds(vds_items, {config.vds_r});
          if (vds.ok()) {
            stats.vds = vds.value();
          } else {
            stats.vds_note = vds.error().message;
          }

          ordered_json row;
          row["model"] = model;
          row["variant"] = variant;
          row["split"] = split;
          row["granularity"] = granularity;
          row["matching"] = score::match_mode_name(config.matching);
          row["cases"] = stats.cases;
          row["errored"] = stats.errored;
          row["counts"] = {{"tp", stats.counts.tp},
                           {"tn", stats.counts.tn},
                           {"fp", stats.counts.fp},
                           {"fn", stats.counts.fn}};
          row["precision"] = stats.metrics.precision;
          row["recall"] = stats.metrics.recall;
          row["f1"] = stats.metrics.f1;
          if (stats.vds) {
            row["vds"] = {{"value", stats.vds->vds},
                          {"threshold", stats.vds->threshold},
                          {"fp", stats.vds->fp},
                          {"fn", stats.vds->fn}};
          } else {
            row["vds"] = nullptr;
            row["vds_note"] = stats.vds_note;
          }
          rows.push_back(std::move(row));
          ++summary.processed;
        }
      }
    }
  }

  std::string reports_dir = join_path(config.dataset_root, "reports");
  std::string jsonl;
  for (const auto& row : rows) jsonl += row.dump() + "\n";
  auto status = write_file(join_path(reports_dir, "report.jsonl"), jsonl);
  if (!status.ok()) return status.error();
  std::string text = render_report(rows);
  status = write_file(join_path(reports_dir, "report.txt"), text);
  if (!status.ok()) return status.error();

  update_manifest(config, "score",
                  {{"rows", rows.size()},
                   {"matching", score::match_mode_name(config.matching)},
                   {"confidence_threshold", config.confidence_threshold},
                   {"vds_r", config.vds_r}});
  summary.notes.push_back(std::to_string(rows.size()) + " report row(s)");
  return summary;
}

// ============================================================
// Report
// ============================================================

Result<StageSummary> run_report(const Config& config) {
  auto jsonl = read_file(join_path(join_path(config.dataset_root, "reports"), "report.jsonl"));
  if (!jsonl.ok()) {
    return Error{jsonl.error().code, jsonl.error().message + " (run score before report)"};
  }
  std::vector<ordered_json> rows;
  for (const auto& line : split_lines(jsonl.value())) {
    if (trim(line).empty()) continue;
    auto row = ordered_json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object()) {
      return Error{Errc::ParseError, "report.jsonl: bad row"};
    }
    rows.push_back(std::move(row));
  }
  std::string text = render_report(rows);
  auto status = write_file(join_path(join_path(config.dataset_root, "reports"), "report.txt"),
                           text);
  if (!status.ok()) return status.error();

  StageSummary summary;
  summary.processed = static_cast<int>(rows.size());
  for (const auto& line : split_lines(text)) {
    if (!line.empty()) summary.notes.push_back(line);
  }
  return summary;
}

std::string vulnerability_class_name(const std::string& cwe_id) {
  static const std::map<std::string, std::string> kNames = {
      {"CWE-22", "Path Traversal"},
      {"CWE-77", "Command Injection"},
      {"CWE-78", "OS Command Injection"},
      {"CWE-79", "Cross-Site Scripting"},
      {"CWE-89", "SQL Injection"},
      {"CWE-94", "Code Injection"},
      {"CWE-95", "Eval Injection"},
      {"CWE-287", "Improper Authentication"},
      {"CWE-400", "Uncontrolled Resource Consumption"},
      {"CWE-502", "Unsafe Deserialization"},
      {"CWE-601", "Open Redirect"},
      {"CWE-611", "XML External Entity"},
      {"CWE-798", "Hardcoded Credentials"},
      {"CWE-915", "Mass Assignment"},
      {"CWE-1022", "Reverse Tabnabbing"},
      {"CWE-1321", "Prototype Pollution"},
      {"CWE-1333", "Regular Expression Denial of Service"},
  };
  auto normalized = harness::normalize_cwe_id(cwe_id);
  auto it = kNames.find(normalized ? *normalized : cwe_id);
  return it == kNames.end() ? cwe_id : it->second;
}

}  // namespace jsvb::pipeline
