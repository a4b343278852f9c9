#include "jsvb/ingest.hpp"

#include <algorithm>
#include <filesystem>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace jsvb::ingest {

const char* severity_name(Severity severity) {
  switch (severity) {
    case Severity::CRITICAL: return "CRITICAL";
    case Severity::HIGH:     return "HIGH";
    case Severity::MEDIUM:   return "MEDIUM";
    case Severity::LOW:      return "LOW";
  }
  return "MEDIUM";
}

Result<Severity> parse_severity(std::string_view name) {
  std::string u = to_lower_ascii(name);
  if (u == "critical") return Severity::CRITICAL;
  if (u == "high") return Severity::HIGH;
  if (u == "medium" || u == "moderate") return Severity::MEDIUM;
  if (u == "low") return Severity::LOW;
  return Error{Errc::MissingMetadata, "unknown severity: " + std::string(name)};
}

namespace {

std::vector<std::string> string_or_list(const json& v) {
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (e.is_string()) out.push_back(e.get<std::string>());
    }
  }
  return out;
}

bool valid_cwe_id(std::string_view id) {
  if (!id.starts_with("CWE-")) return false;
  std::string_view digits = id.substr(4);
  if (digits.empty() || digits[0] == '0') return false;
  return std::all_of(digits.begin(), digits.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

Result<AdvisoryRecord> parse_record(std::string_view json_line) {
  json doc = json::parse(json_line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    return Error{Errc::ParseError, "record is not a JSON object"};
  }
  AdvisoryRecord rec;
  if (doc.contains("cve_id") && doc["cve_id"].is_string()) {
    rec.cve_id = doc["cve_id"].get<std::string>();
  }
  if (doc.contains("cve_description") && doc["cve_description"].is_string()) {
    rec.cve_description = doc["cve_description"].get<std::string>();
  }
  if (doc.contains("severity") && doc["severity"].is_string()) {
    auto sev = parse_severity(doc["severity"].get<std::string>());
    if (!sev.ok()) return sev.error();
    rec.severity = sev.value();
  }
  if (doc.contains("cwe_ids")) {
    rec.cwe_ids = string_or_list(doc["cwe_ids"]);
  } else if (doc.contains("cwe_id")) {
    rec.cwe_ids = string_or_list(doc["cwe_id"]);
  }
  if (doc.contains("published") && doc["published"].is_string()) {
    rec.published_date = doc["published"].get<std::string>();
  } else if (doc.contains("published_date") && doc["published_date"].is_string()) {
    rec.published_date = doc["published_date"].get<std::string>();
  }
  if (doc.contains("code_links")) rec.code_links = string_or_list(doc["code_links"]);
  if (doc.contains("sources")) rec.sources = string_or_list(doc["sources"]);
  return rec;
}

Result<AdvisoryRecord> validate_advisory(AdvisoryRecord record) {
  if (record.cve_id.empty()) {
    return Error{Errc::MissingMetadata, "record has no cve_id"};
  }
  for (const auto& cwe : record.cwe_ids) {
    if (!valid_cwe_id(cwe)) {
      return Error{Errc::MalformedCweId, record.cve_id + ": '" + cwe + "'"};
    }
  }
  if (record.code_links.empty()) {
    return Error{Errc::MissingCodeLink, record.cve_id + ": no code links"};
  }
  bool any_commit = std::any_of(record.code_links.begin(), record.code_links.end(),
                                [](const std::string& u) { return parse_commit_url(u).ok(); });
  if (!any_commit) {
    return Error{Errc::MissingCodeLink, record.cve_id + ": no parseable commit link"};
  }
  return record;
}

Result<RepoRef> parse_commit_url(std::string_view url) {
  std::string_view rest = url;
  auto fail = [&](const char* why) {
    return Error{Errc::NotACommitUrl, std::string(why) + ": " + std::string(url)};
  };
  if (auto scheme = rest.find("://"); scheme != std::string_view::npos) {
    std::string_view proto = rest.substr(0, scheme);
    if (proto != "http" && proto != "https") return fail("unsupported scheme");
    rest = rest.substr(scheme + 3);
  }
  // strip query and fragment
  if (auto q = rest.find_first_of("?#"); q != std::string_view::npos) rest = rest.substr(0, q);
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (start <= rest.size()) {
    std::size_t slash = rest.find('/', start);
    if (slash == std::string_view::npos) {
      parts.push_back(rest.substr(start));
      break;
    }
    parts.push_back(rest.substr(start, slash - start));
    start = slash + 1;
  }
  while (!parts.empty() && parts.back().empty()) parts.pop_back();
  // host / owner / repo / "commit" / sha
  if (parts.size() != 5) return fail("not a commit path");
  if (parts[0].find('.') == std::string_view::npos) return fail("missing host");
  if (parts[1].empty() || parts[2].empty()) return fail("missing owner or repo");
  if (parts[3] != "commit") return fail("not a commit path");
  std::string sha(parts[4]);
  for (const char* suffix : {".patch", ".diff"}) {
    if (sha.ends_with(suffix)) sha = sha.substr(0, sha.size() - std::string(suffix).size());
  }
  if (sha.size() < 7 || !is_hex(sha)) return fail("bad commit sha");
  RepoRef ref;
  ref.owner = std::string(parts[1]);
  ref.repo = std::string(parts[2]);
  ref.commit_sha = to_lower_ascii(sha);
  return ref;
}

// ---------------- DirectoryFetcher ----------------

DirectoryFetcher::DirectoryFetcher(std::string root) : root_(std::move(root)) {}

std::string DirectoryFetcher::repo_dir(const RepoRef& ref) const {
  return root_ + "/" + ref.owner + "__" + ref.repo;
}

Result<std::map<std::string, std::vector<std::string>>> DirectoryFetcher::load_parents(
    const RepoRef& ref) {
  std::string dir = repo_dir(ref);
  if (!path_exists(dir)) {
    return Error{Errc::TransportFailure,
                 "no captured tree for " + ref.owner + "/" + ref.repo};
  }
  std::map<std::string, std::vector<std::string>> out;
  auto text = read_file(dir + "/parents.map");
  if (!text.ok()) return out;  // tree exists but has no mapping: empty map
  for (const auto& line : split_lines(text.value())) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (pos < t.size()) {
      std::size_t space = t.find(' ', pos);
      if (space == std::string::npos) {
        fields.push_back(t.substr(pos));
        break;
      }
      if (space > pos) fields.push_back(t.substr(pos, space - pos));
      pos = space + 1;
    }
    if (fields.empty()) continue;
    auto& parents = out[to_lower_ascii(fields[0])];
    for (std::size_t i = 1; i < fields.size(); ++i) {
      parents.push_back(to_lower_ascii(fields[i]));
    }
  }
  return out;
}

Result<std::vector<std::string>> DirectoryFetcher::parents(const RepoRef& ref) {
  auto map = load_parents(ref);
  if (!map.ok()) return map.error();
  auto it = map.value().find(to_lower_ascii(ref.commit_sha));
  if (it == map.value().end()) {
    return Error{Errc::CommitNotFound,
                 ref.owner + "/" + ref.repo + "@" + ref.commit_sha + " not in parents.map"};
  }
  return it->second;
}

Result<std::vector<std::string>> DirectoryFetcher::changed_files(const RepoRef& ref) {
  auto par = parents(ref);
  if (!par.ok()) return par.error();
  if (par.value().empty()) {
    return Error{Errc::ParentMissing, ref.commit_sha + " has no parent (root commit)"};
  }
  std::string commit_dir = repo_dir(ref) + "/" + to_lower_ascii(ref.commit_sha);
  std::string parent_dir = repo_dir(ref) + "/" + par.value()[0];
  if (!path_exists(commit_dir)) {
    return Error{Errc::CommitNotFound, "no snapshot for " + ref.commit_sha};
  }
  if (!path_exists(parent_dir)) {
    return Error{Errc::CommitNotFound, "no snapshot for parent " + par.value()[0]};
  }
  std::set<std::string> all;
  for (auto& p : list_files_recursive(commit_dir)) all.insert(p);
  for (auto& p : list_files_recursive(parent_dir)) all.insert(p);
  std::vector<std::string> changed;
  for (const auto& p : all) {
    auto before = read_file(parent_dir + "/" + p);
    auto after = read_file(commit_dir + "/" + p);
    bool before_ok = before.ok();
    bool after_ok = after.ok();
    if (before_ok != after_ok || (before_ok && before.value() != after.value())) {
      changed.push_back(p);
    }
  }
  return changed;
}

Result<std::optional<std::string>> DirectoryFetcher::file_at(const RepoRef& ref,
                                                             const std::string& sha,
                                                             const std::string& path) {
  std::string dir = repo_dir(ref);
  if (!path_exists(dir)) {
    return Error{Errc::TransportFailure, "no captured tree for " + ref.owner + "/" + ref.repo};
  }
  std::string full = dir + "/" + to_lower_ascii(sha) + "/" + path;
  if (!path_exists(full)) return std::optional<std::string>{};
  auto text = read_file(full);
  if (!text.ok()) return text.error();
  return std::optional<std::string>{std::move(text).take()};
}

// ---------------- RecordingFetcher ----------------

RecordingFetcher::RecordingFetcher(RepoFetcher& inner, std::string root)
    : inner_(inner), root_(std::move(root)) {}

Result<std::vector<std::string>> RecordingFetcher::parents(const RepoRef& ref) {
  auto result = inner_.parents(ref);
  if (result.ok()) {
    std::string repo_dir = root_ + "/" + ref.owner + "__" + ref.repo;
    std::string line = to_lower_ascii(ref.commit_sha);
    for (const auto& p : result.value()) line += " " + p;
    line += "\n";
    std::string map_path = repo_dir + "/parents.map";
    std::string existing;
    if (auto prev = read_file(map_path); prev.ok()) existing = prev.value();
    if (existing.find(line) == std::string::npos) {
      write_file(map_path, existing + line);
    }
  }
  return result;
}

Result<std::vector<std::string>> RecordingFetcher::changed_files(const RepoRef& ref) {
  return inner_.changed_files(ref);
}

Result<std::optional<std::string>> RecordingFetcher::file_at(const RepoRef& ref,
                                                             const std::string& sha,
                                                             const std::string& path) {
  auto result = inner_.file_at(ref, sha, path);
  if (result.ok() && result.value().has_value()) {
    std::string full = root_ + "/" + ref.owner + "__" + ref.repo + "/" + to_lower_ascii(sha) +
                       "/" + path;
    write_file(full, *result.value());
  }
  return result;
}

// ---------------- patch pairs ----------------

Result<PatchPair> fetch_patch_pair(const RepoRef& ref, RepoFetcher& fetcher) {
  PatchPair pair;
  pair.ref = ref;
  auto parents = fetcher.parents(ref);
  if (!parents.ok()) return parents.error();
  if (parents.value().empty()) {
    return Error{Errc::ParentMissing, ref.commit_sha + " has no parent commit"};
  }
  if (parents.value().size() > 1) {
    pair.merge_commit = true;
    pair.diagnostics.push_back("merge commit: using first parent " + parents.value()[0]);
  }
  pair.parent_sha = parents.value()[0];
  auto files = fetcher.changed_files(ref);
  if (!files.ok()) return files.error();
  for (const auto& path : files.value()) {
    auto before = fetcher.file_at(ref, pair.parent_sha, path);
    if (!before.ok()) return before.error();
    auto after = fetcher.file_at(ref, ref.commit_sha, path);
    if (!after.ok()) return after.error();
    if (before.value().has_value()) {
      pair.vulnerable_files[path] = *before.value();
    } else {
      pair.added_by_patch.insert(path);
      pair.vulnerable_files[path] = "";
      pair.diagnostics.push_back(path + " added by patch; empty pre-patch version");
    }
    if (after.value().has_value()) {
      pair.fixed_files[path] = *after.value();
    } else {
      pair.removed_by_patch.insert(path);
      pair.fixed_files[path] = "";
      pair.diagnostics.push_back(path + " removed by patch; empty post-patch version");
    }
  }
  return pair;
}

Result<IngestOutcome> read_records_file(const std::string& path) {
  auto text = read_file(path);
  if (!text.ok()) return text.error();
  IngestOutcome out;
  std::size_t index = 0;
  for (const auto& line : split_lines(text.value())) {
    std::string t = trim(line);
    ++index;
    if (t.empty()) continue;
    auto parsed = parse_record(t);
    if (!parsed.ok()) {
      out.rejected.push_back({"", index, parsed.error()});
      continue;
    }
    auto validated = validate_advisory(std::move(parsed).take());
    if (!validated.ok()) {
      auto cve = parse_record(t);
      out.rejected.push_back(
          {cve.ok() ? cve.value().cve_id : "", index, validated.error()});
      continue;
    }
    std::vector<RepoRef> refs;
    for (const auto& link : validated.value().code_links) {
      if (auto ref = parse_commit_url(link); ref.ok()) refs.push_back(ref.value());
    }
    out.accepted.push_back(std::move(validated).take());
    out.parsed_refs.push_back(std::move(refs));
  }
  return out;
}

}  // namespace jsvb::ingest
