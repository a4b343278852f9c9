#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "jsvb/common.hpp"

namespace jsvb::ingest {

enum class Severity { CRITICAL, HIGH, MEDIUM, LOW };
const char* severity_name(Severity severity);
Result<Severity> parse_severity(std::string_view name);

struct AdvisoryRecord {
  std::string cve_id;
  std::string cve_description;
  Severity severity = Severity::MEDIUM;
  std::vector<std::string> cwe_ids;       // "CWE-1321"
  std::string published_date;             // ISO 8601 date
  std::vector<std::string> code_links;    // candidate patch-commit URLs
  std::vector<std::string> sources;       // advisory databases, unmerged
};

// One advisory as a JSON object on a single line. Accepts `cwe_id` as a
// string or `cwe_ids` as a list; `code_links` and `sources` as a string
// or a list of strings.
Result<AdvisoryRecord> parse_record(std::string_view json_line);

// cve_id non-empty; at least one code link parseable as a commit URL;
// every CWE id matches CWE-<positive int>. Returns the record untouched.
Result<AdvisoryRecord> validate_advisory(AdvisoryRecord record);

struct RepoRef {
  std::string owner;
  std::string repo;
  std::string commit_sha;

  bool operator==(const RepoRef&) const = default;
};

// host/<owner>/<repo>/commit/<sha> with optional scheme, .patch/.diff
// suffix, query and fragment. sha must be >= 7 hex chars.
Result<RepoRef> parse_commit_url(std::string_view url);

// Transport abstraction over commit metadata and file contents.
class RepoFetcher {
 public:
  virtual ~RepoFetcher() = default;
  virtual Result<std::vector<std::string>> parents(const RepoRef& ref) = 0;
  virtual Result<std::vector<std::string>> changed_files(const RepoRef& ref) = 0;
  // nullopt: the file does not exist at that commit.
  virtual Result<std::optional<std::string>> file_at(const RepoRef& ref,
                                                     const std::string& sha,
                                                     const std::string& path) = 0;
};

// Reads a pre-captured tree:
//   <root>/<owner>__<repo>/<sha>/<path...>
//   <root>/<owner>__<repo>/parents.map   lines: "<sha> <parent> [parent...]"
// A missing repo directory is a transport failure; a missing commit
// directory for a mapped sha is CommitNotFound.
class DirectoryFetcher : public RepoFetcher {
 public:
  explicit DirectoryFetcher(std::string root);
  Result<std::vector<std::string>> parents(const RepoRef& ref) override;
  Result<std::vector<std::string>> changed_files(const RepoRef& ref) override;
  Result<std::optional<std::string>> file_at(const RepoRef& ref, const std::string& sha,
                                             const std::string& path) override;

 private:
  Result<std::map<std::string, std::vector<std::string>>> load_parents(const RepoRef& ref);
  std::string repo_dir(const RepoRef& ref) const;
  std::string root_;
};

// Wraps another fetcher and mirrors everything it sees into the
// DirectoryFetcher layout, so live runs produce replayable trees.
class RecordingFetcher : public RepoFetcher {
 public:
  RecordingFetcher(RepoFetcher& inner, std::string root);
  Result<std::vector<std::string>> parents(const RepoRef& ref) override;
  Result<std::vector<std::string>> changed_files(const RepoRef& ref) override;
  Result<std::optional<std::string>> file_at(const RepoRef& ref, const std::string& sha,
                                             const std::string& path) override;

 private:
  RepoFetcher& inner_;
  std::string root_;
};

struct PatchPair {
  RepoRef ref;
  std::string parent_sha;
  std::map<std::string, std::string> vulnerable_files;  // path -> pre-patch text
  std::map<std::string, std::string> fixed_files;       // path -> post-patch text
  std::set<std::string> added_by_patch;                 // no pre-patch version
  std::set<std::string> removed_by_patch;               // no post-patch version
  bool merge_commit = false;                            // >1 parent; first was used
  std::vector<std::string> diagnostics;
};

// Materializes both sides of the patch for every changed file. Non-JS
// files are retained (they feed project typing) but only .js/.mjs/.cjs
// are analyzable.
Result<PatchPair> fetch_patch_pair(const RepoRef& ref, RepoFetcher& fetcher);

struct RejectedRecord {
  std::string cve_id;  // may be empty when the record had none
  std::size_t record_index = 0;
  Error reason{Errc::MissingMetadata, ""};
};

struct IngestOutcome {
  std::vector<AdvisoryRecord> accepted;
  std::vector<std::vector<RepoRef>> parsed_refs;  // per accepted record
  std::vector<RejectedRecord> rejected;
};

// Parses and validates a line-delimited records file. Acceptance here is
// metadata-only; transport errors surface later when pairs are fetched.
Result<IngestOutcome> read_records_file(const std::string& path);

}  // namespace jsvb::ingest
