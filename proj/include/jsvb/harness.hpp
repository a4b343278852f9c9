#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jsvb/common.hpp"

namespace jsvb::harness {

enum class PayloadMode { PROJECT, SNIPPET };
const char* payload_mode_name(PayloadMode mode);
Result<PayloadMode> parse_payload_mode(std::string_view name);

enum class CaseVersion { VULNERABLE, FIXED };
const char* case_version_name(CaseVersion version);
Result<CaseVersion> parse_case_version(std::string_view name);

enum class FindingSeverity { HIGH, MEDIUM, LOW };
const char* finding_severity_name(FindingSeverity severity);
Result<FindingSeverity> parse_finding_severity(std::string_view name);

struct Finding {
  std::string file;
  int line = 0;
  FindingSeverity severity = FindingSeverity::MEDIUM;
  std::string category;  // normalized "CWE-<n>"
  std::string description;
  std::string exploit_scenario;
  std::string recommendation;
  double confidence = 0.8;  // default when the model omits it
};

struct TokenUsage {
  int64_t input = 0;
  int64_t output = 0;
};

// ~4 characters per token, computed on bytes, rounded up.
int64_t estimate_tokens(std::string_view text);

struct CasePayload {
  std::string case_id;
  std::string project_name;
  // path -> text for one version of the case, analyzable files only.
  std::map<std::string, std::string> files;
  // SNIPPET mode: (path, first line, last line) of each ground-truth
  // function within `files`.
  std::vector<std::tuple<std::string, int, int>> snippet_spans;
};

struct PromptConfig {
  std::string system_prompt;
  int64_t input_token_budget = 100000;
};

// System prompt, project header, then the code payload: every analyzable
// file under a `=== FILE: path ===` banner in PROJECT mode, only the
// ground-truth function lines in SNIPPET mode. Oversized payloads fail
// with PayloadTooLarge rather than truncating silently.
Result<std::string> build_prompt(const CasePayload& payload, PayloadMode mode,
                                 const PromptConfig& config);

// The code section alone (no system prompt); exposed for tests and for
// shard planning.
std::string build_code_section(const CasePayload& payload, PayloadMode mode);

struct ParseOutcome {
  std::vector<Finding> findings;
  std::vector<std::string> diagnostics;  // quarantined elements, parse failures
};

// Pulls the first well-formed JSON array out of the raw model response
// (fenced or inline), validates each element against the finding schema,
// quarantines what does not conform. A reply with no array at all is a
// diagnostic, not an exception.
ParseOutcome parse_findings(std::string_view raw_response);

// "CWE-79" from "cwe-79", "CWE 79", "79". Empty result means invalid.
std::optional<std::string> normalize_cwe_id(std::string_view raw);

struct ClientResponse {
  std::string text;
  std::optional<TokenUsage> usage;
};

class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual Result<ClientResponse> send(const std::string& prompt, const std::string& model_id,
                                      double temperature, int timeout_s) = 0;
  // 0 = caller's choice.
  virtual int max_concurrency() const { return 0; }
};

// Key for transcript lookup: fnv1a64 over model id + '\n' + prompt.
uint64_t request_hash(std::string_view model_id, std::string_view prompt);

// Replays recorded transcripts (JSONL: request_hash, response, usage,
// optional error). Unknown hashes are transport failures, which keeps
// scoring runs strictly offline.
class ReplayClient : public ModelClient {
 public:
  static Result<ReplayClient> load(const std::string& path);
  Result<ClientResponse> send(const std::string& prompt, const std::string& model_id,
                              double temperature, int timeout_s) override;

 private:
  struct Entry {
    std::string response;
    std::optional<TokenUsage> usage;
    std::string error;  // "timeout" or transport note; empty = success
  };
  std::map<std::string, Entry> entries_;
};

// Wraps a live client and appends every exchange to a transcript file.
class RecordingClient : public ModelClient {
 public:
  RecordingClient(ModelClient& inner, std::string transcript_path);
  Result<ClientResponse> send(const std::string& prompt, const std::string& model_id,
                              double temperature, int timeout_s) override;
  int max_concurrency() const override;

 private:
  ModelClient& inner_;
  std::string path_;
};

// Serializes one transcript line; shared by RecordingClient and tests
// that fabricate transcripts.
std::string transcript_line(std::string_view model_id, std::string_view prompt,
                            std::string_view response, std::optional<TokenUsage> usage,
                            std::string_view error = {});

// POSTs {model, prompt, temperature} as JSON and expects {text, usage?}.
class HttpJsonClient : public ModelClient {
 public:
  HttpJsonClient(std::string host, int port, std::string route);
  Result<ClientResponse> send(const std::string& prompt, const std::string& model_id,
                              double temperature, int timeout_s) override;

 private:
  std::string host_;
  int port_;
  std::string route_;
};

struct DetectConfig {
  std::string model_id;
  double temperature = 0.7;
  int timeout_s = 60;
  PayloadMode mode = PayloadMode::PROJECT;
  PromptConfig prompt;
};

struct DetectionResult {
  std::string case_id;
  CaseVersion version = CaseVersion::VULNERABLE;
  std::string model_id;
  std::vector<Finding> findings;
  std::string raw_response;  // concatenated when sharded
  TokenUsage token_usage;
  double wall_time_s = 0.0;
  bool errored = false;
  std::vector<std::string> diagnostics;
};

// One request per case version; no retries. Oversized projects are split
// into directory shards whose findings merge; a single file beyond the
// budget marks the result errored.
DetectionResult run_detection(const CasePayload& payload, CaseVersion version,
                              ModelClient& client, const DetectConfig& config);

}  // namespace jsvb::harness
