#include "jsvb/harness.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>

using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

namespace jsvb::harness {

const char* payload_mode_name(PayloadMode mode) {
  return mode == PayloadMode::PROJECT ? "project" : "snippet";
}

Result<PayloadMode> parse_payload_mode(std::string_view name) {
  std::string u = to_lower_ascii(name);
  if (u == "project") return PayloadMode::PROJECT;
  if (u == "snippet") return PayloadMode::SNIPPET;
  return Error{Errc::ConfigError, "unknown payload mode: " + std::string(name)};
}

const char* case_version_name(CaseVersion version) {
  return version == CaseVersion::VULNERABLE ? "vulnerable" : "fixed";
}

Result<CaseVersion> parse_case_version(std::string_view name) {
  std::string u = to_lower_ascii(name);
  if (u == "vulnerable") return CaseVersion::VULNERABLE;
  if (u == "fixed") return CaseVersion::FIXED;
  return Error{Errc::ConfigError, "unknown case version: " + std::string(name)};
}

const char* finding_severity_name(FindingSeverity severity) {
  switch (severity) {
    case FindingSeverity::HIGH:   return "HIGH";
    case FindingSeverity::MEDIUM: return "MEDIUM";
    case FindingSeverity::LOW:    return "LOW";
  }
  return "MEDIUM";
}

Result<FindingSeverity> parse_finding_severity(std::string_view name) {
  std::string u = to_lower_ascii(name);
  if (u == "high") return FindingSeverity::HIGH;
  if (u == "medium") return FindingSeverity::MEDIUM;
  if (u == "low") return FindingSeverity::LOW;
  return Error{Errc::ParseError, "unknown severity: " + std::string(name)};
}

int64_t estimate_tokens(std::string_view text) {
  return (static_cast<int64_t>(text.size()) + 3) / 4;
}

std::string build_code_section(const CasePayload& payload, PayloadMode mode) {
  std::string out;
  if (mode == PayloadMode::PROJECT) {
    for (const auto& [path, text] : payload.files) {
      out += "=== FILE: " + path + " ===\n";
      out += text;
      if (!text.empty() && !text.ends_with("\n")) out += "\n";
    }
    return out;
  }
  for (const auto& [path, text] : payload.files) {
    auto lines = split_lines_keepends(text);
    std::string body;
    for (const auto& [span_path, first, last] : payload.snippet_spans) {
      if (span_path != path) continue;
      body += "--- lines " + std::to_string(first) + "-" + std::to_string(last) + " ---\n";
      for (int line = first; line <= last && line <= static_cast<int>(lines.size()); ++line) {
        body += lines[line - 1];
      }
      if (!body.ends_with("\n")) body += "\n";
    }
    if (body.empty()) continue;
    out += "=== FILE: " + path + " ===\n";
    out += body;
  }
  return out;
}

Result<std::string> build_prompt(const CasePayload& payload, PayloadMode mode,
                                 const PromptConfig& config) {
  std::string prompt = config.system_prompt;
  prompt += "\n\n=== PROJECT: " + payload.project_name + " ===\n";
  prompt += build_code_section(payload, mode);
  int64_t tokens = estimate_tokens(prompt);
  if (tokens > config.input_token_budget) {
    return Error{Errc::PayloadTooLarge,
                 payload.case_id + ": prompt is ~" + std::to_string(tokens) +
                     " tokens, budget " + std::to_string(config.input_token_budget)};
  }
  return prompt;
}

std::optional<std::string> normalize_cwe_id(std::string_view raw) {
  std::string t = trim(raw);
  std::string lower = to_lower_ascii(t);
  std::size_t pos = 0;
  if (lower.starts_with("cwe")) pos = 3;
  while (pos < t.size() && (t[pos] == '-' || t[pos] == ' ' || t[pos] == ':')) ++pos;
  std::string digits = t.substr(pos);
  if (digits.empty() || digits.size() > 9) return std::nullopt;
  for (char c : digits) {
    if (c < '0' || c > '9') return std::nullopt;
  }
  long value = std::stol(digits);
  if (value <= 0) return std::nullopt;
  return "CWE-" + std::to_string(value);
}

namespace {

// First balanced JSON array in the text, respecting string escapes.
std::optional<json> first_json_array(std::string_view text) {
  for (std::size_t start = 0; start < text.size(); ++start) {
    if (text[start] != '[') continue;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') { in_string = true; continue; }
      if (c == '[' || c == '{') ++depth;
      if (c == ']' || c == '}') {
        --depth;
        if (depth == 0) {
          json parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
          if (!parsed.is_discarded() && parsed.is_array()) return parsed;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

Result<Finding> validate_finding(const json& element) {
  auto fail = [](const std::string& why) { return Error{Errc::ParseError, why}; };
  if (!element.is_object()) return fail("not an object");
  Finding finding;
  for (const char* field : {"file", "description", "exploit_scenario", "recommendation"}) {
    if (!element.contains(field) || !element[field].is_string()) {
      return fail(std::string("missing string field '") + field + "'");
    }
  }
  finding.file = element["file"].get<std::string>();
  if (finding.file.empty()) return fail("empty file path");
  finding.description = element["description"].get<std::string>();
  finding.exploit_scenario = element["exploit_scenario"].get<std::string>();
  finding.recommendation = element["recommendation"].get<std::string>();

  if (!element.contains("line") || !element["line"].is_number()) {
    return fail("missing numeric field 'line'");
  }
  double line = element["line"].get<double>();
  if (line != static_cast<int>(line) || line < 1) return fail("line must be a positive integer");
  finding.line = static_cast<int>(line);

  if (!element.contains("severity") || !element["severity"].is_string()) {
    return fail("missing string field 'severity'");
  }
  auto severity = parse_finding_severity(element["severity"].get<std::string>());
  if (!severity.ok()) return fail(severity.error().message);
  finding.severity = severity.value();

  if (!element.contains("category") || !element["category"].is_string()) {
    return fail("missing string field 'category'");
  }
  auto category = normalize_cwe_id(element["category"].get<std::string>());
  if (!category) {
    return fail("category '" + element["category"].get<std::string>() + "' is not a CWE id");
  }
  finding.category = *category;

  if (element.contains("confidence")) {
    if (!element["confidence"].is_number()) return fail("confidence must be a number");
    finding.confidence = element["confidence"].get<double>();
    if (finding.confidence < 0.0 || finding.confidence > 1.0) {
      return fail("confidence out of [0, 1]");
    }
  }
  return finding;
}

}  // namespace

ParseOutcome parse_findings(std::string_view raw_response) {
  ParseOutcome out;
  auto array = first_json_array(raw_response);
  if (!array) {
    out.diagnostics.push_back("no JSON array found in response");
    return out;
  }
  std::size_t index = 0;
  for (const auto& element : *array) {
    ++index;
    auto finding = validate_finding(element);
    if (finding.ok()) {
      out.findings.push_back(std::move(finding).take());
    } else {
      out.diagnostics.push_back("finding " + std::to_string(index) + " quarantined: " +
                                finding.error().message);
    }
  }
  return out;
}

uint64_t request_hash(std::string_view model_id, std::string_view prompt) {
  std::string key;
  key.reserve(model_id.size() + prompt.size() + 1);
  key += model_id;
  key += '\n';
  key += prompt;
  return fnv1a64(key);
}

std::string transcript_line(std::string_view model_id, std::string_view prompt,
                            std::string_view response, std::optional<TokenUsage> usage,
                            std::string_view error) {
  ordered_json line;
  line["request_hash"] = to_hex(request_hash(model_id, prompt));
  line["model_id"] = std::string(model_id);
  line["response"] = std::string(response);
  if (usage) {
    line["usage"] = ordered_json{{"input", usage->input}, {"output", usage->output}};
  } else {
    line["usage"] = nullptr;
  }
  if (!error.empty()) line["error"] = std::string(error);
  return line.dump() + "\n";
}

Result<ReplayClient> ReplayClient::load(const std::string& path) {
  auto text = read_file(path);
  if (!text.ok()) return text.error();
  ReplayClient client;
  int line_no = 0;
  for (const auto& line : split_lines(text.value())) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) continue;
    json doc = json::parse(t, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("request_hash") ||
        !doc["request_hash"].is_string()) {
      return Error{Errc::ParseError,
                   path + ":" + std::to_string(line_no) + ": bad transcript line"};
    }
    Entry entry;
    if (doc.contains("response") && doc["response"].is_string()) {
      entry.response = doc["response"].get<std::string>();
    }
    if (doc.contains("usage") && doc["usage"].is_object()) {
      TokenUsage usage;
      usage.input = doc["usage"].value("input", static_cast<int64_t>(0));
      usage.output = doc["usage"].value("output", static_cast<int64_t>(0));
      entry.usage = usage;
    }
    if (doc.contains("error") && doc["error"].is_string()) {
      entry.error = doc["error"].get<std::string>();
    }
    client.entries_[doc["request_hash"].get<std::string>()] = std::move(entry);
  }
  return client;
}

Result<ClientResponse> ReplayClient::send(const std::string& prompt, const std::string& model_id,
                                          double, int) {
  std::string key = to_hex(request_hash(model_id, prompt));
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    return Error{Errc::TransportFailure, "no transcript entry for request " + key};
  }
  if (it->second.error == "timeout") {
    return Error{Errc::Timeout, "recorded timeout for request " + key};
  }
  if (!it->second.error.empty()) {
    return Error{Errc::TransportFailure, it->second.error};
  }
  return ClientResponse{it->second.response, it->second.usage};
}

namespace {
std::mutex transcript_mutex;
}

RecordingClient::RecordingClient(ModelClient& inner, std::string transcript_path)
    : inner_(inner), path_(std::move(transcript_path)) {}

Result<ClientResponse> RecordingClient::send(const std::string& prompt,
                                             const std::string& model_id, double temperature,
                                             int timeout_s) {
  auto result = inner_.send(prompt, model_id, temperature, timeout_s);
  std::string line;
  if (result.ok()) {
    line = transcript_line(model_id, prompt, result.value().text, result.value().usage);
  } else {
    std::string error =
        result.error().code == Errc::Timeout ? "timeout" : result.error().message;
    line = transcript_line(model_id, prompt, "", std::nullopt, error);
  }
  std::lock_guard<std::mutex> lock(transcript_mutex);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << line;
  return result;
}

int RecordingClient::max_concurrency() const { return inner_.max_concurrency(); }

HttpJsonClient::HttpJsonClient(std::string host, int port, std::string route)
    : host_(std::move(host)), port_(port), route_(std::move(route)) {}

Result<ClientResponse> HttpJsonClient::send(const std::string& prompt,
                                            const std::string& model_id, double temperature,
                                            int timeout_s) {
  httplib::Client client(host_, port_);
  client.set_connection_timeout(timeout_s, 0);
  client.set_read_timeout(timeout_s, 0);
  client.set_write_timeout(timeout_s, 0);
  ordered_json body{{"model", model_id}, {"prompt", prompt}, {"temperature", temperature}};
  auto res = client.Post(route_, body.dump(), "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write) {
      return Error{Errc::Timeout, "request timed out after " + std::to_string(timeout_s) + "s"};
    }
    return Error{Errc::TransportFailure, httplib::to_string(err)};
  }
  if (res->status != 200) {
    return Error{Errc::TransportFailure, "HTTP " + std::to_string(res->status)};
  }
  json doc = json::parse(res->body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("text") ||
      !doc["text"].is_string()) {
    return Error{Errc::TransportFailure, "malformed endpoint response"};
  }
  ClientResponse response;
  response.text = doc["text"].get<std::string>();
  if (doc.contains("usage") && doc["usage"].is_object()) {
    TokenUsage usage;
    usage.input = doc["usage"].value("input", static_cast<int64_t>(0));
    usage.output = doc["usage"].value("output", static_cast<int64_t>(0));
    response.usage = usage;
  }
  return response;
}

namespace {

std::string top_level_dir(const std::string& path) {
  auto slash = path.find('/');
  return slash == std::string::npos ? std::string() : path.substr(0, slash);
}

// Splits an oversized project into payloads that fit the budget: whole
// top-level directories first, then single files when a directory alone
// is too big. Returns an error naming the first file that cannot fit.
Result<std::vector<CasePayload>> plan_shards(const CasePayload& payload,
                                             const PromptConfig& config) {
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& [path, text] : payload.files) {
    groups[top_level_dir(path)].push_back(path);
  }

  auto fits = [&](const CasePayload& candidate) {
    return build_prompt(candidate, PayloadMode::PROJECT, config).ok();
  };
  auto shard_shell = [&] {
    CasePayload shard;
    shard.case_id = payload.case_id;
    shard.project_name = payload.project_name;
    return shard;
  };

  std::vector<CasePayload> shards;
  CasePayload current = shard_shell();
  auto flush = [&] {
    if (!current.files.empty()) shards.push_back(std::move(current));
    current = shard_shell();
  };
  auto add_file = [&](const std::string& path) -> Status {
    CasePayload tentative = current;
    tentative.files[path] = payload.files.at(path);
    if (fits(tentative)) {
      current = std::move(tentative);
      return Status();
    }
    flush();
    current.files[path] = payload.files.at(path);
    if (!fits(current)) {
      return Error{Errc::PayloadTooLarge, path + " alone exceeds the input budget"};
    }
    return Status();
  };

  for (const auto& [dir, paths] : groups) {
    CasePayload tentative = current;
    for (const auto& path : paths) tentative.files[path] = payload.files.at(path);
    if (fits(tentative)) {
      current = std::move(tentative);
      continue;
    }
    for (const auto& path : paths) {
      auto status = add_file(path);
      if (!status.ok()) return status.error();
    }
  }
  flush();
  return shards;
}

}  // namespace

DetectionResult run_detection(const CasePayload& payload, CaseVersion version,
                              ModelClient& client, const DetectConfig& config) {
  auto start = std::chrono::steady_clock::now();
  DetectionResult result;
  result.case_id = payload.case_id;
  result.version = version;
  result.model_id = config.model_id;

  std::vector<CasePayload> shards;
  auto whole = build_prompt(payload, config.mode, config.prompt);
  if (whole.ok()) {
    shards.push_back(payload);
  } else if (config.mode == PayloadMode::PROJECT &&
             whole.error().code == Errc::PayloadTooLarge) {
    auto plan = plan_shards(payload, config.prompt);
    if (!plan.ok()) {
      result.errored = true;
      result.diagnostics.push_back(plan.error().to_string());
      return result;
    }
    shards = std::move(plan).take();
    result.diagnostics.push_back("payload split into " + std::to_string(shards.size()) +
                                 " shards");
  } else {
    result.errored = true;
    result.diagnostics.push_back(whole.error().to_string());
    return result;
  }

  for (const auto& shard : shards) {
    auto prompt = build_prompt(shard, config.mode, config.prompt);
    if (!prompt.ok()) {
      result.errored = true;
      result.diagnostics.push_back(prompt.error().to_string());
      break;
    }
    auto response =
        client.send(prompt.value(), config.model_id, config.temperature, config.timeout_s);
    if (!response.ok()) {
      result.errored = true;
      result.diagnostics.push_back(response.error().to_string());
      break;
    }
    if (!result.raw_response.empty()) result.raw_response += "\n";
    result.raw_response += response.value().text;
    if (response.value().usage) {
      result.token_usage.input += response.value().usage->input;
      result.token_usage.output += response.value().usage->output;
    } else {
      result.token_usage.input += estimate_tokens(prompt.value());
      result.token_usage.output += estimate_tokens(response.value().text);
    }
    auto parsed = parse_findings(response.value().text);
    for (auto& finding : parsed.findings) result.findings.push_back(std::move(finding));
    for (auto& diagnostic : parsed.diagnostics) {
      result.diagnostics.push_back(std::move(diagnostic));
    }
  }

  auto elapsed = std::chrono::steady_clock::now() - start;
  result.wall_time_s = std::chrono::duration<double>(elapsed).count();
  return result;
}

}  // namespace jsvb::harness
