#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "jsvb/harness.hpp"

using namespace jsvb;
using namespace jsvb::harness;
using nlohmann::json;

namespace {

std::string data_path(const std::string& name) {
  return std::string(JSVB_DATA_DIR) + "/" + name;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("jsvb_harness_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Canned responses, consumed in order; remembers every prompt it saw.
struct ScriptedClient : ModelClient {
  std::vector<Result<ClientResponse>> turns;
  std::vector<std::string> prompts;
  std::size_t next = 0;

  Result<ClientResponse> send(const std::string& prompt, const std::string&, double,
                              int) override {
    prompts.push_back(prompt);
    if (next >= turns.size()) return Error{Errc::TransportFailure, "script exhausted"};
    return turns[next++];
  }
  int max_concurrency() const override { return 2; }
};

std::string finding_json(const std::string& file, int line, const std::string& category,
                         const std::string& extra = "") {
  return "{\"file\": \"" + file + "\", \"line\": " + std::to_string(line) +
         ", \"severity\": \"HIGH\", \"category\": \"" + category +
         "\", \"description\": \"d\", \"exploit_scenario\": \"e\", "
         "\"recommendation\": \"r\"" +
         extra + "}";
}

CasePayload two_file_payload() {
  CasePayload payload;
  payload.case_id = "CVE-0000-0001__acme__lib";
  payload.project_name = "acme/lib";
  payload.files["src/index.js"] = "function f() {\n  return 1;\n}\n";
  payload.files["package.json"] = "{ \"name\": \"lib\" }";
  return payload;
}

}  // namespace

TEST_CASE("token estimate is bytes rounded up to fours") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("a") == 1);
  CHECK(estimate_tokens("abcd") == 1);
  CHECK(estimate_tokens("abcde") == 2);
  CHECK(estimate_tokens(std::string(400, 'x')) == 100);
}

TEST_CASE("bundled system prompt weighs 291 tokens") {
  auto text = read_file(data_path("system_prompt.txt"));
  REQUIRE(text.ok());
  CHECK(text.value().size() == 1164);
  CHECK(estimate_tokens(text.value()) == 291);
}

TEST_CASE("mode, version and severity names round-trip") {
  CHECK(parse_payload_mode("project").value() == PayloadMode::PROJECT);
  CHECK(parse_payload_mode("SNIPPET").value() == PayloadMode::SNIPPET);
  CHECK_FALSE(parse_payload_mode("whole-repo").ok());
  CHECK(parse_case_version("vulnerable").value() == CaseVersion::VULNERABLE);
  CHECK(parse_case_version("Fixed").value() == CaseVersion::FIXED);
  CHECK_FALSE(parse_case_version("patched").ok());
  for (auto severity : {FindingSeverity::HIGH, FindingSeverity::MEDIUM, FindingSeverity::LOW}) {
    CHECK(parse_finding_severity(finding_severity_name(severity)).value() == severity);
  }
  CHECK(parse_finding_severity("medium").value() == FindingSeverity::MEDIUM);
  CHECK_FALSE(parse_finding_severity("CRITICAL").ok());
}

TEST_CASE("project mode banners every file in path order") {
  auto payload = two_file_payload();
  std::string code = build_code_section(payload, PayloadMode::PROJECT);
  CHECK(code ==
        "=== FILE: package.json ===\n"
        "{ \"name\": \"lib\" }\n"
        "=== FILE: src/index.js ===\n"
        "function f() {\n  return 1;\n}\n");
}

TEST_CASE("snippet mode carries only the ground-truth lines") {
  CasePayload payload;
  payload.case_id = "c";
  payload.project_name = "p";
  payload.files["a.js"] = "line1\nline2\nline3\nline4\nline5\n";
  payload.files["b.js"] = "only1\nonly2\n";
  payload.snippet_spans.push_back({"a.js", 2, 3});
  payload.snippet_spans.push_back({"a.js", 5, 5});
  std::string code = build_code_section(payload, PayloadMode::SNIPPET);
  CHECK(code ==
        "=== FILE: a.js ===\n"
        "--- lines 2-3 ---\n"
        "line2\nline3\n"
        "--- lines 5-5 ---\n"
        "line5\n");
  CHECK(code.find("b.js") == std::string::npos);
  CHECK(code.find("line1") == std::string::npos);
  CHECK(code.find("line4") == std::string::npos);
}

TEST_CASE("prompt stitches system text, project header and code") {
  auto payload = two_file_payload();
  PromptConfig config;
  config.system_prompt = "Find bugs.";
  auto prompt = build_prompt(payload, PayloadMode::PROJECT, config);
  REQUIRE(prompt.ok());
  CHECK(prompt.value() ==
        "Find bugs.\n\n=== PROJECT: acme/lib ===\n" +
            build_code_section(payload, PayloadMode::PROJECT));
}

TEST_CASE("prompt over the token budget fails instead of truncating") {
  auto payload = two_file_payload();
  PromptConfig config;
  config.system_prompt = "Find bugs.";
  auto prompt = build_prompt(payload, PayloadMode::PROJECT, config);
  REQUIRE(prompt.ok());
  int64_t exact = estimate_tokens(prompt.value());

  config.input_token_budget = exact;
  CHECK(build_prompt(payload, PayloadMode::PROJECT, config).ok());

  config.input_token_budget = exact - 1;
  auto rejected = build_prompt(payload, PayloadMode::PROJECT, config);
  REQUIRE_FALSE(rejected.ok());
  CHECK(rejected.error().code == Errc::PayloadTooLarge);
  CHECK(rejected.error().message.find("CVE-0000-0001__acme__lib") != std::string::npos);
}

TEST_CASE("CWE ids normalize across common spellings") {
  CHECK(normalize_cwe_id("CWE-79").value() == "CWE-79");
  CHECK(normalize_cwe_id("cwe-79").value() == "CWE-79");
  CHECK(normalize_cwe_id("CWE 79").value() == "CWE-79");
  CHECK(normalize_cwe_id("CWE:89").value() == "CWE-89");
  CHECK(normalize_cwe_id("79").value() == "CWE-79");
  CHECK(normalize_cwe_id("  cwe-400  ").value() == "CWE-400");
  CHECK(normalize_cwe_id("CWE-079").value() == "CWE-79");
  CHECK_FALSE(normalize_cwe_id("").has_value());
  CHECK_FALSE(normalize_cwe_id("cwe-").has_value());
  CHECK_FALSE(normalize_cwe_id("CWE-7a").has_value());
  CHECK_FALSE(normalize_cwe_id("0").has_value());
  CHECK_FALSE(normalize_cwe_id("XSS").has_value());
  CHECK_FALSE(normalize_cwe_id("1234567890").has_value());
}

TEST_CASE("findings parse from a bare array") {
  std::string raw = "[" + finding_json("a.js", 10, "CWE-79") + "," +
                    finding_json("b.js", 2, "cwe-89", ", \"confidence\": 0.95") + "]";
  auto outcome = parse_findings(raw);
  CHECK(outcome.diagnostics.empty());
  REQUIRE(outcome.findings.size() == 2);
  CHECK(outcome.findings[0].file == "a.js");
  CHECK(outcome.findings[0].line == 10);
  CHECK(outcome.findings[0].severity == FindingSeverity::HIGH);
  CHECK(outcome.findings[0].category == "CWE-79");
  CHECK(outcome.findings[0].confidence == doctest::Approx(0.8));
  CHECK(outcome.findings[1].category == "CWE-89");
  CHECK(outcome.findings[1].confidence == doctest::Approx(0.95));
}

TEST_CASE("findings parse out of fences and prose") {
  std::string fenced = "Here is my analysis.\n```json\n[" + finding_json("a.js", 1, "CWE-79") +
                       "]\n```\nLet me know if you need more.";
  auto outcome = parse_findings(fenced);
  REQUIRE(outcome.findings.size() == 1);
  CHECK(outcome.findings[0].file == "a.js");
}

TEST_CASE("brackets inside strings do not derail the array scan") {
  std::string raw = "[" +
                    finding_json("a.js", 1, "CWE-79",
                                 ", \"note\": \"watch arr[0] and ]{ quoting \\\" here\"") +
                    "]";
  auto outcome = parse_findings(raw);
  REQUIRE(outcome.findings.size() == 1);
}

TEST_CASE("the first well-formed array wins") {
  std::string raw = "[] and later [" + finding_json("a.js", 1, "CWE-79") + "]";
  auto outcome = parse_findings(raw);
  CHECK(outcome.findings.empty());
  CHECK(outcome.diagnostics.empty());
}

TEST_CASE("unbalanced candidates are skipped for later arrays") {
  std::string raw = "broken [ {\"oops\": } then [" + finding_json("a.js", 3, "CWE-79") + "]";
  auto outcome = parse_findings(raw);
  REQUIRE(outcome.findings.size() == 1);
  CHECK(outcome.findings[0].line == 3);
}

TEST_CASE("nonconforming elements are quarantined, not fatal") {
  std::string raw = std::string("[") +
                    "\"not an object\"," +
                    finding_json("", 1, "CWE-79") + "," +
                    finding_json("a.js", 0, "CWE-79") + "," +
                    "{\"file\": \"a.js\", \"line\": 2.5, \"severity\": \"HIGH\", "
                    "\"category\": \"CWE-79\", \"description\": \"d\", "
                    "\"exploit_scenario\": \"e\", \"recommendation\": \"r\"}," +
                    finding_json("a.js", 1, "banana") + "," +
                    finding_json("a.js", 1, "CWE-79", ", \"confidence\": 1.5") + "," +
                    "{\"file\": \"a.js\", \"line\": 1, \"severity\": \"SEVERE\", "
                    "\"category\": \"CWE-79\", \"description\": \"d\", "
                    "\"exploit_scenario\": \"e\", \"recommendation\": \"r\"}," +
                    "{\"file\": \"a.js\", \"line\": 1, \"severity\": \"HIGH\", "
                    "\"category\": \"CWE-79\", \"description\": \"d\"}," +
                    finding_json("good.js", 7, "CWE-89") + "]";
  auto outcome = parse_findings(raw);
  REQUIRE(outcome.findings.size() == 1);
  CHECK(outcome.findings[0].file == "good.js");
  REQUIRE(outcome.diagnostics.size() == 8);
  CHECK(outcome.diagnostics[0].find("finding 1") != std::string::npos);
  CHECK(outcome.diagnostics[0].find("not an object") != std::string::npos);
  CHECK(outcome.diagnostics[1].find("empty file path") != std::string::npos);
  CHECK(outcome.diagnostics[2].find("positive integer") != std::string::npos);
  CHECK(outcome.diagnostics[3].find("positive integer") != std::string::npos);
  CHECK(outcome.diagnostics[4].find("banana") != std::string::npos);
  CHECK(outcome.diagnostics[5].find("confidence") != std::string::npos);
  CHECK(outcome.diagnostics[6].find("severity") != std::string::npos);
  CHECK(outcome.diagnostics[7].find("exploit_scenario") != std::string::npos);
}

TEST_CASE("a reply without any array is a diagnostic") {
  auto outcome = parse_findings("I could not find any issues in this project.");
  CHECK(outcome.findings.empty());
  REQUIRE(outcome.diagnostics.size() == 1);
  CHECK(outcome.diagnostics[0] == "no JSON array found in response");
}

TEST_CASE("request hashes are stable and model-sensitive") {
  CHECK(request_hash("gpt-5", "hello") == UINT64_C(0x536203470464a906));
  CHECK(request_hash("gpt-5", "hello") == request_hash("gpt-5", "hello"));
  CHECK(request_hash("gpt-5", "hello") != request_hash("gpt-5-mini", "hello"));
  CHECK(request_hash("gpt-5", "hello") != request_hash("gpt-5", "hello "));
  // The separator keeps (model, prompt) splits from colliding.
  CHECK(request_hash("ab", "c") != request_hash("a", "b\nc"));
}

TEST_CASE("transcript lines serialize hash, response and usage") {
  TokenUsage usage{120, 34};
  auto line = transcript_line("gpt-5", "hello", "[]", usage);
  CHECK(line.ends_with("\n"));
  json doc = json::parse(line);
  CHECK(doc["request_hash"] == "536203470464a906");
  CHECK(doc["model_id"] == "gpt-5");
  CHECK(doc["response"] == "[]");
  CHECK(doc["usage"]["input"] == 120);
  CHECK(doc["usage"]["output"] == 34);
  CHECK_FALSE(doc.contains("error"));

  auto errored = transcript_line("gpt-5", "hello", "", std::nullopt, "timeout");
  json errdoc = json::parse(errored);
  CHECK(errdoc["usage"].is_null());
  CHECK(errdoc["error"] == "timeout");
}

TEST_CASE("replay client serves recorded exchanges and nothing else") {
  auto dir = scratch_dir("replay");
  auto path = (dir / "transcript.jsonl").string();
  TokenUsage usage{10, 5};
  std::string content = transcript_line("m", "prompt-ok", "[]", usage) +
                        transcript_line("m", "prompt-slow", "", std::nullopt, "timeout") +
                        transcript_line("m", "prompt-bad", "", std::nullopt, "connection reset");
  REQUIRE(write_file(path, content).ok());

  auto loaded = ReplayClient::load(path);
  REQUIRE(loaded.ok());
  auto client = std::move(loaded).take();

  auto ok = client.send("prompt-ok", "m", 0.7, 60);
  REQUIRE(ok.ok());
  CHECK(ok.value().text == "[]");
  REQUIRE(ok.value().usage.has_value());
  CHECK(ok.value().usage->input == 10);

  auto slow = client.send("prompt-slow", "m", 0.7, 60);
  REQUIRE_FALSE(slow.ok());
  CHECK(slow.error().code == Errc::Timeout);

  auto bad = client.send("prompt-bad", "m", 0.7, 60);
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.error().code == Errc::TransportFailure);
  CHECK(bad.error().message == "connection reset");

  auto unknown = client.send("prompt-ok", "other-model", 0.7, 60);
  REQUIRE_FALSE(unknown.ok());
  CHECK(unknown.error().code == Errc::TransportFailure);
  CHECK(unknown.error().message.find("no transcript entry") != std::string::npos);

  std::filesystem::remove_all(dir);
}

TEST_CASE("replay client rejects mangled transcripts") {
  auto dir = scratch_dir("replay_bad");
  auto path = (dir / "transcript.jsonl").string();
  REQUIRE(write_file(path, "{\"response\": \"no hash\"}\n").ok());
  auto loaded = ReplayClient::load(path);
  REQUIRE_FALSE(loaded.ok());
  CHECK(loaded.error().code == Errc::ParseError);
  CHECK(loaded.error().message.find(":1:") != std::string::npos);
  CHECK_FALSE(ReplayClient::load((dir / "missing.jsonl").string()).ok());
  std::filesystem::remove_all(dir);
}

TEST_CASE("recording then replaying reproduces the run") {
  auto dir = scratch_dir("record");
  auto path = (dir / "transcript.jsonl").string();

  ScriptedClient inner;
  inner.turns.push_back(ClientResponse{"[]", TokenUsage{7, 2}});
  inner.turns.push_back(Error{Errc::Timeout, "deadline"});

  RecordingClient recorder(inner, path);
  CHECK(recorder.max_concurrency() == 2);
  auto first = recorder.send("p1", "m", 0.7, 60);
  REQUIRE(first.ok());
  auto second = recorder.send("p2", "m", 0.7, 60);
  REQUIRE_FALSE(second.ok());

  auto replay = ReplayClient::load(path);
  REQUIRE(replay.ok());
  auto client = std::move(replay).take();
  auto again = client.send("p1", "m", 0.0, 1);
  REQUIRE(again.ok());
  CHECK(again.value().text == "[]");
  REQUIRE(again.value().usage.has_value());
  CHECK(again.value().usage->output == 2);
  auto timeout = client.send("p2", "m", 0.0, 1);
  REQUIRE_FALSE(timeout.ok());
  CHECK(timeout.error().code == Errc::Timeout);

  std::filesystem::remove_all(dir);
}

TEST_CASE("detection runs one request and keeps the clock") {
  auto payload = two_file_payload();
  ScriptedClient client;
  client.turns.push_back(
      ClientResponse{"[" + finding_json("src/index.js", 2, "CWE-79") + "]", TokenUsage{50, 9}});

  DetectConfig config;
  config.model_id = "gpt-5";
  config.prompt.system_prompt = "Find bugs.";
  auto result = run_detection(payload, CaseVersion::VULNERABLE, client, config);

  CHECK_FALSE(result.errored);
  CHECK(result.case_id == payload.case_id);
  CHECK(result.version == CaseVersion::VULNERABLE);
  CHECK(result.model_id == "gpt-5");
  REQUIRE(result.findings.size() == 1);
  CHECK(result.findings[0].file == "src/index.js");
  CHECK(result.token_usage.input == 50);
  CHECK(result.token_usage.output == 9);
  CHECK(result.wall_time_s >= 0.0);
  CHECK(result.diagnostics.empty());
  REQUIRE(client.prompts.size() == 1);
  CHECK(client.prompts[0].find("=== PROJECT: acme/lib ===") != std::string::npos);
}

TEST_CASE("missing usage falls back to the byte estimate") {
  auto payload = two_file_payload();
  ScriptedClient client;
  client.turns.push_back(ClientResponse{"[]", std::nullopt});

  DetectConfig config;
  config.model_id = "m";
  config.prompt.system_prompt = "Find bugs.";
  auto result = run_detection(payload, CaseVersion::FIXED, client, config);
  CHECK_FALSE(result.errored);
  CHECK(result.token_usage.input == estimate_tokens(client.prompts[0]));
  CHECK(result.token_usage.output == estimate_tokens("[]"));
}

TEST_CASE("a timeout marks the case errored without findings") {
  auto payload = two_file_payload();
  ScriptedClient client;
  client.turns.push_back(Error{Errc::Timeout, "60s elapsed"});

  DetectConfig config;
  config.model_id = "m";
  config.prompt.system_prompt = "Find bugs.";
  auto result = run_detection(payload, CaseVersion::VULNERABLE, client, config);
  CHECK(result.errored);
  CHECK(result.findings.empty());
  REQUIRE(result.diagnostics.size() == 1);
  CHECK(result.diagnostics[0].find("60s elapsed") != std::string::npos);
}

TEST_CASE("oversized projects shard by top-level directory") {
  CasePayload payload;
  payload.case_id = "big";
  payload.project_name = "big/project";
  payload.files["alpha/a.js"] = std::string(300, 'a') + "\n";
  payload.files["beta/b.js"] = std::string(300, 'b') + "\n";

  DetectConfig config;
  config.model_id = "m";
  config.prompt.system_prompt = "S";
  config.prompt.input_token_budget = 120;  // whole project is ~170 tokens

  ScriptedClient client;
  client.turns.push_back(
      ClientResponse{"[" + finding_json("alpha/a.js", 1, "CWE-79") + "]", TokenUsage{90, 10}});
  client.turns.push_back(
      ClientResponse{"[" + finding_json("beta/b.js", 1, "CWE-89") + "]", TokenUsage{91, 11}});

  auto result = run_detection(payload, CaseVersion::VULNERABLE, client, config);
  CHECK_FALSE(result.errored);
  REQUIRE(client.prompts.size() == 2);
  CHECK(client.prompts[0].find("alpha/a.js") != std::string::npos);
  CHECK(client.prompts[0].find("beta/b.js") == std::string::npos);
  CHECK(client.prompts[1].find("beta/b.js") != std::string::npos);
  CHECK(client.prompts[1].find("alpha/a.js") == std::string::npos);
  REQUIRE(result.findings.size() == 2);
  CHECK(result.findings[0].category == "CWE-79");
  CHECK(result.findings[1].category == "CWE-89");
  CHECK(result.token_usage.input == 181);
  CHECK(result.token_usage.output == 21);
  REQUIRE(result.raw_response.find("\n") != std::string::npos);
  REQUIRE_FALSE(result.diagnostics.empty());
  CHECK(result.diagnostics[0] == "payload split into 2 shards");
}

TEST_CASE("small directories pack into one shard") {
  CasePayload payload;
  payload.case_id = "pack";
  payload.project_name = "pack/project";
  payload.files["alpha/a.js"] = std::string(100, 'a') + "\n";
  payload.files["beta/b.js"] = std::string(100, 'b') + "\n";
  payload.files["gamma/c.js"] = std::string(300, 'c') + "\n";

  DetectConfig config;
  config.model_id = "m";
  config.prompt.system_prompt = "S";
  config.prompt.input_token_budget = 100;

  ScriptedClient client;
  client.turns.push_back(ClientResponse{"[]", std::nullopt});
  client.turns.push_back(ClientResponse{"[]", std::nullopt});

  auto result = run_detection(payload, CaseVersion::VULNERABLE, client, config);
  CHECK_FALSE(result.errored);
  REQUIRE(client.prompts.size() == 2);
  CHECK(client.prompts[0].find("alpha/a.js") != std::string::npos);
  CHECK(client.prompts[0].find("beta/b.js") != std::string::npos);
  CHECK(client.prompts[1].find("gamma/c.js") != std::string::npos);
}

TEST_CASE("one file beyond the budget cannot be sharded") {
  CasePayload payload;
  payload.case_id = "huge";
  payload.project_name = "huge/project";
  payload.files["src/blob.js"] = std::string(4000, 'x') + "\n";

  DetectConfig config;
  config.model_id = "m";
  config.prompt.system_prompt = "S";
  config.prompt.input_token_budget = 100;

  ScriptedClient client;
  auto result = run_detection(payload, CaseVersion::VULNERABLE, client, config);
  CHECK(result.errored);
  CHECK(client.prompts.empty());
  REQUIRE(result.diagnostics.size() == 1);
  CHECK(result.diagnostics[0].find("src/blob.js alone exceeds") != std::string::npos);
}

TEST_CASE("snippet payloads never shard") {
  CasePayload payload;
  payload.case_id = "snip";
  payload.project_name = "snip/project";
  payload.files["a.js"] = std::string(2000, 'x') + "\n";
  payload.snippet_spans.push_back({"a.js", 1, 1});

  DetectConfig config;
  config.model_id = "m";
  config.mode = PayloadMode::SNIPPET;
  config.prompt.system_prompt = std::string(2000, 'S');
  config.prompt.input_token_budget = 100;

  ScriptedClient client;
  auto result = run_detection(payload, CaseVersion::VULNERABLE, client, config);
  CHECK(result.errored);
  CHECK(client.prompts.empty());
  REQUIRE(result.diagnostics.size() == 1);
  CHECK(result.diagnostics[0].find("budget") != std::string::npos);
}

TEST_CASE("http client round-trips against a local endpoint") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/complete", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    json body = json::parse(req.body);
    CHECK(body["model"] == "m");
    CHECK(body["temperature"] == doctest::Approx(0.7));
    json reply{{"text", "echo: " + body["prompt"].get<std::string>()},
               {"usage", {{"input", 12}, {"output", 3}}}};
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/v1/error", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("boom", "text/plain");
  });
  server.Post("/v1/garbage", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });

  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpJsonClient client("127.0.0.1", port, "/v1/complete");
  auto response = client.send("ping", "m", 0.7, 5);
  REQUIRE(response.ok());
  CHECK(response.value().text == "echo: ping");
  REQUIRE(response.value().usage.has_value());
  CHECK(response.value().usage->input == 12);
  CHECK(hits == 1);

  HttpJsonClient failing("127.0.0.1", port, "/v1/error");
  auto error = failing.send("ping", "m", 0.7, 5);
  REQUIRE_FALSE(error.ok());
  CHECK(error.error().code == Errc::TransportFailure);
  CHECK(error.error().message.find("500") != std::string::npos);

  HttpJsonClient garbled("127.0.0.1", port, "/v1/garbage");
  auto garbage = garbled.send("ping", "m", 0.7, 5);
  REQUIRE_FALSE(garbage.ok());
  CHECK(garbage.error().code == Errc::TransportFailure);

  server.stop();
  worker.join();
}
