#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "jsvb/common.hpp"
#include "jsvb/ingest.hpp"

using namespace jsvb;
using namespace jsvb::ingest;

namespace {

const std::string kReposDir = std::string(JSVB_FIXTURE_DIR) + "/repos";
const std::string kRecordsPath = std::string(JSVB_FIXTURE_DIR) + "/records.jsonl";

RepoRef make_ref(std::string owner, std::string repo, std::string sha) {
  RepoRef ref;
  ref.owner = std::move(owner);
  ref.repo = std::move(repo);
  ref.commit_sha = std::move(sha);
  return ref;
}

const RepoRef kDeepOverride =
    make_ref("ASaiAnudeep", "deep-override", "2aced1760b16f4d78d1b014c6e553ad52b90c5a3");

std::string scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("jsvb_ingest_" + name);
  std::filesystem::remove_all(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("severity parsing accepts aliases and rejects junk") {
  CHECK(parse_severity("CRITICAL").value() == Severity::CRITICAL);
  CHECK(parse_severity("high").value() == Severity::HIGH);
  CHECK(parse_severity("Moderate").value() == Severity::MEDIUM);
  CHECK(parse_severity("medium").value() == Severity::MEDIUM);
  CHECK(parse_severity("LOW").value() == Severity::LOW);
  auto bad = parse_severity("catastrophic");
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.error().code == Errc::MissingMetadata);
  CHECK(std::string(severity_name(Severity::CRITICAL)) == "CRITICAL");
}

TEST_CASE("parse_record reads scalar and list field spellings") {
  auto rec = parse_record(
      R"({"cve_id":"CVE-2020-1","cve_description":"d","severity":"high",)"
      R"("cwe_id":"CWE-79","published":"2020-01-02","code_links":"https://x.io/a/b/commit/abcdef123",)"
      R"("sources":["nvd","github"]})");
  REQUIRE(rec.ok());
  CHECK(rec.value().cve_id == "CVE-2020-1");
  CHECK(rec.value().severity == Severity::HIGH);
  CHECK(rec.value().cwe_ids == std::vector<std::string>{"CWE-79"});
  CHECK(rec.value().published_date == "2020-01-02");
  CHECK(rec.value().code_links == std::vector<std::string>{"https://x.io/a/b/commit/abcdef123"});
  CHECK(rec.value().sources.size() == 2);

  auto lists = parse_record(
      R"({"cve_id":"CVE-2020-2","cwe_ids":["CWE-79","CWE-89"],"published_date":"2021-03-04"})");
  REQUIRE(lists.ok());
  CHECK(lists.value().cwe_ids.size() == 2);
  CHECK(lists.value().published_date == "2021-03-04");
}

TEST_CASE("parse_record rejects non-object lines") {
  CHECK_FALSE(parse_record("[1,2]").ok());
  CHECK_FALSE(parse_record("not json").ok());
  CHECK(parse_record("[1,2]").error().code == Errc::ParseError);
}

TEST_CASE("validate_advisory enforces id, cwe shape, and a usable link") {
  AdvisoryRecord rec;
  rec.cve_id = "CVE-2021-25941";
  rec.cwe_ids = {"CWE-1321"};
  rec.code_links = {"https://github.com/o/r/commit/0123456789abcdef0123"};
  CHECK(validate_advisory(rec).ok());

  auto no_id = rec;
  no_id.cve_id.clear();
  CHECK(validate_advisory(no_id).error().code == Errc::MissingMetadata);

  for (std::string bad : {"CWE-", "CWE-0", "CWE-07", "cwe-79", "79", "CWE-7a", "NVD-CWE-Other"}) {
    auto malformed = rec;
    malformed.cwe_ids = {bad};
    auto r = validate_advisory(malformed);
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().code == Errc::MalformedCweId);
  }

  auto no_links = rec;
  no_links.code_links.clear();
  CHECK(validate_advisory(no_links).error().code == Errc::MissingCodeLink);

  auto issue_only = rec;
  issue_only.code_links = {"https://github.com/o/r/issues/5", "https://example.com/advisory"};
  CHECK(validate_advisory(issue_only).error().code == Errc::MissingCodeLink);

  auto mixed = rec;
  mixed.code_links = {"https://github.com/o/r/issues/5",
                      "https://github.com/o/r/commit/0123456789abcdef0123"};
  CHECK(validate_advisory(mixed).ok());

  auto no_cwes = rec;
  no_cwes.cwe_ids.clear();
  CHECK(validate_advisory(no_cwes).ok());
}

TEST_CASE("parse_commit_url accepts commit links in common shapes") {
  auto plain = parse_commit_url(
      "https://github.com/ASaiAnudeep/deep-override/commit/2aced1760b16f4d78d1b014c6e553ad52b90c5a3");
  REQUIRE(plain.ok());
  CHECK(plain.value() == kDeepOverride);

  auto patch = parse_commit_url(
      "https://github.com/ASaiAnudeep/deep-override/commit/2aced1760b16f4d78d1b014c6e553ad52b90c5a3.patch");
  REQUIRE(patch.ok());
  CHECK(patch.value() == kDeepOverride);

  auto diff = parse_commit_url("http://gitlab.com/a/b/commit/abcdef1234.diff");
  REQUIRE(diff.ok());
  CHECK(diff.value().commit_sha == "abcdef1234");

  auto query = parse_commit_url(
      "https://github.com/webco/widget-ui/commit/5CAFFE1234567890abcdef1234567890abcdef12?diff=unified#L3");
  REQUIRE(query.ok());
  CHECK(query.value().owner == "webco");
  CHECK(query.value().commit_sha == "5caffe1234567890abcdef1234567890abcdef12");

  auto schemeless = parse_commit_url("github.com/nodekit/sql-kit/commit/77a1b2c3d4e5f6071");
  REQUIRE(schemeless.ok());
  CHECK(schemeless.value().repo == "sql-kit");

  auto trailing = parse_commit_url("https://github.com/o/r/commit/abcdef123/");
  CHECK(trailing.ok());
}

TEST_CASE("parse_commit_url rejects everything else") {
  const char* bad[] = {
      "https://github.com/o/r/issues/12",
      "https://github.com/o/r/pull/9/commits/abcdef1234567",
      "https://github.com/o/r/commit/abc123",          // sha too short
      "https://github.com/o/r/commit/nothexadecimal",  // sha not hex
      "https://github.com/o/r/commit",                 // missing sha
      "https://github.com/commit/abcdef1234567",       // missing repo
      "ftp://github.com/o/r/commit/abcdef1234567",     // bad scheme
      "github/o/r/commit/abcdef1234567",               // host has no dot
      "https://github.com/o//commit/abcdef1234567",    // empty repo
      "",
  };
  for (const char* url : bad) {
    auto r = parse_commit_url(url);
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().code == Errc::NotACommitUrl);
  }
}

TEST_CASE("DirectoryFetcher reads parents and snapshots from the captured tree") {
  DirectoryFetcher fetcher(kReposDir);

  auto parents = fetcher.parents(kDeepOverride);
  REQUIRE(parents.ok());
  REQUIRE(parents.value().size() == 1);
  CHECK(parents.value()[0] == "9f31c0aa41e27c5d8f2b1e4a6c0d3b7f5a82d914");

  auto index = fetcher.file_at(kDeepOverride, kDeepOverride.commit_sha, "src/index.js");
  REQUIRE(index.ok());
  REQUIRE(index.value().has_value());
  CHECK(index.value()->find("key === 'constructor'") != std::string::npos);

  auto missing = fetcher.file_at(kDeepOverride, kDeepOverride.commit_sha, "src/absent.js");
  REQUIRE(missing.ok());
  CHECK_FALSE(missing.value().has_value());
}

TEST_CASE("DirectoryFetcher changed_files skips files identical on both sides") {
  DirectoryFetcher fetcher(kReposDir);
  auto changed = fetcher.changed_files(kDeepOverride);
  REQUIRE(changed.ok());
  auto files = changed.value();
  std::sort(files.begin(), files.end());
  CHECK(files == std::vector<std::string>{"package.json", "src/index.js"});
  // test/basic.js exists in both snapshots with identical bytes
  auto basic = fetcher.file_at(kDeepOverride, kDeepOverride.commit_sha, "test/basic.js");
  REQUIRE(basic.ok());
  CHECK(basic.value().has_value());
}

TEST_CASE("DirectoryFetcher error taxonomy") {
  DirectoryFetcher fetcher(kReposDir);

  auto no_repo = fetcher.parents(make_ref("ghostco", "phantom-lib",
                                          "aaaabbbbccccddddeeeeffff0000111122223333"));
  REQUIRE_FALSE(no_repo.ok());
  CHECK(no_repo.error().code == Errc::TransportFailure);

  auto unknown_sha = fetcher.parents(
      make_ref("ASaiAnudeep", "deep-override", "ffffffffffffffffffffffffffffffffffffffff"));
  REQUIRE_FALSE(unknown_sha.ok());
  CHECK(unknown_sha.error().code == Errc::CommitNotFound);
}

TEST_CASE("DirectoryFetcher reports root commits as ParentMissing") {
  std::string root = scratch_dir("rootcommit");
  std::string repo = root + "/own__rep";
  REQUIRE(write_file(repo + "/parents.map", "abcdef1234567\n").ok());
  REQUIRE(write_file(repo + "/abcdef1234567/a.js", "var x = 1;\n").ok());
  DirectoryFetcher fetcher(root);
  auto ref = make_ref("own", "rep", "abcdef1234567");
  auto parents = fetcher.parents(ref);
  REQUIRE(parents.ok());
  CHECK(parents.value().empty());
  auto changed = fetcher.changed_files(ref);
  REQUIRE_FALSE(changed.ok());
  CHECK(changed.error().code == Errc::ParentMissing);
}

TEST_CASE("fetch_patch_pair materializes both sides of the deep-override patch") {
  DirectoryFetcher fetcher(kReposDir);
  auto pair = fetch_patch_pair(kDeepOverride, fetcher);
  REQUIRE(pair.ok());
  const PatchPair& p = pair.value();
  CHECK(p.parent_sha == "9f31c0aa41e27c5d8f2b1e4a6c0d3b7f5a82d914");
  CHECK_FALSE(p.merge_commit);
  REQUIRE(p.vulnerable_files.count("src/index.js") == 1);
  REQUIRE(p.fixed_files.count("src/index.js") == 1);
  CHECK(p.vulnerable_files.count("package.json") == 1);
  CHECK(p.vulnerable_files.count("test/basic.js") == 0);
  CHECK(p.added_by_patch.empty());
  CHECK(p.removed_by_patch.empty());

  const std::string& vuln = p.vulnerable_files.at("src/index.js");
  const std::string& fixed = p.fixed_files.at("src/index.js");
  CHECK(vuln != fixed);
  CHECK(vuln.find("key === 'constructor'") == std::string::npos);
  CHECK(fixed.find("key === 'constructor'") != std::string::npos);
  CHECK(count_lines(vuln) == count_lines(fixed));
}

TEST_CASE("fetch_patch_pair tracks added and removed files") {
  std::string root = scratch_dir("addremove");
  std::string repo = root + "/own__rep";
  REQUIRE(write_file(repo + "/parents.map", "bbbbbbb222222 aaaaaaa111111\n").ok());
  REQUIRE(write_file(repo + "/aaaaaaa111111/gone.js", "var dropped = 1;\n").ok());
  REQUIRE(write_file(repo + "/aaaaaaa111111/kept.js", "var same = 1;\n").ok());
  REQUIRE(write_file(repo + "/bbbbbbb222222/kept.js", "var same = 1;\n").ok());
  REQUIRE(write_file(repo + "/bbbbbbb222222/new.js", "var added = 1;\n").ok());
  DirectoryFetcher fetcher(root);
  auto pair = fetch_patch_pair(make_ref("own", "rep", "bbbbbbb222222"), fetcher);
  REQUIRE(pair.ok());
  CHECK(pair.value().added_by_patch == std::set<std::string>{"new.js"});
  CHECK(pair.value().removed_by_patch == std::set<std::string>{"gone.js"});
  CHECK(pair.value().vulnerable_files.at("new.js").empty());
  CHECK(pair.value().fixed_files.at("gone.js").empty());
  CHECK(pair.value().vulnerable_files.count("kept.js") == 0);
}

TEST_CASE("fetch_patch_pair flags merge commits and uses the first parent") {
  std::string root = scratch_dir("merge");
  std::string repo = root + "/own__rep";
  REQUIRE(write_file(repo + "/parents.map",
                     "# capture\nccccccc333333 aaaaaaa111111 bbbbbbb222222\n").ok());
  REQUIRE(write_file(repo + "/aaaaaaa111111/a.js", "var v = 'old';\n").ok());
  REQUIRE(write_file(repo + "/ccccccc333333/a.js", "var v = 'new';\n").ok());
  DirectoryFetcher fetcher(root);
  auto pair = fetch_patch_pair(make_ref("own", "rep", "ccccccc333333"), fetcher);
  REQUIRE(pair.ok());
  CHECK(pair.value().merge_commit);
  CHECK(pair.value().parent_sha == "aaaaaaa111111");
  CHECK(pair.value().vulnerable_files.at("a.js") == "var v = 'old';\n");
}

TEST_CASE("RecordingFetcher mirrors live traffic into a replayable tree") {
  std::string mirror = scratch_dir("mirror");
  DirectoryFetcher live(kReposDir);
  RecordingFetcher recorder(live, mirror);

  auto pair = fetch_patch_pair(kDeepOverride, recorder);
  REQUIRE(pair.ok());

  DirectoryFetcher replay(mirror);
  auto parents = replay.parents(kDeepOverride);
  REQUIRE(parents.ok());
  CHECK(parents.value() == std::vector<std::string>{"9f31c0aa41e27c5d8f2b1e4a6c0d3b7f5a82d914"});
  auto index = replay.file_at(kDeepOverride, kDeepOverride.commit_sha, "src/index.js");
  REQUIRE(index.ok());
  REQUIRE(index.value().has_value());
  CHECK(*index.value() == pair.value().fixed_files.at("src/index.js"));

  // recording the same commit twice must not duplicate the map line
  auto again = recorder.parents(kDeepOverride);
  REQUIRE(again.ok());
  auto map_text = read_file(mirror + "/ASaiAnudeep__deep-override/parents.map");
  REQUIRE(map_text.ok());
  CHECK(count_lines(map_text.value()) == 1);
}

TEST_CASE("read_records_file separates metadata-valid records from rejects") {
  auto outcome = read_records_file(kRecordsPath);
  REQUIRE(outcome.ok());
  const IngestOutcome& out = outcome.value();

  REQUIRE(out.accepted.size() == 4);
  REQUIRE(out.parsed_refs.size() == 4);
  CHECK(out.accepted[0].cve_id == "CVE-2021-25941");
  CHECK(out.accepted[1].cve_id == "CVE-2022-31002");
  CHECK(out.accepted[2].cve_id == "CVE-2023-40012");
  CHECK(out.accepted[3].cve_id == "CVE-2024-1111");

  // the issues link is counted but does not parse into a ref
  CHECK(out.accepted[0].code_links.size() == 2);
  REQUIRE(out.parsed_refs[0].size() == 1);
  CHECK(out.parsed_refs[0][0] == kDeepOverride);
  CHECK(out.parsed_refs[2][0].commit_sha == "5caffe1234567890abcdef1234567890abcdef12");

  REQUIRE(out.rejected.size() == 2);
  CHECK(out.rejected[0].cve_id == "CVE-2020-7777");
  CHECK(out.rejected[0].record_index == 4);
  CHECK(out.rejected[0].reason.code == Errc::MissingCodeLink);
  CHECK(out.rejected[1].cve_id.empty());
  CHECK(out.rejected[1].record_index == 6);
  CHECK(out.rejected[1].reason.code == Errc::MissingMetadata);
}

TEST_CASE("read_records_file propagates missing-file errors") {
  auto outcome = read_records_file(kRecordsPath + ".nope");
  REQUIRE_FALSE(outcome.ok());
  CHECK(outcome.error().code == Errc::IoError);
}
