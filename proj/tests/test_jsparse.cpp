#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <string>
#include <vector>

#include "jsvb/common.hpp"
#include "jsvb/jsparse.hpp"

using namespace jsvb;
using namespace jsvb::parse;

namespace {

const std::string kCorpusDir = std::string(JSVB_FIXTURE_DIR) + "/extraction_corpus";

std::vector<FunctionSpan> load_sidecar(const std::string& path) {
  auto text = read_file(path);
  REQUIRE(text.ok());
  std::vector<FunctionSpan> spans;
  for (const auto& line : split_lines(text.value())) {
    if (line.empty()) continue;
    auto fields = std::vector<std::string>{};
    std::size_t start = 0;
    for (;;) {
      std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    REQUIRE(fields.size() == 4);
    FunctionSpan s;
    s.name = fields[0];
    s.start_line = std::stoi(fields[1]);
    s.end_line = std::stoi(fields[2]);
    auto kind = parse_function_kind(fields[3]);
    REQUIRE(kind.ok());
    s.kind = kind.value();
    spans.push_back(std::move(s));
  }
  return spans;
}

void check_corpus_file(const std::string& stem) {
  auto source = read_file(kCorpusDir + "/" + stem + ".js");
  REQUIRE(source.ok());
  auto expected = load_sidecar(kCorpusDir + "/" + stem + ".spans");
  auto result = extract_functions(source.value());
  INFO("file: ", stem);
  for (const auto& d : result.diagnostics) {
    INFO("diagnostic: ", d);
  }
  REQUIRE(result.spans.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    INFO("span ", i, ": got ", result.spans[i].name, " ", result.spans[i].start_line, "-",
         result.spans[i].end_line, " ", function_kind_name(result.spans[i].kind));
    CHECK(result.spans[i] == expected[i]);
  }
}

}  // namespace

TEST_CASE("corpus: function declarations") { check_corpus_file("declarations"); }
TEST_CASE("corpus: function expressions") { check_corpus_file("expressions"); }
TEST_CASE("corpus: arrows") { check_corpus_file("arrows"); }
TEST_CASE("corpus: class methods") { check_corpus_file("classes"); }
TEST_CASE("corpus: object methods") { check_corpus_file("objects"); }
TEST_CASE("corpus: strings regex and templates") { check_corpus_file("tricky"); }

TEST_CASE("spans nest or are disjoint, never partially overlap") {
  for (const char* stem :
       {"declarations", "expressions", "arrows", "classes", "objects", "tricky"}) {
    auto source = read_file(kCorpusDir + "/" + stem + ".js");
    REQUIRE(source.ok());
    auto result = extract_functions(source.value());
    for (std::size_t x = 0; x < result.spans.size(); ++x) {
      for (std::size_t y = x + 1; y < result.spans.size(); ++y) {
        const auto& a = result.spans[x];
        const auto& b = result.spans[y];
        bool disjoint = a.end_line < b.start_line || b.end_line < a.start_line;
        bool a_in_b = b.start_line <= a.start_line && a.end_line <= b.end_line;
        bool b_in_a = a.start_line <= b.start_line && b.end_line <= a.end_line;
        INFO(stem, ": ", a.name, " vs ", b.name);
        CHECK((disjoint || a_in_b || b_in_a));
      }
    }
  }
}

TEST_CASE("spans are ordered by start line") {
  for (const char* stem :
       {"declarations", "expressions", "arrows", "classes", "objects", "tricky"}) {
    auto source = read_file(kCorpusDir + "/" + stem + ".js");
    REQUIRE(source.ok());
    auto result = extract_functions(source.value());
    for (std::size_t i = 1; i < result.spans.size(); ++i) {
      CHECK(result.spans[i - 1].start_line <= result.spans[i].start_line);
    }
  }
}

TEST_CASE("unbalanced input yields diagnostics and keeps going") {
  auto result = extract_functions("function broken(a {\nfunction fine() { return 1; }\n");
  CHECK(!result.diagnostics.empty());
  bool found_fine = false;
  for (const auto& s : result.spans) found_fine |= s.name == "fine";
  CHECK(found_fine);
}

TEST_CASE("empty input") {
  auto result = extract_functions("");
  CHECK(result.spans.empty());
  CHECK(result.diagnostics.empty());
}

// ---------------- change mapping ----------------

namespace {

FunctionSpan mk(const std::string& name, int start, int end,
                FunctionKind kind = FunctionKind::DECLARATION) {
  return FunctionSpan{name, start, end, kind};
}

ChangedLine modified(int old_line, int new_line) {
  ChangedLine c;
  c.kind = ChangeKind::MODIFIED;
  c.old_line = old_line;
  c.new_line = new_line;
  return c;
}

ChangedLine deleted(int old_line) {
  ChangedLine c;
  c.kind = ChangeKind::DELETED;
  c.old_line = old_line;
  return c;
}

ChangedLine inserted(int new_line) {
  ChangedLine c;
  c.kind = ChangeKind::INSERTED;
  c.new_line = new_line;
  return c;
}

}  // namespace

TEST_CASE("changes map to the innermost enclosing function") {
  std::vector<FunctionSpan> spans = {mk("outer", 1, 20), mk("inner", 5, 10)};
  std::vector<ChangedLine> changes = {modified(7, 7), modified(15, 15)};
  auto m = map_changes_to_functions(spans, changes);
  REQUIRE(m.functions.size() == 2);
  CHECK(m.functions[0].span.name == "outer");
  CHECK(m.functions[0].changed_lines == std::vector<int>{15});
  CHECK(m.functions[1].span.name == "inner");
  CHECK(m.functions[1].changed_lines == std::vector<int>{7});
  CHECK(m.unattributed_lines.empty());
}

TEST_CASE("changes outside every span are unattributed") {
  std::vector<FunctionSpan> spans = {mk("f", 5, 9)};
  std::vector<ChangedLine> changes = {modified(2, 2), modified(6, 6)};
  auto m = map_changes_to_functions(spans, changes);
  REQUIRE(m.functions.size() == 1);
  CHECK(m.unattributed_lines == std::vector<int>{2});
}

TEST_CASE("insertions anchor to the previous unchanged old line") {
  // old: 10 lines, function at 3-8; patch inserts two lines after old
  // line 5 (new lines 6 and 7)
  std::vector<FunctionSpan> spans = {mk("f", 3, 8)};
  std::vector<ChangedLine> changes = {inserted(6), inserted(7)};
  auto m = map_changes_to_functions(spans, changes);
  REQUIRE(m.functions.size() == 1);
  CHECK(m.functions[0].changed_lines == std::vector<int>{5});
}

TEST_CASE("insertion at the top of the file anchors to line 1") {
  std::vector<FunctionSpan> spans = {mk("f", 1, 4)};
  std::vector<ChangedLine> changes = {inserted(1)};
  auto m = map_changes_to_functions(spans, changes);
  REQUIRE(m.functions.size() == 1);
  CHECK(m.functions[0].changed_lines == std::vector<int>{1});
}

TEST_CASE("mixed script replays cursor positions correctly") {
  // old lines: 1..10. Script: delete old 2, modify old 5->new 4,
  // insert new 7 (after old 7).
  std::vector<FunctionSpan> spans = {mk("f", 1, 10)};
  std::vector<ChangedLine> changes = {deleted(2), modified(5, 4), inserted(7)};
  auto m = map_changes_to_functions(spans, changes);
  REQUIRE(m.functions.size() == 1);
  // deleted 2 -> line 2; modified -> line 5; inserted new 7: after new
  // lines 5,6 map to old 6,7 -> anchor old 7
  CHECK(m.functions[0].changed_lines == std::vector<int>{2, 5, 7});
}

TEST_CASE("adding a change inside a span never shrinks the vulnerable set") {
  std::vector<FunctionSpan> spans = {mk("a", 1, 10), mk("b", 12, 30), mk("c", 15, 20)};
  std::vector<ChangedLine> base = {modified(3, 3)};
  auto before = map_changes_to_functions(spans, base);
  for (int line = 1; line <= 30; ++line) {
    auto extended = base;
    extended.push_back(modified(line, line));
    std::sort(extended.begin(), extended.end(), [](const auto& x, const auto& y) {
      return *x.old_line < *y.old_line;
    });
    auto after = map_changes_to_functions(spans, extended);
    for (const auto& fc : before.functions) {
      bool still_there = false;
      for (const auto& fc2 : after.functions) {
        still_there |= fc2.span.name == fc.span.name;
      }
      INFO("line ", line);
      CHECK(still_there);
    }
  }
}

TEST_CASE("range formatting matches the documented layout") {
  ChangeMapping m;
  m.functions.push_back({mk("override", 19, 70), {49, 50}});
  CHECK(format_line_ranges(m) == "19-70,49,50");

  ChangeMapping two;
  two.functions.push_back({mk("a", 3, 9), {4}});
  two.functions.push_back({mk("b", 11, 20), {12, 13}});
  CHECK(format_line_ranges(two) == "3-9,4;11-20,12,13");

  std::vector<std::pair<std::string, ChangeMapping>> files = {
      {"src/a.js", m}, {"src/b.js", two}};
  CHECK(format_line_ranges(files) == "src/a.js:19-70,49,50|src/b.js:3-9,4;11-20,12,13");

  std::vector<std::pair<std::string, ChangeMapping>> single = {{"src/a.js", m}};
  CHECK(format_line_ranges(single) == "19-70,49,50");
}

// ---------------- labels ----------------

TEST_CASE("single changed function is ONEFUNC regardless of text") {
  LabelInput in;
  in.vulnerable_functions = {{"src/index.js", {"override"}}};
  in.advisory_text = "Prototype pollution in deep-override allows modification.";
  CHECK(assign_label(in) == FunctionLabel::ONEFUNC);
}

TEST_CASE("function name in advisory text gives NVDCHECK") {
  LabelInput in;
  in.vulnerable_functions = {{"src/convert.js", {"parseQuery", "mergeConfig"}}};
  in.advisory_text = "The parseQuery routine fails to escape separators.";
  CHECK(assign_label(in) == FunctionLabel::NVDCHECK);
}

TEST_CASE("file basename in advisory text gives NVDCHECK") {
  LabelInput in;
  in.vulnerable_functions = {{"lib/export.js", {"a", "b"}}};
  in.advisory_text = "A flaw in export.js lets attackers inject rows.";
  CHECK(assign_label(in) == FunctionLabel::NVDCHECK);
}

TEST_CASE("mentions respect identifier boundaries and case") {
  LabelInput in;
  in.vulnerable_functions = {{"lib/util.js", {"merge", "clone"}}};
  in.advisory_text = "The merged output and cloneDeep helper are affected.";
  CHECK(assign_label(in) == FunctionLabel::SUSPICION);  // 'merged', 'cloneDeep' do not count
  in.advisory_text = "Calling merge() twice corrupts state.";
  CHECK(assign_label(in) == FunctionLabel::NVDCHECK);
  in.vulnerable_functions = {{"lib/util.js", {"Merge", "other"}}};
  in.advisory_text = "the merge helper";  // case differs
  CHECK(assign_label(in) == FunctionLabel::SUSPICION);
}

TEST_CASE("no mention and multiple functions is SUSPICION") {
  LabelInput in;
  in.vulnerable_functions = {{"ui/render.js", {"renderWidget"}},
                             {"ui/events.js", {"attachHandlers"}}};
  in.advisory_text = "Improper neutralization during widget rendering.";
  CHECK(assign_label(in) == FunctionLabel::SUSPICION);
}

TEST_CASE("anonymous names never match advisory text") {
  LabelInput in;
  in.vulnerable_functions = {{"a.js", {"<anonymous:3>", "<anonymous:9>"}}};
  in.advisory_text = "anonymous functions are affected";
  CHECK(assign_label(in) == FunctionLabel::SUSPICION);
}

TEST_CASE("denoised split keeps ONEFUNC and NVDCHECK") {
  CHECK(in_denoised_split(FunctionLabel::ONEFUNC));
  CHECK(in_denoised_split(FunctionLabel::NVDCHECK));
  CHECK_FALSE(in_denoised_split(FunctionLabel::SUSPICION));
}

// ---------------- project type ----------------

TEST_CASE("node builtin require votes backend") {
  std::map<std::string, std::string> files = {
      {"src/a.js", "var fs = require('fs');\nfs.readFileSync('x');\n"}};
  auto r = classify_project_type(files, {"src/a.js"});
  CHECK(r.type == ProjectType::BACKEND);
  CHECK_FALSE(r.low_confidence);
  CHECK(!r.evidence.empty());
}

TEST_CASE("dom globals vote frontend") {
  std::map<std::string, std::string> files = {
      {"src/ui.js", "var el = document.getElementById('x');\nel.innerHTML = '';\n"}};
  auto r = classify_project_type(files, {"src/ui.js"});
  CHECK(r.type == ProjectType::FRONTEND);
}

TEST_CASE("dotted document does not vote frontend") {
  std::map<std::string, std::string> files = {
      {"src/x.js", "var d = pdf.document;\nreturn d.pages;\n"}};
  auto r = classify_project_type(files, {"src/x.js"});
  CHECK(r.type == ProjectType::BACKEND);
  CHECK(r.low_confidence);
}

TEST_CASE("both signals vote fullstack") {
  std::map<std::string, std::string> files = {
      {"srv.js", "require('http').createServer();\n"},
      {"web.js", "window.addEventListener('load', go);\n"}};
  auto r = classify_project_type(files, {"srv.js", "web.js"});
  CHECK(r.type == ProjectType::FULLSTACK);
}

TEST_CASE("engines.node in a manifest votes backend") {
  std::map<std::string, std::string> files = {
      {"index.js", "module.exports = 1;\n"},
      {"package.json", R"({"name":"x","engines":{"node":">=10"}})"}};
  auto r = classify_project_type(files, {"index.js", "package.json"});
  CHECK(r.type == ProjectType::BACKEND);
  CHECK_FALSE(r.low_confidence);
}

TEST_CASE("html file in the pair votes frontend") {
  std::map<std::string, std::string> files = {{"a.js", "var x = 1;\n"}};
  auto r = classify_project_type(files, {"a.js", "demo/index.html"});
  CHECK(r.type == ProjectType::FRONTEND);
}

TEST_CASE("no signal defaults to backend with low confidence") {
  std::map<std::string, std::string> files = {{"a.js", "exports.id = function (x) { return x; };\n"}};
  auto r = classify_project_type(files, {"a.js"});
  CHECK(r.type == ProjectType::BACKEND);
  CHECK(r.low_confidence);
}

TEST_CASE("javascript path filter") {
  CHECK(is_javascript_path("a.js"));
  CHECK(is_javascript_path("lib/b.mjs"));
  CHECK(is_javascript_path("c.cjs"));
  CHECK(is_javascript_path("UPPER.JS"));
  CHECK_FALSE(is_javascript_path("d.ts"));
  CHECK_FALSE(is_javascript_path("package.json"));
  CHECK_FALSE(is_javascript_path("e.jsx"));
}
