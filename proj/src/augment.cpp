#include "jsvb/augment.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "jsvb/jsparse.hpp"
#include "jsvb/jstoken.hpp"

namespace jsvb::augment {

const char* sink_category_name(SinkCategory category) {
  switch (category) {
    case SinkCategory::FILE_IO:   return "FILE_IO";
    case SinkCategory::DATABASE:  return "DATABASE";
    case SinkCategory::DOM:       return "DOM";
    case SinkCategory::PROCESS:   return "PROCESS";
    case SinkCategory::NETWORK:   return "NETWORK";
    case SinkCategory::EVAL_LIKE: return "EVAL_LIKE";
    case SinkCategory::OTHER:     return "OTHER";
  }
  return "OTHER";
}

Result<SinkCategory> parse_sink_category(std::string_view name) {
  std::string u = to_lower_ascii(name);
  if (u == "file_io") return SinkCategory::FILE_IO;
  if (u == "database") return SinkCategory::DATABASE;
  if (u == "dom") return SinkCategory::DOM;
  if (u == "process") return SinkCategory::PROCESS;
  if (u == "network") return SinkCategory::NETWORK;
  if (u == "eval_like") return SinkCategory::EVAL_LIKE;
  if (u == "other") return SinkCategory::OTHER;
  return Error{Errc::ConfigError, "unknown sink category: " + std::string(name)};
}

const char* prompt_kind_name(PromptKind kind) {
  return kind == PromptKind::FALSE_SAFE ? "FALSE_SAFE" : "FALSE_VULN";
}

namespace {

// Globals a decoy template may reference freely. Anything else must be a
// $N placeholder, a property name, or an object key.
const std::set<std::string>& env_globals() {
  static const std::set<std::string> globals = {
      "require", "module", "exports", "process", "console", "Buffer",
      "JSON", "Math", "Date", "RegExp", "URL", "URLSearchParams", "Promise",
      "Object", "Array", "String", "Number", "Boolean", "Error", "Symbol",
      "Map", "Set", "globalThis", "eval", "Function", "setTimeout",
      "setInterval", "clearTimeout", "clearInterval", "queueMicrotask",
      "decodeURIComponent", "encodeURIComponent", "decodeURI", "encodeURI",
      "parseInt", "parseFloat", "isNaN", "isFinite", "document", "window",
      "navigator", "location", "history", "localStorage", "sessionStorage",
      "fetch", "XMLHttpRequest", "WebSocket", "Worker", "crypto", "atob",
      "btoa",
  };
  return globals;
}

bool is_placeholder(std::string_view text) {
  return text.size() == 2 && text[0] == '$' && text[1] >= '1' && text[1] <= '9';
}

std::vector<js::Token> significant_tokens(const std::vector<js::Token>& tokens) {
  std::vector<js::Token> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (t.type != js::TokType::Comment) out.push_back(t);
  }
  return out;
}

int token_end_line(const js::Token& t) {
  return t.line + static_cast<int>(std::count(t.text.begin(), t.text.end(), '\n'));
}

bool is_open(const std::string& t) { return t == "(" || t == "[" || t == "{"; }
bool is_close(const std::string& t) { return t == ")" || t == "]" || t == "}"; }

// partner index for (), [], {}; -1 when unmatched
std::vector<int> match_brackets(const std::vector<js::Token>& sig) {
  std::vector<int> match(sig.size(), -1);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < sig.size(); ++i) {
    if (sig[i].type != js::TokType::Punct) continue;
    if (is_open(sig[i].text)) {
      stack.push_back(i);
    } else if (is_close(sig[i].text)) {
      if (stack.empty()) continue;
      std::size_t open = stack.back();
      static const std::map<std::string, std::string> pairs = {
          {"(", ")"}, {"[", "]"}, {"{", "}"}};
      if (pairs.at(sig[open].text) != sig[i].text) continue;  // mismatched, leave open
      stack.pop_back();
      match[open] = static_cast<int>(i);
      match[i] = static_cast<int>(open);
    }
  }
  return match;
}

enum class BraceKind { NONE, BLOCK, OBJECT, CLASS_BODY };

// True when the brace at `idx` opens a class body: the tokens before it
// spell `class [name] [extends expr]`.
bool opens_class_body(const std::vector<js::Token>& sig, const std::vector<int>& match,
                      std::size_t idx) {
  int pos = static_cast<int>(idx) - 1;
  for (int hops = 0; pos >= 0 && hops < 64; ++hops) {
    const js::Token& t = sig[pos];
    if (t.type == js::TokType::Keyword && t.text == "class") return true;
    if (t.type == js::TokType::Keyword && t.text == "extends") { --pos; continue; }
    if (t.type == js::TokType::Identifier) { --pos; continue; }
    if (t.type == js::TokType::Punct && t.text == ".") { --pos; continue; }
    if (t.type == js::TokType::Punct && t.text == ")" && match[pos] >= 0) {
      pos = match[pos] - 1;
      continue;
    }
    break;
  }
  return false;
}

// Kind per token: braces get BLOCK/OBJECT/CLASS_BODY (closers inherit from
// their opener), everything else NONE.
std::vector<BraceKind> classify_braces(const std::vector<js::Token>& sig,
                                       const std::vector<int>& match) {
  std::vector<BraceKind> kind(sig.size(), BraceKind::NONE);
  for (std::size_t i = 0; i < sig.size(); ++i) {
    if (sig[i].type != js::TokType::Punct || sig[i].text != "{") continue;
    BraceKind k;
    if (opens_class_body(sig, match, i)) {
      k = BraceKind::CLASS_BODY;
    } else if (i == 0) {
      k = BraceKind::BLOCK;
    } else {
      const js::Token& prev = sig[i - 1];
      bool block = false;
      if (prev.type == js::TokType::Punct) {
        block = prev.text == ")" || prev.text == ";" || prev.text == "{" ||
                prev.text == "}" || prev.text == "=>";
      } else if (prev.type == js::TokType::Keyword) {
        block = prev.text == "do" || prev.text == "else" || prev.text == "try" ||
                prev.text == "finally";
      }
      k = block ? BraceKind::BLOCK : BraceKind::OBJECT;
    }
    kind[i] = k;
    if (match[i] >= 0) kind[match[i]] = k;
  }
  return kind;
}

std::string leading_indent(const std::string& line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  return line.substr(0, i);
}

// Insertions are (line, text-without-terminator) sorted ascending; line
// n+1 appends at end of file.
std::string apply_insertions(std::string_view source,
                             const std::vector<std::pair<int, std::string>>& insertions) {
  auto lines = split_lines_keepends(source);
  int n = static_cast<int>(lines.size());
  bool appends = std::any_of(insertions.begin(), insertions.end(),
                             [&](const auto& p) { return p.first > n; });
  if (appends && !lines.empty() && !lines.back().ends_with("\n")) {
    lines.back() += "\n";
  }
  std::string out;
  std::size_t next = 0;
  for (int line = 1; line <= n; ++line) {
    while (next < insertions.size() && insertions[next].first == line) {
      out += insertions[next].second;
      out += "\n";
      ++next;
    }
    out += lines[line - 1];
  }
  while (next < insertions.size()) {
    out += insertions[next].second;
    out += "\n";
    ++next;
  }
  return out;
}

std::string hex4(SplitMix64& rng) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%04x", static_cast<unsigned>(rng.below(65536)));
  return buf;
}

std::string fresh_name(SplitMix64& rng, const char* prefix, const std::set<std::string>& taken) {
  for (;;) {
    std::string name = std::string(prefix) + hex4(rng);
    if (!taken.count(name)) return name;
  }
}

std::set<std::string> identifier_texts(const std::vector<js::Token>& tokens) {
  std::set<std::string> out;
  for (const auto& t : tokens) {
    if (t.type == js::TokType::Identifier) out.insert(t.text);
  }
  return out;
}

// Free environment globals a template relies on (placeholders, property
// names and object keys excluded).
std::set<std::string> template_globals(const std::string& template_text) {
  auto sig = significant_tokens(js::tokenize(template_text).tokens);
  std::set<std::string> out;
  for (std::size_t i = 0; i < sig.size(); ++i) {
    if (sig[i].type != js::TokType::Identifier) continue;
    if (is_placeholder(sig[i].text)) continue;
    if (i > 0 && sig[i - 1].type == js::TokType::Punct &&
        (sig[i - 1].text == "." || sig[i - 1].text == "?.")) {
      continue;
    }
    bool key_pos = i + 1 < sig.size() && sig[i + 1].text == ":" && i > 0 &&
                   (sig[i - 1].text == "{" || sig[i - 1].text == ",");
    if (key_pos) continue;
    out.insert(sig[i].text);
  }
  return out;
}

// Declared placeholders in order of first appearance.
std::vector<std::string> template_placeholders(const std::string& template_text) {
  auto sig = significant_tokens(js::tokenize(template_text).tokens);
  std::vector<std::string> out;
  for (const auto& t : sig) {
    if (t.type == js::TokType::Identifier && is_placeholder(t.text) &&
        std::find(out.begin(), out.end(), t.text) == out.end()) {
      out.push_back(t.text);
    }
  }
  return out;
}

std::string substitute_placeholders(const std::string& template_text,
                                    const std::map<std::string, std::string>& names) {
  std::string out;
  out.reserve(template_text.size());
  for (std::size_t i = 0; i < template_text.size(); ++i) {
    if (template_text[i] == '$' && i + 1 < template_text.size() &&
        template_text[i + 1] >= '1' && template_text[i + 1] <= '9') {
      auto it = names.find(template_text.substr(i, 2));
      if (it != names.end()) {
        out += it->second;
        ++i;
        continue;
      }
    }
    out += template_text[i];
  }
  return out;
}

}  // namespace

Result<SinkCatalog> parse_sink_catalog(std::string_view text) {
  SinkCatalog catalog;
  int line_no = 0;
  for (const auto& raw : split_lines(text)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto bar = line.find('|');
    auto fail = [&](const std::string& why) {
      return Error{Errc::ConfigError, "catalog line " + std::to_string(line_no) + ": " + why};
    };
    if (bar == std::string::npos) return fail("expected CATEGORY|template");
    auto category = parse_sink_category(line.substr(0, bar));
    if (!category.ok()) return fail(category.error().message);
    std::string body = line.substr(bar + 1);
    if (trim(body).empty()) return fail("empty template");
    auto tokens = js::tokenize(body);
    if (!tokens.ok) return fail("template does not tokenize: " + tokens.diagnostics[0]);
    for (const auto& global : template_globals(body)) {
      if (!env_globals().count(global)) {
        return fail("free identifier '" + global + "' is not an environment global");
      }
    }
    DecoySink sink;
    sink.sink_id = static_cast<int>(catalog.sinks.size()) + 1;
    sink.category = category.value();
    sink.template_text = body;
    catalog.sinks.push_back(std::move(sink));
  }
  if (catalog.sinks.empty()) return Error{Errc::ConfigError, "sink catalog is empty"};
  return catalog;
}

Result<SinkCatalog> load_sink_catalog(const std::string& path) {
  auto text = read_file(path);
  if (!text.ok()) return text.error();
  return parse_sink_catalog(text.value());
}

bool PromptLibrary::has_kind(PromptKind kind) const {
  return std::any_of(prompts.begin(), prompts.end(),
                     [kind](const PromptTemplate& p) { return p.kind == kind; });
}

Result<PromptLibrary> parse_prompt_library(std::string_view text) {
  PromptLibrary library;
  int line_no = 0;
  for (const auto& raw : split_lines(text)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto bar = line.find('|');
    auto fail = [&](const std::string& why) {
      return Error{Errc::ConfigError, "prompt line " + std::to_string(line_no) + ": " + why};
    };
    if (bar == std::string::npos) return fail("expected KIND|// comment");
    std::string kind_text = to_lower_ascii(trim(line.substr(0, bar)));
    PromptTemplate entry;
    if (kind_text == "false_safe") {
      entry.kind = PromptKind::FALSE_SAFE;
    } else if (kind_text == "false_vuln") {
      entry.kind = PromptKind::FALSE_VULN;
    } else {
      return fail("unknown kind '" + kind_text + "'");
    }
    entry.text = line.substr(bar + 1);
    if (!entry.text.starts_with("//")) return fail("comment must start with //");
    library.prompts.push_back(std::move(entry));
  }
  if (!library.has_kind(PromptKind::FALSE_SAFE) || !library.has_kind(PromptKind::FALSE_VULN)) {
    return Error{Errc::ConfigError, "prompt library needs FALSE_SAFE and FALSE_VULN entries"};
  }
  return library;
}

Result<PromptLibrary> load_prompt_library(const std::string& path) {
  auto text = read_file(path);
  if (!text.ok()) return text.error();
  return parse_prompt_library(text.value());
}

std::vector<int> statement_boundary_lines(std::string_view source) {
  int n = static_cast<int>(count_lines(source));
  auto result = js::tokenize(source);
  auto sig = significant_tokens(result.tokens);
  auto match = match_brackets(sig);
  auto braces = classify_braces(sig, match);

  // inserting a line break before L must not split a multi-line token
  std::vector<char> splits_token(n + 2, 0);
  for (const auto& t : result.tokens) {
    int end = token_end_line(t);
    for (int line = t.line + 1; line <= end && line <= n + 1; ++line) splits_token[line] = 1;
  }

  auto prev_ok = [&](int idx) {
    if (idx < 0) return true;
    const js::Token& t = sig[idx];
    if (t.type != js::TokType::Punct) return false;
    if (t.text == ";") return true;
    if (t.text == "{") return braces[idx] == BraceKind::BLOCK;
    // a closing block or class body ends a statement; a closing object
    // literal may still sit inside an expression
    if (t.text == "}") {
      return braces[idx] == BraceKind::BLOCK || braces[idx] == BraceKind::CLASS_BODY;
    }
    return false;
  };

  static const std::set<std::string> bad_next_keywords = {
      "else", "catch", "finally", "while", "case", "default", "in", "instanceof"};
  auto next_ok = [&](std::size_t idx) {
    if (idx >= sig.size()) return true;  // only blanks/comments follow
    const js::Token& t = sig[idx];
    switch (t.type) {
      case js::TokType::Keyword:
        return !bad_next_keywords.count(t.text);
      case js::TokType::Identifier:
        return t.text != "of";
      case js::TokType::Number:
      case js::TokType::Regex:
        return true;
      case js::TokType::String:
      case js::TokType::Template:
        return false;  // could be a directive prologue or tagged literal
      case js::TokType::Punct:
        if (t.text == "{" || t.text == "}") return braces[idx] == BraceKind::BLOCK;
        return false;
      default:
        return false;
    }
  };

  std::vector<int> out;
  std::size_t prev = 0;  // count of sig tokens ending before the boundary
  std::size_t next = 0;  // first sig token at or after the boundary line
  std::vector<BraceKind> stack;
  for (int line = 1; line <= n + 1; ++line) {
    while (prev < sig.size() && token_end_line(sig[prev]) < line) {
      const js::Token& t = sig[prev];
      if (t.type == js::TokType::Punct && t.text == "{" && match[prev] >= 0) {
        stack.push_back(braces[prev]);
      } else if (t.type == js::TokType::Punct && t.text == "}" && match[prev] >= 0 &&
                 !stack.empty()) {
        stack.pop_back();
      }
      ++prev;
    }
    while (next < sig.size() && sig[next].line < line) ++next;
    if (splits_token[line]) continue;
    if (!stack.empty() && stack.back() != BraceKind::BLOCK) continue;
    if (!prev_ok(static_cast<int>(prev) - 1)) continue;
    if (!next_ok(next)) continue;
    out.push_back(line);
  }
  return out;
}

// ---------------- declared-name analysis ----------------

namespace {

bool is_decl_keyword(const js::Token& t) {
  return t.text == "var" || t.text == "let" || t.text == "const";
}

// Names bound by the file: declarations, simple parameters, catch params,
// arrow params. Over-collection is fine; exclusions prune later.
std::set<std::string> declared_names(const std::vector<js::Token>& sig,
                                     const std::vector<int>& match) {
  std::set<std::string> out;
  auto collect_params = [&](std::size_t open) {
    if (match[open] < 0) return;
    std::size_t close = static_cast<std::size_t>(match[open]);
    int depth = 0;
    for (std::size_t i = open + 1; i < close; ++i) {
      const js::Token& t = sig[i];
      if (t.type == js::TokType::Punct) {
        if (is_open(t.text)) ++depth;
        else if (is_close(t.text)) --depth;
        continue;
      }
      if (depth != 0 || t.type != js::TokType::Identifier) continue;
      const js::Token& before = sig[i - 1];
      if (before.text == "(" || before.text == "," || before.text == "...") {
        out.insert(t.text);
      }
    }
  };

  for (std::size_t i = 0; i < sig.size(); ++i) {
    const js::Token& t = sig[i];
    if (t.type == js::TokType::Keyword && (t.text == "function" || t.text == "class")) {
      std::size_t j = i + 1;
      if (j < sig.size() && sig[j].text == "*") ++j;
      if (j < sig.size() && sig[j].type == js::TokType::Identifier) {
        out.insert(sig[j].text);
        ++j;
      }
      if (t.text == "function") {
        while (j < sig.size() && sig[j].text != "(") ++j;
        if (j < sig.size()) collect_params(j);
      }
      continue;
    }
    if (t.type == js::TokType::Keyword && t.text == "catch") {
      if (i + 2 < sig.size() && sig[i + 1].text == "(" &&
          sig[i + 2].type == js::TokType::Identifier) {
        out.insert(sig[i + 2].text);
      }
      continue;
    }
    if (t.type == js::TokType::Punct && t.text == "=>") {
      if (i == 0) continue;
      const js::Token& before = sig[i - 1];
      if (before.type == js::TokType::Identifier) {
        out.insert(before.text);
      } else if (before.text == ")" && match[i - 1] >= 0) {
        collect_params(static_cast<std::size_t>(match[i - 1]));
      }
      continue;
    }
    bool decl = (t.type == js::TokType::Keyword && is_decl_keyword(t)) ||
                (t.type == js::TokType::Identifier && t.text == "let" && i + 1 < sig.size() &&
                 sig[i + 1].type == js::TokType::Identifier);
    if (decl) {
      int depth = 0;
      bool expecting = true;
      for (std::size_t j = i + 1; j < sig.size(); ++j) {
        const js::Token& d = sig[j];
        if (d.type == js::TokType::Punct) {
          if (is_open(d.text)) { ++depth; continue; }
          if (is_close(d.text)) {
            if (--depth < 0) break;
            continue;
          }
          if (d.text == ";" && depth == 0) break;
          if (d.text == "," && depth == 0) { expecting = true; continue; }
          continue;
        }
        if (d.type == js::TokType::Keyword && depth == 0 &&
            (d.text == "in" || is_decl_keyword(d))) {
          break;
        }
        if (d.type == js::TokType::Identifier && d.text == "of" && depth == 0) break;
        if (expecting && d.type == js::TokType::Identifier) {
          out.insert(d.text);
          expecting = false;
        }
      }
    }
  }
  return out;
}

// Names with any occurrence whose role is ambiguous (property, key,
// shorthand, import/export surface, statement-position call). Renaming a
// name requires every occurrence to be a plain reference.
std::set<std::string> ambiguous_names(const std::vector<js::Token>& sig,
                                      const std::vector<int>& match) {
  std::set<std::string> out;
  // innermost enclosing open bracket per token ('(', '[', '{' or 0)
  std::vector<char> enclosing(sig.size(), 0);
  {
    std::vector<char> stack;
    for (std::size_t i = 0; i < sig.size(); ++i) {
      enclosing[i] = stack.empty() ? 0 : stack.back();
      if (sig[i].type != js::TokType::Punct) continue;
      if (is_open(sig[i].text) && match[i] >= 0) {
        stack.push_back(sig[i].text[0]);
      } else if (is_close(sig[i].text) && match[i] >= 0 && !stack.empty()) {
        stack.pop_back();
      }
    }
  }
  std::vector<char> in_module_decl(sig.size(), 0);
  for (std::size_t i = 0; i < sig.size(); ++i) {
    if (sig[i].type != js::TokType::Keyword ||
        (sig[i].text != "import" && sig[i].text != "export")) {
      continue;
    }
    std::size_t j = i;
    for (int hops = 0; j < sig.size() && hops < 200; ++hops) {
      in_module_decl[j] = 1;
      const js::Token& t = sig[j];
      if (t.text == ";") break;
      if (t.type == js::TokType::Keyword && (t.text == "function" || t.text == "class") &&
          j > i) {
        // mark just the exported name; the body is ordinary code
        std::size_t k = j + 1;
        if (k < sig.size() && sig[k].text == "*") { in_module_decl[k] = 1; ++k; }
        if (k < sig.size()) in_module_decl[k] = 1;
        break;
      }
      if (t.type == js::TokType::Punct && is_open(t.text) && match[j] >= 0) {
        std::size_t close = static_cast<std::size_t>(match[j]);
        for (std::size_t k = j; k <= close; ++k) in_module_decl[k] = 1;
        j = close + 1;
        continue;
      }
      ++j;
    }
  }
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const js::Token& t = sig[i];
    if (t.type != js::TokType::Identifier) continue;
    if (in_module_decl[i]) {
      out.insert(t.text);
      continue;
    }
    const js::Token* prev = i > 0 ? &sig[i - 1] : nullptr;
    const js::Token* next = i + 1 < sig.size() ? &sig[i + 1] : nullptr;
    if (prev && prev->type == js::TokType::Punct &&
        (prev->text == "." || prev->text == "?.")) {
      out.insert(t.text);
      continue;
    }
    if (next && next->text == ":") {
      out.insert(t.text);
      continue;
    }
    // shorthand property / destructuring element: between braces with no
    // key or value of its own
    if (prev && next && enclosing[i] == '{' && (prev->text == "{" || prev->text == ",") &&
        (next->text == "," || next->text == "}")) {
      out.insert(t.text);
      continue;
    }
    // method-definition vs statement-position call is ambiguous from
    // tokens alone; give up on names seen as NAME(...) after a boundary
    if (next && next->text == "(" && prev &&
        (prev->text == "{" || prev->text == "}" || prev->text == ";")) {
      out.insert(t.text);
      continue;
    }
  }
  return out;
}

const std::set<std::string>& never_rename() {
  static const std::set<std::string> names = {
      "arguments", "undefined", "NaN", "Infinity", "let", "async", "await",
      "get", "set", "of", "static", "yield", "constructor",
  };
  return names;
}

std::string encode_ascii(std::string_view inner, bool is_template) {
  std::string out;
  out.reserve(inner.size() * 4);
  for (std::size_t i = 0; i < inner.size(); ++i) {
    char c = inner[i];
    if (c == '\\' && i + 1 < inner.size()) {
      char escape = inner[i + 1];
      out += c;
      out += escape;
      ++i;
      std::size_t extra = 0;
      if (escape == 'x') {
        extra = 2;
      } else if (escape == 'u') {
        if (i + 1 < inner.size() && inner[i + 1] == '{') {
          while (i + 1 + extra < inner.size() && inner[i + extra] != '}') ++extra;
        } else {
          extra = 4;
        }
      }
      while (extra > 0 && i + 1 < inner.size()) {
        out += inner[++i];
        --extra;
      }
      continue;
    }
    bool printable = c >= 0x20 && c <= 0x7e;
    bool reserved = is_template && (c == '$' || c == '`' || c == '{' || c == '}');
    if (printable && !reserved && c != '\\') {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned char>(c));
      out += buf;
    } else {
      out += c;
    }
  }
  return out;
}

// Rebuilds the source with per-token substitutions; untouched bytes are
// copied verbatim, so layout and line structure survive.
std::string splice_tokens(std::string_view source, const std::vector<js::Token>& tokens,
                          const std::map<std::size_t, std::string>& replacements) {
  std::string out;
  out.reserve(source.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const js::Token& t = tokens[i];
    out += source.substr(pos, t.offset - pos);
    auto it = replacements.find(i);
    out += it != replacements.end() ? it->second : t.text;
    pos = t.offset + t.text.size();
  }
  out += source.substr(pos);
  return out;
}

std::string rename_pass(std::string_view source, SplitMix64& rng,
                        std::map<std::string, std::string>& rename_map,
                        std::vector<std::string>& diagnostics) {
  auto result = js::tokenize(source);
  auto sig = significant_tokens(result.tokens);
  auto match = match_brackets(sig);
  auto declared = declared_names(sig, match);
  auto ambiguous = ambiguous_names(sig, match);
  auto taken = identifier_texts(result.tokens);

  std::vector<std::string> candidates;
  for (const auto& name : declared) {
    if (ambiguous.count(name) || env_globals().count(name) || never_rename().count(name) ||
        js::is_reserved_word(name)) {
      continue;
    }
    candidates.push_back(name);
  }
  for (const auto& name : candidates) {
    std::string alias = fresh_name(rng, "_0x", taken);
    taken.insert(alias);
    rename_map[name] = alias;
  }
  if (rename_map.empty()) return std::string(source);

  std::map<std::size_t, std::string> replacements;
  for (std::size_t i = 0; i < result.tokens.size(); ++i) {
    const js::Token& t = result.tokens[i];
    if (t.type != js::TokType::Identifier) continue;
    auto it = rename_map.find(t.text);
    if (it != rename_map.end()) replacements[i] = it->second;
  }
  diagnostics.push_back("renamed " + std::to_string(rename_map.size()) + " identifiers");
  return splice_tokens(source, result.tokens, replacements);
}

std::string encode_pass(std::string_view source, std::vector<std::string>& diagnostics) {
  auto result = js::tokenize(source);
  const auto& tokens = result.tokens;
  std::map<std::size_t, std::string> replacements;
  std::size_t encoded = 0;
  bool in_tagged_template = false;
  const js::Token* prev_sig = nullptr;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const js::Token& t = tokens[i];
    if (t.type == js::TokType::String) {
      std::string inner = t.text.substr(1, t.text.size() >= 2 ? t.text.size() - 2 : 0);
      if (!inner.starts_with("use ")) {  // keep directive prologues intact
        replacements[i] = t.text.substr(0, 1) + encode_ascii(inner, false) +
                          t.text.substr(t.text.size() - 1);
        ++encoded;
      }
    } else if (t.type == js::TokType::Template) {
      bool opening = t.text.starts_with("`");
      bool closing = t.text.ends_with("`");
      if (opening) {
        in_tagged_template =
            prev_sig && (prev_sig->type == js::TokType::Identifier ||
                         prev_sig->text == ")" || prev_sig->text == "]");
      }
      if (!in_tagged_template && t.text.size() >= 2) {
        std::size_t lead = 1;  // '`' or '}'
        std::size_t tail = closing ? 1 : 2;  // '`' or '${'
        if (t.text.size() >= lead + tail) {
          std::string inner = t.text.substr(lead, t.text.size() - lead - tail);
          replacements[i] = t.text.substr(0, lead) + encode_ascii(inner, true) +
                            t.text.substr(t.text.size() - tail);
          ++encoded;
        }
      }
      if (closing) in_tagged_template = false;
    }
    if (t.type != js::TokType::Comment) prev_sig = &tokens[i];
  }
  if (encoded == 0) return std::string(source);
  diagnostics.push_back("encoded " + std::to_string(encoded) + " literals");
  return splice_tokens(source, tokens, replacements);
}

std::string wrap_pass(std::string_view source, std::vector<std::string>& diagnostics) {
  auto result = js::tokenize(source);
  auto sig = significant_tokens(result.tokens);
  auto match = match_brackets(sig);
  // function bodies whose semantics survive an arrow IIFE: no var
  // hoisting, no nested declarations, no generator/async machinery
  static const std::set<std::string> blockers = {"var",   "let",   "const", "function",
                                                 "class", "yield", "await"};
  std::vector<std::pair<std::size_t, std::size_t>> bodies;  // sig indices of { }
  for (std::size_t i = 0; i < sig.size(); ++i) {
    if (sig[i].type != js::TokType::Keyword || sig[i].text != "function") continue;
    std::size_t j = i + 1;
    if (j < sig.size() && sig[j].text == "*") continue;  // generator
    if (i > 0 && sig[i - 1].text == "async") continue;
    if (j < sig.size() && sig[j].type == js::TokType::Identifier) ++j;
    if (j >= sig.size() || sig[j].text != "(" || match[j] < 0) continue;
    std::size_t open = static_cast<std::size_t>(match[j]) + 1;
    if (open >= sig.size() || sig[open].text != "{" || match[open] < 0) continue;
    std::size_t close = static_cast<std::size_t>(match[open]);
    bool safe = true;
    for (std::size_t k = open + 1; k < close && safe; ++k) {
      if (blockers.count(sig[k].text) && sig[k].type != js::TokType::String) safe = false;
      if (sig[k].type == js::TokType::Identifier && sig[k].text == "arguments") safe = false;
    }
    if (safe) bodies.emplace_back(open, close);
  }
  if (bodies.empty()) return std::string(source);
  std::vector<std::pair<std::size_t, std::string>> splices;  // byte offset -> replacement
  for (auto [open, close] : bodies) {
    splices.emplace_back(sig[open].offset, "{ return ((() => {");
    splices.emplace_back(sig[close].offset, "})()); }");
  }
  std::sort(splices.begin(), splices.end());
  std::string out;
  out.reserve(source.size() + splices.size() * 16);
  std::size_t pos = 0;
  for (const auto& [offset, text] : splices) {
    out += source.substr(pos, offset - pos);
    out += text;
    pos = offset + 1;  // replaces a single brace
  }
  out += source.substr(pos);
  diagnostics.push_back("wrapped " + std::to_string(bodies.size()) + " function bodies");
  return out;
}

}  // namespace

InsertionResult inject_noise(std::string_view source, const SinkCatalog& catalog,
                             const NoiseOptions& options) {
  InsertionResult out;
  auto boundaries = statement_boundary_lines(source);
  if (boundaries.empty() || catalog.sinks.empty()) {
    out.text = std::string(source);
    out.diagnostics.push_back("no insertion sites available");
    return out;
  }
  SplitMix64 rng(options.seed);
  int per = std::max(1, options.lines_per_decoy);
  int n = static_cast<int>(count_lines(source));
  int decoys = std::max(1, n / per);

  auto lines = split_lines(source);
  auto host_tokens = js::tokenize(source).tokens;
  auto taken = identifier_texts(host_tokens);
  auto declared = [&] {
    auto sig = significant_tokens(host_tokens);
    return declared_names(sig, match_brackets(sig));
  }();

  std::vector<int> sites;
  for (int i = 0; i < decoys; ++i) {
    sites.push_back(boundaries[rng.below(boundaries.size())]);
  }
  std::sort(sites.begin(), sites.end());

  std::vector<std::pair<int, std::string>> insertions;
  for (int site : sites) {
    const DecoySink* chosen = nullptr;
    std::size_t start = rng.below(catalog.sinks.size());
    for (std::size_t off = 0; off < catalog.sinks.size(); ++off) {
      const DecoySink& sink = catalog.sinks[(start + off) % catalog.sinks.size()];
      bool shadowed = false;
      for (const auto& global : template_globals(sink.template_text)) {
        if (declared.count(global)) { shadowed = true; break; }
      }
      if (!shadowed) { chosen = &sink; break; }
    }
    if (!chosen) {
      out.diagnostics.push_back("line " + std::to_string(site) +
                                ": every sink shadowed by host declarations");
      continue;
    }
    std::map<std::string, std::string> names;
    for (const auto& placeholder : template_placeholders(chosen->template_text)) {
      std::string name = fresh_name(rng, "_n0x", taken);
      taken.insert(name);
      names[placeholder] = name;
    }
    std::string indent =
        site <= n && !lines.empty() ? leading_indent(lines[site - 1]) : std::string();
    insertions.emplace_back(site, indent + substitute_placeholders(chosen->template_text, names));
    out.inserted_before.push_back(site);
  }
  out.text = apply_insertions(source, insertions);
  return out;
}

InsertionResult inject_prompts(std::string_view source, const PromptLibrary& library,
                               const PromptInjectionOptions& options) {
  InsertionResult out;
  int per = std::max(1, options.lines_per_comment);
  int n = static_cast<int>(count_lines(source));
  int comments = n / per;
  if (comments == 0) {
    out.text = std::string(source);
    return out;
  }
  auto boundaries = statement_boundary_lines(source);
  if (boundaries.empty()) {
    out.text = std::string(source);
    out.diagnostics.push_back("no insertion sites available");
    return out;
  }
  SplitMix64 rng(options.seed);
  int start_kind = static_cast<int>(rng.below(2));
  std::vector<int> sites;
  for (int i = 0; i < comments; ++i) {
    sites.push_back(boundaries[rng.below(boundaries.size())]);
  }
  std::sort(sites.begin(), sites.end());

  std::vector<const PromptTemplate*> by_kind[2];
  for (const auto& p : library.prompts) {
    by_kind[static_cast<int>(p.kind)].push_back(&p);
  }
  auto lines = split_lines(source);
  std::vector<std::pair<int, std::string>> insertions;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    int site = sites[i];
    const auto& pool = by_kind[(start_kind + i) % 2];
    const PromptTemplate& tpl = *pool[rng.below(pool.size())];
    std::string indent =
        site <= n && !lines.empty() ? leading_indent(lines[site - 1]) : std::string();
    insertions.emplace_back(site, indent + tpl.text);
    out.inserted_before.push_back(site);
  }
  out.text = apply_insertions(source, insertions);
  return out;
}

ObfuscationResult obfuscate(std::string_view source, const ObfuscationOptions& options) {
  ObfuscationResult out;
  if (js::looks_minified(source)) {
    out.text = std::string(source);
    out.skipped = true;
    out.diagnostics.push_back("skipped: file looks minified");
    return out;
  }
  auto probe = js::tokenize(source);
  if (!probe.ok) {
    out.text = std::string(source);
    out.skipped = true;
    out.diagnostics.push_back("skipped: " + probe.diagnostics[0]);
    return out;
  }
  SplitMix64 rng(options.seed);
  std::string text(source);
  if (options.rename_identifiers) {
    text = rename_pass(text, rng, out.rename_map, out.diagnostics);
  }
  if (options.encode_strings) {
    text = encode_pass(text, out.diagnostics);
  }
  if (options.wrap_bodies) {
    text = wrap_pass(text, out.diagnostics);
  }
  out.text = std::move(text);
  return out;
}

int remap_line(int line, const std::vector<int>& inserted_before) {
  int shift = 0;
  for (int entry : inserted_before) {
    if (entry <= line) ++shift;
  }
  return line + shift;
}

const char* variant_name(Variant variant) {
  switch (variant) {
    case Variant::ORIGINAL:         return "original";
    case Variant::NOISE:            return "noise";
    case Variant::OBFUSCATED:       return "obfuscated";
    case Variant::NOISE_OBFUSCATED: return "noise_obfuscated";
    case Variant::PROMPT_INJECTION: return "prompt_injection";
  }
  return "original";
}

Result<Variant> parse_variant(std::string_view name) {
  std::string u = to_lower_ascii(name);
  std::replace(u.begin(), u.end(), '-', '_');
  std::replace(u.begin(), u.end(), '+', '_');
  if (u == "original") return Variant::ORIGINAL;
  if (u == "noise") return Variant::NOISE;
  if (u == "obfuscated") return Variant::OBFUSCATED;
  if (u == "noise_obfuscated") return Variant::NOISE_OBFUSCATED;
  if (u == "prompt_injection") return Variant::PROMPT_INJECTION;
  return Error{Errc::ConfigError, "unknown variant: " + std::string(name)};
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> variants = {
      Variant::ORIGINAL, Variant::NOISE, Variant::OBFUSCATED, Variant::NOISE_OBFUSCATED,
      Variant::PROMPT_INJECTION};
  return variants;
}

namespace {

struct FileOutcome {
  std::string text;
  FileTransform transform;
  std::vector<std::string> diagnostics;
};

FileOutcome augment_file(const std::string& text, uint64_t seed,
                         const AugmentationConfig& config, const SinkCatalog& catalog,
                         const PromptLibrary& library) {
  FileOutcome out;
  SplitMix64 stage(seed);
  uint64_t noise_seed = stage.next();
  uint64_t obfuscation_seed = stage.next();
  uint64_t prompt_seed = stage.next();
  switch (config.variant) {
    case Variant::ORIGINAL:
      out.text = text;
      break;
    case Variant::NOISE: {
      NoiseOptions options = config.noise;
      options.seed = noise_seed;
      auto r = inject_noise(text, catalog, options);
      out.text = std::move(r.text);
      out.transform.inserted_before = std::move(r.inserted_before);
      out.diagnostics = std::move(r.diagnostics);
      break;
    }
    case Variant::OBFUSCATED: {
      ObfuscationOptions options = config.obfuscation;
      options.seed = obfuscation_seed;
      auto r = obfuscate(text, options);
      out.text = std::move(r.text);
      out.transform.rename_map = std::move(r.rename_map);
      out.diagnostics = std::move(r.diagnostics);
      break;
    }
    case Variant::NOISE_OBFUSCATED: {
      NoiseOptions noise_options = config.noise;
      noise_options.seed = noise_seed;
      auto noisy = inject_noise(text, catalog, noise_options);
      out.transform.inserted_before = std::move(noisy.inserted_before);
      out.diagnostics = std::move(noisy.diagnostics);
      ObfuscationOptions obfuscation_options = config.obfuscation;
      obfuscation_options.seed = obfuscation_seed;
      auto r = obfuscate(noisy.text, obfuscation_options);
      out.text = std::move(r.text);
      out.transform.rename_map = std::move(r.rename_map);
      for (auto& d : r.diagnostics) out.diagnostics.push_back(std::move(d));
      break;
    }
    case Variant::PROMPT_INJECTION: {
      PromptInjectionOptions options = config.prompts;
      options.seed = prompt_seed;
      auto r = inject_prompts(text, library, options);
      out.text = std::move(r.text);
      out.transform.inserted_before = std::move(r.inserted_before);
      out.diagnostics = std::move(r.diagnostics);
      break;
    }
  }
  return out;
}

}  // namespace

AugmentedCase augment_case(const CaseFiles& files, const std::string& case_id,
                           const AugmentationConfig& config, const SinkCatalog& catalog,
                           const PromptLibrary& library) {
  AugmentedCase out;
  auto process = [&](const std::map<std::string, std::string>& side, bool vulnerable) {
    std::map<std::string, std::string> result;
    for (const auto& [path, text] : side) {
      if (!parse::is_javascript_path(path) || config.variant == Variant::ORIGINAL) {
        result[path] = text;
        if (vulnerable) out.vulnerable_transforms[path] = FileTransform{};
        continue;
      }
      uint64_t seed = derive_seed(config.global_seed, case_id, path);
      auto file = augment_file(text, seed, config, catalog, library);
      result[path] = std::move(file.text);
      if (vulnerable) out.vulnerable_transforms[path] = std::move(file.transform);
      for (auto& d : file.diagnostics) {
        out.diagnostics.push_back(path + (vulnerable ? " (vulnerable): " : " (fixed): ") + d);
      }
    }
    return result;
  };
  out.files.vulnerable = process(files.vulnerable, true);
  out.files.fixed = process(files.fixed, false);
  return out;
}

}  // namespace jsvb::augment
