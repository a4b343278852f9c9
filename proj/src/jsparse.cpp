#include "jsvb/jsparse.hpp"

#include <algorithm>
#include <cstddef>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "jsvb/jstoken.hpp"

namespace jsvb::parse {

using js::Token;
using js::TokType;

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

std::string anon_name(int line) {
  return "<anonymous:" + std::to_string(line) + ">";
}

bool is_ident(const Token& t) { return t.type == TokType::Identifier; }
bool is_punct(const Token& t, std::string_view text) {
  return t.type == TokType::Punct && t.text == text;
}
bool is_keyword(const Token& t, std::string_view text) {
  return t.type == TokType::Keyword && t.text == text;
}

// ---------------- span scanner ----------------

enum class Ctx { Stmt, Object, Class };

struct SpanScanner {
  std::vector<Token> sig;          // significant tokens (no comments)
  std::vector<std::size_t> match;  // bracket partner or npos
  ExtractResult out;

  void build(std::string_view source) {
    auto tr = js::tokenize(source);
    for (auto& d : tr.diagnostics) out.diagnostics.push_back(d);
    sig.reserve(tr.tokens.size());
    for (auto& t : tr.tokens) {
      if (t.type != TokType::Comment) sig.push_back(std::move(t));
    }
    build_matches();
  }

  void build_matches() {
    match.assign(sig.size(), npos);
    std::vector<std::size_t> stack;
    auto opener_for = [](std::string_view close) -> std::string_view {
      if (close == ")") return "(";
      if (close == "]") return "[";
      return "{";
    };
    for (std::size_t i = 0; i < sig.size(); ++i) {
      if (sig[i].type != TokType::Punct) continue;
      const std::string& t = sig[i].text;
      if (t == "(" || t == "[" || t == "{") {
        stack.push_back(i);
      } else if (t == ")" || t == "]" || t == "}") {
        if (stack.empty() || sig[stack.back()].text != opener_for(t)) {
          out.diagnostics.push_back("unbalanced '" + t + "' at line " +
                                    std::to_string(sig[i].line));
          continue;
        }
        match[stack.back()] = i;
        match[i] = stack.back();
        stack.pop_back();
      }
    }
    for (std::size_t i : stack) {
      out.diagnostics.push_back("unclosed '" + sig[i].text + "' at line " +
                                std::to_string(sig[i].line));
    }
  }

  bool is_stmt_position(std::size_t start) const {
    if (start == 0) return true;
    const Token& p = sig[start - 1];
    if (p.type == TokType::Punct) {
      return p.text == ";" || p.text == "{" || p.text == "}";
    }
    if (p.type == TokType::Keyword) {
      return p.text == "else" || p.text == "do" || p.text == "export" || p.text == "default";
    }
    return false;
  }

  // Name inferred from the assignment or property-key target to the left.
  std::string lhs_name(std::size_t start) const {
    if (start == 0) return anon_name(sig[0].line);
    const Token& p = sig[start - 1];
    int line = sig[start].line;
    if (is_punct(p, "=") && start >= 2) {
      const Token& target = sig[start - 2];
      if (is_ident(target)) return target.text;
      return anon_name(line);
    }
    if (is_punct(p, ":") && start >= 2) {
      const Token& key = sig[start - 2];
      if (is_ident(key) || key.type == TokType::Keyword) return key.text;
      if (key.type == TokType::String) return js::decode_string_token(key);
      if (key.type == TokType::Number) return key.text;
      return anon_name(line);
    }
    return anon_name(line);
  }

  Ctx classify_brace(std::size_t i) const {
    if (i == 0) return Ctx::Stmt;
    const Token& p = sig[i - 1];
    if (p.type == TokType::Punct) {
      if (p.text == ")" || p.text == ";" || p.text == "{" || p.text == "}" || p.text == "=>") {
        return Ctx::Stmt;
      }
      return Ctx::Object;
    }
    if (p.type == TokType::Keyword) {
      if (p.text == "do" || p.text == "else" || p.text == "try" || p.text == "finally") {
        return Ctx::Stmt;
      }
      return Ctx::Object;
    }
    return Ctx::Object;  // after identifier/number/string: object-ish, rare
  }

  void emit(std::string name, FunctionKind kind, std::size_t first_tok, std::size_t last_tok) {
    FunctionSpan s;
    s.name = name.empty() ? anon_name(sig[first_tok].line) : std::move(name);
    s.kind = kind;
    s.start_line = sig[first_tok].line;
    s.end_line = sig[last_tok].line;
    out.spans.push_back(std::move(s));
  }

  // `function` keyword at fk; async_idx points at a leading `async` or npos.
  std::size_t handle_function(std::size_t fk, std::size_t hi, std::size_t async_idx) {
    std::size_t start = async_idx != npos ? async_idx : fk;
    std::size_t j = fk + 1;
    if (j < hi && is_punct(sig[j], "*")) ++j;
    std::string own;
    if (j < hi && is_ident(sig[j])) {
      own = sig[j].text;
      ++j;
    }
    if (j >= hi || !is_punct(sig[j], "(") || match[j] == npos) {
      out.diagnostics.push_back("malformed function header at line " +
                                std::to_string(sig[fk].line));
      return fk + 1;
    }
    std::size_t pclose = match[j];
    std::size_t bo = pclose + 1;
    if (bo >= hi || !is_punct(sig[bo], "{") || match[bo] == npos) {
      out.diagnostics.push_back("function without body at line " +
                                std::to_string(sig[fk].line));
      return fk + 1;
    }
    std::size_t bc = match[bo];
    bool stmt = is_stmt_position(start);
    FunctionKind kind = stmt ? FunctionKind::DECLARATION : FunctionKind::FUNCTION_EXPRESSION;
    std::string name = !own.empty() ? own : (stmt ? anon_name(sig[start].line) : lhs_name(start));
    emit(std::move(name), kind, start, bc);
    scan(j + 1, pclose, Ctx::Object);
    scan(bo + 1, bc, Ctx::Stmt);
    return bc + 1;
  }

  std::size_t handle_class(std::size_t ck, std::size_t hi) {
    std::size_t j = ck + 1;
    if (j < hi && is_ident(sig[j])) ++j;
    while (j < hi) {
      const Token& t = sig[j];
      if (is_punct(t, "(") || is_punct(t, "[")) {
        if (match[j] == npos) return ck + 1;
        j = match[j] + 1;
        continue;
      }
      if (is_punct(t, "{")) break;
      ++j;
    }
    if (j >= hi || match[j] == npos) {
      out.diagnostics.push_back("class without body at line " + std::to_string(sig[ck].line));
      return ck + 1;
    }
    std::size_t bc = match[j];
    scan(j + 1, bc, Ctx::Class);
    return bc + 1;
  }

  std::size_t handle_arrow(std::size_t a, std::size_t hi) {
    if (a == 0) return a + 1;
    std::size_t p = a - 1;
    std::size_t start;
    if (is_punct(sig[p], ")")) {
      if (match[p] == npos) return a + 1;
      start = match[p];
    } else if (is_ident(sig[p])) {
      start = p;
    } else {
      return a + 1;
    }
    if (start > 0 && is_ident(sig[start - 1]) && sig[start - 1].text == "async") {
      start = start - 1;
    }
    std::string name = lhs_name(start);
    std::size_t b = a + 1;
    if (b < hi && is_punct(sig[b], "{") && match[b] != npos) {
      emit(std::move(name), FunctionKind::ARROW, start, match[b]);
      return a + 1;  // body brace is scanned by the main loop as a block
    }
    // expression body: ends at a comma, semicolon, colon or any closer of
    // an enclosing group
    std::size_t last = a;
    std::size_t k = b;
    while (k < hi) {
      const Token& t = sig[k];
      if (is_punct(t, "(") || is_punct(t, "[") || is_punct(t, "{")) {
        if (match[k] == npos) break;
        last = match[k];
        k = match[k] + 1;
        continue;
      }
      if (t.type == TokType::Punct &&
          (t.text == ")" || t.text == "]" || t.text == "}" || t.text == "," ||
           t.text == ";" || t.text == ":")) {
        break;
      }
      last = k;
      ++k;
    }
    emit(std::move(name), FunctionKind::ARROW, start, last);
    return a + 1;
  }

  static bool is_member_name_start(const Token& t) {
    return is_ident(t) || t.type == TokType::Keyword || t.type == TokType::String ||
           t.type == TokType::Number || is_punct(t, "[") || is_punct(t, "#") ||
           is_punct(t, "*");
  }

  static bool is_accessor_modifier(const Token& t) {
    return is_ident(t) &&
           (t.text == "static" || t.text == "async" || t.text == "get" || t.text == "set");
  }

  // Method shorthand: [modifiers] name '(' params ')' '{' body '}'.
  // Returns the index after the body on success, npos otherwise.
  std::size_t try_method(std::size_t i, std::size_t hi, FunctionKind kind) {
    std::size_t j = i;
    while (j + 1 < hi && is_accessor_modifier(sig[j]) && !is_punct(sig[j + 1], "(") &&
           is_member_name_start(sig[j + 1])) {
      ++j;
    }
    if (j < hi && is_punct(sig[j], "*")) ++j;
    if (j >= hi) return npos;
    std::string name;
    const Token& nt = sig[j];
    if (is_ident(nt) || nt.type == TokType::Keyword) {
      name = nt.text;
    } else if (nt.type == TokType::String) {
      name = js::decode_string_token(nt);
    } else if (nt.type == TokType::Number) {
      name = nt.text;
    } else if (is_punct(nt, "#")) {
      if (j + 1 >= hi || !is_ident(sig[j + 1])) return npos;
      name = "#" + sig[j + 1].text;
      ++j;
    } else if (is_punct(nt, "[")) {
      if (match[j] == npos) return npos;
      j = match[j];
      name = anon_name(sig[i].line);
    } else {
      return npos;
    }
    ++j;
    if (j >= hi || !is_punct(sig[j], "(") || match[j] == npos) return npos;
    std::size_t pclose = match[j];
    std::size_t bo = pclose + 1;
    if (bo >= hi || !is_punct(sig[bo], "{") || match[bo] == npos) return npos;
    std::size_t bc = match[bo];
    emit(std::move(name), kind, i, bc);
    scan(j + 1, pclose, Ctx::Object);
    scan(bo + 1, bc, Ctx::Stmt);
    return bc + 1;
  }

  void scan(std::size_t lo, std::size_t hi, Ctx ctx) {
    std::size_t i = lo;
    while (i < hi) {
      const Token& t = sig[i];
      if (is_keyword(t, "function")) {
        std::size_t async_idx =
            (i > lo && is_ident(sig[i - 1]) && sig[i - 1].text == "async") ? i - 1 : npos;
        i = handle_function(i, hi, async_idx);
        continue;
      }
      if (is_keyword(t, "class")) {
        i = handle_class(i, hi);
        continue;
      }
      if (is_punct(t, "=>")) {
        i = handle_arrow(i, hi);
        continue;
      }
      if (ctx == Ctx::Class || ctx == Ctx::Object) {
        if (is_member_name_start(t)) {
          FunctionKind kind =
              ctx == Ctx::Class ? FunctionKind::CLASS_METHOD : FunctionKind::FUNCTION_EXPRESSION;
          std::size_t after = try_method(i, hi, kind);
          if (after != npos) {
            i = after;
            continue;
          }
        }
      }
      if (is_punct(t, "{")) {
        if (match[i] == npos) {
          ++i;
          continue;
        }
        Ctx inner = classify_brace(i) == Ctx::Stmt ? Ctx::Stmt : Ctx::Object;
        scan(i + 1, match[i], inner);
        i = match[i] + 1;
        continue;
      }
      if (is_punct(t, "(") || is_punct(t, "[")) {
        if (match[i] == npos) {
          ++i;
          continue;
        }
        scan(i + 1, match[i], Ctx::Object);
        i = match[i] + 1;
        continue;
      }
      ++i;
    }
  }
};

}  // namespace

const char* function_kind_name(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::DECLARATION:         return "DECLARATION";
    case FunctionKind::FUNCTION_EXPRESSION: return "FUNCTION_EXPRESSION";
    case FunctionKind::ARROW:               return "ARROW";
    case FunctionKind::CLASS_METHOD:        return "CLASS_METHOD";
  }
  return "DECLARATION";
}

Result<FunctionKind> parse_function_kind(std::string_view name) {
  if (name == "DECLARATION") return FunctionKind::DECLARATION;
  if (name == "FUNCTION_EXPRESSION") return FunctionKind::FUNCTION_EXPRESSION;
  if (name == "ARROW") return FunctionKind::ARROW;
  if (name == "CLASS_METHOD") return FunctionKind::CLASS_METHOD;
  return Error{Errc::ParseError, "unknown function kind: " + std::string(name)};
}

ExtractResult extract_functions(std::string_view source) {
  SpanScanner scanner;
  scanner.build(source);
  scanner.scan(0, scanner.sig.size(), Ctx::Stmt);
  std::stable_sort(scanner.out.spans.begin(), scanner.out.spans.end(),
                   [](const FunctionSpan& a, const FunctionSpan& b) {
                     return a.start_line < b.start_line;
                   });
  return std::move(scanner.out);
}

// ---------------- line diff ----------------

const char* change_kind_name(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::MODIFIED: return "MODIFIED";
    case ChangeKind::INSERTED: return "INSERTED";
    case ChangeKind::DELETED:  return "DELETED";
  }
  return "MODIFIED";
}

namespace {

struct Block {
  int a, b, size;
};

struct Matcher {
  std::vector<int> a, b;
  std::vector<std::vector<int>> occurrences;  // id -> ascending positions in b

  Matcher(const std::vector<std::string>& al, const std::vector<std::string>& bl) {
    std::unordered_map<std::string_view, int> ids;
    auto intern = [&](const std::string& s) {
      auto [it, fresh] = ids.emplace(s, static_cast<int>(ids.size()));
      (void)fresh;
      return it->second;
    };
    a.reserve(al.size());
    b.reserve(bl.size());
    for (const auto& s : al) a.push_back(intern(s));
    for (const auto& s : bl) b.push_back(intern(s));
    occurrences.resize(ids.size());
    for (int j = 0; j < static_cast<int>(b.size()); ++j) occurrences[b[j]].push_back(j);
  }

  Block longest_match(int alo, int ahi, int blo, int bhi) const {
    int besti = alo, bestj = blo, bestsize = 0;
    std::unordered_map<int, int> j2len;
    for (int i = alo; i < ahi; ++i) {
      std::unordered_map<int, int> newj2len;
      for (int j : occurrences[a[i]]) {
        if (j < blo) continue;
        if (j >= bhi) break;
        auto it = j2len.find(j - 1);
        int k = (it == j2len.end() ? 0 : it->second) + 1;
        newj2len[j] = k;
        if (k > bestsize) {
          besti = i - k + 1;
          bestj = j - k + 1;
          bestsize = k;
        }
      }
      j2len = std::move(newj2len);
    }
    return {besti, bestj, bestsize};
  }

  std::vector<Block> matching_blocks() const {
    std::vector<Block> out;
    std::vector<std::array<int, 4>> queue{{0, static_cast<int>(a.size()), 0,
                                           static_cast<int>(b.size())}};
    while (!queue.empty()) {
      auto [alo, ahi, blo, bhi] = queue.back();
      queue.pop_back();
      Block m = longest_match(alo, ahi, blo, bhi);
      if (m.size == 0) continue;
      out.push_back(m);
      if (alo < m.a && blo < m.b) queue.push_back({alo, m.a, blo, m.b});
      if (m.a + m.size < ahi && m.b + m.size < bhi) {
        queue.push_back({m.a + m.size, ahi, m.b + m.size, bhi});
      }
    }
    std::sort(out.begin(), out.end(), [](const Block& x, const Block& y) {
      return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });
    // merge adjacent blocks
    std::vector<Block> merged;
    for (const Block& blk : out) {
      if (!merged.empty() && merged.back().a + merged.back().size == blk.a &&
          merged.back().b + merged.back().size == blk.b) {
        merged.back().size += blk.size;
      } else {
        merged.push_back(blk);
      }
    }
    merged.push_back({static_cast<int>(a.size()), static_cast<int>(b.size()), 0});
    return merged;
  }
};

}  // namespace

std::vector<ChangedLine> line_diff(std::string_view old_text, std::string_view new_text) {
  auto al = split_lines_keepends(old_text);
  auto bl = split_lines_keepends(new_text);
  Matcher m(al, bl);
  std::vector<ChangedLine> out;
  int i = 0, j = 0;
  for (const Block& blk : m.matching_blocks()) {
    int n_del = blk.a - i;
    int n_ins = blk.b - j;
    if (n_del > 0 && n_del == n_ins) {
      for (int k = 0; k < n_del; ++k) {
        ChangedLine c;
        c.kind = ChangeKind::MODIFIED;
        c.old_line = i + k + 1;
        c.new_line = j + k + 1;
        c.old_text = al[i + k];
        c.new_text = bl[j + k];
        out.push_back(std::move(c));
      }
    } else {
      for (int k = 0; k < n_del; ++k) {
        ChangedLine c;
        c.kind = ChangeKind::DELETED;
        c.old_line = i + k + 1;
        c.old_text = al[i + k];
        out.push_back(std::move(c));
      }
      for (int k = 0; k < n_ins; ++k) {
        ChangedLine c;
        c.kind = ChangeKind::INSERTED;
        c.new_line = j + k + 1;
        c.new_text = bl[j + k];
        out.push_back(std::move(c));
      }
    }
    i = blk.a + blk.size;
    j = blk.b + blk.size;
  }
  return out;
}

std::string apply_line_diff(std::string_view old_text, const std::vector<ChangedLine>& changes) {
  auto old_lines = split_lines_keepends(old_text);
  std::vector<std::string> out;
  std::size_t i = 1;  // 1-based old cursor
  auto copy_until = [&](std::size_t old_line) {
    while (i < old_line && i <= old_lines.size()) {
      out.push_back(old_lines[i - 1]);
      ++i;
    }
  };
  for (const ChangedLine& c : changes) {
    switch (c.kind) {
      case ChangeKind::MODIFIED:
        copy_until(static_cast<std::size_t>(*c.old_line));
        out.push_back(c.new_text);
        ++i;
        break;
      case ChangeKind::DELETED:
        copy_until(static_cast<std::size_t>(*c.old_line));
        ++i;
        break;
      case ChangeKind::INSERTED:
        while (out.size() + 1 < static_cast<std::size_t>(*c.new_line) && i <= old_lines.size()) {
          out.push_back(old_lines[i - 1]);
          ++i;
        }
        out.push_back(c.new_text);
        break;
    }
  }
  copy_until(old_lines.size() + 1);
  std::string text;
  for (const auto& l : out) text += l;
  return text;
}

// ---------------- change mapping ----------------

ChangeMapping map_changes_to_functions(const std::vector<FunctionSpan>& spans,
                                       const std::vector<ChangedLine>& changes) {
  // innermost enclosing span per line
  auto innermost = [&](int line) -> int {
    int best = -1;
    int best_len = 0;
    for (int s = 0; s < static_cast<int>(spans.size()); ++s) {
      const FunctionSpan& sp = spans[s];
      if (line < sp.start_line || line > sp.end_line) continue;
      int len = sp.end_line - sp.start_line;
      if (best < 0 || len < best_len || (len == best_len && sp.start_line > spans[best].start_line)) {
        best = s;
        best_len = len;
      }
    }
    return best;
  };

  std::map<int, std::set<int>> hits;  // span index -> old lines
  std::set<int> unattributed;
  int i = 1, j = 1;  // replay cursors, 1-based
  for (const ChangedLine& c : changes) {
    int target = 0;
    switch (c.kind) {
      case ChangeKind::MODIFIED: {
        int gap = *c.old_line - i;
        i += gap + 1;
        j += gap + 1;
        target = *c.old_line;
        break;
      }
      case ChangeKind::DELETED: {
        int gap = *c.old_line - i;
        i += gap + 1;
        j += gap;
        target = *c.old_line;
        break;
      }
      case ChangeKind::INSERTED: {
        int gap = *c.new_line - j;
        i += gap;
        j += gap + 1;
        target = std::max(1, i - 1);  // anchor: last old line before the insertion
        break;
      }
    }
    int s = innermost(target);
    if (s >= 0) {
      hits[s].insert(target);
    } else {
      unattributed.insert(target);
    }
  }

  ChangeMapping out;
  for (const auto& [s, lines] : hits) {
    FunctionChange fc;
    fc.span = spans[static_cast<std::size_t>(s)];
    fc.changed_lines.assign(lines.begin(), lines.end());
    out.functions.push_back(std::move(fc));
  }
  out.unattributed_lines.assign(unattributed.begin(), unattributed.end());
  return out;
}

std::string format_line_ranges(const ChangeMapping& mapping) {
  std::vector<std::string> parts;
  for (const FunctionChange& fc : mapping.functions) {
    std::string s = std::to_string(fc.span.start_line) + "-" + std::to_string(fc.span.end_line);
    for (int line : fc.changed_lines) {
      s += "," + std::to_string(line);
    }
    parts.push_back(std::move(s));
  }
  return join(parts, ";");
}

std::string format_line_ranges(
    const std::vector<std::pair<std::string, ChangeMapping>>& per_file) {
  if (per_file.size() == 1) return format_line_ranges(per_file[0].second);
  std::vector<std::string> parts;
  for (const auto& [path, mapping] : per_file) {
    std::string ranges = format_line_ranges(mapping);
    if (ranges.empty()) continue;
    parts.push_back(path + ":" + ranges);
  }
  return join(parts, "|");
}

// ---------------- labels ----------------

const char* function_label_name(FunctionLabel label) {
  switch (label) {
    case FunctionLabel::ONEFUNC:   return "ONEFUNC";
    case FunctionLabel::NVDCHECK:  return "NVDCHECK";
    case FunctionLabel::SUSPICION: return "SUSPICION";
  }
  return "SUSPICION";
}

Result<FunctionLabel> parse_function_label(std::string_view name) {
  if (name == "ONEFUNC") return FunctionLabel::ONEFUNC;
  if (name == "NVDCHECK") return FunctionLabel::NVDCHECK;
  if (name == "SUSPICION") return FunctionLabel::SUSPICION;
  return Error{Errc::ParseError, "unknown function label: " + std::string(name)};
}

FunctionLabel assign_label(const LabelInput& input) {
  std::size_t total = 0;
  for (const auto& [path, names] : input.vulnerable_functions) total += names.size();
  if (total == 1) return FunctionLabel::ONEFUNC;
  for (const auto& [path, names] : input.vulnerable_functions) {
    if (mentions_token(input.advisory_text, basename_of(path))) return FunctionLabel::NVDCHECK;
    for (const auto& name : names) {
      if (name.starts_with("<anonymous:")) continue;
      if (mentions_token(input.advisory_text, name)) return FunctionLabel::NVDCHECK;
    }
  }
  return FunctionLabel::SUSPICION;
}

// ---------------- project type ----------------

const char* project_type_name(ProjectType type) {
  switch (type) {
    case ProjectType::FRONTEND:  return "Frontend";
    case ProjectType::BACKEND:   return "Backend";
    case ProjectType::FULLSTACK: return "Fullstack";
  }
  return "Backend";
}

Result<ProjectType> parse_project_type(std::string_view name) {
  std::string l = to_lower_ascii(name);
  if (l == "frontend") return ProjectType::FRONTEND;
  if (l == "backend") return ProjectType::BACKEND;
  if (l == "fullstack") return ProjectType::FULLSTACK;
  return Error{Errc::ParseError, "unknown project type: " + std::string(name)};
}

namespace {

const std::unordered_set<std::string_view>& node_builtins() {
  static const std::unordered_set<std::string_view> kMods = {
      "fs", "child_process", "http", "https", "path", "os", "net", "crypto",
      "cluster", "dgram", "dns", "tls", "zlib", "vm", "worker_threads",
      "stream", "readline",
  };
  return kMods;
}

const std::unordered_set<std::string_view>& dom_globals() {
  static const std::unordered_set<std::string_view> kGlobals = {
      "document", "window", "navigator", "localStorage", "sessionStorage",
  };
  return kGlobals;
}

const std::unordered_set<std::string_view>& dom_members() {
  static const std::unordered_set<std::string_view> kMembers = {
      "getElementById", "querySelector", "querySelectorAll", "addEventListener",
      "innerHTML", "outerHTML", "createElement", "insertAdjacentHTML",
  };
  return kMembers;
}

std::string strip_node_prefix(std::string mod) {
  if (mod.starts_with("node:")) return mod.substr(5);
  return mod;
}

void scan_js_signals(const std::string& path, const std::string& text,
                     std::vector<std::string>& backend, std::vector<std::string>& frontend) {
  auto tr = js::tokenize(text);
  std::vector<Token> sig;
  for (auto& t : tr.tokens) {
    if (t.type != TokType::Comment) sig.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const Token& t = sig[i];
    if (is_ident(t) && t.text == "require" && i + 3 < sig.size() &&
        is_punct(sig[i + 1], "(") && sig[i + 2].type == TokType::String &&
        is_punct(sig[i + 3], ")")) {
      std::string mod = strip_node_prefix(js::decode_string_token(sig[i + 2]));
      if (node_builtins().count(mod)) {
        backend.push_back(path + ": require('" + mod + "')");
      }
    }
    if ((is_keyword(t, "import") || (is_ident(t) && t.text == "from")) && i + 1 < sig.size() &&
        sig[i + 1].type == TokType::String) {
      std::string mod = strip_node_prefix(js::decode_string_token(sig[i + 1]));
      if (node_builtins().count(mod)) {
        backend.push_back(path + ": import '" + mod + "'");
      }
    }
    bool after_dot = i > 0 && (is_punct(sig[i - 1], ".") || is_punct(sig[i - 1], "?."));
    if (is_ident(t) && !after_dot && dom_globals().count(t.text)) {
      frontend.push_back(path + ": global " + t.text);
    }
    if (is_ident(t) && after_dot && dom_members().count(t.text)) {
      frontend.push_back(path + ": ." + t.text);
    }
  }
}

void scan_manifest_signals(const std::string& path, const std::string& text,
                           std::vector<std::string>& backend,
                           std::vector<std::string>& frontend) {
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return;
  if (doc.contains("engines") && doc["engines"].is_object() && doc["engines"].contains("node")) {
    backend.push_back(path + ": engines.node");
  }
  if (doc.contains("browser")) frontend.push_back(path + ": browser field");
  static const char* kServerDeps[] = {"express", "koa", "fastify", "hapi", "restify"};
  static const char* kUiDeps[] = {"react", "vue", "angular", "svelte", "jquery"};
  for (const char* key : {"dependencies", "devDependencies"}) {
    if (!doc.contains(key) || !doc[key].is_object()) continue;
    for (const char* dep : kServerDeps) {
      if (doc[key].contains(dep)) backend.push_back(path + ": depends on " + dep);
    }
    for (const char* dep : kUiDeps) {
      if (doc[key].contains(dep)) frontend.push_back(path + ": depends on " + dep);
    }
  }
}

}  // namespace

ProjectTypeResult classify_project_type(const std::map<std::string, std::string>& files,
                                        const std::vector<std::string>& all_paths) {
  std::vector<std::string> backend, frontend;
  for (const auto& [path, text] : files) {
    if (is_javascript_path(path)) {
      scan_js_signals(path, text, backend, frontend);
    } else if (basename_of(path) == "package.json") {
      scan_manifest_signals(path, text, backend, frontend);
    }
  }
  for (const auto& p : all_paths) {
    std::string lower = to_lower_ascii(p);
    if (lower.ends_with(".html") || lower.ends_with(".htm")) {
      frontend.push_back(p + ": html document");
    }
  }
  ProjectTypeResult out;
  if (!backend.empty() && !frontend.empty()) {
    out.type = ProjectType::FULLSTACK;
  } else if (!frontend.empty()) {
    out.type = ProjectType::FRONTEND;
  } else if (!backend.empty()) {
    out.type = ProjectType::BACKEND;
  } else {
    out.type = ProjectType::BACKEND;
    out.low_confidence = true;
  }
  out.evidence = std::move(backend);
  for (auto& e : frontend) out.evidence.push_back(std::move(e));
  return out;
}

const char* split_name(Split split) {
  return split == Split::COMPLETE ? "full" : "dn";
}

bool in_denoised_split(FunctionLabel label) {
  return label == FunctionLabel::ONEFUNC || label == FunctionLabel::NVDCHECK;
}

bool is_javascript_path(std::string_view path) {
  std::string lower = to_lower_ascii(path);
  return lower.ends_with(".js") || lower.ends_with(".mjs") || lower.ends_with(".cjs");
}

}  // namespace jsvb::parse
