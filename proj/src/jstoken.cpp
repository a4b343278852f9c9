#include "jsvb/jstoken.hpp"

#include <array>
#include <unordered_set>

namespace jsvb::js {

namespace {

const std::unordered_set<std::string_view>& reserved_words() {
  static const std::unordered_set<std::string_view> kWords = {
      "break", "case", "catch", "class", "const", "continue", "debugger",
      "default", "delete", "do", "else", "export", "extends", "false",
      "finally", "for", "function", "if", "import", "in", "instanceof",
      "let", "new", "null", "return", "super", "switch", "this", "throw",
      "true", "try", "typeof", "var", "void", "while", "with", "yield",
      "await",
  };
  return kWords;
}

bool ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}

bool ident_part(unsigned char c) {
  return ident_start(c) || (c >= '0' && c <= '9');
}

bool digit(unsigned char c) { return c >= '0' && c <= '9'; }

// Multi-byte punctuators, longest first.
const std::array<std::string_view, 33> kPuncts3plus = {
    ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "??=",
    "=>", "==", "!=", "<=", ">=", "&&", "||", "??", "?.", "++", "--", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "**",
};

// Can a regex literal start after this token?
bool regex_allowed_after(const Token* prev) {
  if (!prev) return true;
  switch (prev->type) {
    case TokType::Identifier:
    case TokType::Number:
    case TokType::String:
    case TokType::Template:
    case TokType::Regex:
      return false;
    case TokType::Keyword:
      // value-like keywords end an expression
      return !(prev->text == "this" || prev->text == "super" || prev->text == "null" ||
               prev->text == "true" || prev->text == "false");
    case TokType::Punct:
      if (prev->text == ")" || prev->text == "]") return false;
      return true;  // includes '}' (statement-end heuristic)
    case TokType::Comment:
      return true;  // callers never pass comments
  }
  return true;
}

struct Scanner {
  std::string_view src;
  std::size_t i = 0;
  int line = 1;
  int col = 1;
  TokenizeResult out;
  // Index into out.tokens (SIZE_MAX = none); an index survives vector growth.
  std::size_t prev_sig_idx = SIZE_MAX;
  // Template holes: each entry is the brace depth inside the current hole.
  std::vector<int> hole_depth;

  const Token* prev_significant() const {
    return prev_sig_idx == SIZE_MAX ? nullptr : &out.tokens[prev_sig_idx];
  }

  char at(std::size_t k) const { return k < src.size() ? src[k] : '\0'; }

  void advance(std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  }

  void emit(TokType type, std::size_t start, std::size_t end, int tline, int tcol) {
    Token t;
    t.type = type;
    t.text = std::string(src.substr(start, end - start));
    t.line = tline;
    t.col = tcol;
    t.offset = start;
    out.tokens.push_back(std::move(t));
    if (type != TokType::Comment) prev_sig_idx = out.tokens.size() - 1;
  }

  void diag(const std::string& msg) {
    out.diagnostics.push_back(msg + " at line " + std::to_string(line));
    out.ok = false;
  }

  void scan_line_comment() {
    std::size_t start = i;
    int l = line, c = col;
    while (i < src.size() && src[i] != '\n') advance(1);
    emit(TokType::Comment, start, i, l, c);
  }

  void scan_block_comment() {
    std::size_t start = i;
    int l = line, c = col;
    advance(2);
    for (;;) {
      if (i >= src.size()) {
        diag("unterminated block comment");
        break;
      }
      if (src[i] == '*' && at(i + 1) == '/') {
        advance(2);
        break;
      }
      advance(1);
    }
    emit(TokType::Comment, start, i, l, c);
  }

  void scan_string(char quote) {
    std::size_t start = i;
    int l = line, c = col;
    advance(1);
    for (;;) {
      if (i >= src.size()) {
        diag("unterminated string");
        break;
      }
      char ch = src[i];
      if (ch == '\\') {
        advance(2);
        continue;
      }
      if (ch == quote) {
        advance(1);
        break;
      }
      if (ch == '\n') {
        diag("unterminated string");
        break;
      }
      advance(1);
    }
    emit(TokType::String, start, i, l, c);
  }

  // Scans one template chunk starting at '`' or at the '}' closing a hole.
  void scan_template_chunk() {
    std::size_t start = i;
    int l = line, c = col;
    if (src[i] == '}') {
      hole_depth.pop_back();
    }
    advance(1);  // leading ` or }
    for (;;) {
      if (i >= src.size()) {
        diag("unterminated template literal");
        break;
      }
      char ch = src[i];
      if (ch == '\\') {
        advance(2);
        continue;
      }
      if (ch == '`') {
        advance(1);
        break;
      }
      if (ch == '$' && at(i + 1) == '{') {
        advance(2);
        hole_depth.push_back(0);
        break;
      }
      advance(1);
    }
    emit(TokType::Template, start, i, l, c);
  }

  // Returns true when a regex token was produced; false means treat '/'
  // as punctuation.
  bool try_scan_regex() {
    std::size_t start = i;
    std::size_t k = i + 1;
    bool in_class = false;
    for (;;) {
      if (k >= src.size() || src[k] == '\n') return false;
      char ch = src[k];
      if (ch == '\\') {
        k += 2;
        continue;
      }
      if (ch == '[') in_class = true;
      else if (ch == ']') in_class = false;
      else if (ch == '/' && !in_class) {
        ++k;
        break;
      }
      ++k;
    }
    while (k < src.size() && ident_part(static_cast<unsigned char>(src[k]))) ++k;
    int l = line, c = col;
    advance(k - i);
    emit(TokType::Regex, start, k, l, c);
    return true;
  }

  void scan_number() {
    std::size_t start = i;
    int l = line, c = col;
    advance(1);
    while (i < src.size()) {
      char ch = src[i];
      if (ident_part(static_cast<unsigned char>(ch)) || ch == '.') {
        advance(1);
        continue;
      }
      if ((ch == '+' || ch == '-') && (src[i - 1] == 'e' || src[i - 1] == 'E') &&
          !src.substr(start, 2).starts_with("0x") && !src.substr(start, 2).starts_with("0X")) {
        advance(1);
        continue;
      }
      break;
    }
    emit(TokType::Number, start, i, l, c);
  }

  void scan_identifier() {
    std::size_t start = i;
    int l = line, c = col;
    while (i < src.size() && ident_part(static_cast<unsigned char>(src[i]))) advance(1);
    std::string_view word = src.substr(start, i - start);
    emit(is_reserved_word(word) ? TokType::Keyword : TokType::Identifier, start, i, l, c);
  }

  void scan_punct() {
    int l = line, c = col;
    std::size_t start = i;
    std::string_view rest = src.substr(i);
    for (std::string_view p : kPuncts3plus) {
      if (rest.starts_with(p)) {
        advance(p.size());
        emit(TokType::Punct, start, i, l, c);
        return;
      }
    }
    advance(1);
    emit(TokType::Punct, start, i, l, c);
  }

  void run() {
    while (i < src.size()) {
      char ch = src[i];
      if (ch == '\n' || ch == ' ' || ch == '\t' || ch == '\r' || ch == '\v' || ch == '\f') {
        advance(1);
        continue;
      }
      if (ch == '/' && at(i + 1) == '/') {
        scan_line_comment();
        continue;
      }
      if (ch == '/' && at(i + 1) == '*') {
        scan_block_comment();
        continue;
      }
      if (ch == '\'' || ch == '"') {
        scan_string(ch);
        continue;
      }
      if (ch == '`') {
        scan_template_chunk();
        continue;
      }
      if (ch == '}' && !hole_depth.empty() && hole_depth.back() == 0) {
        scan_template_chunk();
        continue;
      }
      if (ch == '{' && !hole_depth.empty()) ++hole_depth.back();
      if (ch == '}' && !hole_depth.empty()) --hole_depth.back();
      if (ch == '/') {
        if (regex_allowed_after(prev_significant()) && try_scan_regex()) continue;
        scan_punct();
        continue;
      }
      if (digit(static_cast<unsigned char>(ch)) ||
          (ch == '.' && digit(static_cast<unsigned char>(at(i + 1))))) {
        scan_number();
        continue;
      }
      if (ident_start(static_cast<unsigned char>(ch))) {
        scan_identifier();
        continue;
      }
      scan_punct();
    }
    if (!hole_depth.empty()) diag("unterminated template hole");
  }
};

int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

void append_utf8(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

bool is_reserved_word(std::string_view word) {
  return reserved_words().count(word) > 0;
}

TokenizeResult tokenize(std::string_view source) {
  Scanner s;
  s.src = source;
  s.out.tokens.reserve(source.size() / 4 + 16);
  s.run();
  return std::move(s.out);
}

std::string decode_string_token(const Token& token) {
  std::string_view body(token.text);
  if (body.size() >= 2) body = body.substr(1, body.size() - 2);
  std::string out;
  out.reserve(body.size());
  for (std::size_t k = 0; k < body.size();) {
    char c = body[k];
    if (c != '\\') {
      out.push_back(c);
      ++k;
      continue;
    }
    if (k + 1 >= body.size()) break;
    char e = body[k + 1];
    k += 2;
    switch (e) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case 'b': out.push_back('\b'); break;
      case 'f': out.push_back('\f'); break;
      case 'v': out.push_back('\v'); break;
      case '0': out.push_back('\0'); break;
      case '\n': break;  // line continuation
      case 'x': {
        if (k + 1 < body.size() && hex_val(body[k]) >= 0 && hex_val(body[k + 1]) >= 0) {
          out.push_back(static_cast<char>(hex_val(body[k]) * 16 + hex_val(body[k + 1])));
          k += 2;
        }
        break;
      }
      case 'u': {
        if (k < body.size() && body[k] == '{') {
          std::size_t close = body.find('}', k);
          if (close != std::string_view::npos) {
            uint32_t cp = 0;
            for (std::size_t p = k + 1; p < close; ++p) cp = cp * 16 + hex_val(body[p]);
            append_utf8(out, cp);
            k = close + 1;
          }
        } else if (k + 4 <= body.size()) {
          uint32_t cp = 0;
          bool ok = true;
          for (std::size_t p = k; p < k + 4; ++p) {
            int v = hex_val(body[p]);
            if (v < 0) { ok = false; break; }
            cp = cp * 16 + static_cast<uint32_t>(v);
          }
          if (ok) {
            append_utf8(out, cp);
            k += 4;
          }
        }
        break;
      }
      default:
        out.push_back(e);
        break;
    }
  }
  return out;
}

bool looks_minified(std::string_view source, std::size_t max_line_len) {
  std::size_t run = 0;
  for (char c : source) {
    if (c == '\n') {
      run = 0;
    } else if (++run > max_line_len) {
      return true;
    }
  }
  return false;
}

}  // namespace jsvb::js
