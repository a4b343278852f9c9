#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "jsvb/common.hpp"

namespace jsvb::js {

enum class TokType {
  Identifier,
  Keyword,    // reserved words only; contextual words (async, get, of...) stay Identifier
  Punct,
  Number,
  String,     // quoted literal, quotes included in text
  Template,   // one chunk of a template literal, delimiters included:
              //   `...`   whole template without holes
              //   `...${  opening chunk before a hole
              //   }...${  chunk between holes
              //   }...`   closing chunk
  Regex,
  Comment,    // // or /* */, delimiters included
};

struct Token {
  TokType type;
  std::string text;     // raw source slice
  int line = 1;         // 1-based line of first byte
  int col = 1;          // 1-based byte column of first byte
  std::size_t offset = 0;  // byte offset of first byte
};

struct TokenizeResult {
  std::vector<Token> tokens;
  std::vector<std::string> diagnostics;  // unterminated strings/comments/templates
  bool ok = true;                        // false iff diagnostics non-empty
};

// Single-pass scanner. Regex-vs-division is decided from the previous
// significant token; '}' is treated as statement end (regex may follow),
// ')' and ']' as expression end (division follows). That heuristic is
// wrong for e.g. `if (x) /re/.test(s)` but holds for ordinary code.
TokenizeResult tokenize(std::string_view source);

bool is_reserved_word(std::string_view word);

// Decoded value of a String token (escape sequences resolved, quotes
// stripped). Non-ASCII bytes pass through untouched; \u{...} and \uHHHH
// are UTF-8 encoded.
std::string decode_string_token(const Token& token);

// True when any single source line exceeds the threshold; such files are
// treated as minified and excluded from function-level annotation.
bool looks_minified(std::string_view source, std::size_t max_line_len = 5000);

}  // namespace jsvb::js
