#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mathel/document.hpp"

namespace mathel {

enum class DisplayMode { block, inline_text };

std::string_view to_string(DisplayMode mode);

// One math region of a document. `span` covers the region including its
// delimiters (or opening/closing tags); `content` covers raw_latex only.
struct MathSegment {
  int segment_id = 0;
  std::string raw_latex;
  Span span;
  Span content;
  Span open_tag;  // `<math ...>` or the opening `$`, `$$`, `\[`
  DisplayMode display = DisplayMode::inline_text;
  std::optional<std::string> existing_qid;

  friend bool operator==(const MathSegment&, const MathSegment&) = default;
};

enum class DiagnosticKind { unbalanced_delimiter, lex_error };

struct Diagnostic {
  DiagnosticKind kind;
  Span span;
  std::string message;
};

struct ExtractionResult {
  std::vector<MathSegment> segments;
  std::vector<Diagnostic> diagnostics;
};

// Wikitext: every `<math ...>...</math>` region (HTML comments skipped).
// LaTeX: every `$...$`, `$$...$$`, `\[...\]` and `\(...\)` region.
// Unbalanced delimiters are reported and scanning resumes after them.
ExtractionResult extract_math_segments(const RawDocument& doc);

enum class TokenKind { identifier, op, number, relation, command, ignored };

std::string_view to_string(TokenKind kind);

struct Token {
  TokenKind kind = TokenKind::ignored;
  std::string text;        // as written
  std::string symbol;      // canonical identifier key, identifiers only
  std::string decoration;  // e.g. "vec" for \vec{x} and \mathbf{x}
  Span span;               // offsets into raw_latex

  friend bool operator==(const Token&, const Token&) = default;
};

struct TokenizerOptions {
  // Backslash commands emitted as `command` tokens, e.g. "sin", "log".
  std::set<std::string> function_commands;
  // When false a run of letters such as `rmv` is one ignored token.
  bool split_multiletter = true;
  // Greek command aliases without backslash, e.g. varphi -> phi.
  std::map<std::string, std::string> greek_aliases;

  static TokenizerOptions defaults();
  friend bool operator==(const TokenizerOptions&, const TokenizerOptions&) = default;
};

struct TokenizedFormula {
  int segment_id = 0;
  std::vector<Token> tokens;
  std::vector<std::string> identifier_symbols;  // first-occurrence order
  bool is_equation = false;
  std::vector<Diagnostic> diagnostics;
};

// Total: unknown control sequences become ignored tokens plus a lex_error
// diagnostic. Token spans tile raw_latex.
TokenizedFormula tokenize_formula(std::string_view raw_latex,
                                  const TokenizerOptions& options = TokenizerOptions::defaults(),
                                  int segment_id = 0);

// Normal form used for formula matching. Drops `\,` `\;` `\!` and
// whitespace, rewrites \mathbf to \vec, braces bare decoration arguments
// and unwraps single-lexeme groups that are not command arguments.
// Idempotent.
std::string canonicalize_latex(std::string_view raw_latex);

}  // namespace mathel
