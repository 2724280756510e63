#include "mathel/math_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <memory>

#include "mathel/symbols.hpp"

namespace mathel {

std::string_view to_string(DisplayMode mode) {
  return mode == DisplayMode::block ? "block" : "inline";
}

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::op: return "operator";
    case TokenKind::number: return "number";
    case TokenKind::relation: return "relation";
    case TokenKind::command: return "command";
    case TokenKind::ignored: return "ignored";
  }
  return "ignored";
}

namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool starts_with_ci(std::string_view text, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > text.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (lower(text[pos + i]) != prefix[i]) return false;
  return true;
}

// Length of the UTF-8 sequence starting with `lead` (1 for invalid bytes).
std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 1;
}

std::size_t codepoint_end(std::string_view s, std::size_t pos) {
  return std::min(s.size(), pos + utf8_length(static_cast<unsigned char>(s[pos])));
}

// ---------------------------------------------------------------------------
// Wikitext extraction

struct OpenTag {
  std::size_t end = 0;  // one past '>'
  bool self_closing = false;
  std::map<std::string, std::string> attributes;
};

// Parses `<math ...>` starting at `pos` (which points at '<').
std::optional<OpenTag> parse_math_open_tag(std::string_view body, std::size_t pos) {
  std::size_t i = pos + 5;  // after "<math"
  if (i < body.size() && !is_space(body[i]) && body[i] != '>' && body[i] != '/')
    return std::nullopt;
  OpenTag tag;
  while (i < body.size()) {
    while (i < body.size() && is_space(body[i])) ++i;
    if (i >= body.size()) break;
    if (body[i] == '>') {
      tag.end = i + 1;
      return tag;
    }
    if (body[i] == '/' && i + 1 < body.size() && body[i + 1] == '>') {
      tag.end = i + 2;
      tag.self_closing = true;
      return tag;
    }
    std::size_t name_begin = i;
    while (i < body.size() && !is_space(body[i]) && body[i] != '=' && body[i] != '>' &&
           body[i] != '/')
      ++i;
    std::string name;
    for (std::size_t k = name_begin; k < i; ++k) name += lower(body[k]);
    if (name.empty()) {
      ++i;  // stray '/' inside the tag
      continue;
    }
    while (i < body.size() && is_space(body[i])) ++i;
    std::string value;
    if (i < body.size() && body[i] == '=') {
      ++i;
      while (i < body.size() && is_space(body[i])) ++i;
      if (i < body.size() && (body[i] == '"' || body[i] == '\'')) {
        char quote = body[i++];
        std::size_t close = body.find(quote, i);
        if (close == std::string_view::npos) return std::nullopt;
        value = std::string(body.substr(i, close - i));
        i = close + 1;
      } else {
        std::size_t value_begin = i;
        while (i < body.size() && !is_space(body[i]) && body[i] != '>') ++i;
        value = std::string(body.substr(value_begin, i - value_begin));
      }
    }
    tag.attributes[name] = value;
  }
  return std::nullopt;
}

// Finds `</math>` (case-insensitive, optional whitespace before '>').
std::optional<Span> find_math_close(std::string_view body, std::size_t from) {
  for (std::size_t pos = body.find("</", from); pos != std::string_view::npos;
       pos = body.find("</", pos + 2)) {
    if (!starts_with_ci(body, pos, "</math")) continue;
    std::size_t i = pos + 6;
    while (i < body.size() && is_space(body[i])) ++i;
    if (i < body.size() && body[i] == '>') return Span{pos, i + 1};
  }
  return std::nullopt;
}

void extract_wikitext(std::string_view body, ExtractionResult& out) {
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t lt = body.find('<', pos);
    if (lt == std::string_view::npos) break;
    if (body.compare(lt, 4, "<!--") == 0) {
      std::size_t close = body.find("-->", lt + 4);
      pos = close == std::string_view::npos ? body.size() : close + 3;
      continue;
    }
    if (!starts_with_ci(body, lt, "<math")) {
      pos = lt + 1;
      continue;
    }
    auto tag = parse_math_open_tag(body, lt);
    if (!tag) {
      if (lt + 5 >= body.size() || is_space(body[lt + 5]) || body[lt + 5] == '>' ||
          body[lt + 5] == '/')
        out.diagnostics.push_back({DiagnosticKind::unbalanced_delimiter,
                                   {lt, std::min(body.size(), lt + 5)},
                                   "unterminated <math> opening tag"});
      pos = lt + 1;
      continue;
    }
    if (tag->self_closing) {
      pos = tag->end;
      continue;
    }
    auto close = find_math_close(body, tag->end);
    if (!close) {
      out.diagnostics.push_back({DiagnosticKind::unbalanced_delimiter,
                                 {lt, tag->end},
                                 "<math> without matching </math>"});
      pos = tag->end;
      continue;
    }
    std::size_t nested = tag->end;
    while (nested < close->begin && !starts_with_ci(body, nested, "<math")) ++nested;
    if (nested < close->begin) {
      out.diagnostics.push_back({DiagnosticKind::unbalanced_delimiter,
                                 {lt, tag->end},
                                 "<math> reopened before </math>"});
      pos = nested;
      continue;
    }
    MathSegment seg;
    seg.segment_id = static_cast<int>(out.segments.size());
    seg.span = {lt, close->end};
    seg.content = {tag->end, close->begin};
    seg.open_tag = {lt, tag->end};
    seg.raw_latex = std::string(body.substr(tag->end, close->begin - tag->end));
    if (auto it = tag->attributes.find("display"); it != tag->attributes.end()) {
      std::string v;
      for (char c : it->second) v += lower(c);
      seg.display = v == "block" ? DisplayMode::block : DisplayMode::inline_text;
    }
    if (auto it = tag->attributes.find("qid"); it != tag->attributes.end())
      seg.existing_qid = it->second;
    out.segments.push_back(std::move(seg));
    pos = close->end;
  }
}

// ---------------------------------------------------------------------------
// LaTeX extraction

// Finds an unescaped `delim` at or after `from`. Inline `$` math may not
// cross a blank line.
std::optional<std::size_t> find_latex_close(std::string_view s, std::size_t from,
                                            std::string_view delim, bool stop_at_blank_line) {
  for (std::size_t i = from; i < s.size(); ++i) {
    if (s.compare(i, delim.size(), delim) == 0) return i;
    if (s[i] == '\\') {
      ++i;  // escaped character
      continue;
    }
    if (stop_at_blank_line && s[i] == '\n') {
      std::size_t j = i + 1;
      while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\r')) ++j;
      if (j < s.size() && s[j] == '\n') return std::nullopt;
    }
  }
  return std::nullopt;
}

void extract_latex(std::string_view body, ExtractionResult& out) {
  std::size_t pos = 0;
  while (pos < body.size()) {
    char c = body[pos];
    if (c == '%') {
      std::size_t nl = body.find('\n', pos);
      pos = nl == std::string_view::npos ? body.size() : nl + 1;
      continue;
    }
    std::string_view open, close;
    DisplayMode display = DisplayMode::inline_text;
    if (c == '\\') {
      if (pos + 1 < body.size() && body[pos + 1] == '[') {
        open = "\\[", close = "\\]", display = DisplayMode::block;
      } else if (pos + 1 < body.size() && body[pos + 1] == '(') {
        open = "\\(", close = "\\)";
      } else {
        pos += 2;
        continue;
      }
    } else if (c == '$') {
      if (pos + 1 < body.size() && body[pos + 1] == '$')
        open = "$$", close = "$$", display = DisplayMode::block;
      else
        open = "$", close = "$";
    } else {
      ++pos;
      continue;
    }
    std::size_t content_begin = pos + open.size();
    auto end = find_latex_close(body, content_begin, close, open == "$");
    if (!end) {
      out.diagnostics.push_back({DiagnosticKind::unbalanced_delimiter,
                                 {pos, content_begin},
                                 "unmatched '" + std::string(open) + "'"});
      pos = content_begin;
      continue;
    }
    MathSegment seg;
    seg.segment_id = static_cast<int>(out.segments.size());
    seg.span = {pos, *end + close.size()};
    seg.content = {content_begin, *end};
    seg.open_tag = {pos, content_begin};
    seg.raw_latex = std::string(body.substr(content_begin, *end - content_begin));
    seg.display = display;
    pos = seg.span.end;
    out.segments.push_back(std::move(seg));
  }
}

}  // namespace

ExtractionResult extract_math_segments(const RawDocument& doc) {
  ExtractionResult out;
  if (doc.format == DocumentFormat::wikitext)
    extract_wikitext(doc.body, out);
  else
    extract_latex(doc.body, out);
  return out;
}

// ---------------------------------------------------------------------------
// Tokenizer

namespace {

using CommandSet = std::set<std::string, std::less<>>;

const CommandSet& spacing_commands() {
  static const CommandSet s = {",", ";", "!", ":", " ", "quad", "qquad", "enspace",
                               "thinspace", "medspace", "thickspace", "negthinspace"};
  return s;
}

const CommandSet& decoration_commands() {
  static const CommandSet s = {"vec",     "mathbf",   "boldsymbol", "bm",       "hat",
                               "bar",     "tilde",    "overline",   "widehat",  "widetilde",
                               "overrightarrow", "mathcal", "mathbb", "mathit", "mathsf",
                               "mathfrak", "mathscr", "check", "breve"};
  return s;
}

const CommandSet& derivative_commands() {
  static const CommandSet s = {"dot", "ddot", "dddot", "partial", "nabla", "prime"};
  return s;
}

// Commands whose single argument is text, not math.
const CommandSet& text_commands() {
  static const CommandSet s = {"text", "mathrm", "textrm", "textit", "textbf", "mbox",
                               "operatorname", "label", "tag", "textsf", "texttt", "hbox"};
  return s;
}

const CommandSet& relation_commands() {
  static const CommandSet s = {"leq", "le", "geq", "ge", "approx", "propto",
                               "neq", "ne", "equiv", "sim", "simeq"};
  return s;
}

const CommandSet& operator_commands() {
  static const CommandSet s = {"cdot", "times", "pm", "mp", "div", "ast", "star", "circ",
                               "cup", "cap", "wedge", "vee", "oplus", "otimes", "to",
                               "rightarrow", "leftarrow", "Rightarrow", "Leftarrow",
                               "leftrightarrow", "mapsto", "cdots", "ldots", "dots",
                               "vdots", "ddots", "mid", "parallel", "perp", "langle",
                               "rangle", "lvert", "rvert", "lVert", "rVert", "{", "}", "|"};
  return s;
}

const CommandSet& structural_commands() {
  static const CommandSet s = {
      "frac",   "dfrac",   "tfrac",   "sqrt",   "sum",      "prod",        "int",
      "iint",   "iiint",   "oint",    "left",   "right",    "big",         "Big",
      "bigg",   "Bigg",    "bigl",    "bigr",   "Bigl",     "Bigr",        "biggl",
      "biggr",  "displaystyle", "textstyle", "scriptstyle", "limits", "nolimits",
      "infty",  "begin",   "end",     "over",   "hbar",     "ell",         "overset",
      "underset", "stackrel", "binom", "choose", "not", "underbrace", "overbrace",
      "cfrac",  "forall",  "exists",  "in",     "notin",    "subset",      "subseteq",
      "setminus", "emptyset", "Re", "Im", "imath", "jmath", "dagger", "star"};
  return s;
}

const CommandSet& table_environments() {
  static const CommandSet s = {"matrix",  "pmatrix",  "bmatrix", "Bmatrix", "vmatrix",
                               "Vmatrix", "smallmatrix", "array", "tabular"};
  return s;
}

class Tokenizer {
 public:
  Tokenizer(std::string_view src, const TokenizerOptions& options, TokenizedFormula& out)
      : s_(src), opt_(options), out_(out) {}

  void run() {
    while (pos_ < s_.size()) step();
    if (depth_ > 0)
      diag({s_.size(), s_.size()}, "unclosed group");
  }

 private:
  void emit(TokenKind kind, std::size_t begin, std::size_t end, std::string symbol = {},
            std::string decoration = {}) {
    if (table_depth_ > 0 && kind != TokenKind::command && kind != TokenKind::op)
      kind = TokenKind::ignored;
    if (kind != TokenKind::identifier) symbol.clear(), decoration.clear();
    out_.tokens.push_back(Token{kind, std::string(s_.substr(begin, end - begin)),
                                std::move(symbol), std::move(decoration), {begin, end}});
    pos_ = end;
  }

  void diag(Span span, std::string message) {
    out_.diagnostics.push_back({DiagnosticKind::lex_error, span, std::move(message)});
  }

  std::string greek_symbol(std::string_view name) const {
    std::string key(name);
    if (auto it = opt_.greek_aliases.find(key); it != opt_.greek_aliases.end()) key = it->second;
    return "\\" + key;
  }

  // End offset of a control sequence starting at `p` (which holds '\').
  std::size_t control_end(std::size_t p) const {
    std::size_t i = p + 1;
    if (i >= s_.size()) return i;
    if (is_alpha(s_[i])) {
      while (i < s_.size() && is_alpha(s_[i])) ++i;
      return i;
    }
    return codepoint_end(s_, i);
  }

  // End of a balanced `{...}` group starting at `p`; s_.size() if unclosed.
  std::size_t group_end(std::size_t p) const {
    int depth = 0;
    for (std::size_t i = p; i < s_.size(); ++i) {
      if (s_[i] == '\\') {
        ++i;
        continue;
      }
      if (s_[i] == '{') ++depth;
      if (s_[i] == '}' && --depth == 0) return i + 1;
    }
    return s_.size();
  }

  std::size_t skip_spaces(std::size_t p) const {
    while (p < s_.size() && is_space(s_[p])) ++p;
    return p;
  }

  // A control sequence plus the arguments it takes, so that `x_\\text{max}`
  // is consumed as one script.
  std::size_t command_with_arguments_end(std::size_t p) const {
    std::size_t e = control_end(p);
    std::string_view name = s_.substr(p + 1, e - p - 1);
    int arity = 0;
    if (text_commands().count(name) || decoration_commands().count(name) || name == "dot" ||
        name == "ddot" || name == "sqrt")
      arity = 1;
    else if (name == "frac" || name == "dfrac" || name == "tfrac")
      arity = 2;
    for (int i = 0; i < arity; ++i) {
      std::size_t next = argument_end(e);
      if (next == e) break;
      e = next;
    }
    return e;
  }

  // One TeX argument starting at or after `p`: a group, a control sequence
  // or a single character. Returns its end, or `p` if there is none.
  std::size_t argument_end(std::size_t p) const {
    std::size_t a = skip_spaces(p);
    if (a >= s_.size()) return p;
    if (s_[a] == '{') return group_end(a);
    if (s_[a] == '\\') return command_with_arguments_end(a);
    if (s_[a] == '}') return p;
    return codepoint_end(s_, a);
  }

  void step() {
    const std::size_t start = pos_;
    const char c = s_[start];
    if (is_space(c)) {
      std::size_t e = start;
      while (e < s_.size() && is_space(s_[e])) ++e;
      return emit(TokenKind::ignored, start, e);
    }
    if (c == '%') {
      std::size_t e = s_.find('\n', start);
      return emit(TokenKind::ignored, start, e == std::string_view::npos ? s_.size() : e);
    }
    if (c == '\\') return command(start);
    if (c == '^' || c == '_') {
      std::size_t e = argument_end(start + 1);
      if (e == start + 1) diag({start, start + 1}, "script without argument");
      return emit(TokenKind::ignored, start, e);
    }
    if (c == '{') {
      ++depth_;
      return emit(TokenKind::ignored, start, start + 1);
    }
    if (c == '}') {
      if (depth_ == 0)
        diag({start, start + 1}, "unmatched '}'");
      else
        --depth_;
      return emit(TokenKind::ignored, start, start + 1);
    }
    if (is_alpha(c)) {
      if (opt_.split_multiletter)
        return emit(TokenKind::identifier, start, start + 1, std::string(1, c));
      std::size_t e = start;
      while (e < s_.size() && is_alpha(s_[e])) ++e;
      if (e - start == 1)
        return emit(TokenKind::identifier, start, e, std::string(1, c));
      diag({start, e}, "multi-letter run not split");
      return emit(TokenKind::ignored, start, e);
    }
    if (is_digit(c)) {
      std::size_t e = start;
      while (e < s_.size() && is_digit(s_[e])) ++e;
      if (e + 1 < s_.size() && s_[e] == '.' && is_digit(s_[e + 1])) {
        ++e;
        while (e < s_.size() && is_digit(s_[e])) ++e;
      }
      return emit(TokenKind::number, start, e);
    }
    if (c == '=' || c == '<' || c == '>') {
      if (c == '=' && depth_ == 0 && table_depth_ == 0) out_.is_equation = true;
      return emit(TokenKind::relation, start, start + 1);
    }
    static constexpr std::string_view kOperators = "+-*/()[]|,;:!.";
    if (kOperators.find(c) != std::string_view::npos)
      return emit(TokenKind::op, start, start + 1);
    // primes, alignment marks, ties and anything non-ASCII
    return emit(TokenKind::ignored, start, codepoint_end(s_, start));
  }

  void command(std::size_t start) {
    std::size_t name_end = control_end(start);
    if (name_end <= start + 1) {
      diag({start, start + 1}, "lone backslash");
      return emit(TokenKind::ignored, start, start + 1);
    }
    std::string name(s_.substr(start + 1, name_end - start - 1));

    if (spacing_commands().count(name) || name == "\\")
      return emit(TokenKind::ignored, start, name_end);
    if (is_greek_command(name))
      return emit(TokenKind::identifier, start, name_end, greek_symbol(name));
    if (opt_.function_commands.count(name)) return emit(TokenKind::command, start, name_end);
    if (relation_commands().count(name)) return emit(TokenKind::relation, start, name_end);
    if (operator_commands().count(name)) return emit(TokenKind::op, start, name_end);
    if (decoration_commands().count(name)) return decoration(start, name_end, name);
    if (derivative_commands().count(name)) return emit(TokenKind::ignored, start, name_end);
    if (text_commands().count(name))
      return emit(TokenKind::ignored, start, argument_end(name_end));
    if (name == "begin" || name == "end") {
      std::size_t e = argument_end(name_end);
      std::string_view env = s_.substr(name_end, e - name_end);
      auto open = env.find('{');
      auto close = env.rfind('}');
      if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
        std::string env_name(env.substr(open + 1, close - open - 1));
        if (table_environments().count(env_name)) {
          if (name == "begin")
            ++table_depth_;
          else if (table_depth_ > 0)
            --table_depth_;
        }
      }
      return emit(TokenKind::command, start, e);
    }
    if (structural_commands().count(name)) return emit(TokenKind::command, start, name_end);
    if (name.size() == 1 && !is_alpha(name[0]))
      return emit(TokenKind::ignored, start, name_end);
    diag({start, name_end}, "unknown control sequence \\" + name);
    emit(TokenKind::ignored, start, name_end);
  }

  // \vec{x}, \vec x, \mathbf{x}: one identifier token with the decoration
  // recorded. Anything more complex leaves the argument to be lexed.
  void decoration(std::size_t start, std::size_t name_end, const std::string& name) {
    std::string deco = name;
    if (name == "mathbf" || name == "boldsymbol" || name == "bm") deco = "vec";
    std::size_t arg_end = argument_end(name_end);
    std::size_t a = skip_spaces(name_end);
    if (arg_end > a) {
      std::string_view arg = s_.substr(a, arg_end - a);
      if (arg.front() == '{' && arg.size() >= 2 && arg.back() == '}') {
        arg = arg.substr(1, arg.size() - 2);
        while (!arg.empty() && is_space(arg.front())) arg.remove_prefix(1);
        while (!arg.empty() && is_space(arg.back())) arg.remove_suffix(1);
      }
      if (arg.size() == 1 && is_alpha(arg[0]))
        return emit(TokenKind::identifier, start, arg_end, std::string(arg), deco);
      if (arg.size() > 1 && arg[0] == '\\' && is_greek_command(arg.substr(1)))
        return emit(TokenKind::identifier, start, arg_end, greek_symbol(arg.substr(1)), deco);
    }
    emit(TokenKind::command, start, name_end);
  }

  std::string_view s_;
  const TokenizerOptions& opt_;
  TokenizedFormula& out_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  int table_depth_ = 0;
};

}  // namespace

TokenizerOptions TokenizerOptions::defaults() {
  TokenizerOptions o;
  o.function_commands = {"sin",  "cos",  "tan",  "cot",  "sec",    "csc",    "arcsin",
                         "arccos", "arctan", "sinh", "cosh", "tanh", "coth",  "log",
                         "ln",   "lg",   "exp",  "lim",  "max",    "min",    "sup",
                         "inf",  "det",  "dim",  "ker",  "arg",    "deg",    "gcd",
                         "Pr",   "mod",  "bmod", "pmod", "hom",    "liminf", "limsup",
                         "tr",   "sgn"};
  o.split_multiletter = true;
  o.greek_aliases = {{"varepsilon", "epsilon"}, {"vartheta", "theta"}, {"varphi", "phi"},
                     {"varrho", "rho"},         {"varsigma", "sigma"}, {"varpi", "pi"}};
  return o;
}

TokenizedFormula tokenize_formula(std::string_view raw_latex, const TokenizerOptions& options,
                                  int segment_id) {
  TokenizedFormula out;
  out.segment_id = segment_id;
  Tokenizer(raw_latex, options, out).run();
  for (const Token& t : out.tokens) {
    if (t.kind != TokenKind::identifier) continue;
    if (std::find(out.identifier_symbols.begin(), out.identifier_symbols.end(), t.symbol) ==
        out.identifier_symbols.end())
      out.identifier_symbols.push_back(t.symbol);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical form

namespace {

struct Node {
  enum class Kind { character, control_word, control_symbol, space, group } kind;
  std::string text;  // character bytes or control sequence name
  std::vector<Node> children;
  bool closed = true;
};

class CanonParser {
 public:
  explicit CanonParser(std::string_view s) : s_(s) {}

  std::vector<Node> parse() {
    std::vector<Node> nodes;
    while (pos_ < s_.size()) {
      if (s_[pos_] == '}') {
        nodes.push_back({Node::Kind::character, "}", {}, true});
        ++pos_;
        continue;
      }
      nodes.push_back(next());
    }
    return nodes;
  }

 private:
  Node next() {
    char c = s_[pos_];
    if (is_space(c)) {
      while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
      return {Node::Kind::space, {}, {}, true};
    }
    if (c == '%') {
      while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      return {Node::Kind::space, {}, {}, true};
    }
    if (c == '\\') {
      std::size_t b = ++pos_;
      if (pos_ >= s_.size()) return {Node::Kind::character, "\\", {}, true};
      if (is_alpha(s_[pos_])) {
        while (pos_ < s_.size() && is_alpha(s_[pos_])) ++pos_;
        return {Node::Kind::control_word, std::string(s_.substr(b, pos_ - b)), {}, true};
      }
      pos_ = codepoint_end(s_, pos_);
      return {Node::Kind::control_symbol, std::string(s_.substr(b, pos_ - b)), {}, true};
    }
    if (c == '{') {
      ++pos_;
      Node group{Node::Kind::group, {}, {}, false};
      while (pos_ < s_.size()) {
        if (s_[pos_] == '}') {
          ++pos_;
          group.closed = true;
          break;
        }
        group.children.push_back(next());
      }
      return group;
    }
    std::size_t b = pos_;
    pos_ = codepoint_end(s_, pos_);
    return {Node::Kind::character, std::string(s_.substr(b, pos_ - b)), {}, true};
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

int command_arity(std::string_view name) {
  static const CommandSet one = {"vec",      "hat",   "bar",          "tilde",    "overline",
                                 "widehat",  "widetilde", "overrightarrow", "dot", "ddot",
                                 "boldsymbol", "bm",  "mathcal",      "mathbb",   "mathit",
                                 "mathsf",   "mathfrak", "mathscr",   "mathrm",   "text",
                                 "textrm",   "operatorname", "sqrt",  "check",    "breve"};
  static const CommandSet two = {"frac", "dfrac", "tfrac", "cfrac", "binom"};
  if (one.count(name)) return 1;
  if (two.count(name)) return 2;
  return 0;
}

bool dropped(const Node& n) {
  if (n.kind == Node::Kind::space) return true;
  return n.kind == Node::Kind::control_symbol && (n.text == "," || n.text == ";" || n.text == "!");
}

bool ends_with_control_word(const std::string& out) {
  std::size_t i = out.size();
  while (i > 0 && is_alpha(out[i - 1])) --i;
  if (i == out.size() || i == 0 || out[i - 1] != '\\') return false;
  std::size_t backslashes = 0;
  while (i > backslashes && out[i - 1 - backslashes] == '\\') ++backslashes;
  return backslashes % 2 == 1;
}

void append(std::string& out, std::string_view piece) {
  if (piece.empty()) return;
  if (is_alpha(piece.front()) && ends_with_control_word(out)) out += ' ';
  out += piece;
}

bool single_lexeme(std::string_view s) {
  if (s.empty()) return false;
  if (s[0] == '\\') {
    if (s.size() < 2) return false;
    if (is_alpha(s[1]))
      return std::all_of(s.begin() + 1, s.end(), [](char c) { return is_alpha(c); });
    return codepoint_end(s, 1) == s.size();
  }
  if (s[0] == '{' || s[0] == '}' || is_space(s[0])) return false;
  return codepoint_end(s, 0) == s.size();
}

std::string render(const std::vector<Node>& nodes);

std::string render_node(const Node& n) {
  switch (n.kind) {
    case Node::Kind::space: return {};
    case Node::Kind::character: return n.text;
    case Node::Kind::control_symbol: return dropped(n) ? std::string{} : "\\" + n.text;
    case Node::Kind::control_word: return "\\" + (n.text == "mathbf" ? std::string("vec") : n.text);
    case Node::Kind::group: {
      std::string inner = render(n.children);
      if (!n.closed) return "{" + inner;
      if (single_lexeme(inner)) return inner;
      return "{" + inner + "}";
    }
  }
  return {};
}

bool braceable_argument(const Node& n) {
  if (n.kind == Node::Kind::character)
    return is_alpha(n.text[0]) || is_digit(n.text[0]) ||
           static_cast<unsigned char>(n.text[0]) >= 0x80;
  if (n.kind == Node::Kind::control_word) return command_arity(n.text) == 0;
  return false;
}

std::string render(const std::vector<Node>& nodes) {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    if (n.kind != Node::Kind::control_word) {
      append(out, render_node(n));
      continue;
    }
    append(out, render_node(n));
    int arity = command_arity(n.text == "mathbf" ? "vec" : n.text);
    for (int a = 0; a < arity; ++a) {
      std::size_t j = i + 1;
      while (j < nodes.size() && dropped(nodes[j])) ++j;
      if (j >= nodes.size()) break;
      const Node& arg = nodes[j];
      if (arg.kind == Node::Kind::group && arg.closed) {
        append(out, "{" + render(arg.children) + "}");
      } else if (braceable_argument(arg)) {
        append(out, "{" + render_node(arg) + "}");
      } else {
        break;
      }
      i = j;
    }
  }
  return out;
}

}  // namespace

std::string canonicalize_latex(std::string_view raw_latex) {
  return render(CanonParser(raw_latex).parse());
}

}  // namespace mathel
