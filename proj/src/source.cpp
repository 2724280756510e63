#include "mathel/source.hpp"
#include "mathel/symbols.hpp"

#include <algorithm>
#include <array>

namespace mathel {

std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::arxiv: return "arxiv";
    case SourceKind::wikipedia: return "wikipedia";
    case SourceKind::wikidata: return "wikidata";
    case SourceKind::wikidata_fuzzy: return "wikidata_fuzzy";
    case SourceKind::wikidata_parts: return "wikidata_parts";
    case SourceKind::fc_memory: return "fc_memory";
    case SourceKind::word_window: return "word_window";
    case SourceKind::user_input: return "user_input";
  }
  return "unknown";
}

std::string_view display_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::arxiv: return "arXiv";
    case SourceKind::wikipedia: return "Wikipedia";
    case SourceKind::wikidata: return "Wikidata";
    case SourceKind::wikidata_fuzzy: return "Wikidata fuzzy";
    case SourceKind::wikidata_parts: return "Wikidata parts";
    case SourceKind::fc_memory: return "FC memory";
    case SourceKind::word_window: return "Word window";
    case SourceKind::user_input: return "User input";
  }
  return "Unknown";
}

std::optional<SourceKind> parse_source_kind(std::string_view text) {
  for (SourceKind kind : kAllSources)
    if (to_string(kind) == text) return kind;
  return std::nullopt;
}

namespace {

constexpr std::array<std::string_view, 40> kGreek = {
    "alpha",   "beta",     "gamma",  "delta",    "epsilon", "varepsilon", "zeta",
    "eta",     "theta",    "vartheta", "iota",   "kappa",   "lambda",     "mu",
    "nu",      "xi",       "pi",     "varpi",    "rho",     "varrho",     "sigma",
    "varsigma", "tau",     "upsilon", "phi",     "varphi",  "chi",        "psi",
    "omega",   "Gamma",    "Delta",  "Theta",    "Lambda",  "Xi",         "Pi",
    "Sigma",   "Upsilon",  "Phi",    "Psi",      "Omega",
};

}  // namespace

bool is_greek_command(std::string_view name) {
  return std::find(kGreek.begin(), kGreek.end(), name) != kGreek.end();
}

bool is_identifier_symbol(std::string_view symbol) {
  if (symbol.size() == 1) {
    char c = symbol[0];
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  }
  return symbol.size() > 1 && symbol[0] == '\\' && is_greek_command(symbol.substr(1));
}

}  // namespace mathel
