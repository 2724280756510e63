#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace mathel {

// Recommendation sources. Declaration order is the canonical display order:
// identifier sources first, then the formula-only sources, then the two
// context sources shared by both target kinds.
enum class SourceKind {
  arxiv,
  wikipedia,
  wikidata,
  wikidata_fuzzy,
  wikidata_parts,
  fc_memory,
  word_window,
  user_input,
};

inline constexpr std::array<SourceKind, 8> kAllSources = {
    SourceKind::arxiv,          SourceKind::wikipedia,      SourceKind::wikidata,
    SourceKind::wikidata_fuzzy, SourceKind::wikidata_parts, SourceKind::fc_memory,
    SourceKind::word_window,    SourceKind::user_input,
};

// snake_case wire name, e.g. "wikidata_fuzzy".
std::string_view to_string(SourceKind kind);
// Human-facing name, e.g. "Wikidata fuzzy".
std::string_view display_name(SourceKind kind);
std::optional<SourceKind> parse_source_kind(std::string_view text);

}  // namespace mathel
