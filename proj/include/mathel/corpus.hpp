#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mathel/document.hpp"
#include "mathel/qid.hpp"
#include "mathel/source.hpp"

namespace mathel {

// ---------------------------------------------------------------------------
// Identifier candidate lists

struct IdentifierCandidate {
  std::string name;
  std::optional<Qid> qid;
  int frequency_rank = 1;

  friend bool operator==(const IdentifierCandidate&, const IdentifierCandidate&) = default;
};

// Frequency-ranked name candidates per identifier symbol for one source.
// Greek symbols are keyed by their LaTeX command, e.g. `\alpha`.
class IdentifierCatalog {
 public:
  using Entries = std::map<std::string, std::vector<IdentifierCandidate>>;

  IdentifierCatalog() = default;
  // Validates symbols, QIDs and strictly increasing ranks.
  IdentifierCatalog(SourceKind source_kind, Entries entries);

  SourceKind source_kind() const noexcept { return source_kind_; }
  std::span<const IdentifierCandidate> candidates(std::string_view symbol) const;
  const Entries& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

  friend bool operator==(const IdentifierCatalog&, const IdentifierCatalog&) = default;

 private:
  SourceKind source_kind_ = SourceKind::arxiv;
  Entries entries_;
};

// TSV rows `symbol<TAB>name<TAB>qid-or-empty<TAB>rank`, `#` comment lines.
// Duplicate (symbol, name) rows keep the best rank.
IdentifierCatalog load_identifier_catalog(const std::filesystem::path& path,
                                          SourceKind source_kind);
IdentifierCatalog parse_identifier_catalog(std::string_view text, SourceKind source_kind);
void save_identifier_catalog(const IdentifierCatalog& catalog, const std::filesystem::path& path);
std::string format_identifier_catalog(const IdentifierCatalog& catalog);

// ---------------------------------------------------------------------------
// Knowledge-base formula items

enum class IdentifierProperty { has_part, calculated_from };

std::string_view to_string(IdentifierProperty property);

struct FormulaItem {
  Qid qid;
  std::string name;
  std::optional<std::string> defining_formula;  // absent when the item has none
  std::set<Qid> has_part;
  IdentifierProperty identifier_property = IdentifierProperty::has_part;

  friend bool operator==(const FormulaItem&, const FormulaItem&) = default;
};

class FormulaCatalog {
 public:
  FormulaCatalog() = default;
  // Throws Error(duplicate_qid) on a repeated QID.
  explicit FormulaCatalog(std::vector<FormulaItem> items);

  const std::vector<FormulaItem>& items() const noexcept { return items_; }
  const FormulaItem* find(const Qid& qid) const;
  std::size_t size() const noexcept { return items_.size(); }

  friend bool operator==(const FormulaCatalog& a, const FormulaCatalog& b) {
    return a.items_ == b.items_;
  }

 private:
  std::vector<FormulaItem> items_;
  std::map<Qid, std::size_t> index_;
};

// JSON array of {qid, name, defining_formula, has_part: [qid...]}.
FormulaCatalog load_formula_catalog(const std::filesystem::path& path);
FormulaCatalog parse_formula_catalog(std::string_view json_text);
void save_formula_catalog(const FormulaCatalog& catalog, const std::filesystem::path& path);
std::string format_formula_catalog(const FormulaCatalog& catalog);

// ---------------------------------------------------------------------------
// Formula Concept memory

struct ConceptKey {
  std::string name;
  std::optional<Qid> qid;

  friend bool operator==(const ConceptKey&, const ConceptKey&) = default;
  friend bool operator<(const ConceptKey& a, const ConceptKey& b) {
    if (a.name != b.name) return a.name < b.name;
    return compare_optional_qid(a.qid, b.qid) < 0;
  }
};

// Past formula annotations: LaTeX variants collected per (name, QID).
// Variants are unique by canonical form; the first spelling seen is kept.
class FcMemory {
 public:
  // canonical form -> variant as first written
  using Variants = std::map<std::string, std::string>;

  // Returns false when an equivalent variant is already stored.
  bool add_variant(const ConceptKey& key, std::string_view latex);
  // Registers a concept with no variants yet.
  void add_concept(const ConceptKey& key);

  const std::map<ConceptKey, Variants>& concepts() const noexcept { return concepts_; }
  const Variants* variants(const ConceptKey& key) const;
  std::size_t variant_count(const ConceptKey& key) const;
  bool empty() const noexcept { return concepts_.empty(); }

  friend bool operator==(const FcMemory&, const FcMemory&) = default;

 private:
  std::map<ConceptKey, Variants> concepts_;
};

// JSON array of {name, qid, variants: [latex...]}.
FcMemory load_fc_memory(const std::filesystem::path& path);
FcMemory parse_fc_memory(std::string_view json_text);
void save_fc_memory(const FcMemory& memory, const std::filesystem::path& path);
std::string format_fc_memory(const FcMemory& memory);

// ---------------------------------------------------------------------------
// Articles

struct FetchOptions {
  // Appended to an http(s) endpoint; `{title}` is replaced by the
  // URL-encoded title.
  std::string url_template = "/w/index.php?title={title}&action=raw";
  int max_retries = 2;
  std::chrono::seconds max_retry_wait{30};
  std::chrono::seconds timeout{20};
  // Replaceable for tests.
  std::function<void(std::chrono::seconds)> sleep;
  std::function<std::int64_t()> now_ms;
};

// Environment variable consulted by the service and CLI for the wiki base URL.
inline constexpr const char* kWikiBaseUrlEnv = "MATHEL_WIKI_BASE_URL";

// `endpoint` is an http(s) base URL, a directory holding `<title>.wiki` /
// `.tex` / `.txt` files, or a single file. Throws Error(not_found),
// Error(network_error) or Error(rate_limited).
RawDocument fetch_article(const std::string& title, const std::string& endpoint,
                          const FetchOptions& options = {});

// Reads one article file; `.tex` selects LaTeX, anything else Wikitext.
RawDocument load_document(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace mathel
