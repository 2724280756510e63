#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mathel/corpus.hpp"
#include "mathel/math_parser.hpp"
#include "mathel/session.hpp"

namespace mathel {

struct LinkStats {
  std::size_t candidates = 0;
  std::size_t skipped_duplicates = 0;
  std::size_t linked = 0;
  std::size_t skipped_non_equation = 0;
  std::size_t skipped_inline = 0;  // only with block_only

  LinkStats& operator+=(const LinkStats& other);
  friend bool operator==(const LinkStats&, const LinkStats&) = default;
};

struct LinkOptions {
  bool quote_attrs = false;  // qid="Q1" instead of qid=Q1
  bool block_only = false;
};

struct LinkInsertion {
  std::size_t offset = 0;  // into the output text
  std::size_t length = 0;
  int segment_id = 0;
};

struct LinkResult {
  std::string wikitext;
  LinkStats stats;
  std::vector<LinkInsertion> insertions;
};

// Adds a qid attribute to the opening <math> tag of each annotated equation,
// in document order, skipping QIDs already present earlier in the document.
// `formula_qids` maps segment id to the QID text. Throws MalformedTag for an
// annotated segment without a <math> opening tag, QidFormatError for a bad
// QID.
LinkResult insert_qid_links(const RawDocument& doc, std::span<const MathSegment> segments,
                            std::span<const TokenizedFormula> formulas,
                            const std::map<int, std::string>& formula_qids,
                            const LinkOptions& options = {});

LinkResult link_session(const Session& session, const LinkOptions& options = {});

// Removes the inserted attributes again.
std::string remove_insertions(const LinkResult& result);

struct SeedEntry {
  std::string name;
  std::optional<Qid> qid;
  bool item = false;
  bool formula = false;
  bool parts = false;
  std::size_t fc_variations = 0;
  IdentifierProperty identifier_property = IdentifierProperty::has_part;

  std::string contribution() const;  // e.g. "i/f/p"
  friend bool operator==(const SeedEntry&, const SeedEntry&) = default;
};

// Formula concepts annotated in `sessions` whose catalog item is missing,
// lacks a defining formula, or lacks has-part links to the annotated
// identifiers. Variants are counted over `memory` merged with the annotated
// formulae. Sorted by name, case-insensitively.
std::vector<SeedEntry> seeding_list(std::span<const Session* const> sessions,
                                    const FormulaCatalog& catalog, const FcMemory& memory);

// Columns: name, qid, contribution, fc_variations, property (hp|cf).
std::string format_seeding_tsv(std::span<const SeedEntry> entries);

enum class ExportFormat { csv, json };

std::optional<ExportFormat> parse_export_format(std::string_view text);

// Columns: target, kind, name, qid, mode, source, position, elapsed_ms.
std::string format_annotations(std::span<const AnnotationRow> rows, ExportFormat format);
void export_annotations(const Session& session, ExportFormat format, const std::filesystem::path& path);
// Reads a JSON export back.
std::vector<AnnotationRow> parse_annotation_export(std::string_view json_text);

}  // namespace mathel
