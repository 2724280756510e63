#include "mathel/linker.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "mathel/error.hpp"
#include "mathel/json.hpp"

namespace mathel {

LinkStats& LinkStats::operator+=(const LinkStats& other) {
  candidates += other.candidates;
  skipped_duplicates += other.skipped_duplicates;
  linked += other.linked;
  skipped_non_equation += other.skipped_non_equation;
  skipped_inline += other.skipped_inline;
  return *this;
}

namespace {

bool starts_with_math_tag(std::string_view tag) {
  if (tag.size() < 6 || tag.back() != '>') return false;
  std::string head(tag.substr(0, 5));
  std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
  return head == "<math";
}

}  // namespace

LinkResult insert_qid_links(const RawDocument& doc, std::span<const MathSegment> segments,
                            std::span<const TokenizedFormula> formulas,
                            const std::map<int, std::string>& formula_qids, const LinkOptions& options) {
  std::set<std::string> emitted;
  for (const MathSegment& s : segments)
    if (s.existing_qid) emitted.insert(*s.existing_qid);

  // (insert position in the input, attribute text, segment id)
  std::vector<std::tuple<std::size_t, std::string, int>> edits;
  LinkStats stats;
  for (const MathSegment& s : segments) {
    auto it = formula_qids.find(s.segment_id);
    if (it == formula_qids.end()) continue;
    if (!Qid::is_valid(it->second))
      throw Error(ErrorCode::qid_format, "segment " + std::to_string(s.segment_id) + ": '" + it->second + "'");
    std::string_view tag = std::string_view(doc.body).substr(s.open_tag.begin, s.open_tag.end - s.open_tag.begin);
    if (doc.format != DocumentFormat::wikitext || !starts_with_math_tag(tag))
      throw Error(ErrorCode::malformed_tag, "segment " + std::to_string(s.segment_id) + " has no <math> tag");
    if (s.existing_qid) continue;
    const TokenizedFormula* formula = nullptr;
    for (const TokenizedFormula& f : formulas)
      if (f.segment_id == s.segment_id) formula = &f;
    if (!formula || !formula->is_equation) {
      ++stats.skipped_non_equation;
      continue;
    }
    if (options.block_only && s.display != DisplayMode::block) {
      ++stats.skipped_inline;
      continue;
    }
    ++stats.candidates;
    if (!emitted.insert(it->second).second) {
      ++stats.skipped_duplicates;
      continue;
    }
    ++stats.linked;
    std::string attr = options.quote_attrs ? " qid=\"" + it->second + "\"" : " qid=" + it->second;
    edits.emplace_back(s.open_tag.end - 1, std::move(attr), s.segment_id);
  }

  LinkResult result;
  result.stats = stats;
  std::size_t pos = 0;
  for (auto& [at, attr, segment_id] : edits) {
    result.wikitext.append(doc.body, pos, at - pos);
    result.insertions.push_back({result.wikitext.size(), attr.size(), segment_id});
    result.wikitext += attr;
    pos = at;
  }
  result.wikitext.append(doc.body, pos);
  return result;
}

LinkResult link_session(const Session& session, const LinkOptions& options) {
  std::map<int, std::string> qids;
  for (const auto& [segment, qid] : session.formula_qids()) qids.emplace(segment, qid.str());
  return insert_qid_links(session.document(), session.segments(), session.formulas(), qids, options);
}

std::string remove_insertions(const LinkResult& result) {
  std::string out;
  std::size_t pos = 0;
  for (const LinkInsertion& ins : result.insertions) {
    out.append(result.wikitext, pos, ins.offset - pos);
    pos = ins.offset + ins.length;
  }
  out.append(result.wikitext, pos);
  return out;
}

// ---------------------------------------------------------------------------
// Seeding

std::string SeedEntry::contribution() const {
  std::string out;
  for (auto [flag, letter] : {std::pair{item, 'i'}, {formula, 'f'}, {parts, 'p'}}) {
    if (!flag) continue;
    if (!out.empty()) out += '/';
    out += letter;
  }
  return out;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::vector<SeedEntry> seeding_list(std::span<const Session* const> sessions, const FormulaCatalog& catalog,
                                    const FcMemory& memory) {
  FcMemory merged = memory;
  std::map<ConceptKey, std::set<Qid>> concepts;  // concept -> annotated identifier QIDs
  for (const Session* session : sessions) {
    for (const auto& [key, a] : session->annotations()) {
      if (a.target.kind != TargetKind::formula) continue;
      ConceptKey concept_key{a.name, a.qid};
      merged.add_variant(concept_key, session->segments()[static_cast<std::size_t>(a.target.segment_id)].raw_latex);
      auto& parts = concepts[concept_key];
      auto ids = session->annotated_identifier_qids(a.target.segment_id);
      parts.insert(ids.begin(), ids.end());
    }
  }

  std::vector<SeedEntry> out;
  for (const auto& [key, identifier_qids] : concepts) {
    SeedEntry e;
    e.name = key.name;
    e.qid = key.qid;
    e.fc_variations = merged.variant_count(key);
    const FormulaItem* item = key.qid ? catalog.find(*key.qid) : nullptr;
    if (!item) {
      e.item = e.formula = e.parts = true;
    } else {
      e.identifier_property = item->identifier_property;
      e.formula = !item->defining_formula.has_value();
      e.parts = item->has_part.empty() ||
                std::any_of(identifier_qids.begin(), identifier_qids.end(),
                            [&](const Qid& q) { return !item->has_part.count(q); });
    }
    if (e.item || e.formula || e.parts) out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const SeedEntry& a, const SeedEntry& b) {
    std::string la = lower(a.name), lb = lower(b.name);
    if (la != lb) return la < lb;
    if (a.name != b.name) return a.name < b.name;
    return compare_optional_qid(a.qid, b.qid) < 0;
  });
  return out;
}

std::string format_seeding_tsv(std::span<const SeedEntry> entries) {
  std::string out = "name\tqid\tcontribution\tfc_variations\tproperty\n";
  for (const SeedEntry& e : entries) {
    out += e.name + '\t' + (e.qid ? e.qid->str() : "") + '\t' + e.contribution() + '\t' +
           std::to_string(e.fc_variations) + '\t' +
           (e.identifier_property == IdentifierProperty::calculated_from ? "cf" : "hp") + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Annotation export

std::optional<ExportFormat> parse_export_format(std::string_view text) {
  if (text == "csv") return ExportFormat::csv;
  if (text == "json") return ExportFormat::json;
  return std::nullopt;
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string format_annotations(std::span<const AnnotationRow> rows, ExportFormat format) {
  if (format == ExportFormat::json) return Json(std::vector<AnnotationRow>(rows.begin(), rows.end())).dump(2) + "\n";
  std::string out = "target,kind,name,qid,mode,source,position,elapsed_ms\n";
  for (const AnnotationRow& r : rows) {
    out += csv_field(r.target) + ',' + std::string(to_string(r.kind)) + ',' + csv_field(r.name) + ',' +
           (r.qid ? r.qid->str() : "") + ',' + std::string(to_string(r.mode)) + ',' +
           (r.provenance.source ? std::string(to_string(*r.provenance.source)) : "manual") + ',' +
           (r.provenance.is_manual() ? "" : std::to_string(r.provenance.position)) + ',' +
           std::to_string(r.elapsed_ms) + '\n';
  }
  return out;
}

void export_annotations(const Session& session, ExportFormat format, const std::filesystem::path& path) {
  write_file(path, format_annotations(session.annotation_table(), format));
}

std::vector<AnnotationRow> parse_annotation_export(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::schema_violation, e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::schema_violation, "annotation export must be an array");
  std::vector<AnnotationRow> rows;
  for (const Json& j : doc) rows.push_back(annotation_row_from_json(j));
  return rows;
}

}  // namespace mathel
