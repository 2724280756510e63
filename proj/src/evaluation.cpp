#include "mathel/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace mathel {

PositionHistogram& PositionHistogram::operator+=(const PositionHistogram& other) {
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  return *this;
}

std::int64_t cg(const PositionHistogram& hist) {
  std::int64_t sum = 0;
  for (std::int64_t c : hist.counts) sum += c;
  return sum;
}

double dcg(const PositionHistogram& hist) {
  double sum = 0.0;
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    sum += static_cast<double>(hist.counts[i]) / std::log2(static_cast<double>(i) + 2.0);
  return sum;
}

const SourceRow* SourceReport::find(TargetKind kind, SourceKind source) const {
  const auto& rows = kind == TargetKind::identifier ? identifiers : formulae;
  for (const SourceRow& row : rows)
    if (row.hist.source == source) return &row;
  return nullptr;
}

namespace {

bool is_annotation(const AnnotationEvent& e) {
  return e.kind == EventKind::accept_recommendation || e.kind == EventKind::manual_insert;
}

std::vector<SourceRow> finish_rows(std::map<SourceKind, SourceRow>& rows) {
  std::vector<SourceRow> out;
  for (SourceKind kind : kAllSources) {
    auto it = rows.find(kind);
    if (it == rows.end()) continue;
    SourceRow& row = it->second;
    row.hist.source = kind;
    row.cg = cg(row.hist);
    row.dcg = dcg(row.hist);
    out.push_back(row);
  }
  return out;
}

std::string fixed(double value, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << value;
  return out.str();
}

}  // namespace

std::vector<AnnotationEvent> effective_events(std::span<const AnnotationEvent> log) {
  std::set<std::uint64_t> reverted;
  for (const AnnotationEvent& e : log)
    if (e.kind == EventKind::undo && e.reverts) reverted.insert(*e.reverts);
  std::vector<AnnotationEvent> out;
  for (const AnnotationEvent& e : log)
    if (is_annotation(e) && !reverted.count(e.seq)) out.push_back(e);
  return out;
}

SourceReport source_report(EventLogs logs) {
  std::map<SourceKind, SourceRow> identifiers;
  std::map<SourceKind, SourceRow> formulae;
  for (const auto& log : logs) {
    for (const AnnotationEvent& e : effective_events(log)) {
      if (e.kind != EventKind::accept_recommendation || !e.source || e.position < 1) continue;
      auto& rows = e.target.kind == TargetKind::identifier ? identifiers : formulae;
      SourceRow& row = rows[*e.source];
      ++row.cg_total;
      if (e.position <= kRankCutoff) ++row.hist.counts[static_cast<std::size_t>(e.position - 1)];
    }
  }
  return {finish_rows(identifiers), finish_rows(formulae)};
}

SourceReport source_report(std::span<const AnnotationEvent> log) {
  std::vector<std::vector<AnnotationEvent>> logs{{log.begin(), log.end()}};
  return source_report(EventLogs(logs));
}

std::vector<TimingSummary> timing_report(EventLogs logs) {
  struct Acc {
    double rec_ms = 0, manual_ms = 0;
    std::size_t rec = 0, manual = 0, outliers = 0;
  };
  std::array<Acc, 2> acc{};
  for (const auto& log : logs) {
    for (const AnnotationEvent& e : effective_events(log)) {
      if (!e.elapsed_ms) continue;
      Acc& a = acc[e.target.kind == TargetKind::identifier ? 0 : 1];
      if (*e.elapsed_ms > kOutlierMs) {
        ++a.outliers;
        continue;
      }
      if (e.kind == EventKind::accept_recommendation) {
        a.rec_ms += static_cast<double>(*e.elapsed_ms);
        ++a.rec;
      } else {
        a.manual_ms += static_cast<double>(*e.elapsed_ms);
        ++a.manual;
      }
    }
  }
  std::vector<TimingSummary> out;
  for (std::size_t i = 0; i < 2; ++i) {
    const Acc& a = acc[i];
    TimingSummary s;
    s.target_kind = i == 0 ? TargetKind::identifier : TargetKind::formula;
    s.recommendation_count = a.rec;
    s.manual_count = a.manual;
    s.outliers = a.outliers;
    if (a.rec) s.mean_recommendation_s = a.rec_ms / static_cast<double>(a.rec) / 1000.0;
    if (a.manual) s.mean_manual_s = a.manual_ms / static_cast<double>(a.manual) / 1000.0;
    if (s.mean_recommendation_s && s.mean_manual_s && *s.mean_recommendation_s > 0)
      s.speedup = *s.mean_manual_s / *s.mean_recommendation_s;
    out.push_back(s);
  }
  return out;
}

std::vector<TimingSummary> timing_report(std::span<const AnnotationEvent> log) {
  std::vector<std::vector<AnnotationEvent>> logs{{log.begin(), log.end()}};
  return timing_report(EventLogs(logs));
}

QidCoverage qid_coverage(std::span<const Session* const> sessions) {
  QidCoverage c;
  std::size_t id_with = 0, formula_with = 0;
  for (const Session* s : sessions) {
    for (const auto& [key, a] : s->annotations()) {
      if (a.target.kind == TargetKind::identifier) {
        ++c.identifier_annotations;
        if (a.qid) ++id_with;
      } else {
        ++c.formula_annotations;
        if (a.qid) ++formula_with;
      }
    }
  }
  if (c.identifier_annotations)
    c.identifier_pct = 100.0 * static_cast<double>(id_with) / static_cast<double>(c.identifier_annotations);
  if (c.formula_annotations)
    c.formula_pct = 100.0 * static_cast<double>(formula_with) / static_cast<double>(c.formula_annotations);
  return c;
}

std::vector<ReferenceCheck> compare_to_reference(const SourceReport& report,
                                                 std::span<const ReferenceRow> reference) {
  std::vector<ReferenceCheck> out;
  for (const ReferenceRow& ref : reference) {
    ReferenceCheck check;
    check.reference = ref;
    if (const SourceRow* row = report.find(ref.kind, ref.source)) {
      check.computed_cg = row->cg;
      check.computed_dcg = row->dcg;
    }
    check.cg_matches = check.computed_cg == ref.cg;
    check.dcg_matches = std::llround(check.computed_dcg) == ref.dcg;
    std::string row_name = std::string(to_string(ref.kind)) + " " + std::string(display_name(ref.source));
    if (!check.cg_matches)
      check.note = row_name + ": CG " + std::to_string(ref.cg) + " expected, positions sum to " +
                   std::to_string(check.computed_cg);
    if (!check.dcg_matches) {
      if (!check.note.empty()) check.note += "; ";
      else check.note = row_name + ": ";
      check.note += "DCG " + std::to_string(ref.dcg) + " expected, positions give " +
                    fixed(check.computed_dcg, 3);
    }
    out.push_back(std::move(check));
  }
  return out;
}

void to_json(Json& j, const PositionHistogram& hist) { j = hist.counts; }

void to_json(Json& j, const SourceRow& row) {
  j = {{"source", to_string(row.hist.source)},
       {"name", display_name(row.hist.source)},
       {"cg", row.cg},
       {"cg_total", row.cg_total},
       {"dcg", row.dcg},
       {"dcg_rounded", std::llround(row.dcg)},
       {"positions", row.hist}};
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

void to_json(Json& j, const TimingSummary& s) {
  j = {{"target_kind", to_string(s.target_kind)},
       {"mean_recommendation_s", optional_number(s.mean_recommendation_s)},
       {"mean_manual_s", optional_number(s.mean_manual_s)},
       {"recommendation_count", s.recommendation_count},
       {"manual_count", s.manual_count},
       {"outliers", s.outliers}};
  if (s.speedup) j["speedup"] = *s.speedup;
}

void to_json(Json& j, const QidCoverage& c) {
  j = {{"identifier_pct", optional_number(c.identifier_pct)},
       {"formula_pct", optional_number(c.formula_pct)},
       {"identifier_annotations", c.identifier_annotations},
       {"formula_annotations", c.formula_annotations}};
}

void to_json(Json& j, const ReferenceCheck& c) {
  j = {{"kind", to_string(c.reference.kind)},
       {"source", to_string(c.reference.source)},
       {"reference_cg", c.reference.cg},
       {"reference_dcg", c.reference.dcg},
       {"computed_cg", c.computed_cg},
       {"computed_dcg", c.computed_dcg},
       {"cg_matches", c.cg_matches},
       {"dcg_matches", c.dcg_matches}};
  if (!c.note.empty()) j["note"] = c.note;
}

Json report_json(const SourceReport& sources, std::span<const TimingSummary> timing,
                 const std::optional<QidCoverage>& coverage) {
  Json j = {{"sources", {{"identifiers", sources.identifiers}, {"formulae", sources.formulae}}},
            {"timing", Json(std::vector<TimingSummary>(timing.begin(), timing.end()))}};
  if (coverage) j["qid_coverage"] = *coverage;
  return j;
}

namespace {

void source_table(std::ostringstream& out, const char* title, const std::vector<SourceRow>& rows) {
  out << title << "\n";
  out << std::left << std::setw(16) << "Source" << std::right << std::setw(6) << "CG" << std::setw(6) << "DCG";
  for (int i = 1; i <= kRankCutoff; ++i) out << std::setw(5) << i;
  out << "\n";
  for (const SourceRow& row : rows) {
    out << std::left << std::setw(16) << display_name(row.hist.source) << std::right << std::setw(6) << row.cg
        << std::setw(6) << std::llround(row.dcg);
    for (std::int64_t c : row.hist.counts) out << std::setw(5) << c;
    if (row.cg_total != row.cg) out << "  (+" << row.cg_total - row.cg << " past cutoff)";
    out << "\n";
  }
}

std::string seconds(const std::optional<double>& v) { return v ? fixed(*v, 1) : "-"; }

}  // namespace

std::string report_table(const SourceReport& sources, std::span<const TimingSummary> timing,
                         const std::optional<QidCoverage>& coverage) {
  std::ostringstream out;
  source_table(out, "Identifiers", sources.identifiers);
  out << "\n";
  source_table(out, "Formulae", sources.formulae);
  out << "\n"
      << std::left << std::setw(12) << "Timing" << std::right << std::setw(16) << "Recommendation"
      << std::setw(10) << "Manual" << std::setw(10) << "Speedup" << "\n";
  for (const TimingSummary& s : timing) {
    out << std::left << std::setw(12) << (s.target_kind == TargetKind::identifier ? "Identifiers" : "Formulae")
        << std::right << std::setw(16) << seconds(s.mean_recommendation_s) << std::setw(10)
        << seconds(s.mean_manual_s) << std::setw(10) << (s.speedup ? fixed(*s.speedup, 1) : "-") << "\n";
  }
  if (coverage) {
    auto pct = [](const std::optional<double>& v) { return v ? fixed(*v, 0) + "%" : std::string("-"); };
    out << "\nQID coverage: identifiers " << pct(coverage->identifier_pct) << ", formulae "
        << pct(coverage->formula_pct) << "\n";
  }
  return out.str();
}

}  // namespace mathel
