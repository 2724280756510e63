#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mathel/json.hpp"
#include "mathel/recommender.hpp"
#include "mathel/session.hpp"
#include "mathel/source.hpp"

namespace mathel {

// counts[i] = accepted recommendations at position i + 1.
struct PositionHistogram {
  SourceKind source = SourceKind::word_window;
  std::array<std::int64_t, kRankCutoff> counts{};

  PositionHistogram& operator+=(const PositionHistogram& other);
  friend bool operator==(const PositionHistogram&, const PositionHistogram&) = default;
};

std::int64_t cg(const PositionHistogram& hist);
double dcg(const PositionHistogram& hist);

struct SourceRow {
  PositionHistogram hist;
  std::int64_t cg = 0;        // acceptances within the cutoff
  std::int64_t cg_total = 0;  // including positions past the cutoff
  double dcg = 0.0;
};

struct SourceReport {
  // Rows in canonical source order; sources without acceptances are absent.
  std::vector<SourceRow> identifiers;
  std::vector<SourceRow> formulae;

  const SourceRow* find(TargetKind kind, SourceKind source) const;
};

// One event log per session. Annotation events later reverted by an undo
// in the same log are not counted.
using EventLogs = std::span<const std::vector<AnnotationEvent>>;

std::vector<AnnotationEvent> effective_events(std::span<const AnnotationEvent> log);

SourceReport source_report(EventLogs logs);
SourceReport source_report(std::span<const AnnotationEvent> log);

inline constexpr std::int64_t kOutlierMs = 10 * 60 * 1000;

struct TimingSummary {
  TargetKind target_kind = TargetKind::identifier;
  std::optional<double> mean_recommendation_s;
  std::optional<double> mean_manual_s;
  std::optional<double> speedup;  // manual / recommendation
  std::size_t recommendation_count = 0;
  std::size_t manual_count = 0;
  std::size_t outliers = 0;  // elapsed above kOutlierMs, left out of the means
};

// Always two entries: identifiers, then formulae.
std::vector<TimingSummary> timing_report(EventLogs logs);
std::vector<TimingSummary> timing_report(std::span<const AnnotationEvent> log);

struct QidCoverage {
  std::optional<double> identifier_pct;
  std::optional<double> formula_pct;
  std::size_t identifier_annotations = 0;
  std::size_t formula_annotations = 0;
};

QidCoverage qid_coverage(std::span<const Session* const> sessions);

// Published figures for one source row, compared against a computed report.
struct ReferenceRow {
  TargetKind kind = TargetKind::identifier;
  SourceKind source = SourceKind::word_window;
  std::int64_t cg = 0;
  std::int64_t dcg = 0;  // as printed, rounded
};

struct ReferenceCheck {
  ReferenceRow reference;
  std::int64_t computed_cg = 0;
  double computed_dcg = 0.0;
  bool cg_matches = false;
  bool dcg_matches = false;  // computed DCG rounds to the printed value
  std::string note;          // empty when both match
};

std::vector<ReferenceCheck> compare_to_reference(const SourceReport& report,
                                                 std::span<const ReferenceRow> reference);

Json report_json(const SourceReport& sources, std::span<const TimingSummary> timing,
                 const std::optional<QidCoverage>& coverage = std::nullopt);
std::string report_table(const SourceReport& sources, std::span<const TimingSummary> timing,
                         const std::optional<QidCoverage>& coverage = std::nullopt);

void to_json(Json& j, const PositionHistogram& hist);
void to_json(Json& j, const SourceRow& row);
void to_json(Json& j, const TimingSummary& summary);
void to_json(Json& j, const QidCoverage& coverage);
void to_json(Json& j, const ReferenceCheck& check);

}  // namespace mathel
