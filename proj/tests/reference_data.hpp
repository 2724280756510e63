#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mathel/evaluation.hpp"
#include "mathel/session.hpp"

namespace mathel::testing {

struct PublishedRow {
  TargetKind kind;
  SourceKind source;
  std::array<std::int64_t, 10> hist;
  std::int64_t printed_cg;
  std::int64_t printed_dcg;
};

// Accepted positions 1..10 per source as published, plus the printed totals.
inline const std::vector<PublishedRow>& published_rows() {
  static const std::vector<PublishedRow> rows = {
      {TargetKind::identifier, SourceKind::arxiv, {79, 18, 20, 3, 21, 2, 0, 3, 0, 0}, 146, 111},
      {TargetKind::identifier, SourceKind::wikipedia, {45, 16, 45, 15, 3, 3, 18, 5, 18, 1}, 169, 100},
      {TargetKind::identifier, SourceKind::wikidata, {23, 55, 4, 53, 6, 0, 0, 0, 0, 0}, 141, 85},
      {TargetKind::identifier, SourceKind::word_window, {14, 18, 25, 20, 17, 10, 7, 12, 5, 8}, 136, 67},
      {TargetKind::formula, SourceKind::wikidata_fuzzy, {9, 0, 3, 1, 0, 0, 0, 0, 0, 0}, 18, 11},
      {TargetKind::formula, SourceKind::wikidata_parts, {4, 3, 0, 0, 0, 1, 0, 0, 0, 0}, 11, 6},
      {TargetKind::formula, SourceKind::fc_memory, {25, 11, 12, 7, 2, 4, 2, 2, 1, 0}, 66, 45},
      {TargetKind::formula, SourceKind::word_window, {26, 23, 12, 16, 7, 7, 4, 5, 3, 1}, 106, 67},
  };
  return rows;
}

// One accept event per published acceptance, seq numbered from 1.
inline std::vector<AnnotationEvent> published_events() {
  std::vector<AnnotationEvent> log;
  for (const PublishedRow& row : published_rows()) {
    for (int pos = 1; pos <= 10; ++pos) {
      for (std::int64_t n = 0; n < row.hist[static_cast<std::size_t>(pos - 1)]; ++n) {
        AnnotationEvent e;
        e.seq = log.size() + 1;
        e.kind = EventKind::accept_recommendation;
        e.target = row.kind == TargetKind::identifier ? TargetRef::identifier("x") : TargetRef::formula(0);
        e.name = "n";
        e.source = row.source;
        e.position = pos;
        e.elapsed_ms = 1000;
        log.push_back(e);
      }
    }
  }
  return log;
}

// Events whose per-kind mean times are rec 2.6 s / manual 6.3 s for
// identifiers and 2.8 s / 4.0 s for formulae.
inline std::vector<AnnotationEvent> timing_events() {
  std::vector<AnnotationEvent> log;
  auto add = [&](TargetKind kind, bool manual, std::vector<std::int64_t> elapsed) {
    for (std::int64_t ms : elapsed) {
      AnnotationEvent e;
      e.seq = log.size() + 1;
      e.kind = manual ? EventKind::manual_insert : EventKind::accept_recommendation;
      e.target = kind == TargetKind::identifier ? TargetRef::identifier("x") : TargetRef::formula(0);
      e.name = "n";
      if (!manual) {
        e.source = kind == TargetKind::identifier ? SourceKind::arxiv : SourceKind::fc_memory;
        e.position = 1;
      }
      e.elapsed_ms = ms;
      log.push_back(e);
    }
  };
  add(TargetKind::identifier, false, {1800, 2600, 3400, 2600, 2600});
  add(TargetKind::identifier, true, {5100, 7500, 6300});
  add(TargetKind::formula, false, {2000, 3600, 2800});
  add(TargetKind::formula, true, {3000, 5000, 4000, 4000});
  return log;
}

}  // namespace mathel::testing
