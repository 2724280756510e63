#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mathel/corpus.hpp"
#include "mathel/math_parser.hpp"
#include "mathel/qid.hpp"
#include "mathel/recommender.hpp"
#include "mathel/source.hpp"

namespace mathel {

inline constexpr int kSessionFormatVersion = 1;

enum class TargetKind { identifier, formula };
enum class AnnotationMode { global, local };
enum class EventKind { accept_recommendation, manual_insert, undo, reject };

std::string_view to_string(TargetKind kind);
std::string_view to_string(AnnotationMode mode);
std::string_view to_string(EventKind kind);
std::optional<AnnotationMode> parse_annotation_mode(std::string_view text);

// What an annotation or rejection points at. Wire forms:
//   "id:m"          every occurrence of identifier m
//   "id:m@3:5"      the occurrence of m in segment 3 at byte offset 5
//   "seg:3"         the whole formula of segment 3
struct TargetRef {
  TargetKind kind = TargetKind::identifier;
  std::string symbol;
  int segment_id = -1;
  std::optional<std::size_t> token_offset;

  static TargetRef identifier(std::string symbol);
  static TargetRef occurrence(std::string symbol, int segment_id, std::size_t token_offset);
  static TargetRef formula(int segment_id);
  // Throws Error(bad_argument) on malformed text.
  static TargetRef parse(std::string_view text);

  bool is_occurrence() const noexcept { return token_offset.has_value(); }
  std::string str() const;

  friend bool operator==(const TargetRef&, const TargetRef&) = default;
  friend bool operator<(const TargetRef& a, const TargetRef& b) { return a.str() < b.str(); }
};

// Recommended (source + 1-based accepted position) or, without a source,
// typed in manually.
struct Provenance {
  std::optional<SourceKind> source;
  int position = 0;

  static Provenance recommended(SourceKind source, int position) { return {source, position}; }
  static Provenance manual() { return {}; }
  bool is_manual() const noexcept { return !source.has_value(); }

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Annotation {
  TargetRef target;
  std::string name;
  std::optional<Qid> qid;
  AnnotationMode mode = AnnotationMode::global;
  Provenance provenance;
  std::int64_t elapsed_ms = 0;
  std::uint64_t event_seq = 0;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

// Immutable evaluation record. Annotation events carry everything needed
// to rebuild the effective state; undo events name the event they revert.
struct AnnotationEvent {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::manual_insert;
  TargetRef target;
  std::string name;
  std::optional<Qid> qid;
  AnnotationMode mode = AnnotationMode::global;
  std::optional<SourceKind> source;
  int position = 0;
  std::optional<std::int64_t> elapsed_ms;
  std::int64_t timestamp_ms = 0;
  std::optional<std::uint64_t> reverts;

  friend bool operator==(const AnnotationEvent&, const AnnotationEvent&) = default;
};

struct IdentifierOccurrence {
  std::string symbol;
  int segment_id = 0;
  std::size_t token_offset = 0;
};

struct Progress {
  std::size_t total_targets = 0;
  std::size_t rejected = 0;
  std::size_t annotated = 0;

  std::size_t denominator() const noexcept { return total_targets - rejected; }
  double fraction() const noexcept {
    return denominator() == 0 ? 0.0 : static_cast<double>(annotated) / static_cast<double>(denominator());
  }
};

struct AnnotationRow {
  std::string target;       // wire form of the TargetRef
  std::string target_text;  // identifier symbol or formula LaTeX
  TargetKind kind = TargetKind::identifier;
  std::string name;
  std::optional<Qid> qid;
  AnnotationMode mode = AnnotationMode::global;
  Provenance provenance;
  std::int64_t elapsed_ms = 0;
  bool bold = false;  // identifiers are shown in bold

  friend bool operator==(const AnnotationRow&, const AnnotationRow&) = default;
};

// Thread-safe learning stores shared by all sessions: FC memory variants
// and manually typed names. Readers get immutable snapshots.
class SharedStores {
 public:
  SharedStores() : SharedStores(FcMemory{}, UserInputStore{}) {}
  SharedStores(FcMemory memory, UserInputStore user_inputs);

  void learn_formula(const ConceptKey& key, std::string_view latex);
  void learn_manual(const std::string& key, const std::string& name, const std::optional<Qid>& qid);

  std::shared_ptr<const FcMemory> memory() const;
  std::shared_ptr<const UserInputStore> user_inputs() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const FcMemory> memory_;
  std::shared_ptr<const UserInputStore> user_inputs_;
};

// One annotation session over a document. All mutation goes through the
// event log: each operation builds an event, applies it and appends it.
class Session {
 public:
  using Clock = std::function<std::int64_t()>;

  Session(std::string id, RawDocument doc,
          TokenizerOptions options = TokenizerOptions::defaults());

  // Rebuilds a session by folding `events`.
  static Session replay(std::string id, RawDocument doc, TokenizerOptions options,
                        const std::vector<AnnotationEvent>& events);

  void set_clock(Clock clock) { clock_ = std::move(clock); }
  void set_eval_seed(std::uint64_t seed) { eval_seed_ = seed; }

  // Global identifier annotations target the symbol; local ones an
  // occurrence. Throws AlreadyAnnotated, UnknownTarget, TargetRejected,
  // BadArgument.
  const Annotation& annotate(const TargetRef& target, const std::string& name,
                             const std::optional<Qid>& qid, AnnotationMode mode,
                             const Provenance& provenance, std::int64_t elapsed_ms,
                             SharedStores* stores = nullptr);
  // Throws NotAnnotated.
  void unannotate(const TargetRef& target);
  // Throws AlreadyAnnotated, AlreadyRejected, UnknownTarget.
  void reject(const TargetRef& target);

  const std::string& id() const noexcept { return id_; }
  const RawDocument& document() const noexcept { return doc_; }
  const TokenizerOptions& tokenizer_options() const noexcept { return options_; }
  const std::vector<MathSegment>& segments() const noexcept { return segments_; }
  const std::vector<TokenizedFormula>& formulas() const noexcept { return formulas_; }
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }
  const std::vector<IdentifierOccurrence>& occurrences() const noexcept { return occurrences_; }
  const std::vector<AnnotationEvent>& events() const noexcept { return events_; }
  const std::map<std::string, Annotation>& annotations() const noexcept { return annotations_; }
  const std::set<std::string>& rejected() const noexcept { return rejected_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  std::uint64_t eval_seed() const noexcept { return eval_seed_; }

  bool has_symbol(std::string_view symbol) const;
  // Effective annotation at one occurrence: a local one wins over the
  // symbol's global one. Null when unannotated or rejected.
  const Annotation* annotation_at(const IdentifierOccurrence& occurrence) const;
  const Annotation* formula_annotation(int segment_id) const;
  bool is_rejected(const IdentifierOccurrence& occurrence) const;
  std::size_t occurrence_count(std::string_view symbol) const;
  std::size_t annotated_occurrence_count(std::string_view symbol) const;
  std::size_t rejected_occurrence_count(std::string_view symbol) const;

  // QIDs annotated on identifiers that occur in `segment_id`.
  std::set<Qid> annotated_identifier_qids(int segment_id) const;
  // segment id -> QID of formula annotations that carry one.
  std::map<int, Qid> formula_qids() const;

  Progress progress() const;
  // One row per effective annotation, ordered by first occurrence.
  std::vector<AnnotationRow> annotation_table() const;

 private:
  void apply(const AnnotationEvent& event);
  void check_target_exists(const TargetRef& target) const;
  void record_conflicts(const Annotation& annotation);

  std::string id_;
  RawDocument doc_;
  TokenizerOptions options_;
  std::vector<MathSegment> segments_;
  std::vector<TokenizedFormula> formulas_;
  std::vector<Diagnostic> diagnostics_;
  std::vector<IdentifierOccurrence> occurrences_;
  std::map<std::string, std::vector<std::size_t>> occurrences_by_symbol_;

  std::map<std::string, Annotation> annotations_;  // keyed by TargetRef::str()
  std::set<std::string> rejected_;
  std::vector<AnnotationEvent> events_;
  std::vector<std::string> warnings_;
  std::uint64_t eval_seed_ = 0;
  Clock clock_;
};

std::string format_session(const Session& session);
// Replays the event log and checks it against the stored snapshot.
// Throws SchemaViolation, VersionMismatch or ReplayMismatch.
Session parse_session(std::string_view json_text);
void save_session(const Session& session, const std::filesystem::path& path);
Session load_session(const std::filesystem::path& path);

}  // namespace mathel
