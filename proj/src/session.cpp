#include "mathel/session.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <tuple>

#include "mathel/error.hpp"
#include "mathel/json.hpp"
#include "mathel/symbols.hpp"

namespace mathel {

std::string_view to_string(TargetKind kind) {
  return kind == TargetKind::formula ? "formula" : "identifier";
}

std::string_view to_string(AnnotationMode mode) {
  return mode == AnnotationMode::local ? "local" : "global";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::accept_recommendation: return "accept_recommendation";
    case EventKind::manual_insert: return "manual_insert";
    case EventKind::undo: return "undo";
    case EventKind::reject: return "reject";
  }
  return "undo";
}

std::optional<AnnotationMode> parse_annotation_mode(std::string_view text) {
  if (text == "global") return AnnotationMode::global;
  if (text == "local") return AnnotationMode::local;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// TargetRef

TargetRef TargetRef::identifier(std::string symbol) {
  return {TargetKind::identifier, std::move(symbol), -1, std::nullopt};
}

TargetRef TargetRef::occurrence(std::string symbol, int segment_id, std::size_t token_offset) {
  return {TargetKind::identifier, std::move(symbol), segment_id, token_offset};
}

TargetRef TargetRef::formula(int segment_id) {
  return {TargetKind::formula, {}, segment_id, std::nullopt};
}

std::string TargetRef::str() const {
  if (kind == TargetKind::formula) return "seg:" + std::to_string(segment_id);
  std::string out = "id:" + symbol;
  if (token_offset) out += "@" + std::to_string(segment_id) + ":" + std::to_string(*token_offset);
  return out;
}

namespace {

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

}  // namespace

TargetRef TargetRef::parse(std::string_view text) {
  auto bad = [&]() { return Error(ErrorCode::bad_argument, "bad target '" + std::string(text) + "'"); };
  if (text.rfind("seg:", 0) == 0) {
    auto id = parse_number<int>(text.substr(4));
    if (!id || *id < 0) throw bad();
    return formula(*id);
  }
  if (text.rfind("id:", 0) != 0) throw bad();
  std::string_view rest = text.substr(3);
  std::size_t at = rest.find('@');
  std::string symbol(rest.substr(0, at));
  if (!is_identifier_symbol(symbol)) throw bad();
  if (at == std::string_view::npos) return identifier(symbol);
  std::string_view where = rest.substr(at + 1);
  std::size_t colon = where.find(':');
  if (colon == std::string_view::npos) throw bad();
  auto seg = parse_number<int>(where.substr(0, colon));
  auto off = parse_number<std::size_t>(where.substr(colon + 1));
  if (!seg || !off || *seg < 0) throw bad();
  return occurrence(symbol, *seg, *off);
}

// ---------------------------------------------------------------------------
// SharedStores

SharedStores::SharedStores(FcMemory memory, UserInputStore user_inputs)
    : memory_(std::make_shared<const FcMemory>(std::move(memory))),
      user_inputs_(std::make_shared<const UserInputStore>(std::move(user_inputs))) {}

void SharedStores::learn_formula(const ConceptKey& key, std::string_view latex) {
  std::lock_guard lock(mutex_);
  auto next = std::make_shared<FcMemory>(*memory_);
  next->add_variant(key, latex);
  memory_ = std::move(next);
}

void SharedStores::learn_manual(const std::string& key, const std::string& name,
                                const std::optional<Qid>& qid) {
  std::lock_guard lock(mutex_);
  auto next = std::make_shared<UserInputStore>(*user_inputs_);
  next->record(key, name, qid);
  user_inputs_ = std::move(next);
}

std::shared_ptr<const FcMemory> SharedStores::memory() const {
  std::lock_guard lock(mutex_);
  return memory_;
}

std::shared_ptr<const UserInputStore> SharedStores::user_inputs() const {
  std::lock_guard lock(mutex_);
  return user_inputs_;
}

// ---------------------------------------------------------------------------
// Session

namespace {

std::int64_t system_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

bool is_annotation_event(EventKind kind) {
  return kind == EventKind::accept_recommendation || kind == EventKind::manual_insert;
}

}  // namespace

Session::Session(std::string id, RawDocument doc, TokenizerOptions options)
    : id_(std::move(id)), doc_(std::move(doc)), options_(std::move(options)), clock_(system_now_ms) {
  ExtractionResult extracted = extract_math_segments(doc_);
  segments_ = std::move(extracted.segments);
  diagnostics_ = std::move(extracted.diagnostics);
  for (const MathSegment& segment : segments_) {
    TokenizedFormula formula = tokenize_formula(segment.raw_latex, options_, segment.segment_id);
    for (const Diagnostic& d : formula.diagnostics) {
      Diagnostic shifted = d;
      shifted.span = {segment.content.begin + d.span.begin, segment.content.begin + d.span.end};
      diagnostics_.push_back(std::move(shifted));
    }
    for (const Token& token : formula.tokens) {
      if (token.kind != TokenKind::identifier) continue;
      occurrences_by_symbol_[token.symbol].push_back(occurrences_.size());
      occurrences_.push_back({token.symbol, segment.segment_id, token.span.begin});
    }
    formulas_.push_back(std::move(formula));
  }
}

Session Session::replay(std::string id, RawDocument doc, TokenizerOptions options,
                        const std::vector<AnnotationEvent>& events) {
  Session session(std::move(id), std::move(doc), std::move(options));
  for (const AnnotationEvent& event : events) {
    if (event.seq != session.events_.size())
      throw Error(ErrorCode::replay_mismatch, "event sequence gap at " + std::to_string(event.seq));
    session.apply(event);
    session.events_.push_back(event);
  }
  return session;
}

bool Session::has_symbol(std::string_view symbol) const {
  return occurrences_by_symbol_.count(std::string(symbol)) > 0;
}

void Session::check_target_exists(const TargetRef& target) const {
  if (target.kind == TargetKind::formula) {
    if (target.segment_id < 0 || static_cast<std::size_t>(target.segment_id) >= segments_.size())
      throw Error(ErrorCode::unknown_target, target.str());
    return;
  }
  auto it = occurrences_by_symbol_.find(target.symbol);
  if (it == occurrences_by_symbol_.end()) throw Error(ErrorCode::unknown_target, target.str());
  if (!target.token_offset) return;
  for (std::size_t index : it->second) {
    const IdentifierOccurrence& occ = occurrences_[index];
    if (occ.segment_id == target.segment_id && occ.token_offset == *target.token_offset) return;
  }
  throw Error(ErrorCode::unknown_target, target.str());
}

const Annotation* Session::annotation_at(const IdentifierOccurrence& occ) const {
  if (is_rejected(occ)) return nullptr;
  auto local = annotations_.find(TargetRef::occurrence(occ.symbol, occ.segment_id, occ.token_offset).str());
  if (local != annotations_.end()) return &local->second;
  auto global = annotations_.find(TargetRef::identifier(occ.symbol).str());
  return global == annotations_.end() ? nullptr : &global->second;
}

const Annotation* Session::formula_annotation(int segment_id) const {
  auto it = annotations_.find(TargetRef::formula(segment_id).str());
  return it == annotations_.end() ? nullptr : &it->second;
}

bool Session::is_rejected(const IdentifierOccurrence& occ) const {
  return rejected_.count(TargetRef::identifier(occ.symbol).str()) > 0 ||
         rejected_.count(TargetRef::occurrence(occ.symbol, occ.segment_id, occ.token_offset).str()) > 0;
}

std::size_t Session::occurrence_count(std::string_view symbol) const {
  auto it = occurrences_by_symbol_.find(std::string(symbol));
  return it == occurrences_by_symbol_.end() ? 0 : it->second.size();
}

std::size_t Session::annotated_occurrence_count(std::string_view symbol) const {
  auto it = occurrences_by_symbol_.find(std::string(symbol));
  if (it == occurrences_by_symbol_.end()) return 0;
  return static_cast<std::size_t>(std::count_if(it->second.begin(), it->second.end(), [&](std::size_t i) {
    return annotation_at(occurrences_[i]) != nullptr;
  }));
}

std::size_t Session::rejected_occurrence_count(std::string_view symbol) const {
  auto it = occurrences_by_symbol_.find(std::string(symbol));
  if (it == occurrences_by_symbol_.end()) return 0;
  return static_cast<std::size_t>(std::count_if(it->second.begin(), it->second.end(),
                                                [&](std::size_t i) { return is_rejected(occurrences_[i]); }));
}

std::set<Qid> Session::annotated_identifier_qids(int segment_id) const {
  std::set<Qid> out;
  for (const IdentifierOccurrence& occ : occurrences_) {
    if (occ.segment_id != segment_id) continue;
    if (const Annotation* a = annotation_at(occ); a && a->qid) out.insert(*a->qid);
  }
  return out;
}

std::map<int, Qid> Session::formula_qids() const {
  std::map<int, Qid> out;
  for (const auto& [key, a] : annotations_)
    if (a.target.kind == TargetKind::formula && a.qid) out.emplace(a.target.segment_id, *a.qid);
  return out;
}

Progress Session::progress() const {
  Progress p;
  p.total_targets = occurrences_.size() + segments_.size();
  for (const IdentifierOccurrence& occ : occurrences_) {
    if (is_rejected(occ))
      ++p.rejected;
    else if (annotation_at(occ))
      ++p.annotated;
  }
  for (const MathSegment& s : segments_) {
    if (rejected_.count(TargetRef::formula(s.segment_id).str()))
      ++p.rejected;
    else if (formula_annotation(s.segment_id))
      ++p.annotated;
  }
  return p;
}

void Session::record_conflicts(const Annotation& added) {
  if (added.target.kind != TargetKind::identifier) return;
  for (const auto& [key, other] : annotations_) {
    if (other.target.kind != TargetKind::identifier || other.target.symbol != added.target.symbol) continue;
    if (other.target == added.target) continue;
    if (other.name != added.name || other.qid != added.qid)
      warnings_.push_back("identifier " + added.target.symbol + " annotated as '" + added.name +
                          "' at " + added.target.str() + " but as '" + other.name + "' at " +
                          other.target.str());
  }
}

void Session::apply(const AnnotationEvent& event) {
  const TargetRef& target = event.target;
  check_target_exists(target);
  const std::string key = target.str();

  if (is_annotation_event(event.kind)) {
    if (event.name.empty()) throw Error(ErrorCode::bad_argument, "annotation name is empty");
    if (!event.elapsed_ms || *event.elapsed_ms < 0)
      throw Error(ErrorCode::bad_argument, "elapsed_ms must be non-negative");
    if (event.kind == EventKind::accept_recommendation) {
      if (!event.source) throw Error(ErrorCode::bad_argument, "accepted recommendation without source");
      if (event.position < 1 || event.position > kRankCutoff)
        throw Error(ErrorCode::bad_argument, "accepted position must be within 1.." + std::to_string(kRankCutoff));
    } else if (event.source) {
      throw Error(ErrorCode::bad_argument, "manual insert carries a source");
    }
    if (target.kind == TargetKind::identifier) {
      if (event.mode == AnnotationMode::global && target.is_occurrence())
        throw Error(ErrorCode::bad_argument, "global annotation must target the symbol");
      if (event.mode == AnnotationMode::local && !target.is_occurrence())
        throw Error(ErrorCode::bad_argument, "local annotation must target one occurrence");
      if (rejected_.count(TargetRef::identifier(target.symbol).str()) || rejected_.count(key))
        throw Error(ErrorCode::target_rejected, key);
    } else if (rejected_.count(key)) {
      throw Error(ErrorCode::target_rejected, key);
    }
    if (annotations_.count(key)) throw Error(ErrorCode::already_annotated, key);

    Annotation a{target,
                 event.name,
                 event.qid,
                 event.mode,
                 event.kind == EventKind::manual_insert ? Provenance::manual()
                                                        : Provenance::recommended(*event.source, event.position),
                 *event.elapsed_ms,
                 event.seq};
    record_conflicts(a);
    annotations_.emplace(key, std::move(a));
    return;
  }

  if (event.kind == EventKind::undo) {
    auto it = annotations_.find(key);
    if (it == annotations_.end()) throw Error(ErrorCode::not_annotated, key);
    if (event.reverts && *event.reverts != it->second.event_seq)
      throw Error(ErrorCode::replay_mismatch, "undo of " + key + " reverts the wrong event");
    annotations_.erase(it);
    return;
  }

  // reject
  if (rejected_.count(key)) throw Error(ErrorCode::already_rejected, key);
  if (target.kind == TargetKind::formula) {
    if (annotations_.count(key)) throw Error(ErrorCode::already_annotated, key);
  } else if (target.is_occurrence()) {
    if (annotations_.count(key) || annotations_.count(TargetRef::identifier(target.symbol).str()))
      throw Error(ErrorCode::already_annotated, key);
  } else {
    for (const auto& [k, a] : annotations_)
      if (a.target.kind == TargetKind::identifier && a.target.symbol == target.symbol)
        throw Error(ErrorCode::already_annotated, key);
  }
  rejected_.insert(key);
}

const Annotation& Session::annotate(const TargetRef& target, const std::string& name,
                                    const std::optional<Qid>& qid, AnnotationMode mode,
                                    const Provenance& provenance, std::int64_t elapsed_ms,
                                    SharedStores* stores) {
  AnnotationEvent event;
  event.seq = events_.size();
  event.kind = provenance.is_manual() ? EventKind::manual_insert : EventKind::accept_recommendation;
  event.target = target;
  // A global annotation requested on one occurrence covers the symbol.
  if (target.kind == TargetKind::identifier && mode == AnnotationMode::global && target.is_occurrence()) {
    check_target_exists(target);
    event.target = TargetRef::identifier(target.symbol);
  }
  event.name = name;
  event.qid = qid;
  event.mode = mode;
  event.source = provenance.source;
  event.position = provenance.position;
  event.elapsed_ms = elapsed_ms;
  event.timestamp_ms = clock_();
  apply(event);
  events_.push_back(event);

  if (stores) {
    if (target.kind == TargetKind::formula)
      stores->learn_formula({name, qid}, segments_[static_cast<std::size_t>(target.segment_id)].raw_latex);
    if (provenance.is_manual()) {
      std::string key = target.kind == TargetKind::formula
                            ? formula_store_key(segments_[static_cast<std::size_t>(target.segment_id)].raw_latex)
                            : identifier_store_key(target.symbol);
      stores->learn_manual(key, name, qid);
    }
  }
  return annotations_.at(event.target.str());
}

void Session::unannotate(const TargetRef& target) {
  TargetRef resolved = target;
  // An occurrence without its own local annotation undoes the global one.
  if (target.kind == TargetKind::identifier && target.is_occurrence() && !annotations_.count(target.str()) &&
      annotations_.count(TargetRef::identifier(target.symbol).str()))
    resolved = TargetRef::identifier(target.symbol);
  auto it = annotations_.find(resolved.str());
  if (it == annotations_.end()) throw Error(ErrorCode::not_annotated, target.str());

  AnnotationEvent event;
  event.seq = events_.size();
  event.kind = EventKind::undo;
  event.target = resolved;
  event.mode = it->second.mode;
  event.timestamp_ms = clock_();
  event.reverts = it->second.event_seq;
  apply(event);
  events_.push_back(event);
}

void Session::reject(const TargetRef& target) {
  AnnotationEvent event;
  event.seq = events_.size();
  event.kind = EventKind::reject;
  event.target = target;
  event.timestamp_ms = clock_();
  apply(event);
  events_.push_back(event);
}

std::vector<AnnotationRow> Session::annotation_table() const {
  using Key = std::tuple<int, std::size_t, int, std::string>;
  std::vector<std::pair<Key, AnnotationRow>> rows;
  for (const auto& [key, a] : annotations_) {
    AnnotationRow row{key, {}, a.target.kind, a.name, a.qid, a.mode, a.provenance, a.elapsed_ms,
                      a.target.kind == TargetKind::identifier};
    Key order;
    if (a.target.kind == TargetKind::formula) {
      const MathSegment& s = segments_[static_cast<std::size_t>(a.target.segment_id)];
      row.target_text = s.raw_latex;
      order = {s.segment_id, s.raw_latex.size(), 1, key};
    } else {
      row.target_text = a.target.symbol;
      if (a.target.is_occurrence()) {
        order = {a.target.segment_id, *a.target.token_offset, 0, key};
      } else {
        const IdentifierOccurrence& first = occurrences_[occurrences_by_symbol_.at(a.target.symbol).front()];
        order = {first.segment_id, first.token_offset, 0, key};
      }
    }
    rows.emplace_back(std::move(order), std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<AnnotationRow> out;
  for (auto& [order, row] : rows) out.push_back(std::move(row));
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

std::string format_session(const Session& session) {
  Json annotations = Json::array();
  for (const auto& [key, a] : session.annotations()) annotations.push_back(a);
  Json doc = {{"format", "mathel-session"},
              {"version", kSessionFormatVersion},
              {"session_id", session.id()},
              {"eval_seed", session.eval_seed()},
              {"document", session.document()},
              {"tokenizer", session.tokenizer_options()},
              {"events", session.events()},
              {"annotations", annotations},
              {"rejected", session.rejected()}};
  return doc.dump(2) + "\n";
}

Session parse_session(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::schema_violation, e.what());
  }
  if (!doc.is_object() || doc.value("format", std::string()) != "mathel-session")
    throw Error(ErrorCode::schema_violation, "not a session file");
  if (!doc.contains("version") || !doc["version"].is_number_integer())
    throw Error(ErrorCode::schema_violation, "missing version");
  if (doc["version"].get<int>() != kSessionFormatVersion)
    throw Error(ErrorCode::version_mismatch,
                "file version " + std::to_string(doc["version"].get<int>()) + ", expected " +
                    std::to_string(kSessionFormatVersion));
  try {
    std::vector<AnnotationEvent> events;
    for (const Json& e : doc.at("events")) events.push_back(event_from_json(e));
    Session session = Session::replay(doc.at("session_id").get<std::string>(),
                                      document_from_json(doc.at("document")),
                                      tokenizer_options_from_json(doc.at("tokenizer")), events);
    session.set_eval_seed(doc.at("eval_seed").get<std::uint64_t>());

    std::map<std::string, Annotation> snapshot;
    for (const Json& a : doc.at("annotations")) {
      Annotation annotation = annotation_from_json(a);
      snapshot.emplace(annotation.target.str(), std::move(annotation));
    }
    auto rejected = doc.at("rejected").get<std::set<std::string>>();
    if (snapshot != session.annotations() || rejected != session.rejected())
      throw Error(ErrorCode::replay_mismatch, "event log does not reproduce the stored annotations");
    return session;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::schema_violation, e.what());
  }
}

void save_session(const Session& session, const std::filesystem::path& path) {
  write_file(path, format_session(session));
}

Session load_session(const std::filesystem::path& path) { return parse_session(read_file(path)); }

}  // namespace mathel
