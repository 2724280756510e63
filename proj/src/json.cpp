#include "mathel/json.hpp"

#include "mathel/error.hpp"

namespace mathel {

namespace {

[[noreturn]] void schema(const std::string& what) { throw Error(ErrorCode::schema_violation, what); }

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    schema(std::string(what) + ": " + e.what());
  }
}

SourceKind source_from(const Json& j) {
  auto kind = parse_source_kind(j.get<std::string>());
  if (!kind) schema("unknown source " + j.get<std::string>());
  return *kind;
}

}  // namespace

Json optional_qid_json(const std::optional<Qid>& qid) {
  return qid ? Json(qid->str()) : Json(nullptr);
}

std::optional<Qid> optional_qid_from_json(const Json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_string()) schema("QID must be a string or null");
  auto qid = Qid::try_parse(j.get<std::string>());
  if (!qid) schema("bad QID " + j.get<std::string>());
  return qid;
}

void to_json(Json& j, const Qid& qid) { j = qid.str(); }

void to_json(Json& j, const Span& span) { j = Json::array({span.begin, span.end}); }

void to_json(Json& j, const RawDocument& doc) {
  j = {{"title", doc.title},
       {"format", to_string(doc.format)},
       {"origin", to_string(doc.origin)},
       {"retrieved_at_ms", doc.retrieved_at_ms},
       {"revision", doc.revision},
       {"body", doc.body}};
}

RawDocument document_from_json(const Json& j) {
  return guarded("document", [&] {
    RawDocument doc;
    doc.title = j.at("title").get<std::string>();
    doc.body = j.at("body").get<std::string>();
    auto format = parse_document_format(j.at("format").get<std::string>());
    auto origin = parse_document_origin(j.at("origin").get<std::string>());
    if (!format || !origin) schema("bad document format or origin");
    doc.format = *format;
    doc.origin = *origin;
    doc.retrieved_at_ms = j.at("retrieved_at_ms").get<std::int64_t>();
    doc.revision = j.value("revision", std::string());
    return doc;
  });
}

void to_json(Json& j, const TokenizerOptions& options) {
  j = {{"function_commands", options.function_commands},
       {"split_multiletter", options.split_multiletter},
       {"greek_aliases", options.greek_aliases}};
}

TokenizerOptions tokenizer_options_from_json(const Json& j) {
  return guarded("tokenizer options", [&] {
    TokenizerOptions o = TokenizerOptions::defaults();
    if (auto it = j.find("function_commands"); it != j.end())
      o.function_commands = it->get<std::set<std::string>>();
    if (auto it = j.find("split_multiletter"); it != j.end()) o.split_multiletter = it->get<bool>();
    if (auto it = j.find("greek_aliases"); it != j.end())
      o.greek_aliases = it->get<std::map<std::string, std::string>>();
    return o;
  });
}

void to_json(Json& j, const MathSegment& s) {
  j = {{"segment_id", s.segment_id},
       {"raw_latex", s.raw_latex},
       {"span", s.span},
       {"display", to_string(s.display)},
       {"existing_qid", s.existing_qid ? Json(*s.existing_qid) : Json(nullptr)}};
}

void to_json(Json& j, const Token& t) {
  j = {{"kind", to_string(t.kind)}, {"text", t.text}, {"span", t.span}};
  if (t.kind == TokenKind::identifier) {
    j["symbol"] = t.symbol;
    if (!t.decoration.empty()) j["decoration"] = t.decoration;
  }
}

void to_json(Json& j, const TokenizedFormula& f) {
  j = {{"segment_id", f.segment_id},
       {"tokens", f.tokens},
       {"identifier_symbols", f.identifier_symbols},
       {"is_equation", f.is_equation},
       {"diagnostics", f.diagnostics}};
}

void to_json(Json& j, const Diagnostic& d) {
  j = {{"kind", d.kind == DiagnosticKind::lex_error ? "lex_error" : "unbalanced_delimiter"},
       {"span", d.span},
       {"message", d.message}};
}

void to_json(Json& j, const RecommendationCandidate& c) {
  j = {{"name", c.name},
       {"qid", optional_qid_json(c.qid)},
       {"source", to_string(c.source)},
       {"rank", c.rank},
       {"score", c.score}};
}

void to_json(Json& j, const RecommendationSet& set) {
  Json per_source = Json::object();
  for (const auto& [kind, list] : set.per_source) per_source[std::string(to_string(kind))] = list;
  Json presentation = Json::array();
  for (const auto& slot : set.presentation)
    presentation.push_back({{"label", slot.label}, {"source", to_string(slot.source)}});
  j = {{"target", set.target}, {"per_source", per_source}, {"presentation", presentation}};
}

void to_json(Json& j, const TargetRef& target) { j = target.str(); }

void to_json(Json& j, const AnnotationEvent& e) {
  j = {{"seq", e.seq},
       {"kind", to_string(e.kind)},
       {"target", e.target},
       {"timestamp_ms", e.timestamp_ms}};
  if (e.kind == EventKind::accept_recommendation || e.kind == EventKind::manual_insert) {
    j["name"] = e.name;
    j["qid"] = optional_qid_json(e.qid);
    j["mode"] = to_string(e.mode);
    j["elapsed_ms"] = e.elapsed_ms ? Json(*e.elapsed_ms) : Json(nullptr);
  }
  if (e.source) {
    j["source"] = to_string(*e.source);
    j["position"] = e.position;
  }
  if (e.reverts) j["reverts"] = *e.reverts;
}

namespace {

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (EventKind k : {EventKind::accept_recommendation, EventKind::manual_insert, EventKind::undo,
                      EventKind::reject})
    if (to_string(k) == text) return k;
  return std::nullopt;
}

TargetRef target_from(const Json& j) {
  try {
    return TargetRef::parse(j.get<std::string>());
  } catch (const Error& e) {
    schema(e.what());
  }
}

}  // namespace

AnnotationEvent event_from_json(const Json& j) {
  return guarded("event", [&] {
    AnnotationEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    auto kind = parse_event_kind(j.at("kind").get<std::string>());
    if (!kind) schema("unknown event kind");
    e.kind = *kind;
    e.target = target_from(j.at("target"));
    e.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    if (e.kind == EventKind::accept_recommendation || e.kind == EventKind::manual_insert) {
      e.name = j.at("name").get<std::string>();
      e.qid = optional_qid_from_json(j.at("qid"));
      auto mode = parse_annotation_mode(j.at("mode").get<std::string>());
      if (!mode) schema("bad mode");
      e.mode = *mode;
      if (!j.at("elapsed_ms").is_null()) e.elapsed_ms = j.at("elapsed_ms").get<std::int64_t>();
    }
    if (auto it = j.find("source"); it != j.end()) {
      e.source = source_from(*it);
      e.position = j.at("position").get<int>();
    }
    if (auto it = j.find("reverts"); it != j.end()) e.reverts = it->get<std::uint64_t>();
    return e;
  });
}

void to_json(Json& j, const Annotation& a) {
  j = {{"target", a.target},
       {"name", a.name},
       {"qid", optional_qid_json(a.qid)},
       {"mode", to_string(a.mode)},
       {"source", a.provenance.source ? Json(to_string(*a.provenance.source)) : Json(nullptr)},
       {"position", a.provenance.position},
       {"elapsed_ms", a.elapsed_ms},
       {"event_seq", a.event_seq}};
}

Annotation annotation_from_json(const Json& j) {
  return guarded("annotation", [&] {
    Annotation a;
    a.target = target_from(j.at("target"));
    a.name = j.at("name").get<std::string>();
    a.qid = optional_qid_from_json(j.at("qid"));
    auto mode = parse_annotation_mode(j.at("mode").get<std::string>());
    if (!mode) schema("bad mode");
    a.mode = *mode;
    if (!j.at("source").is_null()) a.provenance.source = source_from(j.at("source"));
    a.provenance.position = j.at("position").get<int>();
    a.elapsed_ms = j.at("elapsed_ms").get<std::int64_t>();
    a.event_seq = j.at("event_seq").get<std::uint64_t>();
    return a;
  });
}

void to_json(Json& j, const AnnotationRow& r) {
  j = {{"target", r.target},
       {"kind", to_string(r.kind)},
       {"target_text", r.target_text},
       {"name", r.name},
       {"qid", optional_qid_json(r.qid)},
       {"mode", to_string(r.mode)},
       {"source", r.provenance.source ? Json(to_string(*r.provenance.source)) : Json("manual")},
       {"position", r.provenance.is_manual() ? Json(nullptr) : Json(r.provenance.position)},
       {"elapsed_ms", r.elapsed_ms},
       {"bold", r.bold}};
}

AnnotationRow annotation_row_from_json(const Json& j) {
  return guarded("annotation row", [&] {
    AnnotationRow r;
    r.target = j.at("target").get<std::string>();
    r.kind = target_from(j.at("target")).kind;
    r.target_text = j.at("target_text").get<std::string>();
    r.name = j.at("name").get<std::string>();
    r.qid = optional_qid_from_json(j.at("qid"));
    auto mode = parse_annotation_mode(j.at("mode").get<std::string>());
    if (!mode) schema("bad mode");
    r.mode = *mode;
    const std::string source = j.at("source").get<std::string>();
    if (source != "manual") {
      r.provenance.source = source_from(j.at("source"));
      r.provenance.position = j.at("position").get<int>();
    }
    r.elapsed_ms = j.at("elapsed_ms").get<std::int64_t>();
    r.bold = j.value("bold", r.kind == TargetKind::identifier);
    return r;
  });
}

void to_json(Json& j, const Progress& p) {
  j = {{"total_targets", p.total_targets},
       {"rejected", p.rejected},
       {"annotated", p.annotated},
       {"fraction", p.fraction()}};
}

}  // namespace mathel
