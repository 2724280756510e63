#include "mathel/service.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <random>

#include "mathel/error.hpp"
#include "mathel/evaluation.hpp"
#include "mathel/linker.hpp"

namespace mathel {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kIdempotencyCapacity = 4096;
constexpr const char* kMemoryFile = "_fc_memory.json";
constexpr const char* kUserInputFile = "_user_inputs.json";

struct ApiFailure {
  int status;
  std::string code;
  std::string message;
  Json detail;
};

ApiFailure to_failure(const Error& e) {
  Json detail = {{"error", to_string(e.code())}};
  if (e.line()) detail["line"] = *e.line();
  switch (e.code()) {
    case ErrorCode::not_found:
    case ErrorCode::unknown_target:
    case ErrorCode::not_annotated:
    case ErrorCode::file_missing:
      return {404, "not_found", e.what(), detail};
    case ErrorCode::already_annotated:
    case ErrorCode::already_rejected:
    case ErrorCode::target_rejected:
      return {409, "conflict", e.what(), detail};
    case ErrorCode::network_error:
    case ErrorCode::rate_limited:
      return {502, "upstream_unavailable", e.what(), detail};
    default:
      return {400, "bad_request", e.what(), detail};
  }
}

ApiResponse error_response(const ApiFailure& f) {
  Json body = {{"error", {{"code", f.code}, {"message", f.message}, {"detail", f.detail}}}};
  return {f.status, body.dump()};
}

ApiResponse json_response(int status, const Json& body) { return {status, body.dump()}; }

Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    Json j = Json::parse(body);
    if (!j.is_object()) throw Error(ErrorCode::bad_argument, "request body must be a JSON object");
    return j;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::bad_argument, std::string("invalid JSON body: ") + e.what());
  }
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    std::size_t next = path.find('/', pos);
    if (next == std::string::npos) next = path.size();
    if (next > pos) parts.push_back(path.substr(pos, next - pos));
    pos = next + 1;
  }
  return parts;
}

template <typename T>
T field(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw Error(ErrorCode::bad_argument, std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::bad_argument, std::string("field '") + name + "' has the wrong type");
  }
}

bool truthy(const std::string& v) { return v == "1" || v == "true" || v == "yes"; }

// An identifier target may also be given as the bare symbol.
TargetRef parse_target(const std::string& text) {
  if (text.rfind("id:", 0) == 0 || text.rfind("seg:", 0) == 0) return TargetRef::parse(text);
  return TargetRef::parse("id:" + text);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

ServiceConfig parse_service_config(std::string_view json_text, const fs::path& base_dir) {
  ServiceConfig c;
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::schema_violation, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::schema_violation, "config must be a JSON object");
  auto path = [&](const Json& v) {
    fs::path p = v.get<std::string>();
    return p.is_relative() ? base_dir / p : p;
  };
  try {
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    if (auto it = j.find("identifier_catalogs"); it != j.end()) {
      for (const auto& [name, p] : it->items()) {
        auto kind = parse_source_kind(name);
        if (!kind) throw Error(ErrorCode::schema_violation, "config: unknown source " + name);
        c.identifier_catalogs[*kind] = path(p);
      }
    }
    if (j.contains("formula_catalog")) c.formula_catalog = path(j["formula_catalog"]);
    if (j.contains("fc_memory")) c.fc_memory = path(j["fc_memory"]);
    if (j.contains("user_inputs")) c.user_inputs = path(j["user_inputs"]);
    if (j.contains("session_dir")) c.session_dir = path(j["session_dir"]);
    c.wiki_base_url = j.value("wiki_base_url", c.wiki_base_url);
    c.wiki_url_template = j.value("wiki_url_template", c.wiki_url_template);
    c.fetch_retries = j.value("fetch_retries", c.fetch_retries);
    c.recommender.fuzzy_threshold = j.value("fuzzy_threshold", c.recommender.fuzzy_threshold);
    c.recommender.cutoff = j.value("cutoff", c.recommender.cutoff);
    c.recommender.word_window = j.value("word_window", c.recommender.word_window);
    if (j.contains("tokenizer")) c.tokenizer = tokenizer_options_from_json(j["tokenizer"]);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::schema_violation, std::string("config: ") + e.what());
  }
  return c;
}

void apply_service_env(ServiceConfig& config) {
  if (const char* v = std::getenv("MATHEL_PORT"); v && *v) config.port = std::atoi(v);
  if (const char* v = std::getenv("MATHEL_SESSION_DIR"); v && *v) config.session_dir = fs::path(v);
  if (const char* v = std::getenv(kWikiBaseUrlEnv); v && *v) config.wiki_base_url = v;
}

ServiceConfig load_service_config(const std::optional<fs::path>& path) {
  ServiceConfig c;
  if (path) {
    if (!fs::exists(*path)) throw Error(ErrorCode::file_missing, path->string());
    c = parse_service_config(read_file(*path), path->parent_path());
  }
  apply_service_env(c);
  return c;
}

// ---------------------------------------------------------------------------
// Service

namespace {

std::vector<IdentifierCatalog> load_identifier_catalogs(const ServiceConfig& c) {
  std::vector<IdentifierCatalog> out;
  for (const auto& [kind, path] : c.identifier_catalogs) out.push_back(load_identifier_catalog(path, kind));
  return out;
}

FcMemory initial_memory(const ServiceConfig& c) {
  if (c.session_dir && fs::exists(*c.session_dir / kMemoryFile)) return load_fc_memory(*c.session_dir / kMemoryFile);
  return c.fc_memory ? load_fc_memory(*c.fc_memory) : FcMemory{};
}

UserInputStore initial_user_inputs(const ServiceConfig& c) {
  if (c.session_dir && fs::exists(*c.session_dir / kUserInputFile))
    return parse_user_input_store(read_file(*c.session_dir / kUserInputFile));
  return c.user_inputs ? parse_user_input_store(read_file(*c.user_inputs)) : UserInputStore{};
}

}  // namespace

Service::Service(ServiceConfig config)
    : Service(config, load_identifier_catalogs(config),
              config.formula_catalog ? load_formula_catalog(*config.formula_catalog) : FormulaCatalog{},
              initial_memory(config), initial_user_inputs(config)) {}

Service::Service(ServiceConfig config, std::vector<IdentifierCatalog> identifier_catalogs,
                 FormulaCatalog formula_catalog, FcMemory memory, UserInputStore user_inputs)
    : config_(std::move(config)),
      identifier_catalogs_(std::move(identifier_catalogs)),
      formula_catalog_(std::move(formula_catalog)),
      stores_(std::move(memory), std::move(user_inputs)),
      logger_([](const Json& line) { std::cerr << line.dump() << std::endl; }),
      id_state_(std::random_device{}()) {
  fetch_options_.url_template = config_.wiki_url_template;
  fetch_options_.max_retries = config_.fetch_retries;
  if (config_.session_dir) {
    fs::create_directories(*config_.session_dir);
    for (const auto& file : fs::directory_iterator(*config_.session_dir)) {
      const fs::path& p = file.path();
      if (p.extension() != ".json" || p.filename().string().front() == '_') continue;
      Session s = load_session(p);
      std::string id = s.id();
      sessions_.emplace(id, std::make_shared<Entry>(std::move(s)));
    }
  }
}

std::size_t Service::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

std::string Service::new_session_id() {
  std::lock_guard lock(id_mutex_);
  std::mt19937_64 rng(id_state_);
  id_state_ = rng();
  static const char* hex = "0123456789abcdef";
  std::string id;
  std::uint64_t v = rng();
  for (int i = 0; i < 16; ++i, v >>= 4) id += hex[v & 15];
  return id;
}

std::shared_ptr<Service::Entry> Service::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::not_found, "no session '" + id + "'");
  return it->second;
}

void Service::persist(const Session& session) const {
  if (!config_.session_dir) return;
  save_session(session, *config_.session_dir / (session.id() + ".json"));
  write_file(*config_.session_dir / kMemoryFile, format_fc_memory(*stores_.memory()));
  write_file(*config_.session_dir / kUserInputFile, format_user_input_store(*stores_.user_inputs()));
}

ApiResponse Service::handle(const ApiRequest& request) {
  auto start = std::chrono::steady_clock::now();
  ApiResponse response;

  auto run = [&]() -> ApiResponse {
    try {
      return route(request);
    } catch (const Error& e) {
      return error_response(to_failure(e));
    } catch (const std::exception& e) {
      return error_response({500, "upstream_unavailable", "internal error", {{"what", e.what()}}});
    }
  };

  auto key_it = request.headers.find("idempotency-key");
  if (request.method != "GET" && key_it != request.headers.end() && !key_it->second.empty()) {
    std::string key = request.method + " " + request.path + " " + key_it->second;
    std::promise<ApiResponse> promise;
    std::shared_future<ApiResponse> future;
    bool owner = false;
    {
      std::lock_guard lock(idempotency_mutex_);
      auto it = idempotent_.find(key);
      if (it == idempotent_.end()) {
        future = promise.get_future().share();
        idempotent_.emplace(key, future);
        idempotent_order_.push_back(key);
        if (idempotent_order_.size() > kIdempotencyCapacity) {
          idempotent_.erase(idempotent_order_.front());
          idempotent_order_.pop_front();
        }
        owner = true;
      } else {
        future = it->second;
      }
    }
    if (owner) promise.set_value(run());
    response = future.get();
  } else {
    response = run();
  }

  if (logger_) {
    auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    logger_({{"ts_ms", std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count()},
             {"method", request.method},
             {"path", request.path},
             {"status", response.status},
             {"duration_ms", ms}});
  }
  return response;
}

ApiResponse Service::route(const ApiRequest& request) {
  auto parts = split_path(request.path);
  const std::string& m = request.method;
  auto not_found = [&]() {
    return error_response({404, "not_found", "no route " + m + " " + request.path, nullptr});
  };
  if (parts.empty() || parts[0] != "v1") return not_found();
  parts.erase(parts.begin());
  const std::size_t n = parts.size();

  if (n == 1 && parts[0] == "health" && m == "GET") return json_response(200, {{"status", "ok"}});
  if (n >= 1 && parts[0] == "sessions") {
    if (n == 1 && m == "POST") return create_session(request);
    if (n == 1 && m == "GET") {
      Json ids = Json::array();
      std::shared_lock lock(sessions_mutex_);
      for (const auto& [id, entry] : sessions_) ids.push_back(id);
      return json_response(200, {{"sessions", ids}});
    }
    if (n == 2 && m == "GET") return get_session(parts[1]);
    if (n == 3 && parts[2] == "recommendations" && m == "GET") return recommendations(parts[1], request);
    if (n == 3 && parts[2] == "annotations" && m == "POST") return annotate(parts[1], request);
    if (n == 4 && parts[2] == "annotations" && m == "DELETE") return unannotate(parts[1], parts[3]);
    if (n == 3 && parts[2] == "rejections" && m == "POST") return reject(parts[1], request);
    if (n == 3 && parts[2] == "export" && m == "GET") return export_table(parts[1], request);
  }
  if (n == 2 && parts[0] == "reports" && m == "GET") {
    if (parts[1] == "sources") return source_report_route();
    if (parts[1] == "timing") return timing_report_route();
  }
  if (n == 2 && parts[0] == "export" && parts[1] == "wikitext" && m == "POST") return export_wikitext(request);
  return not_found();
}

Json Service::session_view(const Session& s) const {
  Json segments = Json::array();
  for (std::size_t i = 0; i < s.segments().size(); ++i) {
    const MathSegment& seg = s.segments()[i];
    const TokenizedFormula& f = s.formulas()[i];
    Json tokens = Json::array();
    for (const Token& t : f.tokens) {
      if (t.kind != TokenKind::identifier) continue;
      IdentifierOccurrence occ{t.symbol, seg.segment_id, t.span.begin};
      std::string status = s.is_rejected(occ) ? "rejected" : s.annotation_at(occ) ? "annotated" : "unannotated";
      Json tj = t;
      tj["target"] = TargetRef::occurrence(t.symbol, seg.segment_id, t.span.begin).str();
      tj["status"] = status;
      tokens.push_back(tj);
    }
    std::string key = TargetRef::formula(seg.segment_id).str();
    std::string status = s.rejected().count(key) ? "rejected"
                         : s.formula_annotation(seg.segment_id) ? "annotated"
                                                                 : "unannotated";
    Json sj = seg;
    sj["target"] = key;
    sj["is_equation"] = f.is_equation;
    sj["status"] = status;
    sj["identifiers"] = tokens;
    segments.push_back(sj);
  }
  const RawDocument& d = s.document();
  return {{"session_id", s.id()},
          {"document",
           {{"title", d.title},
            {"format", to_string(d.format)},
            {"origin", to_string(d.origin)},
            {"revision", d.revision},
            {"retrieved_at_ms", d.retrieved_at_ms}}},
          {"segments", segments},
          {"annotations", s.annotation_table()},
          {"rejected", s.rejected()},
          {"progress", s.progress()},
          {"warnings", s.warnings()},
          {"diagnostics", s.diagnostics()}};
}

ApiResponse Service::create_session(const ApiRequest& request) {
  Json body = parse_body(request.body);
  RawDocument doc;
  if (body.contains("body")) {
    doc.body = field<std::string>(body, "body");
    doc.title = body.value("title", std::string());
    auto format = parse_document_format(body.value("format", std::string("wikitext")));
    if (!format) throw Error(ErrorCode::bad_argument, "unknown document format");
    doc.format = *format;
    doc.origin = DocumentOrigin::file;
    doc.retrieved_at_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::system_clock::now().time_since_epoch())
                              .count();
  } else if (body.contains("title")) {
    if (config_.wiki_base_url.empty())
      throw Error(ErrorCode::bad_argument, "no wiki base URL configured; send the body instead");
    // No lock is held here, so a slow fetch does not block other sessions.
    doc = fetch_article(field<std::string>(body, "title"), config_.wiki_base_url, fetch_options_);
  } else {
    throw Error(ErrorCode::bad_argument, "either 'title' or 'body' is required");
  }

  Session session(new_session_id(), std::move(doc), config_.tokenizer);
  if (body.contains("eval_seed")) {
    session.set_eval_seed(field<std::uint64_t>(body, "eval_seed"));
  } else {
    std::random_device rd;
    session.set_eval_seed((static_cast<std::uint64_t>(rd()) << 32) | rd());
  }
  Json view = session_view(session);
  persist(session);
  {
    std::unique_lock lock(sessions_mutex_);
    std::string id = session.id();
    sessions_.emplace(id, std::make_shared<Entry>(std::move(session)));
  }
  return json_response(201, view);
}

ApiResponse Service::get_session(const std::string& id) {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  return json_response(200, session_view(entry->session));
}

RecommendationSet Service::recommend(const Session& s, const TargetRef& target) const {
  if (target.kind == TargetKind::formula) {
    if (target.segment_id < 0 || static_cast<std::size_t>(target.segment_id) >= s.segments().size())
      throw Error(ErrorCode::unknown_target, target.str());
    if (s.rejected().count(target.str())) throw Error(ErrorCode::target_rejected, target.str());
    const MathSegment& seg = s.segments()[static_cast<std::size_t>(target.segment_id)];
    DocumentContext ctx{s.document(), s.segments(), seg};
    return recommend_formula(ctx, formula_catalog_, *stores_.memory(), s.annotated_identifier_qids(seg.segment_id),
                             *stores_.user_inputs(), config_.recommender);
  }
  const IdentifierOccurrence* occ = nullptr;
  for (const IdentifierOccurrence& o : s.occurrences()) {
    if (o.symbol != target.symbol) continue;
    if (!target.is_occurrence() || (o.segment_id == target.segment_id && o.token_offset == *target.token_offset)) {
      occ = &o;
      break;
    }
  }
  if (!occ) throw Error(ErrorCode::unknown_target, target.str());
  if (target.is_occurrence() ? s.is_rejected(*occ) : s.rejected().count(target.str()) > 0)
    throw Error(ErrorCode::target_rejected, target.str());
  const MathSegment& seg = s.segments()[static_cast<std::size_t>(occ->segment_id)];
  DocumentContext ctx{s.document(), s.segments(), seg};
  return recommend_identifier(target.symbol, ctx, identifier_catalogs_, *stores_.user_inputs(), config_.recommender);
}

ApiResponse Service::recommendations(const std::string& id, const ApiRequest& request) {
  auto it = request.query.find("target");
  if (it == request.query.end()) throw Error(ErrorCode::bad_argument, "query parameter 'target' is required");
  TargetRef target = parse_target(it->second);
  bool eval = request.query.count("eval") && truthy(request.query.at("eval"));

  auto entry = find(id);
  RecommendationSet set;
  std::uint64_t seed;
  {
    std::lock_guard lock(entry->mutex);
    set = recommend(entry->session, target);
    seed = entry->session.eval_seed();
  }
  if (auto s = request.query.find("seed"); s != request.query.end()) {
    try {
      seed = std::stoull(s->second);
    } catch (const std::exception&) {
      throw Error(ErrorCode::bad_argument, "seed must be an unsigned integer");
    }
  }
  set = presentation_order(std::move(set), seed, eval);

  Json columns = Json::array();
  for (const PresentationSlot& slot : set.presentation) {
    Json candidates = Json::array();
    for (const RecommendationCandidate& c : set.per_source.at(slot.source)) {
      Json cj = {{"name", c.name}, {"qid", optional_qid_json(c.qid)}, {"rank", c.rank}, {"score", c.score}};
      candidates.push_back(cj);
    }
    Json col = {{"label", slot.label}, {"candidates", candidates}};
    // Evaluation mode never reveals which source is behind a label.
    if (!eval) col["source"] = to_string(slot.source);
    columns.push_back(col);
  }
  return json_response(200, {{"target", target.str()}, {"eval", eval}, {"columns", columns}});
}

ApiResponse Service::annotate(const std::string& id, const ApiRequest& request) {
  Json body = parse_body(request.body);
  TargetRef target = parse_target(field<std::string>(body, "target"));
  std::string name = field<std::string>(body, "name");
  std::optional<Qid> qid;
  if (body.contains("qid") && !body["qid"].is_null()) qid = Qid::parse(field<std::string>(body, "qid"));
  AnnotationMode mode = AnnotationMode::global;
  if (body.contains("mode")) {
    auto parsed = parse_annotation_mode(field<std::string>(body, "mode"));
    if (!parsed) throw Error(ErrorCode::bad_argument, "mode must be 'global' or 'local'");
    mode = *parsed;
  }
  auto elapsed = field<std::int64_t>(body, "elapsed_ms");

  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  Session& s = entry->session;

  Provenance provenance = Provenance::manual();
  const Json prov = body.value("provenance", Json("manual"));
  if (prov.is_object() && prov.value("kind", std::string()) != "manual") {
    int position = field<int>(prov, "position");
    if (prov.contains("source")) {
      auto source = parse_source_kind(field<std::string>(prov, "source"));
      if (!source) throw Error(ErrorCode::bad_argument, "unknown source");
      provenance = Provenance::recommended(*source, position);
    } else {
      // An anonymized label resolves through the session's presentation order.
      std::string label = field<std::string>(prov, "label");
      RecommendationSet set = presentation_order(recommend(s, target), s.eval_seed(), true);
      auto slot = std::find_if(set.presentation.begin(), set.presentation.end(),
                               [&](const PresentationSlot& p) { return p.label == label; });
      if (slot == set.presentation.end()) throw Error(ErrorCode::bad_argument, "unknown source label '" + label + "'");
      provenance = Provenance::recommended(slot->source, position);
    }
  } else if (!prov.is_object() && prov != Json("manual")) {
    throw Error(ErrorCode::bad_argument, "provenance must be 'manual' or an object");
  }

  std::size_t warnings_before = s.warnings().size();
  const Annotation& a = s.annotate(target, name, qid, mode, provenance, elapsed, &stores_);
  Json result = {{"annotation", a},
                 {"annotations", s.annotation_table()},
                 {"progress", s.progress()},
                 {"warnings", std::vector<std::string>(s.warnings().begin() + static_cast<long>(warnings_before),
                                                       s.warnings().end())}};
  persist(s);
  return json_response(201, result);
}

ApiResponse Service::unannotate(const std::string& id, const std::string& target_text) {
  TargetRef target = parse_target(target_text);
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  entry->session.unannotate(target);
  persist(entry->session);
  return json_response(200, {{"annotations", entry->session.annotation_table()},
                             {"progress", entry->session.progress()}});
}

ApiResponse Service::reject(const std::string& id, const ApiRequest& request) {
  Json body = parse_body(request.body);
  TargetRef target = parse_target(field<std::string>(body, "target"));
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  entry->session.reject(target);
  persist(entry->session);
  return json_response(201, {{"rejected", entry->session.rejected()}, {"progress", entry->session.progress()}});
}

ApiResponse Service::source_report_route() {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, e] : sessions_) entries.push_back(e);
  }
  std::vector<std::unique_lock<std::mutex>> locks;
  std::vector<std::vector<AnnotationEvent>> logs;
  std::vector<const Session*> sessions;
  for (const auto& e : entries) {
    locks.emplace_back(e->mutex);
    logs.push_back(e->session.events());
    sessions.push_back(&e->session);
  }
  SourceReport report = source_report(EventLogs(logs));
  return json_response(200, {{"identifiers", report.identifiers},
                             {"formulae", report.formulae},
                             {"qid_coverage", qid_coverage(sessions)}});
}

ApiResponse Service::timing_report_route() {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, e] : sessions_) entries.push_back(e);
  }
  std::vector<std::vector<AnnotationEvent>> logs;
  for (const auto& e : entries) {
    std::lock_guard lock(e->mutex);
    logs.push_back(e->session.events());
  }
  return json_response(200, {{"timing", timing_report(EventLogs(logs))}});
}

ApiResponse Service::export_wikitext(const ApiRequest& request) {
  Json body = parse_body(request.body);
  auto entry = find(field<std::string>(body, "session_id"));
  LinkOptions options;
  options.quote_attrs = body.value("quote_attrs", false);
  options.block_only = body.value("block_only", false);
  std::lock_guard lock(entry->mutex);
  LinkResult r = link_session(entry->session, options);
  return json_response(200, {{"wikitext", r.wikitext},
                             {"stats",
                              {{"candidates", r.stats.candidates},
                               {"skipped_duplicates", r.stats.skipped_duplicates},
                               {"linked", r.stats.linked},
                               {"skipped_non_equation", r.stats.skipped_non_equation},
                               {"skipped_inline", r.stats.skipped_inline}}}});
}

ApiResponse Service::export_table(const std::string& id, const ApiRequest& request) {
  std::string format_text = request.query.count("format") ? request.query.at("format") : "json";
  auto format = parse_export_format(format_text);
  if (!format) throw Error(ErrorCode::bad_argument, "format must be csv or json");
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  auto rows = entry->session.annotation_table();
  return {200, format_annotations(rows, *format), *format == ExportFormat::csv ? "text/csv" : "application/json"};
}

// ---------------------------------------------------------------------------
// HTTP transport

void bind_routes(httplib::Server& server, Service& service) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    for (const auto& [k, v] : req.headers) {
      std::string lower = k;
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
      r.headers.emplace(lower, v);
    }
    r.body = req.body;
    ApiResponse out = service.handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  const std::string any = R"(/.*)";
  server.Get(any, handler);
  server.Post(any, handler);
  server.Delete(any, handler);
}

void run_server(Service& service, const std::string& host, int port) {
  httplib::Server server;
  bind_routes(server, service);
  if (!server.listen(host, port)) throw Error(ErrorCode::io_error, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace mathel
