#include "mathel/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mathel/error.hpp"
#include "mathel/math_parser.hpp"
#include "mathel/symbols.hpp"

namespace mathel {

using nlohmann::json;

std::string_view to_string(DocumentFormat format) {
  return format == DocumentFormat::latex ? "latex" : "wikitext";
}

std::string_view to_string(DocumentOrigin origin) {
  return origin == DocumentOrigin::remote ? "remote" : "file";
}

std::optional<DocumentFormat> parse_document_format(std::string_view text) {
  if (text == "wikitext") return DocumentFormat::wikitext;
  if (text == "latex") return DocumentFormat::latex;
  return std::nullopt;
}

std::optional<DocumentOrigin> parse_document_origin(std::string_view text) {
  if (text == "file") return DocumentOrigin::file;
  if (text == "remote") return DocumentOrigin::remote;
  return std::nullopt;
}

std::string_view to_string(IdentifierProperty property) {
  return property == IdentifierProperty::calculated_from ? "calculated_from" : "has_part";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::file_missing, path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// IdentifierCatalog

IdentifierCatalog::IdentifierCatalog(SourceKind source_kind, Entries entries)
    : source_kind_(source_kind), entries_(std::move(entries)) {
  for (auto& [symbol, list] : entries_) {
    if (!is_identifier_symbol(symbol))
      throw Error(ErrorCode::schema_violation, "not an identifier symbol: " + symbol);
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i].frequency_rank < 1)
        throw Error(ErrorCode::schema_violation, "rank must be positive for " + symbol);
      if (i > 0 && list[i].frequency_rank <= list[i - 1].frequency_rank)
        throw Error(ErrorCode::schema_violation, "ranks not strictly increasing for " + symbol);
    }
  }
}

std::span<const IdentifierCandidate> IdentifierCatalog::candidates(std::string_view symbol) const {
  auto it = entries_.find(std::string(symbol));
  if (it == entries_.end()) return {};
  return it->second;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

IdentifierCatalog parse_identifier_catalog(std::string_view text, SourceKind source_kind) {
  struct Row {
    IdentifierCandidate candidate;
    std::size_t line_no;
  };
  std::map<std::string, std::vector<Row>> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? nl : nl - start);
    start = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    auto fields = split_tabs(line);
    if (fields.size() != 4)
      throw Error(ErrorCode::schema_violation, "expected 4 tab-separated fields", line_no);
    std::string symbol(fields[0]);
    if (!is_identifier_symbol(symbol))
      throw Error(ErrorCode::schema_violation, "not an identifier symbol: " + symbol, line_no);
    if (fields[1].empty()) throw Error(ErrorCode::schema_violation, "empty name", line_no);
    std::optional<Qid> qid;
    if (!fields[2].empty()) {
      qid = Qid::try_parse(fields[2]);
      if (!qid) throw Error(ErrorCode::invalid_qid, std::string(fields[2]), line_no);
    }
    int rank = 0;
    auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), rank);
    if (ec != std::errc{} || ptr != fields[3].data() + fields[3].size() || rank < 1)
      throw Error(ErrorCode::schema_violation, "rank must be a positive integer", line_no);

    auto& list = rows[symbol];
    auto same = std::find_if(list.begin(), list.end(),
                             [&](const Row& r) { return r.candidate.name == fields[1]; });
    if (same != list.end()) {
      if (rank < same->candidate.frequency_rank) *same = {{std::string(fields[1]), qid, rank}, line_no};
      continue;
    }
    list.push_back({{std::string(fields[1]), qid, rank}, line_no});
  }

  IdentifierCatalog::Entries entries;
  for (auto& [symbol, list] : rows) {
    std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) {
      return a.candidate.frequency_rank < b.candidate.frequency_rank;
    });
    auto& out = entries[symbol];
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i > 0 && list[i].candidate.frequency_rank == list[i - 1].candidate.frequency_rank)
        throw Error(ErrorCode::schema_violation,
                    "rank " + std::to_string(list[i].candidate.frequency_rank) +
                        " used twice for " + symbol,
                    std::max(list[i].line_no, list[i - 1].line_no));
      out.push_back(list[i].candidate);
    }
  }
  return IdentifierCatalog(source_kind, std::move(entries));
}

IdentifierCatalog load_identifier_catalog(const std::filesystem::path& path,
                                          SourceKind source_kind) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::file_missing, path.string());
  return parse_identifier_catalog(read_file(path), source_kind);
}

std::string format_identifier_catalog(const IdentifierCatalog& catalog) {
  std::string out;
  for (const auto& [symbol, list] : catalog.entries())
    for (const auto& c : list)
      out += symbol + '\t' + c.name + '\t' + (c.qid ? c.qid->str() : std::string()) + '\t' +
             std::to_string(c.frequency_rank) + '\n';
  return out;
}

void save_identifier_catalog(const IdentifierCatalog& catalog, const std::filesystem::path& path) {
  write_file(path, format_identifier_catalog(catalog));
}

// ---------------------------------------------------------------------------
// FormulaCatalog

FormulaCatalog::FormulaCatalog(std::vector<FormulaItem> items) : items_(std::move(items)) {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!index_.emplace(items_[i].qid, i).second)
      throw Error(ErrorCode::duplicate_qid, items_[i].qid.str());
  }
}

const FormulaItem* FormulaCatalog::find(const Qid& qid) const {
  auto it = index_.find(qid);
  return it == index_.end() ? nullptr : &items_[it->second];
}

namespace {

std::string require_string(const json& obj, const char* key, std::size_t index) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw Error(ErrorCode::schema_violation,
                "entry " + std::to_string(index) + ": '" + key + "' must be a string");
  return it->get<std::string>();
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::schema_violation, e.what());
  }
}

Qid require_qid(const json& value, std::size_t index) {
  if (!value.is_string())
    throw Error(ErrorCode::schema_violation, "entry " + std::to_string(index) + ": QID must be a string");
  auto qid = Qid::try_parse(value.get<std::string>());
  if (!qid)
    throw Error(ErrorCode::invalid_qid,
                "entry " + std::to_string(index) + ": bad QID " + value.get<std::string>());
  return *qid;
}

}  // namespace

FormulaCatalog parse_formula_catalog(std::string_view json_text) {
  json doc = parse_json(json_text);
  if (!doc.is_array()) throw Error(ErrorCode::schema_violation, "formula catalog must be an array");
  std::vector<FormulaItem> items;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& obj = doc[i];
    if (!obj.is_object()) throw Error(ErrorCode::schema_violation, "entry " + std::to_string(i));
    auto qid_it = obj.find("qid");
    if (qid_it == obj.end()) throw Error(ErrorCode::schema_violation, "entry " + std::to_string(i) + ": missing qid");
    FormulaItem item{require_qid(*qid_it, i), require_string(obj, "name", i), std::nullopt, {},
                     IdentifierProperty::has_part};
    if (auto f = obj.find("defining_formula"); f != obj.end() && !f->is_null()) {
      if (!f->is_string() || f->get<std::string>().empty())
        throw Error(ErrorCode::schema_violation,
                    "entry " + std::to_string(i) + ": defining_formula must be a non-empty string or null");
      item.defining_formula = f->get<std::string>();
    }
    if (auto parts = obj.find("has_part"); parts != obj.end()) {
      if (!parts->is_array())
        throw Error(ErrorCode::schema_violation, "entry " + std::to_string(i) + ": has_part must be an array");
      for (const json& p : *parts) item.has_part.insert(require_qid(p, i));
    }
    if (auto prop = obj.find("identifier_property"); prop != obj.end()) {
      if (*prop == "calculated_from")
        item.identifier_property = IdentifierProperty::calculated_from;
      else if (*prop != "has_part")
        throw Error(ErrorCode::schema_violation, "entry " + std::to_string(i) + ": bad identifier_property");
    }
    items.push_back(std::move(item));
  }
  return FormulaCatalog(std::move(items));
}

FormulaCatalog load_formula_catalog(const std::filesystem::path& path) {
  return parse_formula_catalog(read_file(path));
}

std::string format_formula_catalog(const FormulaCatalog& catalog) {
  json doc = json::array();
  for (const auto& item : catalog.items()) {
    json parts = json::array();
    for (const auto& p : item.has_part) parts.push_back(p.str());
    json obj = {{"qid", item.qid.str()},
                {"name", item.name},
                {"defining_formula", item.defining_formula ? json(*item.defining_formula) : json(nullptr)},
                {"has_part", parts}};
    if (item.identifier_property != IdentifierProperty::has_part)
      obj["identifier_property"] = std::string(to_string(item.identifier_property));
    doc.push_back(std::move(obj));
  }
  return doc.dump(2) + "\n";
}

void save_formula_catalog(const FormulaCatalog& catalog, const std::filesystem::path& path) {
  write_file(path, format_formula_catalog(catalog));
}

// ---------------------------------------------------------------------------
// FcMemory

bool FcMemory::add_variant(const ConceptKey& key, std::string_view latex) {
  auto& variants = concepts_[key];
  return variants.emplace(canonicalize_latex(latex), std::string(latex)).second;
}

void FcMemory::add_concept(const ConceptKey& key) { concepts_[key]; }

const FcMemory::Variants* FcMemory::variants(const ConceptKey& key) const {
  auto it = concepts_.find(key);
  return it == concepts_.end() ? nullptr : &it->second;
}

std::size_t FcMemory::variant_count(const ConceptKey& key) const {
  const Variants* v = variants(key);
  return v ? v->size() : 0;
}

FcMemory parse_fc_memory(std::string_view json_text) {
  json doc = parse_json(json_text);
  if (!doc.is_array()) throw Error(ErrorCode::schema_violation, "FC memory must be an array");
  FcMemory memory;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& obj = doc[i];
    if (!obj.is_object()) throw Error(ErrorCode::schema_violation, "entry " + std::to_string(i));
    ConceptKey key{require_string(obj, "name", i), std::nullopt};
    if (auto q = obj.find("qid"); q != obj.end() && !q->is_null()) key.qid = require_qid(*q, i);
    if (memory.variants(key))
      throw Error(ErrorCode::schema_violation, "entry " + std::to_string(i) + ": concept listed twice");
    auto variants = obj.find("variants");
    if (variants == obj.end() || !variants->is_array())
      throw Error(ErrorCode::schema_violation, "entry " + std::to_string(i) + ": variants must be an array");
    memory.add_concept(key);
    for (const json& v : *variants) {
      if (!v.is_string()) throw Error(ErrorCode::schema_violation, "entry " + std::to_string(i) + ": variant");
      memory.add_variant(key, v.get<std::string>());
    }
  }
  return memory;
}

FcMemory load_fc_memory(const std::filesystem::path& path) { return parse_fc_memory(read_file(path)); }

std::string format_fc_memory(const FcMemory& memory) {
  json doc = json::array();
  for (const auto& [key, variants] : memory.concepts()) {
    json list = json::array();
    for (const auto& [canonical, written] : variants) list.push_back(written);
    doc.push_back({{"name", key.name},
                   {"qid", key.qid ? json(key.qid->str()) : json(nullptr)},
                   {"variants", list}});
  }
  return doc.dump(2) + "\n";
}

void save_fc_memory(const FcMemory& memory, const std::filesystem::path& path) {
  write_file(path, format_fc_memory(memory));
}

// ---------------------------------------------------------------------------
// Articles

namespace {

std::int64_t system_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string encode_title(std::string_view title) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : title) {
    if (c == ' ') {
      out += '_';
    } else if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~' || c == '(' ||
               c == ')' || c == ',' || c == '\'') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
    }
  }
  return out;
}

bool is_url(std::string_view endpoint) {
  return endpoint.rfind("http://", 0) == 0 || endpoint.rfind("https://", 0) == 0;
}

RawDocument fetch_remote(const std::string& title, const std::string& endpoint,
                         const FetchOptions& options) {
  std::string path = options.url_template;
  if (auto at = path.find("{title}"); at != std::string::npos)
    path.replace(at, 7, encode_title(title));

  httplib::Client client(endpoint);
  client.set_connection_timeout(options.timeout);
  client.set_read_timeout(options.timeout);
  client.set_follow_location(true);

  auto sleep = options.sleep ? options.sleep
                             : [](std::chrono::seconds s) { std::this_thread::sleep_for(s); };
  for (int attempt = 0;; ++attempt) {
    auto res = client.Get(path);
    const bool last = attempt >= options.max_retries;
    if (!res) {
      if (last)
        throw Error(ErrorCode::network_error, endpoint + path + ": " + httplib::to_string(res.error()));
      sleep(std::chrono::seconds(1));
      continue;
    }
    if (res->status == 200) {
      RawDocument doc;
      doc.title = title;
      doc.body = res->body;
      doc.format = DocumentFormat::wikitext;
      doc.origin = DocumentOrigin::remote;
      doc.retrieved_at_ms = options.now_ms ? options.now_ms() : system_now_ms();
      doc.revision = res->get_header_value("ETag");
      if (doc.body.empty()) throw Error(ErrorCode::not_found, title + " (empty page)");
      return doc;
    }
    if (res->status == 404) throw Error(ErrorCode::not_found, title);
    if (res->status == 429 || res->status == 503) {
      std::chrono::seconds wait{1};
      if (res->has_header("Retry-After")) {
        int seconds = 0;
        auto value = res->get_header_value("Retry-After");
        std::from_chars(value.data(), value.data() + value.size(), seconds);
        wait = std::chrono::seconds(std::max(0, seconds));
      }
      if (last || wait > options.max_retry_wait)
        throw Error(ErrorCode::rate_limited,
                    title + " (retry after " + std::to_string(wait.count()) + "s)");
      sleep(wait);
      continue;
    }
    if (last)
      throw Error(ErrorCode::network_error, endpoint + path + ": HTTP " + std::to_string(res->status));
    sleep(std::chrono::seconds(1));
  }
}

}  // namespace

RawDocument load_document(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw Error(ErrorCode::not_found, path.string());
  RawDocument doc;
  doc.title = path.stem().string();
  doc.body = read_file(path);
  doc.format = path.extension() == ".tex" ? DocumentFormat::latex : DocumentFormat::wikitext;
  doc.origin = DocumentOrigin::file;
  doc.retrieved_at_ms = system_now_ms();
  if (doc.body.empty()) throw Error(ErrorCode::schema_violation, path.string() + " is empty");
  return doc;
}

RawDocument fetch_article(const std::string& title, const std::string& endpoint,
                          const FetchOptions& options) {
  if (is_url(endpoint)) return fetch_remote(title, endpoint, options);

  std::filesystem::path base(endpoint);
  std::filesystem::path found;
  if (std::filesystem::is_directory(base)) {
    std::string underscored = title;
    std::replace(underscored.begin(), underscored.end(), ' ', '_');
    for (const std::string& stem : {title, underscored})
      for (const char* ext : {".wiki", ".wikitext", ".txt", ".tex"})
        if (found.empty() && std::filesystem::is_regular_file(base / (stem + ext)))
          found = base / (stem + ext);
  } else if (std::filesystem::is_regular_file(base)) {
    found = base;
  }
  if (found.empty()) throw Error(ErrorCode::not_found, title);
  RawDocument doc = load_document(found);
  doc.title = title;
  if (options.now_ms) doc.retrieved_at_ms = options.now_ms();
  return doc;
}

}  // namespace mathel
