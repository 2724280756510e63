#include "mathel/recommender.hpp"

#include <algorithm>
#include <random>

#include <json.hpp>

#include "mathel/error.hpp"
#include "mathel/levenshtein.hpp"

namespace mathel {

using nlohmann::json;

namespace {

int clamp_cutoff(int cutoff) { return std::clamp(cutoff, 1, kRankCutoff); }

void assign_ranks(std::vector<RecommendationCandidate>& list, SourceKind source, int cutoff) {
  if (list.size() > static_cast<std::size_t>(clamp_cutoff(cutoff)))
    list.resize(static_cast<std::size_t>(clamp_cutoff(cutoff)));
  for (std::size_t i = 0; i < list.size(); ++i) {
    list[i].rank = static_cast<int>(i) + 1;
    list[i].source = source;
  }
}

// Similarity desc, then ascending numeric QID, then name.
bool by_similarity(const RecommendationCandidate& a, const RecommendationCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (auto c = compare_optional_qid(a.qid, b.qid); c != 0) return c < 0;
  return a.name < b.name;
}

}  // namespace

// ---------------------------------------------------------------------------
// User input store

void UserInputStore::record(const std::string& key, const std::string& name,
                            const std::optional<Qid>& qid) {
  auto& list = entries_[key];
  auto it = std::find_if(list.begin(), list.end(),
                         [&](const Entry& e) { return e.name == name && e.qid == qid; });
  if (it != list.end())
    ++it->count;
  else
    list.push_back({name, qid, 1});
}

std::vector<RecommendationCandidate> UserInputStore::lookup(const std::string& key, int cutoff) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return {};
  std::vector<Entry> sorted = it->second;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Entry& a, const Entry& b) { return a.count > b.count; });
  std::vector<RecommendationCandidate> out;
  for (const Entry& e : sorted) out.push_back({e.name, e.qid, SourceKind::user_input, 0, 1.0});
  assign_ranks(out, SourceKind::user_input, cutoff);
  return out;
}

std::string format_user_input_store(const UserInputStore& store) {
  json doc = json::array();
  for (const auto& [key, list] : store.entries()) {
    json names = json::array();
    for (const auto& e : list)
      names.push_back({{"name", e.name},
                       {"qid", e.qid ? json(e.qid->str()) : json(nullptr)},
                       {"count", e.count}});
    doc.push_back({{"key", key}, {"names", names}});
  }
  return doc.dump(2) + "\n";
}

UserInputStore parse_user_input_store(std::string_view json_text) {
  UserInputStore store;
  try {
    json doc = json::parse(json_text);
    if (!doc.is_array()) throw Error(ErrorCode::schema_violation, "user input store must be an array");
    for (const json& obj : doc) {
      const std::string key = obj.at("key").get<std::string>();
      for (const json& n : obj.at("names")) {
        std::optional<Qid> qid;
        if (!n.at("qid").is_null()) qid = Qid::parse(n.at("qid").get<std::string>());
        int count = n.at("count").get<int>();
        if (count < 1) throw Error(ErrorCode::schema_violation, "user input count must be positive");
        for (int i = 0; i < count; ++i) store.record(key, n.at("name").get<std::string>(), qid);
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_violation, e.what());
  }
  return store;
}

std::string identifier_store_key(std::string_view symbol) { return std::string(symbol); }

std::string formula_store_key(std::string_view raw_latex) {
  return "formula:" + canonicalize_latex(raw_latex);
}

// ---------------------------------------------------------------------------
// Word window

namespace {

struct Word {
  std::size_t offset;
  std::string text;
};

void blank(std::string& visible, std::size_t begin, std::size_t end) {
  end = std::min(end, visible.size());
  for (std::size_t i = begin; i < end; ++i) visible[i] = ' ';
}

std::size_t find_or_end(std::string_view s, std::string_view needle, std::size_t from) {
  std::size_t at = s.find(needle, from);
  return at == std::string_view::npos ? s.size() : at;
}

// Hides Wikitext markup while keeping byte offsets.
void hide_wikitext_markup(std::string_view body, std::string& visible,
                          std::span<const MathSegment> segments) {
  std::size_t i = 0;
  auto next_math = segments.begin();
  while (i < body.size()) {
    while (next_math != segments.end() && next_math->span.end <= i) ++next_math;
    if (next_math != segments.end() && next_math->span.begin <= i) {
      i = next_math->span.end;
      continue;
    }
    if (body.compare(i, 4, "<!--") == 0) {
      std::size_t end = find_or_end(body, "-->", i + 4) + 3;
      blank(visible, i, end);
      i = end;
    } else if (body.compare(i, 4, "<ref") == 0) {
      std::size_t tag_end = find_or_end(body, ">", i) + 1;
      std::size_t end = tag_end;
      if (tag_end >= 2 && body[tag_end - 2] != '/') end = find_or_end(body, "</ref>", tag_end) + 6;
      blank(visible, i, end);
      i = end;
    } else if (body[i] == '<') {
      std::size_t end = find_or_end(body, ">", i) + 1;
      blank(visible, i, end);
      i = end;
    } else if (body.compare(i, 2, "{{") == 0) {
      int depth = 0;
      std::size_t j = i;
      for (; j < body.size(); ++j) {
        if (body.compare(j, 2, "{{") == 0) ++depth, ++j;
        else if (body.compare(j, 2, "}}") == 0 && --depth == 0) {
          j += 2;
          break;
        } else if (body.compare(j, 2, "}}") == 0) {
          ++j;
        }
      }
      blank(visible, i, j);
      i = j;
    } else if (body.compare(i, 2, "[[") == 0) {
      std::size_t close = find_or_end(body, "]]", i + 2);
      std::string_view inner = body.substr(i + 2, close - i - 2);
      if (inner.rfind("File:", 0) == 0 || inner.rfind("Image:", 0) == 0 ||
          inner.rfind("Category:", 0) == 0) {
        blank(visible, i, close + 2);
      } else {
        std::size_t pipe = inner.rfind('|');
        blank(visible, i, i + 2 + (pipe == std::string_view::npos ? 0 : pipe + 1));
        blank(visible, close, close + 2);
      }
      i = std::min(body.size(), close + 2);
    } else if (body[i] == '[' && (body.compare(i + 1, 4, "http") == 0)) {
      std::size_t space = body.find_first_of(" ]", i);
      std::size_t end = space == std::string_view::npos ? body.size() : space;
      blank(visible, i, end);
      i = end;
    } else {
      ++i;
    }
  }
}

void hide_latex_markup(std::string_view body, std::string& visible) {
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '%' && (i == 0 || body[i - 1] != '\\')) {
      std::size_t end = find_or_end(body, "\n", i);
      blank(visible, i, end);
      i = end;
    } else if (body[i] == '\\') {
      std::size_t j = i + 1;
      while (j < body.size() && std::isalpha(static_cast<unsigned char>(body[j]))) ++j;
      if (j == i + 1) j = std::min(body.size(), j + 1);
      blank(visible, i, j);
      i = j - 1;
    }
  }
}

bool trim_char(char c) {
  static constexpr std::string_view kPunct = ".,;:!?()[]{}\"'=*|#<>`~/\\";
  return kPunct.find(c) != std::string_view::npos;
}

std::vector<Word> prose_words(const RawDocument& doc, std::span<const MathSegment> segments) {
  std::string visible = doc.body;
  for (const MathSegment& s : segments) blank(visible, s.span.begin, s.span.end);
  if (doc.format == DocumentFormat::wikitext)
    hide_wikitext_markup(doc.body, visible, segments);
  else
    hide_latex_markup(doc.body, visible);

  std::vector<Word> words;
  std::size_t i = 0;
  auto separator = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '|' || c == '[' || c == ']' ||
           c == '{' || c == '}';
  };
  while (i < visible.size()) {
    while (i < visible.size() && separator(visible[i])) ++i;
    std::size_t begin = i;
    while (i < visible.size() && !separator(visible[i])) ++i;
    std::size_t b = begin, e = i;
    while (b < e && trim_char(visible[b])) ++b;
    while (e > b && trim_char(visible[e - 1])) --e;
    if (b == e) continue;
    std::string_view text(visible.data() + b, e - b);
    bool has_alnum = std::any_of(text.begin(), text.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80;
    });
    if (has_alnum) words.push_back({b, std::string(text)});
  }
  return words;
}

}  // namespace

std::vector<RecommendationCandidate> word_window(const RawDocument& doc,
                                                 std::span<const MathSegment> segments,
                                                 const MathSegment& segment, int k, int cutoff) {
  std::vector<Word> words = prose_words(doc, segments);
  auto after = std::lower_bound(words.begin(), words.end(), segment.span.end,
                                [](const Word& w, std::size_t off) { return w.offset < off; });
  auto before_end = std::lower_bound(words.begin(), words.end(), segment.span.begin,
                                     [](const Word& w, std::size_t off) { return w.offset < off; });

  std::vector<RecommendationCandidate> out;
  std::set<std::string> seen;
  auto push = [&](const Word& w) {
    if (seen.insert(w.text).second) out.push_back({w.text, std::nullopt, SourceKind::word_window, 0, 1.0});
  };
  for (int d = 0; d < k; ++d) {
    if (before_end - words.begin() > d) push(*(before_end - 1 - d));
    if (words.end() - after > d) push(*(after + d));
  }
  assign_ranks(out, SourceKind::word_window, cutoff);
  return out;
}

// ---------------------------------------------------------------------------
// Formula sources

std::vector<RecommendationCandidate> fuzzy_match(std::string_view raw_latex,
                                                 const FormulaCatalog& catalog, double threshold,
                                                 int cutoff) {
  const std::string query = canonicalize_latex(raw_latex);
  std::vector<RecommendationCandidate> out;
  for (const FormulaItem& item : catalog.items()) {
    if (!item.defining_formula) continue;
    double similarity = normalized_similarity(query, canonicalize_latex(*item.defining_formula));
    if (similarity >= threshold)
      out.push_back({item.name, item.qid, SourceKind::wikidata_fuzzy, 0, similarity});
  }
  std::stable_sort(out.begin(), out.end(), by_similarity);
  assign_ranks(out, SourceKind::wikidata_fuzzy, cutoff);
  return out;
}

std::vector<RecommendationCandidate> parts_overlap(const std::set<Qid>& annotated,
                                                   const FormulaCatalog& catalog, int cutoff) {
  struct Scored {
    RecommendationCandidate candidate;
    std::size_t intersection;
  };
  std::vector<Scored> scored;
  if (annotated.empty()) return {};
  for (const FormulaItem& item : catalog.items()) {
    if (item.has_part.empty()) continue;
    std::size_t shared = static_cast<std::size_t>(
        std::count_if(item.has_part.begin(), item.has_part.end(),
                      [&](const Qid& q) { return annotated.count(q) > 0; }));
    if (shared == 0) continue;
    double score = static_cast<double>(shared) / static_cast<double>(item.has_part.size());
    scored.push_back({{item.name, item.qid, SourceKind::wikidata_parts, 0, score}, shared});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.candidate.score != b.candidate.score) return a.candidate.score > b.candidate.score;
    if (a.intersection != b.intersection) return a.intersection > b.intersection;
    if (auto c = compare_optional_qid(a.candidate.qid, b.candidate.qid); c != 0) return c < 0;
    return a.candidate.name < b.candidate.name;
  });
  std::vector<RecommendationCandidate> out;
  for (auto& s : scored) out.push_back(std::move(s.candidate));
  assign_ranks(out, SourceKind::wikidata_parts, cutoff);
  return out;
}

std::vector<RecommendationCandidate> fc_memory_lookup(std::string_view raw_latex,
                                                      const FcMemory& memory, double threshold,
                                                      int cutoff) {
  const std::string query = canonicalize_latex(raw_latex);
  std::vector<RecommendationCandidate> out;
  for (const auto& [key, variants] : memory.concepts()) {
    double best = -1.0;
    for (const auto& [canonical, written] : variants)
      best = std::max(best, canonical == query ? 1.0 : normalized_similarity(query, canonical));
    if (best >= threshold) out.push_back({key.name, key.qid, SourceKind::fc_memory, 0, best});
  }
  std::stable_sort(out.begin(), out.end(), by_similarity);
  assign_ranks(out, SourceKind::fc_memory, cutoff);
  return out;
}

// ---------------------------------------------------------------------------
// Assembled sets

RecommendationSet recommend_identifier(std::string_view symbol, const DocumentContext& context,
                                       std::span<const IdentifierCatalog> catalogs,
                                       const UserInputStore& user_store,
                                       const RecommenderConfig& config) {
  RecommendationSet set;
  set.target = std::string(symbol);
  for (const IdentifierCatalog& catalog : catalogs) {
    std::vector<RecommendationCandidate> list;
    for (const IdentifierCandidate& c : catalog.candidates(symbol))
      list.push_back({c.name, c.qid, catalog.source_kind(), 0, 1.0});
    if (list.empty()) continue;
    auto& slot = set.per_source[catalog.source_kind()];
    slot.insert(slot.end(), list.begin(), list.end());
    assign_ranks(slot, catalog.source_kind(), config.cutoff);
  }
  if (auto ww = word_window(context.doc, context.segments, context.segment, config.word_window,
                            config.cutoff);
      !ww.empty())
    set.per_source[SourceKind::word_window] = std::move(ww);
  if (auto user = user_store.lookup(identifier_store_key(symbol), config.cutoff); !user.empty()) {
    auto& slot = set.per_source[SourceKind::user_input];
    slot.insert(slot.end(), user.begin(), user.end());
    assign_ranks(slot, SourceKind::user_input, config.cutoff);
  }
  return presentation_order(std::move(set), 0, false);
}

RecommendationSet recommend_formula(const DocumentContext& context, const FormulaCatalog& catalog,
                                    const FcMemory& memory,
                                    const std::set<Qid>& annotated_identifier_qids,
                                    const UserInputStore& user_store,
                                    const RecommenderConfig& config) {
  RecommendationSet set;
  set.target = "seg:" + std::to_string(context.segment.segment_id);
  const std::string& latex = context.segment.raw_latex;
  auto put = [&](SourceKind kind, std::vector<RecommendationCandidate> list) {
    if (!list.empty()) set.per_source[kind] = std::move(list);
  };
  put(SourceKind::wikidata_fuzzy, fuzzy_match(latex, catalog, config.fuzzy_threshold, config.cutoff));
  if (!annotated_identifier_qids.empty())
    put(SourceKind::wikidata_parts, parts_overlap(annotated_identifier_qids, catalog, config.cutoff));
  put(SourceKind::fc_memory, fc_memory_lookup(latex, memory, config.fuzzy_threshold, config.cutoff));
  put(SourceKind::word_window, word_window(context.doc, context.segments, context.segment,
                                           config.word_window, config.cutoff));
  put(SourceKind::user_input, user_store.lookup(formula_store_key(latex), config.cutoff));
  return presentation_order(std::move(set), 0, false);
}

// ---------------------------------------------------------------------------
// Presentation

namespace {

// Unbiased draw in [0, bound) by rejection; std distributions are not
// portable across standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = rng.max() - (rng.max() % bound);
  std::uint64_t x;
  do x = rng(); while (x >= limit);
  return x % bound;
}

}  // namespace

RecommendationSet presentation_order(RecommendationSet set, std::uint64_t seed, bool eval_mode) {
  std::vector<SourceKind> order;
  for (SourceKind kind : kAllSources)
    if (auto it = set.per_source.find(kind); it != set.per_source.end() && !it->second.empty())
      order.push_back(kind);

  set.presentation.clear();
  if (!eval_mode) {
    for (SourceKind kind : order) set.presentation.push_back({std::string(display_name(kind)), kind});
    return set;
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[bounded(rng, i)]);
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::string label = "Source ";
    if (i < 26) {
      label += static_cast<char>('A' + i);
    } else {
      label += std::to_string(i + 1);
    }
    set.presentation.push_back({label, order[i]});
  }
  return set;
}

}  // namespace mathel
