#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mathel/corpus.hpp"
#include "mathel/math_parser.hpp"
#include "mathel/qid.hpp"
#include "mathel/source.hpp"

namespace mathel {

// Ranking cutoff shared by every source list and by the evaluation metrics.
inline constexpr int kRankCutoff = 10;
inline constexpr int kDefaultWordWindow = 5;
inline constexpr double kDefaultFuzzyThreshold = 0.7;

struct RecommendationCandidate {
  std::string name;
  std::optional<Qid> qid;
  SourceKind source = SourceKind::word_window;
  int rank = 1;        // 1-based within its source list
  double score = 1.0;  // similarity or overlap; 1.0 for frequency lists

  friend bool operator==(const RecommendationCandidate&, const RecommendationCandidate&) = default;
};

struct PresentationSlot {
  std::string label;  // "Source A" in evaluation mode, else the real name
  SourceKind source;

  friend bool operator==(const PresentationSlot&, const PresentationSlot&) = default;
};

struct RecommendationSet {
  std::string target;  // identifier symbol, or "seg:<id>" for formulae
  std::map<SourceKind, std::vector<RecommendationCandidate>> per_source;
  std::vector<PresentationSlot> presentation;

  friend bool operator==(const RecommendationSet&, const RecommendationSet&) = default;
};

struct RecommenderConfig {
  double fuzzy_threshold = kDefaultFuzzyThreshold;
  int cutoff = kRankCutoff;  // clamped to [1, kRankCutoff]
  int word_window = kDefaultWordWindow;
};

// Names typed in manually, offered back later for the same target key.
// Ranked by how often a name was entered, then by first entry.
class UserInputStore {
 public:
  struct Entry {
    std::string name;
    std::optional<Qid> qid;
    int count = 0;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  void record(const std::string& key, const std::string& name, const std::optional<Qid>& qid);
  std::vector<RecommendationCandidate> lookup(const std::string& key, int cutoff = kRankCutoff) const;
  const std::map<std::string, std::vector<Entry>>& entries() const noexcept { return entries_; }

  friend bool operator==(const UserInputStore&, const UserInputStore&) = default;

 private:
  std::map<std::string, std::vector<Entry>> entries_;
};

std::string format_user_input_store(const UserInputStore& store);
UserInputStore parse_user_input_store(std::string_view json_text);

// User-input keys: the symbol itself for identifiers, "formula:" plus the
// canonical LaTeX for formulae.
std::string identifier_store_key(std::string_view symbol);
std::string formula_store_key(std::string_view raw_latex);

// The +-k prose words around `segment`, markup and other math removed,
// nearest first with the preceding word ahead of the following one.
std::vector<RecommendationCandidate> word_window(const RawDocument& doc,
                                                 std::span<const MathSegment> segments,
                                                 const MathSegment& segment,
                                                 int k = kDefaultWordWindow,
                                                 int cutoff = kRankCutoff);

// Candidates whose canonical defining formula is within `threshold`
// normalized-Levenshtein similarity of the query.
std::vector<RecommendationCandidate> fuzzy_match(std::string_view raw_latex,
                                                 const FormulaCatalog& catalog,
                                                 double threshold = kDefaultFuzzyThreshold,
                                                 int cutoff = kRankCutoff);

// Items sharing parts with the annotated identifier QIDs, scored by
// |has_part ∩ annotated| / |has_part|.
std::vector<RecommendationCandidate> parts_overlap(const std::set<Qid>& annotated_identifier_qids,
                                                   const FormulaCatalog& catalog,
                                                   int cutoff = kRankCutoff);

std::vector<RecommendationCandidate> fc_memory_lookup(std::string_view raw_latex,
                                                      const FcMemory& memory,
                                                      double threshold = kDefaultFuzzyThreshold,
                                                      int cutoff = kRankCutoff);

struct DocumentContext {
  const RawDocument& doc;
  std::span<const MathSegment> segments;
  const MathSegment& segment;
};

RecommendationSet recommend_identifier(std::string_view symbol, const DocumentContext& context,
                                       std::span<const IdentifierCatalog> catalogs,
                                       const UserInputStore& user_store,
                                       const RecommenderConfig& config = {});

// `annotated_identifier_qids` are the QIDs already given to identifiers of
// this segment; the parts source is omitted when it is empty.
RecommendationSet recommend_formula(const DocumentContext& context, const FormulaCatalog& catalog,
                                    const FcMemory& memory,
                                    const std::set<Qid>& annotated_identifier_qids,
                                    const UserInputStore& user_store,
                                    const RecommenderConfig& config = {});

// Evaluation mode shuffles the non-empty sources with a seed-determined
// permutation and labels them "Source A", "Source B", ...; otherwise the
// canonical order with real names.
RecommendationSet presentation_order(RecommendationSet set, std::uint64_t seed, bool eval_mode);

}  // namespace mathel
