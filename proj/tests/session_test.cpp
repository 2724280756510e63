#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "mathel/error.hpp"
#include "mathel/json.hpp"
#include "mathel/session.hpp"

using namespace mathel;
using mathel::testing::mass_energy;
using mathel::testing::wiki;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::bad_argument;
}

const auto kMass = Qid::parse("Q11423");
const auto kEnergy = Qid::parse("Q11379");

Session fresh() {
  Session s("s1", mass_energy());
  std::int64_t t = 1000;
  s.set_clock([t]() mutable { return t += 10; });
  return s;
}

void check_counts(const Session& s) {
  std::set<std::string> symbols;
  for (const auto& o : s.occurrences()) symbols.insert(o.symbol);
  for (const std::string& sym : symbols) {
    std::size_t total = s.occurrence_count(sym);
    std::size_t annotated = s.annotated_occurrence_count(sym);
    std::size_t rejected = s.rejected_occurrence_count(sym);
    ASSERT_LE(annotated + rejected, total) << sym;
    if (s.annotations().count(TargetRef::identifier(sym).str()))
      ASSERT_EQ(annotated + rejected, total) << sym;
    std::size_t counted = 0;
    for (const auto& o : s.occurrences())
      if (o.symbol == sym && s.annotation_at(o)) ++counted;
    ASSERT_EQ(counted, annotated) << sym;
  }
  Progress p = s.progress();
  ASSERT_LE(p.annotated + p.rejected, p.total_targets);
}

}  // namespace

TEST(SessionTest, OccurrencesOfEnergy) {
  Session s = fresh();
  EXPECT_EQ(s.segments().size(), 10u);
  EXPECT_EQ(s.occurrence_count("E"), 6u);
  std::set<int> segs;
  for (const auto& o : s.occurrences())
    if (o.symbol == "E") segs.insert(o.segment_id);
  EXPECT_EQ(segs, (std::set<int>{0, 1, 4, 5, 8, 9}));
}

TEST(SessionTest, GlobalAnnotationCoversAllOccurrences) {
  Session s = fresh();
  s.annotate(TargetRef::identifier("E"), "energy", kEnergy, AnnotationMode::global,
             Provenance::recommended(SourceKind::arxiv, 1), 2400);
  EXPECT_EQ(s.annotated_occurrence_count("E"), 6u);
  EXPECT_EQ(s.events().size(), 1u);
  EXPECT_EQ(s.events()[0].kind, EventKind::accept_recommendation);
  EXPECT_EQ(s.events()[0].timestamp_ms, 1010);
  EXPECT_EQ(code_of([&] {
              s.annotate(TargetRef::identifier("E"), "energy", kEnergy, AnnotationMode::global, Provenance::manual(), 1);
            }),
            ErrorCode::already_annotated);
}

TEST(SessionTest, LocalAnnotationWinsAtItsOccurrence) {
  Session s = fresh();
  s.annotate(TargetRef::identifier("E"), "energy", kEnergy, AnnotationMode::global, Provenance::manual(), 100);
  const IdentifierOccurrence* rest = nullptr;
  for (const auto& o : s.occurrences())
    if (o.symbol == "E" && o.segment_id == 4) rest = &o;
  ASSERT_NE(rest, nullptr);
  s.annotate(TargetRef::occurrence("E", 4, rest->token_offset), "rest energy", std::nullopt, AnnotationMode::local,
             Provenance::manual(), 100);
  EXPECT_EQ(s.annotation_at(*rest)->name, "rest energy");
  EXPECT_EQ(s.annotated_occurrence_count("E"), 6u);
  EXPECT_FALSE(s.warnings().empty());
  s.unannotate(TargetRef::occurrence("E", 4, rest->token_offset));
  EXPECT_EQ(s.annotation_at(*rest)->name, "energy");
}

TEST(SessionTest, UnannotateAppendsUndo) {
  Session s = fresh();
  s.annotate(TargetRef::identifier("m"), "mass", kMass, AnnotationMode::global, Provenance::manual(), 10);
  s.unannotate(TargetRef::identifier("m"));
  EXPECT_EQ(s.annotated_occurrence_count("m"), 0u);
  ASSERT_EQ(s.events().size(), 2u);
  EXPECT_EQ(s.events()[1].kind, EventKind::undo);
  EXPECT_EQ(s.events()[1].reverts, s.events()[0].seq);
  EXPECT_EQ(code_of([&] { s.unannotate(TargetRef::identifier("m")); }), ErrorCode::not_annotated);
}

TEST(SessionTest, RejectionsShrinkProgressDenominator) {
  Session s = fresh();
  Progress before = s.progress();
  s.reject(TargetRef::formula(7));
  s.reject(TargetRef::identifier("p"));
  Progress after = s.progress();
  EXPECT_EQ(after.rejected, before.rejected + 3);  // p occurs in segments 7 and 8
  EXPECT_EQ(after.denominator(), before.denominator() - 3);
  EXPECT_EQ(code_of([&] { s.reject(TargetRef::formula(7)); }), ErrorCode::already_rejected);
  EXPECT_EQ(code_of([&] {
              s.annotate(TargetRef::identifier("p"), "momentum", std::nullopt, AnnotationMode::global,
                         Provenance::manual(), 1);
            }),
            ErrorCode::target_rejected);
  s.annotate(TargetRef::formula(0), "mass-energy equivalence", Qid::parse("Q35875"), AnnotationMode::global,
             Provenance::recommended(SourceKind::wikidata_fuzzy, 1), 3000);
  EXPECT_EQ(code_of([&] { s.reject(TargetRef::formula(0)); }), ErrorCode::already_annotated);
}

TEST(SessionTest, ValidatesTargetsAndArguments) {
  Session s = fresh();
  EXPECT_EQ(code_of([&] { s.reject(TargetRef::identifier("z")); }), ErrorCode::unknown_target);
  EXPECT_EQ(code_of([&] { s.reject(TargetRef::formula(42)); }), ErrorCode::unknown_target);
  EXPECT_EQ(code_of([&] { s.reject(TargetRef::occurrence("E", 0, 99)); }), ErrorCode::unknown_target);
  EXPECT_EQ(code_of([&] {
              s.annotate(TargetRef::identifier("E"), "", std::nullopt, AnnotationMode::global, Provenance::manual(), 1);
            }),
            ErrorCode::bad_argument);
  EXPECT_EQ(code_of([&] {
              s.annotate(TargetRef::identifier("E"), "energy", std::nullopt, AnnotationMode::global,
                         Provenance::recommended(SourceKind::arxiv, 11), 1);
            }),
            ErrorCode::bad_argument);
  EXPECT_EQ(code_of([&] {
              s.annotate(TargetRef::identifier("E"), "energy", std::nullopt, AnnotationMode::global,
                         Provenance::manual(), -5);
            }),
            ErrorCode::bad_argument);
  EXPECT_EQ(code_of([] { TargetRef::parse("seg:x"); }), ErrorCode::bad_argument);
  EXPECT_EQ(code_of([] { TargetRef::parse("foo"); }), ErrorCode::bad_argument);
  EXPECT_EQ(TargetRef::parse("id:m@3:5"), TargetRef::occurrence("m", 3, 5));
  EXPECT_EQ(TargetRef::parse("id:\\gamma").symbol, "\\gamma");
  EXPECT_EQ(TargetRef::occurrence("m", 3, 5).str(), "id:m@3:5");
}

TEST(SessionTest, AnnotationTableOneRowPerEffectiveAnnotation) {
  Session s = fresh();
  s.annotate(TargetRef::identifier("m"), "mass", kMass, AnnotationMode::global, Provenance::manual(), 10);
  s.annotate(TargetRef::identifier("E"), "energy", kEnergy, AnnotationMode::global,
             Provenance::recommended(SourceKind::wikidata, 2), 10);
  s.annotate(TargetRef::identifier("c"), "speed of light", Qid::parse("Q2111"), AnnotationMode::global,
             Provenance::recommended(SourceKind::arxiv, 1), 10);
  s.annotate(TargetRef::formula(0), "mass-energy equivalence", Qid::parse("Q35875"), AnnotationMode::global,
             Provenance::recommended(SourceKind::fc_memory, 1), 10);
  auto rows = s.annotation_table();
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].target, "id:E");
  EXPECT_TRUE(rows[0].bold);
  EXPECT_EQ(rows[3].kind, TargetKind::formula);
  EXPECT_FALSE(rows[3].bold);
  EXPECT_EQ(rows[3].target_text, "E=m\\,c^2");
  EXPECT_EQ(s.formula_qids().at(0), Qid::parse("Q35875"));
  EXPECT_EQ(s.annotated_identifier_qids(0), (std::set<Qid>{kEnergy, kMass, Qid::parse("Q2111")}));
}

TEST(SessionTest, LearnsIntoSharedStores) {
  SharedStores stores;
  Session s = fresh();
  s.annotate(TargetRef::formula(0), "mass-energy equivalence", Qid::parse("Q35875"), AnnotationMode::global,
             Provenance::manual(), 10, &stores);
  s.annotate(TargetRef::identifier("m"), "mass", kMass, AnnotationMode::global, Provenance::manual(), 10, &stores);
  EXPECT_EQ(stores.memory()->variant_count({"mass-energy equivalence", Qid::parse("Q35875")}), 1u);
  ASSERT_EQ(stores.user_inputs()->lookup("m").size(), 1u);
  EXPECT_EQ(stores.user_inputs()->lookup("m")[0].name, "mass");
}

TEST(SessionTest, SaveLoadRoundTrip) {
  Session s = fresh();
  s.set_eval_seed(99);
  s.annotate(TargetRef::identifier("m"), "mass", kMass, AnnotationMode::global, Provenance::manual(), 10);
  s.reject(TargetRef::formula(3));
  s.unannotate(TargetRef::identifier("m"));
  s.annotate(TargetRef::identifier("m"), "mass", kMass, AnnotationMode::global,
             Provenance::recommended(SourceKind::arxiv, 1), 10);
  std::string text = format_session(s);
  Session back = parse_session(text);
  EXPECT_EQ(back.events(), s.events());
  EXPECT_EQ(back.annotations(), s.annotations());
  EXPECT_EQ(back.rejected(), s.rejected());
  EXPECT_EQ(back.eval_seed(), 99u);
  EXPECT_EQ(format_session(back), text);

  auto path = std::filesystem::temp_directory_path() / "mathel_session_test.json";
  save_session(s, path);
  EXPECT_EQ(format_session(load_session(path)), text);
  std::filesystem::remove(path);
}

TEST(SessionTest, RejectsForeignVersionsAndTampering) {
  Session s = fresh();
  s.annotate(TargetRef::identifier("m"), "mass", kMass, AnnotationMode::global, Provenance::manual(), 10);
  Json j = Json::parse(format_session(s));
  Json v = j;
  v["version"] = kSessionFormatVersion + 1;
  EXPECT_EQ(code_of([&] { parse_session(v.dump()); }), ErrorCode::version_mismatch);
  Json gap = j;
  gap["events"][0]["seq"] = 5;
  EXPECT_EQ(code_of([&] { parse_session(gap.dump()); }), ErrorCode::replay_mismatch);
  EXPECT_EQ(code_of([] { parse_session("{}"); }), ErrorCode::schema_violation);
}

TEST(SessionTest, RandomReplayIsDeterministic) {
  RawDocument doc = mass_energy();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    Session s("r", doc);
    std::int64_t t = 0;
    s.set_clock([&t] { return t += 7; });
    std::vector<TargetRef> targets;
    std::set<std::string> symbols;
    for (const auto& o : s.occurrences()) {
      targets.push_back(TargetRef::occurrence(o.symbol, o.segment_id, o.token_offset));
      symbols.insert(o.symbol);
    }
    for (const auto& sym : symbols) targets.push_back(TargetRef::identifier(sym));
    for (const auto& seg : s.segments()) targets.push_back(TargetRef::formula(seg.segment_id));
    const std::vector<SourceKind> sources = {SourceKind::arxiv, SourceKind::wikipedia, SourceKind::wikidata,
                                             SourceKind::word_window};
    int events = static_cast<int>(rng() % 1001);
    for (int i = 0; i < events; ++i) {
      const TargetRef& target = targets[rng() % targets.size()];
      try {
        switch (rng() % 4) {
          case 0:
          case 1: {
            AnnotationMode mode = target.is_occurrence() ? AnnotationMode::local : AnnotationMode::global;
            Provenance p = rng() % 3 ? Provenance::recommended(sources[rng() % 4], 1 + static_cast<int>(rng() % 10))
                                     : Provenance::manual();
            std::optional<Qid> qid;
            if (rng() % 2) qid = Qid::parse("Q" + std::to_string(1 + rng() % 50));
            s.annotate(target, "name" + std::to_string(rng() % 5), qid, mode, p,
                       static_cast<std::int64_t>(rng() % 20000));
            break;
          }
          case 2:
            s.unannotate(target);
            break;
          default:
            s.reject(target);
        }
      } catch (const Error&) {
      }
      check_counts(s);
      if (HasFatalFailure()) return;
    }
    Session again = Session::replay("r", doc, TokenizerOptions::defaults(), s.events());
    ASSERT_EQ(again.annotations(), s.annotations()) << "seed " << seed;
    ASSERT_EQ(again.rejected(), s.rejected());
    ASSERT_EQ(again.annotation_table(), s.annotation_table());
    ASSERT_EQ(format_session(parse_session(format_session(s))), format_session(s));
  }
}
