#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <regex>

#include "fixtures.hpp"
#include "mathel/error.hpp"
#include "mathel/json.hpp"
#include "mathel/linker.hpp"

using namespace mathel;
using mathel::testing::fixture;
using mathel::testing::mass_energy;
using mathel::testing::wiki;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

LinkResult link(const RawDocument& doc, const std::map<int, std::string>& qids, LinkOptions options = {}) {
  auto segments = extract_math_segments(doc).segments;
  std::vector<TokenizedFormula> formulas;
  for (const auto& s : segments) formulas.push_back(tokenize_formula(s.raw_latex, TokenizerOptions::defaults(), s.segment_id));
  return insert_qid_links(doc, segments, formulas, qids, options);
}

std::map<std::string, int> qid_attribute_counts(const std::string& text) {
  static const std::regex attr(R"(qid=\"?(Q[0-9]+))");
  std::map<std::string, int> counts;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), attr); it != std::sregex_iterator(); ++it)
    ++counts[(*it)[1].str()];
  return counts;
}

}  // namespace

TEST(LinkTest, EinsteinGolden) {
  RawDocument doc = wiki("<math display=\"block\">E=m\\,c^2</math>");
  auto r = link(doc, {{0, "Q35875"}});
  EXPECT_EQ(r.wikitext, "<math display=\"block\" qid=Q35875>E=m\\,c^2</math>");
  EXPECT_EQ(r.stats, (LinkStats{1, 0, 1, 0, 0}));
  auto quoted = link(doc, {{0, "Q35875"}}, {true, false});
  EXPECT_EQ(quoted.wikitext, "<math display=\"block\" qid=\"Q35875\">E=m\\,c^2</math>");
}

TEST(LinkTest, DuplicatesAndNonEquations) {
  RawDocument doc = wiki("<math>E=mc^2</math> <math>E</math> <math>E = m c^2</math> <math qid=Q5>a=b</math> <math>x=y</math>");
  auto r = link(doc, {{0, "Q35875"}, {1, "Q11379"}, {2, "Q35875"}, {4, "Q5"}});
  EXPECT_EQ(r.wikitext,
            "<math qid=Q35875>E=mc^2</math> <math>E</math> <math>E = m c^2</math> <math qid=Q5>a=b</math> <math>x=y</math>");
  EXPECT_EQ(r.stats.candidates, 3u);
  EXPECT_EQ(r.stats.linked, 1u);
  EXPECT_EQ(r.stats.skipped_duplicates, 2u);
  EXPECT_EQ(r.stats.skipped_non_equation, 1u);
}

TEST(LinkTest, BlockOnlySkipsInline) {
  RawDocument doc = wiki("<math>a=b</math>\n<math display=block>c=d</math>");
  auto r = link(doc, {{0, "Q1"}, {1, "Q2"}}, {false, true});
  EXPECT_EQ(r.wikitext, "<math>a=b</math>\n<math display=block qid=Q2>c=d</math>");
  EXPECT_EQ(r.stats.skipped_inline, 1u);
  EXPECT_EQ(r.stats.linked, 1u);
}

TEST(LinkTest, Errors) {
  RawDocument doc = wiki("<math>a=b</math>");
  auto code = [&](const std::map<int, std::string>& q) {
    try {
      link(doc, q);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::bad_argument;
  };
  EXPECT_EQ(code({{0, "X1"}}), ErrorCode::qid_format);
  RawDocument latex;
  latex.format = DocumentFormat::latex;
  latex.body = "$a=b$";
  try {
    link(latex, {{0, "Q1"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::malformed_tag);
  }
}

TEST(LinkTest, MiniCorpusMatchesGoldens) {
  int cases = 0;
  for (const auto& entry : fs::directory_iterator(fixture("link_corpus"))) {
    if (!entry.is_directory()) continue;
    ++cases;
    const fs::path dir = entry.path();
    RawDocument doc = wiki(slurp(dir / "input.wiki"));
    std::map<int, std::string> qids;
    Json q = Json::parse(slurp(dir / "qids.json"));
    for (auto it = q.begin(); it != q.end(); ++it) qids[std::stoi(it.key())] = it.value().get<std::string>();
    Json opts = Json::parse(slurp(dir / "options.json"));
    Json stats = Json::parse(slurp(dir / "stats.json"));
    auto r = link(doc, qids, {opts["quote_attrs"].get<bool>(), opts["block_only"].get<bool>()});
    EXPECT_EQ(r.wikitext, slurp(dir / "expected.wiki")) << dir.filename();
    EXPECT_EQ(r.stats.candidates, stats["candidates"].get<std::size_t>()) << dir.filename();
    EXPECT_EQ(r.stats.linked, stats["linked"].get<std::size_t>()) << dir.filename();
    EXPECT_EQ(r.stats.skipped_duplicates, stats["skipped_duplicates"].get<std::size_t>()) << dir.filename();
    EXPECT_EQ(r.stats.skipped_non_equation, stats["skipped_non_equation"].get<std::size_t>()) << dir.filename();
    EXPECT_EQ(r.stats.skipped_inline, stats["skipped_inline"].get<std::size_t>()) << dir.filename();
    EXPECT_EQ(remove_insertions(r), doc.body);
  }
  EXPECT_EQ(cases, 25);
}

TEST(LinkTest, ConservationOnGeneratedDocuments) {
  const std::vector<std::string> formulas = {"E=mc^2", "a = b", "x", "\\frac{a=b}{c}", "F = m a", "v_{x=0}",
                                             "p = m v", "c^2", "\\gamma = \\frac{1}{2}", "a < b"};
  const std::vector<std::string> prose = {"Text ", "'''bold''' ", "{{cite|x}} ", "<ref>r</ref> ", "3 > 2 ",
                                          "<!-- <math>z=1</math> --> ", "\n"};
  std::mt19937_64 rng(500);
  for (int round = 0; round < 60; ++round) {
    int n = round == 0 ? 500 : static_cast<int>(rng() % 501);
    std::string body;
    std::map<int, std::string> qids;
    for (int i = 0; i < n; ++i) {
      body += prose[rng() % prose.size()];
      std::string attrs;
      if (rng() % 3 == 0) attrs += rng() % 2 ? " display=block" : " display=\"block\"";
      if (rng() % 20 == 0) attrs += " qid=Q" + std::to_string(1 + rng() % 40);
      std::string name = rng() % 10 ? "math" : "MATH";
      body += "<" + name + attrs + ">" + formulas[rng() % formulas.size()] + "</" + name + ">";
      if (rng() % 2) qids[i] = "Q" + std::to_string(1 + rng() % 40);
    }
    RawDocument doc = wiki(body);
    LinkOptions options{rng() % 2 == 0, rng() % 3 == 0};
    LinkResult r = link(doc, qids, options);
    for (const auto& [qid, count] : qid_attribute_counts(r.wikitext)) {
      auto before = qid_attribute_counts(body);
      // pre-existing duplicates are left alone; inserted ones never add to them
      ASSERT_LE(count, std::max(1, before.count(qid) ? before[qid] : 0)) << qid;
    }
    ASSERT_EQ(remove_insertions(r), body);
    ASSERT_EQ(r.stats.candidates, r.stats.linked + r.stats.skipped_duplicates);
    ASSERT_EQ(r.insertions.size(), r.stats.linked);
    for (const auto& ins : r.insertions) ASSERT_EQ(r.wikitext.substr(ins.offset, 5), " qid=");
    LinkResult again = link(wiki(r.wikitext), qids, options);
    ASSERT_EQ(again.stats.linked, 0u);
    ASSERT_EQ(again.wikitext, r.wikitext);
  }
}

TEST(LinkTest, SessionLinking) {
  Session s("l", mass_energy());
  s.annotate(TargetRef::formula(0), "mass-energy equivalence", Qid::parse("Q35875"), AnnotationMode::global,
             Provenance::manual(), 10);
  auto r = link_session(s);
  EXPECT_NE(r.wikitext.find("<math display=\"block\" qid=Q35875>E=m\\,c^2</math>"), std::string::npos);
  EXPECT_EQ(r.stats.linked, 1u);
}

TEST(SeedingTest, GoldenList) {
  RawDocument doc = wiki(
      "Factor <math display=\"block\">\\gamma = \\frac{1}{\\sqrt{1 - v^2/c^2}}</math>\n"
      "Center <math display=\"block\">\\mathbf{R} = \\frac{1}{M} \\sum_i m_i \\mathbf{r}_i</math>\n"
      "Energy <math display=\"block\">E = m c^2</math>\n");
  RawDocument doc2 = wiki("Force <math display=\"block\">F = k_e \\frac{q_1 q_2}{r^2}</math>\n");
  auto catalog = load_formula_catalog(fixture("catalogs/formula_catalog.json"));
  auto memory = load_fc_memory(fixture("catalogs/fc_memory.json"));
  Session a("a", doc);
  a.annotate(TargetRef::identifier("v"), "velocity", Qid::parse("Q11465"), AnnotationMode::global, Provenance::manual(), 1);
  a.annotate(TargetRef::identifier("c"), "speed of light", Qid::parse("Q2111"), AnnotationMode::global, Provenance::manual(), 1);
  a.annotate(TargetRef::identifier("E"), "energy", Qid::parse("Q11379"), AnnotationMode::global, Provenance::manual(), 1);
  a.annotate(TargetRef::identifier("m"), "mass", Qid::parse("Q11423"), AnnotationMode::global, Provenance::manual(), 1);
  a.annotate(TargetRef::formula(0), "Lorentz factor", Qid::parse("Q599404"), AnnotationMode::global,
             Provenance::manual(), 1);
  a.annotate(TargetRef::formula(1), "center of mass", Qid::parse("Q2945123"), AnnotationMode::global,
             Provenance::manual(), 1);
  a.annotate(TargetRef::formula(2), "mass-energy equivalence", Qid::parse("Q35875"), AnnotationMode::global,
             Provenance::manual(), 1);
  Session b("b", doc2);
  b.annotate(TargetRef::formula(0), "electrostatic force", Qid::parse("Q103438301"), AnnotationMode::global,
             Provenance::manual(), 1);
  std::vector<const Session*> sessions = {&a, &b};
  auto entries = seeding_list(sessions, catalog, memory);
  EXPECT_EQ(format_seeding_tsv(entries),
            "name\tqid\tcontribution\tfc_variations\tproperty\n"
            "center of mass\tQ2945123\tp\t2\thp\n"
            "electrostatic force\tQ103438301\ti/f/p\t1\thp\n"
            "Lorentz factor\tQ599404\tf/p\t5\thp\n");
}

TEST(SeedingTest, NewVariantsCountOnce) {
  RawDocument doc = wiki("<math>\\gamma = \\frac{1}{\\sqrt{1 - v^2/c^2}}</math> <math>\\gamma = \\frac{E}{m c^2}</math>");
  Session s("s", doc);
  s.annotate(TargetRef::formula(0), "Lorentz factor", Qid::parse("Q599404"), AnnotationMode::global, Provenance::manual(), 1);
  s.annotate(TargetRef::formula(1), "Lorentz factor", Qid::parse("Q599404"), AnnotationMode::global, Provenance::manual(), 1);
  const Session* p = &s;
  auto entries = seeding_list(std::span<const Session* const>(&p, 1),
                              load_formula_catalog(fixture("catalogs/formula_catalog.json")),
                              load_fc_memory(fixture("catalogs/fc_memory.json")));
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].fc_variations, 6u);
}

TEST(ExportTest, CsvAndJson) {
  Session s("e", mass_energy());
  s.annotate(TargetRef::identifier("E"), "energy, total", Qid::parse("Q11379"), AnnotationMode::global,
             Provenance::recommended(SourceKind::arxiv, 2), 1500);
  s.annotate(TargetRef::formula(0), "say \"E=mc2\"", std::nullopt, AnnotationMode::global, Provenance::manual(), 900);
  std::string csv = format_annotations(s.annotation_table(), ExportFormat::csv);
  EXPECT_EQ(csv,
            "target,kind,name,qid,mode,source,position,elapsed_ms\n"
            "id:E,identifier,\"energy, total\",Q11379,global,arxiv,2,1500\n"
            "seg:0,formula,\"say \"\"E=mc2\"\"\",,global,manual,,900\n");
  std::string json = format_annotations(s.annotation_table(), ExportFormat::json);
  auto rows = parse_annotation_export(json);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].name, "energy, total");
  EXPECT_EQ(rows[0].provenance, Provenance::recommended(SourceKind::arxiv, 2));
  EXPECT_EQ(rows[1].provenance, Provenance::manual());
  EXPECT_FALSE(parse_export_format("xml").has_value());
}
