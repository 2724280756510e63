#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>

#include "mathel/corpus.hpp"
#include "mathel/error.hpp"
#include "mathel/evaluation.hpp"
#include "mathel/json.hpp"
#include "mathel/linker.hpp"
#include "mathel/recommender.hpp"
#include "mathel/service.hpp"
#include "mathel/session.hpp"

namespace fs = std::filesystem;
using namespace mathel;

namespace {

std::vector<Session> load_sessions(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::file_missing, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path& p = entry.path();
    if (p.extension() == ".json" && p.filename().string().front() != '_') files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  std::vector<Session> out;
  for (const fs::path& p : files) out.push_back(load_session(p));
  return out;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_file(path, text);
}

Json stats_json(const LinkStats& s) {
  return {{"candidates", s.candidates},
          {"skipped_duplicates", s.skipped_duplicates},
          {"linked", s.linked},
          {"skipped_non_equation", s.skipped_non_equation},
          {"skipped_inline", s.skipped_inline}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mathematical entity linking workbench"};
  app.require_subcommand(1);

  // tokenize
  auto* tokenize = app.add_subcommand("tokenize", "Tokenize one LaTeX formula");
  std::string latex;
  bool no_split = false;
  tokenize->add_option("latex", latex, "LaTeX source")->required();
  tokenize->add_flag("--no-split", no_split, "Keep multi-letter runs as one ignored token");

  // extract
  auto* extract = app.add_subcommand("extract", "List the math segments of an article");
  std::string article;
  extract->add_option("--article", article)->required();

  // fetch
  auto* fetch = app.add_subcommand("fetch", "Fetch an article's raw source");
  std::string title, endpoint, out;
  fetch->add_option("--title", title)->required();
  fetch->add_option("--endpoint", endpoint, "Base URL, directory or file; defaults to $MATHEL_WIKI_BASE_URL");
  fetch->add_option("--out", out);

  // recommend
  auto* recommend = app.add_subcommand("recommend", "Recommend names for one target");
  std::string target, formula_catalog, memory_path;
  std::vector<std::string> catalogs;
  double fuzzy_threshold = kDefaultFuzzyThreshold;
  int cutoff = kRankCutoff;
  bool eval_mode = false;
  std::uint64_t eval_seed = 0;
  recommend->add_option("--article", article)->required();
  recommend->add_option("--target", target, "id:<symbol>, id:<symbol>@<seg>:<offset> or seg:<n>")->required();
  recommend->add_option("--catalog", catalogs, "<source>=<tsv>, e.g. arxiv=arxiv.tsv");
  recommend->add_option("--formula-catalog", formula_catalog);
  recommend->add_option("--memory", memory_path);
  recommend->add_option("--fuzzy-threshold", fuzzy_threshold);
  recommend->add_option("--cutoff", cutoff);
  recommend->add_flag("--eval", eval_mode, "Shuffle and anonymize the sources");
  recommend->add_option("--eval-seed", eval_seed);

  // link
  auto* link = app.add_subcommand("link", "Insert qid attributes into an article");
  std::string session_path;
  bool dry_run = false, quote_attrs = false, block_only = false;
  link->add_option("--article", article)->required();
  link->add_option("--session", session_path)->required();
  link->add_option("--out", out);
  link->add_flag("--dry-run", dry_run, "Print the stats only");
  link->add_flag("--quote-attrs", quote_attrs, "Emit qid=\"Q...\"");
  link->add_flag("--block-only", block_only, "Link display equations only");

  // seed
  auto* seed = app.add_subcommand("seed", "Write the knowledge-base seeding list");
  std::string sessions_dir;
  seed->add_option("--sessions", sessions_dir)->required();
  seed->add_option("--catalog", formula_catalog)->required();
  seed->add_option("--memory", memory_path);
  seed->add_option("--out", out);

  // report
  auto* report = app.add_subcommand("report", "Source performance and timing report");
  std::string format = "table";
  report->add_option("--sessions", sessions_dir)->required();
  report->add_option("--format", format)->check(CLI::IsMember({"json", "table"}));

  // export
  auto* exp = app.add_subcommand("export", "Export a session's annotation table");
  exp->add_option("--session", session_path)->required();
  exp->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}))->required();
  exp->add_option("--out", out);

  // new-session
  auto* new_session = app.add_subcommand("new-session", "Create an empty session file for an article");
  std::string session_id;
  new_session->add_option("--article", article)->required();
  new_session->add_option("--id", session_id);
  new_session->add_option("--eval-seed", eval_seed);
  new_session->add_option("--out", out)->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string config_path;
  int port = 0;
  serve->add_option("--config", config_path);
  serve->add_option("--port", port);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*tokenize) {
      TokenizerOptions options = TokenizerOptions::defaults();
      options.split_multiletter = !no_split;
      std::cout << Json(tokenize_formula(latex, options)).dump(2) << "\n";
    } else if (*extract) {
      RawDocument doc = load_document(article);
      ExtractionResult r = extract_math_segments(doc);
      std::cout << Json({{"segments", r.segments}, {"diagnostics", r.diagnostics}}).dump(2) << "\n";
    } else if (*fetch) {
      if (endpoint.empty())
        if (const char* env = std::getenv(kWikiBaseUrlEnv)) endpoint = env;
      if (endpoint.empty()) throw Error(ErrorCode::bad_argument, "no --endpoint and no $" + std::string(kWikiBaseUrlEnv));
      write_output(out, fetch_article(title, endpoint).body);
    } else if (*recommend) {
      RawDocument doc = load_document(article);
      Session session("cli", doc);
      TargetRef t = TargetRef::parse(target);
      RecommenderConfig config{fuzzy_threshold, cutoff, kDefaultWordWindow};
      RecommendationSet set;
      if (t.kind == TargetKind::formula) {
        if (t.segment_id < 0 || static_cast<std::size_t>(t.segment_id) >= session.segments().size())
          throw Error(ErrorCode::unknown_target, target);
        const MathSegment& seg = session.segments()[static_cast<std::size_t>(t.segment_id)];
        FormulaCatalog fc = formula_catalog.empty() ? FormulaCatalog{} : load_formula_catalog(formula_catalog);
        FcMemory memory = memory_path.empty() ? FcMemory{} : load_fc_memory(memory_path);
        set = recommend_formula({session.document(), session.segments(), seg}, fc, memory, {}, {}, config);
      } else {
        std::vector<IdentifierCatalog> loaded;
        for (const std::string& arg : catalogs) {
          auto eq = arg.find('=');
          auto kind = eq == std::string::npos ? std::nullopt : parse_source_kind(arg.substr(0, eq));
          if (!kind) throw Error(ErrorCode::bad_argument, "--catalog expects <source>=<path>, got " + arg);
          loaded.push_back(load_identifier_catalog(arg.substr(eq + 1), *kind));
        }
        auto occ = std::find_if(session.occurrences().begin(), session.occurrences().end(), [&](const auto& o) {
          return o.symbol == t.symbol && (!t.is_occurrence() || (o.segment_id == t.segment_id && o.token_offset == *t.token_offset));
        });
        if (occ == session.occurrences().end()) throw Error(ErrorCode::unknown_target, target);
        const MathSegment& seg = session.segments()[static_cast<std::size_t>(occ->segment_id)];
        set = recommend_identifier(t.symbol, {session.document(), session.segments(), seg}, loaded, {}, config);
      }
      std::cout << Json(presentation_order(std::move(set), eval_seed, eval_mode)).dump(2) << "\n";
    } else if (*link) {
      RawDocument doc = load_document(article);
      Session session = load_session(session_path);
      ExtractionResult r = extract_math_segments(doc);
      std::map<int, std::string> qids;
      for (const auto& [segment_id, qid] : session.formula_qids()) {
        auto idx = static_cast<std::size_t>(segment_id);
        if (idx >= r.segments.size() || r.segments[idx].raw_latex != session.segments()[idx].raw_latex)
          throw Error(ErrorCode::bad_argument,
                      "article differs from the session document at segment " + std::to_string(segment_id));
        qids.emplace(segment_id, qid.str());
      }
      std::vector<TokenizedFormula> formulas;
      for (const MathSegment& s : r.segments)
        formulas.push_back(tokenize_formula(s.raw_latex, session.tokenizer_options(), s.segment_id));
      LinkResult result = insert_qid_links(doc, r.segments, formulas, qids, {quote_attrs, block_only});
      if (!dry_run) write_output(out, result.wikitext);
      std::cerr << stats_json(result.stats).dump() << "\n";
    } else if (*seed) {
      std::vector<Session> sessions = load_sessions(sessions_dir);
      std::vector<const Session*> ptrs;
      for (const Session& s : sessions) ptrs.push_back(&s);
      FcMemory memory = memory_path.empty() ? FcMemory{} : load_fc_memory(memory_path);
      auto entries = seeding_list(ptrs, load_formula_catalog(formula_catalog), memory);
      write_output(out, format_seeding_tsv(entries));
    } else if (*report) {
      std::vector<Session> sessions = load_sessions(sessions_dir);
      std::vector<std::vector<AnnotationEvent>> logs;
      std::vector<const Session*> ptrs;
      for (const Session& s : sessions) {
        logs.push_back(s.events());
        ptrs.push_back(&s);
      }
      SourceReport sources = source_report(EventLogs(logs));
      auto timing = timing_report(EventLogs(logs));
      QidCoverage coverage = qid_coverage(ptrs);
      if (format == "json")
        std::cout << report_json(sources, timing, coverage).dump(2) << "\n";
      else
        std::cout << report_table(sources, timing, coverage);
    } else if (*exp) {
      Session session = load_session(session_path);
      write_output(out, format_annotations(session.annotation_table(), *parse_export_format(format)));
    } else if (*new_session) {
      RawDocument doc = load_document(article);
      Session session(session_id.empty() ? fs::path(article).stem().string() : session_id, doc);
      session.set_eval_seed(eval_seed);
      save_session(session, out);
    } else if (*serve) {
      ServiceConfig config = load_service_config(config_path.empty() ? std::nullopt
                                                                      : std::optional<fs::path>(config_path));
      if (port) config.port = port;
      Service service(config);
      std::cerr << Json({{"event", "listening"}, {"host", config.host}, {"port", config.port}}).dump() << "\n";
      run_server(service, config.host, config.port);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
