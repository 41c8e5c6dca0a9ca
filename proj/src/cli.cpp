#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "CLI11.hpp"
#include "text_util.hpp"
#include "wntags/service.hpp"

namespace wntags {

using ojson = nlohmann::ordered_json;

namespace {

std::atomic<bool> g_stop_requested{false};

extern "C" void on_stop_signal(int) { g_stop_requested = true; }

std::pair<std::string, int> split_address(const std::string& address) {
  const auto colon = address.rfind(':');
  int port = 0;
  if (colon == std::string::npos || !detail::parse_int(std::string_view(address).substr(colon + 1), port) ||
      port < 0 || port > 65535) {
    throw Error(ErrorCode::InvalidConfig, "listen_address must be host:port, got '" + address + "'");
  }
  return {address.substr(0, colon), port};
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct SearchArgs {
  std::string text;
  std::string taxonomy;
  std::string corpus;
  std::string table;
  int d_max = kDefaultMaxDistance;
  std::size_t limit = 0;
  std::optional<double> val_min, val_max, ar_min, ar_max, dom_min, dom_max;
  std::string keyword;
  bool include_drafts = false;
  bool adaptive = false;
  int d_start = 2;
  int d_step = 2;
  std::size_t min_results = 1;
  bool json = false;
};

std::optional<ClosedRange> make_range(const std::optional<double>& lo, const std::optional<double>& hi) {
  if (!lo && !hi) return std::nullopt;
  return ClosedRange{lo.value_or(1.0), hi.value_or(9.0)};
}

// Owns whichever relatedness source the flags asked for.
struct LoadedRelatedness {
  std::optional<SimilarityTable> table;
  std::unique_ptr<RelatednessSource> source;
};

LoadedRelatedness open_relatedness(const Taxonomy& taxonomy, const std::string& table_path) {
  LoadedRelatedness out;
  if (table_path.empty()) {
    out.source = std::make_unique<PathRelatedness>(taxonomy);
  } else {
    out.table = load_table(table_path);
    out.source = std::make_unique<TableRelatedness>(*out.table, taxonomy);
  }
  return out;
}

int cmd_search(const SearchArgs& a, std::ostream& out) {
  const auto taxonomy = load_taxonomy_file(a.taxonomy);
  const auto corpus = load_corpus_file(taxonomy, a.corpus);
  const auto rel = open_relatedness(taxonomy, a.table);

  AffectFilter affect{make_range(a.val_min, a.val_max), make_range(a.ar_min, a.ar_max),
                      make_range(a.dom_min, a.dom_max)};
  affect.validate();

  auto query = parse_query(taxonomy, a.text, a.d_max);
  const SearchOptions options{std::nullopt, a.include_drafts};
  std::vector<RankedResult> results;
  int used_d = a.d_max;
  if (a.adaptive) {
    auto outcome = adaptive_search(corpus, query, *rel.source,
                                   AdaptiveParams{a.d_start, a.d_step, a.min_results, a.d_max}, options);
    results = std::move(outcome.results);
    used_d = outcome.final_distance;
  } else {
    results = search(corpus, query, *rel.source, options);
  }
  results = filter_affect(corpus, std::move(results), affect);
  if (!a.keyword.empty()) {
    const auto wanted = detail::to_lower(a.keyword);
    std::erase_if(results, [&](const RankedResult& r) {
      return detail::to_lower(corpus.image(r.image_id).iaps_keyword()) != wanted;
    });
  }
  if (a.limit && results.size() > a.limit) results.resize(a.limit);

  if (a.json) {
    out << json_codec::results(results).dump() << '\n';
    return 0;
  }
  out << "# query: ";
  for (std::size_t i = 0; i < query.matched_spans.size(); ++i) {
    out << (i ? " " : "") << query.matched_spans[i].lemma;
  }
  if (!query.unmatched_tokens.empty()) {
    out << "  (unmatched:";
    for (const auto& t : query.unmatched_tokens) out << ' ' << t;
    out << ')';
  }
  out << "  d_max=" << used_d << "  results=" << results.size() << '\n';
  out << "rank\timage_id\trelevance\traw_score\tkeyword\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    out << (i + 1) << '\t' << r.image_id << '\t' << fixed(r.relevance) << '\t' << fixed(r.raw_score)
        << '\t' << corpus.image(r.image_id).iaps_keyword() << '\n';
  }
  return 0;
}

int cmd_serve(const std::string& config_path, std::ostream& out) {
  const auto config = config_path.empty() ? config_from_env() : load_config_file(config_path);
  Engine engine(config);
  const auto [host, port] = split_address(config.listen_address);

  HttpServer server(engine);
  const int bound = server.bind(host, port);
  out << "wntags listening on " << host << ':' << bound << (engine.has_table() ? " (table)" : " (on-the-fly)")
      << std::endl;

  g_stop_requested = false;
  std::signal(SIGINT, on_stop_signal);
  std::signal(SIGTERM, on_stop_signal);
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    while (!done) {
      if (g_stop_requested) {
        server.stop();
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  });
  server.listen_after_bind();
  done = true;
  watcher.join();
  // annotation writes are flushed before they are acknowledged; compaction
  // leaves one line per record for the next start
  engine.corpus().compact();
  out << "wntags stopped" << std::endl;
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"wntags: weighted-sense annotation and retrieval for affective images", "wntags"};
  app.require_subcommand(1);

  bool json = false;

  // load-taxonomy
  std::string tax_path;
  auto* load_cmd = app.add_subcommand("load-taxonomy", "Validate a taxonomy file");
  load_cmd->add_option("path", tax_path, "Taxonomy file")->required();
  load_cmd->add_flag("--json", json, "Machine-readable output");

  // build-sim
  std::string sim_tax, sim_out;
  int sim_d_max = kDefaultMaxDistance;
  unsigned sim_threads = 0;
  auto* sim_cmd = app.add_subcommand("build-sim", "Precompute the similarity table");
  sim_cmd->add_option("--taxonomy", sim_tax, "Taxonomy file")->required();
  sim_cmd->add_option("--d-max", sim_d_max, "Distance cutoff")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("-o,--out", sim_out, "Output table file")->required();
  sim_cmd->add_option("--threads", sim_threads, "Worker threads (0 = all cores)");
  sim_cmd->add_flag("--json", json, "Machine-readable output");

  // import
  std::string imp_tax, imp_corpus, imp_from;
  auto* imp_cmd = app.add_subcommand("import", "Merge JSON Lines records into a corpus file");
  imp_cmd->add_option("--taxonomy", imp_tax, "Taxonomy file")->required();
  imp_cmd->add_option("--corpus", imp_corpus, "Corpus file (created if missing)")->required();
  imp_cmd->add_option("--from", imp_from, "Records to import")->required();
  imp_cmd->add_flag("--json", json, "Machine-readable output");

  // annotate
  std::string ann_tax, ann_corpus, ann_image, ann_annotator, ann_synset, ann_lemma;
  double ann_weight = 0;
  auto* ann_cmd = app.add_subcommand("annotate", "Record one weighted sense for an image");
  ann_cmd->add_option("--taxonomy", ann_tax, "Taxonomy file")->required();
  ann_cmd->add_option("--corpus", ann_corpus, "Corpus file")->required();
  ann_cmd->add_option("--image", ann_image, "Image id")->required();
  ann_cmd->add_option("--annotator", ann_annotator, "Annotator id")->required();
  ann_cmd->add_option("--synset", ann_synset, "Synset id")->required();
  ann_cmd->add_option("--lemma", ann_lemma, "Lemma (defaults to the synset's first)");
  ann_cmd->add_option("--weight", ann_weight, "Weight in [0, 1]")->required();
  ann_cmd->add_flag("--json", json, "Machine-readable output");

  // search
  SearchArgs sa;
  auto* search_cmd = app.add_subcommand("search", "Ranked semantic search");
  search_cmd->add_option("query", sa.text, "Free-text query")->required();
  search_cmd->add_option("--taxonomy", sa.taxonomy, "Taxonomy file")->required();
  search_cmd->add_option("--corpus", sa.corpus, "Corpus file")->required();
  search_cmd->add_option("--table", sa.table, "Precomputed similarity table");
  search_cmd->add_option("--d-max", sa.d_max, "Distance cutoff (ceiling with --adaptive)")
      ->check(CLI::NonNegativeNumber);
  search_cmd->add_option("--limit", sa.limit, "Maximum results (0 = all)");
  search_cmd->add_option("--val-min", sa.val_min);
  search_cmd->add_option("--val-max", sa.val_max);
  search_cmd->add_option("--ar-min", sa.ar_min);
  search_cmd->add_option("--ar-max", sa.ar_max);
  search_cmd->add_option("--dom-min", sa.dom_min);
  search_cmd->add_option("--dom-max", sa.dom_max);
  search_cmd->add_option("--keyword", sa.keyword, "Keep only images with this legacy keyword");
  search_cmd->add_flag("--include-drafts", sa.include_drafts, "Also rank unpublishable records");
  search_cmd->add_flag("--adaptive", sa.adaptive, "Widen the radius until enough results");
  search_cmd->add_option("--d-start", sa.d_start, "Adaptive start radius");
  search_cmd->add_option("--d-step", sa.d_step, "Adaptive step");
  search_cmd->add_option("--min-results", sa.min_results, "Adaptive stopping count");
  search_cmd->add_flag("--json", sa.json, "Machine-readable output");

  // eval
  std::string ev_tax, ev_corpus, ev_table, ev_queries, ev_judgments, ev_out;
  int ev_d_max = kDefaultMaxDistance;
  std::size_t ev_limit = 0;
  bool ev_drafts = false;
  auto* eval_cmd = app.add_subcommand("eval", "Batch queries, precision and TP curves");
  eval_cmd->add_option("--taxonomy", ev_tax, "Taxonomy file")->required();
  eval_cmd->add_option("--corpus", ev_corpus, "Corpus file")->required();
  eval_cmd->add_option("--table", ev_table, "Precomputed similarity table");
  eval_cmd->add_option("--queries", ev_queries, "Query list")->required();
  eval_cmd->add_option("--judgments", ev_judgments, "Judgment CSV")->required();
  eval_cmd->add_option("--out", ev_out, "Curve CSV output")->required();
  eval_cmd->add_option("--d-max", ev_d_max, "Distance cutoff")->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--limit", ev_limit, "Results per query (0 = all)");
  eval_cmd->add_flag("--include-drafts", ev_drafts);
  eval_cmd->add_flag("--json", json, "Machine-readable output");

  // gen-synthetic
  SyntheticParams gp;
  std::string gen_dir;
  std::size_t gen_queries = 40;
  int gen_query_radius = 30;
  int gen_judge_radius = 2;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a seeded synthetic taxonomy, corpus, queries and judgments");
  gen_cmd->add_option("--out-dir", gen_dir, "Output directory")->required();
  gen_cmd->add_option("--seed", gp.seed, "Random seed");
  gen_cmd->add_option("--synsets", gp.n_synsets, "Taxonomy size");
  gen_cmd->add_option("--images", gp.n_images, "Corpus size");
  gen_cmd->add_option("--min-tags", gp.min_tags);
  gen_cmd->add_option("--median-tags", gp.median_tags);
  gen_cmd->add_option("--max-tags", gp.max_tags);
  gen_cmd->add_option("--queries", gen_queries, "Number of single-word queries");
  gen_cmd->add_option("--query-radius", gen_query_radius, "Max distance of a query from the nearest tag");
  gen_cmd->add_option("--judge-radius", gen_judge_radius, "Relevance radius for rule-based judgments");
  gen_cmd->add_flag("--json", json, "Machine-readable output");

  // serve
  std::string serve_config;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API (config from --config or WNTAGS_CONFIG)");
  serve_cmd->add_option("--config", serve_config, "key=value config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << " (see --help)\n";
    return 2;
  }

  try {
    if (*load_cmd) {
      const auto t = load_taxonomy_file(tax_path);
      std::size_t relations = 0;
      for (const auto& s : t.synsets()) relations += s.relations.size();
      if (json) {
        out << ojson{{"synsets", t.size()}, {"lemmas", t.lemma_index().size()},
                     {"relations", relations}, {"digest", t.digest()}}.dump()
            << '\n';
      } else {
        out << "ok synsets=" << t.size() << " lemmas=" << t.lemma_index().size()
            << " relations=" << relations << " digest=" << t.digest() << '\n';
      }
    } else if (*sim_cmd) {
      const auto t = load_taxonomy_file(sim_tax);
      const auto table = build_table(t, sim_d_max, path_similarity, sim_threads);
      save_table(table, sim_out);
      if (json) {
        out << ojson{{"entries", table.size()}, {"d_max", table.max_distance()},
                     {"digest", table.taxonomy_digest()}, {"path", sim_out}}.dump()
            << '\n';
      } else {
        out << "wrote " << table.size() << " pairs (d_max=" << table.max_distance() << ") to " << sim_out << '\n';
      }
    } else if (*imp_cmd) {
      const auto t = load_taxonomy_file(imp_tax);
      Corpus corpus = std::filesystem::exists(imp_corpus) ? load_corpus_file(t, imp_corpus) : Corpus{};
      const auto incoming = load_corpus_file(t, imp_from);
      for (const auto& [id, rec] : incoming.images()) corpus.put(t, rec);
      save_corpus_file(corpus, imp_corpus);
      if (json) {
        out << ojson{{"imported", incoming.size()}, {"images", corpus.size()}}.dump() << '\n';
      } else {
        out << "imported " << incoming.size() << " records; corpus has " << corpus.size() << " images\n";
      }
    } else if (*ann_cmd) {
      const auto t = load_taxonomy_file(ann_tax);
      CorpusStore store(t, ann_corpus);
      const auto tags = store.annotate(
          ann_image, TagAssignment{ann_annotator, Sense{SynsetId(ann_synset), ann_lemma}, ann_weight});
      if (json) {
        out << ojson{{"image_id", ann_image}, {"weighted_tags", json_codec::weighted_tags(tags)}}.dump() << '\n';
      } else {
        for (const auto& tag : tags) {
          out << tag.sense.synset.str() << '\t' << tag.sense.lemma << '\t' << fixed(tag.mean_weight, 4)
              << '\t' << tag.rater_count << '\n';
        }
      }
    } else if (*search_cmd) {
      return cmd_search(sa, out);
    } else if (*eval_cmd) {
      const auto t = load_taxonomy_file(ev_tax);
      const auto corpus = load_corpus_file(t, ev_corpus);
      const auto rel = open_relatedness(t, ev_table);
      const auto queries = load_queries_file(ev_queries);
      const auto judgments = load_judgments_file(ev_judgments);
      EvalParams params{ev_d_max, ev_limit ? std::optional<std::size_t>(ev_limit) : std::nullopt, ev_drafts};
      const auto report = run_batch(t, corpus, *rel.source, queries, judgments, params);
      emit_curves(report, ev_out);
      if (json) {
        out << json_codec::eval_summary(report).dump() << '\n';
      } else {
        out << "queries=" << report.per_query.size() << " failures=" << report.failures.size()
            << " avg_precision=" << fixed(report.aggregate.avg_precision)
            << " avg_tp=" << fixed(report.aggregate.avg_tp) << " curves=" << ev_out << '\n';
        for (const auto& f : report.failures) {
          out << "failed " << f.query_id << ": " << to_string(f.code) << ' ' << f.message << '\n';
        }
      }
    } else if (*gen_cmd) {
      namespace fs = std::filesystem;
      fs::create_directories(gen_dir);
      const auto data = generate_synthetic(gp);
      const auto terms = select_query_terms(data.taxonomy, data.corpus, gen_queries, gen_query_radius, gp.seed);
      std::vector<BatchQuery> queries;
      for (std::size_t i = 0; i < terms.size(); ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "q%02zu", i + 1);
        queries.push_back({id, terms[i]});
      }
      const auto judgments = rule_judgments(data.taxonomy, data.corpus, queries, gen_judge_radius);
      const auto dir = fs::path(gen_dir);
      save_taxonomy_file(data.taxonomy, (dir / "taxonomy.tsv").string());
      save_corpus_file(data.corpus, (dir / "corpus.jsonl").string());
      {
        std::ofstream q((dir / "queries.txt").string());
        write_queries(queries, q);
        std::ofstream j((dir / "judgments.csv").string());
        write_judgments(judgments, j);
        if (!q || !j) throw Error(ErrorCode::IoError, "cannot write into " + gen_dir);
      }
      const auto st = data.corpus.tag_count_stats();
      if (json) {
        out << ojson{{"synsets", data.taxonomy.size()}, {"images", data.corpus.size()},
                     {"queries", queries.size()}, {"judgments", judgments.size()},
                     {"tag_stats", json_codec::stats(st)}}.dump()
            << '\n';
      } else {
        out << "wrote " << data.taxonomy.size() << " synsets, " << data.corpus.size() << " images, "
            << queries.size() << " queries, " << judgments.size() << " judgments to " << gen_dir
            << " (tags per image: median " << st.median << ", min " << st.min << ", max " << st.max << ")\n";
      }
    } else if (*serve_cmd) {
      return cmd_serve(serve_config, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace wntags
