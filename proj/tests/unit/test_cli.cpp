#include <sstream>

#include "doctest.h"
#include "testkit.hpp"
#include "wntags/service.hpp"

using namespace wntags;
using json = nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "wntags");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  const auto r = cli({"search", "dog"});
  CHECK(r.code == 2);
  CHECK(r.err.find("--taxonomy") != std::string::npos);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("load-taxonomy") {
  const auto ok = cli({"load-taxonomy", testkit::fixture("taxonomy12.tsv"), "--json"});
  REQUIRE(ok.code == 0);
  const auto body = json::parse(ok.out);
  CHECK(body["synsets"] == 12);
  CHECK(body["digest"] == testkit::fixture_taxonomy().digest());

  testkit::TempDir dir;
  std::ofstream(dir.file("bad.tsv")) << "n-1\tn\tanimal\thyp:n-2\t-\n";
  const auto bad = cli({"load-taxonomy", dir.file("bad.tsv")});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("DanglingEdge") != std::string::npos);
  CHECK(std::count(bad.err.begin(), bad.err.end(), '\n') == 1);
}

TEST_CASE("build-sim then search gives on-the-fly results") {
  testkit::TempDir dir;
  const auto tax = testkit::fixture("taxonomy12.tsv");
  const auto corpus = testkit::fixture("corpus5.jsonl");
  REQUIRE(cli({"build-sim", "--taxonomy", tax, "--d-max", "10", "-o", dir.file("sim.tsv")}).code == 0);
  CHECK(load_table(dir.file("sim.tsv")).size() == 66);

  for (const char* q : {"dog", "cat lamp", "wheel"}) {
    const auto direct = cli({"search", q, "--taxonomy", tax, "--corpus", corpus, "--json"});
    const auto tabled =
        cli({"search", q, "--taxonomy", tax, "--corpus", corpus, "--table", dir.file("sim.tsv"), "--json"});
    REQUIRE(direct.code == 0);
    CHECK(direct.out == tabled.out);
  }

  const auto text = cli({"search", "purple dog", "--taxonomy", tax, "--corpus", corpus, "--limit", "2"});
  CHECK(text.code == 0);
  CHECK(text.out.find("unmatched: purple") != std::string::npos);
  CHECK(text.out.find("1\t1100\t") != std::string::npos);

  const auto filtered = cli({"search", "dog", "--taxonomy", tax, "--corpus", corpus, "--val-max", "3", "--json"});
  CHECK(json::parse(filtered.out).size() == 1);
  const auto drafts = cli({"search", "dog", "--taxonomy", tax, "--corpus", corpus, "--include-drafts",
                           "--keyword", "dog", "--json"});
  CHECK(json::parse(drafts.out).size() == 2);
  const auto adaptive = cli({"search", "dog", "--taxonomy", tax, "--corpus", corpus, "--adaptive"});
  CHECK(adaptive.out.find("d_max=2") != std::string::npos);

  const auto none = cli({"search", "unicorn", "--taxonomy", tax, "--corpus", corpus});
  CHECK(none.code == 1);
  CHECK(none.err.find("NoSenseFound") != std::string::npos);
  const auto range = cli({"search", "dog", "--taxonomy", tax, "--corpus", corpus, "--ar-min", "8", "--ar-max", "2"});
  CHECK(range.code == 1);

  // a table for another taxonomy is refused
  std::ofstream(dir.file("t2.tsv")) << testkit::slurp(tax) << "n-30\tn\tlantern\t-\t-\n";
  const auto stale = cli({"search", "dog", "--taxonomy", dir.file("t2.tsv"), "--corpus", corpus, "--table",
                          dir.file("sim.tsv")});
  CHECK(stale.code == 1);
  CHECK(stale.err.find("StaleTable") != std::string::npos);
}

TEST_CASE("import and annotate") {
  testkit::TempDir dir;
  const auto tax = testkit::fixture("taxonomy12.tsv");
  const auto corpus = dir.file("c.jsonl");
  const auto imp = cli({"import", "--taxonomy", tax, "--corpus", corpus, "--from", testkit::fixture("corpus5.jsonl")});
  REQUIRE(imp.code == 0);
  const auto t = testkit::fixture_taxonomy();
  CHECK(load_corpus_file(t, corpus) == testkit::fixture_corpus(t));

  const auto ann = cli({"annotate", "--taxonomy", tax, "--corpus", corpus, "--image", "1500", "--annotator", "a9",
                        "--synset", "n-3", "--weight", "0.5", "--json"});
  REQUIRE(ann.code == 0);
  CHECK(json::parse(ann.out)["weighted_tags"][0]["rater_count"] == 2);
  CHECK(load_corpus_file(t, corpus).image("1500").assignments().size() == 2);

  const auto bad = cli({"annotate", "--taxonomy", tax, "--corpus", corpus, "--image", "1500", "--annotator", "a9",
                        "--synset", "n-3", "--weight", "2"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("WeightOutOfRange") != std::string::npos);
}

TEST_CASE("gen-synthetic then eval") {
  testkit::TempDir dir;
  const auto out = dir.path.string();
  const auto gen = cli({"gen-synthetic", "--out-dir", out, "--seed", "3", "--synsets", "300", "--images", "30",
                        "--queries", "10", "--json"});
  REQUIRE(gen.code == 0);
  CHECK(json::parse(gen.out)["queries"] == 10);
  for (const char* f : {"taxonomy.tsv", "corpus.jsonl", "queries.txt", "judgments.csv"}) {
    CHECK(std::filesystem::exists(dir.file(f)));
  }
  // same seed, same bytes
  testkit::TempDir again;
  cli({"gen-synthetic", "--out-dir", again.path.string(), "--seed", "3", "--synsets", "300", "--images", "30",
       "--queries", "10"});
  CHECK(testkit::slurp(dir.file("corpus.jsonl")) == testkit::slurp(again.file("corpus.jsonl")));
  CHECK(testkit::slurp(dir.file("judgments.csv")) == testkit::slurp(again.file("judgments.csv")));

  const auto ev = cli({"eval", "--taxonomy", dir.file("taxonomy.tsv"), "--corpus", dir.file("corpus.jsonl"),
                       "--queries", dir.file("queries.txt"), "--judgments", dir.file("judgments.csv"), "--out",
                       dir.file("curves.csv"), "--json"});
  REQUIRE(ev.code == 0);
  const auto summary = json::parse(ev.out);
  CHECK(summary["queries"] == 10);
  CHECK(summary["failures"].empty());
  CHECK(testkit::slurp(dir.file("curves.csv")).rfind("rank,avg_precision,avg_tp_normalized,avg_tp\n", 0) == 0);

  const auto missing = cli({"eval", "--taxonomy", dir.file("taxonomy.tsv"), "--corpus", dir.file("corpus.jsonl"),
                            "--queries", dir.file("nope.txt"), "--judgments", dir.file("judgments.csv"), "--out",
                            dir.file("c2.csv")});
  CHECK(missing.code == 1);
}

TEST_CASE("serve reports bad configuration") {
  const auto r = cli({"serve", "--config", "/nonexistent/engine.conf"});
  CHECK(r.code == 1);
  CHECK(r.err.find("InvalidConfig") != std::string::npos);
}
