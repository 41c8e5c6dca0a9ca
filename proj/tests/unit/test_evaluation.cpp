#include <sstream>

#include "doctest.h"
#include "testkit.hpp"

using namespace wntags;
using testkit::sid;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

Judgments judgments_of(const std::string& text) {
  std::istringstream in(text);
  return read_judgments(in);
}

EvalReport fixture_report() {
  const auto t = testkit::fixture_taxonomy();
  const auto c = testkit::fixture_corpus(t);
  PathRelatedness rel(t);
  return run_batch(t, c, rel, load_queries_file(testkit::fixture("queries5.txt")),
                   load_judgments_file(testkit::fixture("judgments5.csv")), EvalParams{3, std::nullopt, false});
}

std::vector<std::set<std::string>> relevant_sets(const EvalReport& report, const Judgments& j) {
  std::vector<std::set<std::string>> out;
  for (const auto& q : report.per_query) {
    std::set<std::string> rel;
    for (const auto& e : j.list()) {
      if (e.query_id == q.query_id && e.relevant) rel.insert(e.image_id);
    }
    out.push_back(rel);
  }
  return out;
}

}  // namespace

TEST_CASE("precision and tp by definition") {
  const auto j = judgments_of("q,a,1\nq,b,1\nq,c,0\n");
  const auto p = precision_tp("q", {"a", "b", "c"}, j);
  CHECK(p.precision_at_k == std::vector<double>{1.0, 1.0, 2.0 / 3.0});
  CHECK(p.tp_count == 2);
  CHECK(p.unjudged.empty());

  const auto all = precision_tp("q", {"a", "b"}, j);
  CHECK(all.precision_at_k == std::vector<double>{1.0, 1.0});
  CHECK(all.tp_count == 2);

  // missing judgment counts as not relevant and is reported
  const auto gap = precision_tp("q", {"z", "a"}, j);
  CHECK(gap.precision_at_k == std::vector<double>{0.0, 0.5});
  CHECK(gap.unjudged == std::vector<std::string>{"z"});

  // a decaying ranking gives decreasing prefix means
  const auto decay = precision_tp("q", {"a", "c", "b", "c"}, judgments_of("q,a,1\nq,b,1\nq,c,0\n"));
  CHECK(decay.precision_at_k[0] > decay.precision_at_k[2]);
}

TEST_CASE("judgment and query files") {
  CHECK(code_of([] { judgments_of("q,a,1\nq,a,0\n"); }) == ErrorCode::FormatError);
  CHECK(code_of([] { judgments_of("q,a,yes\n"); }) == ErrorCode::FormatError);
  CHECK(code_of([] { judgments_of("q,a\n"); }) == ErrorCode::FormatError);
  const auto j = load_judgments_file(testkit::fixture("judgments5.csv"));
  CHECK(j.size() == 19);
  CHECK(j.find("q1", "1100") == true);
  CHECK(j.find("q1", "1300") == false);
  CHECK(j.find("q4", "1300") == std::nullopt);
  std::ostringstream out;
  write_judgments(j, out);
  CHECK(judgments_of(out.str()).list() == j.list());

  std::istringstream qin("# comment\ndog\nq2\tcat lamp\n\n");
  const auto qs = read_queries(qin);
  REQUIRE(qs.size() == 2);
  CHECK(qs[0].id == "dog");
  CHECK(qs[1].id == "q2");
  CHECK(qs[1].text == "cat lamp");
  std::ostringstream qout;
  write_queries(qs, qout);
  CHECK(qout.str() == "dog\nq2\tcat lamp\n");
}

TEST_CASE("run_batch records failures and aggregates the rest") {
  const auto report = fixture_report();
  CHECK(report.per_query.size() == 4);
  REQUIRE(report.failures.size() == 1);
  CHECK(report.failures[0].query_id == "q5");
  CHECK(report.failures[0].code == ErrorCode::NoSenseFound);
  CHECK_FALSE(report.warnings.empty());

  double sum = 0;
  for (const auto& q : report.per_query) sum += q.precision;
  CHECK(report.aggregate.avg_precision == sum / 4.0);

  const auto j = load_judgments_file(testkit::fixture("judgments5.csv"));
  std::vector<std::vector<std::string>> ranked;
  for (const auto& q : report.per_query) ranked.push_back(q.ranked_ids);
  const auto want = testkit::oracle::curves(ranked, relevant_sets(report, j));
  CHECK(report.aggregate.precision_at_rank == want.precision_at_rank);
  CHECK(report.aggregate.tp_at_rank == want.tp_at_rank);
  CHECK(report.aggregate.tp_normalized_at_rank == want.tp_normalized_at_rank);
  CHECK(report.aggregate.avg_tp == want.avg_tp);
  CHECK(report.aggregate.max_tp == want.max_tp);

  for (const auto& q : report.per_query) {
    for (const auto p : q.precision_at_k) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
}

TEST_CASE("single query aggregate equals its own metrics") {
  const auto t = testkit::fixture_taxonomy();
  const auto c = testkit::fixture_corpus(t);
  PathRelatedness rel(t);
  const auto j = load_judgments_file(testkit::fixture("judgments5.csv"));
  const auto r = run_batch(t, c, rel, {{"q1", "dog"}}, j, EvalParams{3, std::nullopt, false});
  REQUIRE(r.per_query.size() == 1);
  CHECK(r.aggregate.avg_precision == r.per_query[0].precision);
  CHECK(r.aggregate.avg_tp == r.per_query[0].tp_count);
  CHECK(r.aggregate.precision_at_rank == r.per_query[0].precision_at_k);

  CHECK(code_of([&] { run_batch(t, c, rel, {}, j); }) == ErrorCode::InvalidParams);
}

TEST_CASE("curves csv") {
  const auto report = fixture_report();
  std::ostringstream out;
  write_curves(report, out);
  const auto csv = out.str();
  CHECK(csv.rfind("rank,avg_precision,avg_tp_normalized,avg_tp\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) ==
        report.aggregate.precision_at_rank.size() + 1);
  CHECK(testkit::matches_golden("fixture_curves.csv", csv));

  EvalReport empty;
  testkit::TempDir dir;
  const auto path = dir.file("curves.csv");
  CHECK_THROWS_AS(emit_curves(empty, path), Error);
  CHECK_FALSE(std::filesystem::exists(path));
  emit_curves(report, path);
  CHECK(testkit::slurp(path) == csv);
  CHECK_THROWS_AS(emit_curves(report, dir.file("no/such/dir/c.csv")), Error);
}

TEST_CASE("seeded rng is portable and in range") {
  SeededRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  SeededRng r(1);
  for (int i = 0; i < 1000; ++i) {
    const auto x = r.between(-3, 3);
    CHECK(x >= -3);
    CHECK(x <= 3);
    const auto u = r.unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK_THROWS_AS(r.index(0), Error);
}

TEST_CASE("query term selection") {
  const auto t = testkit::fixture_taxonomy();
  const auto c = testkit::fixture_corpus(t);
  const auto terms = select_query_terms(t, c, 5, 2, 42);
  CHECK(terms.size() == 5);
  CHECK(terms == select_query_terms(t, c, 5, 2, 42));
  std::string joined;
  for (const auto& s : terms) joined += s + "\n";
  CHECK(testkit::matches_golden("query_terms_seed42.txt", joined));

  // radius 0: only lemmas of synsets actually used as tags
  std::set<SynsetId> tagged;
  for (const auto& [id, rec] : c.images()) {
    for (const auto& w : rec.weighted_tags()) tagged.insert(w.sense.synset);
  }
  for (const auto& term : select_query_terms(t, c, 6, 0, 3)) {
    const auto& senses = t.lookup_lemma(term);
    CHECK(std::any_of(senses.begin(), senses.end(), [&](const SynsetId& s) { return tagged.count(s) > 0; }));
  }
  CHECK(code_of([&] { select_query_terms(t, c, 100, 30, 1); }) == ErrorCode::NotEnoughCandidates);
  CHECK(code_of([&] { select_query_terms(t, c, 0, 3, 1); }) == ErrorCode::InvalidParams);
}

TEST_CASE("synthetic generator") {
  SyntheticParams p;
  p.n_images = 100;
  const auto a = generate_synthetic(p);
  const auto b = generate_synthetic(p);
  CHECK(a.taxonomy == b.taxonomy);
  CHECK(a.corpus == b.corpus);
  CHECK(a.taxonomy.size() == 956);
  CHECK(a.corpus.size() == 100);
  const auto st = a.corpus.tag_count_stats();
  CHECK(st.images == 100);
  CHECK(st.median == 20);
  CHECK(st.min == 13);
  CHECK(st.max == 28);

  std::set<SynsetId> used;
  for (const auto& [id, rec] : a.corpus.images()) {
    for (const auto& w : rec.weighted_tags()) used.insert(w.sense.synset);
  }
  CHECK(used.size() > 300);

  SyntheticParams other = p;
  other.seed = 8;
  CHECK_FALSE(generate_synthetic(other).corpus == a.corpus);

  SyntheticParams bad = p;
  bad.min_tags = 30;
  CHECK(code_of([&] { generate_synthetic(bad); }) == ErrorCode::InvalidParams);
  bad = p;
  bad.n_images = 0;
  CHECK(code_of([&] { generate_synthetic(bad); }) == ErrorCode::InvalidParams);
  bad = p;
  bad.n_synsets = 10;  // fewer synsets than max tags
  CHECK(code_of([&] { generate_synthetic(bad); }) == ErrorCode::InvalidParams);
}

TEST_CASE("rule judgments match a brute-force distance oracle") {
  SyntheticParams p;
  p.n_images = 10;
  p.n_synsets = 200;
  p.seed = 11;
  const auto data = generate_synthetic(p);
  const auto dist = testkit::oracle::all_distances(data.taxonomy.synsets());
  const auto terms = select_query_terms(data.taxonomy, data.corpus, 8, 30, 5);
  std::vector<BatchQuery> queries;
  for (const auto& term : terms) queries.push_back({term, term});
  queries.push_back({"bad", "zzqqx"});
  for (int radius : {0, 1, 2, 4}) {
    const auto j = rule_judgments(data.taxonomy, data.corpus, queries, radius);
    CHECK(j.size() == terms.size() * 10);
    for (const auto& q : queries) {
      if (q.id == "bad") continue;
      const auto qs = parse_query(data.taxonomy, q.text).synsets();
      for (const auto& [id, rec] : data.corpus.images()) {
        CHECK(j.find(q.id, id) == testkit::oracle::rule_relevant(dist, qs, rec, radius));
      }
    }
  }
}

TEST_CASE("rule judgments ignore synset labels") {
  // relabel every id by a fixed permutation; relevance must not move
  const auto t = testkit::fixture_taxonomy();
  const auto c = testkit::fixture_corpus(t);
  std::map<SynsetId, SynsetId> rename;
  std::vector<SynsetId> ids;
  for (const auto& s : t.synsets()) ids.push_back(s.id);
  for (std::size_t i = 0; i < ids.size(); ++i) rename[ids[i]] = SynsetId("n-" + std::to_string(900 - i * 7));
  auto synsets = t.synsets();
  for (auto& s : synsets) {
    s.id = rename.at(s.id);
    for (auto& r : s.relations) r.target = rename.at(r.target);
    std::sort(s.relations.begin(), s.relations.end());
  }
  const auto t2 = Taxonomy::from_synsets(synsets);
  Corpus c2;
  for (const auto& [id, rec] : c.images()) {
    ImageRecord copy(rec.id(), rec.source_ref(), rec.iaps_keyword(), rec.emotion());
    for (auto a : rec.assignments()) {
      a.sense.synset = rename.at(a.sense.synset);
      copy.assign(a);
    }
    c2.put(t2, copy);
  }
  const std::vector<BatchQuery> queries{{"q1", "dog"}, {"q2", "wheel"}, {"q3", "lamp person"}};
  for (int radius : {0, 1, 2, 3}) {
    CHECK(rule_judgments(t, c, queries, radius).list() == rule_judgments(t2, c2, queries, radius).list());
  }
}
