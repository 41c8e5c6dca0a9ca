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

std::vector<std::string> ids(const std::vector<RankedResult>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(r.image_id);
  return out;
}

ImageRecord image_with(const Taxonomy& t, const std::vector<std::pair<const char*, double>>& tags) {
  Corpus c;
  c.add_image("x", "", "", {5, 5, 5});
  for (const auto& [s, w] : tags) c.annotate(t, "x", TagAssignment{"a1", Sense{SynsetId(s), ""}, w});
  return c.image("x");
}

}  // namespace

TEST_CASE("tokenize") {
  CHECK(tokenize("Attack  DOG!") == std::vector<std::string>{"attack", "dog"});
  CHECK(tokenize("guard-dog, 2x") == std::vector<std::string>{"guard", "dog", "2x"});
  CHECK(tokenize("  ").empty());
}

TEST_CASE("collocations") {
  const auto t = load_taxonomy_file(testkit::fixture("collocations.tsv"));
  const auto q = parse_query(t, "attack dog");
  REQUIRE(q.matched_spans.size() == 1);
  CHECK(q.matched_spans[0].lemma == "attack_dog");
  CHECK(q.synsets() == std::vector<SynsetId>{sid("n-2")});

  // the four-word lemma beats every shorter reading
  const auto big = parse_query(t, "big bad guard dog attack");
  REQUIRE(big.matched_spans.size() == 2);
  CHECK(big.matched_spans[0].lemma == "big_bad_guard_dog");
  CHECK(big.matched_spans[1].lemma == "attack");
  CHECK(big.unmatched_tokens.empty());

  // "guard dog attack dog": longest first picks guard_dog, then attack_dog
  const auto chain = parse_query(t, "guard dog attack dog");
  REQUIRE(chain.matched_spans.size() == 2);
  CHECK(chain.matched_spans[0].lemma == "guard_dog");
  CHECK(chain.matched_spans[1].lemma == "attack_dog");

  // overlapping bigrams: leftmost wins, leftover token matched singly
  const auto overlap = parse_query(t, "attack dog attack");
  REQUIRE(overlap.matched_spans.size() == 2);
  CHECK(overlap.matched_spans[0].lemma == "attack_dog");
  CHECK(overlap.matched_spans[0].first_token == 0);
  CHECK(overlap.matched_spans[1].lemma == "attack");

  // a polysemous lemma brings every sense
  const auto poly = parse_query(t, "dog");
  CHECK(poly.synsets() == std::vector<SynsetId>{sid("n-1"), sid("n-7")});

  for (const auto& query : {big, chain, overlap}) {
    for (std::size_t i = 1; i < query.matched_spans.size(); ++i) {
      CHECK(query.matched_spans[i - 1].last_token <= query.matched_spans[i].first_token);
    }
  }
}

TEST_CASE("parse errors and partial matches") {
  const auto t = testkit::fixture_taxonomy();
  const auto q = parse_query(t, "purple dog");
  CHECK(q.matched_spans.size() == 1);
  CHECK(q.unmatched_tokens == std::vector<std::string>{"purple"});
  CHECK(code_of([&] { parse_query(t, "   "); }) == ErrorCode::EmptyQuery);
  CHECK(code_of([&] { parse_query(t, "!!!"); }) == ErrorCode::EmptyQuery);
  CHECK(code_of([&] { parse_query(t, "purple unicorn"); }) == ErrorCode::NoSenseFound);
  CHECK(code_of([&] { parse_query(t, "dog", -1); }) == ErrorCode::InvalidParams);
}

TEST_CASE("score_image hand cases") {
  const auto t = testkit::fixture_taxonomy();
  PathRelatedness rel(t);

  const auto perfect = score_image(parse_query(t, "dog"), image_with(t, {{"n-3", 1.0}}), rel);
  CHECK(perfect.raw_score == 1.0);
  CHECK(perfect.relevance == 1.0);

  const auto cat = score_image(parse_query(t, "cat", 3), image_with(t, {{"n-3", 0.9}, {"n-8", 0.4}}), rel);
  CHECK(cat.raw_score == doctest::Approx(0.3).epsilon(1e-15));
  REQUIRE(cat.contributions.size() == 1);
  CHECK(cat.contributions[0].image_synset == sid("n-3"));
  CHECK(cat.relevance == doctest::Approx(0.3 / 1.3));

  // bilinear in the query synsets
  const auto img = image_with(t, {{"n-3", 0.9}, {"n-8", 0.4}, {"n-20", 0.7}});
  const double both = score_image(parse_query(t, "cat car"), img, rel).raw_score;
  const double split = score_image(parse_query(t, "cat"), img, rel).raw_score +
                       score_image(parse_query(t, "car"), img, rel).raw_score;
  CHECK(both == doctest::Approx(split).epsilon(1e-15));

  // contributions sum to the raw score
  const auto r = score_image(parse_query(t, "cat car lamp"), img, rel);
  double sum = 0;
  for (const auto& c : r.contributions) {
    CHECK(c.sim > 0);
    sum += c.mean_weight * c.sim;
  }
  CHECK(sum == r.raw_score);

  // no weight at all
  const auto zero = score_image(parse_query(t, "dog"), image_with(t, {{"n-3", 0.0}}), rel);
  CHECK(zero.raw_score == 0.0);
  CHECK(zero.relevance == 0.0);
}

TEST_CASE("search on the fixture corpus matches the brute-force scorer") {
  const auto t = testkit::fixture_taxonomy();
  const auto c = testkit::fixture_corpus(t);
  const auto dist = testkit::oracle::all_distances(t.synsets());
  PathRelatedness rel(t);
  for (const char* text : {"dog", "cat lamp", "wheel", "person", "snake"}) {
    for (int d : {0, 1, 3, 10}) {
      const auto q = parse_query(t, text, d);
      const auto got = search(c, q, rel);
      const auto want = testkit::oracle::rank(dist, c, q.synsets(), d);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].image_id == want[i].image_id);
        CHECK(std::fabs(got[i].raw_score - want[i].raw) <= 1e-12);
        CHECK(std::fabs(got[i].relevance - want[i].relevance) <= 1e-12);
      }
    }
  }
  const auto dog = search(c, parse_query(t, "dog", 10), rel);
  CHECK(dog.front().image_id == "1100");
  // the draft is skipped unless asked for
  const auto dog_ids = ids(dog);
  CHECK(std::find(dog_ids.begin(), dog_ids.end(), "1500") == dog_ids.end());
  const auto drafts = search(c, parse_query(t, "dog", 10), rel, {std::nullopt, true});
  CHECK(drafts.size() == dog.size() + 1);

  // limit is a prefix of the full ordering
  const auto top = search(c, parse_query(t, "dog", 10), rel, {1, false});
  REQUIRE(top.size() == 1);
  CHECK(top[0].image_id == dog[0].image_id);

  // nothing within reach
  CHECK(search(c, parse_query(t, "wheel", 0), rel).size() == 1);
  Corpus lonely;
  lonely.add_image("z", "", "", {5, 5, 5});
  CHECK(search(lonely, parse_query(t, "dog"), rel).empty());
}

TEST_CASE("ties break by image id") {
  const auto t = testkit::fixture_taxonomy();
  Corpus c;
  for (const char* id : {"b", "a", "c"}) {
    c.add_image(id, "", "", {5, 5, 5});
    for (const char* who : {"a1", "a2"}) {
      for (const char* s : {"n-3", "n-4", "n-5"}) c.annotate(t, id, TagAssignment{who, Sense{SynsetId(s), ""}, 0.5});
    }
  }
  PathRelatedness rel(t);
  CHECK(ids(search(c, parse_query(t, "dog"), rel)) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("adaptive search") {
  const auto t = testkit::fixture_taxonomy();
  PathRelatedness rel(t);
  // images sit 3 and 4 hops from "dog"; nothing within 2
  Corpus c;
  for (const char* id : {"p", "q", "r"}) {
    c.add_image(id, "", "", {5, 5, 5});
    for (const char* who : {"a1", "a2"}) {
      for (const char* s : {"n-7", "n-8", "n-9"}) c.annotate(t, id, TagAssignment{who, Sense{SynsetId(s), ""}, 0.5});
    }
  }
  const auto q = parse_query(t, "dog");
  CHECK(search(c, parse_query(t, "dog", 2), rel).empty());
  const auto out = adaptive_search(c, q, rel, AdaptiveParams{2, 2, 1, 10});
  CHECK(out.final_distance == 4);
  CHECK(out.results.size() == 3);

  const auto fixture = testkit::fixture_corpus(t);
  const auto first = adaptive_search(fixture, q, rel, AdaptiveParams{2, 2, 1, 10});
  CHECK(first.final_distance == 2);
  CHECK(ids(first.results) == ids(search(fixture, parse_query(t, "dog", 2), rel)));

  Corpus far;
  far.add_image("f", "", "", {5, 5, 5});
  for (const char* who : {"a1", "a2"}) {
    for (const char* s : {"n-7", "n-20", "n-6"}) far.annotate(t, "f", TagAssignment{who, Sense{SynsetId(s), ""}, 0.5});
  }
  const auto none = adaptive_search(far, q, rel, AdaptiveParams{1, 2, 1, 2});
  CHECK(none.results.empty());
  CHECK(none.final_distance == 2);
  const auto clamp = adaptive_search(far, q, rel, AdaptiveParams{0, 3, 5, 4});
  CHECK(clamp.final_distance == 4);

  CHECK(code_of([&] { adaptive_search(far, q, rel, AdaptiveParams{5, 1, 1, 4}); }) == ErrorCode::InvalidParams);
  CHECK(code_of([&] { adaptive_search(far, q, rel, AdaptiveParams{1, 0, 1, 4}); }) == ErrorCode::InvalidParams);
  CHECK(code_of([&] { adaptive_search(far, q, rel, AdaptiveParams{1, 1, 0, 4}); }) == ErrorCode::InvalidParams);
}

TEST_CASE("affect filter") {
  const auto t = testkit::fixture_taxonomy();
  const auto c = testkit::fixture_corpus(t);
  PathRelatedness rel(t);
  const auto all = search(c, parse_query(t, "entity"), rel);
  REQUIRE(all.size() == 5);
  CHECK(ids(filter_affect(c, all, {ClosedRange{1, 9}, std::nullopt, std::nullopt})) == ids(all));
  CHECK(ids(filter_affect(c, all, {})) == ids(all));
  CHECK(ids(filter_affect(c, all, {ClosedRange{1, 3}, std::nullopt, std::nullopt})) ==
        std::vector<std::string>{"1100"});
  // closed at both ends
  CHECK(ids(filter_affect(c, all, {std::nullopt, ClosedRange{1.72, 1.72}, std::nullopt})) ==
        std::vector<std::string>{"7175"});
  const auto mid = filter_affect(c, all, {ClosedRange{3, 8}, ClosedRange{4, 8}, ClosedRange{3, 7}});
  for (std::size_t i = 1; i < mid.size(); ++i) CHECK(ranks_before(mid[i - 1], mid[i]));

  CHECK(code_of([&] { AffectFilter{ClosedRange{5, 3}, std::nullopt, std::nullopt}.validate(); }) ==
        ErrorCode::InvalidRange);
  CHECK(code_of([&] { AffectFilter{std::nullopt, ClosedRange{0, 3}, std::nullopt}.validate(); }) ==
        ErrorCode::InvalidRange);
  CHECK(code_of([&] { AffectFilter{std::nullopt, std::nullopt, ClosedRange{2, 9.5}}.validate(); }) ==
        ErrorCode::InvalidRange);
}

TEST_CASE("keyword search") {
  const auto t = testkit::fixture_taxonomy();
  const auto c = testkit::fixture_corpus(t);
  CHECK(search_by_keyword(c, "lamp") == std::vector<std::string>{"7175"});
  CHECK(search_by_keyword(c, "LAMP") == std::vector<std::string>{"7175"});
  CHECK(search_by_keyword(c, "dog") == std::vector<std::string>{"1100", "1500"});
  CHECK(search_by_keyword(c, "unicorn").empty());
}

TEST_CASE("property: random corpora match the oracle") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto t = testkit::random_taxonomy(seed * 31, 30);
    const auto c = testkit::random_corpus(t, seed, 25);
    const auto dist = testkit::oracle::all_distances(t.synsets());
    PathRelatedness rel(t);
    SeededRng rng(seed);
    for (int k = 0; k < 10; ++k) {
      const int d = rng.between(0, 6);
      const auto q = parse_query(t, testkit::random_query(t, rng), d);
      const auto got = search(c, q, rel);
      const auto want = testkit::oracle::rank(dist, c, q.synsets(), d);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].image_id == want[i].image_id);
        CHECK(std::fabs(got[i].raw_score - want[i].raw) <= 1e-9);
        CHECK(got[i].relevance >= 0.0);
        CHECK(got[i].relevance <= 1.0);
      }
    }
  }
}

TEST_CASE("property: a zero-weight tag changes no score") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto t = testkit::random_taxonomy(seed, 25);
    auto c = testkit::random_corpus(t, seed + 1, 10);
    PathRelatedness rel(t);
    SeededRng rng(seed);
    const auto q = parse_query(t, testkit::random_query(t, rng), 4);
    const auto before = search(c, q, rel);
    // a zero weight on a brand new synset adds a tag with mean 0
    const auto target = c.images().begin()->first;
    for (const auto& s : t.synsets()) {
      const auto& tags = c.image(target).weighted_tags();
      const bool present = std::any_of(tags.begin(), tags.end(), [&](const auto& w) { return w.sense.synset == s.id; });
      if (!present) {
        c.annotate(t, target, TagAssignment{"r1", Sense{s.id, ""}, 0.0});
        break;
      }
    }
    const auto after = search(c, q, rel);
    REQUIRE(after.size() == before.size());
    for (std::size_t i = 0; i < after.size(); ++i) {
      CHECK(after[i].image_id == before[i].image_id);
      CHECK(after[i].raw_score == before[i].raw_score);
      CHECK(after[i].relevance == before[i].relevance);
    }
  }
}

TEST_CASE("relevance is 1 only when every pair has sim 1") {
  const auto t = testkit::fixture_taxonomy();
  PathRelatedness rel(t);
  CHECK(score_image(parse_query(t, "snake serpent"), image_with(t, {{"n-11", 0.4}}), rel).relevance == 1.0);
  CHECK(score_image(parse_query(t, "dog"), image_with(t, {{"n-3", 0.4}, {"n-5", 0.4}}), rel).relevance < 1.0);
}
