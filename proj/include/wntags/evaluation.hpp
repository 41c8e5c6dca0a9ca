#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wntags/corpus.hpp"
#include "wntags/error.hpp"
#include "wntags/relatedness.hpp"
#include "wntags/retrieval.hpp"
#include "wntags/taxonomy.hpp"

namespace wntags {

struct RelevanceJudgment {
  std::string query_id;
  std::string image_id;
  bool relevant = false;

  friend bool operator==(const RelevanceJudgment&, const RelevanceJudgment&) = default;
};

class Judgments {
 public:
  Judgments() = default;
  explicit Judgments(const std::vector<RelevanceJudgment>& list);  // FormatError on duplicates

  void add(const RelevanceJudgment& j);
  // nullopt when no judgment exists for the pair.
  std::optional<bool> find(const std::string& query_id, const std::string& image_id) const;
  std::vector<RelevanceJudgment> list() const;  // sorted by (query, image)
  std::size_t size() const noexcept { return map_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, bool> map_;
};

// CSV `query_id,image_id,relevant` with relevant in {0, 1}; an optional
// header line starting with "query_id" is skipped.
Judgments read_judgments(std::istream& in);
Judgments load_judgments_file(const std::string& path);
void write_judgments(const Judgments& judgments, std::ostream& out);

struct BatchQuery {
  std::string id;
  std::string text;
};

// One query per line, either `text` (id = text) or `id TAB text`.
std::vector<BatchQuery> read_queries(std::istream& in);
std::vector<BatchQuery> load_queries_file(const std::string& path);
void write_queries(const std::vector<BatchQuery>& queries, std::ostream& out);

struct PrecisionTp {
  std::vector<double> precision_at_k;  // k = 1 .. |results|
  std::vector<int> tp_at_k;
  int tp_count = 0;
  std::vector<std::string> unjudged;  // returned ids without a judgment
};

PrecisionTp precision_tp(const std::string& query_id, const std::vector<std::string>& ranked_ids,
                         const Judgments& judgments);

struct QueryEval {
  std::string query_id;
  std::string text;
  std::vector<std::string> ranked_ids;
  std::vector<double> precision_at_k;
  std::vector<int> tp_at_k;
  int tp_count = 0;
  double precision = 0;  // tp_count / |results|, 0 when nothing returned
};

struct QueryFailure {
  std::string query_id;
  std::string text;
  ErrorCode code;
  std::string message;
};

struct EvalAggregate {
  double avg_precision = 0;
  double avg_tp = 0;
  int max_tp = 0;
  // Index k-1 holds the value at rank k. Precision averages the queries
  // that returned at least k results; TP curves average every query, a
  // query with fewer results contributing its full TP count.
  std::vector<double> precision_at_rank;
  std::vector<double> tp_at_rank;
  std::vector<double> tp_normalized_at_rank;  // per-query tp@k / max_tp, averaged
};

struct EvalReport {
  std::vector<QueryEval> per_query;
  std::vector<QueryFailure> failures;
  std::vector<std::string> warnings;
  EvalAggregate aggregate;
};

struct EvalParams {
  int max_distance = kDefaultMaxDistance;
  std::optional<std::size_t> limit;
  bool include_drafts = false;
};

EvalReport run_batch(const Taxonomy& taxonomy, const Corpus& corpus,
                     const RelatednessSource& relatedness, const std::vector<BatchQuery>& queries,
                     const Judgments& judgments, const EvalParams& params = {});

// Recomputes the aggregate block from per-query entries.
EvalAggregate aggregate(const std::vector<QueryEval>& per_query);

// CSV `rank,avg_precision,avg_tp_normalized,avg_tp`, one row per rank.
void write_curves(const EvalReport& report, std::ostream& out);
void emit_curves(const EvalReport& report, const std::string& path);

// Portable seeded sampling (the std distributions are not specified
// bit-for-bit across standard libraries).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  std::size_t index(std::size_t n);  // uniform in [0, n)
  int between(int lo, int hi);       // uniform in [lo, hi]
  double unit();                     // uniform in [0, 1)

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

// Draws n distinct single-word lemmas from synsets within `radius` hops of
// the nearest tag synset in the corpus.
std::vector<std::string> select_query_terms(const Taxonomy& taxonomy, const Corpus& corpus,
                                            std::size_t n, int radius, std::uint64_t seed);

struct SyntheticParams {
  std::size_t n_synsets = 956;
  std::size_t n_images = 100;
  int min_tags = 13;
  int median_tags = 20;
  int max_tags = 28;
  std::size_t annotator_pool = 12;
  int theme_radius = 3;
  std::uint64_t seed = 7;

  void validate() const;  // throws InvalidParams
};

struct SyntheticData {
  Taxonomy taxonomy;
  Corpus corpus;
};

SyntheticData generate_synthetic(const SyntheticParams& params);

// Rule-based ground truth: an image is relevant to a query when some query
// synset lies within `radius` hops of some image tag synset. Queries that
// fail to parse are skipped.
Judgments rule_judgments(const Taxonomy& taxonomy, const Corpus& corpus,
                         const std::vector<BatchQuery>& queries, int radius);

}  // namespace wntags
