#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wntags/corpus.hpp"
#include "wntags/error.hpp"
#include "wntags/relatedness.hpp"
#include "wntags/taxonomy.hpp"

namespace wntags {

inline constexpr int kDefaultMaxDistance = 10;
inline constexpr std::size_t kMaxCollocationLength = 4;

struct MatchedSpan {
  std::size_t first_token = 0;  // [first_token, last_token)
  std::size_t last_token = 0;
  std::string lemma;
  std::set<SynsetId> synsets;

  friend bool operator==(const MatchedSpan&, const MatchedSpan&) = default;
};

struct Query {
  std::string raw_text;
  std::vector<std::string> tokens;
  std::vector<MatchedSpan> matched_spans;  // left to right, non-overlapping
  std::vector<std::string> unmatched_tokens;
  int max_distance = kDefaultMaxDistance;

  // Union of all span synsets, ascending.
  std::vector<SynsetId> synsets() const;
};

// Lowercased ASCII alphanumeric runs, in order.
std::vector<std::string> tokenize(std::string_view text);

// Collocations are contiguous n-grams (n <= 4) joined by '_'. Longer matches
// win, then leftmost; chosen spans never overlap. Throws EmptyQuery or
// NoSenseFound.
Query parse_query(const Taxonomy& taxonomy, std::string_view text,
                  int max_distance = kDefaultMaxDistance);

struct Contribution {
  SynsetId query_synset;
  SynsetId image_synset;
  double mean_weight = 0;
  double sim = 0;
};

struct RankedResult {
  std::string image_id;
  double raw_score = 0;
  double relevance = 0;
  std::vector<Contribution> contributions;  // sim > 0, summing to raw_score
};

// Relevance resolution used for ranking; scores closer than this tie and
// fall back to image id.
inline constexpr double kRankResolution = 1e-12;
std::int64_t rank_key(double relevance) noexcept;
bool ranks_before(const RankedResult& a, const RankedResult& b) noexcept;

// raw = sum over query synsets q and weighted tags (w, s) of w * sim(q, s);
// relevance = raw / (|Q| * sum of w), or 0 when the image carries no weight.
RankedResult score_image(const Query& query, const ImageRecord& image,
                         const RelatednessSource& relatedness);

struct SearchOptions {
  std::optional<std::size_t> limit;  // nullopt means all
  bool include_drafts = false;
};

// Exhaustive scan; keeps raw_score > 0, sorted by relevance then image id.
std::vector<RankedResult> search(const Corpus& corpus, const Query& query,
                                 const RelatednessSource& relatedness,
                                 const SearchOptions& options = {});

struct AdaptiveParams {
  int start = 2;
  int step = 2;
  std::size_t min_results = 1;
  int ceiling = kDefaultMaxDistance;
};

struct AdaptiveOutcome {
  std::vector<RankedResult> results;
  int final_distance = 0;
};

// Widens the radius start, start + step, ... until min_results are found.
// The last attempt is clamped to the ceiling.
AdaptiveOutcome adaptive_search(const Corpus& corpus, Query query,
                                const RelatednessSource& relatedness, const AdaptiveParams& params,
                                const SearchOptions& options = {});

struct ClosedRange {
  double lo = 1.0;
  double hi = 9.0;
};

struct AffectFilter {
  std::optional<ClosedRange> valence;
  std::optional<ClosedRange> arousal;
  std::optional<ClosedRange> dominance;

  void validate() const;  // throws InvalidRange
  bool accepts(const EmotionRating& emotion) const;
};

std::vector<RankedResult> filter_affect(const Corpus& corpus, std::vector<RankedResult> results,
                                        const AffectFilter& filter);

// Case-insensitive exact match on the legacy keyword; ids ascending.
std::vector<std::string> search_by_keyword(const Corpus& corpus, std::string_view keyword);

}  // namespace wntags
