#include "wntags/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "text_util.hpp"
#include "wntags/error.hpp"

namespace wntags {

std::vector<SynsetId> Query::synsets() const {
  std::set<SynsetId> all;
  for (const auto& span : matched_spans) all.insert(span.synsets.begin(), span.synsets.end());
  return {all.begin(), all.end()};
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char c : text) {
    const bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    if (alnum) {
      current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Query parse_query(const Taxonomy& taxonomy, std::string_view text, int max_distance) {
  if (detail::trim(text).empty()) throw Error(ErrorCode::EmptyQuery, "query is empty");
  if (max_distance < 0) throw Error(ErrorCode::InvalidParams, "d_max must be >= 0");

  Query q;
  q.raw_text = std::string(text);
  q.max_distance = max_distance;
  q.tokens = tokenize(text);
  if (q.tokens.empty()) throw Error(ErrorCode::EmptyQuery, "query has no words");

  const auto n = q.tokens.size();
  std::vector<bool> covered(n, false);
  for (auto len = std::min(kMaxCollocationLength, n); len >= 1; --len) {
    for (std::size_t start = 0; start + len <= n; ++start) {
      if (std::any_of(covered.begin() + static_cast<std::ptrdiff_t>(start),
                      covered.begin() + static_cast<std::ptrdiff_t>(start + len),
                      [](bool c) { return c; })) {
        continue;
      }
      std::string lemma = q.tokens[start];
      for (auto k = start + 1; k < start + len; ++k) lemma += '_' + q.tokens[k];
      const auto& synsets = taxonomy.lookup_lemma(lemma);
      if (synsets.empty()) continue;
      std::fill(covered.begin() + static_cast<std::ptrdiff_t>(start),
                covered.begin() + static_cast<std::ptrdiff_t>(start + len), true);
      q.matched_spans.push_back({start, start + len, std::move(lemma), synsets});
    }
  }
  std::sort(q.matched_spans.begin(), q.matched_spans.end(),
            [](const MatchedSpan& a, const MatchedSpan& b) { return a.first_token < b.first_token; });
  for (std::size_t i = 0; i < n; ++i) {
    if (!covered[i]) q.unmatched_tokens.push_back(q.tokens[i]);
  }
  if (q.matched_spans.empty()) {
    throw Error(ErrorCode::NoSenseFound, "no taxonomy sense matches '" + q.raw_text + "'");
  }
  return q;
}

std::int64_t rank_key(double relevance) noexcept {
  return std::llround(relevance / kRankResolution);
}

bool ranks_before(const RankedResult& a, const RankedResult& b) noexcept {
  const auto ka = rank_key(a.relevance);
  const auto kb = rank_key(b.relevance);
  if (ka != kb) return ka > kb;
  return a.image_id < b.image_id;
}

namespace {

struct QueryRows {
  std::vector<SynsetId> synsets;
  std::vector<RelatednessRow> rows;
};

QueryRows rows_for(const Query& query, const RelatednessSource& relatedness) {
  QueryRows out;
  out.synsets = query.synsets();
  out.rows.reserve(out.synsets.size());
  for (const auto& qs : out.synsets) out.rows.push_back(relatedness.row(qs, query.max_distance));
  return out;
}

RankedResult score_with_rows(const QueryRows& rows, const ImageRecord& image) {
  RankedResult r;
  r.image_id = image.id();
  const auto& tags = image.weighted_tags();
  for (std::size_t i = 0; i < rows.synsets.size(); ++i) {
    const auto& row = rows.rows[i];
    for (const auto& tag : tags) {
      const auto it = row.find(tag.sense.synset);
      if (it == row.end() || !(it->second > 0.0)) continue;
      const double c = tag.mean_weight * it->second;
      r.contributions.push_back({rows.synsets[i], tag.sense.synset, tag.mean_weight, it->second});
      r.raw_score += c;
    }
  }
  double mass = 0.0;
  for (const auto& tag : tags) mass += tag.mean_weight;
  const double denom = static_cast<double>(rows.synsets.size()) * mass;
  r.relevance = denom > 0.0 ? std::min(1.0, r.raw_score / denom) : 0.0;
  return r;
}

}  // namespace

RankedResult score_image(const Query& query, const ImageRecord& image,
                         const RelatednessSource& relatedness) {
  return score_with_rows(rows_for(query, relatedness), image);
}

std::vector<RankedResult> search(const Corpus& corpus, const Query& query,
                                 const RelatednessSource& relatedness,
                                 const SearchOptions& options) {
  if (options.limit && *options.limit == 0) throw Error(ErrorCode::InvalidParams, "limit must be positive");
  const auto rows = rows_for(query, relatedness);
  std::vector<RankedResult> results;
  for (const auto& [id, image] : corpus.images()) {
    if (!options.include_drafts && !image.publishable()) continue;
    auto r = score_with_rows(rows, image);
    if (r.raw_score > 0.0) results.push_back(std::move(r));
  }
  std::sort(results.begin(), results.end(), ranks_before);
  if (options.limit && results.size() > *options.limit) results.resize(*options.limit);
  return results;
}

AdaptiveOutcome adaptive_search(const Corpus& corpus, Query query,
                                const RelatednessSource& relatedness, const AdaptiveParams& params,
                                const SearchOptions& options) {
  if (params.start < 0 || params.start > params.ceiling || params.step < 1 ||
      params.min_results < 1) {
    throw Error(ErrorCode::InvalidParams, "adaptive search needs 0 <= start <= ceiling, step >= 1, min_results >= 1");
  }
  AdaptiveOutcome out;
  int d = params.start;
  while (true) {
    query.max_distance = d;
    out.results = search(corpus, query, relatedness, options);
    out.final_distance = d;
    if (out.results.size() >= params.min_results || d >= params.ceiling) return out;
    d = std::min(d + params.step, params.ceiling);
  }
}

void AffectFilter::validate() const {
  for (const auto* r : {&valence, &arousal, &dominance}) {
    if (!*r) continue;
    const auto& range = **r;
    if (!(range.lo >= 1.0 && range.hi <= 9.0 && range.lo <= range.hi)) {
      throw Error(ErrorCode::InvalidRange,
                  "[" + detail::format_exact(range.lo) + ", " + detail::format_exact(range.hi) +
                      "] is not a range inside [1, 9]");
    }
  }
}

bool AffectFilter::accepts(const EmotionRating& e) const {
  auto inside = [](const std::optional<ClosedRange>& r, double v) {
    return !r || (v >= r->lo && v <= r->hi);
  };
  return inside(valence, e.valence) && inside(arousal, e.arousal) && inside(dominance, e.dominance);
}

std::vector<RankedResult> filter_affect(const Corpus& corpus, std::vector<RankedResult> results,
                                        const AffectFilter& filter) {
  filter.validate();
  std::erase_if(results, [&](const RankedResult& r) {
    return !filter.accepts(corpus.image(r.image_id).emotion());
  });
  return results;
}

std::vector<std::string> search_by_keyword(const Corpus& corpus, std::string_view keyword) {
  const auto wanted = detail::to_lower(keyword);
  std::vector<std::string> ids;
  for (const auto& [id, rec] : corpus.images()) {
    if (detail::to_lower(rec.iaps_keyword()) == wanted) ids.push_back(id);
  }
  return ids;
}

}  // namespace wntags
