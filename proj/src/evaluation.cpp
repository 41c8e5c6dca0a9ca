#include "wntags/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "text_util.hpp"
#include "wntags/error.hpp"

namespace wntags {

Judgments::Judgments(const std::vector<RelevanceJudgment>& list) {
  for (const auto& j : list) add(j);
}

void Judgments::add(const RelevanceJudgment& j) {
  if (!map_.emplace(std::make_pair(j.query_id, j.image_id), j.relevant).second) {
    throw Error(ErrorCode::FormatError,
                "duplicate judgment for (" + j.query_id + ", " + j.image_id + ")");
  }
}

std::optional<bool> Judgments::find(const std::string& query_id,
                                    const std::string& image_id) const {
  const auto it = map_.find({query_id, image_id});
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

std::vector<RelevanceJudgment> Judgments::list() const {
  std::vector<RelevanceJudgment> out;
  out.reserve(map_.size());
  for (const auto& [key, rel] : map_) out.push_back({key.first, key.second, rel});
  return out;
}

Judgments read_judgments(std::istream& in) {
  Judgments out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("query_id", 0) == 0) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
        (fields[2] != "0" && fields[2] != "1")) {
      throw Error(ErrorCode::FormatError, "line " + std::to_string(line_no) +
                                              ": expected query_id,image_id,relevant(0|1)");
    }
    try {
      out.add({std::string(fields[0]), std::string(fields[1]), fields[2] == "1"});
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.message());
    }
  }
  return out;
}

Judgments load_judgments_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_judgments(in);
}

void write_judgments(const Judgments& judgments, std::ostream& out) {
  out << "query_id,image_id,relevant\n";
  for (const auto& j : judgments.list()) {
    out << j.query_id << ',' << j.image_id << ',' << (j.relevant ? '1' : '0') << '\n';
  }
}

std::vector<BatchQuery> read_queries(std::istream& in) {
  std::vector<BatchQuery> out;
  std::string raw;
  while (std::getline(in, raw)) {
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      out.push_back({std::string(line), std::string(line)});
    } else {
      out.push_back({std::string(detail::trim(line.substr(0, tab))),
                     std::string(detail::trim(line.substr(tab + 1)))});
    }
  }
  return out;
}

std::vector<BatchQuery> load_queries_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_queries(in);
}

void write_queries(const std::vector<BatchQuery>& queries, std::ostream& out) {
  for (const auto& q : queries) {
    if (q.id == q.text) {
      out << q.text << '\n';
    } else {
      out << q.id << '\t' << q.text << '\n';
    }
  }
}

PrecisionTp precision_tp(const std::string& query_id, const std::vector<std::string>& ranked_ids,
                         const Judgments& judgments) {
  PrecisionTp out;
  out.precision_at_k.reserve(ranked_ids.size());
  out.tp_at_k.reserve(ranked_ids.size());
  for (std::size_t k = 0; k < ranked_ids.size(); ++k) {
    const auto rel = judgments.find(query_id, ranked_ids[k]);
    if (!rel) out.unjudged.push_back(ranked_ids[k]);
    if (rel.value_or(false)) ++out.tp_count;
    out.tp_at_k.push_back(out.tp_count);
    out.precision_at_k.push_back(static_cast<double>(out.tp_count) / static_cast<double>(k + 1));
  }
  return out;
}

EvalAggregate aggregate(const std::vector<QueryEval>& per_query) {
  EvalAggregate agg;
  if (per_query.empty()) return agg;
  const double nq = static_cast<double>(per_query.size());

  std::size_t depth = 0;
  double sum_precision = 0.0;
  double sum_tp = 0.0;
  for (const auto& q : per_query) {
    sum_precision += q.precision;
    sum_tp += q.tp_count;
    agg.max_tp = std::max(agg.max_tp, q.tp_count);
    depth = std::max(depth, q.ranked_ids.size());
  }
  agg.avg_precision = sum_precision / nq;
  agg.avg_tp = sum_tp / nq;

  for (std::size_t k = 0; k < depth; ++k) {
    double p_sum = 0.0;
    std::size_t p_count = 0;
    double tp_sum = 0.0;
    double norm_sum = 0.0;
    for (const auto& q : per_query) {
      if (k < q.precision_at_k.size()) {
        p_sum += q.precision_at_k[k];
        ++p_count;
      }
      const int tp = q.tp_at_k.empty() ? 0 : q.tp_at_k[std::min(k, q.tp_at_k.size() - 1)];
      tp_sum += tp;
      norm_sum += agg.max_tp > 0 ? static_cast<double>(tp) / agg.max_tp : 0.0;
    }
    agg.precision_at_rank.push_back(p_sum / static_cast<double>(p_count));
    agg.tp_at_rank.push_back(tp_sum / nq);
    agg.tp_normalized_at_rank.push_back(norm_sum / nq);
  }
  return agg;
}

EvalReport run_batch(const Taxonomy& taxonomy, const Corpus& corpus,
                     const RelatednessSource& relatedness, const std::vector<BatchQuery>& queries,
                     const Judgments& judgments, const EvalParams& params) {
  if (queries.empty()) throw Error(ErrorCode::InvalidParams, "no queries to evaluate");
  EvalReport report;
  const SearchOptions options{params.limit, params.include_drafts};
  for (const auto& bq : queries) {
    try {
      const auto query = parse_query(taxonomy, bq.text, params.max_distance);
      const auto results = search(corpus, query, relatedness, options);
      QueryEval qe;
      qe.query_id = bq.id;
      qe.text = bq.text;
      for (const auto& r : results) qe.ranked_ids.push_back(r.image_id);
      auto pt = precision_tp(bq.id, qe.ranked_ids, judgments);
      for (const auto& id : pt.unjudged) {
        report.warnings.push_back("no judgment for (" + bq.id + ", " + id + "); counted as not relevant");
      }
      qe.precision_at_k = std::move(pt.precision_at_k);
      qe.tp_at_k = std::move(pt.tp_at_k);
      qe.tp_count = pt.tp_count;
      qe.precision = qe.ranked_ids.empty()
                         ? 0.0
                         : static_cast<double>(qe.tp_count) / static_cast<double>(qe.ranked_ids.size());
      report.per_query.push_back(std::move(qe));
    } catch (const Error& e) {
      report.failures.push_back({bq.id, bq.text, e.code(), e.message()});
    }
  }
  report.aggregate = aggregate(report.per_query);
  return report;
}

void write_curves(const EvalReport& report, std::ostream& out) {
  const auto& agg = report.aggregate;
  if (report.per_query.empty() || agg.precision_at_rank.empty()) {
    throw Error(ErrorCode::InvalidParams, "report has no ranked results to plot");
  }
  out << "rank,avg_precision,avg_tp_normalized,avg_tp\n";
  for (std::size_t k = 0; k < agg.precision_at_rank.size(); ++k) {
    out << (k + 1) << ',' << detail::format_exact(agg.precision_at_rank[k]) << ','
        << detail::format_exact(agg.tp_normalized_at_rank[k]) << ','
        << detail::format_exact(agg.tp_at_rank[k]) << '\n';
  }
}

void emit_curves(const EvalReport& report, const std::string& path) {
  std::ostringstream buf;
  write_curves(report, buf);  // validates before touching the file
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << buf.str();
  if (!out.flush()) throw Error(ErrorCode::IoError, "write failed: " + path);
}

std::size_t SeededRng::index(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidParams, "cannot sample from an empty range");
  const std::uint64_t bound = n;
  const std::uint64_t threshold = (0 - bound) % bound;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x < threshold);
  return static_cast<std::size_t>(x % bound);
}

int SeededRng::between(int lo, int hi) {
  return lo + static_cast<int>(index(static_cast<std::size_t>(hi - lo) + 1));
}

double SeededRng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

namespace {

// Multi-source BFS distances (-1 = beyond radius).
std::vector<int> distances_from(const Taxonomy& taxonomy, const std::set<SynsetId>& sources,
                                int radius) {
  std::vector<int> dist(taxonomy.size(), -1);
  std::vector<std::uint32_t> queue;
  for (const auto& s : sources) {
    const auto i = taxonomy.index_of(s);
    if (dist[i] < 0) {
      dist[i] = 0;
      queue.push_back(i);
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto u = queue[head];
    if (dist[u] >= radius) continue;
    for (const auto v : taxonomy.neighbors(u)) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace

std::vector<std::string> select_query_terms(const Taxonomy& taxonomy, const Corpus& corpus,
                                            std::size_t n, int radius, std::uint64_t seed) {
  if (n == 0 || radius < 0) throw Error(ErrorCode::InvalidParams, "need n >= 1 and radius >= 0");
  std::set<SynsetId> tagged;
  for (const auto& [id, rec] : corpus.images()) {
    for (const auto& t : rec.weighted_tags()) tagged.insert(t.sense.synset);
  }
  const auto dist = distances_from(taxonomy, tagged, radius);

  std::set<std::string> pool_set;
  const auto& synsets = taxonomy.synsets();
  for (std::size_t i = 0; i < synsets.size(); ++i) {
    if (dist[i] < 0) continue;
    for (const auto& lemma : synsets[i].lemmas) {
      if (lemma.find('_') == std::string::npos) pool_set.insert(lemma);
    }
  }
  std::vector<std::string> pool(pool_set.begin(), pool_set.end());
  if (n > pool.size()) {
    throw Error(ErrorCode::NotEnoughCandidates, "asked for " + std::to_string(n) + " terms, only " +
                                                    std::to_string(pool.size()) + " candidates");
  }
  SeededRng rng(seed);
  // partial Fisher-Yates: the first n slots are the draw, in draw order
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
  }
  pool.resize(n);
  return pool;
}

void SyntheticParams::validate() const {
  if (n_synsets < 2 || n_images < 1 || annotator_pool < 2 || min_tags < 1 ||
      !(min_tags <= median_tags && median_tags <= max_tags) ||
      static_cast<std::size_t>(max_tags) > n_synsets || theme_radius < 0) {
    throw Error(ErrorCode::InvalidParams,
                "need n_synsets >= 2, n_images >= 1, annotator_pool >= 2, "
                "1 <= min <= median <= max <= n_synsets, theme_radius >= 0");
  }
}

namespace {

std::string synthetic_word(std::size_t i) {
  static constexpr const char* kSyllables[] = {"ba", "be", "bi", "bo", "bu", "ka", "ke",
                                               "ki", "ko", "ku", "ma", "me", "mi", "mo",
                                               "mu", "ra", "re", "ri", "ro", "ru"};
  constexpr std::size_t kBase = std::size(kSyllables);
  // consonant-vowel syllables decode uniquely, so distinct i give distinct words
  std::size_t x = i + kBase;
  std::string out;
  while (x > 0) {
    out.insert(0, kSyllables[x % kBase]);
    x /= kBase;
  }
  return out;
}

std::vector<int> tag_counts(const SyntheticParams& p, SeededRng& rng) {
  // Lower half from [min, median] peaking at median, upper half from
  // [median, max] peaking at median; each half carries the median value
  // and its extreme, which pins the sample median, min and max exactly.
  const auto n = p.n_images;
  const auto lower_n = n / 2;
  std::vector<int> lower, upper;
  for (std::size_t i = 0; i < lower_n; ++i) {
    lower.push_back(std::max(rng.between(p.min_tags, p.median_tags), rng.between(p.min_tags, p.median_tags)));
  }
  for (std::size_t i = lower_n; i < n; ++i) {
    upper.push_back(std::min(rng.between(p.median_tags, p.max_tags), rng.between(p.median_tags, p.max_tags)));
  }
  if (!lower.empty()) lower[0] = p.min_tags;
  if (lower.size() > 1) lower[1] = p.median_tags;
  if (!upper.empty()) upper[0] = p.median_tags;
  if (upper.size() > 1) upper[1] = p.max_tags;
  if (upper.size() == 1 && lower.empty()) upper[0] = p.median_tags;

  std::vector<int> counts(lower.begin(), lower.end());
  counts.insert(counts.end(), upper.begin(), upper.end());
  rng.shuffle(counts);
  return counts;
}

// Nearest multiple of 1/per_unit.
double quantize(double x, double per_unit) { return std::round(x * per_unit) / per_unit; }

}  // namespace

SyntheticData generate_synthetic(const SyntheticParams& p) {
  p.validate();
  SeededRng rng(p.seed);
  const auto n = p.n_synsets;

  std::vector<Synset> synsets(n);
  for (std::size_t i = 0; i < n; ++i) {
    synsets[i].id = SynsetId("n-" + std::to_string(i + 1));
    synsets[i].pos = PartOfSpeech::Noun;
    synsets[i].lemmas.push_back(synthetic_word(i));
    synsets[i].gloss = "synthetic concept " + std::to_string(i + 1);
  }

  std::vector<std::set<std::size_t>> linked(n);
  auto link = [&](std::size_t from, RelationType type, std::size_t to) {
    synsets[from].relations.push_back({type, synsets[to].id});
    synsets[to].relations.push_back({inverse(type), synsets[from].id});
    linked[from].insert(to);
    linked[to].insert(from);
  };

  // random recursive tree of hypernym links
  for (std::size_t i = 1; i < n; ++i) link(i, RelationType::Hypernym, rng.index(i));
  // sparse part-whole cross links
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.unit() >= 0.08) continue;
    const auto j = rng.index(n);
    if (j == i || linked[i].count(j)) continue;
    link(i, RelationType::Meronym, j);
  }
  // a few synonyms: some polysemous, some multiword
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.unit();
    const auto j = rng.index(n);
    if (j == i || u >= 0.15) continue;
    auto lemma = u < 0.05 ? synthetic_word(j) : synthetic_word(i) + "_" + synthetic_word(j);
    if (std::find(synsets[i].lemmas.begin(), synsets[i].lemmas.end(), lemma) == synsets[i].lemmas.end()) {
      synsets[i].lemmas.push_back(std::move(lemma));
    }
  }

  SyntheticData data;
  data.taxonomy = Taxonomy::from_synsets(std::move(synsets));
  const auto& tax = data.taxonomy;
  const auto& nodes = tax.synsets();

  std::vector<std::string> annotators;
  for (std::size_t a = 0; a < p.annotator_pool; ++a) {
    annotators.push_back("a" + std::string(a + 1 < 10 ? "0" : "") + std::to_string(a + 1));
  }

  const auto counts = tag_counts(p, rng);
  for (std::size_t img = 0; img < p.n_images; ++img) {
    const auto center = static_cast<std::uint32_t>(rng.index(n));
    std::vector<std::uint32_t> theme;
    for (const auto& [idx, d] : tax.bounded_bfs(center, p.theme_radius)) theme.push_back(idx);

    const auto want = static_cast<std::size_t>(counts[img]);
    std::set<std::uint32_t> chosen{center};
    rng.shuffle(theme);
    for (const auto idx : theme) {
      if (chosen.size() >= (want * 7 + 9) / 10) break;
      chosen.insert(idx);
    }
    while (chosen.size() < want) chosen.insert(static_cast<std::uint32_t>(rng.index(n)));

    std::vector<std::string> raters = annotators;
    rng.shuffle(raters);
    raters.resize(static_cast<std::size_t>(rng.between(2, std::min<int>(4, static_cast<int>(annotators.size())))));
    std::sort(raters.begin(), raters.end());

    const auto id = std::to_string(1000 + img);
    const EmotionRating emo{quantize(1.0 + 8.0 * rng.unit(), 100), quantize(1.0 + 8.0 * rng.unit(), 100),
                            quantize(1.0 + 8.0 * rng.unit(), 100)};
    data.corpus.add_image(id, "synthetic/" + id + ".jpg", nodes[center].lemmas.front(), emo);

    for (const auto idx : chosen) {
      const double importance = idx == center ? 1.0 : 0.2 + 0.8 * rng.unit();
      for (const auto& rater : raters) {
        const double noisy = importance + (rng.unit() - 0.5) * 0.3;
        const double weight = std::clamp(quantize(noisy, 20), 0.0, 1.0);
        data.corpus.annotate(tax, id, TagAssignment{rater, Sense{nodes[idx].id, nodes[idx].lemmas.front()}, weight});
      }
    }
  }
  return data;
}

Judgments rule_judgments(const Taxonomy& taxonomy, const Corpus& corpus,
                         const std::vector<BatchQuery>& queries, int radius) {
  if (radius < 0) throw Error(ErrorCode::InvalidParams, "radius must be >= 0");
  Judgments out;
  for (const auto& bq : queries) {
    Query q;
    try {
      q = parse_query(taxonomy, bq.text);
    } catch (const Error&) {
      continue;
    }
    const auto qs = q.synsets();
    const auto dist = distances_from(taxonomy, std::set<SynsetId>(qs.begin(), qs.end()), radius);
    for (const auto& [id, rec] : corpus.images()) {
      bool relevant = false;
      for (const auto& tag : rec.weighted_tags()) {
        if (dist[taxonomy.index_of(tag.sense.synset)] >= 0) {
          relevant = true;
          break;
        }
      }
      out.add({bq.id, id, relevant});
    }
  }
  return out;
}

}  // namespace wntags
