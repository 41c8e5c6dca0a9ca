#include "wntags/service.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "text_util.hpp"

namespace wntags {

using ojson = nlohmann::ordered_json;

void EngineConfig::validate() const {
  namespace fs = std::filesystem;
  if (taxonomy_path.empty() || !fs::exists(taxonomy_path)) {
    throw Error(ErrorCode::InvalidConfig, "taxonomy_path '" + taxonomy_path + "' does not exist");
  }
  if (corpus_path.empty() || !fs::exists(corpus_path)) {
    throw Error(ErrorCode::InvalidConfig, "corpus_path '" + corpus_path + "' does not exist");
  }
  if (table_path && !fs::exists(*table_path)) {
    throw Error(ErrorCode::InvalidConfig, "table_path '" + *table_path + "' does not exist");
  }
  if (default_d_max < 0) throw Error(ErrorCode::InvalidConfig, "default_d_max must be >= 0");
}

EngineConfig parse_config(std::istream& in) {
  EngineConfig cfg;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = detail::trim(line.substr(0, eq));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key == "taxonomy_path") {
      cfg.taxonomy_path = value;
    } else if (key == "table_path") {
      if (value.empty()) {
        cfg.table_path.reset();
      } else {
        cfg.table_path = value;
      }
    } else if (key == "corpus_path") {
      cfg.corpus_path = value;
    } else if (key == "default_d_max") {
      if (!detail::parse_int(value, cfg.default_d_max)) {
        throw Error(ErrorCode::InvalidConfig, "default_d_max must be an integer");
      }
    } else if (key == "listen_address") {
      cfg.listen_address = value;
    } else if (key == "include_drafts") {
      if (value != "true" && value != "false") {
        throw Error(ErrorCode::InvalidConfig, "include_drafts must be true or false");
      }
      cfg.include_drafts = value == "true";
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown key '" + std::string(key) + "'");
    }
  }
  return cfg;
}

EngineConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config " + path);
  return parse_config(in);
}

EngineConfig config_from_env() {
  const char* path = std::getenv("WNTAGS_CONFIG");
  if (!path || !*path) throw Error(ErrorCode::InvalidConfig, "WNTAGS_CONFIG is not set");
  return load_config_file(path);
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadRequest:
    case ErrorCode::EmptyQuery:
    case ErrorCode::InvalidRange:
    case ErrorCode::InvalidParams:
    case ErrorCode::InvalidSynsetId:
    case ErrorCode::SyntaxError:
    case ErrorCode::FormatError:
      return 400;
    case ErrorCode::UnknownImage:
    case ErrorCode::UnknownSynset:
    case ErrorCode::RouteNotFound:
      return 404;
    case ErrorCode::MethodNotAllowed:
      return 405;
    case ErrorCode::DuplicateImage:
      return 409;
    case ErrorCode::WeightOutOfRange:
    case ErrorCode::EmotionOutOfRange:
    case ErrorCode::LemmaNotInSynset:
    case ErrorCode::InvalidAnnotator:
    case ErrorCode::InsufficientRaters:
    case ErrorCode::NoSenseFound:
    case ErrorCode::EmptyCorpus:
    case ErrorCode::NotEnoughCandidates:
      return 422;
    case ErrorCode::StaleTable:
      return 503;
    case ErrorCode::DanglingEdge:
    case ErrorCode::AsymmetricEdge:
    case ErrorCode::DuplicateSynset:
    case ErrorCode::IoError:
    case ErrorCode::BuildFailure:
    case ErrorCode::InvalidConfig:
    case ErrorCode::Internal:
      return 500;
  }
  return 500;
}

namespace json_codec {

double wire(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return std::strtod(buf, nullptr);
}

ojson error(const Error& e) {
  return {{"error", std::string(to_string(e.code()))}, {"message", e.message()}};
}

ojson synset(const Synset& s) {
  static constexpr const char* kPos[] = {"noun", "verb", "adjective", "adverb"};
  ojson rel = ojson::array();
  for (const auto& r : s.relations) {
    rel.push_back({{"type", std::string(relation_tag(r.type))}, {"target", r.target.str()}});
  }
  return {{"id", s.id.str()},
          {"pos", kPos[static_cast<int>(s.pos)]},
          {"lemmas", s.lemmas},
          {"relations", std::move(rel)},
          {"gloss", s.gloss}};
}

ojson weighted_tags(const std::vector<WeightedTag>& tags) {
  ojson arr = ojson::array();
  for (const auto& t : tags) {
    arr.push_back({{"synset", t.sense.synset.str()},
                   {"lemma", t.sense.lemma},
                   {"mean_weight", wire(t.mean_weight)},
                   {"rater_count", t.rater_count}});
  }
  return arr;
}

ojson image(const ImageRecord& rec) {
  ojson assignments = ojson::array();
  for (const auto& a : rec.assignments()) {
    assignments.push_back({{"annotator", a.annotator},
                           {"synset", a.sense.synset.str()},
                           {"lemma", a.sense.lemma},
                           {"weight", wire(a.weight)}});
  }
  return {{"id", rec.id()},
          {"source_ref", rec.source_ref()},
          {"iaps_keyword", rec.iaps_keyword()},
          {"emotion",
           {{"val", wire(rec.emotion().valence)},
            {"ar", wire(rec.emotion().arousal)},
            {"dom", wire(rec.emotion().dominance)}}},
          {"assignments", std::move(assignments)},
          {"weighted_tags", weighted_tags(rec.weighted_tags())},
          {"publishable", rec.publishable()}};
}

ojson result(const RankedResult& r) {
  ojson contributions = ojson::array();
  for (const auto& c : r.contributions) {
    contributions.push_back({{"query_synset", c.query_synset.str()},
                             {"image_synset", c.image_synset.str()},
                             {"mean_weight", wire(c.mean_weight)},
                             {"sim", wire(c.sim)}});
  }
  return {{"image_id", r.image_id},
          {"raw_score", wire(r.raw_score)},
          {"relevance", wire(r.relevance)},
          {"contributions", std::move(contributions)}};
}

ojson results(const std::vector<RankedResult>& rs) {
  ojson arr = ojson::array();
  for (const auto& r : rs) arr.push_back(result(r));
  return arr;
}

ojson agreement(const AgreementReport& report) {
  ojson tags = ojson::array();
  for (const auto& t : report.tags) {
    tags.push_back({{"synset", t.synset.str()},
                    {"bins", {{"absent", t.bin_counts[0]},
                              {"low", t.bin_counts[1]},
                              {"mid", t.bin_counts[2]},
                              {"high", t.bin_counts[3]}}},
                    {"modal_share", wire(t.modal_share)},
                    {"flagged", t.flagged}});
  }
  return {{"kappa", wire(report.kappa)},
          {"low_agreement", report.low_agreement},
          {"raters", report.raters},
          {"tags", std::move(tags)}};
}

ojson stats(const TagCountStats& st) {
  return {{"images", st.images},      {"median", wire(st.median)}, {"mean", wire(st.mean)},
          {"sd", wire(st.sd)},        {"min", st.min},             {"max", st.max}};
}

ojson eval_summary(const EvalReport& report) {
  ojson per_query = ojson::array();
  for (const auto& q : report.per_query) {
    per_query.push_back({{"query_id", q.query_id},
                         {"results", q.ranked_ids.size()},
                         {"tp_count", q.tp_count},
                         {"precision", wire(q.precision)}});
  }
  ojson failures = ojson::array();
  for (const auto& f : report.failures) {
    failures.push_back({{"query_id", f.query_id},
                        {"error", std::string(to_string(f.code))},
                        {"message", f.message}});
  }
  ojson precision_at_rank = ojson::array();
  for (const auto p : report.aggregate.precision_at_rank) precision_at_rank.push_back(wire(p));
  return {{"queries", report.per_query.size()},
          {"avg_precision", wire(report.aggregate.avg_precision)},
          {"avg_tp", wire(report.aggregate.avg_tp)},
          {"max_tp", report.aggregate.max_tp},
          {"precision_at_rank", std::move(precision_at_rank)},
          {"per_query", std::move(per_query)},
          {"failures", std::move(failures)},
          {"warnings", report.warnings.size()}};
}

}  // namespace json_codec

namespace {

// Pins the table a relatedness view was built from.
class TableBacked final : public RelatednessSource {
 public:
  TableBacked(std::shared_ptr<const SimilarityTable> table, const Taxonomy& taxonomy)
      : table_(std::move(table)), inner_(*table_, taxonomy) {}

  double relatedness(const SynsetId& a, const SynsetId& b, int max_distance) const override {
    return inner_.relatedness(a, b, max_distance);
  }
  RelatednessRow row(const SynsetId& source, int max_distance) const override {
    return inner_.row(source, max_distance);
  }

 private:
  std::shared_ptr<const SimilarityTable> table_;
  TableRelatedness inner_;
};

}  // namespace

Engine::Engine(const EngineConfig& config) : config_(config) {
  config_.validate();
  taxonomy_ = load_taxonomy_file(config_.taxonomy_path);
  if (config_.table_path) {
    table_ = std::make_shared<const SimilarityTable>(load_table(*config_.table_path));
    relatedness_ = std::make_shared<const TableBacked>(table_, taxonomy_);  // StaleTable
  } else {
    relatedness_ = std::make_shared<const PathRelatedness>(taxonomy_);
  }
  corpus_ = std::make_unique<CorpusStore>(taxonomy_, config_.corpus_path);
}

std::shared_ptr<const RelatednessSource> Engine::relatedness() const {
  std::lock_guard lock(table_mutex_);
  return relatedness_;
}

bool Engine::has_table() const {
  std::lock_guard lock(table_mutex_);
  return table_ != nullptr;
}

std::shared_ptr<const SimilarityTable> Engine::rebuild_table(std::optional<int> d_max) {
  auto table = std::make_shared<const SimilarityTable>(
      build_table(taxonomy_, d_max.value_or(config_.default_d_max)));
  if (config_.table_path) save_table(*table, *config_.table_path);
  auto source = std::make_shared<const TableBacked>(table, taxonomy_);
  std::lock_guard lock(table_mutex_);
  table_ = table;
  relatedness_ = std::move(source);
  return table;
}

}  // namespace wntags
