#include "wntags/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "text_util.hpp"
#include "wntags/error.hpp"

namespace wntags {

using ojson = nlohmann::ordered_json;

namespace {

void check_dimension(const char* name, double value) {
  if (!(value >= 1.0 && value <= 9.0)) {
    throw Error(ErrorCode::EmotionOutOfRange,
                std::string(name) + " = " + detail::format_exact(value) + " outside [1, 9]");
  }
}

}  // namespace

void EmotionRating::validate() const {
  check_dimension("valence", valence);
  check_dimension("arousal", arousal);
  check_dimension("dominance", dominance);
}

ImageRecord::ImageRecord(std::string id, std::string source_ref, std::string iaps_keyword,
                         EmotionRating emotion)
    : id_(std::move(id)),
      source_ref_(std::move(source_ref)),
      iaps_keyword_(std::move(iaps_keyword)),
      emotion_(emotion) {}

std::set<std::string> ImageRecord::annotators() const {
  std::set<std::string> out;
  for (const auto& a : assignments_) out.insert(a.annotator);
  return out;
}

bool ImageRecord::publishable() const noexcept {
  return distinct_senses() >= kPublishMinSenses && annotators().size() >= kPublishMinAnnotators;
}

WeightedTag ImageRecord::average_for(const SynsetId& synset) const {
  WeightedTag tag;
  double sum = 0.0;
  for (const auto& a : assignments_) {
    if (a.sense.synset != synset) continue;
    if (tag.rater_count == 0) tag.sense = a.sense;
    sum += a.weight;
    ++tag.rater_count;
  }
  tag.mean_weight = tag.rater_count ? sum / tag.rater_count : 0.0;
  return tag;
}

void ImageRecord::assign(TagAssignment assignment) {
  const auto synset = assignment.sense.synset;
  auto existing = std::find_if(assignments_.begin(), assignments_.end(), [&](const auto& a) {
    return a.annotator == assignment.annotator && a.sense.synset == synset;
  });
  if (existing != assignments_.end()) {
    *existing = std::move(assignment);
  } else {
    assignments_.push_back(std::move(assignment));
  }

  auto tag = average_for(synset);
  auto pos = std::lower_bound(weighted_tags_.begin(), weighted_tags_.end(), synset,
                              [](const WeightedTag& t, const SynsetId& id) { return t.sense.synset < id; });
  if (pos != weighted_tags_.end() && pos->sense.synset == synset) {
    *pos = std::move(tag);
  } else {
    weighted_tags_.insert(pos, std::move(tag));
  }
}

std::vector<WeightedTag> ImageRecord::recompute_weighted_tags() const {
  std::set<SynsetId> synsets;
  for (const auto& a : assignments_) synsets.insert(a.sense.synset);
  std::vector<WeightedTag> out;
  out.reserve(synsets.size());
  for (const auto& s : synsets) out.push_back(average_for(s));
  return out;
}

int weight_bin(std::optional<double> weight) noexcept {
  if (!weight) return 0;
  if (*weight <= 1.0 / 3.0) return 1;
  if (*weight <= 2.0 / 3.0) return 2;
  return 3;
}

double fleiss_kappa(const std::vector<std::vector<int>>& counts) {
  if (counts.empty()) throw Error(ErrorCode::InvalidParams, "kappa needs at least one subject");
  const auto categories = counts.front().size();
  const int raters = std::accumulate(counts.front().begin(), counts.front().end(), 0);
  if (raters < 2) throw Error(ErrorCode::InsufficientRaters, "kappa needs at least two raters");

  const double n = raters;
  const double subjects = static_cast<double>(counts.size());
  std::vector<double> category_totals(categories, 0.0);
  double observed = 0.0;
  for (const auto& row : counts) {
    if (row.size() != categories || std::accumulate(row.begin(), row.end(), 0) != raters) {
      throw Error(ErrorCode::InvalidParams, "every subject needs the same number of ratings");
    }
    double squares = 0.0;
    for (std::size_t j = 0; j < categories; ++j) {
      squares += static_cast<double>(row[j]) * row[j];
      category_totals[j] += row[j];
    }
    observed += (squares - n) / (n * (n - 1.0));
  }
  observed /= subjects;

  double expected = 0.0;
  for (const auto total : category_totals) {
    const double p = total / (subjects * n);
    expected += p * p;
  }
  if (expected >= 1.0) return 1.0;
  return (observed - expected) / (1.0 - expected);
}

const ImageRecord& Corpus::image(const std::string& id) const {
  const auto it = images_.find(id);
  if (it == images_.end()) throw Error(ErrorCode::UnknownImage, id);
  return it->second;
}

std::set<std::string> Corpus::keyword_vocabulary() const {
  std::set<std::string> out;
  for (const auto& [id, rec] : images_) out.insert(rec.iaps_keyword());
  return out;
}

const ImageRecord& Corpus::add_image(const std::string& id, const std::string& source_ref,
                                     const std::string& iaps_keyword,
                                     const EmotionRating& emotion) {
  if (id.empty()) throw Error(ErrorCode::BadRequest, "image id must be nonempty");
  if (images_.count(id)) throw Error(ErrorCode::DuplicateImage, id);
  emotion.validate();
  return images_.emplace(id, ImageRecord(id, source_ref, iaps_keyword, emotion)).first->second;
}

namespace {

void validate_assignment(const Taxonomy& taxonomy, TagAssignment& a) {
  if (a.annotator.empty()) throw Error(ErrorCode::InvalidAnnotator, "annotator id must be nonempty");
  if (!(a.weight >= 0.0 && a.weight <= 1.0)) {
    throw Error(ErrorCode::WeightOutOfRange,
                "weight " + detail::format_exact(a.weight) + " outside [0, 1]");
  }
  const auto& synset = taxonomy.synset(a.sense.synset);
  if (a.sense.lemma.empty()) {
    a.sense.lemma = synset.lemmas.front();
  } else if (std::find(synset.lemmas.begin(), synset.lemmas.end(), a.sense.lemma) ==
             synset.lemmas.end()) {
    throw Error(ErrorCode::LemmaNotInSynset, a.sense.lemma + " not in " + synset.id.str());
  }
}

}  // namespace

const std::vector<WeightedTag>& Corpus::annotate(const Taxonomy& taxonomy,
                                                 const std::string& image_id,
                                                 TagAssignment assignment) {
  const auto it = images_.find(image_id);
  if (it == images_.end()) throw Error(ErrorCode::UnknownImage, image_id);
  validate_assignment(taxonomy, assignment);
  it->second.assign(std::move(assignment));
  return it->second.weighted_tags();
}

const ImageRecord& Corpus::put(const Taxonomy& taxonomy, const ImageRecord& record) {
  record.emotion().validate();
  ImageRecord fresh(record.id(), record.source_ref(), record.iaps_keyword(), record.emotion());
  for (auto a : record.assignments()) {
    validate_assignment(taxonomy, a);
    fresh.assign(std::move(a));
  }
  return images_.insert_or_assign(record.id(), std::move(fresh)).first->second;
}

AgreementReport Corpus::agreement_kappa(const std::string& image_id) const {
  const auto& rec = image(image_id);
  const auto raters = rec.annotators();
  if (raters.size() < 2) {
    throw Error(ErrorCode::InsufficientRaters,
                image_id + " has " + std::to_string(raters.size()) + " annotator(s)");
  }

  AgreementReport report;
  report.raters = static_cast<int>(raters.size());
  std::vector<std::vector<int>> counts;
  for (const auto& tag : rec.weighted_tags()) {
    std::vector<int> row(4, 0);
    for (const auto& rater : raters) {
      std::optional<double> weight;
      for (const auto& a : rec.assignments()) {
        if (a.annotator == rater && a.sense.synset == tag.sense.synset) weight = a.weight;
      }
      ++row[static_cast<std::size_t>(weight_bin(weight))];
    }
    TagAgreement ta;
    ta.synset = tag.sense.synset;
    ta.bin_counts = row;
    ta.modal_share = static_cast<double>(*std::max_element(row.begin(), row.end())) / report.raters;
    ta.flagged = ta.modal_share < kModalShareFlag;
    report.tags.push_back(std::move(ta));
    counts.push_back(std::move(row));
  }
  report.kappa = fleiss_kappa(counts);
  report.low_agreement = report.kappa < kKappaWarning;
  return report;
}

TagCountStats describe_counts(std::vector<std::size_t> counts) {
  if (counts.empty()) throw Error(ErrorCode::EmptyCorpus, "no publishable images");
  std::sort(counts.begin(), counts.end());
  TagCountStats st;
  st.images = counts.size();
  st.min = counts.front();
  st.max = counts.back();
  const auto n = counts.size();
  st.median = n % 2 ? static_cast<double>(counts[n / 2])
                    : (static_cast<double>(counts[n / 2 - 1]) + static_cast<double>(counts[n / 2])) / 2.0;
  double sum = 0.0;
  for (const auto c : counts) sum += static_cast<double>(c);
  st.mean = sum / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (const auto c : counts) ss += (static_cast<double>(c) - st.mean) * (static_cast<double>(c) - st.mean);
    st.sd = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return st;
}

TagCountStats Corpus::tag_count_stats() const {
  if (images_.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no images");
  std::vector<std::size_t> counts;
  for (const auto& [id, rec] : images_) {
    if (rec.publishable()) counts.push_back(rec.distinct_senses());
  }
  return describe_counts(std::move(counts));
}

std::string record_to_json_line(const ImageRecord& record) {
  ojson j;
  j["id"] = record.id();
  j["source_ref"] = record.source_ref();
  j["iaps_keyword"] = record.iaps_keyword();
  j["emotion"] = {{"val", record.emotion().valence},
                  {"ar", record.emotion().arousal},
                  {"dom", record.emotion().dominance}};
  auto arr = ojson::array();
  for (const auto& a : record.assignments()) {
    arr.push_back({{"annotator", a.annotator},
                   {"synset", a.sense.synset.str()},
                   {"lemma", a.sense.lemma},
                   {"weight", a.weight}});
  }
  j["assignments"] = std::move(arr);
  return j.dump();
}

namespace {

ImageRecord record_from_json(const ojson& j) {
  const auto& emo = j.at("emotion");
  ImageRecord rec(j.at("id").get<std::string>(), j.value("source_ref", std::string{}),
                  j.value("iaps_keyword", std::string{}),
                  EmotionRating{emo.at("val").get<double>(), emo.at("ar").get<double>(),
                                emo.at("dom").get<double>()});
  if (!j.contains("assignments")) return rec;
  for (const auto& a : j.at("assignments")) {
    rec.assign(TagAssignment{a.at("annotator").get<std::string>(),
                             Sense{SynsetId(a.at("synset").get<std::string>()),
                                   a.value("lemma", std::string{})},
                             a.at("weight").get<double>()});
  }
  return rec;
}

}  // namespace

Corpus load_corpus(const Taxonomy& taxonomy, std::istream& in) {
  Corpus corpus;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (detail::trim(raw).empty()) continue;
    ImageRecord rec;
    try {
      rec = record_from_json(ojson::parse(raw));
    } catch (const ojson::exception& e) {
      throw Error(ErrorCode::FormatError, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.message());
    }
    try {
      corpus.put(taxonomy, rec);
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.message());
    }
  }
  return corpus;
}

Corpus load_corpus_file(const Taxonomy& taxonomy, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return load_corpus(taxonomy, in);
}

void save_corpus_file(const Corpus& corpus, const std::string& path) {
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp);
    for (const auto& [id, rec] : corpus.images()) out << record_to_json_line(rec) << '\n';
    if (!out.flush()) throw Error(ErrorCode::IoError, "write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw Error(ErrorCode::IoError, "cannot replace " + path);
  }
}

CorpusStore::CorpusStore(const Taxonomy& taxonomy, std::string path)
    : taxonomy_(&taxonomy), path_(std::move(path)) {
  std::ifstream probe(path_);
  current_ = std::make_shared<const Corpus>(probe ? load_corpus(taxonomy, probe) : Corpus{});
}

std::shared_ptr<const Corpus> CorpusStore::snapshot() const {
  std::shared_lock lock(snapshot_mutex_);
  return current_;
}

void CorpusStore::publish(std::shared_ptr<const Corpus> next) {
  std::unique_lock lock(snapshot_mutex_);
  current_ = std::move(next);
}

void CorpusStore::append(const ImageRecord& record) {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::IoError, "cannot append to " + path_);
  out << record_to_json_line(record) << '\n';
  if (!out.flush()) throw Error(ErrorCode::IoError, "append failed: " + path_);
}

ImageRecord CorpusStore::add_image(const std::string& id, const std::string& source_ref,
                                   const std::string& iaps_keyword,
                                   const EmotionRating& emotion) {
  std::lock_guard guard(writer_);
  auto next = std::make_shared<Corpus>(*snapshot());
  const auto rec = next->add_image(id, source_ref, iaps_keyword, emotion);
  append(rec);
  publish(std::move(next));
  return rec;
}

std::vector<WeightedTag> CorpusStore::annotate(const std::string& image_id,
                                               TagAssignment assignment) {
  std::lock_guard guard(writer_);
  auto next = std::make_shared<Corpus>(*snapshot());
  auto tags = next->annotate(*taxonomy_, image_id, std::move(assignment));
  append(next->image(image_id));
  publish(std::move(next));
  return tags;
}

void CorpusStore::compact() {
  std::lock_guard guard(writer_);
  save_corpus_file(*snapshot(), path_);
}

}  // namespace wntags
