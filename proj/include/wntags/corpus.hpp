#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "wntags/error.hpp"
#include "wntags/taxonomy.hpp"

namespace wntags {

// Valence, arousal and dominance, each on the normative [1, 9] scale.
struct EmotionRating {
  double valence = 5.0;
  double arousal = 5.0;
  double dominance = 5.0;

  void validate() const;  // throws EmotionOutOfRange

  friend bool operator==(const EmotionRating&, const EmotionRating&) = default;
};

struct TagAssignment {
  std::string annotator;
  Sense sense;
  double weight = 0.0;

  friend bool operator==(const TagAssignment&, const TagAssignment&) = default;
};

struct WeightedTag {
  Sense sense;
  double mean_weight = 0.0;
  int rater_count = 0;

  friend bool operator==(const WeightedTag&, const WeightedTag&) = default;
};

inline constexpr std::size_t kPublishMinSenses = 3;
inline constexpr std::size_t kPublishMinAnnotators = 2;

class ImageRecord {
 public:
  ImageRecord() = default;
  ImageRecord(std::string id, std::string source_ref, std::string iaps_keyword,
              EmotionRating emotion);

  const std::string& id() const noexcept { return id_; }
  const std::string& source_ref() const noexcept { return source_ref_; }
  const std::string& iaps_keyword() const noexcept { return iaps_keyword_; }
  const EmotionRating& emotion() const noexcept { return emotion_; }
  const std::vector<TagAssignment>& assignments() const noexcept { return assignments_; }

  // One entry per tagged synset, ascending by synset id.
  const std::vector<WeightedTag>& weighted_tags() const noexcept { return weighted_tags_; }

  std::set<std::string> annotators() const;
  std::size_t distinct_senses() const noexcept { return weighted_tags_.size(); }
  bool publishable() const noexcept;

  // Records or replaces (annotator, synset). Only the touched synset's mean
  // is recomputed.
  void assign(TagAssignment assignment);

  // Full recomputation; always equal to the incrementally maintained list.
  std::vector<WeightedTag> recompute_weighted_tags() const;

  friend bool operator==(const ImageRecord& a, const ImageRecord& b) {
    return a.id_ == b.id_ && a.source_ref_ == b.source_ref_ &&
           a.iaps_keyword_ == b.iaps_keyword_ && a.emotion_ == b.emotion_ &&
           a.assignments_ == b.assignments_ && a.weighted_tags_ == b.weighted_tags_;
  }

 private:
  WeightedTag average_for(const SynsetId& synset) const;

  std::string id_;
  std::string source_ref_;
  std::string iaps_keyword_;
  EmotionRating emotion_;
  std::vector<TagAssignment> assignments_;
  std::vector<WeightedTag> weighted_tags_;
};

struct TagCountStats {
  double median = 0;
  double mean = 0;
  double sd = 0;  // sample (n - 1) standard deviation
  std::size_t min = 0;
  std::size_t max = 0;
  std::size_t images = 0;
};

struct TagAgreement {
  SynsetId synset;
  std::vector<int> bin_counts;  // absent, low, mid, high
  double modal_share = 0;
  bool flagged = false;
};

struct AgreementReport {
  double kappa = 0;
  bool low_agreement = false;  // kappa below kKappaWarning
  int raters = 0;
  std::vector<TagAgreement> tags;
};

inline constexpr double kKappaWarning = 0.4;
inline constexpr double kModalShareFlag = 0.5;

// Weight bin used for agreement: 0 absent, 1 low [0, 1/3], 2 mid (1/3, 2/3],
// 3 high (2/3, 1].
int weight_bin(std::optional<double> weight) noexcept;

// Fleiss' kappa over a subjects x categories count matrix with a constant
// number of raters per subject. When expected agreement is 1 every rating
// fell into one category and kappa is 1.
double fleiss_kappa(const std::vector<std::vector<int>>& counts);

class Corpus {
 public:
  const std::map<std::string, ImageRecord>& images() const noexcept { return images_; }
  std::size_t size() const noexcept { return images_.size(); }
  const ImageRecord& image(const std::string& id) const;  // throws UnknownImage
  bool contains(const std::string& id) const noexcept { return images_.count(id) != 0; }

  // Distinct iaps keywords across all records.
  std::set<std::string> keyword_vocabulary() const;

  const ImageRecord& add_image(const std::string& id, const std::string& source_ref,
                               const std::string& iaps_keyword, const EmotionRating& emotion);

  // Validates the assignment against `taxonomy`; an empty lemma defaults to
  // the synset's first lemma.
  const std::vector<WeightedTag>& annotate(const Taxonomy& taxonomy, const std::string& image_id,
                                           TagAssignment assignment);

  // Inserts or replaces a whole record, re-validating every assignment.
  const ImageRecord& put(const Taxonomy& taxonomy, const ImageRecord& record);

  AgreementReport agreement_kappa(const std::string& image_id) const;

  TagCountStats tag_count_stats() const;  // publishable images only

  friend bool operator==(const Corpus&, const Corpus&) = default;

 private:
  std::map<std::string, ImageRecord> images_;
};

TagCountStats describe_counts(std::vector<std::size_t> counts);

// JSON Lines, one record per line. Derived fields are not written. A later
// line for an id already seen replaces the earlier record (journal replay).
std::string record_to_json_line(const ImageRecord& record);
Corpus load_corpus(const Taxonomy& taxonomy, std::istream& in);
Corpus load_corpus_file(const Taxonomy& taxonomy, const std::string& path);
void save_corpus_file(const Corpus& corpus, const std::string& path);

// File-backed corpus with one writer and lock-free-for-readers snapshots.
// Each mutation is applied to a copy, appended to the journal and flushed,
// and only then published.
class CorpusStore {
 public:
  CorpusStore(const Taxonomy& taxonomy, std::string path);

  std::shared_ptr<const Corpus> snapshot() const;

  ImageRecord add_image(const std::string& id, const std::string& source_ref,
                        const std::string& iaps_keyword, const EmotionRating& emotion);
  std::vector<WeightedTag> annotate(const std::string& image_id, TagAssignment assignment);

  // Rewrites the journal with one line per record.
  void compact();

 private:
  void append(const ImageRecord& record);
  void publish(std::shared_ptr<const Corpus> next);

  const Taxonomy* taxonomy_;
  std::string path_;
  std::mutex writer_;
  mutable std::shared_mutex snapshot_mutex_;
  std::shared_ptr<const Corpus> current_;
};

}  // namespace wntags
