#pragma once

#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "wntags/error.hpp"
#include "wntags/taxonomy.hpp"

namespace wntags {

// Maps a node distance to a relatedness value in [0, 1]. Must return 1 for
// distance 0 and be strictly decreasing.
using DistanceMetric = std::function<double(int distance)>;

inline double path_similarity(int distance) { return 1.0 / (1.0 + distance); }

// Relatedness of two synsets: metric(distance) when distance <= max_distance,
// otherwise 0.
double sim(const Taxonomy& taxonomy, const SynsetId& a, const SynsetId& b, int max_distance,
           const DistanceMetric& metric = path_similarity);

// Nonzero relatedness from one source synset, keyed by partner (source
// itself maps to 1).
using RelatednessRow = std::unordered_map<SynsetId, double>;

class RelatednessSource {
 public:
  virtual ~RelatednessSource() = default;

  virtual double relatedness(const SynsetId& a, const SynsetId& b, int max_distance) const = 0;
  virtual RelatednessRow row(const SynsetId& source, int max_distance) const = 0;
};

// Computes relatedness by bounded BFS on every call.
class PathRelatedness final : public RelatednessSource {
 public:
  explicit PathRelatedness(const Taxonomy& taxonomy, DistanceMetric metric = path_similarity)
      : taxonomy_(&taxonomy), metric_(std::move(metric)) {}

  double relatedness(const SynsetId& a, const SynsetId& b, int max_distance) const override;
  RelatednessRow row(const SynsetId& source, int max_distance) const override;

 private:
  const Taxonomy* taxonomy_;
  DistanceMetric metric_;
};

struct TableEntry {
  SynsetId first;   // first < second
  SynsetId second;
  double value;

  friend bool operator==(const TableEntry&, const TableEntry&) = default;
};

// Sparse all-pairs relatedness for one taxonomy. Only distinct pairs with
// nonzero value are stored; absent pairs read as 0 and self pairs as 1.
class SimilarityTable {
 public:
  SimilarityTable() = default;
  SimilarityTable(int max_distance, std::string taxonomy_digest, std::vector<TableEntry> entries);

  int max_distance() const noexcept { return max_distance_; }
  const std::string& taxonomy_digest() const noexcept { return digest_; }
  const std::vector<TableEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  double lookup(const SynsetId& a, const SynsetId& b) const;
  const std::vector<std::pair<SynsetId, double>>& partners(const SynsetId& id) const;

  // Throws StaleTable unless built from exactly this taxonomy.
  void ensure_matches(const Taxonomy& taxonomy) const;

  friend bool operator==(const SimilarityTable& a, const SimilarityTable& b) {
    return a.max_distance_ == b.max_distance_ && a.digest_ == b.digest_ && a.entries_ == b.entries_;
  }

 private:
  static std::string key(const SynsetId& a, const SynsetId& b);

  int max_distance_ = 0;
  std::string digest_;
  std::vector<TableEntry> entries_;  // sorted by (first, second)
  std::unordered_map<std::string, double> values_;
  std::unordered_map<SynsetId, std::vector<std::pair<SynsetId, double>>> partners_;
};

// One bounded BFS per source synset; sources are split across `threads`
// workers and merged in id order, so the output does not depend on threads.
SimilarityTable build_table(const Taxonomy& taxonomy, int max_distance,
                            const DistanceMetric& metric = path_similarity,
                            unsigned threads = 0);

// `tab` must have been checked against the active taxonomy.
double table_lookup(const SimilarityTable& tab, const SynsetId& a, const SynsetId& b);

// Table file: header `#wntags-sim v1 d_max=<int> digest=<hex>`, one
// `<id1> TAB <id2> TAB <value>` line per pair, then `#end entries=<n>`.
void write_table(const SimilarityTable& tab, std::ostream& out);
SimilarityTable read_table(std::istream& in);
void save_table(const SimilarityTable& tab, const std::string& path);
SimilarityTable load_table(const std::string& path);

// Serves lookups from a table; falls back to BFS when a query asks for a
// larger radius than the table was built with. Throws StaleTable on digest
// mismatch.
class TableRelatedness final : public RelatednessSource {
 public:
  TableRelatedness(const SimilarityTable& table, const Taxonomy& taxonomy,
                   DistanceMetric metric = path_similarity);

  double relatedness(const SynsetId& a, const SynsetId& b, int max_distance) const override;
  RelatednessRow row(const SynsetId& source, int max_distance) const override;

 private:
  const SimilarityTable* table_;
  const Taxonomy* taxonomy_;
  PathRelatedness fallback_;
  DistanceMetric metric_;
};

}  // namespace wntags
