#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wntags {

// Identifier of a synset, `<pos letter>-<digits>` (e.g. "n-3").
// Ordered lexicographically; that order is the canonical pair order.
class SynsetId {
 public:
  SynsetId() = default;
  explicit SynsetId(std::string value);

  static bool is_valid(std::string_view text) noexcept;

  const std::string& str() const noexcept { return value_; }
  char pos_letter() const noexcept { return value_.empty() ? '\0' : value_.front(); }

  friend auto operator<=>(const SynsetId&, const SynsetId&) = default;
  friend bool operator==(const SynsetId&, const SynsetId&) = default;

 private:
  std::string value_;
};

enum class PartOfSpeech { Noun, Verb, Adjective, Adverb };
enum class RelationType { Hypernym, Hyponym, Holonym, Meronym };

char pos_letter(PartOfSpeech pos) noexcept;
std::string_view relation_tag(RelationType rel) noexcept;  // hyp, hpo, hol, mer
RelationType inverse(RelationType rel) noexcept;

struct Relation {
  RelationType type;
  SynsetId target;

  friend auto operator<=>(const Relation&, const Relation&) = default;
  friend bool operator==(const Relation&, const Relation&) = default;
};

struct Synset {
  SynsetId id;
  PartOfSpeech pos = PartOfSpeech::Noun;
  std::vector<std::string> lemmas;
  std::vector<Relation> relations;  // sorted by (type, target)
  std::string gloss;

  friend bool operator==(const Synset&, const Synset&) = default;
};

struct Sense {
  SynsetId synset;
  std::string lemma;

  friend auto operator<=>(const Sense&, const Sense&) = default;
  friend bool operator==(const Sense&, const Sense&) = default;
};

}  // namespace wntags

template <>
struct std::hash<wntags::SynsetId> {
  std::size_t operator()(const wntags::SynsetId& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};

namespace wntags {

// Immutable lexical taxonomy. Build it with load_taxonomy() or from_synsets();
// all queries are const and safe for concurrent readers.
class Taxonomy {
 public:
  Taxonomy() = default;

  // Validates ids, lemmas, dangling and asymmetric edges.
  static Taxonomy from_synsets(std::vector<Synset> synsets);

  std::size_t size() const noexcept { return synsets_.size(); }
  bool empty() const noexcept { return synsets_.empty(); }
  bool contains(const SynsetId& id) const noexcept { return index_.count(id) != 0; }

  // Synsets in ascending id order.
  const std::vector<Synset>& synsets() const noexcept { return synsets_; }
  const Synset& synset(const SynsetId& id) const;  // throws UnknownSynset

  const std::set<SynsetId>& lookup_lemma(const std::string& lemma) const noexcept;
  const std::map<std::string, std::set<SynsetId>>& lemma_index() const noexcept {
    return lemma_index_;
  }
  std::vector<std::string> lemmas_with_prefix(std::string_view prefix, std::size_t limit) const;

  // Shortest undirected hop count over all relation types, or nullopt when
  // it exceeds max_distance.
  std::optional<int> node_distance(const SynsetId& a, const SynsetId& b, int max_distance) const;

  // Every synset within `radius` hops of `source`, source included.
  std::set<SynsetId> neighborhood(const SynsetId& source, int radius) const;

  // Hop counts from `source` to every synset reachable within max_distance.
  // Entries are (dense index, distance) in BFS order.
  std::vector<std::pair<std::uint32_t, int>> bounded_bfs(std::uint32_t source,
                                                         int max_distance) const;

  // Dense index of a synset; equals its position in synsets().
  std::uint32_t index_of(const SynsetId& id) const;  // throws UnknownSynset
  const std::vector<std::uint32_t>& neighbors(std::uint32_t index) const {
    return adjacency_.at(index);
  }

  // Canonical text form in the taxonomy file format.
  std::string serialize() const;

  // Hex FNV-1a 64 over serialize(); guards precomputed tables against drift.
  const std::string& digest() const noexcept { return digest_; }

  friend bool operator==(const Taxonomy& a, const Taxonomy& b) {
    return a.synsets_ == b.synsets_;
  }

 private:
  std::vector<Synset> synsets_;
  std::unordered_map<SynsetId, std::uint32_t> index_;
  std::vector<std::vector<std::uint32_t>> adjacency_;
  std::map<std::string, std::set<SynsetId>> lemma_index_;
  std::string digest_;
};

// Parses the tab-separated taxonomy format:
//   <id> TAB <n|v|a|r> TAB <lemma[|lemma...]> TAB <rel:target[;...]|-> TAB <gloss|->
// Lines starting with '#' and blank lines are skipped.
Taxonomy load_taxonomy(std::istream& in);
Taxonomy load_taxonomy_file(const std::string& path);
void save_taxonomy_file(const Taxonomy& taxonomy, const std::string& path);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace wntags
