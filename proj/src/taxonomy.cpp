#include "wntags/taxonomy.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include "text_util.hpp"
#include "wntags/error.hpp"

namespace wntags {

namespace {

std::optional<PartOfSpeech> pos_from_letter(char c) {
  switch (c) {
    case 'n': return PartOfSpeech::Noun;
    case 'v': return PartOfSpeech::Verb;
    case 'a': return PartOfSpeech::Adjective;
    case 'r': return PartOfSpeech::Adverb;
    default: return std::nullopt;
  }
}

std::optional<RelationType> relation_from_tag(std::string_view tag) {
  if (tag == "hyp") return RelationType::Hypernym;
  if (tag == "hpo") return RelationType::Hyponym;
  if (tag == "hol") return RelationType::Holonym;
  if (tag == "mer") return RelationType::Meronym;
  return std::nullopt;
}

bool is_valid_lemma(std::string_view lemma) {
  if (lemma.empty()) return false;
  return std::none_of(lemma.begin(), lemma.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '|' || c == '\r' || c == '\n' || (c >= 'A' && c <= 'Z');
  });
}

[[noreturn]] void syntax_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

SynsetId::SynsetId(std::string value) : value_(std::move(value)) {
  if (!is_valid(value_)) {
    throw Error(ErrorCode::InvalidSynsetId, "'" + value_ + "' does not match [nvar]-[0-9]+");
  }
}

bool SynsetId::is_valid(std::string_view text) noexcept {
  if (text.size() < 3) return false;
  if (!pos_from_letter(text[0]) || text[1] != '-') return false;
  return std::all_of(text.begin() + 2, text.end(), [](char c) { return c >= '0' && c <= '9'; });
}

char pos_letter(PartOfSpeech pos) noexcept {
  switch (pos) {
    case PartOfSpeech::Noun: return 'n';
    case PartOfSpeech::Verb: return 'v';
    case PartOfSpeech::Adjective: return 'a';
    case PartOfSpeech::Adverb: return 'r';
  }
  return '?';
}

std::string_view relation_tag(RelationType rel) noexcept {
  switch (rel) {
    case RelationType::Hypernym: return "hyp";
    case RelationType::Hyponym: return "hpo";
    case RelationType::Holonym: return "hol";
    case RelationType::Meronym: return "mer";
  }
  return "?";
}

RelationType inverse(RelationType rel) noexcept {
  switch (rel) {
    case RelationType::Hypernym: return RelationType::Hyponym;
    case RelationType::Hyponym: return RelationType::Hypernym;
    case RelationType::Holonym: return RelationType::Meronym;
    case RelationType::Meronym: return RelationType::Holonym;
  }
  return rel;
}

Taxonomy Taxonomy::from_synsets(std::vector<Synset> synsets) {
  std::sort(synsets.begin(), synsets.end(),
            [](const Synset& a, const Synset& b) { return a.id < b.id; });

  Taxonomy t;
  t.index_.reserve(synsets.size());
  for (std::uint32_t i = 0; i < synsets.size(); ++i) {
    auto& s = synsets[i];
    if (!SynsetId::is_valid(s.id.str())) {
      throw Error(ErrorCode::InvalidSynsetId, s.id.str());
    }
    if (s.id.pos_letter() != pos_letter(s.pos)) {
      throw Error(ErrorCode::SyntaxError, s.id.str() + ": id prefix does not match part of speech");
    }
    if (s.lemmas.empty()) {
      throw Error(ErrorCode::SyntaxError, s.id.str() + ": no lemmas");
    }
    for (std::size_t j = 0; j < s.lemmas.size(); ++j) {
      if (!is_valid_lemma(s.lemmas[j])) {
        throw Error(ErrorCode::SyntaxError, s.id.str() + ": bad lemma '" + s.lemmas[j] + "'");
      }
      if (std::find(s.lemmas.begin(), s.lemmas.begin() + static_cast<std::ptrdiff_t>(j),
                    s.lemmas[j]) != s.lemmas.begin() + static_cast<std::ptrdiff_t>(j)) {
        throw Error(ErrorCode::SyntaxError, s.id.str() + ": duplicate lemma '" + s.lemmas[j] + "'");
      }
    }
    std::sort(s.relations.begin(), s.relations.end());
    if (std::adjacent_find(s.relations.begin(), s.relations.end()) != s.relations.end()) {
      throw Error(ErrorCode::SyntaxError, s.id.str() + ": duplicate relation");
    }
    for (const auto& r : s.relations) {
      if (r.target == s.id) {
        throw Error(ErrorCode::SyntaxError, s.id.str() + ": relation points to itself");
      }
    }
    if (!t.index_.emplace(s.id, i).second) {
      throw Error(ErrorCode::DuplicateSynset, s.id.str());
    }
  }

  t.adjacency_.resize(synsets.size());
  for (std::uint32_t i = 0; i < synsets.size(); ++i) {
    const auto& s = synsets[i];
    for (const auto& r : s.relations) {
      const auto it = t.index_.find(r.target);
      if (it == t.index_.end()) {
        throw Error(ErrorCode::DanglingEdge, s.id.str() + " -> " + r.target.str());
      }
      const auto& back = synsets[it->second].relations;
      const Relation expected{inverse(r.type), s.id};
      if (!std::binary_search(back.begin(), back.end(), expected)) {
        throw Error(ErrorCode::AsymmetricEdge,
                    s.id.str() + " " + std::string(relation_tag(r.type)) + " " + r.target.str() +
                        " has no " + std::string(relation_tag(expected.type)) + " inverse");
      }
      t.adjacency_[i].push_back(it->second);
    }
    auto& adj = t.adjacency_[i];
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
  }

  for (const auto& s : synsets) {
    for (const auto& lemma : s.lemmas) t.lemma_index_[lemma].insert(s.id);
  }
  t.synsets_ = std::move(synsets);
  t.digest_ = fnv1a_hex(t.serialize());
  return t;
}

const Synset& Taxonomy::synset(const SynsetId& id) const { return synsets_[index_of(id)]; }

std::uint32_t Taxonomy::index_of(const SynsetId& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::UnknownSynset, id.str());
  return it->second;
}

const std::set<SynsetId>& Taxonomy::lookup_lemma(const std::string& lemma) const noexcept {
  static const std::set<SynsetId> kEmpty;
  const auto it = lemma_index_.find(lemma);
  return it == lemma_index_.end() ? kEmpty : it->second;
}

std::vector<std::string> Taxonomy::lemmas_with_prefix(std::string_view prefix,
                                                      std::size_t limit) const {
  std::vector<std::string> out;
  for (auto it = lemma_index_.lower_bound(std::string(prefix));
       it != lemma_index_.end() && out.size() < limit; ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.push_back(it->first);
  }
  return out;
}

std::vector<std::pair<std::uint32_t, int>> Taxonomy::bounded_bfs(std::uint32_t source,
                                                                 int max_distance) const {
  std::vector<std::pair<std::uint32_t, int>> reached;
  if (source >= synsets_.size() || max_distance < 0) return reached;
  std::vector<int> dist(synsets_.size(), -1);
  dist[source] = 0;
  reached.emplace_back(source, 0);
  // reached doubles as the FIFO queue
  for (std::size_t head = 0; head < reached.size(); ++head) {
    const auto [u, du] = reached[head];
    if (du == max_distance) continue;
    for (const auto v : adjacency_[u]) {
      if (dist[v] < 0) {
        dist[v] = du + 1;
        reached.emplace_back(v, du + 1);
      }
    }
  }
  return reached;
}

std::optional<int> Taxonomy::node_distance(const SynsetId& a, const SynsetId& b,
                                           int max_distance) const {
  const auto ia = index_of(a);
  const auto ib = index_of(b);
  if (max_distance < 0) return std::nullopt;
  if (ia == ib) return 0;

  std::vector<int> dist(synsets_.size(), -1);
  std::deque<std::uint32_t> queue{ia};
  dist[ia] = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    if (dist[u] == max_distance) continue;
    for (const auto v : adjacency_[u]) {
      if (dist[v] >= 0) continue;
      dist[v] = dist[u] + 1;
      if (v == ib) return dist[v];
      queue.push_back(v);
    }
  }
  return std::nullopt;
}

std::set<SynsetId> Taxonomy::neighborhood(const SynsetId& source, int radius) const {
  std::set<SynsetId> out;
  for (const auto& [idx, d] : bounded_bfs(index_of(source), radius)) {
    out.insert(synsets_[idx].id);
  }
  return out;
}

std::string Taxonomy::serialize() const {
  std::string out;
  for (const auto& s : synsets_) {
    out += s.id.str();
    out += '\t';
    out += pos_letter(s.pos);
    out += '\t';
    for (std::size_t i = 0; i < s.lemmas.size(); ++i) {
      if (i) out += '|';
      out += s.lemmas[i];
    }
    out += '\t';
    if (s.relations.empty()) out += '-';
    for (std::size_t i = 0; i < s.relations.size(); ++i) {
      if (i) out += ';';
      out += relation_tag(s.relations[i].type);
      out += ':';
      out += s.relations[i].target.str();
    }
    out += '\t';
    out += s.gloss.empty() ? "-" : s.gloss;
    out += '\n';
  }
  return out;
}

Taxonomy load_taxonomy(std::istream& in) {
  std::vector<Synset> synsets;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::trim(line).empty() || line.front() == '#') continue;

    const auto fields = detail::split(line, '\t');
    if (fields.size() != 5) syntax_error(line_no, "expected 5 tab-separated fields");

    Synset s;
    if (!SynsetId::is_valid(fields[0])) syntax_error(line_no, "bad synset id");
    s.id = SynsetId(std::string(fields[0]));

    if (fields[1].size() != 1) syntax_error(line_no, "bad part of speech");
    const auto pos = pos_from_letter(fields[1][0]);
    if (!pos) syntax_error(line_no, "bad part of speech");
    if (*pos_from_letter(s.id.pos_letter()) != *pos) {
      syntax_error(line_no, "id prefix does not match part of speech");
    }
    s.pos = *pos;

    if (fields[2] == "-") syntax_error(line_no, "a synset needs at least one lemma");
    for (const auto lemma : detail::split(fields[2], '|')) {
      if (!is_valid_lemma(lemma)) syntax_error(line_no, "bad lemma");
      if (std::find(s.lemmas.begin(), s.lemmas.end(), lemma) != s.lemmas.end()) {
        syntax_error(line_no, "duplicate lemma");
      }
      s.lemmas.emplace_back(lemma);
    }

    if (fields[3] != "-") {
      for (const auto item : detail::split(fields[3], ';')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) syntax_error(line_no, "bad relation");
        const auto type = relation_from_tag(item.substr(0, colon));
        const auto target = item.substr(colon + 1);
        if (!type || !SynsetId::is_valid(target)) syntax_error(line_no, "bad relation");
        s.relations.push_back({*type, SynsetId(std::string(target))});
      }
      for (const auto& r : s.relations) {
        if (r.target == s.id) syntax_error(line_no, "relation points to itself");
      }
    }

    if (fields[4] != "-") s.gloss = std::string(fields[4]);
    synsets.push_back(std::move(s));
  }
  return Taxonomy::from_synsets(std::move(synsets));
}

Taxonomy load_taxonomy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return load_taxonomy(in);
}

void save_taxonomy_file(const Taxonomy& taxonomy, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << taxonomy.serialize();
  if (!out.flush()) throw Error(ErrorCode::IoError, "write failed: " + path);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace wntags
