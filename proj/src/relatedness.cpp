#include "wntags/relatedness.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "text_util.hpp"
#include "wntags/error.hpp"

namespace wntags {

double sim(const Taxonomy& taxonomy, const SynsetId& a, const SynsetId& b, int max_distance,
           const DistanceMetric& metric) {
  const auto d = taxonomy.node_distance(a, b, max_distance);
  return d ? metric(*d) : 0.0;
}

double PathRelatedness::relatedness(const SynsetId& a, const SynsetId& b,
                                    int max_distance) const {
  return sim(*taxonomy_, a, b, max_distance, metric_);
}

RelatednessRow PathRelatedness::row(const SynsetId& source, int max_distance) const {
  RelatednessRow out;
  const auto& synsets = taxonomy_->synsets();
  for (const auto& [idx, d] : taxonomy_->bounded_bfs(taxonomy_->index_of(source), max_distance)) {
    out.emplace(synsets[idx].id, metric_(d));
  }
  return out;
}

SimilarityTable::SimilarityTable(int max_distance, std::string taxonomy_digest,
                                 std::vector<TableEntry> entries)
    : max_distance_(max_distance), digest_(std::move(taxonomy_digest)), entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const TableEntry& x, const TableEntry& y) {
    return std::tie(x.first, x.second) < std::tie(y.first, y.second);
  });
  values_.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (!(e.first < e.second)) {
      throw Error(ErrorCode::FormatError, "pair not canonically ordered: " + e.first.str() + " " +
                                              e.second.str());
    }
    if (!values_.emplace(key(e.first, e.second), e.value).second) {
      throw Error(ErrorCode::FormatError, "duplicate pair " + e.first.str() + " " + e.second.str());
    }
    partners_[e.first].emplace_back(e.second, e.value);
    partners_[e.second].emplace_back(e.first, e.value);
  }
}

std::string SimilarityTable::key(const SynsetId& a, const SynsetId& b) {
  return a < b ? a.str() + '\t' + b.str() : b.str() + '\t' + a.str();
}

double SimilarityTable::lookup(const SynsetId& a, const SynsetId& b) const {
  if (a == b) return 1.0;
  const auto it = values_.find(key(a, b));
  return it == values_.end() ? 0.0 : it->second;
}

const std::vector<std::pair<SynsetId, double>>& SimilarityTable::partners(
    const SynsetId& id) const {
  static const std::vector<std::pair<SynsetId, double>> kNone;
  const auto it = partners_.find(id);
  return it == partners_.end() ? kNone : it->second;
}

void SimilarityTable::ensure_matches(const Taxonomy& taxonomy) const {
  if (digest_ != taxonomy.digest()) {
    throw Error(ErrorCode::StaleTable,
                "table digest " + digest_ + " != taxonomy digest " + taxonomy.digest());
  }
}

double table_lookup(const SimilarityTable& tab, const SynsetId& a, const SynsetId& b) {
  return tab.lookup(a, b);
}

SimilarityTable build_table(const Taxonomy& taxonomy, int max_distance,
                            const DistanceMetric& metric, unsigned threads) {
  if (max_distance < 0) throw Error(ErrorCode::InvalidParams, "d_max must be >= 0");
  const auto n = static_cast<std::uint32_t>(taxonomy.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, std::max<std::uint32_t>(n, 1));

  // Worker w handles sources w, w + threads, ... and keeps per-source buckets
  // so the merge below is in source order regardless of scheduling.
  std::vector<std::vector<TableEntry>> per_source(n);
  const auto& synsets = taxonomy.synsets();
  auto work = [&](unsigned w) {
    for (std::uint32_t src = w; src < n; src += threads) {
      auto& bucket = per_source[src];
      for (const auto& [dst, d] : taxonomy.bounded_bfs(src, max_distance)) {
        // dense index order is id order, so dst > src is the canonical half
        if (dst > src) bucket.push_back({synsets[src].id, synsets[dst].id, metric(d)});
      }
      std::sort(bucket.begin(), bucket.end(),
                [](const TableEntry& x, const TableEntry& y) { return x.second < y.second; });
    }
  };

  try {
    if (threads <= 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(threads);
      for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    }
  } catch (const std::bad_alloc&) {
    throw Error(ErrorCode::BuildFailure, "out of memory building similarity table");
  } catch (const std::system_error& e) {
    throw Error(ErrorCode::BuildFailure, e.what());
  }

  std::vector<TableEntry> entries;
  for (auto& bucket : per_source) {
    entries.insert(entries.end(), std::make_move_iterator(bucket.begin()),
                   std::make_move_iterator(bucket.end()));
  }
  return SimilarityTable(max_distance, taxonomy.digest(), std::move(entries));
}

void write_table(const SimilarityTable& tab, std::ostream& out) {
  out << "#wntags-sim v1 d_max=" << tab.max_distance() << " digest=" << tab.taxonomy_digest()
      << '\n';
  for (const auto& e : tab.entries()) {
    out << e.first.str() << '\t' << e.second.str() << '\t' << detail::format_exact(e.value) << '\n';
  }
  out << "#end entries=" << tab.size() << '\n';
}

SimilarityTable read_table(std::istream& in) {
  auto fail = [](std::size_t line, const std::string& what) -> SimilarityTable {
    throw Error(ErrorCode::FormatError, "line " + std::to_string(line) + ": " + what);
  };

  std::string raw;
  std::size_t line_no = 1;
  if (!std::getline(in, raw)) return fail(line_no, "missing header");
  const auto header = detail::split(raw, ' ');
  int max_distance = 0;
  if (header.size() != 4 || header[0] != "#wntags-sim" || header[1] != "v1" ||
      header[2].substr(0, 6) != "d_max=" || header[3].substr(0, 7) != "digest=" ||
      !detail::parse_int(header[2].substr(6), max_distance) || max_distance < 0 ||
      header[3].size() == 7) {
    return fail(line_no, "bad header");
  }
  const std::string digest(header[3].substr(7));

  std::vector<TableEntry> entries;
  bool terminated = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (terminated) return fail(line_no, "data after end marker");
    if (in.eof()) return fail(line_no, "truncated line");
    if (raw.rfind("#end entries=", 0) == 0) {
      std::size_t count = 0;
      if (!detail::parse_int(std::string_view(raw).substr(13), count) || count != entries.size()) {
        return fail(line_no, "entry count mismatch");
      }
      terminated = true;
      continue;
    }
    const auto fields = detail::split(raw, '\t');
    double value = 0;
    if (fields.size() != 3 || !SynsetId::is_valid(fields[0]) || !SynsetId::is_valid(fields[1]) ||
        !detail::parse_double(fields[2], value) || !(value > 0.0 && value <= 1.0)) {
      return fail(line_no, "bad entry");
    }
    TableEntry e{SynsetId(std::string(fields[0])), SynsetId(std::string(fields[1])), value};
    if (!(e.first < e.second)) return fail(line_no, "pair not canonically ordered");
    if (!entries.empty() &&
        !(std::tie(entries.back().first, entries.back().second) < std::tie(e.first, e.second))) {
      return fail(line_no, "entries not sorted");
    }
    entries.push_back(std::move(e));
  }
  if (!terminated) return fail(line_no, "missing end marker (truncated file)");
  return SimilarityTable(max_distance, digest, std::move(entries));
}

void save_table(const SimilarityTable& tab, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_table(tab, out);
  if (!out.flush()) throw Error(ErrorCode::IoError, "write failed: " + path);
}

SimilarityTable load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_table(in);
}

TableRelatedness::TableRelatedness(const SimilarityTable& table, const Taxonomy& taxonomy,
                                   DistanceMetric metric)
    : table_(&table), taxonomy_(&taxonomy), fallback_(taxonomy, metric), metric_(std::move(metric)) {
  table.ensure_matches(taxonomy);
}

double TableRelatedness::relatedness(const SynsetId& a, const SynsetId& b,
                                     int max_distance) const {
  if (max_distance > table_->max_distance()) return fallback_.relatedness(a, b, max_distance);
  if (!taxonomy_->contains(a)) throw Error(ErrorCode::UnknownSynset, a.str());
  if (!taxonomy_->contains(b)) throw Error(ErrorCode::UnknownSynset, b.str());
  if (max_distance < 0) return 0.0;
  const double value = table_->lookup(a, b);
  // strictly decreasing metric: distance <= max_distance iff value >= metric(max_distance)
  return value >= metric_(max_distance) ? value : 0.0;
}

RelatednessRow TableRelatedness::row(const SynsetId& source, int max_distance) const {
  if (max_distance > table_->max_distance()) return fallback_.row(source, max_distance);
  if (!taxonomy_->contains(source)) throw Error(ErrorCode::UnknownSynset, source.str());
  RelatednessRow out;
  if (max_distance < 0) return out;
  out.emplace(source, 1.0);
  const double floor = metric_(max_distance);
  for (const auto& [partner, value] : table_->partners(source)) {
    if (value >= floor) out.emplace(partner, value);
  }
  return out;
}

}  // namespace wntags
