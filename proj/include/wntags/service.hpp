#pragma once

#include <atomic>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wntags/corpus.hpp"
#include "wntags/error.hpp"
#include "wntags/evaluation.hpp"
#include "wntags/relatedness.hpp"
#include "wntags/retrieval.hpp"
#include "wntags/taxonomy.hpp"

namespace wntags {

struct EngineConfig {
  std::string taxonomy_path;
  std::optional<std::string> table_path;  // absent: relatedness computed on the fly
  std::string corpus_path;
  int default_d_max = kDefaultMaxDistance;
  std::string listen_address = "127.0.0.1:8080";
  bool include_drafts = false;

  void validate() const;  // throws InvalidConfig
};

// `key=value` lines; '#' comments. Keys: taxonomy_path, table_path,
// corpus_path, default_d_max, listen_address, include_drafts.
EngineConfig parse_config(std::istream& in);
EngineConfig load_config_file(const std::string& path);
// Reads the file named by WNTAGS_CONFIG.
EngineConfig config_from_env();

// Status code for an error kind; every code maps to exactly one status.
int http_status(ErrorCode code) noexcept;

// JSON encoding. Doubles are rounded to 12 significant digits on the wire.
namespace json_codec {
double wire(double value);
nlohmann::ordered_json error(const Error& e);
nlohmann::ordered_json synset(const Synset& s);
nlohmann::ordered_json image(const ImageRecord& rec);
nlohmann::ordered_json weighted_tags(const std::vector<WeightedTag>& tags);
nlohmann::ordered_json result(const RankedResult& r);
nlohmann::ordered_json results(const std::vector<RankedResult>& rs);
nlohmann::ordered_json agreement(const AgreementReport& report);
nlohmann::ordered_json stats(const TagCountStats& st);
nlohmann::ordered_json eval_summary(const EvalReport& report);
}  // namespace json_codec

// Loaded taxonomy, optional similarity table and the corpus store. The
// table can be rebuilt while searches run; each search holds the table it
// started with.
class Engine {
 public:
  explicit Engine(const EngineConfig& config);

  const EngineConfig& config() const noexcept { return config_; }
  const Taxonomy& taxonomy() const noexcept { return taxonomy_; }
  CorpusStore& corpus() noexcept { return *corpus_; }
  std::shared_ptr<const Corpus> corpus_snapshot() const { return corpus_->snapshot(); }

  // Keeps whatever table backs it alive for the caller's lifetime.
  std::shared_ptr<const RelatednessSource> relatedness() const;
  bool has_table() const;

  // Rebuilds at `d_max` (default: config default), saves to table_path when
  // configured and swaps the new table in.
  std::shared_ptr<const SimilarityTable> rebuild_table(std::optional<int> d_max = std::nullopt);

 private:
  EngineConfig config_;
  Taxonomy taxonomy_;
  std::unique_ptr<CorpusStore> corpus_;
  mutable std::mutex table_mutex_;
  std::shared_ptr<const RelatednessSource> relatedness_;
  std::shared_ptr<const SimilarityTable> table_;
};

struct ApiRequest {
  std::string method;  // GET, POST
  std::string path;
  std::map<std::string, std::string> params;
  std::map<std::string, std::string> headers;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::map<std::string, std::string> headers;
};

inline constexpr const char* kAnnotatorHeader = "X-Annotator";

// Transport-independent request router for the HTTP API.
class Api {
 public:
  explicit Api(Engine& engine) : engine_(&engine) {}
  ApiResponse handle(const ApiRequest& request) const;

 private:
  ApiResponse dispatch(const ApiRequest& request) const;
  ApiResponse lemmas(const ApiRequest& request) const;
  ApiResponse search(const ApiRequest& request) const;
  ApiResponse create_image(const ApiRequest& request) const;
  ApiResponse annotate(const std::string& image_id, const ApiRequest& request) const;

  Engine* engine_;
};

// Serves the API over HTTP until stop() is called from another thread or a
// signal handler.
class HttpServer {
 public:
  explicit HttpServer(Engine& engine);
  ~HttpServer();

  // Binds host:port (port 0 picks a free one). Returns the bound port.
  int bind(const std::string& host, int port);
  void listen_after_bind();  // blocks
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Entry point for the wntags command line tool. Exit 0 on success, 1 on an
// operational error, 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wntags
