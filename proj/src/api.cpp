#include <algorithm>

#include "text_util.hpp"
#include "wntags/service.hpp"

namespace wntags {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::size_t kDefaultCompletions = 20;

ApiResponse json_response(int status, const ojson& body) { return {status, body.dump(), {}}; }

std::optional<std::string> param(const ApiRequest& req, const std::string& name) {
  const auto it = req.params.find(name);
  if (it == req.params.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::optional<std::string> header(const ApiRequest& req, std::string_view name) {
  const auto wanted = detail::to_lower(name);
  for (const auto& [k, v] : req.headers) {
    if (detail::to_lower(k) == wanted && !v.empty()) return v;
  }
  return std::nullopt;
}

template <typename Int>
std::optional<Int> int_param(const ApiRequest& req, const std::string& name) {
  const auto text = param(req, name);
  if (!text) return std::nullopt;
  Int value{};
  if (!detail::parse_int(*text, value)) {
    throw Error(ErrorCode::BadRequest, name + " must be an integer");
  }
  return value;
}

std::optional<double> double_param(const ApiRequest& req, const std::string& name) {
  const auto text = param(req, name);
  if (!text) return std::nullopt;
  double value = 0;
  if (!detail::parse_double(*text, value)) {
    throw Error(ErrorCode::BadRequest, name + " must be a number");
  }
  return value;
}

// A missing bound defaults to the end of the [1, 9] scale.
std::optional<ClosedRange> range_param(const ApiRequest& req, const std::string& prefix) {
  const auto lo = double_param(req, prefix + "_min");
  const auto hi = double_param(req, prefix + "_max");
  if (!lo && !hi) return std::nullopt;
  return ClosedRange{lo.value_or(1.0), hi.value_or(9.0)};
}

ojson parse_body(const ApiRequest& req) {
  try {
    auto body = ojson::parse(req.body);
    if (!body.is_object()) throw Error(ErrorCode::BadRequest, "body must be a JSON object");
    return body;
  } catch (const ojson::parse_error& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed JSON: ") + e.what());
  }
}

template <typename T>
T field(const ojson& body, const char* name) {
  const auto it = body.find(name);
  if (it == body.end()) throw Error(ErrorCode::BadRequest, std::string("missing field '") + name + "'");
  try {
    return it->template get<T>();
  } catch (const ojson::exception&) {
    throw Error(ErrorCode::BadRequest, std::string("field '") + name + "' has the wrong type");
  }
}

std::vector<std::string> path_segments(const std::string& path) {
  std::vector<std::string> out;
  for (const auto part : detail::split(path, '/')) {
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

}  // namespace

ApiResponse Api::handle(const ApiRequest& request) const {
  try {
    return dispatch(request);
  } catch (const Error& e) {
    return json_response(http_status(e.code()), json_codec::error(e));
  } catch (const std::exception& e) {
    return json_response(500, json_codec::error(Error(ErrorCode::Internal, e.what())));
  }
}

ApiResponse Api::dispatch(const ApiRequest& req) const {
  const auto seg = path_segments(req.path);
  const bool get = req.method == "GET";
  const bool post = req.method == "POST";
  auto only = [&](bool allowed) {
    if (!allowed) throw Error(ErrorCode::MethodNotAllowed, req.method + " " + req.path);
  };

  if (seg.size() < 2 || seg[0] != "api") throw Error(ErrorCode::RouteNotFound, req.path);

  if (seg.size() == 2 && seg[1] == "lemmas") {
    only(get);
    return lemmas(req);
  }
  if (seg.size() == 2 && seg[1] == "search") {
    only(get);
    return search(req);
  }
  if (seg.size() == 3 && seg[1] == "synsets") {
    only(get);
    if (!SynsetId::is_valid(seg[2])) throw Error(ErrorCode::InvalidSynsetId, seg[2]);
    return json_response(200, json_codec::synset(engine_->taxonomy().synset(SynsetId(seg[2]))));
  }
  if (seg.size() == 2 && seg[1] == "images") {
    only(post);
    return create_image(req);
  }
  if (seg.size() == 3 && seg[1] == "images") {
    only(get);
    return json_response(200, json_codec::image(engine_->corpus_snapshot()->image(seg[2])));
  }
  if (seg.size() == 4 && seg[1] == "images" && seg[3] == "annotations") {
    only(post);
    return annotate(seg[2], req);
  }
  if (seg.size() == 4 && seg[1] == "images" && seg[3] == "agreement") {
    only(get);
    return json_response(200, json_codec::agreement(engine_->corpus_snapshot()->agreement_kappa(seg[2])));
  }
  if (seg.size() == 3 && seg[1] == "stats" && seg[2] == "tags") {
    only(get);
    return json_response(200, json_codec::stats(engine_->corpus_snapshot()->tag_count_stats()));
  }
  if (seg.size() == 3 && seg[1] == "admin" && seg[2] == "rebuild-sim") {
    only(post);
    const auto d_max = int_param<int>(req, "d_max");
    if (d_max && *d_max < 0) throw Error(ErrorCode::InvalidParams, "d_max must be >= 0");
    const auto table = engine_->rebuild_table(d_max);
    return json_response(200, {{"entries", table->size()},
                               {"d_max", table->max_distance()},
                               {"digest", table->taxonomy_digest()}});
  }
  throw Error(ErrorCode::RouteNotFound, req.path);
}

ApiResponse Api::lemmas(const ApiRequest& req) const {
  const auto prefix = detail::to_lower(param(req, "q").value_or(""));
  const auto limit = int_param<std::size_t>(req, "limit").value_or(kDefaultCompletions);
  ojson arr = ojson::array();
  const auto& tax = engine_->taxonomy();
  for (const auto& lemma : tax.lemmas_with_prefix(prefix, limit)) {
    ojson ids = ojson::array();
    for (const auto& id : tax.lookup_lemma(lemma)) ids.push_back(id.str());
    arr.push_back({{"lemma", lemma}, {"synsets", std::move(ids)}});
  }
  return json_response(200, arr);
}

ApiResponse Api::search(const ApiRequest& req) const {
  const auto text = param(req, "q");
  const auto keyword = param(req, "keyword");
  if (!text && !keyword) throw Error(ErrorCode::EmptyQuery, "q or keyword is required");

  const int d_max = int_param<int>(req, "d_max").value_or(engine_->config().default_d_max);
  const auto limit = int_param<std::size_t>(req, "limit");
  if (limit && *limit == 0) throw Error(ErrorCode::InvalidParams, "limit must be positive");
  AffectFilter affect{range_param(req, "val"), range_param(req, "ar"), range_param(req, "dom")};
  affect.validate();

  const auto corpus = engine_->corpus_snapshot();
  const bool drafts = engine_->config().include_drafts;

  if (!text) {
    ojson arr = ojson::array();
    for (const auto& id : search_by_keyword(*corpus, *keyword)) {
      const auto& rec = corpus->image(id);
      if (!drafts && !rec.publishable()) continue;
      if (!affect.accepts(rec.emotion())) continue;
      if (limit && arr.size() >= *limit) break;
      arr.push_back({{"image_id", id}});
    }
    return json_response(200, arr);
  }

  const auto query = parse_query(engine_->taxonomy(), *text, d_max);
  const auto relatedness = engine_->relatedness();
  auto results = wntags::search(*corpus, query, *relatedness, SearchOptions{std::nullopt, drafts});
  results = filter_affect(*corpus, std::move(results), affect);
  if (keyword) {
    const auto wanted = detail::to_lower(*keyword);
    std::erase_if(results, [&](const RankedResult& r) {
      return detail::to_lower(corpus->image(r.image_id).iaps_keyword()) != wanted;
    });
  }
  if (limit && results.size() > *limit) results.resize(*limit);

  auto response = json_response(200, json_codec::results(results));
  if (!query.unmatched_tokens.empty()) {
    std::string joined;
    for (const auto& t : query.unmatched_tokens) joined += (joined.empty() ? "" : ",") + t;
    response.headers["X-Unmatched-Tokens"] = joined;
  }
  return response;
}

ApiResponse Api::create_image(const ApiRequest& req) const {
  const auto body = parse_body(req);
  const auto emotion = field<ojson>(body, "emotion");
  if (!emotion.is_object()) throw Error(ErrorCode::BadRequest, "emotion must be an object");
  const EmotionRating rating{field<double>(emotion, "val"), field<double>(emotion, "ar"),
                             field<double>(emotion, "dom")};
  const auto rec = engine_->corpus().add_image(
      field<std::string>(body, "id"), body.value("source_ref", std::string{}),
      body.value("iaps_keyword", std::string{}), rating);
  return json_response(201, json_codec::image(rec));
}

ApiResponse Api::annotate(const std::string& image_id, const ApiRequest& req) const {
  const auto body = parse_body(req);
  auto annotator = header(req, kAnnotatorHeader);
  if (!annotator && body.contains("annotator")) annotator = field<std::string>(body, "annotator");
  if (!annotator) throw Error(ErrorCode::InvalidAnnotator, std::string(kAnnotatorHeader) + " header is required");

  TagAssignment a{*annotator,
                  Sense{SynsetId(field<std::string>(body, "synset")), body.value("lemma", std::string{})},
                  field<double>(body, "weight")};
  const auto tags = engine_->corpus().annotate(image_id, std::move(a));
  const auto snapshot = engine_->corpus_snapshot();
  return json_response(200, {{"image_id", image_id},
                             {"weighted_tags", json_codec::weighted_tags(tags)},
                             {"publishable", snapshot->image(image_id).publishable()}});
}

}  // namespace wntags
