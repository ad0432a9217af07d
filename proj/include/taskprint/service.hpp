#pragma once

// HTTP/JSON front end of the knowledge cloud (httplib) and the JSON codecs
// shared with the command-line client.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "taskprint/base64.hpp"
#include "taskprint/baselines.hpp"
#include "taskprint/errors.hpp"
#include "taskprint/fingerprint.hpp"
#include "taskprint/knowledge_cloud.hpp"
#include "taskprint/measures.hpp"

// keep after the Eigen includes
#include <httplib.h>

namespace taskprint::service {

inline constexpr int kSchemaVersion = 1;

namespace detail {

template <class T>
std::optional<T> optional_field(const nlohmann::json& j, const char* name, const char* type_name) {
  if (!j.contains(name) || j[name].is_null()) return std::nullopt;
  try {
    return j[name].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(name, std::string(type_name) + " expected");
  }
}

/// Fingerprint given either as base64 of the binary format or as a JSON object.
inline std::shared_ptr<const Fingerprint> parse_fingerprint(const nlohmann::json& value) {
  try {
    if (value.is_string()) {
      return std::make_shared<const Fingerprint>(decode_fingerprint(base64::decode(value.get<std::string>())));
    }
    if (value.is_object()) return std::make_shared<const Fingerprint>(fingerprint_from_json(value));
  } catch (const ValidationError& e) {
    throw ValidationError("fingerprint." + e.field(), e.what());
  } catch (const FormatError& e) {
    throw ValidationError("fingerprint", e.what());
  }
  throw ValidationError("fingerprint", "base64 string or fingerprint object expected");
}

inline std::shared_ptr<const GaussianSummary> parse_gaussian(const nlohmann::json& value, const std::string& task_id) {
  if (!value.is_string()) throw ValidationError("gaussian", "base64 string expected");
  try {
    return std::make_shared<const GaussianSummary>(decode_gaussian(base64::decode(value.get<std::string>()), task_id));
  } catch (const ValidationError& e) {
    throw ValidationError("gaussian." + e.field(), e.what());
  } catch (const FormatError& e) {
    throw ValidationError("gaussian", e.what());
  }
}

inline std::shared_ptr<const KeywordSet> parse_keywords(const nlohmann::json& value, const std::string& task_id,
                                                        std::uint64_t task_size) {
  if (!value.is_array()) throw ValidationError("keywords", "array of strings expected");
  std::vector<std::string> words;
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_string()) throw ValidationError("keywords[" + std::to_string(i) + "]", "string expected");
    words.push_back(value[i].get<std::string>());
  }
  return std::make_shared<const KeywordSet>(make_keyword_set(task_id, words, task_size));
}

}  // namespace detail

struct SubmitRequest {
  TaskRecord record;
  bool overwrite = false;
};

inline SubmitRequest submit_request_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("", "request body must be a JSON object");
  SubmitRequest out;
  auto& r = out.record;
  const auto id = detail::optional_field<std::string>(j, "task_id", "string");
  if (!id) throw ValidationError("task_id", "required");
  r.task_id = *id;
  if (!j.contains("fingerprint")) throw ValidationError("fingerprint", "required");
  r.fingerprint = detail::parse_fingerprint(j["fingerprint"]);
  r.task_size = detail::optional_field<std::uint64_t>(j, "task_size", "non-negative integer").value_or(0);
  if (j.contains("gaussian") && !j["gaussian"].is_null()) r.gaussian = detail::parse_gaussian(j["gaussian"], r.task_id);
  if (j.contains("keywords") && !j["keywords"].is_null()) {
    r.keywords = detail::parse_keywords(j["keywords"], r.task_id, r.task_size);
  }
  if (j.contains("scenario_metadata") && !j["scenario_metadata"].is_null()) r.scenario_metadata = j["scenario_metadata"];
  r.data_shareable = detail::optional_field<bool>(j, "data_shareable", "boolean").value_or(false);
  r.overlap_group = detail::optional_field<std::string>(j, "overlap_group", "string");
  out.overwrite = detail::optional_field<bool>(j, "overwrite", "boolean").value_or(false);
  return out;
}

inline nlohmann::json submit_request_to_json(const TaskRecord& r, bool overwrite = false) {
  nlohmann::json j = {{"task_id", r.task_id},
                      {"fingerprint", base64::encode(encode_fingerprint(*r.fingerprint))},
                      {"task_size", r.task_size},
                      {"scenario_metadata", r.scenario_metadata},
                      {"data_shareable", r.data_shareable},
                      {"overwrite", overwrite}};
  if (r.gaussian) j["gaussian"] = base64::encode(encode_gaussian(*r.gaussian));
  if (r.keywords) j["keywords"] = r.keywords->keywords;
  if (r.overlap_group) j["overlap_group"] = *r.overlap_group;
  return j;
}

/// Record summary; `with_payload` adds the base64 fingerprint and Gaussian.
inline nlohmann::json record_to_json(const TaskRecord& r, bool with_payload) {
  const auto& fp = *r.fingerprint;
  nlohmann::json j = {{"task_id", r.task_id},
                      {"task_size", r.task_size},
                      {"n_features", fp.n_features},
                      {"binning", {{"n_bins", fp.binning.n_bins}, {"range_lo", fp.binning.range_lo}, {"range_hi", fp.binning.range_hi}}},
                      {"extractor_id", fp.extractor_id},
                      {"has_gaussian", r.gaussian != nullptr},
                      {"scenario_metadata", r.scenario_metadata},
                      {"data_shareable", r.data_shareable},
                      {"created_at", r.created_at}};
  j["keywords"] = r.keywords ? nlohmann::json(r.keywords->keywords) : nlohmann::json(nullptr);
  j["overlap_group"] = r.overlap_group ? nlohmann::json(*r.overlap_group) : nlohmann::json(nullptr);
  if (with_payload) {
    j["fingerprint"] = base64::encode(encode_fingerprint(fp));
    j["gaussian"] = r.gaussian ? nlohmann::json(base64::encode(encode_gaussian(*r.gaussian))) : nlohmann::json(nullptr);
  }
  return j;
}

inline QueryRequest query_request_from_json(const nlohmann::json& j, const std::string& default_measure) {
  if (!j.is_object()) throw ValidationError("", "request body must be a JSON object");
  QueryRequest q;
  auto& t = q.target;
  t.task_id = detail::optional_field<std::string>(j, "task_id", "string").value_or("");
  t.task_size = detail::optional_field<std::uint64_t>(j, "task_size", "non-negative integer").value_or(0);
  if (j.contains("fingerprint") && !j["fingerprint"].is_null()) t.fingerprint = detail::parse_fingerprint(j["fingerprint"]);
  if (j.contains("gaussian") && !j["gaussian"].is_null()) t.gaussian = detail::parse_gaussian(j["gaussian"], t.task_id);
  if (j.contains("keywords") && !j["keywords"].is_null()) t.keywords = detail::parse_keywords(j["keywords"], t.task_id, t.task_size);
  if (!t.fingerprint && !t.gaussian && !t.keywords) {
    throw ValidationError("fingerprint", "a fingerprint, gaussian or keyword list is required");
  }
  q.measure = detail::optional_field<std::string>(j, "measure", "string").value_or(default_measure);
  const auto k = detail::optional_field<long long>(j, "k", "integer");
  if (k && *k < 1) throw ValidationError("k", "k must be at least 1");
  if (k) q.k = static_cast<std::size_t>(*k);
  if (const auto s = detail::optional_field<std::string>(j, "scenario", "string")) {
    q.scenario = scenario_from_string(*s);
    if (!q.scenario) throw ValidationError("scenario", "unknown scenario " + *s);
  }
  q.exclude_overlap_group = detail::optional_field<std::string>(j, "exclude_overlap_group", "string");
  return q;
}

inline nlohmann::json query_request_to_json(const QueryRequest& q) {
  nlohmann::json j = {{"measure", q.measure}, {"k", q.k}};
  const auto& t = q.target;
  if (!t.task_id.empty()) j["task_id"] = t.task_id;
  if (t.task_size) j["task_size"] = t.task_size;
  if (t.fingerprint) j["fingerprint"] = base64::encode(encode_fingerprint(*t.fingerprint));
  if (t.gaussian) j["gaussian"] = base64::encode(encode_gaussian(*t.gaussian));
  if (t.keywords) j["keywords"] = t.keywords->keywords;
  if (q.scenario) j["scenario"] = std::string(to_string(*q.scenario));
  if (q.exclude_overlap_group) j["exclude_overlap_group"] = *q.exclude_overlap_group;
  return j;
}

inline nlohmann::json query_result_to_json(const QueryResult& result) {
  nlohmann::json results = nlohmann::json::array();
  for (std::size_t i = 0; i < result.suggestions.entries.size(); ++i) {
    const auto& s = result.suggestions.entries[i];
    const auto& r = *result.records[i];
    nlohmann::json entry = {{"rank", s.rank},
                            {"task_id", s.task_id},
                            {"distance", s.distance},
                            {"task_size", s.task_size},
                            {"scenario_metadata", r.scenario_metadata},
                            {"data_shareable", r.data_shareable}};
    entry["overlap_group"] = r.overlap_group ? nlohmann::json(*r.overlap_group) : nlohmann::json(nullptr);
    results.push_back(std::move(entry));
  }
  return {{"schema_version", kSchemaVersion}, {"measure", result.suggestions.measure_name}, {"results", results}};
}

inline nlohmann::json error_body(std::string_view code, const std::string& message,
                                 std::optional<std::string> field = std::nullopt) {
  nlohmann::json err = {{"code", code}, {"message", message}};
  if (field && !field->empty()) err["field"] = *field;
  return {{"schema_version", kSchemaVersion}, {"error", err}};
}

struct ServiceConfig {
  std::string default_measure = "bkld-small-target";
};

class Service {
 public:
  Service(std::shared_ptr<TaskStore> store, MeasureRegistry registry, ServiceConfig config = {})
      : store_(std::move(store)), registry_(std::move(registry)), config_(std::move(config)) {
    registry_.at(config_.default_measure);
  }

  void register_routes(httplib::Server& server) {
    server.Post("/v1/tasks", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        auto submit = submit_request_from_json(parse_body(req));
        const auto id = store_->submit(std::move(submit.record), submit.overwrite);
        reply(res, 201, {{"schema_version", kSchemaVersion}, {"task_id", id}});
      });
    });
    server.Get(R"(/v1/tasks/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        auto body = record_to_json(*store_->get(req.matches[1].str()), true);
        body["schema_version"] = kSchemaVersion;
        reply(res, 200, body);
      });
    });
    server.Get("/v1/tasks", [this](const httplib::Request&, httplib::Response& res) {
      handle(res, [&] {
        nlohmann::json tasks = nlohmann::json::array();
        for (const auto& r : store_->list()) tasks.push_back(record_to_json(*r, false));
        reply(res, 200, {{"schema_version", kSchemaVersion}, {"tasks", tasks}});
      });
    });
    server.Post("/v1/query", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        const auto query = query_request_from_json(parse_body(req), config_.default_measure);
        if (!registry_.find(query.measure)) {
          auto body = error_body("unknown_measure", "unknown measure \"" + query.measure + "\"", "measure");
          body["error"]["registered_measures"] = registry_.names();
          reply(res, 400, body);
          return;
        }
        reply(res, 200, query_result_to_json(store_->query(query, registry_)));
      });
    });
    server.Get("/v1/measures", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json measures = nlohmann::json::array();
      for (const auto& [_, m] : registry_) measures.push_back(m.describe());
      reply(res, 200, {{"schema_version", kSchemaVersion}, {"default_measure", config_.default_measure}, {"measures", measures}});
    });
  }

 private:
  static nlohmann::json parse_body(const httplib::Request& req) {
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("", std::string("malformed JSON: ") + e.what());
    }
  }

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <class F>
  static void handle(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const ValidationError& e) {
      reply(res, 400, error_body("validation_error", e.what(), e.field()));
    } catch (const IncompatibleError& e) {
      reply(res, 400, error_body("incompatible", e.what(), e.field()));
    } catch (const FormatError& e) {
      reply(res, 400, error_body("format_error", e.what()));
    } catch (const ConflictError& e) {
      reply(res, 409, error_body("conflict", e.what()));
    } catch (const NotFoundError& e) {
      reply(res, 404, error_body("not_found", e.what()));
    } catch (const EmptyPoolError& e) {
      reply(res, 422, error_body("empty_pool", e.what()));
    } catch (const std::exception& e) {
      reply(res, 500, error_body("internal", e.what()));
    }
  }

  std::shared_ptr<TaskStore> store_;
  MeasureRegistry registry_;
  ServiceConfig config_;
};

}  // namespace taskprint::service
