#pragma once

// Persistent registry of task records (fingerprint + training metadata) and
// top-k transfer-candidate queries over it.
//
// Layout under the data directory:
//   index.json              all record metadata, rewritten atomically
//   records/<id>.tfpr       fingerprint, binary format
//   records/<id>.tgsu       optional Gaussian summary
//
// Writers are serialized; readers work on immutable snapshots.

#include <fcntl.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "taskprint/baselines.hpp"
#include "taskprint/binary_io.hpp"
#include "taskprint/errors.hpp"
#include "taskprint/fingerprint.hpp"
#include "taskprint/measures.hpp"
#include "taskprint/outcomes.hpp"
#include "taskprint/selector.hpp"

namespace taskprint {

struct TaskRecord {
  std::string task_id;
  std::shared_ptr<const Fingerprint> fingerprint;
  std::shared_ptr<const GaussianSummary> gaussian;
  std::shared_ptr<const KeywordSet> keywords;
  std::uint64_t task_size = 0;
  nlohmann::json scenario_metadata = nlohmann::json::object();  // scenario name -> opaque blob
  bool data_shareable = false;
  std::optional<std::string> overlap_group;
  std::string created_at;  // UTC, ISO-8601

  TaskRepresentation representation() const {
    return TaskRepresentation{task_id, task_size, fingerprint, gaussian, keywords};
  }

  bool has_scenario(Scenario s) const { return scenario_metadata.contains(std::string(to_string(s))); }
};

struct LeaderboardEntry {
  std::string architecture_name;
  std::string metric;
  double value = 0.0;
};

/// MODEL_ARCHITECTURE metadata: array of {architecture_name, metric, value}.
inline std::vector<LeaderboardEntry> parse_leaderboard(const nlohmann::json& blob) {
  const std::string path = "scenario_metadata.MODEL_ARCHITECTURE";
  if (!blob.is_array()) throw ValidationError(path, "architecture leaderboard must be an array");
  std::vector<LeaderboardEntry> out;
  for (std::size_t i = 0; i < blob.size(); ++i) {
    const auto& e = blob[i];
    const std::string at = path + "[" + std::to_string(i) + "]";
    if (!e.is_object()) throw ValidationError(at, "leaderboard entry must be an object");
    if (!e.contains("architecture_name") || !e["architecture_name"].is_string()) {
      throw ValidationError(at + ".architecture_name", "string required");
    }
    if (!e.contains("metric") || !e["metric"].is_string()) throw ValidationError(at + ".metric", "string required");
    if (!e.contains("value") || !e["value"].is_number()) throw ValidationError(at + ".value", "number required");
    out.push_back({e["architecture_name"].get<std::string>(), e["metric"].get<std::string>(), e["value"].get<double>()});
  }
  return out;
}

/// Best-performing architecture of a record's leaderboard for `metric`, if any.
inline std::optional<LeaderboardEntry> best_architecture(const TaskRecord& record, std::string_view metric) {
  const auto key = std::string(to_string(Scenario::ModelArchitecture));
  if (!record.scenario_metadata.contains(key)) return std::nullopt;
  std::optional<LeaderboardEntry> best;
  for (auto& e : parse_leaderboard(record.scenario_metadata[key])) {
    if (e.metric == metric && (!best || e.value > best->value)) best = std::move(e);
  }
  return best;
}

inline void validate(const TaskRecord& record) {
  if (record.task_id.empty()) throw ValidationError("task_id", "must not be empty");
  if (!record.fingerprint) throw ValidationError("fingerprint", "required");
  try {
    validate(*record.fingerprint);
  } catch (const ValidationError& e) {
    throw ValidationError("fingerprint." + e.field(), e.what());
  }
  if (record.gaussian) {
    try {
      validate(*record.gaussian);
    } catch (const ValidationError& e) {
      throw ValidationError("gaussian." + e.field(), e.what());
    }
  }
  if (record.keywords && record.keywords->keywords.empty()) {
    throw ValidationError("keywords", "keyword list must not be empty when given");
  }
  if (record.overlap_group && record.overlap_group->empty()) {
    throw ValidationError("overlap_group", "must not be empty when given");
  }
  if (!record.scenario_metadata.is_object()) throw ValidationError("scenario_metadata", "must be an object");
  for (const auto& [name, blob] : record.scenario_metadata.items()) {
    if (!scenario_from_string(name)) throw ValidationError("scenario_metadata." + name, "unknown scenario");
  }
  const auto arch = std::string(to_string(Scenario::ModelArchitecture));
  if (record.scenario_metadata.contains(arch)) parse_leaderboard(record.scenario_metadata[arch]);
}

struct QueryRequest {
  TaskRepresentation target;  // task_id, when set, is excluded from the results
  std::string measure;
  std::size_t k = 5;
  std::optional<Scenario> scenario;
  std::optional<std::string> exclude_overlap_group;
};

struct QueryResult {
  RankedSuggestions suggestions;
  std::vector<std::shared_ptr<const TaskRecord>> records;  // parallel to suggestions.entries
};

namespace detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// File-name-safe encoding of a task id: [A-Za-z0-9_-] kept, others %XX.
inline std::string encode_file_stem(std::string_view id) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : id) {
    if (std::isalnum(c) || c == '_' || c == '-') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

inline void fsync_path(const std::filesystem::path& path, int flags) {
  const int fd = ::open(path.c_str(), flags);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

/// Writes to a sibling temp file, fsyncs, then renames over `path`.
inline void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error("cannot create " + tmp.string() + ": " + std::strerror(errno));
  std::size_t written = 0;
  while (written < bytes.size()) {
    const auto n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const std::string reason = std::strerror(errno);
      ::close(fd);
      throw Error("write failed for " + tmp.string() + ": " + reason);
    }
    written += static_cast<std::size_t>(n);
  }
  ::fsync(fd);
  ::close(fd);
  std::filesystem::rename(tmp, path);
  fsync_path(path.parent_path(), O_RDONLY | O_DIRECTORY);
}

}  // namespace detail

class TaskStore {
 public:
  using Snapshot = std::map<std::string, std::shared_ptr<const TaskRecord>>;

  explicit TaskStore(std::filesystem::path data_dir) : dir_(std::move(data_dir)) {
    std::filesystem::create_directories(dir_ / "records");
    snapshot_ = std::make_shared<const Snapshot>(load_index());
  }

  const std::filesystem::path& data_dir() const noexcept { return dir_; }

  std::shared_ptr<const Snapshot> snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
  }

  /// Persists the record and returns its id. The stored fingerprint is the
  /// decoded on-disk form, so later reads are bit-identical to this one.
  std::string submit(TaskRecord record, bool overwrite = false) {
    validate(record);
    std::lock_guard writer(write_mutex_);
    const auto current = snapshot();
    if (current->count(record.task_id) && !overwrite) {
      throw ConflictError("task " + record.task_id + " already exists");
    }
    record.created_at = detail::utc_timestamp();

    const auto stem = detail::encode_file_stem(record.task_id);
    const auto fp_bytes = encode_fingerprint(*record.fingerprint);
    record.fingerprint = std::make_shared<const Fingerprint>(decode_fingerprint(fp_bytes));
    detail::atomic_write(dir_ / "records" / (stem + ".tfpr"), fp_bytes);
    const auto gaussian_path = dir_ / "records" / (stem + ".tgsu");
    if (record.gaussian) {
      detail::atomic_write(gaussian_path, encode_gaussian(*record.gaussian));
    } else {
      std::filesystem::remove(gaussian_path);
    }

    std::string id = record.task_id;
    auto next = std::make_shared<Snapshot>(*current);
    (*next)[id] = std::make_shared<const TaskRecord>(std::move(record));
    write_index(*next);
    {
      std::lock_guard lock(snapshot_mutex_);
      snapshot_ = next;
    }
    return id;
  }

  std::shared_ptr<const TaskRecord> get(const std::string& task_id) const {
    const auto snap = snapshot();
    const auto it = snap->find(task_id);
    if (it == snap->end()) throw NotFoundError("unknown task " + task_id);
    return it->second;
  }

  /// Raw stored fingerprint file bytes.
  std::string fingerprint_bytes(const std::string& task_id) const {
    get(task_id);
    return binary::read_file(dir_ / "records" / (detail::encode_file_stem(task_id) + ".tfpr"));
  }

  std::vector<std::shared_ptr<const TaskRecord>> list() const {
    const auto snap = snapshot();
    std::vector<std::shared_ptr<const TaskRecord>> out;
    for (const auto& [_, r] : *snap) out.push_back(r);
    return out;
  }

  QueryResult query(const QueryRequest& request, const MeasureRegistry& registry) const {
    const auto& measure = registry.at(request.measure);
    if (request.k == 0) throw ValidationError("k", "k must be at least 1");
    if (!measure.has_representation(request.target)) {
      throw ValidationError(std::string(to_string(measure.representation)),
                            "measure " + measure.name + " needs a " + std::string(to_string(measure.representation)) +
                                " in the query");
    }
    const auto snap = snapshot();
    CandidatePool pool;
    std::map<std::string, std::shared_ptr<const TaskRecord>> by_id;
    for (const auto& [id, record] : *snap) {
      if (!request.target.task_id.empty() && id == request.target.task_id) continue;
      if (request.exclude_overlap_group && record->overlap_group == request.exclude_overlap_group) continue;
      if (request.scenario && !record->has_scenario(*request.scenario)) continue;
      auto candidate = record->representation();
      if (!measure.compatible(candidate, request.target)) continue;
      pool.entries.push_back(std::move(candidate));
      by_id[id] = record;
    }
    if (pool.entries.empty()) {
      throw EmptyPoolError("no stored task is compatible with the query under measure " + measure.name);
    }
    QueryResult result{select(request.target, pool, measure, request.k), {}};
    for (const auto& s : result.suggestions.entries) result.records.push_back(by_id.at(s.task_id));
    return result;
  }

 private:
  nlohmann::json record_index_entry(const TaskRecord& r) const {
    const auto stem = detail::encode_file_stem(r.task_id);
    nlohmann::json j = {{"task_id", r.task_id},
                        {"fingerprint_file", "records/" + stem + ".tfpr"},
                        {"task_size", r.task_size},
                        {"scenario_metadata", r.scenario_metadata},
                        {"data_shareable", r.data_shareable},
                        {"created_at", r.created_at}};
    j["gaussian_file"] = r.gaussian ? nlohmann::json("records/" + stem + ".tgsu") : nlohmann::json(nullptr);
    j["keywords"] = r.keywords ? nlohmann::json(r.keywords->keywords) : nlohmann::json(nullptr);
    j["overlap_group"] = r.overlap_group ? nlohmann::json(*r.overlap_group) : nlohmann::json(nullptr);
    return j;
  }

  void write_index(const Snapshot& snap) const {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& [_, r] : snap) records.push_back(record_index_entry(*r));
    const nlohmann::json index = {{"schema_version", 1}, {"records", records}};
    detail::atomic_write(dir_ / "index.json", index.dump(2) + "\n");
  }

  Snapshot load_index() const {
    Snapshot out;
    const auto index_path = dir_ / "index.json";
    if (!std::filesystem::exists(index_path)) return out;
    nlohmann::json index;
    try {
      index = nlohmann::json::parse(binary::read_file(index_path));
      for (const auto& e : index.at("records")) {
        auto r = std::make_shared<TaskRecord>();
        r->task_id = e.at("task_id").get<std::string>();
        r->fingerprint = std::make_shared<const Fingerprint>(
            decode_fingerprint(binary::read_file(dir_ / e.at("fingerprint_file").get<std::string>())));
        if (!e.at("gaussian_file").is_null()) {
          r->gaussian = std::make_shared<const GaussianSummary>(
              load_gaussian(dir_ / e.at("gaussian_file").get<std::string>(), r->task_id));
        }
        r->task_size = e.at("task_size").get<std::uint64_t>();
        if (!e.at("keywords").is_null()) {
          r->keywords = std::make_shared<const KeywordSet>(
              make_keyword_set(r->task_id, e.at("keywords").get<std::vector<std::string>>(), r->task_size));
        }
        r->scenario_metadata = e.at("scenario_metadata");
        r->data_shareable = e.at("data_shareable").get<bool>();
        if (!e.at("overlap_group").is_null()) r->overlap_group = e.at("overlap_group").get<std::string>();
        r->created_at = e.at("created_at").get<std::string>();
        out.emplace(r->task_id, std::move(r));
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(index_path.string() + ": " + e.what());
    }
    return out;
  }

  std::filesystem::path dir_;
  mutable std::mutex snapshot_mutex_;
  std::mutex write_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
};

}  // namespace taskprint
