#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "taskprint/knowledge_cloud.hpp"
#include "taskprint/service.hpp"
#include "test_support.hpp"

using namespace taskprint;
using testing_support::TempDir;

namespace {

/// Fingerprint whose features are all drawn from [lo, lo + 1.5).
std::shared_ptr<const Fingerprint> band_fingerprint(const std::string& id, double lo, std::uint32_t bins = 100,
                                                    std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  const auto f = testing_support::random_features(rng, 400, 6, lo, lo + 1.5, id);
  return std::make_shared<const Fingerprint>(compute_fingerprint(f, BinningConfig{bins, 0.0, 10.0}));
}

TaskRecord record(const std::string& id, double lo) {
  TaskRecord r;
  r.task_id = id;
  r.fingerprint = band_fingerprint(id, lo);
  r.task_size = 400;
  return r;
}

QueryRequest query_for(std::shared_ptr<const Fingerprint> fp, std::string measure = "bkld-small-target",
                       std::size_t k = 10) {
  QueryRequest q;
  q.target.fingerprint = std::move(fp);
  q.measure = std::move(measure);
  q.k = k;
  return q;
}

}  // namespace

TEST(TaskStore, SubmitThenFetchIsByteIdentical) {
  TempDir dir;
  TaskStore store(dir.path());
  auto r = record("alpha", 1.0);
  const auto submitted = encode_fingerprint(*r.fingerprint);
  EXPECT_EQ(store.submit(r), "alpha");
  EXPECT_EQ(encode_fingerprint(*store.get("alpha")->fingerprint), submitted);
  EXPECT_EQ(store.fingerprint_bytes("alpha"), submitted);
  EXPECT_FALSE(store.get("alpha")->created_at.empty());
}

TEST(TaskStore, DuplicateNeedsOverwrite) {
  TempDir dir;
  TaskStore store(dir.path());
  store.submit(record("alpha", 1.0));
  EXPECT_THROW(store.submit(record("alpha", 2.0)), ConflictError);
  auto replacement = record("alpha", 5.0);
  replacement.task_size = 7;
  store.submit(replacement, true);
  EXPECT_EQ(store.get("alpha")->task_size, 7u);
  EXPECT_EQ(store.list().size(), 1u);
}

TEST(TaskStore, InvalidRecordsNameTheField) {
  TempDir dir;
  TaskStore store(dir.path());
  auto r = record("bad", 1.0);
  auto broken = *r.fingerprint;
  broken.histograms[3] += 0.5;
  r.fingerprint = std::make_shared<const Fingerprint>(broken);
  try {
    store.submit(r);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "fingerprint.histograms[0]");
  }
  auto meta = record("meta", 1.0);
  meta.scenario_metadata = {{"MODEL_ARCHITECTURE", {{{"architecture_name", "resnet"}, {"metric", "BA"}}}}};
  try {
    store.submit(meta);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "scenario_metadata.MODEL_ARCHITECTURE[0].value");
  }
  auto unknown = record("unknown", 1.0);
  unknown.scenario_metadata = {{"FINETUNING", 1}};
  EXPECT_THROW(store.submit(unknown), ValidationError);
  EXPECT_TRUE(store.list().empty());
}

TEST(TaskStore, RecordsSurviveReopen) {
  TempDir dir;
  std::string before;
  {
    TaskStore store(dir.path());
    auto r = record("persist", 3.0);
    r.keywords = std::make_shared<const KeywordSet>(make_keyword_set("persist", {"ct", "liver"}, 400));
    r.scenario_metadata = {{"AUGMENTATION", {{"policy", "rand-aug"}}}};
    r.overlap_group = "grp";
    r.data_shareable = true;
    std::mt19937_64 rng(3);
    r.gaussian = std::make_shared<const GaussianSummary>(
        gaussian_summary(testing_support::random_features(rng, 20, 6, 0.0, 1.0, "persist")));
    store.submit(r);
    before = store.fingerprint_bytes("persist");
  }
  TaskStore reopened(dir.path());
  const auto r = reopened.get("persist");
  EXPECT_EQ(encode_fingerprint(*r->fingerprint), before);
  EXPECT_EQ(r->keywords->keywords, (std::set<std::string>{"ct", "liver"}));
  EXPECT_EQ(r->scenario_metadata["AUGMENTATION"]["policy"], "rand-aug");
  EXPECT_EQ(r->overlap_group, std::optional<std::string>("grp"));
  EXPECT_TRUE(r->data_shareable);
  ASSERT_TRUE(r->gaussian);
  EXPECT_EQ(r->gaussian->dim(), 6u);
}

TEST(TaskStore, OddTaskIdsAreStoredSafely) {
  TempDir dir;
  TaskStore store(dir.path());
  store.submit(record("../escape/..", 1.0));
  store.submit(record("a b%c", 2.0));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "records" / "%2E%2E%2Fescape%2F%2E%2E.tfpr"));
  TaskStore reopened(dir.path());
  EXPECT_EQ(reopened.list().size(), 2u);
}

TEST(TaskStore, IdenticalFingerprintRanksFirstUnderEveryBkldVariant) {
  TempDir dir;
  TaskStore store(dir.path());
  const auto registry = builtin_measures();
  for (const auto& v : standard_bkld_variants()) {
    TaskStore s(dir.path() / v.name);
    for (int i = 0; i < 5; ++i) {
      TaskRecord r;
      r.task_id = "band" + std::to_string(i);
      r.fingerprint = band_fingerprint(r.task_id, 1.5 * i, v.binning.n_bins, 10 + i);
      r.task_size = 400;
      s.submit(r);
    }
    const auto copy = std::make_shared<const Fingerprint>(*s.get("band2")->fingerprint);
    const auto result = s.query(query_for(copy, v.name, 3), registry);
    ASSERT_FALSE(result.suggestions.entries.empty());
    EXPECT_EQ(result.suggestions.entries[0].task_id, "band2") << v.name;
  }
}

TEST(TaskStore, QueryFiltersAndExclusions) {
  TempDir dir;
  TaskStore store(dir.path());
  const auto registry = builtin_measures();
  auto a = record("a", 0.0);
  a.overlap_group = "cholec";
  a.scenario_metadata = {{"MODEL_ARCHITECTURE", nlohmann::json::array({{{"architecture_name", "unet"}, {"metric", "BA"}, {"value", 0.8}},
                                                                      {{"architecture_name", "swin"}, {"metric", "BA"}, {"value", 0.9}}})}};
  store.submit(a);
  store.submit(record("b", 3.0));
  store.submit(record("c", 6.0));

  auto q = query_for(store.get("a")->fingerprint);
  EXPECT_EQ(store.query(q, registry).suggestions.entries.size(), 3u);  // k larger than store

  q.exclude_overlap_group = "cholec";
  for (const auto& e : store.query(q, registry).suggestions.entries) EXPECT_NE(e.task_id, "a");

  q.exclude_overlap_group.reset();
  q.target.task_id = "b";
  for (const auto& e : store.query(q, registry).suggestions.entries) EXPECT_NE(e.task_id, "b");

  q.target.task_id.clear();
  q.scenario = Scenario::ModelArchitecture;
  const auto filtered = store.query(q, registry);
  ASSERT_EQ(filtered.suggestions.entries.size(), 1u);
  EXPECT_EQ(filtered.suggestions.entries[0].task_id, "a");
  EXPECT_EQ(best_architecture(*filtered.records[0], "BA")->architecture_name, "swin");

  q.scenario = Scenario::Cotraining;
  EXPECT_THROW(store.query(q, registry), EmptyPoolError);
}

TEST(TaskStore, QueryErrors) {
  TempDir dir;
  TaskStore store(dir.path());
  const auto registry = builtin_measures();
  store.submit(record("a", 0.0));
  EXPECT_THROW(store.query(query_for(band_fingerprint("q", 0.0), "nope"), registry), NotFoundError);
  // b=1000 query against b=100 records: nothing compatible.
  EXPECT_THROW(store.query(query_for(band_fingerprint("q", 0.0, 1000), "bkld-large-unweighted"), registry),
               EmptyPoolError);
  // fid needs a Gaussian in the query.
  EXPECT_THROW(store.query(query_for(band_fingerprint("q", 0.0), "fid"), registry), ValidationError);
}

TEST(TaskStore, ConcurrentReadersDuringWrites) {
  TempDir dir;
  TaskStore store(dir.path());
  const auto registry = builtin_measures();
  store.submit(record("seed", 0.0));
  const auto probe = band_fingerprint("probe", 0.0);
  std::atomic<bool> done{false};
  std::atomic<int> failures{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      while (!done) {
        try {
          const auto r = store.query(query_for(probe), registry);
          if (r.suggestions.entries.empty()) ++failures;
        } catch (...) {
          ++failures;
        }
      }
    });
  }
  for (int i = 0; i < 20; ++i) store.submit(record("w" + std::to_string(i), 0.3 * (i % 20)));
  done = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(failures.load(), 0);
  EXPECT_EQ(store.list().size(), 21u);
}

TEST(Base64, RoundTripAllLengths) {
  std::string raw;
  for (int n = 0; n < 40; ++n) {
    EXPECT_EQ(base64::decode(base64::encode(raw)), raw);
    raw.push_back(static_cast<char>(n * 37));
  }
  EXPECT_EQ(base64::encode("foob"), "Zm9vYg==");
  EXPECT_THROW(base64::decode("abc"), FormatError);
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    store_ = std::make_shared<TaskStore>(dir_.path());
    service_ = std::make_unique<service::Service>(store_, builtin_measures());
    service_->register_routes(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  TempDir dir_;
  std::shared_ptr<TaskStore> store_;
  std::unique_ptr<service::Service> service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST_F(ServiceTest, SubmitFetchListQuery) {
  auto c = client();
  auto r = record("http-a", 2.0);
  r.scenario_metadata = {{"PRETRAINING", {{"checkpoint", "x"}}}};
  const auto body = service::submit_request_to_json(r).dump();
  auto res = c.Post("/v1/tasks", body, "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  EXPECT_EQ(nlohmann::json::parse(res->body)["task_id"], "http-a");

  res = c.Post("/v1/tasks", body, "application/json");
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(nlohmann::json::parse(res->body)["error"]["code"], "conflict");

  res = c.Get("/v1/tasks/http-a");
  ASSERT_EQ(res->status, 200);
  const auto fetched = nlohmann::json::parse(res->body);
  EXPECT_EQ(fetched["schema_version"], 1);
  EXPECT_EQ(base64::decode(fetched["fingerprint"].get<std::string>()), encode_fingerprint(*r.fingerprint));

  res = c.Get("/v1/tasks");
  EXPECT_EQ(nlohmann::json::parse(res->body)["tasks"].size(), 1u);
  EXPECT_EQ(c.Get("/v1/tasks/missing")->status, 404);

  QueryRequest q = query_for(r.fingerprint, "vdna", 5);
  res = c.Post("/v1/query", service::query_request_to_json(q).dump(), "application/json");
  ASSERT_EQ(res->status, 200);
  const auto out = nlohmann::json::parse(res->body);
  EXPECT_EQ(out["schema_version"], 1);
  ASSERT_EQ(out["results"].size(), 1u);
  EXPECT_EQ(out["results"][0]["task_id"], "http-a");
  EXPECT_EQ(out["results"][0]["scenario_metadata"]["PRETRAINING"]["checkpoint"], "x");
  EXPECT_EQ(out["results"][0]["data_shareable"], false);
}

TEST_F(ServiceTest, ErrorShapes) {
  auto c = client();
  auto res = c.Post("/v1/tasks", "{not json", "application/json");
  EXPECT_EQ(res->status, 400);
  res = c.Post("/v1/tasks", R"({"task_id":"x","fingerprint":"AAAA"})", "application/json");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(nlohmann::json::parse(res->body)["error"]["field"], "fingerprint");

  store_->submit(record("a", 1.0));
  nlohmann::json q = service::query_request_to_json(query_for(band_fingerprint("q", 1.0), "cosine"));
  res = c.Post("/v1/query", q.dump(), "application/json");
  EXPECT_EQ(res->status, 400);
  const auto err = nlohmann::json::parse(res->body)["error"];
  EXPECT_EQ(err["code"], "unknown_measure");
  EXPECT_EQ(err["registered_measures"].size(), 7u);

  q["measure"] = "vdna";
  q["k"] = 0;
  EXPECT_EQ(c.Post("/v1/query", q.dump(), "application/json")->status, 400);
  q["k"] = 3;
  q["scenario"] = "COTRAINING";
  EXPECT_EQ(c.Post("/v1/query", q.dump(), "application/json")->status, 422);
}

TEST_F(ServiceTest, MeasuresEndpoint) {
  auto res = client().Get("/v1/measures");
  ASSERT_EQ(res->status, 200);
  const auto j = nlohmann::json::parse(res->body);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["measures"].size(), 7u);
  for (const auto& m : j["measures"]) {
    if (m["name"] == "bkld-small-target") {
      EXPECT_EQ(m["parameters"]["n_bins"], 100);
    }
    if (m["name"] == "bkld-large-unweighted") {
      EXPECT_EQ(m["parameters"]["n_bins"], 1000);
    }
  }
}
