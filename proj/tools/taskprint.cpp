// taskprint: task fingerprints, transfer-source ranking, selector evaluation
// and the knowledge-cloud client/server.
//
// Exit codes: 0 success, 2 usage or validation error, 3 transport or server error.

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "taskprint/taskprint.hpp"
#include "taskprint/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace taskprint;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitTransport = 3;

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HttpError : std::runtime_error {
  HttpError(int status, const std::string& body)
      : std::runtime_error("HTTP " + std::to_string(status) + ": " + body), status(status) {}
  int status;
};

std::string default_server() {
  const char* env = std::getenv("TASKPRINT_SERVER");
  return env ? env : "http://127.0.0.1:8080";
}

std::string format_distance(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", d);
  return buf;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) { binary::write_file(path, text); }

json read_json_file(const fs::path& path) {
  try {
    return json::parse(binary::read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// --- fingerprint --------------------------------------------------------------

struct FingerprintOptions {
  std::string features;
  std::string task_id;
  std::string measure;
  std::uint32_t bins = 100;
  double range_lo = 0.0;
  double range_hi = 10.0;
  std::string out;
  std::string format = "binary";
  std::string json_out;
  std::string gaussian_out;
};

int cmd_fingerprint(const FingerprintOptions& o, bool bins_given, bool lo_given, bool hi_given) {
  BinningConfig binning{o.bins, o.range_lo, o.range_hi};
  if (!o.measure.empty()) {
    const auto registry = builtin_measures();
    const auto& m = registry.at(o.measure);
    if (!m.binning) throw ValidationError("measure", "measure " + m.name + " does not define a fingerprint binning");
    if (!bins_given) binning.n_bins = m.binning->n_bins;
    if (!lo_given) binning.range_lo = m.binning->range_lo;
    if (!hi_given) binning.range_hi = m.binning->range_hi;
  }
  validate(binning);
  const auto task_id = o.task_id.empty() ? fs::path(o.features).stem().string() : o.task_id;
  const auto features = load_feature_matrix(o.features, task_id);
  const auto fp = compute_fingerprint(features, binning);
  if (o.format == "json") {
    write_text(o.out, fingerprint_to_json(fp).dump(2) + "\n");
  } else {
    save_fingerprint(o.out, fp);
  }
  if (!o.json_out.empty()) write_text(o.json_out, fingerprint_to_json(fp).dump(2) + "\n");
  if (!o.gaussian_out.empty()) save_gaussian(o.gaussian_out, gaussian_summary(features));
  std::cout << "task_id=" << fp.task_id << " m=" << fp.n_features << " b=" << fp.binning.n_bins
            << " n=" << fp.n_samples_used << "\n";
  return kExitOk;
}

// --- loading task representations ----------------------------------------------

/// Loads what `measure` needs from `ref`: a fingerprint or Gaussian file, or a
/// task id in the keyword manifest.
TaskRepresentation load_representation(const DistanceMeasure& measure, const std::string& ref,
                                       const std::vector<KeywordSet>* manifest) {
  TaskRepresentation t;
  switch (measure.representation) {
    case Representation::Fingerprint: {
      auto fp = std::make_shared<const Fingerprint>(load_fingerprint(ref));
      t.task_id = fp->task_id;
      t.task_size = fp->n_samples_used;
      t.fingerprint = std::move(fp);
      break;
    }
    case Representation::Gaussian: {
      auto g = std::make_shared<const GaussianSummary>(load_gaussian(ref, fs::path(ref).stem().string()));
      t.task_id = g->task_id;
      t.task_size = g->n_samples;
      t.gaussian = std::move(g);
      break;
    }
    case Representation::Keywords: {
      if (!manifest) throw ValidationError("keywords", "measure " + measure.name + " needs --keywords <manifest.json>");
      for (const auto& k : *manifest) {
        if (k.task_id == ref) {
          t.task_id = k.task_id;
          t.task_size = k.task_size;
          t.keywords = std::make_shared<const KeywordSet>(k);
          return t;
        }
      }
      throw ValidationError("keywords", "task " + ref + " is not in the keyword manifest");
    }
  }
  return t;
}

// --- compare ------------------------------------------------------------------

int cmd_compare(const std::string& source, const std::string& target, const std::string& measure_name,
                const std::string& keywords) {
  const auto registry = builtin_measures();
  const auto& measure = registry.at(measure_name);
  std::optional<std::vector<KeywordSet>> manifest;
  if (!keywords.empty()) manifest = load_keyword_manifest(keywords);
  const auto s = load_representation(measure, source, manifest ? &*manifest : nullptr);
  const auto t = load_representation(measure, target, manifest ? &*manifest : nullptr);
  measure.require_compatible(s, t);
  std::cout << format_distance(measure.distance(s, t)) << "\n";
  return kExitOk;
}

// --- rank ---------------------------------------------------------------------

struct RankOptions {
  std::string target;
  std::vector<std::string> candidates;
  std::string measure = "bkld-small-target";
  std::size_t k = 5;
  std::string keywords;
  std::string distances_out;
  bool json_output = false;
};

int cmd_rank(const RankOptions& o) {
  const auto registry = builtin_measures();
  const auto& measure = registry.at(o.measure);
  std::optional<std::vector<KeywordSet>> manifest;
  if (!o.keywords.empty()) manifest = load_keyword_manifest(o.keywords);
  const auto* kw = manifest ? &*manifest : nullptr;

  const auto target = load_representation(measure, o.target, kw);
  CandidatePool pool;
  for (const auto& c : o.candidates) {
    if (fs::is_directory(c)) {
      if (measure.representation == Representation::Keywords) {
        throw ValidationError("candidates", "measure " + measure.name + " takes task ids, not directories");
      }
      const std::string ext = measure.representation == Representation::Gaussian ? ".tgsu" : ".tfpr";
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(c)) {
        if (e.is_regular_file() && e.path().extension() == ext) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) pool.entries.push_back(load_representation(measure, f.string(), kw));
    } else {
      pool.entries.push_back(load_representation(measure, c, kw));
    }
  }
  const auto full = full_ranking(target, pool, measure);
  if (!o.distances_out.empty()) {
    std::ostringstream csv;
    csv << "selector,target_id,source_id,distance,source_size\n";
    for (const auto& e : full.entries) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", e.distance);
      csv << measure.name << ',' << target.task_id << ',' << e.task_id << ',' << buf << ',' << e.task_size << '\n';
    }
    write_text(o.distances_out, csv.str());
  }
  auto top = full;
  if (top.entries.size() > o.k) top.entries.resize(o.k);

  if (o.json_output) {
    json results = json::array();
    for (const auto& e : top.entries) {
      results.push_back({{"rank", e.rank}, {"task_id", e.task_id}, {"distance", e.distance}, {"task_size", e.task_size}});
    }
    std::cout << json{{"schema_version", 1}, {"measure", measure.name}, {"target", target.task_id}, {"results", results}}.dump(2)
              << "\n";
  } else {
    std::printf("%-5s %-32s %-16s %s\n", "rank", "task_id", "distance", "task_size");
    for (const auto& e : top.entries) {
      std::printf("%-5zu %-32s %-16s %llu\n", e.rank, e.task_id.c_str(), format_distance(e.distance).c_str(),
                  static_cast<unsigned long long>(e.task_size));
    }
  }
  return kExitOk;
}

// --- evaluate -----------------------------------------------------------------

struct EvaluateOptions {
  std::string outcomes;
  std::string distances;
  std::vector<std::string> selectors;
  std::vector<std::string> meta_metrics;
  std::size_t n_boot = 1000;
  std::uint64_t seed = 42;
  std::string mode = "both";
  std::size_t top_k = 3;
  std::size_t max_shots = 5;
  std::string out_json;
  std::string out_csv;
  std::string out_multishot_csv;
};

int cmd_evaluate(const EvaluateOptions& o) {
  std::ifstream outcomes_in(o.outcomes);
  if (!outcomes_in) throw FormatError("cannot open " + o.outcomes);
  std::ifstream distances_in(o.distances);
  if (!distances_in) throw FormatError("cannot open " + o.distances);
  const auto outcomes = read_outcomes_csv(outcomes_in);
  const auto distances = read_distances_csv(distances_in);

  EvaluationConfig config;
  for (const auto& s : o.selectors) {
    for (auto& name : split_list(s)) config.selectors.push_back(std::move(name));
  }
  if (!o.meta_metrics.empty()) {
    config.meta_metrics.clear();
    for (const auto& s : o.meta_metrics) {
      for (const auto& name : split_list(s)) {
        const auto m = meta_metric_from_string(name);
        if (!m) throw ValidationError("meta-metrics", "unknown meta metric " + name);
        config.meta_metrics.push_back(*m);
      }
    }
  }
  config.n_boot = o.n_boot;
  config.seed = o.seed;
  config.top_k = o.top_k;
  config.max_shots = o.max_shots;
  if (o.mode == "aggregate_then_rank") {
    config.modes = {BootstrapMode::AggregateThenRank};
  } else if (o.mode == "rank_then_mean") {
    config.modes = {BootstrapMode::RankThenMean};
  }

  const auto report = evaluate(outcomes, distances, config);
  const auto report_json = report_to_json(report).dump(2) + "\n";
  if (!o.out_csv.empty()) write_text(o.out_csv, rank_frequency_csv(report));
  if (!o.out_multishot_csv.empty()) write_text(o.out_multishot_csv, multi_shot_csv(report));
  if (o.out_json.empty()) {
    std::cout << report_json;
    return kExitOk;
  }
  write_text(o.out_json, report_json);
  std::cout << "evaluated " << report.selectors.size() << " selectors, " << report.rankings.size()
            << " rank distributions\n";
  for (const auto& [selector, rate] : report.win_rates.at("mean")) {
    std::printf("  %-32s mean win rate %6.2f%%\n", selector.c_str(), rate);
  }
  return kExitOk;
}

// --- cloud client ----------------------------------------------------------------

json http_post(const std::string& server, const std::string& path, const json& body) {
  httplib::Client client(server);
  client.set_connection_timeout(5);
  client.set_read_timeout(60);
  const auto res = client.Post(path, body.dump(), "application/json");
  if (!res) throw TransportError("cannot reach " + server + ": " + httplib::to_string(res.error()));
  if (res->status >= 300) throw HttpError(res->status, res->body);
  try {
    return json::parse(res->body);
  } catch (const json::parse_error&) {
    throw HttpError(res->status, "malformed response body: " + res->body);
  }
}

struct SubmitOptions {
  std::string server = default_server();
  std::string fingerprint;
  std::string task_id;
  std::string gaussian;
  std::string keywords;
  std::optional<std::uint64_t> task_size;
  std::string metadata;
  bool shareable = false;
  std::string overlap_group;
  bool overwrite = false;
  bool json_output = false;
};

int cmd_submit(const SubmitOptions& o) {
  TaskRecord r;
  auto fp = load_fingerprint(o.fingerprint);
  r.task_id = o.task_id.empty() ? fp.task_id : o.task_id;
  fp.task_id = r.task_id;
  r.task_size = o.task_size.value_or(fp.n_samples_used);
  r.fingerprint = std::make_shared<const Fingerprint>(std::move(fp));
  if (!o.gaussian.empty()) r.gaussian = std::make_shared<const GaussianSummary>(load_gaussian(o.gaussian, r.task_id));
  if (!o.keywords.empty()) {
    r.keywords = std::make_shared<const KeywordSet>(make_keyword_set(r.task_id, split_list(o.keywords), r.task_size));
  }
  if (!o.metadata.empty()) r.scenario_metadata = read_json_file(o.metadata);
  r.data_shareable = o.shareable;
  if (!o.overlap_group.empty()) r.overlap_group = o.overlap_group;
  validate(r);

  const auto response = http_post(o.server, "/v1/tasks", service::submit_request_to_json(r, o.overwrite));
  if (o.json_output) {
    std::cout << response.dump(2) << "\n";
  } else {
    std::cout << "submitted " << response.at("task_id").get<std::string>() << "\n";
  }
  return kExitOk;
}

struct QueryOptions {
  std::string server = default_server();
  std::string fingerprint;
  std::string gaussian;
  std::string keywords;
  std::string task_id;
  std::string measure;
  std::size_t k = 5;
  std::string scenario;
  std::string exclude_overlap_group;
  bool json_output = false;
};

int cmd_query(const QueryOptions& o) {
  json body = json::object();
  if (!o.fingerprint.empty()) body["fingerprint"] = base64::encode(encode_fingerprint(load_fingerprint(o.fingerprint)));
  if (!o.gaussian.empty()) body["gaussian"] = base64::encode(encode_gaussian(load_gaussian(o.gaussian)));
  if (!o.keywords.empty()) body["keywords"] = split_list(o.keywords);
  if (body.empty()) throw ValidationError("fingerprint", "give --fingerprint, --gaussian or --keywords");
  if (!o.task_id.empty()) body["task_id"] = o.task_id;
  if (!o.measure.empty()) body["measure"] = o.measure;
  body["k"] = o.k;
  if (!o.scenario.empty()) body["scenario"] = o.scenario;
  if (!o.exclude_overlap_group.empty()) body["exclude_overlap_group"] = o.exclude_overlap_group;

  const auto response = http_post(o.server, "/v1/query", body);
  if (o.json_output) {
    std::cout << response.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << "measure: " << response.at("measure").get<std::string>() << "\n";
  std::printf("%-5s %-32s %-16s %-10s %-9s %s\n", "rank", "task_id", "distance", "task_size", "shareable", "scenarios");
  for (const auto& e : response.at("results")) {
    std::string scenarios;
    for (const auto& [name, _] : e.at("scenario_metadata").items()) scenarios += (scenarios.empty() ? "" : ",") + name;
    std::printf("%-5llu %-32s %-16s %-10llu %-9s %s\n", e.at("rank").get<unsigned long long>(),
                e.at("task_id").get<std::string>().c_str(), format_distance(e.at("distance").get<double>()).c_str(),
                e.at("task_size").get<unsigned long long>(), e.at("data_shareable").get<bool>() ? "yes" : "no",
                scenarios.empty() ? "-" : scenarios.c_str());
  }
  return kExitOk;
}

// --- serve ----------------------------------------------------------------------

int cmd_serve(const std::string& data_dir, const std::string& listen, const std::string& default_measure) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw ValidationError("listen", "expected host:port");
  const auto host = listen.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw ValidationError("listen", "invalid port in " + listen);
  }
  if (port < 0 || port > 65535) throw ValidationError("listen", "port out of range");

  auto store = std::make_shared<TaskStore>(data_dir);
  service::Service svc(store, builtin_measures(), service::ServiceConfig{default_measure});
  httplib::Server server;
  svc.register_routes(server);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw TransportError("cannot listen on " + listen);
  std::cout << "listening on " << host << ":" << bound << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  const bool ok = server.listen_after_bind();
  if (waiter.joinable()) {
    if (ok) {
      waiter.join();
    } else {
      pthread_kill(waiter.native_handle(), SIGTERM);
      waiter.join();
    }
  }
  return ok ? kExitOk : kExitTransport;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"taskprint: task fingerprints and transfer-source selection"};
  app.require_subcommand(1);

  auto positive = CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max());

  FingerprintOptions fo;
  auto* fp_cmd = app.add_subcommand("fingerprint", "compute a fingerprint from a feature matrix file");
  fp_cmd->add_option("--features", fo.features, "feature matrix file (FEATM1)")->required()->check(CLI::ExistingFile);
  fp_cmd->add_option("--task-id", fo.task_id, "task id (default: file stem)");
  fp_cmd->add_option("--measure", fo.measure, "take the binning of this measure");
  auto* bins_opt = fp_cmd->add_option("--bins", fo.bins, "number of bins b (>= 2)");
  auto* lo_opt = fp_cmd->add_option("--range-lo", fo.range_lo, "lower histogram bound");
  auto* hi_opt = fp_cmd->add_option("--range-hi", fo.range_hi, "upper histogram bound");
  fp_cmd->add_option("--out", fo.out, "output fingerprint file")->required();
  fp_cmd->add_option("--format", fo.format, "output format")->check(CLI::IsMember({"binary", "json"}));
  fp_cmd->add_option("--json-out", fo.json_out, "additional JSON dump");
  fp_cmd->add_option("--gaussian-out", fo.gaussian_out, "also write the Gaussian summary (for fid)");

  std::string cmp_source, cmp_target, cmp_measure = "bkld-small-target", cmp_keywords;
  auto* cmp_cmd = app.add_subcommand("compare", "distance between a source and a target task");
  cmp_cmd->add_option("--source", cmp_source, "source fingerprint/Gaussian file, or task id for manual")->required();
  cmp_cmd->add_option("--target", cmp_target, "target fingerprint/Gaussian file, or task id for manual")->required();
  cmp_cmd->add_option("--measure", cmp_measure, "distance measure");
  cmp_cmd->add_option("--keywords", cmp_keywords, "keyword manifest (manual measure)")->check(CLI::ExistingFile);

  RankOptions ro;
  auto* rank_cmd = app.add_subcommand("rank", "rank candidate source tasks for a target");
  rank_cmd->add_option("--target", ro.target, "target file, or task id for manual")->required();
  rank_cmd->add_option("--candidates", ro.candidates, "candidate files, directories (*.tfpr or *.tgsu), or task ids for manual")
      ->required();
  rank_cmd->add_option("--measure", ro.measure, "distance measure");
  rank_cmd->add_option("--k", ro.k, "number of suggestions")->check(positive);
  rank_cmd->add_option("--keywords", ro.keywords, "keyword manifest (manual measure)")->check(CLI::ExistingFile);
  rank_cmd->add_option("--distances-out", ro.distances_out, "write the full ranking as a distances CSV");
  rank_cmd->add_flag("--json", ro.json_output, "machine-readable output");

  EvaluateOptions eo;
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate selectors against measured transfer outcomes");
  eval_cmd->add_option("--outcomes", eo.outcomes, "outcomes CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--distances", eo.distances, "selector distances CSV")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--selectors", eo.selectors, "selectors to evaluate (default: all in the distances CSV)");
  eval_cmd->add_option("--meta-metrics", eo.meta_metrics, "improvement,percentile,regret,gain,weightedtau");
  eval_cmd->add_option("--n-boot", eo.n_boot, "bootstrap samples")->check(positive);
  eval_cmd->add_option("--seed", eo.seed, "bootstrap seed");
  eval_cmd->add_option("--mode", eo.mode, "bootstrap mode")
      ->check(CLI::IsMember({"aggregate_then_rank", "rank_then_mean", "both"}));
  eval_cmd->add_option("--top-k", eo.top_k, "suggestions averaged per setup")->check(positive);
  eval_cmd->add_option("--max-shots", eo.max_shots, "multi-shot curve length")->check(positive);
  eval_cmd->add_option("--out-json", eo.out_json, "report JSON (default: stdout)");
  eval_cmd->add_option("--out-csv", eo.out_csv, "rank frequency CSV");
  eval_cmd->add_option("--out-multishot-csv", eo.out_multishot_csv, "multi-shot curve CSV");

  SubmitOptions so;
  std::uint64_t submit_size = 0;
  auto* submit_cmd = app.add_subcommand("submit", "submit a task record to a knowledge-cloud server");
  submit_cmd->add_option("--server", so.server, "server URL (env TASKPRINT_SERVER)");
  submit_cmd->add_option("--fingerprint", so.fingerprint, "fingerprint file")->required()->check(CLI::ExistingFile);
  submit_cmd->add_option("--task-id", so.task_id, "task id (default: from the fingerprint)");
  submit_cmd->add_option("--gaussian", so.gaussian, "Gaussian summary file")->check(CLI::ExistingFile);
  submit_cmd->add_option("--keywords", so.keywords, "comma-separated keywords");
  auto* size_opt = submit_cmd->add_option("--task-size", submit_size, "training set size (default: fingerprint n)");
  submit_cmd->add_option("--metadata", so.metadata, "scenario metadata JSON file")->check(CLI::ExistingFile);
  submit_cmd->add_flag("--shareable", so.shareable, "training data may be shared");
  submit_cmd->add_option("--overlap-group", so.overlap_group, "overlap group");
  submit_cmd->add_flag("--overwrite", so.overwrite, "replace an existing record");
  submit_cmd->add_flag("--json", so.json_output, "machine-readable output");

  QueryOptions qo;
  auto* query_cmd = app.add_subcommand("query", "query a knowledge-cloud server for transfer candidates");
  query_cmd->add_option("--server", qo.server, "server URL (env TASKPRINT_SERVER)");
  query_cmd->add_option("--fingerprint", qo.fingerprint, "target fingerprint file")->check(CLI::ExistingFile);
  query_cmd->add_option("--gaussian", qo.gaussian, "target Gaussian summary file")->check(CLI::ExistingFile);
  query_cmd->add_option("--keywords", qo.keywords, "comma-separated target keywords");
  query_cmd->add_option("--task-id", qo.task_id, "own task id (excluded from results)");
  query_cmd->add_option("--measure", qo.measure, "distance measure (default: server default)");
  query_cmd->add_option("--k", qo.k, "number of suggestions")->check(positive);
  query_cmd->add_option("--scenario", qo.scenario, "only records with metadata for this scenario")
      ->check(CLI::IsMember({"MODEL_ARCHITECTURE", "PRETRAINING", "AUGMENTATION", "COTRAINING"}));
  query_cmd->add_option("--exclude-overlap-group", qo.exclude_overlap_group, "skip records of this overlap group");
  query_cmd->add_flag("--json", qo.json_output, "machine-readable output");

  std::string data_dir, listen = "127.0.0.1:8080", default_measure = "bkld-small-target";
  auto* serve_cmd = app.add_subcommand("serve", "run the knowledge-cloud HTTP service");
  serve_cmd->add_option("--data-dir", data_dir, "storage directory")->envname("TASKPRINT_DATA_DIR")->required();
  serve_cmd->add_option("--listen", listen, "host:port (port 0 picks a free port)");
  serve_cmd->add_option("--default-measure", default_measure, "measure used when a query names none");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fp_cmd) return cmd_fingerprint(fo, bins_opt->count() > 0, lo_opt->count() > 0, hi_opt->count() > 0);
    if (*cmp_cmd) return cmd_compare(cmp_source, cmp_target, cmp_measure, cmp_keywords);
    if (*rank_cmd) return cmd_rank(ro);
    if (*eval_cmd) return cmd_evaluate(eo);
    if (*submit_cmd) {
      if (size_opt->count() > 0) so.task_size = submit_size;
      return cmd_submit(so);
    }
    if (*query_cmd) return cmd_query(qo);
    if (*serve_cmd) return cmd_serve(data_dir, listen, default_measure);
  } catch (const TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const HttpError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.status >= 500 ? kExitTransport : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
