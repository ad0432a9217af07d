#pragma once

// Replays selectors (given as precomputed distance tables) against an outcome
// table and produces the full evaluation report: bootstrap rank
// distributions per scenario and meta metric, win rates, setup stability
// scores and multi-shot curves.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "taskprint/bootstrap.hpp"
#include "taskprint/errors.hpp"
#include "taskprint/meta_metrics.hpp"
#include "taskprint/outcomes.hpp"
#include "taskprint/rank_correlation.hpp"
#include "taskprint/selector.hpp"

namespace taskprint {

/// Precomputed selector distances: selector -> target -> source -> (distance, source size).
class DistanceTable {
 public:
  struct Entry {
    double distance = 0.0;
    std::uint64_t source_size = 0;
  };

  void add(const std::string& selector, const std::string& target, const std::string& source, Entry entry) {
    if (std::isnan(entry.distance)) throw ValidationError(selector + "/" + target + "/" + source, "NaN distance");
    if (!table_[selector][target].emplace(source, entry).second) {
      throw ValidationError(selector + "/" + target + "/" + source, "duplicate distance row");
    }
  }

  std::vector<std::string> selectors() const {
    std::vector<std::string> out;
    for (const auto& [s, _] : table_) out.push_back(s);
    return out;
  }

  bool has_selector(const std::string& selector) const { return table_.count(selector) != 0; }

  /// Full ranking of `pool` for `target` under `selector`; throws if any distance is missing.
  RankedSuggestions rank(const std::string& selector, const std::string& target,
                         const std::vector<std::string>& pool) const {
    const auto sel = table_.find(selector);
    if (sel == table_.end()) throw NotFoundError("no distances for selector " + selector);
    const auto tgt = sel->second.find(target);
    if (tgt == sel->second.end()) throw NotFoundError("selector " + selector + " has no distances for target " + target);
    std::vector<Suggestion> scored;
    scored.reserve(pool.size());
    for (const auto& source : pool) {
      const auto it = tgt->second.find(source);
      if (it == tgt->second.end()) {
        throw NotFoundError("selector " + selector + " has no distance from source " + source + " to target " + target);
      }
      scored.push_back(Suggestion{source, it->second.distance, 0, it->second.source_size});
    }
    const std::size_t n = scored.size();
    return rank_candidates(std::move(scored), n, selector);
  }

 private:
  std::map<std::string, std::map<std::string, std::map<std::string, Entry>>> table_;
};

/// Reads `selector,target_id,source_id,distance[,source_size]` rows.
inline DistanceTable read_distances_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("distances csv: empty input");
  const auto header = detail::strip_cr(line);
  bool with_size = false;
  if (header == "selector,target_id,source_id,distance,source_size") {
    with_size = true;
  } else if (header != "selector,target_id,source_id,distance") {
    throw FormatError("distances csv line 1: unexpected header \"" + header + "\"");
  }
  DistanceTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const std::string where = "distances csv line " + std::to_string(line_no);
    const auto f = detail::split_csv_line(line);
    const std::size_t expected = with_size ? 5 : 4;
    if (f.size() != expected) {
      throw FormatError(where + ": expected " + std::to_string(expected) + " fields, got " + std::to_string(f.size()));
    }
    if (f[0].empty() || f[1].empty() || f[2].empty()) throw FormatError(where + ": empty identifier");
    DistanceTable::Entry entry{detail::parse_double(f[3], where), 0};
    if (with_size) {
      const long size = detail::parse_int(f[4], where);
      if (size < 0) throw FormatError(where + ": negative source_size");
      entry.source_size = static_cast<std::uint64_t>(size);
    }
    try {
      table.add(f[0], f[1], f[2], entry);
    } catch (const ValidationError& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return table;
}

struct EvaluationConfig {
  std::vector<std::string> selectors;  // empty: every selector in the distance table
  std::vector<MetaMetric> meta_metrics{std::begin(kAllMetaMetrics), std::end(kAllMetaMetrics)};
  std::size_t top_k = 3;      // suggestions averaged per setup
  std::size_t max_shots = 5;  // multi-shot curve k = 1..max_shots
  std::size_t n_boot = 1000;
  std::uint64_t seed = 42;
  std::vector<BootstrapMode> modes{BootstrapMode::AggregateThenRank, BootstrapMode::RankThenMean};
};

struct RankingAnalysis {
  Scenario scenario;
  MetaMetric metric;
  std::size_t n_setups = 0;
  RankDistribution distribution;
};

struct MultiShotPoint {
  Scenario scenario;
  std::string selector;
  MetaMetric metric;
  std::size_t k = 0;
  double mean = 0.0;
  double std = 0.0;  // across repetitions of the per-repetition means
};

struct EvaluationReport {
  EvaluationConfig config;
  std::vector<std::string> selectors;
  std::vector<RankingAnalysis> rankings;
  std::map<std::string, std::map<std::string, double>> win_rates;  // scenario (or "mean") -> selector -> %
  std::map<std::string, std::optional<double>> stability;          // component -> score
  std::vector<MultiShotPoint> multi_shot;
};

namespace detail {

// One evaluated case: a setup scored under one meta metric.
struct EvaluatedCase {
  SetupKey key;
  MetaMetric metric;
  std::vector<double> scores;  // per selector, report order
};

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string case_component(const EvaluatedCase& c, const std::string& component) {
  if (component == "meta_metric") return std::string(to_string(c.metric));
  if (component == "base_metric") return std::string(to_string(c.key.metric));
  if (component == "repetition") return std::to_string(c.key.repetition);
  if (component == "target") return c.key.target_id;
  return std::string(to_string(c.key.scenario));
}

}  // namespace detail

inline EvaluationReport evaluate(const OutcomeTable& outcomes, const DistanceTable& distances, EvaluationConfig config) {
  outcomes.validate();
  if (outcomes.empty()) throw ValidationError("outcomes", "empty outcome table");
  if (config.meta_metrics.empty()) throw ValidationError("meta_metrics", "no meta metrics selected");
  if (config.top_k == 0) throw ValidationError("top_k", "top_k must be at least 1");
  if (config.n_boot == 0) throw ValidationError("n_boot", "n_boot must be at least 1");
  if (config.selectors.empty()) config.selectors = distances.selectors();
  if (config.selectors.empty()) throw ValidationError("selectors", "no selectors to evaluate");
  for (const auto& s : config.selectors) {
    if (!distances.has_selector(s)) throw ValidationError("selectors", "no distances for selector " + s);
  }

  EvaluationReport report;
  report.config = config;
  report.selectors = config.selectors;
  const std::size_t n_sel = config.selectors.size();

  // Full rankings per setup and selector.
  std::map<SetupKey, std::vector<RankedSuggestions>> rankings;
  std::set<Scenario> scenarios;
  for (const auto& [key, setup] : outcomes.setups()) {
    std::vector<std::string> pool;
    for (const auto& [source, _] : setup.sources) pool.push_back(source);
    auto& per_selector = rankings[key];
    for (const auto& s : config.selectors) per_selector.push_back(distances.rank(s, key.target_id, pool));
    scenarios.insert(key.scenario);
  }

  std::vector<detail::EvaluatedCase> cases;
  for (const auto& [key, per_selector] : rankings) {
    for (auto metric : config.meta_metrics) {
      detail::EvaluatedCase c{key, metric, {}};
      for (const auto& ranked : per_selector) {
        if (metric == MetaMetric::WeightedTau) {
          c.scores.push_back(ranked.entries.size() < 2 ? 1.0 : weighted_tau_score(outcomes, key, ranked));
        } else {
          const std::size_t k = std::min(config.top_k, ranked.entries.size());
          c.scores.push_back(multi_shot(outcomes, key, ranked, k, ShotMode::Average, metric));
        }
      }
      cases.push_back(std::move(c));
    }
  }

  // Bootstrap rank distributions per (scenario, meta metric).
  for (auto scenario : scenarios) {
    for (auto metric : config.meta_metrics) {
      ScoreMatrix matrix;
      matrix.selectors = config.selectors;
      for (const auto& c : cases) {
        if (c.key.scenario != scenario || c.metric != metric) continue;
        matrix.setups.push_back(c.key.label());
        matrix.scores.push_back(c.scores);
      }
      for (auto mode : config.modes) {
        report.rankings.push_back(RankingAnalysis{
            scenario, metric, matrix.setups.size(),
            bootstrap_ranking(matrix, config.n_boot, config.seed, mode, orientation(metric))});
      }
    }
  }

  // Win rates; regret is negated so that higher is better everywhere.
  std::map<std::string, double> mean_rates;
  for (auto scenario : scenarios) {
    std::vector<std::map<std::string, double>> scenario_cases;
    for (const auto& c : cases) {
      if (c.key.scenario != scenario) continue;
      std::map<std::string, double> row;
      const double sign = orientation(c.metric) == Orientation::LowerIsBetter ? -1.0 : 1.0;
      for (std::size_t s = 0; s < n_sel; ++s) row[config.selectors[s]] = sign * c.scores[s];
      scenario_cases.push_back(std::move(row));
    }
    auto rates = win_rates(config.selectors, scenario_cases);
    for (const auto& [s, r] : rates) mean_rates[s] += r / static_cast<double>(scenarios.size());
    report.win_rates[std::string(to_string(scenario))] = std::move(rates);
  }
  report.win_rates["mean"] = std::move(mean_rates);

  // Setup stability: selectors ranked by mean within-case rank for each value
  // of one component, then mean pairwise Kendall tau across values.
  std::vector<std::vector<double>> case_ranks;
  case_ranks.reserve(cases.size());
  for (const auto& c : cases) case_ranks.push_back(average_ranks(c.scores, orientation(c.metric)));
  for (const std::string component : {"meta_metric", "base_metric", "repetition", "target", "scenario"}) {
    std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      auto& [sum, count] = sums[detail::case_component(cases[i], component)];
      if (sum.empty()) sum.assign(n_sel, 0.0);
      for (std::size_t s = 0; s < n_sel; ++s) sum[s] += case_ranks[i][s];
      ++count;
    }
    if (sums.size() < 2 || n_sel < 2) {
      report.stability[component] = std::nullopt;
      continue;
    }
    std::map<std::string, std::map<std::string, double>> component_rankings;
    for (const auto& [value, entry] : sums) {
      auto& ranking = component_rankings[value];
      for (std::size_t s = 0; s < n_sel; ++s) {
        ranking[config.selectors[s]] = entry.first[s] / static_cast<double>(entry.second);
      }
    }
    report.stability[component] = stability_score(component_rankings);
  }

  // Best-of-k curves.
  for (auto scenario : scenarios) {
    std::size_t min_pool = std::numeric_limits<std::size_t>::max();
    for (const auto& [key, per_selector] : rankings) {
      if (key.scenario == scenario) min_pool = std::min(min_pool, per_selector.front().entries.size());
    }
    const std::size_t shots = std::min(config.max_shots, min_pool);
    for (std::size_t s = 0; s < n_sel; ++s) {
      for (auto metric : config.meta_metrics) {
        if (metric == MetaMetric::WeightedTau) continue;
        for (std::size_t k = 1; k <= shots; ++k) {
          std::map<int, std::pair<double, std::size_t>> per_repetition;
          double total = 0.0;
          std::size_t count = 0;
          for (const auto& [key, per_selector] : rankings) {
            if (key.scenario != scenario) continue;
            const double v = multi_shot(outcomes, key, per_selector[s], k, ShotMode::Best, metric);
            total += v;
            ++count;
            auto& [rep_sum, rep_count] = per_repetition[key.repetition];
            rep_sum += v;
            ++rep_count;
          }
          const double mean = total / static_cast<double>(count);
          double var = 0.0;
          for (const auto& [_, rep] : per_repetition) {
            const double rep_mean = rep.first / static_cast<double>(rep.second);
            var += (rep_mean - mean) * (rep_mean - mean);
          }
          var /= static_cast<double>(per_repetition.size());
          report.multi_shot.push_back(MultiShotPoint{scenario, config.selectors[s], metric, k, mean, std::sqrt(var)});
        }
      }
    }
  }
  return report;
}

inline nlohmann::json report_to_json(const EvaluationReport& report) {
  using nlohmann::json;
  json meta_metrics = json::array();
  for (auto m : report.config.meta_metrics) meta_metrics.push_back(std::string(to_string(m)));
  json modes = json::array();
  for (auto m : report.config.modes) modes.push_back(std::string(to_string(m)));

  json rankings = json::array();
  for (const auto& r : report.rankings) {
    json selectors = json::array();
    for (const auto& s : r.distribution.selectors) {
      json freqs = json::array();
      for (const auto& [rank, count] : s.rank_frequencies) freqs.push_back({{"rank", rank}, {"count", count}});
      selectors.push_back(
          {{"selector", s.selector}, {"mean_rank", s.mean_rank}, {"std_rank", s.std_rank}, {"rank_frequencies", freqs}});
    }
    rankings.push_back({{"scenario", std::string(to_string(r.scenario))},
                        {"meta_metric", std::string(to_string(r.metric))},
                        {"mode", std::string(to_string(r.distribution.mode))},
                        {"n_setups", r.n_setups},
                        {"selectors", selectors}});
  }

  json stability = json::object();
  for (const auto& [component, score] : report.stability) {
    stability[component] = score ? json(*score) : json(nullptr);
  }

  json multi = json::array();
  for (const auto& p : report.multi_shot) {
    multi.push_back({{"scenario", std::string(to_string(p.scenario))},
                     {"selector", p.selector},
                     {"meta_metric", std::string(to_string(p.metric))},
                     {"mode", "best"},
                     {"k", p.k},
                     {"mean", p.mean},
                     {"std", p.std}});
  }

  return {{"schema_version", 1},
          {"seed", report.config.seed},
          {"n_boot", report.config.n_boot},
          {"top_k", report.config.top_k},
          {"meta_metrics", meta_metrics},
          {"modes", modes},
          {"selectors", report.selectors},
          {"rankings", rankings},
          {"win_rates", report.win_rates},
          {"stability", stability},
          {"multi_shot", multi}};
}

/// Long-format rank frequencies for plotting.
inline std::string rank_frequency_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "scenario,meta_metric,mode,selector,rank,count,frequency,mean_rank,std_rank\n";
  for (const auto& r : report.rankings) {
    for (const auto& s : r.distribution.selectors) {
      for (const auto& [rank, count] : s.rank_frequencies) {
        out << to_string(r.scenario) << ',' << to_string(r.metric) << ',' << to_string(r.distribution.mode) << ','
            << s.selector << ',' << detail::format_number(rank) << ',' << count << ','
            << detail::format_number(static_cast<double>(count) / static_cast<double>(r.distribution.n_boot)) << ','
            << detail::format_number(s.mean_rank) << ',' << detail::format_number(s.std_rank) << '\n';
      }
    }
  }
  return out.str();
}

inline std::string multi_shot_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "scenario,selector,meta_metric,mode,k,mean,std\n";
  for (const auto& p : report.multi_shot) {
    out << to_string(p.scenario) << ',' << p.selector << ',' << to_string(p.metric) << ",best," << p.k << ','
        << detail::format_number(p.mean) << ',' << detail::format_number(p.std) << '\n';
  }
  return out.str();
}

}  // namespace taskprint
