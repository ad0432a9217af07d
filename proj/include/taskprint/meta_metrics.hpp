#pragma once

// Scores of a selector's choice against the measured transfer outcomes O of a
// setup: improvement, gain, percentile, regret and weighted tau, plus their
// multi-shot aggregation, win rates and the setup stability score.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskprint/errors.hpp"
#include "taskprint/outcomes.hpp"
#include "taskprint/rank_correlation.hpp"
#include "taskprint/selector.hpp"

namespace taskprint {

enum class MetaMetric { Improvement, Percentile, Regret, Gain, WeightedTau };

inline constexpr MetaMetric kAllMetaMetrics[] = {MetaMetric::Improvement, MetaMetric::Percentile, MetaMetric::Regret,
                                                 MetaMetric::Gain, MetaMetric::WeightedTau};

inline std::string_view to_string(MetaMetric m) {
  switch (m) {
    case MetaMetric::Improvement: return "improvement";
    case MetaMetric::Percentile: return "percentile";
    case MetaMetric::Regret: return "regret";
    case MetaMetric::Gain: return "gain";
    case MetaMetric::WeightedTau: return "weightedtau";
  }
  return "unknown";
}

inline std::optional<MetaMetric> meta_metric_from_string(std::string_view name) {
  for (auto m : kAllMetaMetrics) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

/// Regret is the only meta metric where lower is better.
inline Orientation orientation(MetaMetric m) {
  return m == MetaMetric::Regret ? Orientation::LowerIsBetter : Orientation::HigherIsBetter;
}

// --- value-level definitions ------------------------------------------------

inline double improvement(double selected, double baseline) { return selected - baseline; }

/// 0 for negative transfer (strictly below baseline), 1 otherwise.
inline int gain(double selected, double baseline) { return selected < baseline ? 0 : 1; }

/// |{o in O : o <= selected}| / |O|.
inline double percentile(std::span<const double> outcomes, double selected) {
  if (outcomes.empty()) throw ValidationError("outcomes", "percentile over an empty outcome set");
  const auto at_most = std::count_if(outcomes.begin(), outcomes.end(), [selected](double o) { return o <= selected; });
  return static_cast<double>(at_most) / static_cast<double>(outcomes.size());
}

/// (max O - selected) / (1 - selected).
inline double regret(std::span<const double> outcomes, double selected) {
  if (outcomes.empty()) throw ValidationError("outcomes", "regret over an empty outcome set");
  const double best = *std::max_element(outcomes.begin(), outcomes.end());
  if (selected >= best) return 0.0;
  if (selected >= 1.0) throw ValidationError("selected", "regret undefined for a perfect selected outcome below max(O)");
  return (best - selected) / (1.0 - selected);
}

// --- table-level definitions --------------------------------------------------

inline double improvement(const OutcomeTable& table, const SetupKey& key, const std::string& source_id) {
  return improvement(table.value(key, source_id), table.baseline(key));
}

inline int gain(const OutcomeTable& table, const SetupKey& key, const std::string& source_id) {
  return gain(table.value(key, source_id), table.baseline(key));
}

inline double percentile(const OutcomeTable& table, const SetupKey& key, const std::string& source_id) {
  return percentile(table.setup(key).values(), table.value(key, source_id));
}

inline double regret(const OutcomeTable& table, const SetupKey& key, const std::string& source_id) {
  return regret(table.setup(key).values(), table.value(key, source_id));
}

/// Single-choice meta metric; weightedtau is a whole-ranking metric and is rejected here.
inline double meta_metric(MetaMetric metric, const OutcomeTable& table, const SetupKey& key, const std::string& source_id) {
  switch (metric) {
    case MetaMetric::Improvement: return improvement(table, key, source_id);
    case MetaMetric::Percentile: return percentile(table, key, source_id);
    case MetaMetric::Regret: return regret(table, key, source_id);
    case MetaMetric::Gain: return gain(table, key, source_id);
    case MetaMetric::WeightedTau: break;
  }
  throw ValidationError("metric", "weightedtau scores a full ranking, not a single choice");
}

/// Pool ids of a setup ordered by measured outcome, best first (ties by id).
inline std::vector<std::string> actual_ranking(const OutcomeTable& table, const SetupKey& key) {
  const auto& setup = table.setup(key);
  std::vector<std::pair<std::string, double>> items(setup.sources.begin(), setup.sources.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& [id, _] : items) out.push_back(std::move(id));
  return out;
}

/// Weighted tau between the selector's full ranking and the outcome ranking.
/// The suggestions must cover exactly the setup's source pool.
inline double weighted_tau_score(const OutcomeTable& table, const SetupKey& key, const RankedSuggestions& suggestions) {
  const auto actual = actual_ranking(table, key);
  const auto predicted = suggestions.ids();
  return weighted_tau(predicted, actual);
}

enum class ShotMode { Average, Best };

inline std::string_view to_string(ShotMode m) { return m == ShotMode::Average ? "average" : "best"; }

/// Meta metric over the top-k suggestions: mean over all k (AVERAGE) or of the
/// suggestion with the highest measured outcome (BEST).
inline double multi_shot(const OutcomeTable& table, const SetupKey& key, const RankedSuggestions& suggestions,
                         std::size_t k, ShotMode mode, MetaMetric metric) {
  if (k == 0) throw ValidationError("k", "k must be at least 1");
  if (k > suggestions.entries.size()) {
    throw ValidationError("k", "k=" + std::to_string(k) + " exceeds the " + std::to_string(suggestions.entries.size()) +
                                   " available suggestions");
  }
  if (mode == ShotMode::Average) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += meta_metric(metric, table, key, suggestions.entries[i].task_id);
    return sum / static_cast<double>(k);
  }
  std::size_t best = 0;
  double best_value = table.value(key, suggestions.entries[0].task_id);
  for (std::size_t i = 1; i < k; ++i) {
    const double v = table.value(key, suggestions.entries[i].task_id);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return meta_metric(metric, table, key, suggestions.entries[best].task_id);
}

/// Percentage of cases in which each selector attains the best value; every
/// tied selector is credited, so percentages can sum above 100.
inline std::map<std::string, double> win_rates(const std::vector<std::string>& selectors,
                                               const std::vector<std::map<std::string, double>>& cases,
                                               Orientation orient = Orientation::HigherIsBetter) {
  if (selectors.empty()) throw ValidationError("selectors", "no selectors");
  if (cases.empty()) throw ValidationError("cases", "no cases");
  std::map<std::string, double> wins;
  for (const auto& s : selectors) wins[s] = 0.0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    std::optional<double> best;
    for (const auto& s : selectors) {
      const auto it = cases[c].find(s);
      if (it == cases[c].end()) {
        throw ValidationError("cases[" + std::to_string(c) + "]", "missing evaluation for selector " + s);
      }
      const double v = it->second;
      if (!best || (orient == Orientation::HigherIsBetter ? v > *best : v < *best)) best = v;
    }
    for (const auto& s : selectors) {
      if (cases[c].at(s) == *best) wins[s] += 1.0;
    }
  }
  for (auto& [_, w] : wins) w = 100.0 * w / static_cast<double>(cases.size());
  return wins;
}

/// Mean pairwise Kendall tau between the selector rankings obtained for each
/// value of one setup component. Each ranking maps selector -> rank position.
inline double stability_score(const std::map<std::string, std::map<std::string, double>>& rankings) {
  if (rankings.size() < 2) throw ValidationError("rankings", "need at least 2 component values");
  const auto& reference = rankings.begin()->second;
  if (reference.size() < 2) throw ValidationError("rankings", "need at least 2 selectors");
  std::vector<std::vector<double>> columns;
  for (const auto& [value, ranking] : rankings) {
    if (ranking.size() != reference.size()) {
      throw ValidationError("rankings[" + value + "]", "incomplete selector ranking");
    }
    std::vector<double> column;
    for (const auto& [selector, _] : reference) {
      const auto it = ranking.find(selector);
      if (it == ranking.end()) throw ValidationError("rankings[" + value + "]", "missing selector " + selector);
      column.push_back(it->second);
    }
    columns.push_back(std::move(column));
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < columns.size(); ++a) {
    for (std::size_t b = a + 1; b < columns.size(); ++b) {
      total += kendall_tau(columns[a], columns[b]);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

/// Monte-Carlo mean percentile of the best of k distinct uniformly random picks
/// from pools of `pool_size` outcomes.
inline double random_selector_percentile(std::size_t pool_size, std::size_t k, std::size_t trials, std::uint64_t seed) {
  if (k == 0 || k > pool_size) throw ValidationError("k", "need 1 <= k <= pool_size");
  if (trials == 0) throw ValidationError("trials", "need at least one trial");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> outcome(0.0, 1.0);
  std::vector<double> outcomes(pool_size);
  std::vector<std::size_t> index(pool_size);
  double total = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& o : outcomes) o = outcome(rng);
    std::iota(index.begin(), index.end(), 0);
    double best = -1.0;
    for (std::size_t i = 0; i < k; ++i) {  // partial Fisher-Yates
      std::uniform_int_distribution<std::size_t> pick(i, pool_size - 1);
      std::swap(index[i], index[pick(rng)]);
      best = std::max(best, outcomes[index[i]]);
    }
    total += percentile(outcomes, best);
  }
  return total / static_cast<double>(trials);
}

}  // namespace taskprint
