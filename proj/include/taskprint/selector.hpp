#pragma once

// argmin / argsort task selection over a candidate pool.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "taskprint/errors.hpp"
#include "taskprint/measures.hpp"

namespace taskprint {

struct CandidatePool {
  std::vector<TaskRepresentation> entries;
  std::set<std::string> exclusions;
};

struct Suggestion {
  std::string task_id;
  double distance = 0.0;
  std::size_t rank = 0;  // 1-based
  std::uint64_t task_size = 0;
};

struct RankedSuggestions {
  std::string measure_name;
  std::vector<Suggestion> entries;

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.task_id);
    return out;
  }
};

/// Total order: distance ascending, then larger task first, then task id.
inline bool selection_order(const Suggestion& a, const Suggestion& b) {
  if (a.distance != b.distance) return a.distance < b.distance;
  if (a.task_size != b.task_size) return a.task_size > b.task_size;
  return a.task_id < b.task_id;
}

/// Sorts scored candidates, keeps the first k and assigns consecutive ranks.
inline RankedSuggestions rank_candidates(std::vector<Suggestion> scored, std::size_t k, std::string measure_name) {
  if (scored.empty()) throw EmptyPoolError("no candidate source tasks remain");
  if (k == 0) throw ValidationError("k", "k must be at least 1");
  for (const auto& s : scored) {
    if (std::isnan(s.distance)) throw ValidationError(s.task_id, "distance is NaN");
  }
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), selection_order);
  scored.resize(keep);
  for (std::size_t i = 0; i < scored.size(); ++i) scored[i].rank = i + 1;
  return RankedSuggestions{std::move(measure_name), std::move(scored)};
}

inline RankedSuggestions select(const TaskRepresentation& target, const CandidatePool& pool,
                                const DistanceMeasure& measure, std::size_t k) {
  if (k == 0) throw ValidationError("k", "k must be at least 1");
  std::vector<Suggestion> scored;
  scored.reserve(pool.entries.size());
  for (const auto& candidate : pool.entries) {
    if (candidate.task_id == target.task_id || pool.exclusions.count(candidate.task_id)) continue;
    measure.require_compatible(candidate, target);
    scored.push_back(Suggestion{candidate.task_id, measure.distance(candidate, target), 0, candidate.task_size});
  }
  if (scored.empty()) throw EmptyPoolError("candidate pool for " + target.task_id + " is empty after exclusions");
  return rank_candidates(std::move(scored), k, measure.name);
}

inline RankedSuggestions full_ranking(const TaskRepresentation& target, const CandidatePool& pool,
                                      const DistanceMeasure& measure) {
  return select(target, pool, measure, std::max<std::size_t>(pool.entries.size(), 1));
}

}  // namespace taskprint
