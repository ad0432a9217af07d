#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "taskprint/errors.hpp"

namespace taskprint {

enum class Orientation { HigherIsBetter, LowerIsBetter };

/// 1-based ranks, rank 1 = best under `orientation`; tied values share their average rank.
inline std::vector<double> average_ranks(std::span<const double> values, Orientation orientation) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  const bool higher = orientation == Orientation::HigherIsBetter;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return higher ? values[a] > values[b] : values[a] < values[b];
  });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = avg;
    i = j;
  }
  return ranks;
}

/// Kendall's tau-b. Returns 0 when either input is constant.
inline double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("y", "kendall tau needs equal-length inputs");
  if (x.size() < 2) throw ValidationError("x", "kendall tau needs at least 2 elements");
  double concordant_minus_discordant = 0.0;
  double untied_x = 0.0;
  double untied_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx != 0.0) untied_x += 1.0;
      if (dy != 0.0) untied_y += 1.0;
      if (dx != 0.0 && dy != 0.0) concordant_minus_discordant += (dx > 0.0) == (dy > 0.0) ? 1.0 : -1.0;
    }
  }
  if (untied_x == 0.0 || untied_y == 0.0) return 0.0;
  return concordant_minus_discordant / std::sqrt(untied_x * untied_y);
}

/// Spearman's rho: Pearson correlation of average ranks. 0 for constant input.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("y", "spearman needs equal-length inputs");
  if (x.size() < 2) throw ValidationError("x", "spearman needs at least 2 elements");
  const auto rx = average_ranks(x, Orientation::LowerIsBetter);
  const auto ry = average_ranks(y, Orientation::LowerIsBetter);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Weighted Kendall tau between two orderings (best first) of the same ids.
///
/// Importance ranks r come from `actual` (0-based). A pair (a, b) weighs
/// 1/(1+r_a) + 1/(1+r_b) and counts +1 when both orderings agree, -1 otherwise.
/// The result is the signed weight sum over the total pair weight.
///
/// Discordant weight is accumulated per element, w_a * (#discordant partners
/// of a), with the partner counts taken from a Fenwick tree in O(n log n).
inline double weighted_tau(std::span<const std::string> predicted, std::span<const std::string> actual) {
  const std::size_t n = actual.size();
  if (predicted.size() != n) throw ValidationError("predicted", "rankings differ in length");
  if (n < 2) throw ValidationError("actual", "weighted tau needs at least 2 elements");
  std::map<std::string, std::size_t> predicted_pos;
  for (std::size_t i = 0; i < n; ++i) {
    if (!predicted_pos.emplace(predicted[i], i).second) {
      throw ValidationError("predicted", "duplicate id " + predicted[i]);
    }
  }
  // pos[r] = predicted position of the element at actual rank r
  std::vector<std::size_t> pos(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto it = predicted_pos.find(actual[r]);
    if (it == predicted_pos.end()) throw ValidationError("actual", "id " + actual[r] + " missing from predicted ranking");
    pos[r] = it->second;
  }
  if (std::set<std::string>(actual.begin(), actual.end()).size() != n) {
    throw ValidationError("actual", "duplicate ids");
  }

  std::vector<std::size_t> tree(n + 1, 0);
  const auto add = [&](std::size_t i) {
    for (++i; i <= n; i += i & (~i + 1)) ++tree[i];
  };
  const auto prefix = [&](std::size_t i) {  // count of inserted positions < i
    std::size_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree[i];
    return s;
  };

  // Discordant partners of rank r: earlier-ranked ids predicted after it plus
  // later-ranked ids predicted before it.
  std::vector<double> discordant_partners(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t earlier_before = prefix(pos[r]);
    const std::size_t earlier_after = r - earlier_before;
    const std::size_t later_before = pos[r] - earlier_before;
    discordant_partners[r] = static_cast<double>(earlier_after + later_before);
    add(pos[r]);
  }

  double discordant_weight = 0.0;
  double total_weight = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double w = 1.0 / (1.0 + static_cast<double>(r));
    discordant_weight += w * discordant_partners[r];
    total_weight += w * static_cast<double>(n - 1);
  }
  return (total_weight - 2.0 * discordant_weight) / total_weight;
}

}  // namespace taskprint
