#pragma once

// Bootstrap ranking of selectors over setups ("aggregate then rank" and
// "rank then mean").

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "taskprint/errors.hpp"
#include "taskprint/rank_correlation.hpp"

namespace taskprint {

/// Score of every selector in every setup: scores[setup][selector].
struct ScoreMatrix {
  std::vector<std::string> selectors;
  std::vector<std::string> setups;
  std::vector<std::vector<double>> scores;
};

inline void validate(const ScoreMatrix& m) {
  if (m.selectors.empty()) throw ValidationError("selectors", "no selectors");
  if (m.setups.empty() || m.scores.empty()) throw ValidationError("setups", "no setups");
  if (m.scores.size() != m.setups.size()) throw ValidationError("scores", "one score row per setup required");
  for (std::size_t s = 0; s < m.scores.size(); ++s) {
    if (m.scores[s].size() != m.selectors.size()) {
      throw ValidationError("scores[" + m.setups[s] + "]", "incomplete score row");
    }
    for (double v : m.scores[s]) {
      if (!std::isfinite(v)) throw ValidationError("scores[" + m.setups[s] + "]", "non-finite score");
    }
  }
}

enum class BootstrapMode { AggregateThenRank, RankThenMean };

inline std::string_view to_string(BootstrapMode m) {
  return m == BootstrapMode::AggregateThenRank ? "aggregate_then_rank" : "rank_then_mean";
}

struct SelectorRankStats {
  std::string selector;
  std::map<double, std::size_t> rank_frequencies;  // final rank -> count over resamples
  double mean_rank = 0.0;
  double std_rank = 0.0;  // population standard deviation over resamples
};

struct RankDistribution {
  BootstrapMode mode = BootstrapMode::AggregateThenRank;
  std::size_t n_boot = 0;
  std::uint64_t seed = 0;
  std::vector<SelectorRankStats> selectors;  // same order as the ScoreMatrix
};

namespace detail {

/// Independent stream per resample, derived from (seed, resample index).
inline std::mt19937_64 resample_engine(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xFFFFFFFFu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index & 0xFFFFFFFFu), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Uniform integer in [0, n) by rejection; identical on every standard library.
inline std::size_t bounded_draw(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return static_cast<std::size_t>(x % range);
}

}  // namespace detail

inline RankDistribution bootstrap_ranking(const ScoreMatrix& matrix, std::size_t n_boot, std::uint64_t seed,
                                          BootstrapMode mode, Orientation orient = Orientation::HigherIsBetter) {
  validate(matrix);
  if (n_boot == 0) throw ValidationError("n_boot", "need at least one bootstrap sample");
  const std::size_t n_sel = matrix.selectors.size();
  const std::size_t n_setups = matrix.setups.size();

  // Per-setup ranks are fixed, so compute them once for rank-then-mean.
  std::vector<std::vector<double>> setup_ranks;
  if (mode == BootstrapMode::RankThenMean) {
    setup_ranks.reserve(n_setups);
    for (const auto& row : matrix.scores) setup_ranks.push_back(average_ranks(row, orient));
  }

  RankDistribution out{mode, n_boot, seed, {}};
  for (const auto& s : matrix.selectors) out.selectors.push_back(SelectorRankStats{s, {}, 0.0, 0.0});
  std::vector<double> rank_sum(n_sel, 0.0);
  std::vector<double> rank_sq_sum(n_sel, 0.0);
  std::vector<double> aggregate(n_sel);

  for (std::size_t b = 0; b < n_boot; ++b) {
    auto rng = detail::resample_engine(seed, b);
    std::fill(aggregate.begin(), aggregate.end(), 0.0);
    for (std::size_t d = 0; d < n_setups; ++d) {
      const std::size_t pick = detail::bounded_draw(rng, n_setups);
      const auto& row = mode == BootstrapMode::RankThenMean ? setup_ranks[pick] : matrix.scores[pick];
      for (std::size_t s = 0; s < n_sel; ++s) aggregate[s] += row[s];
    }
    for (auto& v : aggregate) v /= static_cast<double>(n_setups);
    const auto final_ranks =
        average_ranks(aggregate, mode == BootstrapMode::RankThenMean ? Orientation::LowerIsBetter : orient);
    for (std::size_t s = 0; s < n_sel; ++s) {
      ++out.selectors[s].rank_frequencies[final_ranks[s]];
      rank_sum[s] += final_ranks[s];
      rank_sq_sum[s] += final_ranks[s] * final_ranks[s];
    }
  }
  for (std::size_t s = 0; s < n_sel; ++s) {
    const double n = static_cast<double>(n_boot);
    const double mean = rank_sum[s] / n;
    out.selectors[s].mean_rank = mean;
    out.selectors[s].std_rank = std::sqrt(std::max(0.0, rank_sq_sum[s] / n - mean * mean));
  }
  return out;
}

}  // namespace taskprint
