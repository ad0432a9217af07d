#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "taskprint/errors.hpp"

namespace taskprint {

/// Tolerance on |sum - 1| accepted for probability vectors passed to kld().
inline constexpr double kProbabilityTolerance = 1e-6;

/// Max-shifted softmax; strictly positive for finite input of moderate spread.
inline std::vector<double> softmax(std::span<const double> x) {
  if (x.empty()) throw ValidationError("x", "softmax of an empty vector");
  const double shift = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double total = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) throw ValidationError("x[" + std::to_string(j) + "]", "non-finite softmax input");
    out[j] = std::exp(x[j] - shift);
    total += out[j];
  }
  for (auto& v : out) v /= total;
  return out;
}

/// log(softmax(x)) without materializing the (possibly underflowing) probabilities.
inline std::vector<double> log_softmax(std::span<const double> x) {
  if (x.empty()) throw ValidationError("x", "softmax of an empty vector");
  const double shift = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) throw ValidationError("x[" + std::to_string(j) + "]", "non-finite softmax input");
    total += std::exp(x[j] - shift);
  }
  const double log_norm = shift + std::log(total);
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [log_norm](double v) { return v - log_norm; });
  return out;
}

namespace detail {

// sum_j p_j log(p_j / q_j), 0 log 0 = 0. No validation.
inline double kld_unchecked(std::span<const double> p, std::span<const double> q) {
  double d = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] > 0.0) d += p[j] * std::log(p[j] / q[j]);
  }
  return d;
}

inline double kld_log_unchecked(std::span<const double> p, std::span<const double> log_q) {
  double d = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] > 0.0) d += p[j] * (std::log(p[j]) - log_q[j]);
  }
  return d;
}

inline void require_distribution(std::span<const double> v, const char* name, bool strictly_positive) {
  double sum = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double x = v[j];
    if (!std::isfinite(x) || x < 0.0 || (strictly_positive && x <= 0.0)) {
      throw ValidationError(std::string(name) + "[" + std::to_string(j) + "]",
                            strictly_positive ? "must be strictly positive" : "must be non-negative");
    }
    sum += x;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    throw ValidationError(name, "does not sum to 1 (sum=" + std::to_string(sum) + ")");
  }
}

}  // namespace detail

/// Natural-log Kullback-Leibler divergence KLD(p || q).
inline double kld(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw ValidationError("q", "length mismatch (" + std::to_string(p.size()) + " vs " + std::to_string(q.size()) + ")");
  }
  if (p.empty()) throw ValidationError("p", "empty distribution");
  detail::require_distribution(p, "p", false);
  detail::require_distribution(q, "q", true);
  return detail::kld_unchecked(p, q);
}

}  // namespace taskprint
