#pragma once

// Binned KL divergence between task fingerprints:
//
//   d(S, T) = sum_i w_i * KLD(p_i || softmax(q_i))
//
// p_i are the target histograms, q_i the source histograms. The softmax keeps
// every source bin strictly positive, so the distance is finite but not zero
// for S == T.

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskprint/divergence.hpp"
#include "taskprint/errors.hpp"
#include "taskprint/fingerprint.hpp"

namespace taskprint {

enum class WeightMode {
  Uniform,           // 1/m per feature
  TargetSoftmax,     // softmax of the target's mean activations
  SourceNormalized,  // L1-normalized mean activations of the source
};

struct WeightSpec {
  WeightMode mode = WeightMode::Uniform;
  friend bool operator==(const WeightSpec&, const WeightSpec&) = default;
};

inline std::string_view to_string(WeightMode mode) {
  switch (mode) {
    case WeightMode::Uniform: return "uniform";
    case WeightMode::TargetSoftmax: return "target_softmax";
    case WeightMode::SourceNormalized: return "source_normalized";
  }
  return "unknown";
}

inline WeightMode weight_mode_from_string(std::string_view name) {
  if (name == "uniform") return WeightMode::Uniform;
  if (name == "target_softmax") return WeightMode::TargetSoftmax;
  if (name == "source_normalized") return WeightMode::SourceNormalized;
  throw ValidationError("weights.mode", "unknown weight mode \"" + std::string(name) + "\"");
}

/// Named bKLD configuration: fingerprint binning plus feature weighting.
struct BkldVariant {
  std::string name;
  BinningConfig binning;
  WeightSpec weights;
};

/// The three reference configurations: small/target (b=100), large/source and
/// large/unweighted (b=1000), all over the default [0, 10] activation range.
inline std::vector<BkldVariant> standard_bkld_variants() {
  return {
      {"bkld-small-target", BinningConfig{100, 0.0, 10.0}, WeightSpec{WeightMode::TargetSoftmax}},
      {"bkld-large-source", BinningConfig{1000, 0.0, 10.0}, WeightSpec{WeightMode::SourceNormalized}},
      {"bkld-large-unweighted", BinningConfig{1000, 0.0, 10.0}, WeightSpec{WeightMode::Uniform}},
  };
}

inline std::vector<double> resolve_weights(const WeightSpec& spec, const Fingerprint& source, const Fingerprint& target) {
  if (source.n_features != target.n_features) {
    throw IncompatibleError("n_features", "weight resolution needs equal feature counts");
  }
  const std::size_t m = target.n_features;
  switch (spec.mode) {
    case WeightMode::Uniform:
      return std::vector<double>(m, 1.0 / static_cast<double>(m));
    case WeightMode::TargetSoftmax:
      return softmax(target.mean_features);
    case WeightMode::SourceNormalized: {
      double l1 = 0.0;
      for (double v : source.mean_features) l1 += std::abs(v);
      if (!(l1 > 0.0)) {
        throw ValidationError("source.mean_features", "all-zero feature average cannot be normalized");
      }
      std::vector<double> w(source.mean_features);
      for (auto& v : w) v /= l1;
      return w;
    }
  }
  throw ValidationError("weights.mode", "unknown weight mode");
}

inline double bkld_distance(const Fingerprint& source, const Fingerprint& target, const WeightSpec& spec) {
  require_compatible(source, target);
  const auto weights = resolve_weights(spec, source, target);
  double total = 0.0;
  for (std::size_t i = 0; i < target.n_features; ++i) {
    if (weights[i] == 0.0) continue;
    const auto smoothed = softmax(source.histogram(i));
    total += weights[i] * detail::kld_unchecked(target.histogram(i), smoothed);
  }
  return total;
}

}  // namespace taskprint
