#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskprint/binary_io.hpp"
#include "taskprint/errors.hpp"

namespace taskprint {

/// Raw backbone activations for one task: n_samples rows of n_features values.
struct FeatureMatrix {
  std::string task_id;
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  std::vector<double> values;  // row-major, n_samples x n_features
  std::string extractor_id;

  double at(std::size_t sample, std::size_t feature) const { return values[sample * n_features + feature]; }

  std::span<const double> row(std::size_t sample) const {
    return std::span<const double>(values).subspan(sample * n_features, n_features);
  }
};

inline void validate(const FeatureMatrix& features) {
  if (features.n_samples == 0) throw ValidationError("n_samples", "feature matrix has no samples");
  if (features.n_features == 0) throw ValidationError("n_features", "feature matrix has no features");
  if (features.values.size() != features.n_samples * features.n_features) {
    throw ValidationError("values", "expected " + std::to_string(features.n_samples * features.n_features) +
                                        " entries, got " + std::to_string(features.values.size()));
  }
  for (std::size_t k = 0; k < features.values.size(); ++k) {
    if (!std::isfinite(features.values[k])) {
      throw ValidationError("values[" + std::to_string(k / features.n_features) + "][" +
                                std::to_string(k % features.n_features) + "]",
                            "non-finite activation");
    }
  }
}

// FeatureMatrix file ("FEATM1"), produced by the extractor:
//   magic "FEATM1", u32 n, u32 m, u16 extractor_id length + UTF-8, n*m f32 row-major.
// The file carries no task id; the caller supplies it.

inline constexpr std::string_view kFeatureMatrixMagic = "FEATM1";

inline std::string encode_feature_matrix(const FeatureMatrix& features) {
  validate(features);
  binary::Writer w;
  w.bytes(kFeatureMatrixMagic);
  w.u32(static_cast<std::uint32_t>(features.n_samples));
  w.u32(static_cast<std::uint32_t>(features.n_features));
  w.short_string(features.extractor_id, "extractor_id");
  for (double v : features.values) w.f32(static_cast<float>(v));
  return std::move(w).take();
}

inline FeatureMatrix decode_feature_matrix(std::string_view bytes, std::string task_id) {
  binary::Reader r(bytes, "feature matrix");
  r.expect_magic(kFeatureMatrixMagic);
  FeatureMatrix out;
  out.task_id = std::move(task_id);
  out.n_samples = r.u32();
  out.n_features = r.u32();
  out.extractor_id = r.short_string();
  const std::uint64_t count = static_cast<std::uint64_t>(out.n_samples) * out.n_features;
  r.require_remaining(count, 4, "activation values");
  out.values.resize(count);
  for (auto& v : out.values) v = r.f32();
  r.expect_end();
  validate(out);
  return out;
}

inline FeatureMatrix load_feature_matrix(const std::filesystem::path& path, std::string task_id) {
  return decode_feature_matrix(binary::read_file(path), std::move(task_id));
}

inline void save_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& features) {
  binary::write_file(path, encode_feature_matrix(features));
}

}  // namespace taskprint
