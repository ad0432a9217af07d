#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "taskprint/binary_io.hpp"
#include "taskprint/errors.hpp"
#include "taskprint/feature_matrix.hpp"

namespace taskprint {

/// Uniform bins over [range_lo, range_hi]; values outside are clamped into
/// the first/last bin.
struct BinningConfig {
  std::uint32_t n_bins = 100;
  double range_lo = 0.0;
  double range_hi = 10.0;

  friend bool operator==(const BinningConfig&, const BinningConfig&) = default;

  double bin_width() const { return (range_hi - range_lo) / n_bins; }

  std::size_t bin_of(double value) const {
    const double pos = (value - range_lo) / (range_hi - range_lo) * static_cast<double>(n_bins);
    if (!(pos > 0.0)) return 0;
    if (pos >= static_cast<double>(n_bins)) return n_bins - 1;
    return static_cast<std::size_t>(pos);
  }
};

inline void validate(const BinningConfig& binning) {
  if (binning.n_bins < 2) throw ValidationError("binning.n_bins", "need at least 2 bins");
  if (!std::isfinite(binning.range_lo) || !std::isfinite(binning.range_hi)) {
    throw ValidationError("binning.range", "range bounds must be finite");
  }
  if (!(binning.range_hi > binning.range_lo)) {
    throw ValidationError("binning.range_hi", "range_hi must exceed range_lo");
  }
}

/// Shareable task representation: one normalized histogram per feature plus
/// the per-feature activation mean.
struct Fingerprint {
  std::string task_id;
  std::uint32_t n_features = 0;
  BinningConfig binning;
  std::vector<double> histograms;  // n_features x n_bins, feature-major
  std::vector<double> mean_features;
  std::uint64_t n_samples_used = 0;
  std::string extractor_id;

  std::uint32_t n_bins() const noexcept { return binning.n_bins; }

  std::span<const double> histogram(std::size_t feature) const {
    return std::span<const double>(histograms).subspan(feature * binning.n_bins, binning.n_bins);
  }
  std::span<double> histogram(std::size_t feature) {
    return std::span<double>(histograms).subspan(feature * binning.n_bins, binning.n_bins);
  }

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

/// Row-sum tolerance for fingerprints read back from the f32 file format.
inline constexpr double kStoredRowSumTolerance = 1e-6;

inline void validate(const Fingerprint& fp, double row_sum_tolerance = kStoredRowSumTolerance) {
  validate(fp.binning);
  if (fp.n_features == 0) throw ValidationError("n_features", "fingerprint has no features");
  const std::size_t b = fp.binning.n_bins;
  if (fp.histograms.size() != static_cast<std::size_t>(fp.n_features) * b) {
    throw ValidationError("histograms", "expected n_features*n_bins entries");
  }
  if (fp.mean_features.size() != fp.n_features) {
    throw ValidationError("mean_features", "length must equal n_features");
  }
  for (std::size_t i = 0; i < fp.n_features; ++i) {
    double sum = 0.0;
    const auto row = fp.histogram(i);
    for (std::size_t j = 0; j < b; ++j) {
      const double v = row[j];
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw ValidationError("histograms[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                              "entry outside [0,1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > row_sum_tolerance) {
      throw ValidationError("histograms[" + std::to_string(i) + "]", "row does not sum to 1");
    }
    if (!std::isfinite(fp.mean_features[i])) {
      throw ValidationError("mean_features[" + std::to_string(i) + "]", "non-finite mean");
    }
  }
}

/// Throws IncompatibleError naming the first mismatched field.
inline void require_compatible(const Fingerprint& source, const Fingerprint& target) {
  if (source.n_features != target.n_features) {
    throw IncompatibleError("n_features", "fingerprints differ in n_features (" + std::to_string(source.n_features) +
                                              " vs " + std::to_string(target.n_features) + ")");
  }
  if (source.binning.n_bins != target.binning.n_bins) {
    throw IncompatibleError("n_bins", "fingerprints differ in n_bins (" + std::to_string(source.binning.n_bins) +
                                          " vs " + std::to_string(target.binning.n_bins) + ")");
  }
  if (source.binning.range_lo != target.binning.range_lo || source.binning.range_hi != target.binning.range_hi) {
    throw IncompatibleError("range", "fingerprints differ in binning range");
  }
  if (source.extractor_id != target.extractor_id) {
    throw IncompatibleError("extractor_id", "fingerprints differ in extractor_id (\"" + source.extractor_id +
                                                "\" vs \"" + target.extractor_id + "\")");
  }
}

inline bool compatible(const Fingerprint& a, const Fingerprint& b) noexcept {
  return a.n_features == b.n_features && a.binning == b.binning && a.extractor_id == b.extractor_id;
}

inline Fingerprint compute_fingerprint(const FeatureMatrix& features, const BinningConfig& binning) {
  validate(features);
  validate(binning);
  const std::size_t n = features.n_samples;
  const std::size_t m = features.n_features;
  const std::size_t b = binning.n_bins;

  std::vector<std::uint64_t> counts(m * b, 0);
  std::vector<double> sums(m, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = features.row(k);
    for (std::size_t i = 0; i < m; ++i) {
      ++counts[i * b + binning.bin_of(row[i])];
      sums[i] += row[i];
    }
  }

  Fingerprint fp;
  fp.task_id = features.task_id;
  fp.n_features = static_cast<std::uint32_t>(m);
  fp.binning = binning;
  fp.n_samples_used = n;
  fp.extractor_id = features.extractor_id;
  fp.histograms.resize(m * b);
  std::transform(counts.begin(), counts.end(), fp.histograms.begin(),
                 [n](std::uint64_t c) { return static_cast<double>(c) / static_cast<double>(n); });
  fp.mean_features.resize(m);
  for (std::size_t i = 0; i < m; ++i) fp.mean_features[i] = sums[i] / static_cast<double>(n);
  return fp;
}

// ---------------------------------------------------------------------------
// Fingerprint file ("TFPR", version 1), little-endian:
//   "TFPR" 0x01, u32 m, u32 b, f64 range_lo, f64 range_hi, u64 n_samples_used,
//   u16+UTF-8 task_id, u16+UTF-8 extractor_id, m*b f32 histograms (feature-major),
//   m f32 mean_features.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kFingerprintMagic = "TFPR";
inline constexpr std::uint8_t kFingerprintVersion = 1;

inline std::string encode_fingerprint(const Fingerprint& fp) {
  validate(fp);
  binary::Writer w;
  w.bytes(kFingerprintMagic);
  w.u8(kFingerprintVersion);
  w.u32(fp.n_features);
  w.u32(fp.binning.n_bins);
  w.f64(fp.binning.range_lo);
  w.f64(fp.binning.range_hi);
  w.u64(fp.n_samples_used);
  w.short_string(fp.task_id, "task_id");
  w.short_string(fp.extractor_id, "extractor_id");
  for (double v : fp.histograms) w.f32(static_cast<float>(v));
  for (double v : fp.mean_features) w.f32(static_cast<float>(v));
  return std::move(w).take();
}

inline Fingerprint decode_fingerprint(std::string_view bytes) {
  binary::Reader r(bytes, "fingerprint");
  r.expect_magic(kFingerprintMagic);
  if (const auto version = r.u8(); version != kFingerprintVersion) {
    throw FormatError("fingerprint: unsupported version " + std::to_string(version));
  }
  Fingerprint fp;
  fp.n_features = r.u32();
  fp.binning.n_bins = r.u32();
  fp.binning.range_lo = r.f64();
  fp.binning.range_hi = r.f64();
  fp.n_samples_used = r.u64();
  fp.task_id = r.short_string();
  fp.extractor_id = r.short_string();
  const std::uint64_t cells = static_cast<std::uint64_t>(fp.n_features) * fp.binning.n_bins;
  r.require_remaining(cells + fp.n_features, 4, "histogram data");
  fp.histograms.resize(cells);
  for (auto& v : fp.histograms) v = r.f32();
  fp.mean_features.resize(fp.n_features);
  for (auto& v : fp.mean_features) v = r.f32();
  r.expect_end();
  validate(fp);
  return fp;
}

/// True when the bytes start with the fingerprint magic.
inline bool looks_like_fingerprint(std::string_view bytes) noexcept {
  return bytes.substr(0, kFingerprintMagic.size()) == kFingerprintMagic;
}

// JSON debug dump. Values are written as doubles, so the dump is lossless
// with respect to the in-memory fingerprint.

inline nlohmann::json fingerprint_to_json(const Fingerprint& fp) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < fp.n_features; ++i) {
    const auto h = fp.histogram(i);
    rows.push_back(std::vector<double>(h.begin(), h.end()));
  }
  return {
      {"task_id", fp.task_id},
      {"n_features", fp.n_features},
      {"n_bins", fp.binning.n_bins},
      {"binning", {{"n_bins", fp.binning.n_bins}, {"range_lo", fp.binning.range_lo}, {"range_hi", fp.binning.range_hi}}},
      {"histograms", std::move(rows)},
      {"mean_features", fp.mean_features},
      {"n_samples_used", fp.n_samples_used},
      {"extractor_id", fp.extractor_id},
  };
}

inline Fingerprint fingerprint_from_json(const nlohmann::json& j) {
  try {
    Fingerprint fp;
    fp.task_id = j.at("task_id").get<std::string>();
    fp.n_features = j.at("n_features").get<std::uint32_t>();
    const auto& binning = j.at("binning");
    fp.binning.n_bins = binning.at("n_bins").get<std::uint32_t>();
    fp.binning.range_lo = binning.at("range_lo").get<double>();
    fp.binning.range_hi = binning.at("range_hi").get<double>();
    if (j.at("n_bins").get<std::uint32_t>() != fp.binning.n_bins) {
      throw ValidationError("n_bins", "disagrees with binning.n_bins");
    }
    for (const auto& row : j.at("histograms")) {
      if (row.size() != fp.binning.n_bins) throw ValidationError("histograms", "row length must equal n_bins");
      for (const auto& v : row) fp.histograms.push_back(v.get<double>());
    }
    fp.mean_features = j.at("mean_features").get<std::vector<double>>();
    fp.n_samples_used = j.at("n_samples_used").get<std::uint64_t>();
    fp.extractor_id = j.at("extractor_id").get<std::string>();
    validate(fp);
    return fp;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("fingerprint json: ") + e.what());
  }
}

/// Loads either the binary format or the JSON dump, detected by content.
inline Fingerprint load_fingerprint(const std::filesystem::path& path) {
  const auto bytes = binary::read_file(path);
  if (looks_like_fingerprint(bytes)) return decode_fingerprint(bytes);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception&) {
    throw FormatError(path.string() + ": not a fingerprint (bad magic)");
  }
  return fingerprint_from_json(j);
}

inline void save_fingerprint(const std::filesystem::path& path, const Fingerprint& fp) {
  binary::write_file(path, encode_fingerprint(fp));
}

}  // namespace taskprint
