#pragma once

// Reference task distances: Frechet distance between Gaussian feature
// summaries (FID), KL divergence of averaged features (P2L), per-neuron
// histogram earth mover's distance (VDNA-style) and keyword IoU (manual).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "taskprint/binary_io.hpp"
#include "taskprint/divergence.hpp"
#include "taskprint/errors.hpp"
#include "taskprint/feature_matrix.hpp"
#include "taskprint/fingerprint.hpp"

namespace taskprint {

// ---------------------------------------------------------------------------
// Gaussian summaries and FID
// ---------------------------------------------------------------------------

struct GaussianSummary {
  std::string task_id;
  std::vector<double> mean;
  std::vector<double> covariance;  // m x m, row-major
  std::uint64_t n_samples = 0;

  std::size_t dim() const noexcept { return mean.size(); }
  double cov(std::size_t r, std::size_t c) const { return covariance[r * mean.size() + c]; }

  friend bool operator==(const GaussianSummary&, const GaussianSummary&) = default;
};

inline constexpr double kCovarianceSymmetryTolerance = 1e-8;

inline void validate(const GaussianSummary& g) {
  const std::size_t m = g.mean.size();
  if (m == 0) throw ValidationError("mean", "empty Gaussian summary");
  if (g.covariance.size() != m * m) throw ValidationError("covariance", "must be m x m");
  for (std::size_t r = 0; r < m; ++r) {
    if (!std::isfinite(g.mean[r])) throw ValidationError("mean[" + std::to_string(r) + "]", "non-finite");
    for (std::size_t c = 0; c < m; ++c) {
      const double v = g.cov(r, c);
      if (!std::isfinite(v)) throw ValidationError("covariance", "non-finite entry");
      if (c > r && std::abs(v - g.cov(c, r)) > kCovarianceSymmetryTolerance) {
        throw ValidationError("covariance[" + std::to_string(r) + "][" + std::to_string(c) + "]", "not symmetric");
      }
    }
  }
}

/// Column means and unbiased covariance, accumulated in a single Welford pass.
inline GaussianSummary gaussian_summary(const FeatureMatrix& features) {
  validate(features);
  if (features.n_samples < 2) throw ValidationError("n_samples", "covariance needs at least 2 samples");
  const std::size_t m = features.n_features;
  std::vector<double> mean(m, 0.0);
  std::vector<double> comoment(m * m, 0.0);
  std::vector<double> delta(m);
  for (std::size_t k = 0; k < features.n_samples; ++k) {
    const auto row = features.row(k);
    const double count = static_cast<double>(k + 1);
    for (std::size_t i = 0; i < m; ++i) {
      delta[i] = row[i] - mean[i];
      mean[i] += delta[i] / count;
    }
    // comoment += delta_old * (x - mean_new)^T
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = r; c < m; ++c) comoment[r * m + c] += delta[r] * (row[c] - mean[c]);
    }
  }
  GaussianSummary g;
  g.task_id = features.task_id;
  g.mean = std::move(mean);
  g.n_samples = features.n_samples;
  g.covariance.resize(m * m);
  const double denom = static_cast<double>(features.n_samples - 1);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = r; c < m; ++c) {
      g.covariance[r * m + c] = g.covariance[c * m + r] = comoment[r * m + c] / denom;
    }
  }
  return g;
}

namespace detail {

inline Eigen::MatrixXd to_matrix(const GaussianSummary& g) {
  const auto m = static_cast<Eigen::Index>(g.dim());
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) out(r, c) = g.covariance[static_cast<std::size_t>(r * m + c)];
  }
  return 0.5 * (out + out.transpose());
}

// Eigenvalues of a symmetric matrix with small negative values clamped to 0.
// Values below -1e-8 * max(1, |lambda_max|) mean the input is not PSD.
inline Eigen::VectorXd clamped_eigenvalues(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& solver,
                                           const char* what) {
  if (solver.info() != Eigen::Success) throw Error(std::string("FID: eigendecomposition of ") + what + " failed");
  Eigen::VectorXd values = solver.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < 0.0) {
      if (values(i) < -1e-8 * scale) {
        throw Error(std::string("FID: matrix square root failed, ") + what + " has eigenvalue " +
                    std::to_string(values(i)) + " (not positive semi-definite)");
      }
      values(i) = 0.0;
    }
  }
  return values;
}

}  // namespace detail

/// |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa Sb)^{1/2}).
///
/// tr((Sa Sb)^{1/2}) is evaluated through the symmetric matrix
/// Sa^{1/2} Sb Sa^{1/2}, which is similar to Sa Sb and PSD.
inline double fid_distance(const GaussianSummary& a, const GaussianSummary& b) {
  validate(a);
  validate(b);
  if (a.dim() != b.dim()) {
    throw IncompatibleError("dimension", "Gaussian summaries differ in dimension (" + std::to_string(a.dim()) +
                                             " vs " + std::to_string(b.dim()) + ")");
  }
  const auto m = static_cast<Eigen::Index>(a.dim());
  const Eigen::Map<const Eigen::VectorXd> mu_a(a.mean.data(), m);
  const Eigen::Map<const Eigen::VectorXd> mu_b(b.mean.data(), m);
  const Eigen::MatrixXd cov_a = detail::to_matrix(a);
  const Eigen::MatrixXd cov_b = detail::to_matrix(b);

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_a(cov_a);
  const Eigen::VectorXd lambda_a = detail::clamped_eigenvalues(eig_a, "covariance a");
  const Eigen::MatrixXd sqrt_a =
      eig_a.eigenvectors() * lambda_a.cwiseSqrt().asDiagonal() * eig_a.eigenvectors().transpose();
  Eigen::MatrixXd product = sqrt_a * cov_b * sqrt_a;
  product = 0.5 * (product + product.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_p(product, Eigen::EigenvaluesOnly);
  const double trace_sqrt = detail::clamped_eigenvalues(eig_p, "covariance product").cwiseSqrt().sum();

  const double value = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * trace_sqrt;
  return std::max(0.0, value);
}

// Gaussian summary file ("TGSU", version 1), little-endian:
//   "TGSU" 0x01, u32 m, u64 n_samples, m f64 means, m*m f64 covariance row-major.
// The task id is not part of the file.

inline constexpr std::string_view kGaussianMagic = "TGSU";
inline constexpr std::uint8_t kGaussianVersion = 1;

inline std::string encode_gaussian(const GaussianSummary& g) {
  validate(g);
  binary::Writer w;
  w.bytes(kGaussianMagic);
  w.u8(kGaussianVersion);
  w.u32(static_cast<std::uint32_t>(g.dim()));
  w.u64(g.n_samples);
  for (double v : g.mean) w.f64(v);
  for (double v : g.covariance) w.f64(v);
  return std::move(w).take();
}

inline GaussianSummary decode_gaussian(std::string_view bytes, std::string task_id = {}) {
  binary::Reader r(bytes, "gaussian summary");
  r.expect_magic(kGaussianMagic);
  if (const auto version = r.u8(); version != kGaussianVersion) {
    throw FormatError("gaussian summary: unsupported version " + std::to_string(version));
  }
  GaussianSummary g;
  g.task_id = std::move(task_id);
  const std::uint64_t m = r.u32();
  g.n_samples = r.u64();
  r.require_remaining(m + m * m, 8, "moments");
  g.mean.resize(m);
  for (auto& v : g.mean) v = r.f64();
  g.covariance.resize(m * m);
  for (auto& v : g.covariance) v = r.f64();
  r.expect_end();
  validate(g);
  return g;
}

inline bool looks_like_gaussian(std::string_view bytes) noexcept {
  return bytes.substr(0, kGaussianMagic.size()) == kGaussianMagic;
}

inline GaussianSummary load_gaussian(const std::filesystem::path& path, std::string task_id = {}) {
  return decode_gaussian(binary::read_file(path), std::move(task_id));
}

inline void save_gaussian(const std::filesystem::path& path, const GaussianSummary& g) {
  binary::write_file(path, encode_gaussian(g));
}

// ---------------------------------------------------------------------------
// Histogram-based baselines
// ---------------------------------------------------------------------------

/// KLD(softmax(target mean) || softmax(source mean)), evaluated in log space.
inline double p2l_distance(const Fingerprint& source, const Fingerprint& target) {
  if (source.n_features != target.n_features || source.mean_features.size() != target.mean_features.size()) {
    throw IncompatibleError("n_features", "P2L needs feature averages of equal length");
  }
  const auto p = softmax(target.mean_features);
  const auto log_q = log_softmax(source.mean_features);
  return std::max(0.0, detail::kld_log_unchecked(p, log_q));
}

/// 1-D earth mover's distance between two histograms with unit bin width.
inline double emd1(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw IncompatibleError("n_bins", "histograms differ in length");
  double cdf_p = 0.0;
  double cdf_q = 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    cdf_p += p[j];
    cdf_q += q[j];
    total += std::abs(cdf_p - cdf_q);
  }
  return total;
}

/// Mean per-feature EMD between activation histograms.
inline double vdna_distance(const Fingerprint& source, const Fingerprint& target) {
  require_compatible(source, target);
  double total = 0.0;
  for (std::size_t i = 0; i < target.n_features; ++i) total += emd1(target.histogram(i), source.histogram(i));
  return total / static_cast<double>(target.n_features);
}

// ---------------------------------------------------------------------------
// Manual keyword matching
// ---------------------------------------------------------------------------

struct KeywordSet {
  std::string task_id;
  std::set<std::string> keywords;
  std::uint64_t task_size = 0;

  friend bool operator==(const KeywordSet&, const KeywordSet&) = default;
};

inline std::string normalize_keyword(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const auto first = out.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = out.find_last_not_of(" \t");
  return out.substr(first, last - first + 1);
}

inline KeywordSet make_keyword_set(std::string task_id, const std::vector<std::string>& keywords, std::uint64_t task_size) {
  KeywordSet out{std::move(task_id), {}, task_size};
  for (const auto& k : keywords) {
    auto norm = normalize_keyword(k);
    if (!norm.empty()) out.keywords.insert(std::move(norm));
  }
  return out;
}

inline double keyword_iou(const KeywordSet& a, const KeywordSet& b) {
  std::size_t common = 0;
  for (const auto& k : a.keywords) common += b.keywords.count(k);
  const std::size_t unite = a.keywords.size() + b.keywords.size() - common;
  return unite == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(unite);
}

/// Negative keyword IoU, so lower means more similar. Tie-breaking by task
/// size happens in the selector, never here.
inline double manual_distance(const KeywordSet& source, const KeywordSet& target) {
  if (target.keywords.empty()) throw ValidationError("target.keywords", "target keyword set is empty");
  return -keyword_iou(source, target);
}

/// Manifest: JSON array of {task_id, keywords: [string], task_size: int}.
inline std::vector<KeywordSet> keyword_manifest_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("keyword manifest: expected a JSON array");
  std::vector<KeywordSet> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& entry = j[i];
    try {
      auto set = make_keyword_set(entry.at("task_id").get<std::string>(),
                                  entry.at("keywords").get<std::vector<std::string>>(),
                                  entry.at("task_size").get<std::uint64_t>());
      if (set.keywords.empty()) {
        throw ValidationError("[" + std::to_string(i) + "].keywords", "registered tasks need keywords");
      }
      if (!seen.insert(set.task_id).second) {
        throw ValidationError("[" + std::to_string(i) + "].task_id", "duplicate task id " + set.task_id);
      }
      out.push_back(std::move(set));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("keyword manifest entry " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

inline nlohmann::json keyword_manifest_to_json(const std::vector<KeywordSet>& sets) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : sets) {
    out.push_back({{"task_id", s.task_id},
                   {"keywords", std::vector<std::string>(s.keywords.begin(), s.keywords.end())},
                   {"task_size", s.task_size}});
  }
  return out;
}

inline std::vector<KeywordSet> load_keyword_manifest(const std::filesystem::path& path) {
  const auto text = binary::read_file(path);
  try {
    return keyword_manifest_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace taskprint
