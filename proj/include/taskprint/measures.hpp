#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "taskprint/baselines.hpp"
#include "taskprint/bkld.hpp"
#include "taskprint/errors.hpp"
#include "taskprint/fingerprint.hpp"

namespace taskprint {

/// Whatever is known about one task. Measures read the part they need.
struct TaskRepresentation {
  std::string task_id;
  std::uint64_t task_size = 0;
  std::shared_ptr<const Fingerprint> fingerprint;
  std::shared_ptr<const GaussianSummary> gaussian;
  std::shared_ptr<const KeywordSet> keywords;
};

enum class Representation { Fingerprint, Gaussian, Keywords };

inline std::string_view to_string(Representation r) {
  switch (r) {
    case Representation::Fingerprint: return "fingerprint";
    case Representation::Gaussian: return "gaussian";
    case Representation::Keywords: return "keywords";
  }
  return "unknown";
}

/// A named comparison function distance(source, target); lower is closer.
struct DistanceMeasure {
  std::string name;
  std::string description;
  Representation representation = Representation::Fingerprint;
  std::optional<BinningConfig> binning;  // recommended fingerprint binning
  std::optional<WeightSpec> weights;
  std::function<double(const TaskRepresentation& source, const TaskRepresentation& target)> distance;

  bool has_representation(const TaskRepresentation& t) const {
    switch (representation) {
      case Representation::Fingerprint: return t.fingerprint != nullptr;
      case Representation::Gaussian: return t.gaussian != nullptr;
      case Representation::Keywords: return t.keywords != nullptr;
    }
    return false;
  }

  /// Throws IncompatibleError when `source` cannot be compared with `target`.
  void require_compatible(const TaskRepresentation& source, const TaskRepresentation& target) const {
    if (!has_representation(target)) {
      throw IncompatibleError(std::string(to_string(representation)),
                              "measure " + name + " needs a " + std::string(to_string(representation)) + " for the target");
    }
    if (!has_representation(source)) {
      throw IncompatibleError(std::string(to_string(representation)), "candidate " + source.task_id + " has no " +
                                                                           std::string(to_string(representation)) +
                                                                           " for measure " + name);
    }
    switch (representation) {
      case Representation::Fingerprint:
        try {
          taskprint::require_compatible(*source.fingerprint, *target.fingerprint);
        } catch (const IncompatibleError& e) {
          throw IncompatibleError(e.field(), "candidate " + source.task_id + ": " + e.what());
        }
        break;
      case Representation::Gaussian:
        if (source.gaussian->dim() != target.gaussian->dim()) {
          throw IncompatibleError("dimension", "candidate " + source.task_id + ": Gaussian dimension mismatch");
        }
        break;
      case Representation::Keywords:
        break;
    }
  }

  bool compatible(const TaskRepresentation& source, const TaskRepresentation& target) const {
    try {
      require_compatible(source, target);
      return true;
    } catch (const IncompatibleError&) {
      return false;
    }
  }

  nlohmann::json describe() const {
    nlohmann::json params = nlohmann::json::object();
    if (binning) {
      params["n_bins"] = binning->n_bins;
      params["range_lo"] = binning->range_lo;
      params["range_hi"] = binning->range_hi;
    }
    if (weights) params["weights"] = std::string(to_string(weights->mode));
    return {{"name", name},
            {"representation", std::string(to_string(representation))},
            {"parameters", params},
            {"description", description}};
  }
};

inline DistanceMeasure make_bkld_measure(const BkldVariant& variant) {
  DistanceMeasure m;
  m.name = variant.name;
  m.description = "binned KL divergence, " + std::string(to_string(variant.weights.mode)) + " weights";
  m.representation = Representation::Fingerprint;
  m.binning = variant.binning;
  m.weights = variant.weights;
  m.distance = [spec = variant.weights](const TaskRepresentation& s, const TaskRepresentation& t) {
    return bkld_distance(*s.fingerprint, *t.fingerprint, spec);
  };
  return m;
}

/// Name-keyed measure registry; iteration order is by name.
class MeasureRegistry {
 public:
  void add(DistanceMeasure measure) {
    const auto name = measure.name;
    if (!measures_.emplace(name, std::move(measure)).second) {
      throw ConflictError("measure \"" + name + "\" already registered");
    }
  }

  const DistanceMeasure* find(std::string_view name) const {
    const auto it = measures_.find(std::string(name));
    return it == measures_.end() ? nullptr : &it->second;
  }

  /// Throws NotFoundError listing every registered name.
  const DistanceMeasure& at(std::string_view name) const {
    if (const auto* m = find(name)) return *m;
    std::string known;
    for (const auto& n : names()) known += (known.empty() ? "" : ", ") + n;
    throw NotFoundError("unknown measure \"" + std::string(name) + "\"; registered measures: " + known);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : measures_) out.push_back(name);
    return out;
  }

  std::size_t size() const noexcept { return measures_.size(); }

  auto begin() const { return measures_.begin(); }
  auto end() const { return measures_.end(); }

 private:
  std::map<std::string, DistanceMeasure> measures_;
};

/// The built-in measures: three bKLD variants, fid, p2l, vdna, manual.
inline MeasureRegistry builtin_measures() {
  MeasureRegistry registry;
  for (const auto& variant : standard_bkld_variants()) registry.add(make_bkld_measure(variant));

  DistanceMeasure fid;
  fid.name = "fid";
  fid.description = "Frechet distance between Gaussian feature summaries";
  fid.representation = Representation::Gaussian;
  fid.distance = [](const TaskRepresentation& s, const TaskRepresentation& t) { return fid_distance(*s.gaussian, *t.gaussian); };
  registry.add(std::move(fid));

  DistanceMeasure p2l;
  p2l.name = "p2l";
  p2l.description = "KL divergence between softmaxed feature averages";
  p2l.representation = Representation::Fingerprint;
  p2l.distance = [](const TaskRepresentation& s, const TaskRepresentation& t) {
    return p2l_distance(*s.fingerprint, *t.fingerprint);
  };
  registry.add(std::move(p2l));

  DistanceMeasure vdna;
  vdna.name = "vdna";
  vdna.description = "mean per-feature earth mover's distance between activation histograms";
  vdna.representation = Representation::Fingerprint;
  vdna.distance = [](const TaskRepresentation& s, const TaskRepresentation& t) {
    return vdna_distance(*s.fingerprint, *t.fingerprint);
  };
  registry.add(std::move(vdna));

  DistanceMeasure manual;
  manual.name = "manual";
  manual.description = "negative keyword intersection over union; ties prefer larger sources";
  manual.representation = Representation::Keywords;
  manual.distance = [](const TaskRepresentation& s, const TaskRepresentation& t) {
    return manual_distance(*s.keywords, *t.keywords);
  };
  registry.add(std::move(manual));
  return registry;
}

}  // namespace taskprint
