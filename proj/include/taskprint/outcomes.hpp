#pragma once

#include <cmath>
#include <compare>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "taskprint/errors.hpp"

namespace taskprint {

enum class Scenario { ModelArchitecture, Pretraining, Augmentation, Cotraining };
enum class BaseMetric { BA, AUROC };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::ModelArchitecture: return "MODEL_ARCHITECTURE";
    case Scenario::Pretraining: return "PRETRAINING";
    case Scenario::Augmentation: return "AUGMENTATION";
    case Scenario::Cotraining: return "COTRAINING";
  }
  return "UNKNOWN";
}

inline std::optional<Scenario> scenario_from_string(std::string_view name) {
  for (auto s : {Scenario::ModelArchitecture, Scenario::Pretraining, Scenario::Augmentation, Scenario::Cotraining}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

inline std::string_view to_string(BaseMetric m) { return m == BaseMetric::BA ? "BA" : "AUROC"; }

inline std::optional<BaseMetric> base_metric_from_string(std::string_view name) {
  if (name == "BA") return BaseMetric::BA;
  if (name == "AUROC") return BaseMetric::AUROC;
  return std::nullopt;
}

/// Source id marking the transfer-free baseline training in outcome CSVs.
inline constexpr std::string_view kBaselineSource = "__baseline__";

struct SetupKey {
  std::string target_id;
  Scenario scenario = Scenario::Pretraining;
  BaseMetric metric = BaseMetric::BA;
  int repetition = 0;

  friend auto operator<=>(const SetupKey&, const SetupKey&) = default;

  std::string label() const {
    return target_id + "/" + std::string(to_string(scenario)) + "/" + std::string(to_string(metric)) + "/" +
           std::to_string(repetition);
  }
};

/// Transfer outcomes of one setup: the baseline plus one value per source task.
struct SetupOutcomes {
  std::optional<double> baseline;
  std::map<std::string, double> sources;

  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(sources.size());
    for (const auto& [_, v] : sources) out.push_back(v);
    return out;
  }
};

class OutcomeTable {
 public:
  void add(const SetupKey& key, const std::string& source_id, double value) {
    if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
      throw ValidationError(key.label() + "/" + source_id, "outcome value must lie in [0,1]");
    }
    auto& setup = setups_[key];
    if (source_id == kBaselineSource) {
      if (setup.baseline) throw ValidationError(key.label(), "duplicate baseline record");
      setup.baseline = value;
      return;
    }
    if (source_id == key.target_id) {
      throw ValidationError(key.label() + "/" + source_id, "target cannot be its own source");
    }
    if (!setup.sources.emplace(source_id, value).second) {
      throw ValidationError(key.label() + "/" + source_id, "duplicate outcome record");
    }
  }

  /// Every setup needs a baseline and at least one source outcome.
  void validate() const {
    for (const auto& [key, setup] : setups_) {
      if (!setup.baseline) throw ValidationError(key.label(), "missing baseline record");
      if (setup.sources.empty()) throw ValidationError(key.label(), "no source outcomes");
    }
  }

  const SetupOutcomes& setup(const SetupKey& key) const {
    const auto it = setups_.find(key);
    if (it == setups_.end()) throw NotFoundError("no outcomes for setup " + key.label());
    return it->second;
  }

  double baseline(const SetupKey& key) const {
    const auto& s = setup(key);
    if (!s.baseline) throw NotFoundError("no baseline record for setup " + key.label());
    return *s.baseline;
  }

  double value(const SetupKey& key, const std::string& source_id) const {
    const auto& s = setup(key);
    const auto it = s.sources.find(source_id);
    if (it == s.sources.end()) throw NotFoundError("no outcome for source " + source_id + " in setup " + key.label());
    return it->second;
  }

  bool contains(const SetupKey& key) const { return setups_.count(key) != 0; }

  const std::map<SetupKey, SetupOutcomes>& setups() const noexcept { return setups_; }
  bool empty() const noexcept { return setups_.empty(); }

 private:
  std::map<SetupKey, SetupOutcomes> setups_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline double parse_double(const std::string& text, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) throw FormatError(where + ": not a number: \"" + text + "\"");
  return v;
}

inline long parse_int(const std::string& text, const std::string& where) {
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size()) throw FormatError(where + ": not an integer: \"" + text + "\"");
  return v;
}

}  // namespace detail

/// Reads `target_id,source_id,scenario,metric,repetition,value` rows. Errors
/// carry the 1-based line number.
inline OutcomeTable read_outcomes_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("outcomes csv: empty input");
  if (detail::strip_cr(line) != "target_id,source_id,scenario,metric,repetition,value") {
    throw FormatError("outcomes csv line 1: unexpected header \"" + detail::strip_cr(line) + "\"");
  }
  OutcomeTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::strip_cr(line);
    if (line.empty()) continue;
    const std::string where = "outcomes csv line " + std::to_string(line_no);
    const auto f = detail::split_csv_line(line);
    if (f.size() != 6) throw FormatError(where + ": expected 6 fields, got " + std::to_string(f.size()));
    const auto scenario = scenario_from_string(f[2]);
    if (!scenario) throw FormatError(where + ": unknown scenario \"" + f[2] + "\"");
    const auto metric = base_metric_from_string(f[3]);
    if (!metric) throw FormatError(where + ": unknown metric \"" + f[3] + "\"");
    if (f[0].empty() || f[1].empty()) throw FormatError(where + ": empty task id");
    const SetupKey key{f[0], *scenario, *metric, static_cast<int>(detail::parse_int(f[4], where))};
    try {
      table.add(key, f[1], detail::parse_double(f[5], where));
    } catch (const ValidationError& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  try {
    table.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("outcomes csv: ") + e.what());
  }
  return table;
}

}  // namespace taskprint
