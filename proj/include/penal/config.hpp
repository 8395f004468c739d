#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "penal/experiments.hpp"

namespace YAML {
class Node;
}

namespace penal {

/// Which operation a config runs.
enum class Experiment {
  kMartingaleSuite,
  kConstantClock,
  kExponentialClock,
  kPersistence,
  kDirection,
  kEnsemble,
  kLongtime,
  kSubsequentMarkov,
  kUniversality,
  kCalibrate,
};

std::string_view to_string(Experiment e);
Experiment experiment_from_string(std::string_view name);

/// Fully resolved run description. Every field has a default; the YAML
/// loader fills what the file sets and rejects unknown keys.
struct ExperimentConfig {
  Experiment experiment = Experiment::kMartingaleSuite;
  SamplerConfig sampler;
  std::optional<WeightSpec> weight;
  std::optional<WeightSpec> second_weight;
  PhiOptions phi;
  ClockSpec clock;
  SimOptions sim;

  std::vector<ModelState> x0;
  std::vector<double> times;
  std::vector<double> rates;
  double s = 0.5;
  double t = 0.5;
  double horizon = 1.0;
  double level = 5.0;
  double rel_tol = 0.1;
  double coarse_rel_tol = 0.0;  ///< > 0 also grades the coupled coarse step
  double t_cap = 1e4;
  double identity_s = 0.0;
  double identity_t = 0.0;
  double ratio_band = 0.0;
  double expected_slope = -0.25;
  double slope_tol = 0.05;
  double shift_tol = 0.02;
  std::int64_t n_cap = 0;
  std::int64_t inner = 32;
  int bootstrap = 200;
  /// Ensemble runs: windows observed at time s, optional limits for their
  /// conditioned values at the horizon, and the Bessel(3) marginal check.
  std::vector<nlohmann::json> mark_specs;
  std::vector<StateFunctional> marks;
  std::vector<double> mark_references;
  double mark_rel_tol = 0.01;
  bool exact_check = false;
  double ks_tol = 0.02;
  /// Universality runs: trend grading of the plain ratio under Gamma.
  bool ratio_decreasing = false;
  double ratio_last_below = 0.0;
  StateFunctional f;
  StateFunctional g;
  nlohmann::json f_spec = {{"kind", "one"}};
  nlohmann::json g_spec = {{"kind", "one"}};
  CalibrationOptions calibration;

  std::string output_dir = "out";
  std::string prefix = "report";
};

/// Parses a config document. Throws ConfigError with a "path: reason"
/// message on schema violations.
ExperimentConfig parse_config(const YAML::Node& root);
ExperimentConfig load_config(const std::string& path);
ExperimentConfig load_config_string(const std::string& text);

/// Blocks the selected experiment needs (weight, second weight, x0).
/// parse_config leaves these to the caller so phi-eval and dump-paths can
/// share configs with any experiment.
void require_experiment_inputs(const ExperimentConfig& c);

/// Resolved config as JSON (for the manifest).
nlohmann::json config_to_json(const ExperimentConfig& c);

/// Parses a functional spec {kind: one | position_above | position_in, ...}.
StateFunctional functional_from_json(const nlohmann::json& j);

}  // namespace penal
