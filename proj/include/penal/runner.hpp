#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "penal/config.hpp"

namespace penal {

/// Deterministic outputs of one experiment run (no wall-clock fields).
struct RunOutput {
  nlohmann::json report;
  std::string csv;
  bool pass = true;
  std::vector<std::string> failures;
  double seconds = 0.0;  ///< informational, kept out of report and csv
};

/// Runs the configured operation. Validation problems throw ConfigError or
/// DomainError; numerical breakdowns throw NumericalError.
RunOutput run_experiment(const ExperimentConfig& c);

nlohmann::json estimate_json(const MCEstimate& e);

/// Library version recorded in run manifests.
std::string_view version();

/// RFC-4180 CSV writer with a mandatory header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  CsvTable& cell(double v);
  CsvTable& cell(std::int64_t v);
  CsvTable& cell(const std::string& v);
  CsvTable& cell(bool v);
  void end_row();
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::string> row_;
};

}  // namespace penal
