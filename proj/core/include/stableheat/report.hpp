#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "stableheat/analysis.hpp"
#include "stableheat/config.hpp"
#include "stableheat/heat_kernel.hpp"
#include "stableheat/noise.hpp"
#include "stableheat/operators.hpp"
#include "stableheat/simulate.hpp"
#include "stableheat/volterra.hpp"

namespace stableheat {

using json = nlohmann::json;

json to_json(const GeneratorSpec& spec);
json to_json(const DomainGrid& grid);
json to_json(const SpectralDecomposition& sd, bool include_eigenvectors);
json to_json(const ValidationReport& rep);
json to_json(const CorrelationModel& model);
json to_json(const DalangResult& dal);
json to_json(const KernelBoundReport& rep);
json to_json(const LemmaReport& rep);
json to_json(const MomentCurve& curve);
json to_json(const EnergyCurve& curve);
json to_json(const ExponentEstimate& est);
json to_json(const PhaseDiagram& diagram);
json to_json(const LaplaceProbe& probe);
json ensemble_json(const EnsembleSummary& summary);

std::string csv_number(double v);

/// Collects the pieces of one run and writes them as report.json, one CSV per
/// table, and a human-readable summary.txt. File contents are deterministic
/// functions of the inputs (no timestamps, sorted keys, fixed float format).
class ReportWriter {
 public:
  ReportWriter(std::string subcommand, const RunConfig& cfg);

  json& report() { return report_; }
  void add_csv(const std::string& filename, const std::string& content);
  void add_summary_line(const std::string& line);

  /// Writes everything into dir; creates it if needed. Throws IoError.
  void emit(const std::filesystem::path& dir) const;

  std::string summary_text() const;
  std::string report_text() const;

 private:
  json report_;
  std::map<std::string, std::string> csv_files_;
  std::vector<std::string> summary_;
};

}  // namespace stableheat
