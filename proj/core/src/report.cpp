#include "stableheat/report.hpp"

#include <cstdio>
#include <fstream>

#include "stableheat/errors.hpp"
#include "stableheat/version.hpp"

namespace stableheat {

json to_json(const GeneratorSpec& spec) {
  json j;
  j["variant"] = spec.kind_name();
  j["alpha"] = spec.alpha;
  switch (spec.kind) {
    case GeneratorSpec::Kind::Fractional:
      j["nu"] = spec.nu;
      break;
    case GeneratorSpec::Kind::FractionalWithDrift:
      j["nu"] = spec.nu;
      j["lambda"] = spec.drift;
      break;
    case GeneratorSpec::Kind::DoubleFractional:
      j["nu"] = spec.nu;
      j["beta"] = spec.beta_exp;
      j["a"] = spec.a;
      break;
    case GeneratorSpec::Kind::RelativisticSurrogate:
      j["m"] = spec.mass;
      j["surrogate"] = "spectral function of the classical Dirichlet Laplacian";
      break;
  }
  return j;
}

json to_json(const DomainGrid& grid) {
  return json{{"radius", grid.radius}, {"n", grid.n}, {"h", grid.h}};
}

json to_json(const SpectralDecomposition& sd, bool include_eigenvectors) {
  json j;
  j["format_version"] = 1;
  j["spec"] = to_json(sd.spec);
  j["grid"] = to_json(sd.grid);
  j["eigenvalues"] = std::vector<double>(sd.eigenvalues.data(),
                                         sd.eigenvalues.data() + sd.eigenvalues.size());
  j["mu1"] = sd.mu1;
  j["mu1_coarse"] = sd.mu1_coarse;
  j["mu1_extrapolated"] = sd.mu1_extrapolated;
  j["richardson_order"] = sd.richardson_order;
  if (include_eigenvectors) {
    json vecs = json::array();
    for (int k = 0; k < sd.eigenvectors.cols(); ++k) {
      json col = json::array();
      for (int i = 0; i < sd.eigenvectors.rows(); ++i) col.push_back(sd.eigenvectors(i, k));
      vecs.push_back(col);
    }
    j["eigenvectors"] = vecs;
  }
  return j;
}

json to_json(const ValidationReport& rep) {
  json checks = json::array();
  for (const CheckResult& c : rep.checks) {
    json jc{{"name", c.name}, {"pass", c.pass}, {"measured", c.measured},
            {"tolerance", c.tolerance}};
    if (!c.note.empty()) jc["note"] = c.note;
    checks.push_back(jc);
  }
  return json{{"checks", checks}, {"all_pass", rep.all_pass()}};
}

json to_json(const CorrelationModel& model) {
  json j{{"kind", model.kind_name()}};
  switch (model.kind) {
    case CorrelationModel::Kind::White: break;
    case CorrelationModel::Kind::Riesz: j["gamma"] = model.gamma; break;
    case CorrelationModel::Kind::Cauchy: j["theta"] = model.theta; break;
    case CorrelationModel::Kind::ConstantFloor: j["k"] = model.floor_k; break;
  }
  return j;
}

json to_json(const DalangResult& dal) {
  json j{{"pass", dal.pass}, {"criterion", dal.criterion}};
  if (dal.margin) j["margin"] = *dal.margin;
  return j;
}

json to_json(const KernelBoundReport& rep) {
  return json{{"epsilon", rep.epsilon},
              {"c1_small_t", rep.c1_small_t},
              {"c2_small_t", rep.c2_small_t},
              {"small_t_exponent", rep.small_t_exponent},
              {"mu1_fit", rep.mu1_fit},
              {"c1_long", rep.c1_long},
              {"c2_long", rep.c2_long},
              {"t0", rep.t0},
              {"band_factor", rep.band_factor},
              {"band_achieved", rep.band_achieved},
              {"band_reached", rep.band_reached}};
}

json to_json(const LemmaReport& rep) {
  return json{{"lemma", lemma_name(rep.id)},
              {"beta", rep.beta},
              {"points", rep.points},
              {"correlation", rep.correlation},
              {"value", rep.value},
              {"tail_value", rep.tail_value},
              {"verdict", rep.verdict},
              {"quadrature_error", rep.quadrature_error},
              {"t_max", rep.t_max},
              {"t_split", rep.t_split}};
}

json to_json(const MomentCurve& curve) {
  json j;
  j["times"] = curve.times;
  j["order"] = curve.order;
  j["provenance"] = curve.provenance;
  j["quadrature_error"] = curve.quadrature_error;
  json rows = json::array();
  for (int r = 0; r < curve.values.rows(); ++r) {
    json row = json::array();
    for (int i = 0; i < curve.values.cols(); ++i) row.push_back(curve.values(r, i));
    rows.push_back(row);
  }
  j["values"] = rows;
  if (curve.stderrs.size() > 0) {
    json errs = json::array();
    for (int r = 0; r < curve.stderrs.rows(); ++r) {
      json row = json::array();
      for (int i = 0; i < curve.stderrs.cols(); ++i) row.push_back(curve.stderrs(r, i));
      errs.push_back(row);
    }
    j["stderrs"] = errs;
  }
  return j;
}

json to_json(const EnergyCurve& curve) {
  return json{{"times", curve.times},
              {"values", std::vector<double>(curve.values.data(),
                                             curve.values.data() + curve.values.size())},
              {"provenance", curve.provenance}};
}

json to_json(const ExponentEstimate& est) {
  return json{{"rate", est.rate},        {"stderr", est.stderr_},
              {"r_squared", est.r_squared}, {"t_lo", est.t_lo},
              {"t_hi", est.t_hi},         {"order", est.order},
              {"location", est.location}, {"points_used", est.points_used},
              {"points_excluded", est.points_excluded},
              {"status", est.resolved ? "resolved" : "unresolved"}};
}

json to_json(const PhaseDiagram& diagram) {
  json pts = json::array();
  for (const PhasePoint& p : diagram.points)
    pts.push_back(json{{"xi", p.xi}, {"estimate", to_json(p.estimate)}});
  json j{{"points", pts}, {"status", diagram.status}, {"method", diagram.method},
         {"order", diagram.order}};
  if (diagram.bracket)
    j["bracket"] = json{{"lo", diagram.bracket->first}, {"hi", diagram.bracket->second}};
  return j;
}

json to_json(const LaplaceProbe& probe) {
  return json{{"beta", probe.beta},
              {"value", probe.value},
              {"tail_rate", probe.tail_rate},
              {"tail_r_squared", probe.tail_r_squared},
              {"verdict", probe.verdict}};
}

json ensemble_json(const EnsembleSummary& summary) {
  json j;
  j["record_times"] = summary.record_times;
  j["moment_orders"] = summary.moment_orders;
  j["paths_total"] = summary.paths_total;
  j["diverged_paths"] = summary.diverged_paths;
  j["status"] = summary.status;
  j["m_effective"] = summary.m_effective;
  j["negative_mass_fraction"] = summary.negative_mass;
  j["xi"] = summary.xi;
  j["dt"] = summary.dt;
  j["seed"] = summary.seed;
  return j;
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ReportWriter::ReportWriter(std::string subcommand, const RunConfig& cfg) {
  report_["subcommand"] = std::move(subcommand);
  report_["tool_version"] = kVersion;
  report_["config_hash"] = cfg.hash();
}

void ReportWriter::add_csv(const std::string& filename, const std::string& content) {
  csv_files_[filename] = content;
}

void ReportWriter::add_summary_line(const std::string& line) { summary_.push_back(line); }

std::string ReportWriter::summary_text() const {
  std::string out;
  for (const std::string& line : summary_) out += line + "\n";
  return out;
}

std::string ReportWriter::report_text() const { return report_.dump(2) + "\n"; }

void ReportWriter::emit(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  auto write = [&](const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << content;
    if (!out) throw IoError("write failed for " + p.string());
  };
  write(dir / "report.json", report_text());
  for (const auto& [name, content] : csv_files_) write(dir / name, content);
  write(dir / "summary.txt", summary_text());
}

}  // namespace stableheat
