#include "stableheat/run.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "stableheat/errors.hpp"

namespace stableheat {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Noise block shared by every report: model, Dalang verdict, measured floor.
json noise_block(const RunConfig& cfg, const DomainGrid& grid) {
  json j;
  j["model"] = to_json(cfg.noise);
  const DalangResult dal = dalang_check(cfg.noise, cfg.op.alpha);
  j["dalang"] = to_json(dal);
  if (!cfg.noise.is_white()) {
    const NoiseIncrementSampler sampler = build_covariance(cfg.noise, grid, cfg.seed);
    j["measured_floor"] = *sampler.measured_floor();
    j["factor_jitter"] = sampler.jitter_used();
    if (sampler.floor_warning()) j["floor_warning"] = true;
  } else {
    j["measured_floor"] = nullptr;  // floor not applicable for white noise
  }
  return j;
}

std::string dalang_summary(const RunConfig& cfg) {
  const DalangResult dal = dalang_check(cfg.noise, cfg.op.alpha);
  std::string line = "Dalang condition (" + cfg.noise.label() + ", alpha=" + fmt(cfg.op.alpha) +
                     "): " + (dal.pass ? "pass" : "FAIL");
  if (dal.margin) line += ", margin " + fmt(*dal.margin);
  return line;
}

void require_dalang(const RunConfig& cfg) {
  const DalangResult dal = dalang_check(cfg.noise, cfg.op.alpha);
  if (!dal.pass)
    throw AssumptionViolation("Dalang condition fails for " + cfg.noise.label() +
                              " with alpha=" + fmt(cfg.op.alpha) + ": " + dal.criterion);
}

std::string moments_csv_header(bool with_xi) {
  return std::string(with_xi ? "xi," : "") + "t,x,p,value,stderr,provenance\n";
}

void append_curve_csv(std::string& csv, const MomentCurve& curve, const double* xi) {
  for (size_t r = 0; r < curve.times.size(); ++r)
    for (int i = 0; i < curve.grid.n; ++i) {
      std::string row;
      if (xi) row += csv_number(*xi) + ",";
      row += csv_number(curve.times[r]) + "," + csv_number(curve.grid.nodes[i]) + "," +
             std::to_string(curve.order) + "," + csv_number(curve.values(static_cast<int>(r), i)) +
             ",";
      if (curve.stderrs.size() > 0) row += csv_number(curve.stderrs(static_cast<int>(r), i));
      row += "," + curve.provenance + "\n";
      csv += row;
    }
}

std::string energy_csv(const EnergyCurve& curve) {
  std::string csv = "t,energy,provenance\n";
  for (size_t r = 0; r < curve.times.size(); ++r)
    csv += csv_number(curve.times[r]) + "," + csv_number(curve.values[static_cast<int>(r)]) + "," +
           curve.provenance + "\n";
  return csv;
}

LemmaId lemma_from_string(const std::string& s) {
  if (s == "L21" || s == "l21") return LemmaId::L21;
  if (s == "L22" || s == "l22") return LemmaId::L22;
  if (s == "L23" || s == "l23") return LemmaId::L23;
  if (s == "L24" || s == "l24") return LemmaId::L24;
  throw ValidationError("unknown lemma id: " + s + " (expected L21, L22, L23 or L24)");
}

void run_operator_info(const RunConfig& cfg, ReportWriter& w) {
  const DomainGrid grid = cfg.make_grid();
  const DiscreteOperator op = build_operator(cfg.op, grid);
  const SpectralDecomposition sd = eigendecompose(op);
  const ValidationReport val = validate_operator(op);

  w.report()["operator"] = to_json(sd, cfg.write_eigenvectors);
  w.report()["validation"] = to_json(val);
  w.report()["noise"] = noise_block(cfg, grid);

  std::string csv = "k,eigenvalue\n";
  for (int k = 0; k < sd.eigenvalues.size(); ++k)
    csv += std::to_string(k + 1) + "," + csv_number(sd.eigenvalues[k]) + "\n";
  w.add_csv("spectrum.csv", csv);

  w.add_summary_line("Operator " + cfg.op.label() + " on (-" + fmt(grid.radius) + ", " +
                     fmt(grid.radius) + "), N=" + std::to_string(grid.n));
  w.add_summary_line("Principal eigenvalue mu1 = " + fmt(sd.mu1) + " (Richardson-extrapolated " +
                     fmt(sd.mu1_extrapolated) + "), governs the (pd2) long-time decay");
  w.add_summary_line(std::string("Operator validation: ") + (val.all_pass() ? "pass" : "FAIL"));
  if (cfg.op.kind == GeneratorSpec::Kind::RelativisticSurrogate)
    w.add_summary_line("Note: relativistic variant is a spectral surrogate, not the killed kernel");
  w.add_summary_line(dalang_summary(cfg));
}

void run_kernel_verify(const RunConfig& cfg, ReportWriter& w) {
  const DomainGrid grid = cfg.make_grid();
  const HeatKernelEvaluator eval(eigendecompose(build_operator(cfg.op, grid)));
  const KernelBoundReport rep = verify_kernel_bounds(eval, cfg.epsilon);

  // Sub-Markov mass and Chapman-Kolmogorov identities at sample times.
  const double mu1 = eval.mu1();
  double mass_max = 0.0;
  bool mass_monotone = true;
  double prev_mass = 2.0;
  for (double t : {0.01 / mu1, 0.1 / mu1, 0.5 / mu1, 1.0 / mu1, 5.0 / mu1}) {
    double m = 0.0;
    for (int i = 0; i < grid.n; ++i) m = std::max(m, eval.mass(t, i));
    mass_max = std::max(mass_max, m);
    if (m > prev_mass + 1e-9) mass_monotone = false;
    prev_mass = m;
  }
  double ck_err = 0.0;
  for (double t : {0.2 / mu1, 1.0 / mu1}) {
    const auto p_2t = eval.propagator(2.0 * t);
    const auto p_t = eval.propagator(t);
    const Eigen::MatrixXd composed = grid.h * (*p_t) * (*p_t);
    ck_err = std::max(ck_err, ((*p_2t) - composed).norm() / p_2t->norm());
  }

  w.report()["kernel_bounds"] = to_json(rep);
  w.report()["identities"] =
      json{{"mass_max", mass_max}, {"mass_monotone", mass_monotone}, {"chapman_kolmogorov_rel_error", ck_err}};
  w.report()["noise"] = noise_block(cfg, grid);

  std::string csv =
      "epsilon,c1_small_t,c2_small_t,small_t_exponent,mu1_fit,c1_long,c2_long,t0,band_factor,"
      "band_achieved,band_reached\n";
  csv += csv_number(rep.epsilon) + "," + csv_number(rep.c1_small_t) + "," +
         csv_number(rep.c2_small_t) + "," + csv_number(rep.small_t_exponent) + "," +
         csv_number(rep.mu1_fit) + "," + csv_number(rep.c1_long) + "," + csv_number(rep.c2_long) +
         "," + csv_number(rep.t0) + "," + csv_number(rep.band_factor) + "," +
         csv_number(rep.band_achieved) + "," + (rep.band_reached ? "true" : "false") + "\n";
  w.add_csv("kernel.csv", csv);

  w.add_summary_line("(pd0) short-time diagonal: p(t,x,x) ~ t^" + fmt(rep.small_t_exponent) +
                     " (target -1/alpha = " + fmt(-1.0 / cfg.op.alpha) + ")");
  w.add_summary_line("(pd2) long-time rate: mu1_fit = " + fmt(rep.mu1_fit) + " vs spectral mu1 = " +
                     fmt(eval.mu1()));
  w.add_summary_line("(pd2) band: t0 = " + fmt(rep.t0) + ", c1 = " + fmt(rep.c1_long) + ", c2 = " +
                     fmt(rep.c2_long) + ", factor-" + fmt(rep.band_factor) + " band " +
                     (rep.band_reached ? "reached" : "not reached (achieved " +
                                                         fmt(rep.band_achieved) + ")"));
  w.add_summary_line("Sub-Markov mass max = " + fmt(mass_max) +
                     ", Chapman-Kolmogorov relative error = " + fmt(ck_err));
  w.add_summary_line(dalang_summary(cfg));
}

void run_lemma_check(const RunConfig& cfg, ReportWriter& w) {
  const DomainGrid grid = cfg.make_grid();
  const HeatKernelEvaluator eval(eigendecompose(build_operator(cfg.op, grid)));
  const double mu1 = eval.mu1();
  const LemmaId id = lemma_from_string(cfg.lemma);

  std::vector<double> betas = cfg.lemma_betas;
  for (double r : cfg.lemma_betas_over_mu1) betas.push_back(r * mu1);
  if (betas.empty()) betas.push_back(0.5 * mu1);

  // Point tuples: L21/L22 run once per listed point; L23 pairs; L24 uses
  // (x1,y1,x2,y2), accepting two points as ((p0,p0),(p1,p1)).
  std::vector<std::vector<int>> tuples;
  std::vector<int> idx;
  for (double x : cfg.points) idx.push_back(grid.nearest_index(x));
  switch (id) {
    case LemmaId::L21:
    case LemmaId::L22:
      for (int i : idx) tuples.push_back({i});
      break;
    case LemmaId::L23:
      if (idx.size() == 1) tuples.push_back({idx[0], idx[0]});
      else if (idx.size() >= 2) tuples.push_back({idx[0], idx[1]});
      break;
    case LemmaId::L24:
      if (idx.size() == 2) tuples.push_back({idx[0], idx[0], idx[1], idx[1]});
      else if (idx.size() >= 4) tuples.push_back({idx[0], idx[1], idx[2], idx[3]});
      else
        throw ValidationError("L24 needs two or four points");
      break;
  }
  if (tuples.empty()) throw ValidationError("lemma check needs points");

  const KernelBoundReport bounds = verify_kernel_bounds(eval, cfg.epsilon);
  const CorrelationModel* corr = cfg.noise.is_white() ? nullptr : &cfg.noise;

  json reports = json::array();
  std::string csv = "lemma,beta,points,correlation,value,tail_value,verdict,quadrature_error\n";
  for (double beta : betas)
    for (const std::vector<int>& tuple : tuples) {
      const LemmaReport rep = lemma_integral(eval, id, beta, tuple, corr, bounds.t0);
      reports.push_back(to_json(rep));
      std::string pts;
      for (size_t i = 0; i < rep.points.size(); ++i)
        pts += (i ? "|" : "") + csv_number(rep.points[i]);
      csv += lemma_name(rep.id) + "," + csv_number(rep.beta) + "," + pts + "," + rep.correlation +
             "," + csv_number(rep.value) + "," + csv_number(rep.tail_value) + "," + rep.verdict +
             "," + csv_number(rep.quadrature_error) + "\n";
      w.add_summary_line("Lemma 2." + std::string(1, lemma_name(id)[2]) + " at beta = " +
                         fmt(beta) + " (beta/mu1 = " + fmt(beta / mu1) + "): " + rep.verdict +
                         ", value = " + fmt(rep.value));
    }
  w.report()["lemmas"] = reports;
  w.report()["kernel_bounds"] = to_json(bounds);
  w.report()["mu1"] = mu1;
  w.report()["noise"] = noise_block(cfg, grid);
  w.add_csv("lemma.csv", csv);
  w.add_summary_line(dalang_summary(cfg));
}

void run_simulate(const RunConfig& cfg, ReportWriter& w) {
  require_dalang(cfg);
  const SimulationConfig sim = cfg.simulation();
  const HeatKernelEvaluator eval(eigendecompose(build_operator(sim.operator_spec, sim.grid)));
  const NoiseIncrementSampler sampler = sim.noise.is_white()
                                            ? white_noise_sampler(sim.grid, sim.seed)
                                            : build_covariance(sim.noise, sim.grid, sim.seed);
  const EnsembleSummary summary = simulate_ensemble(sim, eval, sampler);

  w.report()["ensemble"] = ensemble_json(summary);
  w.report()["sigma_validation"] = to_json(validate_sigma(cfg.sigma));
  w.report()["noise"] = noise_block(cfg, sim.grid);

  std::string csv = "t,x,p,moment,stderr,M_effective\n";
  json estimates = json::array();
  bool sandwich_ok = true;
  EnergyCurve energy;
  for (int p : summary.moment_orders) {
    const MomentEstimate est = estimate_moments(summary, p, cfg.epsilon);
    if (p == 2) {
      energy = est.energy;
      sandwich_ok = est.sandwich_ok;
    }
    estimates.push_back(json{{"order", p},
                             {"curve", to_json(est.curve)},
                             {"sandwich_ok", est.sandwich_ok},
                             {"sandwich_violations", est.sandwich_violations}});
    for (size_t r = 0; r < est.curve.times.size(); ++r)
      for (int i = 0; i < sim.grid.n; ++i)
        csv += csv_number(est.curve.times[r]) + "," + csv_number(sim.grid.nodes[i]) + "," +
               std::to_string(p) + "," + csv_number(est.curve.values(static_cast<int>(r), i)) +
               "," + csv_number(est.curve.stderrs(static_cast<int>(r), i)) + "," +
               std::to_string(summary.m_effective[r]) + "\n";
  }
  w.report()["moments"] = estimates;
  w.report()["energy"] = to_json(energy);
  w.add_csv("simulate.csv", csv);
  w.add_csv("energy.csv", energy_csv(energy));

  w.add_summary_line("Monte Carlo ensemble: " + std::to_string(summary.paths_total) + " paths, " +
                     std::to_string(summary.diverged_paths) + " diverged, status " +
                     summary.status);
  w.add_summary_line(std::string("Corollary 1.4 energy sandwich: ") +
                     (sandwich_ok ? "holds at every record time" : "VIOLATED"));
  w.add_summary_line(dalang_summary(cfg));
}

void run_oracle(const RunConfig& cfg, ReportWriter& w) {
  require_dalang(cfg);
  if (cfg.sigma.kind != SigmaFunction::Kind::Linear)
    throw ValidationError("the Volterra oracle requires linear sigma");
  const DomainGrid grid = cfg.make_grid();
  const HeatKernelEvaluator eval(eigendecompose(build_operator(cfg.op, grid)));
  const Eigen::VectorXd u0 = cfg.u0.evaluate(grid);
  const std::vector<double> times = cfg.effective_record_times();
  const double dt0 = cfg.horizon / 128.0;

  MomentCurve curve;
  if (cfg.noise.is_white()) {
    curve = solve_volterra_white(eval, u0, cfg.xi, std::abs(cfg.sigma.c), dt0, cfg.horizon, times);
  } else {
    const NoiseIncrementSampler sampler = build_covariance(cfg.noise, grid, cfg.seed);
    curve = solve_volterra_colored(eval, u0, cfg.xi, std::abs(cfg.sigma.c), sampler.covariance(),
                                   dt0, cfg.horizon, times)
                .diagonal;
  }

  // Jensen floor: E|u|^2 >= |(G u0)_t|^2, exact for the oracle.
  bool jensen_ok = true;
  for (size_t r = 0; r < curve.times.size(); ++r) {
    const Eigen::VectorXd g = eval.apply_semigroup(curve.times[r], u0);
    for (int i = 0; i < grid.n; ++i)
      if (curve.values(static_cast<int>(r), i) < g[i] * g[i] * (1.0 - 1e-9) - 1e-14)
        jensen_ok = false;
  }

  const EnergyCurve energy = energy_from_curve(curve);
  const LaplaceProbe probe = laplace_probe(curve, cfg.laplace_beta, cfg.epsilon);

  w.report()["moments"] = to_json(curve);
  w.report()["energy"] = to_json(energy);
  w.report()["jensen_floor_ok"] = jensen_ok;
  w.report()["laplace_probe"] = to_json(probe);
  w.report()["noise"] = noise_block(cfg, grid);

  std::string csv = moments_csv_header(false);
  append_curve_csv(csv, curve, nullptr);
  w.add_csv("moments.csv", csv);
  w.add_csv("energy.csv", energy_csv(energy));

  w.add_summary_line("Volterra oracle second moments at xi = " + fmt(cfg.xi) +
                     " (quadrature error " + fmt(curve.quadrature_error) + ")");
  w.add_summary_line(std::string("Jensen floor E|u|^2 >= |G u0|^2: ") +
                     (jensen_ok ? "holds" : "VIOLATED"));
  w.add_summary_line("Laplace transform probe at beta = " + fmt(probe.beta) + " (I_beta/J_beta mechanism): " +
                     probe.verdict);
  w.add_summary_line(dalang_summary(cfg));
}

void run_sweep(const RunConfig& cfg, ReportWriter& w) {
  require_dalang(cfg);
  if (cfg.xi_values.size() < 2)
    throw ValidationError("sweep needs analysis.xi_values with at least two entries");
  const DomainGrid grid = cfg.make_grid();
  const HeatKernelEvaluator eval(eigendecompose(build_operator(cfg.op, grid)));
  const double mu1 = eval.mu1();
  if (cfg.horizon < 8.0 / mu1)
    throw AnalysisError("sweep horizon " + fmt(cfg.horizon) + " is below 8/mu1 = " +
                        fmt(8.0 / mu1) + "; (pd2) control needs a longer window");

  std::vector<double> times;
  for (int i = 1; i <= 24; ++i) times.push_back(cfg.horizon * i / 24.0);
  const double t_lo = cfg.horizon / 2.0;
  const int center = grid.nearest_index(0.0);
  const Eigen::VectorXd u0 = cfg.u0.evaluate(grid);
  const double dt0 = cfg.horizon / 128.0;

  const bool oracle = cfg.method == "oracle";
  if (oracle && cfg.sigma.kind != SigmaFunction::Kind::Linear)
    throw ValidationError("oracle sweep requires linear sigma");
  if (oracle && cfg.sweep_order != 2)
    throw ValidationError("oracle sweep supports p=2 only; use method=monte-carlo for higher p");

  Eigen::MatrixXd corr;
  if (!cfg.noise.is_white()) corr = build_covariance(cfg.noise, grid, cfg.seed).covariance();

  std::vector<std::pair<double, MomentCurve>> curves;
  std::mutex curves_mutex;
  auto rate_of_xi = [&](double xi) -> ExponentEstimate {
    MomentCurve curve;
    if (oracle) {
      curve = cfg.noise.is_white()
                  ? solve_volterra_white(eval, u0, xi, std::abs(cfg.sigma.c), dt0, cfg.horizon,
                                         times)
                  : solve_volterra_colored(eval, u0, xi, std::abs(cfg.sigma.c), corr, dt0,
                                           cfg.horizon, times)
                        .diagonal;
    } else {
      SimulationConfig sim = cfg.simulation();
      sim.xi = xi;
      sim.record_times = times;
      sim.threads = cfg.threads;
      const NoiseIncrementSampler sampler = sim.noise.is_white()
                                                ? white_noise_sampler(grid, sim.seed)
                                                : build_covariance(sim.noise, grid, sim.seed);
      const EnsembleSummary summary = simulate_ensemble(sim, eval, sampler);
      curve = estimate_moments(summary, cfg.sweep_order, cfg.epsilon).curve;
    }
    {
      std::lock_guard<std::mutex> lock(curves_mutex);
      curves.emplace_back(xi, curve);
    }
    return fit_exponent(curve, center, t_lo, cfg.horizon);
  };

  SweepOptions opts;
  opts.method = cfg.method;
  opts.bracket_width = cfg.bracket_width;
  opts.order = cfg.sweep_order;
  opts.bisect = cfg.bisect;
  opts.threads = oracle ? cfg.threads : 1;  // MC runs are internally parallel
  const PhaseDiagram diagram = xi_sweep(cfg.xi_values, rate_of_xi, opts);

  // Oracle rates must be nondecreasing in xi within fit tolerance.
  bool monotone_ok = true;
  if (oracle) {
    for (size_t i = 0; i + 1 < diagram.points.size(); ++i) {
      const auto& a = diagram.points[i].estimate;
      const auto& b = diagram.points[i + 1].estimate;
      if (b.rate < a.rate - 2.0 * (a.stderr_ + b.stderr_)) monotone_ok = false;
    }
  }

  w.report()["phase_diagram"] = to_json(diagram);
  w.report()["rates_nondecreasing"] = monotone_ok;
  w.report()["mu1"] = mu1;
  w.report()["noise"] = noise_block(cfg, grid);

  std::string phase = "xi,rate,stderr,r_squared,status\n";
  for (const PhasePoint& p : diagram.points)
    phase += csv_number(p.xi) + "," + csv_number(p.estimate.rate) + "," +
             csv_number(p.estimate.stderr_) + "," + csv_number(p.estimate.r_squared) + "," +
             (p.estimate.resolved ? "resolved" : "unresolved") + "\n";
  w.add_csv("phase.csv", phase);

  std::sort(curves.begin(), curves.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string mc = moments_csv_header(true);
  for (const auto& [xi, curve] : curves) append_curve_csv(mc, curve, &xi);
  w.add_csv("moments.csv", mc);

  const std::string theorem = cfg.noise.is_white() ? "Theorem 1.3" : "Theorem 1.5";
  if (diagram.bracket) {
    w.add_summary_line(theorem + " dichotomy (" + cfg.noise.label() +
                       "): crossover bracket [" + fmt(diagram.bracket->first) + ", " +
                       fmt(diagram.bracket->second) + "], low-end rate " +
                       fmt(diagram.points.front().estimate.rate) + ", high-end rate " +
                       fmt(diagram.points.back().estimate.rate));
  } else {
    w.add_summary_line(theorem + " dichotomy (" + cfg.noise.label() + "): " + diagram.status);
  }
  if (oracle)
    w.add_summary_line(std::string("Oracle rate monotonicity in xi: ") +
                       (monotone_ok ? "holds within 2 stderr" : "VIOLATED"));
  w.add_summary_line(dalang_summary(cfg));
}

}  // namespace

RunResult run_config(const RunConfig& cfg, const std::string& subcommand) {
  ReportWriter writer(subcommand, cfg);
  if (subcommand == "operator-info") run_operator_info(cfg, writer);
  else if (subcommand == "kernel-verify") run_kernel_verify(cfg, writer);
  else if (subcommand == "lemma-check") run_lemma_check(cfg, writer);
  else if (subcommand == "simulate") run_simulate(cfg, writer);
  else if (subcommand == "oracle") run_oracle(cfg, writer);
  else if (subcommand == "sweep") run_sweep(cfg, writer);
  else
    throw ValidationError("unknown subcommand: " + subcommand);

  writer.emit(cfg.out_dir);
  RunResult result;
  result.report = writer.report();
  result.out_dir = cfg.out_dir;
  return result;
}

}  // namespace stableheat
