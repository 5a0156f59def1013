#include "stableheat/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "stableheat/errors.hpp"
#include "stableheat/parallel.hpp"

namespace stableheat {

InitialCondition InitialCondition::constant(double amplitude) {
  InitialCondition ic;
  ic.kind = Kind::Constant;
  ic.amplitude = amplitude;
  return ic;
}

InitialCondition InitialCondition::bump(double amplitude, double width) {
  InitialCondition ic;
  ic.kind = Kind::Bump;
  ic.amplitude = amplitude;
  ic.width = width;
  return ic;
}

InitialCondition InitialCondition::indicator(double amplitude, double a, double b) {
  InitialCondition ic;
  ic.kind = Kind::Indicator;
  ic.amplitude = amplitude;
  ic.a = a;
  ic.b = b;
  return ic;
}

Eigen::VectorXd InitialCondition::evaluate(const DomainGrid& grid) const {
  Eigen::VectorXd v(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    const double x = grid.nodes[i];
    switch (kind) {
      case Kind::Constant:
        v[i] = amplitude;
        break;
      case Kind::Bump: {
        const double r = x / width;
        const double core = 1.0 - r * r;
        v[i] = core > 0.0 ? amplitude * core * core : 0.0;
        break;
      }
      case Kind::Indicator:
        v[i] = (x >= a && x <= b) ? amplitude : 0.0;
        break;
    }
  }
  return v;
}

std::string InitialCondition::kind_name() const {
  switch (kind) {
    case Kind::Constant: return "constant";
    case Kind::Bump: return "bump";
    case Kind::Indicator: return "indicator";
  }
  return "?";
}

std::string InitialCondition::label() const {
  std::ostringstream os;
  os << kind_name() << "(amplitude=" << amplitude;
  if (kind == Kind::Bump) os << ", width=" << width;
  if (kind == Kind::Indicator) os << ", [" << a << ", " << b << "]";
  os << ")";
  return os.str();
}

void SimulationConfig::validate(double mu1) const {
  operator_spec.validate();
  noise.validate();
  if (!(xi >= 0.0)) throw ValidationError("noise level xi must be >= 0");
  if (!(dt > 0.0)) throw ValidationError("time step dt must be > 0");
  if (!(horizon > 0.0)) throw ValidationError("horizon must be > 0");
  if (paths < 1) throw ValidationError("path count must be >= 1");
  if (record_times.empty()) throw ValidationError("at least one record time is required");
  for (double t : record_times)
    if (!(t > 0.0 && t <= horizon * (1.0 + 1e-9)))
      throw ValidationError("record times must lie in (0, horizon]");
  for (size_t i = 0; i + 1 < record_times.size(); ++i)
    if (!(record_times[i] < record_times[i + 1]))
      throw ValidationError("record times must be strictly increasing");
  for (int p : moment_orders)
    if (p < 2) throw ValidationError("moment orders must satisfy p >= 2");
  if (mu1 > 0.0 && dt > 0.1 / mu1) {
    std::ostringstream os;
    os << "dt=" << dt << " violates the accuracy guard dt <= 0.1/mu1 = " << 0.1 / mu1;
    throw ValidationError(os.str());
  }
}

namespace {

// Accumulators for one chunk of paths, Kahan-compensated, fixed path order.
struct ChunkAccum {
  Eigen::ArrayXXd sum_u, comp_u;
  std::vector<Eigen::ArrayXXd> sum_pow, comp_pow;
  std::vector<Eigen::ArrayXXd> sum_pow2, comp_pow2;
  std::vector<KahanSum> neg_mass;  // per record time
  std::vector<int> m_eff;

  ChunkAccum(int records, int nodes, int orders)
      : sum_u(Eigen::ArrayXXd::Zero(records, nodes)),
        comp_u(Eigen::ArrayXXd::Zero(records, nodes)),
        neg_mass(static_cast<size_t>(records)),
        m_eff(static_cast<size_t>(records), 0) {
    for (int q = 0; q < orders; ++q) {
      sum_pow.push_back(Eigen::ArrayXXd::Zero(records, nodes));
      comp_pow.push_back(Eigen::ArrayXXd::Zero(records, nodes));
      sum_pow2.push_back(Eigen::ArrayXXd::Zero(records, nodes));
      comp_pow2.push_back(Eigen::ArrayXXd::Zero(records, nodes));
    }
  }
};

inline void kahan_cell(double& sum, double& comp, double v) {
  const double y = v - comp;
  const double t = sum + y;
  comp = (t - sum) - y;
  sum = t;
}

// |u| large enough that |u|^{2 p_max} would overflow counts as divergence.
constexpr double kOverflowGuard = 1e30;

}  // namespace

Eigen::VectorXd mild_euler_step(const Eigen::VectorXd& u, double xi, const SigmaFunction& sigma,
                                const Eigen::MatrixXd& propagator,
                                const Eigen::MatrixXd& noise_propagator, double h,
                                const Eigen::VectorXd& dF) {
  Eigen::VectorXd w(u.size());
  for (int i = 0; i < u.size(); ++i) w[i] = xi * sigma(u[i]) * dF[i];
  return h * (propagator * u) + h * (noise_propagator * w);
}

EnsembleSummary simulate_ensemble(const SimulationConfig& cfg, const HeatKernelEvaluator& eval,
                                  const NoiseIncrementSampler& sampler) {
  cfg.validate(eval.mu1());
  const DalangResult dal = dalang_check(cfg.noise, cfg.operator_spec.alpha);
  if (!dal.pass)
    throw AssumptionViolation("Dalang condition fails for " + cfg.noise.label() + ": " +
                              dal.criterion);
  require_valid_sigma(cfg.sigma);

  const DomainGrid& grid = eval.grid();
  const int n = grid.n;
  const Eigen::VectorXd u0 = cfg.u0.evaluate(grid);
  if (u0.minCoeff() < 0.0 || !u0.allFinite())
    throw ValidationError("initial condition must be nonnegative and finite");
  if (!(grid.h * u0.sum() > 0.0))
    throw ValidationError("initial condition must carry strictly positive mass");

  // Sorted unique moment orders, always including 2 and 4.
  std::set<int> orders(cfg.moment_orders.begin(), cfg.moment_orders.end());
  orders.insert(2);
  orders.insert(4);
  const std::vector<int> order_list(orders.begin(), orders.end());
  const int n_orders = static_cast<int>(order_list.size());

  // Snap record times to whole steps.
  const int n_steps = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
  std::vector<int> record_steps;
  std::vector<double> record_times;
  for (double t : cfg.record_times) {
    int k = static_cast<int>(std::llround(t / cfg.dt));
    k = std::max(1, std::min(k, n_steps));
    if (!record_steps.empty() && k <= record_steps.back())
      throw ValidationError("record times collapse onto the same step; use a finer dt");
    record_steps.push_back(k);
    record_times.push_back(k * cfg.dt);
  }
  const int n_rec = static_cast<int>(record_steps.size());

  const std::shared_ptr<const Eigen::MatrixXd> prop = eval.propagator(cfg.dt);
  const std::shared_ptr<const Eigen::MatrixXd> noise_prop =
      cfg.noise.is_white() ? eval.noise_propagator(cfg.dt) : prop;
  const Eigen::MatrixXd& p_dt = *prop;
  const Eigen::MatrixXd& pn_dt = *noise_prop;
  const double h = grid.h;

  constexpr int kChunk = 64;
  const int n_chunks = (cfg.paths + kChunk - 1) / kChunk;
  std::vector<ChunkAccum> chunks(static_cast<size_t>(n_chunks),
                                 ChunkAccum(n_rec, n, n_orders));
  std::vector<int> chunk_diverged(static_cast<size_t>(n_chunks), 0);

  parallel_for(n_chunks, cfg.threads, [&](int chunk) {
    ChunkAccum& acc = chunks[static_cast<size_t>(chunk)];
    const int first = chunk * kChunk;
    const int last = std::min(cfg.paths, first + kChunk);
    Eigen::VectorXd u(n), w(n), dF(n), next(n);
    for (int path = first; path < last; ++path) {
      u = u0;
      bool alive = true;
      int rec = 0;
      for (int step = 0; step < n_steps && rec < n_rec; ++step) {
        next.noalias() = h * (p_dt * u);
        if (cfg.xi > 0.0) {
          dF = sampler.sample_increment(cfg.dt, static_cast<std::uint64_t>(path),
                                        static_cast<std::uint64_t>(step));
          for (int i = 0; i < n; ++i) w[i] = cfg.xi * cfg.sigma(u[i]) * dF[i];
          next.noalias() += h * (pn_dt * w);
        }
        u = next;
        if (!u.allFinite() || u.cwiseAbs().maxCoeff() > kOverflowGuard) {
          alive = false;
          break;
        }
        // Record times are visited in ascending step order.
        while (rec < n_rec && record_steps[static_cast<size_t>(rec)] == step + 1) {
          double neg = 0.0, abs = 0.0;
          for (int i = 0; i < n; ++i) {
            kahan_cell(acc.sum_u(rec, i), acc.comp_u(rec, i), u[i]);
            const double au = std::abs(u[i]);
            neg += std::max(-u[i], 0.0);
            abs += au;
            for (int q = 0; q < n_orders; ++q) {
              const double up = std::pow(au, order_list[static_cast<size_t>(q)]);
              kahan_cell(acc.sum_pow[static_cast<size_t>(q)](rec, i),
                         acc.comp_pow[static_cast<size_t>(q)](rec, i), up);
              kahan_cell(acc.sum_pow2[static_cast<size_t>(q)](rec, i),
                         acc.comp_pow2[static_cast<size_t>(q)](rec, i), up * up);
            }
          }
          acc.neg_mass[static_cast<size_t>(rec)].add(abs > 0.0 ? neg / abs : 0.0);
          acc.m_eff[static_cast<size_t>(rec)] += 1;
          ++rec;
        }
      }
      if (!alive) ++chunk_diverged[static_cast<size_t>(chunk)];
    }
  });

  // Ordered merge: chunk order is fixed, so the reduction is independent of
  // the worker count.
  EnsembleSummary out;
  out.record_times = record_times;
  out.moment_orders = order_list;
  out.grid = grid;
  out.xi = cfg.xi;
  out.dt = cfg.dt;
  out.seed = cfg.seed;
  out.paths_total = cfg.paths;
  out.sum_u = Eigen::MatrixXd::Zero(n_rec, n);
  out.sum_pow.assign(static_cast<size_t>(n_orders), Eigen::MatrixXd::Zero(n_rec, n));
  out.sum_pow2.assign(static_cast<size_t>(n_orders), Eigen::MatrixXd::Zero(n_rec, n));
  out.m_effective.assign(static_cast<size_t>(n_rec), 0);
  out.negative_mass.assign(static_cast<size_t>(n_rec), 0.0);

  std::vector<std::vector<KahanSum>> total_u(static_cast<size_t>(n_rec),
                                             std::vector<KahanSum>(static_cast<size_t>(n)));
  std::vector<std::vector<std::vector<KahanSum>>> total_pow(
      static_cast<size_t>(n_orders),
      std::vector<std::vector<KahanSum>>(static_cast<size_t>(n_rec),
                                         std::vector<KahanSum>(static_cast<size_t>(n))));
  auto total_pow2 = total_pow;
  std::vector<KahanSum> total_neg(static_cast<size_t>(n_rec));

  for (int chunk = 0; chunk < n_chunks; ++chunk) {
    const ChunkAccum& acc = chunks[static_cast<size_t>(chunk)];
    out.diverged_paths += chunk_diverged[static_cast<size_t>(chunk)];
    for (int r = 0; r < n_rec; ++r) {
      out.m_effective[static_cast<size_t>(r)] += acc.m_eff[static_cast<size_t>(r)];
      total_neg[static_cast<size_t>(r)].merge(acc.neg_mass[static_cast<size_t>(r)]);
      for (int i = 0; i < n; ++i) {
        KahanSum part{acc.sum_u(r, i), acc.comp_u(r, i)};
        total_u[static_cast<size_t>(r)][static_cast<size_t>(i)].merge(part);
        for (int q = 0; q < n_orders; ++q) {
          KahanSum pp{acc.sum_pow[static_cast<size_t>(q)](r, i),
                      acc.comp_pow[static_cast<size_t>(q)](r, i)};
          total_pow[static_cast<size_t>(q)][static_cast<size_t>(r)][static_cast<size_t>(i)]
              .merge(pp);
          KahanSum p2{acc.sum_pow2[static_cast<size_t>(q)](r, i),
                      acc.comp_pow2[static_cast<size_t>(q)](r, i)};
          total_pow2[static_cast<size_t>(q)][static_cast<size_t>(r)][static_cast<size_t>(i)]
              .merge(p2);
        }
      }
    }
  }
  for (int r = 0; r < n_rec; ++r) {
    const int m = out.m_effective[static_cast<size_t>(r)];
    out.negative_mass[static_cast<size_t>(r)] =
        m > 0 ? total_neg[static_cast<size_t>(r)].value() / m : 0.0;
    for (int i = 0; i < n; ++i) {
      out.sum_u(r, i) = total_u[static_cast<size_t>(r)][static_cast<size_t>(i)].value();
      for (int q = 0; q < n_orders; ++q) {
        out.sum_pow[static_cast<size_t>(q)](r, i) =
            total_pow[static_cast<size_t>(q)][static_cast<size_t>(r)][static_cast<size_t>(i)]
                .value();
        out.sum_pow2[static_cast<size_t>(q)](r, i) =
            total_pow2[static_cast<size_t>(q)][static_cast<size_t>(r)][static_cast<size_t>(i)]
                .value();
      }
    }
  }

  const double diverged_frac =
      static_cast<double>(out.diverged_paths) / static_cast<double>(cfg.paths);
  out.status = diverged_frac > 0.5 ? "unusable" : (diverged_frac > 0.01 ? "warning" : "ok");
  return out;
}

EnsembleSummary simulate_ensemble(const SimulationConfig& cfg) {
  const DiscreteOperator op = build_operator(cfg.operator_spec, cfg.grid);
  const HeatKernelEvaluator eval(eigendecompose(op));
  const NoiseIncrementSampler sampler = cfg.noise.is_white()
                                            ? white_noise_sampler(cfg.grid, cfg.seed)
                                            : build_covariance(cfg.noise, cfg.grid, cfg.seed);
  return simulate_ensemble(cfg, eval, sampler);
}

int EnsembleSummary::order_slot(int p) const {
  for (size_t q = 0; q < moment_orders.size(); ++q)
    if (moment_orders[q] == p) return static_cast<int>(q);
  throw QueryError("moment order p=" + std::to_string(p) + " was not recorded in this run");
}

double EnsembleSummary::mean(int r, int i) const {
  return sum_u(r, i) / static_cast<double>(m_effective[static_cast<size_t>(r)]);
}

double EnsembleSummary::moment(int r, int i, int p) const {
  return sum_pow[static_cast<size_t>(order_slot(p))](r, i) /
         static_cast<double>(m_effective[static_cast<size_t>(r)]);
}

double EnsembleSummary::moment_stderr(int r, int i, int p) const {
  const int q = order_slot(p);
  const double m = static_cast<double>(m_effective[static_cast<size_t>(r)]);
  const double first = sum_pow[static_cast<size_t>(q)](r, i) / m;
  const double second = sum_pow2[static_cast<size_t>(q)](r, i) / m;
  const double var = std::max(second - first * first, 0.0);
  return std::sqrt(var / m);
}

}  // namespace stableheat
