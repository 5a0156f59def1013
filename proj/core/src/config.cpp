#include "stableheat/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "stableheat/errors.hpp"

namespace stableheat {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' is not a number: '" + v + "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' is not an integer: '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string s = lower(v);
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ValidationError("config key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<int>(parse_int(key, item)));
  }
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string num_list(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

std::string int_list(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str());
}

RunConfig RunConfig::parse_text(const std::string& text) {
  RunConfig cfg;
  cfg.noise = CorrelationModel::white();
  cfg.sigma = SigmaFunction::linear(1.0);
  cfg.u0 = InitialCondition::bump(1.0, 0.5);

  // Raw operator/model parameters, resolved after the full pass so key order
  // inside a section never matters.
  std::map<std::string, std::string> kv;
  std::string section;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ValidationError("config line " + std::to_string(lineno) + ": malformed section");
      section = lower(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ValidationError("config line " + std::to_string(lineno) + ": key outside any section");
    kv[section + "." + key] = value;
  }

  // Operator.
  GeneratorSpec spec;
  std::string variant = "fractional";
  double alpha = 1.5, nu = 1.0, lambda = 0.0, beta = 1.2, a = 1.0, m = 1.0;
  // Noise / sigma / u0 raw values.
  std::string noise_kind = "white";
  double gamma = 0.5, theta = 1.0, floor_k = 1.0;
  std::string sigma_kind = "linear";
  double sigma_c = 1.0, sigma_s = 0.0;
  std::string u0_kind = "bump";
  double u0_amp = 1.0, u0_width = 0.5, u0_a = -0.5, u0_b = 0.5;

  for (const auto& [full_key, value] : kv) {
    const std::string k = full_key;
    if (k == "operator.variant") variant = lower(value);
    else if (k == "operator.alpha") alpha = parse_double(k, value);
    else if (k == "operator.nu") nu = parse_double(k, value);
    else if (k == "operator.lambda") lambda = parse_double(k, value);
    else if (k == "operator.beta") beta = parse_double(k, value);
    else if (k == "operator.a") a = parse_double(k, value);
    else if (k == "operator.m") m = parse_double(k, value);
    else if (k == "grid.radius") cfg.radius = parse_double(k, value);
    else if (k == "grid.n") cfg.n = static_cast<int>(parse_int(k, value));
    else if (k == "noise.kind") noise_kind = lower(value);
    else if (k == "noise.gamma") gamma = parse_double(k, value);
    else if (k == "noise.theta") theta = parse_double(k, value);
    else if (k == "noise.k") floor_k = parse_double(k, value);
    else if (k == "sigma.kind") sigma_kind = lower(value);
    else if (k == "sigma.c") sigma_c = parse_double(k, value);
    else if (k == "sigma.s") sigma_s = parse_double(k, value);
    else if (k == "u0.kind") u0_kind = lower(value);
    else if (k == "u0.amplitude") u0_amp = parse_double(k, value);
    else if (k == "u0.width") u0_width = parse_double(k, value);
    else if (k == "u0.a") u0_a = parse_double(k, value);
    else if (k == "u0.b") u0_b = parse_double(k, value);
    else if (k == "simulation.xi") cfg.xi = parse_double(k, value);
    else if (k == "simulation.dt") cfg.dt = parse_double(k, value);
    else if (k == "simulation.horizon") cfg.horizon = parse_double(k, value);
    else if (k == "simulation.paths") cfg.paths = static_cast<int>(parse_int(k, value));
    else if (k == "simulation.seed") cfg.seed = static_cast<std::uint64_t>(parse_int(k, value));
    else if (k == "simulation.record_times") cfg.record_times = parse_double_list(k, value);
    else if (k == "simulation.moment_orders") cfg.moment_orders = parse_int_list(k, value);
    else if (k == "analysis.epsilon") cfg.epsilon = parse_double(k, value);
    else if (k == "analysis.method") cfg.method = lower(value);
    else if (k == "analysis.xi_values") cfg.xi_values = parse_double_list(k, value);
    else if (k == "analysis.bisect") cfg.bisect = parse_bool(k, value);
    else if (k == "analysis.bracket_width") cfg.bracket_width = parse_double(k, value);
    else if (k == "analysis.sweep_order") cfg.sweep_order = static_cast<int>(parse_int(k, value));
    else if (k == "analysis.lemma") cfg.lemma = value;
    else if (k == "analysis.beta") cfg.lemma_betas = parse_double_list(k, value);
    else if (k == "analysis.beta_over_mu1") cfg.lemma_betas_over_mu1 = parse_double_list(k, value);
    else if (k == "analysis.points") cfg.points = parse_double_list(k, value);
    else if (k == "analysis.laplace_beta") cfg.laplace_beta = parse_double(k, value);
    else if (k == "output.dir") cfg.out_dir = value;
    else if (k == "output.eigenvectors") cfg.write_eigenvectors = parse_bool(k, value);
    else if (k == "output.threads") cfg.threads = static_cast<int>(parse_int(k, value));
    else
      throw ValidationError("unknown config key: " + k);
  }

  if (variant == "fractional") spec = GeneratorSpec::fractional(alpha, nu);
  else if (variant == "fractional_drift") spec = GeneratorSpec::fractional_with_drift(alpha, nu, lambda);
  else if (variant == "double_fractional") spec = GeneratorSpec::double_fractional(alpha, nu, beta, a);
  else if (variant == "relativistic") spec = GeneratorSpec::relativistic_surrogate(alpha, m);
  else
    throw ValidationError("unknown operator variant: " + variant);
  cfg.op = spec;

  if (noise_kind == "white") cfg.noise = CorrelationModel::white();
  else if (noise_kind == "riesz") cfg.noise = CorrelationModel::riesz(gamma);
  else if (noise_kind == "cauchy") cfg.noise = CorrelationModel::cauchy(theta);
  else if (noise_kind == "constant_floor") cfg.noise = CorrelationModel::constant_floor(floor_k);
  else
    throw ValidationError("unknown noise kind: " + noise_kind);

  if (sigma_kind == "linear") cfg.sigma = SigmaFunction::linear(sigma_c);
  else if (sigma_kind == "saturating") cfg.sigma = SigmaFunction::saturating(sigma_c, sigma_s);
  else
    throw ValidationError("unknown sigma kind: " + sigma_kind);

  if (u0_kind == "constant") cfg.u0 = InitialCondition::constant(u0_amp);
  else if (u0_kind == "bump") cfg.u0 = InitialCondition::bump(u0_amp, u0_width);
  else if (u0_kind == "indicator") cfg.u0 = InitialCondition::indicator(u0_amp, u0_a, u0_b);
  else
    throw ValidationError("unknown u0 kind: " + u0_kind);

  return cfg;
}

DomainGrid RunConfig::make_grid() const { return DomainGrid::make(radius, n); }

std::vector<double> RunConfig::effective_record_times() const {
  if (!record_times.empty()) return record_times;
  std::vector<double> times;
  for (int i = 1; i <= 10; ++i) times.push_back(horizon * static_cast<double>(i) / 10.0);
  return times;
}

SimulationConfig RunConfig::simulation() const {
  SimulationConfig sim;
  sim.operator_spec = op;
  sim.grid = make_grid();
  sim.noise = noise;
  sim.sigma = sigma;
  sim.u0 = u0;
  sim.xi = xi;
  sim.dt = dt;
  sim.horizon = horizon;
  sim.paths = paths;
  sim.seed = seed;
  sim.record_times = effective_record_times();
  sim.moment_orders = moment_orders;
  sim.threads = threads;
  return sim;
}

std::string RunConfig::canonical_text() const {
  std::ostringstream os;
  os << "operator.variant=" << op.kind_name() << "\n";
  os << "operator.alpha=" << num(op.alpha) << "\n";
  os << "operator.nu=" << num(op.nu) << "\n";
  os << "operator.lambda=" << num(op.drift) << "\n";
  os << "operator.beta=" << num(op.beta_exp) << "\n";
  os << "operator.a=" << num(op.a) << "\n";
  os << "operator.m=" << num(op.mass) << "\n";
  os << "grid.radius=" << num(radius) << "\n";
  os << "grid.n=" << n << "\n";
  os << "noise.kind=" << noise.kind_name() << "\n";
  os << "noise.gamma=" << num(noise.gamma) << "\n";
  os << "noise.theta=" << num(noise.theta) << "\n";
  os << "noise.k=" << num(noise.floor_k) << "\n";
  os << "sigma.kind=" << sigma.kind_name() << "\n";
  os << "sigma.c=" << num(sigma.c) << "\n";
  os << "sigma.s=" << num(sigma.s) << "\n";
  os << "u0.kind=" << u0.kind_name() << "\n";
  os << "u0.amplitude=" << num(u0.amplitude) << "\n";
  os << "u0.width=" << num(u0.width) << "\n";
  os << "u0.a=" << num(u0.a) << "\n";
  os << "u0.b=" << num(u0.b) << "\n";
  os << "simulation.xi=" << num(xi) << "\n";
  os << "simulation.dt=" << num(dt) << "\n";
  os << "simulation.horizon=" << num(horizon) << "\n";
  os << "simulation.paths=" << paths << "\n";
  os << "simulation.seed=" << seed << "\n";
  os << "simulation.record_times=" << num_list(effective_record_times()) << "\n";
  os << "simulation.moment_orders=" << int_list(moment_orders) << "\n";
  os << "analysis.epsilon=" << num(epsilon) << "\n";
  os << "analysis.method=" << method << "\n";
  os << "analysis.xi_values=" << num_list(xi_values) << "\n";
  os << "analysis.bisect=" << (bisect ? "true" : "false") << "\n";
  os << "analysis.bracket_width=" << num(bracket_width) << "\n";
  os << "analysis.sweep_order=" << sweep_order << "\n";
  os << "analysis.lemma=" << lemma << "\n";
  os << "analysis.beta=" << num_list(lemma_betas) << "\n";
  os << "analysis.beta_over_mu1=" << num_list(lemma_betas_over_mu1) << "\n";
  os << "analysis.points=" << num_list(points) << "\n";
  os << "analysis.laplace_beta=" << num(laplace_beta) << "\n";
  return os.str();
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

}  // namespace stableheat
