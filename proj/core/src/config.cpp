#include "tfe/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

namespace tfe {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

void parse_lines(std::istream& in, const std::string& origin,
                 std::map<std::string, std::string>& out) {
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(where + ": malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(where + ": empty section name");
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (section.empty())
      throw ConfigError(where + ": key '" + key + "' appears before any [section]");
    const std::string qualified = section + "." + key;
    if (!out.emplace(qualified, value).second)
      throw ConfigError(where + ": duplicate key '" + qualified + "'");
  }
}

}  // namespace

ConfigMap ConfigMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path + "'");
  ConfigMap m;
  m.origin_ = path;
  parse_lines(in, path, m.entries_);
  return m;
}

ConfigMap ConfigMap::from_string(const std::string& text,
                                 const std::string& origin) {
  std::istringstream in(text);
  ConfigMap m;
  m.origin_ = origin;
  parse_lines(in, origin, m.entries_);
  return m;
}

bool ConfigMap::contains(const std::string& qualified_key) const {
  return entries_.count(qualified_key) != 0;
}

std::optional<std::string> ConfigMap::take(const std::string& qualified_key) {
  auto it = entries_.find(qualified_key);
  if (it == entries_.end()) return std::nullopt;
  std::string v = it->second;
  entries_.erase(it);
  return v;
}

void ConfigMap::require_empty() const {
  if (entries_.empty()) return;
  std::string msg = origin_ + ": unknown key(s):";
  for (const auto& [k, v] : entries_) msg += " '" + k + "'";
  throw ConfigError(msg);
}

std::string model_name(ModelKind m) {
  switch (m) {
    case ModelKind::euler2d: return "euler2d";
    case ModelKind::swe_linear: return "swe-linear";
    case ModelKind::swe_nonlinear: return "swe-nonlinear";
  }
  return "?";
}

namespace {

// Typed, consume-as-you-go access to a ConfigMap.
class Extract {
public:
  explicit Extract(ConfigMap& map) : map_(map) {}

  std::optional<std::string> raw(const std::string& key) {
    return map_.take(key);
  }

  std::string str(const std::string& key, const std::string& fallback) {
    auto v = map_.take(key);
    return v ? *v : fallback;
  }

  double num(const std::string& key, double fallback) {
    auto v = map_.take(key);
    if (!v) return fallback;
    return parse_num(key, *v);
  }

  std::optional<double> num_opt(const std::string& key) {
    auto v = map_.take(key);
    if (!v) return std::nullopt;
    return parse_num(key, *v);
  }

  int integer(const std::string& key, int fallback) {
    auto v = map_.take(key);
    if (!v) return fallback;
    const double d = parse_num(key, *v);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d)
      throw ConfigError("key '" + key + "': expected an integer, got '" + *v + "'");
    return i;
  }

  bool boolean(const std::string& key, bool fallback) {
    auto v = map_.take(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "on" || *v == "1") return true;
    if (*v == "false" || *v == "off" || *v == "0") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + *v + "'");
  }

  std::optional<Expression> expression(const std::string& key) {
    auto v = map_.take(key);
    if (!v) return std::nullopt;
    try {
      return Expression(*v);
    } catch (const ExpressionError& e) {
      throw ConfigError("key '" + key + "': " + e.what());
    }
  }

private:
  double parse_num(const std::string& key, const std::string& v) {
    const char* begin = v.c_str();
    char* end = nullptr;
    const double d = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
      throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    return d;
  }

  ConfigMap& map_;
};

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  return from_map(ConfigMap::from_file(path));
}

RunConfig RunConfig::from_map(ConfigMap map) {
  Extract ex(map);
  RunConfig c;

  c.nx = ex.integer("mesh.nx", 0);
  c.ny = ex.integer("mesh.ny", 0);
  c.Lx = ex.num("mesh.Lx", 1.0);
  c.Ly = ex.num("mesh.Ly", 1.0);
  if (c.nx < 3 || c.ny < 3)
    throw ConfigError("mesh.nx and mesh.ny are required and must be >= 3");
  if (!(c.Lx > 0.0) || !(c.Ly > 0.0))
    throw ConfigError("mesh.Lx and mesh.Ly must be positive");

  const std::string model = ex.str("model.type", "swe-nonlinear");
  if (model == "euler2d")
    c.model = ModelKind::euler2d;
  else if (model == "swe-linear")
    c.model = ModelKind::swe_linear;
  else if (model == "swe-nonlinear")
    c.model = ModelKind::swe_nonlinear;
  else
    throw ConfigError("model.type: unknown model '" + model + "'");

  const std::string scheme = ex.str("model.scheme", "midpoint");
  if (scheme == "midpoint")
    c.scheme = TimeIntegrator::midpoint;
  else if (scheme == "poisson")
    c.scheme = TimeIntegrator::poisson;
  else if (scheme == "semi-implicit")
    c.scheme = TimeIntegrator::semi_implicit;
  else
    throw ConfigError("model.scheme: unknown scheme '" + scheme + "'");

  const std::string stab = ex.str("model.stabilization", "none");
  if (stab == "none")
    c.stabilization = Stabilization::none;
  else if (stab == "apvm")
    c.stabilization = Stabilization::apvm;
  else if (stab == "supg-q")
    c.stabilization = Stabilization::supg_q;
  else
    throw ConfigError("model.stabilization: unknown mode '" + stab + "'");

  c.tau = ex.num_opt("model.tau");
  if (c.tau && *c.tau < 0.0) throw ConfigError("model.tau must be >= 0");
  c.k_max = ex.integer("model.k_max", 4);
  if (c.k_max < 1) throw ConfigError("model.k_max must be >= 1");
  c.upwind = ex.boolean("model.upwind", true);

  c.f = ex.num("physics.f", 0.0);
  c.f_expression = ex.expression("physics.f_expression");
  c.g = ex.num("physics.g", 1.0);
  c.H = ex.num("physics.H", 1.0);
  c.b_expression = ex.expression("physics.b_expression");
  if (!(c.g > 0.0)) throw ConfigError("physics.g must be positive");
  if (!(c.H > 0.0)) throw ConfigError("physics.H must be positive");

  c.dt = ex.num("time.dt", 0.0);
  c.steps = ex.integer("time.steps", 0);
  if (!(c.dt > 0.0)) throw ConfigError("time.dt is required and must be positive");
  if (c.steps < 0) throw ConfigError("time.steps must be >= 0");

  c.initial = ex.str("initial.type", "rest");
  if (c.initial != "rest" && c.initial != "geostrophic-jet" &&
      c.initial != "gaussian-vortex" && c.initial != "custom-expression")
    throw ConfigError("initial.type: unknown initial condition '" + c.initial + "'");
  c.amplitude = ex.num("initial.amplitude", 0.01);
  c.perturbation = ex.num("initial.perturbation", 0.0);
  c.center_x = ex.num("initial.center_x", 0.5 * c.Lx);
  c.center_y = ex.num("initial.center_y", 0.5 * c.Ly);
  c.sigma = ex.num("initial.sigma", 0.1 * std::min(c.Lx, c.Ly));
  if (!(c.sigma > 0.0)) throw ConfigError("initial.sigma must be positive");
  c.omega_expression = ex.expression("initial.omega");
  c.psi_expression = ex.expression("initial.psi");
  c.eta_expression = ex.expression("initial.eta");
  c.d_expression = ex.expression("initial.d");
  c.ux_expression = ex.expression("initial.ux");
  c.uy_expression = ex.expression("initial.uy");
  if (c.initial == "custom-expression") {
    const bool any = c.omega_expression || c.psi_expression ||
                     c.eta_expression || c.d_expression || c.ux_expression;
    if (!any)
      throw ConfigError(
          "initial.type = custom-expression needs at least one of "
          "initial.omega/psi/eta/d/ux");
    if (static_cast<bool>(c.ux_expression) != static_cast<bool>(c.uy_expression))
      throw ConfigError("initial.ux and initial.uy must be given together");
  }

  c.output_directory = ex.str("output.directory", ".");
  c.diagnostics_file = ex.str("output.diagnostics", "diagnostics.csv");
  c.dump_interval = ex.integer("output.dump_interval", 0);
  if (c.dump_interval < 0) throw ConfigError("output.dump_interval must be >= 0");
  c.dump_format = ex.str("output.dump_format", "text");
  if (c.dump_format != "text" && c.dump_format != "vtk")
    throw ConfigError("output.dump_format must be 'text' or 'vtk'");

  c.linear.rtol = ex.num("solver.rtol", c.linear.rtol);
  c.linear.atol = ex.num("solver.atol", c.linear.atol);
  c.linear.max_iterations =
      ex.integer("solver.max_iterations", c.linear.max_iterations);
  c.linear.gmres_restart =
      ex.integer("solver.gmres_restart", c.linear.gmres_restart);
  c.newton.rtol = ex.num("solver.newton_rtol", c.newton.rtol);
  c.newton.atol = ex.num("solver.newton_atol", c.newton.atol);
  c.newton.max_iterations =
      ex.integer("solver.newton_max_iterations", c.newton.max_iterations);

  const PeriodicQuadMesh probe(c.nx, c.ny, c.Lx, c.Ly);
  const double nyq_x = 3.14159265358979323846 / probe.dx();
  const double nyq_y = 3.14159265358979323846 / probe.dy();
  c.dispersion.kx_count = ex.integer("dispersion.kx_count", 1);
  c.dispersion.ky_count = ex.integer("dispersion.ky_count", 1);
  c.dispersion.kx_min = ex.num("dispersion.kx_min", 0.0);
  c.dispersion.kx_max = ex.num("dispersion.kx_max", nyq_x);
  c.dispersion.ky_min = ex.num("dispersion.ky_min", 0.0);
  c.dispersion.ky_max = ex.num("dispersion.ky_max", nyq_y);
  if (c.dispersion.kx_count < 1 || c.dispersion.ky_count < 1)
    throw ConfigError("dispersion.kx_count/ky_count must be >= 1");
  if ((c.dispersion.kx_count > 1 && c.dispersion.kx_max <= c.dispersion.kx_min) ||
      (c.dispersion.ky_count > 1 && c.dispersion.ky_max <= c.dispersion.ky_min))
    throw ConfigError("dispersion: empty wavenumber range");

  map.require_empty();
  return c;
}

}  // namespace tfe
