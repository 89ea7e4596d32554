// Flat key = value configuration with [section] headers and '#' comments.
// Parsing is strict: unknown keys, duplicate keys, malformed values, and
// out-of-range settings are all hard errors.
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "tfe/expression.hpp"
#include "tfe/solvers.hpp"
#include "tfe/swe_nonlinear.hpp"

namespace tfe {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Raw section.key -> value store produced by the text parser.
class ConfigMap {
public:
  static ConfigMap from_file(const std::string& path);
  static ConfigMap from_string(const std::string& text,
                               const std::string& origin = "<string>");

  bool contains(const std::string& qualified_key) const;
  // Removes and returns the value; records nothing if absent.
  std::optional<std::string> take(const std::string& qualified_key);
  // Error mentioning every key that was never consumed.
  void require_empty() const;
  std::size_t size() const { return entries_.size(); }
  const std::string& origin() const { return origin_; }

private:
  std::map<std::string, std::string> entries_;
  std::string origin_;
};

enum class ModelKind { euler2d, swe_linear, swe_nonlinear };

std::string model_name(ModelKind m);

struct DispersionGrid {
  int kx_count = 1;
  int ky_count = 1;
  double kx_min = 0.0, kx_max = 0.0;
  double ky_min = 0.0, ky_max = 0.0;
};

// Fully validated run description.  All expressions are parsed eagerly, so a
// RunConfig that loads successfully cannot fail later for syntax reasons.
struct RunConfig {
  // [mesh]
  int nx = 0, ny = 0;
  double Lx = 1.0, Ly = 1.0;

  // [model]
  ModelKind model = ModelKind::swe_nonlinear;
  TimeIntegrator scheme = TimeIntegrator::midpoint;
  Stabilization stabilization = Stabilization::none;
  std::optional<double> tau;  // default resolves to dt/2
  int k_max = 4;
  bool upwind = true;

  // [physics]
  double f = 0.0;
  std::optional<Expression> f_expression;
  double g = 1.0;
  double H = 1.0;
  std::optional<Expression> b_expression;

  // [time]
  double dt = 0.0;
  int steps = 0;

  // [initial]
  std::string initial = "rest";
  double amplitude = 0.01;
  double perturbation = 0.0;
  double center_x = 0.5, center_y = 0.5;
  double sigma = 0.1;
  std::optional<Expression> omega_expression;   // euler2d
  std::optional<Expression> psi_expression;     // any model: u from rot-grad
  std::optional<Expression> eta_expression;     // swe-linear surface
  std::optional<Expression> d_expression;       // swe-nonlinear depth
  std::optional<Expression> ux_expression, uy_expression;

  // [output]
  std::string output_directory = ".";
  std::string diagnostics_file = "diagnostics.csv";
  int dump_interval = 0;  // 0 disables field dumps
  std::string dump_format = "text";

  // [solver]
  SolverConfig linear;
  NewtonConfig newton;

  // [dispersion]
  DispersionGrid dispersion;

  double resolved_tau() const { return tau ? *tau : 0.5 * dt; }

  static RunConfig from_file(const std::string& path);
  static RunConfig from_map(ConfigMap map);
};

}  // namespace tfe
