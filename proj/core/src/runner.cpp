#include "tfe/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <stdexcept>

#include "tfe/assembly.hpp"
#include "tfe/dump.hpp"

namespace tfe {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Smooth periodic bump: a Gaussian summed over the 3x3 nearest images.
ScalarFn wrapped_gaussian(const RunConfig& cfg) {
  const double cx = cfg.center_x, cy = cfg.center_y;
  const double s2 = 2.0 * cfg.sigma * cfg.sigma;
  const double Lx = cfg.Lx, Ly = cfg.Ly;
  return [=](double x, double y) {
    double v = 0.0;
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j) {
        const double dx = x - cx - i * Lx;
        const double dy = y - cy - j * Ly;
        v += std::exp(-(dx * dx + dy * dy) / s2);
      }
    return v;
  };
}

// Subtract the quadrature mean so the field integrates to zero.
void make_mean_free(Field& f) {
  const SparseOperator M = mass_matrix(f.space);
  const auto w = M.row_sums();
  double mean = 0.0, vol = 0.0;
  for (Index i = 0; i < f.size(); ++i) {
    mean += w[i] * f[i];
    vol += w[i];
  }
  mean /= vol;
  for (Index i = 0; i < f.size(); ++i) f[i] -= mean;
}

ScalarFn jet_psi(const RunConfig& cfg) {
  const double A = cfg.amplitude, Ly = cfg.Ly;
  return [=](double, double y) { return A * std::cos(2.0 * kPi * y / Ly); };
}

std::string dump_name(const std::string& dir, const std::string& field,
                      long step, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%06ld.", step);
  return dir + "/" + field + buf + ext;
}

std::string resolve_outdir(const RunConfig& cfg, const std::string& override_dir) {
  const std::string dir =
      override_dir.empty() ? cfg.output_directory : override_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

void dump_field(const Field& f, const RunConfig& cfg, const std::string& dir,
                const std::string& name, long step,
                std::vector<std::string>* written = nullptr) {
  const bool vtk = cfg.dump_format == "vtk";
  const std::string path = dump_name(dir, name, step, vtk ? "vtk" : "txt");
  if (vtk)
    write_vtk(f, path, name);
  else
    write_dump(f, path);
  if (written != nullptr) written->push_back(path);
}

}  // namespace

Field initial_omega(const RunConfig& cfg, const SpacePtr& v0) {
  if (cfg.initial == "rest") return Field(v0);
  if (cfg.initial == "geostrophic-jet") {
    const double A = cfg.amplitude, Ly = cfg.Ly;
    const double k = 2.0 * kPi / Ly;
    Field omega = interpolate(v0, ScalarFn([=](double, double y) {
                                return A * k * k * std::cos(k * y);
                              }));
    if (cfg.perturbation != 0.0) {
      Field bump = interpolate(v0, wrapped_gaussian(cfg));
      make_mean_free(bump);
      for (Index i = 0; i < omega.size(); ++i)
        omega[i] += cfg.perturbation * bump[i];
    }
    return omega;
  }
  if (cfg.initial == "gaussian-vortex") {
    Field omega = interpolate(v0, wrapped_gaussian(cfg));
    make_mean_free(omega);
    for (Index i = 0; i < omega.size(); ++i) omega[i] *= cfg.amplitude;
    return omega;
  }
  // custom-expression
  if (!cfg.omega_expression)
    throw ConfigError("euler2d custom initial data needs initial.omega");
  return interpolate(v0, cfg.omega_expression->fn());
}

LinearParams linear_params(const RunConfig& cfg) {
  if (cfg.f_expression)
    throw ConfigError("swe-linear supports only a constant physics.f");
  LinearParams p;
  p.f = cfg.f;
  p.g = cfg.g;
  p.H = cfg.H;
  p.dt = cfg.dt;
  return p;
}

LinearState initial_linear(const RunConfig& cfg, const LinearSWE& model) {
  const SpacePtr& v0 = model.vertex_space();
  const double f = model.params().f;

  auto balanced_or_pure_rotation = [&](const Field& psi) {
    if (f != 0.0) return model.geostrophic_state(psi);
    LinearState s = model.rest_state();
    Field u(model.edge_space());
    grad_perp(v0, model.edge_space()).apply(psi.coeffs.data(), u.coeffs.data());
    s.u = std::move(u);
    return s;
  };

  if (cfg.initial == "rest") return model.rest_state();
  if (cfg.initial == "geostrophic-jet") {
    if (f == 0.0)
      throw ConfigError("geostrophic-jet needs a nonzero physics.f for swe-linear");
    return model.geostrophic_state(interpolate(v0, jet_psi(cfg)));
  }
  if (cfg.initial == "gaussian-vortex") {
    Field omega = interpolate(v0, wrapped_gaussian(cfg));
    make_mean_free(omega);
    for (Index i = 0; i < omega.size(); ++i) omega[i] *= cfg.amplitude;
    const Euler2D helper(v0->mesh());
    return balanced_or_pure_rotation(helper.elliptic_solve(omega));
  }
  // custom-expression
  if (cfg.psi_expression && cfg.ux_expression)
    throw ConfigError("give either initial.psi or initial.ux/uy, not both");
  LinearState s = model.rest_state();
  if (cfg.psi_expression) {
    s = balanced_or_pure_rotation(interpolate(v0, cfg.psi_expression->fn()));
  } else if (cfg.ux_expression) {
    const Expression ux = *cfg.ux_expression, uy = *cfg.uy_expression;
    s.u = interpolate(model.edge_space(), VectorFn([=](double x, double y) {
                        return Vec2{ux.eval(x, y), uy.eval(x, y)};
                      }));
  }
  if (cfg.eta_expression)
    s.eta = interpolate(model.cell_space(), cfg.eta_expression->fn());
  if (!cfg.psi_expression && !cfg.ux_expression && !cfg.eta_expression)
    throw ConfigError(
        "swe-linear custom initial data needs initial.psi, initial.ux/uy, "
        "or initial.eta");
  return s;
}

SweParams nonlinear_params(const RunConfig& cfg, const PeriodicQuadMesh& mesh) {
  SweParams p;
  p.f_value = cfg.f;
  if (cfg.f_expression)
    p.f_field = interpolate(make_space(mesh, Family::V0), cfg.f_expression->fn());
  p.g = cfg.g;
  if (cfg.b_expression)
    p.b_field = interpolate(make_space(mesh, Family::V2), cfg.b_expression->fn());
  p.tau = cfg.stabilization == Stabilization::none ? 0.0 : cfg.resolved_tau();
  p.stab = cfg.stabilization;
  p.integrator = cfg.scheme;
  p.dt = cfg.dt;
  p.k_max = cfg.k_max;
  p.upwind = cfg.upwind;
  p.linear = cfg.linear;
  p.newton = cfg.newton;
  return p;
}

SweState initial_nonlinear(const RunConfig& cfg, const NonlinearSWE& model) {
  const SpacePtr& v0 = model.vertex_space();
  const SpacePtr& v1 = model.edge_space();
  const SpacePtr& v2 = model.cell_space();
  const double f = cfg.f, g = cfg.g, H = cfg.H;
  const SparseOperator G = grad_perp(v0, v1);

  SweState s{Field(v1), Field(v2)};
  for (Index c = 0; c < v2->ndofs(); ++c) s.D[c] = H;

  auto u_from_psi = [&](const Field& psi) {
    Field u(v1);
    G.apply(psi.coeffs.data(), u.coeffs.data());
    return u;
  };

  if (cfg.initial == "geostrophic-jet") {
    const Field psi = interpolate(v0, jet_psi(cfg));
    s.u = u_from_psi(psi);
    const Field eta = l2_project(psi, v2);
    for (Index c = 0; c < v2->ndofs(); ++c) s.D[c] += (f / g) * eta[c];
    if (cfg.perturbation != 0.0) {
      Field bump = interpolate(v2, wrapped_gaussian(cfg));
      make_mean_free(bump);
      for (Index c = 0; c < v2->ndofs(); ++c)
        s.D[c] += cfg.perturbation * bump[c];
    }
  } else if (cfg.initial == "gaussian-vortex") {
    Field omega = interpolate(v0, wrapped_gaussian(cfg));
    make_mean_free(omega);
    for (Index i = 0; i < omega.size(); ++i) omega[i] *= cfg.amplitude;
    const Euler2D helper(v0->mesh());
    const Field psi = helper.elliptic_solve(omega);
    s.u = u_from_psi(psi);
    if (f != 0.0) {
      const Field eta = l2_project(psi, v2);
      for (Index c = 0; c < v2->ndofs(); ++c) s.D[c] += (f / g) * eta[c];
    }
  } else if (cfg.initial == "custom-expression") {
    if (cfg.psi_expression && cfg.ux_expression)
      throw ConfigError("give either initial.psi or initial.ux/uy, not both");
    if (cfg.psi_expression)
      s.u = u_from_psi(interpolate(v0, cfg.psi_expression->fn()));
    else if (cfg.ux_expression) {
      const Expression ux = *cfg.ux_expression, uy = *cfg.uy_expression;
      s.u = interpolate(v1, VectorFn([=](double x, double y) {
                          return Vec2{ux.eval(x, y), uy.eval(x, y)};
                        }));
    }
    if (cfg.d_expression)
      s.D = interpolate(v2, cfg.d_expression->fn());
    if (!cfg.psi_expression && !cfg.ux_expression && !cfg.d_expression)
      throw ConfigError(
          "swe-nonlinear custom initial data needs initial.psi, "
          "initial.ux/uy, or initial.d");
  }
  // "rest" keeps u = 0, D = H.

  for (Index c = 0; c < v2->ndofs(); ++c)
    if (!(s.D[c] > 0.0))
      throw std::domain_error("initial layer depth is not positive");
  return s;
}

namespace {

RunResult drive_euler(const RunConfig& cfg, const std::string& dir) {
  const PeriodicQuadMesh mesh(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly);
  double tau = 0.0;
  if (cfg.stabilization == Stabilization::supg_q)
    tau = cfg.resolved_tau();
  else if (cfg.stabilization != Stabilization::none)
    throw ConfigError("euler2d supports stabilization none or supg-q");
  Euler2D model(mesh, tau);
  model.linear_config() = cfg.linear;
  model.newton_config() = cfg.newton;

  const SparseOperator Div = div_matrix(model.edge_space(),
                                        make_space(mesh, Family::V2));
  const auto m2 = m2_diagonal(make_space(mesh, Family::V2));
  auto div_norm = [&](const Field& omega) {
    const Field u = model.velocity(model.elliptic_solve(omega));
    std::vector<double> d(m2.size());
    Div.apply(u.coeffs.data(), d.data());
    double acc = 0.0;
    for (std::size_t c = 0; c < d.size(); ++c) acc += m2[c] * d[c] * d[c];
    return std::sqrt(acc);
  };

  Field omega = initial_omega(cfg, model.vertex_space());

  RunResult result;
  DiagnosticsWriter csv(dir + "/" + cfg.diagnostics_file);
  result.diagnostics_path = csv.path();
  auto record = [&](long step, int iters, double res) {
    DiagnosticsRecord r;
    r.step = step;
    r.time = step * cfg.dt;
    r.energy = model.energy(omega);
    r.enstrophy = model.enstrophy(omega);
    r.mass = model.total_vorticity(omega);
    r.total_vorticity = r.mass;
    r.div_l2 = div_norm(omega);
    r.newton_iters = iters;
    r.residual_norm = res;
    csv.append(r);
    return r;
  };
  auto maybe_dump = [&](long step) {
    if (cfg.dump_interval > 0 && step % cfg.dump_interval == 0)
      dump_field(omega, cfg, dir, "omega", step);
  };

  result.first = record(0, 0, 0.0);
  maybe_dump(0);
  result.last = result.first;
  for (int n = 0; n < cfg.steps; ++n) {
    NewtonReport rep;
    omega = model.step_midpoint(omega, cfg.dt, &rep);
    result.last = record(n + 1, rep.iterations, rep.residual_norm);
    maybe_dump(n + 1);
    ++result.steps_completed;
  }
  return result;
}

RunResult drive_linear(const RunConfig& cfg, const std::string& dir) {
  const PeriodicQuadMesh mesh(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly);
  LinearSWE model(mesh, linear_params(cfg));
  model.linear_config() = cfg.linear;

  const SparseOperator M0 = mass_matrix(model.vertex_space());
  const SparseOperator G = grad_perp(model.vertex_space(), model.edge_space());
  const auto& m2 = model.m2_diag();

  LinearState s = initial_linear(cfg, model);

  RunResult result;
  DiagnosticsWriter csv(dir + "/" + cfg.diagnostics_file);
  result.diagnostics_path = csv.path();
  auto record = [&](long step, int iters, double res) {
    DiagnosticsRecord r;
    r.step = step;
    r.time = step * cfg.dt;
    r.energy = model.energy(s);
    // Weak curl w solves M0 w = G^T M1 u; report half its squared norm and
    // the total circulation (identically zero on the torus).
    std::vector<double> m1u(s.u.size()), curl_dual(M0.rows());
    model.M1().apply(s.u.coeffs.data(), m1u.data());
    G.apply_transpose(m1u.data(), curl_dual.data());
    const std::vector<double> w = cg(M0, curl_dual, cfg.linear);
    double wsq = 0.0, circ = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      wsq += w[i] * curl_dual[i];
      circ += curl_dual[i];
    }
    r.enstrophy = 0.5 * wsq;
    r.total_vorticity = circ;
    double mass = 0.0, dnorm = 0.0;
    std::vector<double> d(m2.size());
    model.Div().apply(s.u.coeffs.data(), d.data());
    for (std::size_t c = 0; c < m2.size(); ++c) {
      mass += m2[c] * s.eta[c];
      dnorm += m2[c] * d[c] * d[c];
    }
    r.mass = mass;
    r.div_l2 = std::sqrt(dnorm);
    r.newton_iters = iters;
    r.residual_norm = res;
    csv.append(r);
    return r;
  };
  auto maybe_dump = [&](long step) {
    if (cfg.dump_interval > 0 && step % cfg.dump_interval == 0) {
      dump_field(s.u, cfg, dir, "u", step);
      dump_field(s.eta, cfg, dir, "eta", step);
    }
  };

  result.first = record(0, 0, 0.0);
  maybe_dump(0);
  result.last = result.first;
  for (int n = 0; n < cfg.steps; ++n) {
    SolveReport rep;
    s = model.step_midpoint(s, &rep);
    result.last = record(n + 1, rep.iterations, rep.residual_norm);
    maybe_dump(n + 1);
    ++result.steps_completed;
  }
  return result;
}

RunResult drive_nonlinear(const RunConfig& cfg, const std::string& dir) {
  const PeriodicQuadMesh mesh(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly);
  NonlinearSWE model(mesh, nonlinear_params(cfg, mesh));
  SweState s = initial_nonlinear(cfg, model);

  RunResult result;
  DiagnosticsWriter csv(dir + "/" + cfg.diagnostics_file);
  result.diagnostics_path = csv.path();
  auto record = [&](long step, int iters, double res) {
    DiagnosticsRecord r;
    r.step = step;
    r.time = step * cfg.dt;
    r.energy = model.energy(s);
    r.enstrophy = model.enstrophy(s);
    r.mass = model.mass(s);
    r.total_vorticity = model.total_vorticity(s);
    r.div_l2 = model.divergence_norm(s.u);
    r.newton_iters = iters;
    r.residual_norm = res;
    csv.append(r);
    return r;
  };
  auto maybe_dump = [&](long step) {
    if (cfg.dump_interval > 0 && step % cfg.dump_interval == 0) {
      dump_field(s.u, cfg, dir, "u", step);
      dump_field(s.D, cfg, dir, "d", step);
    }
  };

  result.first = record(0, 0, 0.0);
  maybe_dump(0);
  result.last = result.first;
  for (int n = 0; n < cfg.steps; ++n) {
    StepInfo info;
    s = model.step(s, &info);
    result.last = record(n + 1, info.newton_iters, info.residual_norm);
    maybe_dump(n + 1);
    ++result.steps_completed;
  }
  return result;
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg, const std::string& output_dir) {
  const std::string dir = resolve_outdir(cfg, output_dir);
  switch (cfg.model) {
    case ModelKind::euler2d: return drive_euler(cfg, dir);
    case ModelKind::swe_linear: return drive_linear(cfg, dir);
    case ModelKind::swe_nonlinear: return drive_nonlinear(cfg, dir);
  }
  throw std::logic_error("run_experiment: unreachable");
}

void write_dispersion_csv(const RunConfig& cfg, std::ostream& out) {
  const PeriodicQuadMesh mesh(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly);
  const LinearParams params = linear_params(cfg);
  const DispersionGrid& gridspec = cfg.dispersion;

  auto sample = [](int i, int count, double lo, double hi) {
    return count == 1 ? lo : lo + (hi - lo) * i / (count - 1.0);
  };
  char buf[140];
  out << "kx,ky,omega1,omega2,omega3\n";
  for (int j = 0; j < gridspec.ky_count; ++j)
    for (int i = 0; i < gridspec.kx_count; ++i) {
      const double kx = sample(i, gridspec.kx_count, gridspec.kx_min,
                               gridspec.kx_max);
      const double ky = sample(j, gridspec.ky_count, gridspec.ky_min,
                               gridspec.ky_max);
      const auto w = dispersion(kx, ky, params, mesh.dx(), mesh.dy());
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", kx,
                    ky, w[0], w[1], w[2]);
      out << buf;
    }
}

std::vector<std::string> dump_initial_fields(const RunConfig& cfg,
                                             const std::string& output_dir) {
  const std::string dir = resolve_outdir(cfg, output_dir);
  const PeriodicQuadMesh mesh(cfg.nx, cfg.ny, cfg.Lx, cfg.Ly);
  std::vector<std::string> written;
  if (cfg.model == ModelKind::euler2d) {
    const Field omega = initial_omega(cfg, make_space(mesh, Family::V0));
    dump_field(omega, cfg, dir, "omega", 0, &written);
  } else if (cfg.model == ModelKind::swe_linear) {
    const LinearSWE model(mesh, linear_params(cfg));
    const LinearState s = initial_linear(cfg, model);
    dump_field(s.u, cfg, dir, "u", 0, &written);
    dump_field(s.eta, cfg, dir, "eta", 0, &written);
  } else {
    const NonlinearSWE model(mesh, nonlinear_params(cfg, mesh));
    const SweState s = initial_nonlinear(cfg, model);
    dump_field(s.u, cfg, dir, "u", 0, &written);
    dump_field(s.D, cfg, dir, "d", 0, &written);
  }
  return written;
}

}  // namespace tfe
