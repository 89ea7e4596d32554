#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "tfe/assembly.hpp"
#include "tfe/euler2d.hpp"
#include "tfe/fespace.hpp"
#include "tfe/mesh.hpp"
#include "tfe/solvers.hpp"

using namespace tfe;
using test_util::kPi;

namespace {

Field sine_vorticity(const SpacePtr& v0) {
  return interpolate(v0, ScalarFn([](double x, double y) {
    return std::sin(2.0 * kPi * x) * std::sin(2.0 * kPi * y);
  }));
}

double elliptic_error(Index n) {
  PeriodicQuadMesh mesh(n, n, 1.0, 1.0);
  Euler2D model(mesh);
  model.linear_config().rtol = 1e-13;
  const Field omega = sine_vorticity(model.vertex_space());
  const Field psi = model.elliptic_solve(omega);
  const double c = -1.0 / (8.0 * kPi * kPi);
  double err = 0.0;
  for (Index i = 0; i < omega.size(); ++i)
    err = std::max(err, std::abs(psi[i] - c * omega[i]));
  return err;
}

}  // namespace

TEST_CASE("stream function solve converges at second order") {
  const double e16 = elliptic_error(16);
  const double e32 = elliptic_error(32);
  const double e64 = elliptic_error(64);
  const double p1 = std::log2(e16 / e32);
  const double p2 = std::log2(e32 / e64);
  CHECK(p1 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(p2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("stream function has zero mean and the velocity is its rotation") {
  PeriodicQuadMesh mesh(16, 12, 2.0, 1.0);
  Euler2D model(mesh);
  test_util::Rng rng(61);
  Field omega(model.vertex_space(),
              test_util::random_vector(rng, model.vertex_space()->ndofs()));
  const Field psi = model.elliptic_solve(omega);
  const auto M0 = mass_matrix(model.vertex_space());
  const auto m0psi = M0.apply(psi.coeffs);
  double mean = 0.0;
  for (double v : m0psi) mean += v;
  CHECK(std::abs(mean) <= 1e-10);

  const Field u = model.velocity(psi);
  const auto G = grad_perp(model.vertex_space(), model.edge_space());
  CHECK(test_util::max_abs_diff(u.coeffs, G.apply(psi.coeffs)) == 0.0);
}

TEST_CASE("Galerkin tendency matches the integrated-by-parts dual") {
  // With a divergence-free velocity the advection pairing <g, u.grad w>
  // equals -<grad g, w u> cell by cell (the quadrature integrates the
  // telescoping flux exactly), giving an independent assembly route.
  PeriodicQuadMesh mesh(12, 12, 1.0, 1.0);
  Euler2D model(mesh);
  model.linear_config().rtol = 1e-14;
  auto v0 = model.vertex_space();
  test_util::Rng rng(62);
  const Field omega = interpolate(v0, test_util::random_smooth_scalar(rng, 1.0, 1.0));

  const Field r = model.semidiscrete_tendency(omega);
  const Field psi = model.elliptic_solve(omega);
  const Field u = model.velocity(psi);

  const auto quad = tensor_gauss(3);
  std::vector<double> wq, ux, uy;
  values_at_quad(omega, quad, wq);
  values_at_quad(u, quad, ux, uy);
  std::vector<double> Fx(wq.size()), Fy(wq.size());
  for (std::size_t i = 0; i < wq.size(); ++i) {
    Fx[i] = wq[i] * ux[i];
    Fy[i] = wq[i] * uy[i];
  }
  const auto b = v0_dual_grad(v0, quad, Fx, Fy);
  const auto M0 = mass_matrix(v0);
  const auto lhs = M0.apply(r.coeffs);
  const double scale = 1.0 + test_util::max_abs(b);
  CHECK(test_util::max_abs_diff(lhs, b) <= 1e-11 * scale);
}

TEST_CASE("midpoint stepping conserves energy, enstrophy, and circulation") {
  PeriodicQuadMesh mesh(24, 24, 1.0, 1.0);
  Euler2D model(mesh);
  model.linear_config().rtol = 1e-13;
  model.newton_config().rtol = 1e-13;
  auto v0 = model.vertex_space();
  Field omega = interpolate(v0, ScalarFn([](double x, double y) {
    return std::sin(2.0 * kPi * x) * std::sin(2.0 * kPi * y) +
           0.3 * std::cos(2.0 * kPi * x) +
           0.2 * std::cos(4.0 * kPi * y);
  }));
  const double E0 = model.energy(omega);
  const double Z0 = model.enstrophy(omega);
  const double C0 = model.total_vorticity(omega);
  const double dt = 0.02;
  for (int s = 0; s < 10; ++s) omega = model.step_midpoint(omega, dt);
  CHECK(std::abs(model.energy(omega) - E0) <= 1e-11 * std::abs(E0));
  CHECK(std::abs(model.enstrophy(omega) - Z0) <= 1e-11 * std::abs(Z0));
  CHECK(std::abs(model.total_vorticity(omega) - C0) <= 1e-12);
}

TEST_CASE("upwinded scheme dissipates along streamlines only") {
  PeriodicQuadMesh mesh(16, 16, 1.0, 1.0);
  const double tau = 0.05;
  Euler2D model(mesh, tau);
  CHECK(model.tau() == tau);
  model.newton_config().rtol = 1e-12;
  auto v0 = model.vertex_space();
  Field omega = interpolate(v0, ScalarFn([](double x, double y) {
    return std::sin(2.0 * kPi * x) * std::sin(2.0 * kPi * y) +
           0.25 * std::sin(2.0 * kPi * (x + y));
  }));
  // The streamwise diffusion diagnostic is never positive.
  CHECK(model.streamwise_diffusion(omega) <= 0.0);

  const double C0 = model.total_vorticity(omega);
  const double Z0 = model.enstrophy(omega);
  const double dt = 0.02;
  for (int s = 0; s < 5; ++s) omega = model.step_midpoint(omega, dt);
  // Total vorticity is conserved for every tau; enstrophy decays under SUPG.
  CHECK(std::abs(model.total_vorticity(omega) - C0) <= 1e-12);
  CHECK(model.enstrophy(omega) <= Z0 + 1e-12);
}

TEST_CASE("energy and enstrophy reduce to quadratic forms") {
  PeriodicQuadMesh mesh(10, 8, 1.0, 2.0);
  Euler2D model(mesh);
  model.linear_config().rtol = 1e-13;
  auto v0 = model.vertex_space();
  test_util::Rng rng(63);
  Field omega(v0, test_util::random_vector(rng, v0->ndofs()));
  const auto M0 = mass_matrix(v0);
  const Field psi = model.elliptic_solve(omega);
  const double Edirect = -0.5 * dot(psi.coeffs, M0.apply(omega.coeffs));
  CHECK(model.energy(omega) ==
        doctest::Approx(Edirect).epsilon(1e-10));
  const double Zdirect = 0.5 * dot(omega.coeffs, M0.apply(omega.coeffs));
  CHECK(model.enstrophy(omega) == doctest::Approx(Zdirect).epsilon(1e-12));

  std::vector<double> ones(static_cast<std::size_t>(v0->ndofs()), 1.0);
  CHECK(model.total_vorticity(omega) ==
        doctest::Approx(dot(ones, M0.apply(omega.coeffs))).epsilon(1e-12));
}

TEST_CASE("midpoint residual and Jacobian agree to first order") {
  PeriodicQuadMesh mesh(8, 8, 1.0, 1.0);
  for (double tau : {0.0, 0.03}) {
    Euler2D model(mesh, tau);
    model.linear_config().rtol = 1e-13;
    auto v0 = model.vertex_space();
    test_util::Rng rng(64);
    Field omega(v0, test_util::random_vector(rng, v0->ndofs(), 0.5));
    const double dt = 0.05;
    auto x = omega.coeffs;
    for (double& v : x) v += 0.01;
    const auto d = test_util::random_vector(rng, v0->ndofs());

    const auto r0 = model.midpoint_residual(omega, dt, x);
    const auto Jd = model.midpoint_jacobian_apply(omega, dt, x, d);
    auto fd_err = [&](double h) {
      auto xp = x;
      for (Index i = 0; i < v0->ndofs(); ++i) xp[i] += h * d[i];
      const auto rp = model.midpoint_residual(omega, dt, xp);
      double err = 0.0;
      for (Index i = 0; i < v0->ndofs(); ++i)
        err = std::max(err, std::abs((rp[i] - r0[i]) / h - Jd[i]));
      return err;
    };
    const double e1 = fd_err(1e-4);
    const double e2 = fd_err(5e-5);
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.25));
  }
}

TEST_CASE("size mismatches are rejected") {
  PeriodicQuadMesh mesh(6, 6, 1.0, 1.0);
  Euler2D model(mesh);
  PeriodicQuadMesh other(5, 5, 1.0, 1.0);
  auto wrong_space = make_space(other, Family::V0);
  Field bad(wrong_space);
  CHECK_THROWS_AS(model.elliptic_solve(bad), std::invalid_argument);
  CHECK_THROWS_AS(model.step_midpoint(bad, 0.1), std::invalid_argument);
}
