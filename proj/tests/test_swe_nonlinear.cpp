#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "test_util.hpp"
#include "tfe/assembly.hpp"
#include "tfe/fespace.hpp"
#include "tfe/mesh.hpp"
#include "tfe/solvers.hpp"
#include "tfe/swe_nonlinear.hpp"

using namespace tfe;
using test_util::kPi;

namespace {

// A smooth positive-depth state with a mix of rotational and divergent flow.
SweState smooth_state(const NonlinearSWE& model, unsigned seed,
                      double depth_amp = 0.2, double vel_amp = 0.3) {
  test_util::Rng rng(seed);
  auto fu = test_util::random_smooth_vector(rng, 1.0, 1.0);
  auto fD = test_util::random_smooth_scalar(rng, 1.0, 1.0);
  SweState s;
  s.u = interpolate(model.edge_space(), [&](double x, double y) {
    const auto v = fu(x, y);
    return Vec2{vel_amp * v.x, vel_amp * v.y};
  });
  s.D = interpolate(model.cell_space(), [&](double x, double y) {
    return 1.0 + depth_amp * fD(x, y);
  });
  return s;
}

Eigen::MatrixXd dense_of(const SparseOperator& A) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(A.rows(), A.cols());
  const auto dd = test_util::to_dense(A);
  for (Index r = 0; r < A.rows(); ++r)
    for (Index c = 0; c < A.cols(); ++c) D(r, c) = dd[r][c];
  return D;
}

}  // namespace

TEST_CASE("potential vorticity of a resting state is f over depth") {
  PeriodicQuadMesh mesh(8, 8, 1.0, 1.0);
  SweParams p;
  p.f_value = 5.0;
  NonlinearSWE model(mesh, p);
  Field u(model.edge_space());
  Field D(model.cell_space());
  for (Index c = 0; c < D.size(); ++c) D[c] = 2.0;
  const Field q = model.diagnose_q(u, D);
  for (Index i = 0; i < q.size(); ++i)
    CHECK(q[i] == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("PV and mass-flux solves match dense oracles") {
  PeriodicQuadMesh mesh(7, 6, 1.5, 1.0);
  SweParams p;
  p.f_value = 3.0;
  p.linear.rtol = 1e-14;
  NonlinearSWE model(mesh, p);
  const auto s = smooth_state(model, 81);
  auto v0 = model.vertex_space();
  auto v1 = model.edge_space();
  const auto quad = tensor_gauss(3);

  // q solves <g, q D> = -<rot-grad g, u> + <g, f> against a dense factor.
  const Eigen::MatrixXd B = dense_of(weighted_v0_mass(v0, s.D));
  const auto G = grad_perp(v0, v1);
  const auto M1 = mass_matrix(v1);
  const auto M0 = mass_matrix(v0);
  std::vector<double> rhs(v0->ndofs());
  G.apply_transpose(M1.apply(s.u.coeffs).data(), rhs.data());
  std::vector<double> ones(static_cast<std::size_t>(v0->ndofs()), 1.0);
  const auto m0ones = M0.apply(ones);
  Eigen::VectorXd b(v0->ndofs());
  for (Index i = 0; i < v0->ndofs(); ++i)
    b(i) = -rhs[i] + p.f_value * m0ones[i];
  const Eigen::VectorXd qd = B.ldlt().solve(b);

  const Field q = model.diagnose_q(s.u, s.D);
  for (Index i = 0; i < v0->ndofs(); ++i)
    CHECK(q[i] == doctest::Approx(qd(i)).epsilon(1e-9));

  // m solves M1 m = <w, D u> with the depth evaluated cellwise.
  std::vector<double> ux, uy, Dq;
  values_at_quad(s.u, quad, ux, uy);
  values_at_quad(s.D, quad, Dq);
  std::vector<double> fx(ux.size()), fy(uy.size());
  for (std::size_t i = 0; i < ux.size(); ++i) {
    fx[i] = Dq[i] * ux[i];
    fy[i] = Dq[i] * uy[i];
  }
  const auto bm = v1_dual_value(v1, quad, fx, fy);
  const Eigen::MatrixXd M1d = dense_of(M1);
  const Eigen::VectorXd md =
      M1d.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(bm.data(), bm.size()));
  const Field m = model.diagnose_m(s.u, s.D);
  for (Index i = 0; i < v1->ndofs(); ++i)
    CHECK(m[i] == doctest::Approx(md(i)).epsilon(1e-9));
}

TEST_CASE("functional rates are exact directional derivatives") {
  PeriodicQuadMesh mesh(10, 10, 1.0, 1.0);
  SweParams p;
  p.f_value = 4.0;
  p.g = 1.5;
  p.linear.rtol = 1e-14;
  NonlinearSWE model(mesh, p);
  const auto s = smooth_state(model, 82);
  test_util::Rng rng(83);
  Field du(model.edge_space(),
           test_util::random_vector(rng, model.edge_space()->ndofs()));
  Field dD(model.cell_space(),
           test_util::random_vector(rng, model.cell_space()->ndofs()));

  auto probe = [&](auto&& functional, double rate) {
    const double eps = 1e-6;
    SweState sp = s, sm = s;
    for (Index i = 0; i < du.size(); ++i) {
      sp.u[i] += eps * du[i];
      sm.u[i] -= eps * du[i];
    }
    for (Index c = 0; c < dD.size(); ++c) {
      sp.D[c] += eps * dD[c];
      sm.D[c] -= eps * dD[c];
    }
    const double fd = (functional(sp) - functional(sm)) / (2.0 * eps);
    CHECK(rate == doctest::Approx(fd).epsilon(2e-5));
  };
  probe([&](const SweState& z) { return model.energy(z); },
        model.energy_rate(s, du, dD));
  probe([&](const SweState& z) { return model.enstrophy(z); },
        model.enstrophy_rate(s, du, dD));
}

TEST_CASE("bracket tendencies conserve mass, energy, and enstrophy") {
  PeriodicQuadMesh mesh(12, 12, 1.0, 1.0);
  for (auto stab : {Stabilization::none, Stabilization::apvm}) {
    SweParams p;
    p.f_value = 6.0;
    p.g = 2.0;
    p.tau = (stab == Stabilization::none) ? 0.0 : 0.02;
    p.stab = stab;
    p.linear.rtol = 1e-14;
    NonlinearSWE model(mesh, p);
    for (unsigned seed : {91u, 92u, 93u}) {
      const auto s = smooth_state(model, seed);
      const auto [du, dD] = model.semidiscrete_tendency(s);

      // Mass: dD/dt is exactly minus the divergence of the projected flux.
      const Field m = model.diagnose_m(s.u, s.D);
      const auto divm = model.Div().apply(m.coeffs);
      for (Index c = 0; c < dD.size(); ++c) CHECK(dD[c] == -divm[c]);

      const double escale = 1.0 + std::abs(model.energy(s));
      CHECK(std::abs(model.energy_rate(s, du, dD)) <= 1e-10 * escale);

      const double zscale = 1.0 + std::abs(model.enstrophy(s));
      const double zrate = model.enstrophy_rate(s, du, dD);
      if (stab == Stabilization::none) {
        CHECK(std::abs(zrate) <= 1e-10 * zscale);
      } else {
        // Upstream shifting can only dissipate.
        CHECK(zrate <= 1e-12 * zscale);
        CHECK(model.apvm_dissipation(s) <= 0.0);
      }
    }
  }
}

TEST_CASE("upwind mass flux: matrix form and upstream selection") {
  PeriodicQuadMesh mesh(5, 4, 1.0, 1.0);
  SweParams p;
  NonlinearSWE model(mesh, p);
  test_util::Rng rng(84);
  Field u(model.edge_space(),
          test_util::random_vector(rng, model.edge_space()->ndofs()));
  Field D(model.cell_space());
  for (Index c = 0; c < D.size(); ++c) D[c] = 1.0 + 0.5 * (c % 3);

  const Field m = model.mass_flux_reconstruct(u, D);
  const auto F = model.upwind_flux_matrix(u);
  const auto FD = F.apply(D.coeffs);
  CHECK(test_util::max_abs_diff(m.coeffs, FD) <= 1e-15);

  // A positive mean flux draws the depth from the plus cell, negative from
  // the minus cell.
  Field one(model.edge_space());
  const Index e = mesh.edge_x_id(2, 1);
  const auto cells = mesh.edge_cells(e);
  one[e] = 1.0;
  Field mu = model.mass_flux_reconstruct(one, D);
  CHECK(mu[e] == D[cells.plus]);
  one[e] = -1.0;
  mu = model.mass_flux_reconstruct(one, D);
  CHECK(mu[e] == -D[cells.minus]);
}

TEST_CASE("stabilized PV values follow the documented shifts") {
  PeriodicQuadMesh mesh(8, 8, 1.0, 1.0);
  SweParams p;
  p.f_value = 5.0;
  p.tau = 0.04;
  p.stab = Stabilization::apvm;
  p.linear.rtol = 1e-13;
  NonlinearSWE model(mesh, p);
  const auto s = smooth_state(model, 85);
  const Field q = model.diagnose_q(s.u, s.D);
  const Field m = model.diagnose_m(s.u, s.D);
  const auto quad = tensor_gauss(3);

  const auto qs = model.stabilized_q_values(q, m, s.D);
  std::vector<double> qv, gx, gy, mx, my;
  values_at_quad(q, quad, qv);
  grads_at_quad(q, quad, gx, gy);
  values_at_quad(m, quad, mx, my);
  const std::size_t nq = quad.w.size();
  REQUIRE(qs.size() == qv.size());
  for (Index c = 0; c < model.cell_space()->ndofs(); ++c)
    for (std::size_t k = 0; k < nq; ++k) {
      const std::size_t i = static_cast<std::size_t>(c) * nq + k;
      const double expect =
          qv[i] - p.tau * (mx[i] * gx[i] + my[i] * gy[i]) / s.D[c];
      CHECK(qs[i] == doctest::Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("streamline PV shift lags the rate term by two accepted steps") {
  PeriodicQuadMesh mesh(8, 8, 1.0, 1.0);
  SweParams p;
  p.f_value = 5.0;
  p.g = 1.0;
  p.tau = 0.02;
  p.stab = Stabilization::supg_q;
  p.dt = 0.02;
  p.linear.rtol = 1e-13;
  NonlinearSWE model(mesh, p);
  auto s = smooth_state(model, 86);
  const auto quad = tensor_gauss(3);

  // The shift without history: q - tau (flux . grad q), no time-rate part.
  auto no_history_shift = [&](const Field& q, const Field& m) {
    std::vector<double> qv, gx, gy, mx, my;
    values_at_quad(q, quad, qv);
    grads_at_quad(q, quad, gx, gy);
    values_at_quad(m, quad, mx, my);
    for (std::size_t i = 0; i < qv.size(); ++i)
      qv[i] -= p.tau * (mx[i] * gx[i] + my[i] * gy[i]);
    return qv;
  };

  const Field q = model.diagnose_q(s.u, s.D);
  const Field m = model.diagnose_m(s.u, s.D);
  CHECK(test_util::max_abs_diff(model.stabilized_q_values(q, m, s.D),
                                no_history_shift(q, m)) <= 1e-15);

  s = model.step(s);
  s = model.step(s);
  const Field q2 = model.diagnose_q(s.u, s.D);
  const Field m2 = model.diagnose_m(s.u, s.D);
  // With two accepted steps the lagged rate engages.
  CHECK(test_util::max_abs_diff(model.stabilized_q_values(q2, m2, s.D),
                                no_history_shift(q2, m2)) > 0.0);

  model.reset_history();
  CHECK(test_util::max_abs_diff(model.stabilized_q_values(q2, m2, s.D),
                                no_history_shift(q2, m2)) <= 1e-15);
}

TEST_CASE("midpoint stepping: exact mass, second-order energy drift") {
  PeriodicQuadMesh mesh(12, 12, 1.0, 1.0);
  SweParams p;
  p.f_value = 5.0;
  p.g = 2.0;
  p.newton.rtol = 1e-13;
  p.linear.rtol = 1e-14;
  auto run = [&](double dt, int steps) {
    SweParams pp = p;
    pp.dt = dt;
    NonlinearSWE model(mesh, pp);
    auto s = smooth_state(model, 87, 0.1, 0.2);
    const double M0v = model.mass(s);
    const double E0 = model.energy(s);
    const double V0 = model.total_vorticity(s);
    for (int k = 0; k < steps; ++k) s = model.step(s);
    struct Out {
      double dmass, denergy, dvort;
    };
    return Out{std::abs(model.mass(s) - M0v), std::abs(model.energy(s) - E0),
               std::abs(model.total_vorticity(s) - V0)};
  };
  const auto coarse = run(0.04, 5);
  const auto fine = run(0.02, 10);
  CHECK(coarse.dmass <= 1e-12);
  CHECK(fine.dmass <= 1e-12);
  CHECK(coarse.dvort <= 1e-11);
  // The cubic energy is not a midpoint invariant; its one-step error is
  // third order, so halving dt shrinks it eightfold.
  const double e1 = run(0.04, 1).denergy;
  const double e2 = run(0.02, 1).denergy;
  CHECK(e1 / e2 == doctest::Approx(8.0).epsilon(0.3));
}

TEST_CASE("conserving integrator keeps the cubic energy to solver precision") {
  PeriodicQuadMesh mesh(12, 12, 1.0, 1.0);
  SweParams p;
  p.f_value = 5.0;
  p.g = 2.0;
  p.dt = 0.05;
  p.integrator = TimeIntegrator::poisson;
  p.newton.rtol = 1e-13;
  p.linear.rtol = 1e-14;

  SUBCASE("flat bottom") {}
  SUBCASE("with topography") {
    auto v2 = make_space(mesh, Family::V2);
    p.b_field = interpolate(v2, ScalarFn([](double x, double y) {
      return 0.1 * std::cos(2.0 * kPi * x) * std::sin(2.0 * kPi * y);
    }));
  }

  NonlinearSWE model(mesh, p);
  auto s = smooth_state(model, 88, 0.15, 0.25);
  const double E0 = model.energy(s);
  const double M0v = model.mass(s);
  for (int k = 0; k < 5; ++k) s = model.step(s);
  CHECK(std::abs(model.energy(s) - E0) <= 1e-11 * std::abs(E0));
  CHECK(std::abs(model.mass(s) - M0v) <= 1e-12);
}

TEST_CASE("semi-implicit sweeps: more iterations, smaller defect") {
  PeriodicQuadMesh mesh(12, 12, 1.0, 1.0);
  auto defect = [&](int k_max) {
    SweParams p;
    p.f_value = 5.0;
    p.g = 2.0;
    p.dt = 0.05;
    p.k_max = k_max;
    p.integrator = TimeIntegrator::semi_implicit;
    p.linear.rtol = 1e-13;
    NonlinearSWE model(mesh, p);
    auto s = smooth_state(model, 89, 0.1, 0.2);
    StepInfo info;
    s = model.step(s, &info);
    return info.residual_norm;
  };
  const double r2 = defect(2);
  const double r4 = defect(4);
  CHECK(r4 < r2);
  CHECK(r4 <= 1e-6);
}

TEST_CASE("semi-implicit stepping conserves mass and stays bounded") {
  PeriodicQuadMesh mesh(12, 12, 1.0, 1.0);
  SweParams p;
  p.f_value = 5.0;
  p.g = 2.0;
  p.dt = 0.05;
  p.integrator = TimeIntegrator::semi_implicit;
  p.linear.rtol = 1e-13;
  NonlinearSWE model(mesh, p);
  auto s = smooth_state(model, 90, 0.1, 0.2);
  const double M0v = model.mass(s);
  const double E0 = model.energy(s);
  for (int k = 0; k < 10; ++k) s = model.step(s);
  CHECK(std::abs(model.mass(s) - M0v) <= 1e-12);
  CHECK(std::abs(model.energy(s) - E0) <= 0.01 * std::abs(E0));
}

TEST_CASE("a constant-PV state stays constant under the reconstructed flux") {
  PeriodicQuadMesh mesh(12, 12, 1.0, 1.0);
  auto v0 = make_space(mesh, Family::V0);
  auto v1 = make_space(mesh, Family::V1);
  auto v2 = make_space(mesh, Family::V2);

  // Build (u, D, f) with PV exactly one: f solves <g, f> = <g, D> +
  // <rot-grad g, u> for all vertex functions g.
  const Field psi = interpolate(v0, ScalarFn([](double x, double y) {
    return 0.02 * std::sin(2.0 * kPi * x) * std::sin(2.0 * kPi * y);
  }));
  const auto G = grad_perp(v0, v1);
  const auto M1 = mass_matrix(v1);
  const auto M0 = mass_matrix(v0);
  SweState s;
  s.u = Field(v1, G.apply(psi.coeffs));
  s.D = interpolate(v2, ScalarFn([](double x, double y) {
    return 1.0 + 0.1 * std::cos(2.0 * kPi * x) +
           0.05 * std::sin(2.0 * kPi * y);
  }));

  const auto quad = tensor_gauss(3);
  std::vector<double> Dq;
  values_at_quad(s.D, quad, Dq);
  auto b = v0_dual_value(v0, quad, Dq);
  std::vector<double> curl(v0->ndofs());
  G.apply_transpose(M1.apply(s.u.coeffs).data(), curl.data());
  for (Index i = 0; i < v0->ndofs(); ++i) b[i] += curl[i];
  SolverConfig mcfg;
  mcfg.rtol = 1e-14;
  Field f(v0, cg(M0, b, mcfg));

  SweParams p;
  p.f_field = f;
  p.g = 1.5;
  p.dt = 0.05;
  p.integrator = TimeIntegrator::semi_implicit;
  p.linear.rtol = 1e-13;
  NonlinearSWE model(mesh, p);

  const Field q0 = model.diagnose_q(s.u, s.D);
  for (Index i = 0; i < q0.size(); ++i)
    CHECK(q0[i] == doctest::Approx(1.0).epsilon(1e-11));

  std::vector<SweState> traj{s};
  std::vector<StepInfo> infos;
  for (int k = 0; k < 5; ++k) {
    StepInfo info;
    info.record_pv_flux = true;
    s = model.step(s, &info);
    traj.push_back(s);
    infos.push_back(info);
  }
  const auto report = model.pv_consistency_check(traj, infos);
  CHECK(report.constant_initial_q);
  CHECK(report.max_constant_deviation <= 1e-10);
  CHECK(report.max_flux_residual <= 1e-8);
}

TEST_CASE("recorded PV fluxes close the weak budget for every integrator") {
  PeriodicQuadMesh mesh(10, 10, 1.0, 1.0);
  for (auto which : {TimeIntegrator::midpoint, TimeIntegrator::poisson,
                     TimeIntegrator::semi_implicit}) {
    SweParams p;
    p.f_value = 4.0;
    p.g = 1.5;
    p.dt = 0.04;
    p.integrator = which;
    p.newton.rtol = 1e-13;
    p.linear.rtol = 1e-13;
    NonlinearSWE model(mesh, p);
    auto s = smooth_state(model, 95, 0.1, 0.2);
    std::vector<SweState> traj{s};
    std::vector<StepInfo> infos;
    for (int k = 0; k < 3; ++k) {
      StepInfo info;
      info.record_pv_flux = true;
      s = model.step(s, &info);
      traj.push_back(s);
      infos.push_back(info);
    }
    const auto report = model.pv_consistency_check(traj, infos);
    CHECK(report.max_flux_residual <= 1e-8);
  }
}

TEST_CASE("Newton residual probes differentiate correctly and reject sweeps") {
  PeriodicQuadMesh mesh(8, 8, 1.0, 1.0);
  for (auto which : {TimeIntegrator::midpoint, TimeIntegrator::poisson}) {
    SweParams p;
    p.f_value = 4.0;
    p.g = 1.5;
    p.integrator = which;
    p.linear.rtol = 1e-14;
    NonlinearSWE model(mesh, p);
    const auto s = smooth_state(model, 96, 0.1, 0.2);
    const Index n1 = model.edge_space()->ndofs();
    const Index n2 = model.cell_space()->ndofs();

    std::vector<double> x(n1 + n2);
    for (Index i = 0; i < n1; ++i) x[i] = s.u[i] + 0.01;
    for (Index c = 0; c < n2; ++c) x[n1 + c] = s.D[c] * 1.02;
    test_util::Rng rng(97);
    const auto d = test_util::random_vector(rng, n1 + n2);
    const double dt = 0.05;

    const auto r0 = model.step_residual(s, dt, x);
    const auto Jd = model.step_jacobian_apply(s, dt, x, d);
    auto fd_err = [&](double h) {
      auto xp = x;
      for (std::size_t i = 0; i < xp.size(); ++i) xp[i] += h * d[i];
      const auto rp = model.step_residual(s, dt, xp);
      double err = 0.0;
      for (std::size_t i = 0; i < xp.size(); ++i)
        err = std::max(err, std::abs((rp[i] - r0[i]) / h - Jd[i]));
      return err;
    };
    const double e1 = fd_err(1e-4);
    const double e2 = fd_err(5e-5);
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.25));
  }

  SweParams p;
  p.integrator = TimeIntegrator::semi_implicit;
  NonlinearSWE model(mesh, p);
  const auto s = smooth_state(model, 98);
  std::vector<double> x(
      static_cast<std::size_t>(model.edge_space()->ndofs() +
                               model.cell_space()->ndofs()),
      1.0);
  CHECK_THROWS_AS(model.step_residual(s, 0.05, x), std::invalid_argument);
  CHECK_THROWS_AS(model.step_jacobian_apply(s, 0.05, x, x),
                  std::invalid_argument);
}

TEST_CASE("a constant Coriolis field matches the scalar parameter") {
  PeriodicQuadMesh mesh(8, 7, 1.0, 1.0);
  SweParams pa;
  pa.f_value = 6.0;
  pa.linear.rtol = 1e-14;
  NonlinearSWE ma(mesh, pa);

  SweParams pb = pa;
  Field f(ma.vertex_space());
  for (Index i = 0; i < f.size(); ++i) f[i] = 6.0;
  pb.f_value = 0.0;
  pb.f_field = f;
  NonlinearSWE mb(mesh, pb);

  const auto s = smooth_state(ma, 99);
  const Field qa = ma.diagnose_q(s.u, s.D);
  const Field qb = mb.diagnose_q(s.u, s.D);
  CHECK(test_util::max_abs_diff(qa.coeffs, qb.coeffs) <= 1e-11);
}

TEST_CASE("nonpositive depth is rejected") {
  PeriodicQuadMesh mesh(6, 6, 1.0, 1.0);
  SweParams p;
  p.f_value = 2.0;
  NonlinearSWE model(mesh, p);
  SweState s;
  s.u = Field(model.edge_space());
  s.D = Field(model.cell_space());
  for (Index c = 0; c < s.D.size(); ++c) s.D[c] = 1.0;
  s.D[5] = -0.25;
  CHECK_THROWS_AS(model.diagnose_q(s.u, s.D), std::domain_error);
  CHECK_THROWS_AS(model.step(s), SolveError);
}
