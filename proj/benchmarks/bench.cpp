// Microbenchmarks for the hot paths: operator assembly, sparse products,
// Krylov solvers, one step of each time integrator, and a dispersion sweep.
#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "tfe/assembly.hpp"
#include "tfe/euler2d.hpp"
#include "tfe/fespace.hpp"
#include "tfe/mesh.hpp"
#include "tfe/solvers.hpp"
#include "tfe/sparse.hpp"
#include "tfe/swe_linear.hpp"
#include "tfe/swe_nonlinear.hpp"

namespace {

constexpr double kPi = 3.14159265358979323846;

tfe::PeriodicQuadMesh make_mesh(long n) {
  return tfe::PeriodicQuadMesh(n, n, 1.0, 1.0);
}

void bm_assemble_edge_mass(benchmark::State& state) {
  auto mesh = make_mesh(state.range(0));
  auto v1 = tfe::make_space(mesh, tfe::Family::V1);
  for (auto _ : state)
    benchmark::DoNotOptimize(tfe::mass_matrix(v1));
  state.SetItemsProcessed(state.iterations() * mesh.num_edges());
}
BENCHMARK(bm_assemble_edge_mass)->Arg(32)->Arg(64)->Arg(128);

void bm_assemble_coriolis(benchmark::State& state) {
  auto mesh = make_mesh(state.range(0));
  auto v1 = tfe::make_space(mesh, tfe::Family::V1);
  for (auto _ : state)
    benchmark::DoNotOptimize(tfe::coriolis_matrix(v1, 3.0));
  state.SetItemsProcessed(state.iterations() * mesh.num_edges());
}
BENCHMARK(bm_assemble_coriolis)->Arg(32)->Arg(64)->Arg(128);

void bm_csr_matvec(benchmark::State& state) {
  auto mesh = make_mesh(state.range(0));
  auto v1 = tfe::make_space(mesh, tfe::Family::V1);
  const auto M1 = tfe::mass_matrix(v1);
  std::vector<double> x(M1.cols(), 1.0), y(M1.rows());
  for (auto _ : state) {
    M1.apply(x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * M1.nnz());
}
BENCHMARK(bm_csr_matvec)->Arg(64)->Arg(128)->Arg(256);

void bm_cg_vertex_mass(benchmark::State& state) {
  auto mesh = make_mesh(state.range(0));
  auto v0 = tfe::make_space(mesh, tfe::Family::V0);
  const auto M0 = tfe::mass_matrix(v0);
  std::vector<double> b(M0.rows());
  for (std::size_t i = 0; i < b.size(); ++i)
    b[i] = std::sin(0.01 * static_cast<double>(i));
  tfe::SolverConfig config;
  config.rtol = 1e-12;
  for (auto _ : state)
    benchmark::DoNotOptimize(tfe::cg(M0, b, config));
}
BENCHMARK(bm_cg_vertex_mass)->Arg(64)->Arg(128);

void bm_gmres_edge_mass(benchmark::State& state) {
  auto mesh = make_mesh(state.range(0));
  auto v1 = tfe::make_space(mesh, tfe::Family::V1);
  const auto M1 = tfe::mass_matrix(v1);
  std::vector<double> b(M1.rows());
  for (std::size_t i = 0; i < b.size(); ++i)
    b[i] = std::cos(0.02 * static_cast<double>(i));
  tfe::SolverConfig config;
  config.rtol = 1e-12;
  for (auto _ : state)
    benchmark::DoNotOptimize(tfe::gmres(M1, b, config));
}
BENCHMARK(bm_gmres_edge_mass)->Arg(64)->Arg(128);

void bm_euler_step(benchmark::State& state) {
  auto mesh = make_mesh(state.range(0));
  tfe::Euler2D model(mesh, 0.0);
  const auto omega =
      tfe::interpolate(model.vertex_space(), [](double x, double y) {
        return std::sin(2 * kPi * x) * std::sin(2 * kPi * y);
      });
  for (auto _ : state)
    benchmark::DoNotOptimize(model.step_midpoint(omega, 0.01));
}
BENCHMARK(bm_euler_step)->Arg(32)->Arg(64);

void bm_linear_swe_step(benchmark::State& state) {
  auto mesh = make_mesh(state.range(0));
  tfe::LinearParams params;
  params.f = 5.0;
  params.g = 2.0;
  params.dt = 0.02;
  tfe::LinearSWE model(mesh, params);
  auto psi = tfe::interpolate(model.vertex_space(), [](double x, double y) {
    return 0.05 * std::sin(2 * kPi * x) * std::cos(2 * kPi * y);
  });
  const auto s0 = model.geostrophic_state(psi);
  for (auto _ : state)
    benchmark::DoNotOptimize(model.step_midpoint(s0));
}
BENCHMARK(bm_linear_swe_step)->Arg(32)->Arg(64);

tfe::SweState jet_state(const tfe::NonlinearSWE& model, double f_over_g) {
  auto psi = tfe::interpolate(model.vertex_space(), [](double x, double y) {
    return 0.02 * std::cos(2 * kPi * y) +
           0.002 * std::sin(2 * kPi * x) * std::cos(2 * kPi * y);
  });
  tfe::SweState s;
  s.u = tfe::Field(model.edge_space(),
                   tfe::grad_perp(model.vertex_space(), model.edge_space())
                       .apply(psi.coeffs));
  s.D = tfe::l2_project(psi, model.cell_space());
  for (auto& d : s.D.coeffs) d = 1.0 + f_over_g * d;
  return s;
}

void bm_swe_step(benchmark::State& state, tfe::TimeIntegrator integ) {
  auto mesh = make_mesh(state.range(0));
  tfe::SweParams params;
  params.f_value = 5.0;
  params.g = 2.0;
  params.integrator = integ;
  params.dt = 0.02;
  tfe::NonlinearSWE model(mesh, params);
  const auto s0 = jet_state(model, params.f_value / params.g);
  for (auto _ : state)
    benchmark::DoNotOptimize(model.step(s0));
}
void bm_swe_midpoint(benchmark::State& state) {
  bm_swe_step(state, tfe::TimeIntegrator::midpoint);
}
void bm_swe_poisson(benchmark::State& state) {
  bm_swe_step(state, tfe::TimeIntegrator::poisson);
}
void bm_swe_semi_implicit(benchmark::State& state) {
  bm_swe_step(state, tfe::TimeIntegrator::semi_implicit);
}
BENCHMARK(bm_swe_midpoint)->Arg(32)->Arg(64);
BENCHMARK(bm_swe_poisson)->Arg(32)->Arg(64);
BENCHMARK(bm_swe_semi_implicit)->Arg(32)->Arg(64);

void bm_dispersion_sweep(benchmark::State& state) {
  tfe::LinearParams params;
  params.f = 5.0;
  params.g = 2.0;
  const double dx = 1.0 / 64;
  const long n = state.range(0);
  for (auto _ : state) {
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
      const double kx = kPi / dx * static_cast<double>(i) / n;
      for (long j = 0; j < n; ++j) {
        const double ky = kPi / dx * static_cast<double>(j) / n;
        acc += tfe::dispersion(kx, ky, params, dx, dx)[2];
      }
    }
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(bm_dispersion_sweep)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
