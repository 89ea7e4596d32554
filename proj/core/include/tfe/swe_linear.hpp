// Linear rotating shallow water on the f-plane: implicit midpoint stepping
// with a Schur-complement preconditioner, exact discrete geostrophic balance
// construction, and Bloch-wave dispersion analysis of the semidiscrete
// operator reduced to one periodic lattice unit.
#pragma once

#include <array>
#include <utility>

#include "tfe/assembly.hpp"
#include "tfe/fespace.hpp"
#include "tfe/mesh.hpp"
#include "tfe/solvers.hpp"
#include "tfe/sparse.hpp"

namespace tfe {

struct LinearParams {
  double f = 0.0;   // Coriolis frequency
  double g = 1.0;   // gravity
  double H = 1.0;   // mean depth
  double dt = 0.1;  // step size for step_midpoint
};

struct LinearState {
  Field u;    // edge-flux velocity
  Field eta;  // cellwise-constant surface elevation
};

class LinearSWE {
public:
  LinearSWE(const PeriodicQuadMesh& mesh, const LinearParams& params);

  const LinearParams& params() const { return params_; }
  const SpacePtr& vertex_space() const { return v0_; }
  const SpacePtr& edge_space() const { return v1_; }
  const SpacePtr& cell_space() const { return v2_; }
  const SparseOperator& M1() const { return M1_; }
  const SparseOperator& W() const { return W_; }
  const SparseOperator& Div() const { return Div_; }
  const SparseOperator& P() const { return P_; }  // Div^T M2
  const std::vector<double>& m2_diag() const { return m2_; }
  SolverConfig& linear_config() { return linear_; }

  LinearState rest_state() const;

  // Exactly steady state induced by a zero-mean vertex stream function:
  // u is its rotated gradient and eta = (f/g) times its cell projection.
  // Requires f != 0.
  LinearState geostrophic_state(const Field& psi) const;

  // (du/dt, deta/dt): velocity from an M1 solve of Coriolis plus pressure
  // gradient; elevation exactly cellwise as -H div u.
  std::pair<Field, Field> tendency(const LinearState& s) const;

  // One implicit midpoint step via Schur-preconditioned GMRES.
  LinearState step_midpoint(const LinearState& s,
                            SolveReport* report = nullptr) const;

  // (1/2)(H <u,u> + g <eta,eta>), the conserved quadratic energy.
  double energy(const LinearState& s) const;

private:
  void check_state(const LinearState& s, const char* who) const;

  LinearParams params_;
  SpacePtr v0_, v1_, v2_;
  SparseOperator M1_, W_, Div_, P_, G_;
  std::vector<double> m2_;
  SolverConfig linear_;
};

// The three real frequencies of the Bloch-reduced semidiscrete system at
// wavenumber (kx, ky) on a lattice with spacings (dx, dy), sorted ascending
// (ties broken by the divergence content of the eigenvector).  Throws if the
// reduced operator loses its skew structure (any non-real frequency).
std::array<double, 3> dispersion(double kx, double ky,
                                 const LinearParams& params, double dx,
                                 double dy);

}  // namespace tfe
