// Vorticity-streamfunction scheme for 2D incompressible Euler on the torus:
// vertex-space vorticity, diagnostic zero-mean stream function, optional
// streamline-upwind (SUPG) test-function shift, and energy/enstrophy
// conserving implicit midpoint stepping.
#pragma once

#include "tfe/assembly.hpp"
#include "tfe/fespace.hpp"
#include "tfe/mesh.hpp"
#include "tfe/quadrature.hpp"
#include "tfe/solvers.hpp"
#include "tfe/sparse.hpp"

namespace tfe {

class Euler2D {
public:
  // tau >= 0 is the SUPG timescale; tau = 0 gives the plain Galerkin scheme.
  explicit Euler2D(const PeriodicQuadMesh& mesh, double tau = 0.0);

  const SpacePtr& vertex_space() const { return v0_; }
  const SpacePtr& edge_space() const { return v1_; }
  double tau() const { return tau_; }

  SolverConfig& linear_config() { return linear_; }
  NewtonConfig& newton_config() { return newton_; }

  // Zero-mean stream function psi with <grad g, grad psi> = -<g, omega> for
  // all vertex test functions.  The constant mode of omega induces no flow
  // and is projected out.
  Field elliptic_solve(const Field& omega) const;

  // Rotated gradient of the stream function.
  Field velocity(const Field& psi) const;

  // Galerkin (tau = 0) or SUPG (tau > 0) spatial tendency: solves the
  // (shifted, nonsymmetric for tau > 0) mass system for omega_t.
  Field semidiscrete_tendency(const Field& omega) const;

  // One implicit midpoint step by Newton iteration with an exact
  // matrix-free Jacobian.
  Field step_midpoint(const Field& omega, double dt,
                      NewtonReport* report = nullptr) const;

  // Residual of the implicit midpoint equations at a candidate end state x,
  // and the exact action of its Jacobian on a perturbation dx.  These are
  // the same operators the stepper iterates with; exposed so derivative
  // consistency can be probed directly.
  std::vector<double> midpoint_residual(const Field& omega, double dt,
                                        const std::vector<double>& x) const;
  std::vector<double> midpoint_jacobian_apply(const Field& omega, double dt,
                                              const std::vector<double>& x,
                                              const std::vector<double>& dx) const;

  // Kinetic energy (1/2)||grad psi||^2 (= -1/2 <psi, omega>).
  double energy(const Field& omega) const;
  // (1/2) <omega, omega>.
  double enstrophy(const Field& omega) const;
  // <omega, 1>.
  double total_vorticity(const Field& omega) const;
  // Streamwise diffusion diagnostic -tau ||u . grad omega||^2 (never positive).
  double streamwise_diffusion(const Field& omega) const;

private:
  struct AdvectionContext;  // frozen midpoint data for residual/Jacobian

  void check_field(const Field& omega, const char* who) const;
  std::vector<double> residual_dual(const std::vector<double>& value_q,
                                    const std::vector<double>& gx_q,
                                    const std::vector<double>& gy_q) const;
  AdvectionContext midpoint_context(const Field& omega,
                                    const std::vector<double>& x) const;
  // Defect (x - omega) + dt u_m . grad omega_m at quadrature points.
  std::vector<double> midpoint_defect(const Field& omega, double dt,
                                      const std::vector<double>& x,
                                      const AdvectionContext& ctx) const;
  void midpoint_japply(double dt, const AdvectionContext& ctx,
                       const std::vector<double>& e, const double* dx,
                       double* dy) const;

  SpacePtr v0_, v1_, v2_;
  Quadrature quad_;
  SparseOperator M0_;
  SparseOperator K0_;   // vertex stiffness
  SparseOperator G_;    // rotated gradient
  std::vector<double> pin_;  // M0 * 1 (rank-one mean pin, also <., 1>)
  double vol_;
  double tau_;
  SolverConfig linear_;
  NewtonConfig newton_;
};

}  // namespace tfe
