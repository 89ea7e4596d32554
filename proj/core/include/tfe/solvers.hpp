// Iterative linear and nonlinear solvers: conjugate gradients, restarted
// GMRES with optional right preconditioning, the lumped-mass Schur complement
// preconditioner for the coupled wave system, a Newton driver, and a
// fixed-count Picard driver.
#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfe/sparse.hpp"

namespace tfe {

struct SolverConfig {
  double rtol = 1e-12;
  double atol = 1e-14;
  int max_iterations = 5000;
  int gmres_restart = 30;
  bool verbose = false;
};

struct SolveReport {
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  std::string status;  // "converged", "max-iterations", "stagnated"
};

class SolveError : public std::runtime_error {
public:
  explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

// A square linear operator given by its action.
struct LinOp {
  Index n = 0;
  std::function<void(const double*, double*)> apply;

  static LinOp from(const SparseOperator& A);
  static LinOp diagonal_inverse(const std::vector<double>& d);
};

double norm2(const std::vector<double>& v);
double dot(const std::vector<double>& a, const std::vector<double>& b);

// Conjugate gradients for symmetric positive definite A.  Throws SolveError
// on non-convergence.  If `residual_history` is given, the reported residual
// norms (including the initial one) are appended.
std::vector<double> cg(const LinOp& A, const std::vector<double>& b,
                       const SolverConfig& config = {},
                       SolveReport* report = nullptr,
                       const std::vector<double>* x0 = nullptr,
                       std::vector<double>* residual_history = nullptr);
std::vector<double> cg(const SparseOperator& A, const std::vector<double>& b,
                       const SolverConfig& config = {},
                       SolveReport* report = nullptr);

// Restarted GMRES, optionally right-preconditioned (solves A M^{-1} y = b,
// returns x = M^{-1} y).  Stagnation across a restart cycle and iteration
// exhaustion are reported distinctly.
std::vector<double> gmres(const LinOp& A, const std::vector<double>& b,
                          const SolverConfig& config = {},
                          SolveReport* report = nullptr,
                          const LinOp* right_preconditioner = nullptr,
                          const std::vector<double>* x0 = nullptr);
std::vector<double> gmres(const SparseOperator& A, const std::vector<double>& b,
                          const SolverConfig& config = {},
                          SolveReport* report = nullptr);

// Approximate inverse of the coupled implicit wave-system block matrix
//   [ M1 + (dt/2) W      -(g dt/2) Div^T M2 ]
//   [ (H dt/2) M2 Div     M2                ]
// obtained by dropping the Coriolis block W and lumping M1 by row sums.  The
// resulting Schur complement on the scalar space,
//   S = M2 + (g H dt^2/4) M2 Div diag(lump(M1))^{-1} Div^T M2,
// is a sparse symmetric positive definite Helmholtz operator solved by CG;
// velocity is recovered by back-substitution.  Layout of vectors: velocity
// DOFs first, then scalar DOFs.
class SchurPreconditioner {
public:
  SchurPreconditioner(const SparseOperator& M1, const SparseOperator& Div,
                      const std::vector<double>& m2_diag, double g, double H,
                      double dt, SolverConfig inner = {});

  void apply(const double* r, double* z) const;
  LinOp as_linop() const;
  Index size() const { return nu_ + nd_; }
  const SparseOperator& helmholtz() const { return S_; }
  const std::vector<double>& lumped_m1() const { return lump_; }

private:
  Index nu_;
  Index nd_;
  std::vector<double> lump_;      // row sums of M1
  std::vector<double> m2_diag_;
  SparseOperator D2_;             // M2 * Div
  SparseOperator D2t_;
  SparseOperator S_;
  double g_, H_, dt_;
  SolverConfig inner_;
};

// Newton iteration on residual(x) = 0.  `jacobian_solve(x, r)` must return
// the update d with J(x) d = r.  Reports divergence (growing residual) and
// propagates linear-solver failures.
struct NewtonConfig {
  double rtol = 1e-12;
  double atol = 1e-14;
  int max_iterations = 30;
  bool verbose = false;
};

struct NewtonReport {
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
};

using ResidualFn =
    std::function<std::vector<double>(const std::vector<double>&)>;
using JacobianSolveFn = std::function<std::vector<double>(
    const std::vector<double>&, const std::vector<double>&)>;

std::vector<double> newton(const ResidualFn& residual,
                           const JacobianSolveFn& jacobian_solve,
                           std::vector<double> x, const NewtonConfig& config,
                           NewtonReport* report = nullptr);

// Fixed-count Picard iteration: applies `update` exactly k_max times with no
// convergence requirement (the semi-implicit design).
template <class State, class Update>
State picard(const Update& update, State x, int k_max) {
  if (k_max < 1) throw std::invalid_argument("picard: k_max must be >= 1");
  for (int k = 0; k < k_max; ++k) x = update(x);
  return x;
}

}  // namespace tfe
