#include "tfe/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tfe {

LinOp LinOp::from(const SparseOperator& A) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("LinOp::from: operator must be square");
  LinOp op;
  op.n = A.rows();
  op.apply = [&A](const double* x, double* y) { A.apply(x, y); };
  return op;
}

LinOp LinOp::diagonal_inverse(const std::vector<double>& d) {
  LinOp op;
  op.n = static_cast<Index>(d.size());
  op.apply = [d](const double* x, double* y) {
    for (std::size_t i = 0; i < d.size(); ++i) y[i] = x[i] / d[i];
  };
  return op;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

namespace {

void check_vec(const LinOp& A, const std::vector<double>& b, const char* who) {
  if (static_cast<Index>(b.size()) != A.n)
    throw std::invalid_argument(std::string(who) +
                                ": right-hand side size mismatch");
}

}  // namespace

std::vector<double> cg(const LinOp& A, const std::vector<double>& b,
                       const SolverConfig& config, SolveReport* report,
                       const std::vector<double>* x0,
                       std::vector<double>* residual_history) {
  check_vec(A, b, "cg");
  const Index n = A.n;
  std::vector<double> x(n, 0.0);
  if (x0 != nullptr) {
    if (x0->size() != b.size())
      throw std::invalid_argument("cg: initial guess size mismatch");
    x = *x0;
  }

  std::vector<double> r(n), p(n), Ap(n);
  A.apply(x.data(), Ap.data());
  for (Index i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  p = r;

  double rr = dot(r, r);
  double rnorm = std::sqrt(rr);
  const double target = std::max(config.atol, config.rtol * norm2(b));
  if (residual_history != nullptr) residual_history->push_back(rnorm);

  int it = 0;
  while (rnorm > target && it < config.max_iterations) {
    A.apply(p.data(), Ap.data());
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0))
      throw SolveError("cg: operator is not positive definite (p'Ap = " +
                       std::to_string(pAp) + ")");
    const double alpha = rr / pAp;
    for (Index i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    for (Index i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_new;
    rnorm = std::sqrt(rr);
    ++it;
    if (residual_history != nullptr) residual_history->push_back(rnorm);
    if (config.verbose)
      std::fprintf(stderr, "cg: iter %d residual %.3e\n", it, rnorm);
  }

  const bool ok = rnorm <= target;
  if (report != nullptr) {
    report->iterations = it;
    report->residual_norm = rnorm;
    report->converged = ok;
    report->status = ok ? "converged" : "max-iterations";
  }
  if (!ok)
    throw SolveError("cg: no convergence after " + std::to_string(it) +
                     " iterations (residual " + std::to_string(rnorm) + ")");
  return x;
}

std::vector<double> cg(const SparseOperator& A, const std::vector<double>& b,
                       const SolverConfig& config, SolveReport* report) {
  return cg(LinOp::from(A), b, config, report);
}

std::vector<double> gmres(const LinOp& A, const std::vector<double>& b,
                          const SolverConfig& config, SolveReport* report,
                          const LinOp* right_preconditioner,
                          const std::vector<double>* x0) {
  check_vec(A, b, "gmres");
  const Index n = A.n;
  const int m = std::max(1, config.gmres_restart);

  std::vector<double> x(n, 0.0);
  if (x0 != nullptr) {
    if (x0->size() != b.size())
      throw std::invalid_argument("gmres: initial guess size mismatch");
    x = *x0;
  }

  const double bnorm = norm2(b);
  const double target = std::max(config.atol, config.rtol * bnorm);

  std::vector<std::vector<double>> V(m + 1, std::vector<double>(n));
  std::vector<std::vector<double>> Z(m, std::vector<double>(n));
  // Hessenberg stored column-wise: H[j] holds column j (j+2 entries).
  std::vector<std::vector<double>> H(m);
  std::vector<double> cs(m), sn(m), g(m + 1);
  std::vector<double> w(n), tmp(n);

  int total_iters = 0;
  double rnorm = 0.0;
  bool stagnated = false;

  while (true) {
    A.apply(x.data(), w.data());
    for (Index i = 0; i < n; ++i) w[i] = b[i] - w[i];
    rnorm = norm2(w);
    if (rnorm <= target || total_iters >= config.max_iterations || stagnated)
      break;
    const double cycle_start = rnorm;

    for (Index i = 0; i < n; ++i) V[0][i] = w[i] / rnorm;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = rnorm;

    int j = 0;
    for (; j < m && total_iters < config.max_iterations; ++j, ++total_iters) {
      // Apply (right-preconditioned) operator to the latest basis vector.
      const double* vin = V[j].data();
      if (right_preconditioner != nullptr) {
        right_preconditioner->apply(vin, Z[j].data());
        A.apply(Z[j].data(), w.data());
      } else {
        Z[j] = V[j];
        A.apply(vin, w.data());
      }

      // Modified Gram-Schmidt.
      H[j].assign(j + 2, 0.0);
      for (int i = 0; i <= j; ++i) {
        const double h = dot(w, V[i]);
        H[j][i] = h;
        for (Index k = 0; k < n; ++k) w[k] -= h * V[i][k];
      }
      const double hlast = norm2(w);
      H[j][j + 1] = hlast;
      if (hlast > 0.0)
        for (Index k = 0; k < n; ++k) V[j + 1][k] = w[k] / hlast;

      // Apply accumulated Givens rotations, then create a new one.
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * H[j][i] + sn[i] * H[j][i + 1];
        H[j][i + 1] = -sn[i] * H[j][i] + cs[i] * H[j][i + 1];
        H[j][i] = t;
      }
      const double denom = std::hypot(H[j][j], H[j][j + 1]);
      if (denom == 0.0) {
        cs[j] = 1.0;
        sn[j] = 0.0;
      } else {
        cs[j] = H[j][j] / denom;
        sn[j] = H[j][j + 1] / denom;
      }
      H[j][j] = denom;
      H[j][j + 1] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      rnorm = std::abs(g[j + 1]);
      if (config.verbose)
        std::fprintf(stderr, "gmres: iter %d residual %.3e\n", total_iters + 1,
                     rnorm);
      if (rnorm <= target) {
        ++j;
        ++total_iters;
        break;
      }
    }

    // Solve the small triangular system and update x.
    std::vector<double> y(j, 0.0);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < j; ++k) s -= H[k][i] * y[k];
      y[i] = s / H[i][i];
    }
    for (int i = 0; i < j; ++i)
      for (Index k = 0; k < n; ++k) x[k] += y[i] * Z[i][k];

    // Stagnation guard: a full restart cycle with essentially no progress.
    if (j == m && rnorm > cycle_start * (1.0 - 1e-12)) stagnated = true;
  }

  const bool ok = rnorm <= target;
  if (report != nullptr) {
    report->iterations = total_iters;
    report->residual_norm = rnorm;
    report->converged = ok;
    report->status = ok ? "converged" : (stagnated ? "stagnated" : "max-iterations");
  }
  if (!ok) {
    const char* why = stagnated ? "stagnated" : "hit the iteration limit";
    throw SolveError("gmres: " + std::string(why) + " after " +
                     std::to_string(total_iters) + " iterations (residual " +
                     std::to_string(rnorm) + ", target " +
                     std::to_string(target) + ")");
  }
  return x;
}

std::vector<double> gmres(const SparseOperator& A, const std::vector<double>& b,
                          const SolverConfig& config, SolveReport* report) {
  return gmres(LinOp::from(A), b, config, report);
}

SchurPreconditioner::SchurPreconditioner(const SparseOperator& M1,
                                         const SparseOperator& Div,
                                         const std::vector<double>& m2_diag,
                                         double g, double H, double dt,
                                         SolverConfig inner)
    : nu_(M1.rows()),
      nd_(static_cast<Index>(m2_diag.size())),
      m2_diag_(m2_diag),
      g_(g),
      H_(H),
      dt_(dt),
      inner_(inner) {
  if (Div.rows() != nd_ || Div.cols() != nu_)
    throw std::invalid_argument("SchurPreconditioner: shape mismatch");
  lump_ = M1.row_sums();
  for (double v : lump_)
    if (!(v > 0.0))
      throw std::invalid_argument(
          "SchurPreconditioner: lumped velocity mass has a non-positive entry");

  D2_ = Div;
  D2_.scale_rows(m2_diag_);
  D2t_ = D2_.transposed();

  // S = diag(m2) + (g H dt^2/4) D2 diag(lump)^{-1} D2^T.
  SparseOperator A = D2_;
  std::vector<double> inv_lump(lump_.size());
  for (std::size_t i = 0; i < lump_.size(); ++i) inv_lump[i] = 1.0 / lump_[i];
  A.scale_cols(inv_lump);
  S_ = A.multiply(D2t_).scaled(g_ * H_ * dt_ * dt_ / 4.0)
           .plus(SparseOperator::diagonal(m2_diag_), 1.0);
}

void SchurPreconditioner::apply(const double* r, double* z) const {
  const double* ru = r;
  const double* rd = r + nu_;

  // rhs_D = r_D - (H dt/2) M2 Div diag(lump)^{-1} r_u
  std::vector<double> t(nu_);
  for (Index i = 0; i < nu_; ++i) t[i] = ru[i] / lump_[i];
  std::vector<double> rhs(nd_);
  D2_.apply(t.data(), rhs.data());
  for (Index i = 0; i < nd_; ++i) rhs[i] = rd[i] - 0.5 * H_ * dt_ * rhs[i];

  std::vector<double> zd = cg(S_, rhs, inner_);

  // z_u = diag(lump)^{-1} (r_u + (g dt/2) Div^T M2 z_D)
  std::vector<double> gu(nu_);
  D2t_.apply(zd.data(), gu.data());
  for (Index i = 0; i < nu_; ++i)
    z[i] = (ru[i] + 0.5 * g_ * dt_ * gu[i]) / lump_[i];
  for (Index i = 0; i < nd_; ++i) z[nu_ + i] = zd[i];
}

LinOp SchurPreconditioner::as_linop() const {
  LinOp op;
  op.n = size();
  op.apply = [this](const double* x, double* y) { apply(x, y); };
  return op;
}

std::vector<double> newton(const ResidualFn& residual,
                           const JacobianSolveFn& jacobian_solve,
                           std::vector<double> x, const NewtonConfig& config,
                           NewtonReport* report) {
  std::vector<double> r = residual(x);
  double rnorm = norm2(r);
  const double initial = rnorm;
  const double target = std::max(config.atol, config.rtol * initial);

  int it = 0;
  while (rnorm > target && it < config.max_iterations) {
    std::vector<double> d = jacobian_solve(x, r);
    if (d.size() != x.size())
      throw std::invalid_argument("newton: jacobian solve returned wrong size");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= d[i];
    r = residual(x);
    rnorm = norm2(r);
    ++it;
    if (config.verbose)
      std::fprintf(stderr, "newton: iter %d residual %.3e\n", it, rnorm);
    if (rnorm > 1e4 * initial + 1.0)
      throw SolveError("newton: diverging (residual " + std::to_string(rnorm) +
                       " from initial " + std::to_string(initial) + ")");
  }

  const bool ok = rnorm <= target;
  if (report != nullptr) {
    report->iterations = it;
    report->residual_norm = rnorm;
    report->converged = ok;
  }
  if (!ok)
    throw SolveError("newton: no convergence after " + std::to_string(it) +
                     " iterations (residual " + std::to_string(rnorm) + ")");
  return x;
}

}  // namespace tfe
