#include "tfe/swe_linear.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace tfe {

LinearSWE::LinearSWE(const PeriodicQuadMesh& mesh, const LinearParams& params)
    : params_(params),
      v0_(make_space(mesh, Family::V0)),
      v1_(make_space(mesh, Family::V1)),
      v2_(make_space(mesh, Family::V2)),
      M1_(mass_matrix(v1_)),
      W_(coriolis_matrix(v1_, params.f)),
      Div_(div_matrix(v1_, v2_)),
      G_(grad_perp(v0_, v1_)),
      m2_(m2_diagonal(v2_)) {
  if (!(params.g > 0.0) || !(params.H > 0.0) || !(params.dt > 0.0))
    throw std::invalid_argument("LinearSWE: g, H, dt must be positive");
  P_ = Div_.transposed();
  P_.scale_cols(m2_);
}

void LinearSWE::check_state(const LinearState& s, const char* who) const {
  if (s.u.space == nullptr || s.u.space->family() != Family::V1 ||
      s.u.size() != v1_->ndofs() || s.eta.space == nullptr ||
      s.eta.space->family() != Family::V2 || s.eta.size() != v2_->ndofs())
    throw std::invalid_argument(std::string(who) + ": malformed state");
}

LinearState LinearSWE::rest_state() const {
  return LinearState{Field(v1_), Field(v2_)};
}

LinearState LinearSWE::geostrophic_state(const Field& psi) const {
  if (params_.f == 0.0)
    throw std::invalid_argument(
        "geostrophic_state: requires a nonzero Coriolis frequency");
  if (psi.space == nullptr || psi.space->family() != Family::V0 ||
      psi.size() != v0_->ndofs())
    throw std::invalid_argument("geostrophic_state: expected a vertex field");
  LinearState s{Field(v1_), Field(v2_)};
  G_.apply(psi.coeffs.data(), s.u.coeffs.data());
  const Field p2psi = l2_project(psi, v2_, linear_);
  for (Index c = 0; c < v2_->ndofs(); ++c)
    s.eta[c] = (params_.f / params_.g) * p2psi[c];
  return s;
}

std::pair<Field, Field> LinearSWE::tendency(const LinearState& s) const {
  check_state(s, "tendency");
  // M1 du = -W u + g Div^T M2 eta
  std::vector<double> rhs(v1_->ndofs()), tmp(v1_->ndofs());
  W_.apply(s.u.coeffs.data(), rhs.data());
  for (double& v : rhs) v = -v;
  P_.apply(s.eta.coeffs.data(), tmp.data());
  for (Index i = 0; i < v1_->ndofs(); ++i) rhs[i] += params_.g * tmp[i];
  Field du(v1_, cg(M1_, rhs, linear_));

  Field deta(v2_);
  Div_.apply(s.u.coeffs.data(), deta.coeffs.data());
  for (Index c = 0; c < v2_->ndofs(); ++c) deta[c] *= -params_.H;
  return {std::move(du), std::move(deta)};
}

LinearState LinearSWE::step_midpoint(const LinearState& s,
                                     SolveReport* report) const {
  check_state(s, "step_midpoint");
  const Index nu = v1_->ndofs();
  const Index nd = v2_->ndofs();
  const double dt = params_.dt;
  const double g = params_.g;
  const double H = params_.H;

  // Coupled system on (u+, eta+), with the elevation row scaled by M2 to
  // match the symmetric block layout of the preconditioner:
  //   [M1 + (dt/2) W    -(g dt/2) Div^T M2] [u+  ]   [rhs_u]
  //   [(H dt/2) M2 Div   M2                ] [eta+] = [rhs_d]
  auto block_apply = [&](const double* x, double* y) {
    const double* xu = x;
    const double* xd = x + nu;
    std::vector<double> t(nu);
    M1_.apply(xu, y);
    W_.apply(xu, t.data());
    for (Index i = 0; i < nu; ++i) y[i] += 0.5 * dt * t[i];
    P_.apply(xd, t.data());
    for (Index i = 0; i < nu; ++i) y[i] -= 0.5 * g * dt * t[i];
    std::vector<double> d(nd);
    Div_.apply(xu, d.data());
    for (Index i = 0; i < nd; ++i)
      y[nu + i] = m2_[i] * (xd[i] + 0.5 * H * dt * d[i]);
  };

  std::vector<double> rhs(nu + nd), t(nu), d(nd);
  M1_.apply(s.u.coeffs.data(), rhs.data());
  W_.apply(s.u.coeffs.data(), t.data());
  for (Index i = 0; i < nu; ++i) rhs[i] -= 0.5 * dt * t[i];
  P_.apply(s.eta.coeffs.data(), t.data());
  for (Index i = 0; i < nu; ++i) rhs[i] += 0.5 * g * dt * t[i];
  Div_.apply(s.u.coeffs.data(), d.data());
  for (Index i = 0; i < nd; ++i)
    rhs[nu + i] = m2_[i] * (s.eta.coeffs[i] - 0.5 * H * dt * d[i]);

  LinOp A;
  A.n = nu + nd;
  A.apply = block_apply;
  SchurPreconditioner prec(M1_, Div_, m2_, g, H, dt, linear_);
  const LinOp M = prec.as_linop();
  const std::vector<double> x = gmres(A, rhs, linear_, report, &M);

  LinearState out{Field(v1_), Field(v2_)};
  std::copy(x.begin(), x.begin() + nu, out.u.coeffs.begin());
  std::copy(x.begin() + nu, x.end(), out.eta.coeffs.begin());
  return out;
}

double LinearSWE::energy(const LinearState& s) const {
  check_state(s, "energy");
  std::vector<double> t(v1_->ndofs());
  M1_.apply(s.u.coeffs.data(), t.data());
  double e = 0.5 * params_.H * dot(s.u.coeffs, t);
  for (Index c = 0; c < v2_->ndofs(); ++c)
    e += 0.5 * params_.g * m2_[c] * s.eta[c] * s.eta[c];
  return e;
}

std::array<double, 3> dispersion(double kx, double ky,
                                 const LinearParams& params, double dx,
                                 double dy) {
  using C = std::complex<double>;
  const C I(0.0, 1.0);
  const double f = params.f, g = params.g, H = params.H;
  const double area = dx * dy;
  const double tx = kx * dx, ty = ky * dy;
  const C X = std::exp(I * tx), Y = std::exp(I * ty);
  const C Xc = std::conj(X), Yc = std::conj(Y);

  // Lattice-summed couplings for one periodic unit (one x-edge, one y-edge,
  // one cell).  Velocity mass is tridiagonal along its own axis; the skew
  // Coriolis coupling joins the four surrounding transverse edges.
  const double m1x = (area / 3.0) * (2.0 + std::cos(tx));
  const double m1y = (area / 3.0) * (2.0 + std::cos(ty));
  const C wxy = -(f * area / 4.0) * (1.0 + Y) * (1.0 + Xc);
  const C wyx = (f * area / 4.0) * (1.0 + X) * (1.0 + Yc);

  // Energy weighting (H on momentum rows, g * area on the elevation row)
  // renders the reduced system  i omega B z = S z  with B positive diagonal
  // and S skew-adjoint, so all frequencies are real.
  Eigen::Matrix3cd S;
  S << C(0.0), H * wxy, -g * H * dy * (Xc - 1.0),
       H * wyx, C(0.0), -g * H * dx * (Yc - 1.0),
       g * H * dy * (X - 1.0), g * H * dx * (Y - 1.0), C(0.0);

  const double skew = (S + S.adjoint()).norm();
  if (skew > 1e-12 * std::max(1.0, S.norm()))
    throw std::logic_error(
        "dispersion: reduced operator is not skew-adjoint; frequencies would "
        "not be real");

  Eigen::Matrix3cd A = -I * S;  // Hermitian
  Eigen::Matrix3cd B = Eigen::Matrix3cd::Zero();
  B(0, 0) = H * m1x;
  B(1, 1) = H * m1y;
  B(2, 2) = g * area;

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix3cd> es(
      A, B, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success)
    throw std::logic_error("dispersion: eigensolve failed");

  std::array<double, 3> omega{es.eigenvalues()(0), es.eigenvalues()(1),
                              es.eigenvalues()(2)};
  // Ascending already; break near-ties by divergence content of the
  // eigenvector (lower |div symbol . z| first).
  const C divx = (X - 1.0) / dx, divy = (Y - 1.0) / dy;
  auto div_content = [&](int i) {
    const Eigen::Vector3cd z = es.eigenvectors().col(i);
    return std::abs(divx * z(0) + divy * z(1));
  };
  const double scale = std::max({std::abs(omega[0]), std::abs(omega[2]), 1e-30});
  for (int i = 0; i < 2; ++i)
    if (std::abs(omega[i + 1] - omega[i]) <= 1e-12 * scale &&
        div_content(i + 1) < div_content(i))
      std::swap(omega[i], omega[i + 1]);
  return omega;
}

}  // namespace tfe
