#include "tfe/euler2d.hpp"

#include <cmath>
#include <stdexcept>

namespace tfe {

// Frozen data at the advecting state (the midpoint during stepping): velocity
// and vorticity-gradient values at quadrature points, and the elliptic solve
// machinery shared by the residual and the Jacobian action.
struct Euler2D::AdvectionContext {
  std::vector<double> ux, uy;    // advecting velocity at quadrature points
  std::vector<double> mid_gx, mid_gy;  // gradient of the advected vorticity
};

Euler2D::Euler2D(const PeriodicQuadMesh& mesh, double tau)
    : v0_(make_space(mesh, Family::V0)),
      v1_(make_space(mesh, Family::V1)),
      v2_(make_space(mesh, Family::V2)),
      quad_(tensor_gauss(3)),
      M0_(mass_matrix(v0_, quad_)),
      K0_(stiffness_matrix(v0_, quad_)),
      G_(grad_perp(v0_, v1_)),
      pin_(M0_.row_sums()),
      vol_(mesh.Lx() * mesh.Ly()),
      tau_(tau) {
  if (tau < 0.0) throw std::invalid_argument("Euler2D: tau must be >= 0");
}

void Euler2D::check_field(const Field& omega, const char* who) const {
  if (omega.space == nullptr || omega.space->family() != Family::V0 ||
      omega.size() != v0_->ndofs())
    throw std::invalid_argument(std::string(who) +
                                ": expected a vertex-space vorticity field");
}

Field Euler2D::elliptic_solve(const Field& omega) const {
  check_field(omega, "elliptic_solve");
  // rhs = -M0 omega with the constant mode removed; the pinned operator
  // K + pin pin^T then yields the unique zero-mean solution.
  std::vector<double> rhs(v0_->ndofs());
  M0_.apply(omega.coeffs.data(), rhs.data());
  const double mean = dot(pin_, omega.coeffs) / vol_;
  for (Index i = 0; i < v0_->ndofs(); ++i) rhs[i] = -rhs[i] + mean * pin_[i];

  LinOp pinned;
  pinned.n = v0_->ndofs();
  pinned.apply = [this](const double* x, double* y) {
    K0_.apply(x, y);
    double s = 0.0;
    for (Index i = 0; i < v0_->ndofs(); ++i) s += pin_[i] * x[i];
    for (Index i = 0; i < v0_->ndofs(); ++i) y[i] += s * pin_[i];
  };
  return Field(v0_, cg(pinned, rhs, linear_));
}

Field Euler2D::velocity(const Field& psi) const {
  check_field(psi, "velocity");
  Field u(v1_);
  G_.apply(psi.coeffs.data(), u.coeffs.data());
  return u;
}

// <g, s> plus tau <grad g, (gx, gy)> for all vertex test functions g, with
// everything given at quadrature points; the gradient part carries the
// streamline shift of the test function.
std::vector<double> Euler2D::residual_dual(const std::vector<double>& value_q,
                                           const std::vector<double>& gx_q,
                                           const std::vector<double>& gy_q) const {
  std::vector<double> out = v0_dual_value(v0_, quad_, value_q);
  if (tau_ > 0.0) {
    const auto shift = v0_dual_grad(v0_, quad_, gx_q, gy_q);
    for (Index i = 0; i < v0_->ndofs(); ++i) out[i] += tau_ * shift[i];
  }
  return out;
}

Field Euler2D::semidiscrete_tendency(const Field& omega) const {
  check_field(omega, "semidiscrete_tendency");
  const Field psi = elliptic_solve(omega);
  const Field u = velocity(psi);

  AdvectionContext ctx;
  values_at_quad(u, quad_, ctx.ux, ctx.uy);
  grads_at_quad(omega, quad_, ctx.mid_gx, ctx.mid_gy);
  const std::size_t nq = ctx.ux.size();

  // Advection u . grad omega at quadrature points.
  std::vector<double> adv(nq);
  for (std::size_t k = 0; k < nq; ++k)
    adv[k] = ctx.ux[k] * ctx.mid_gx[k] + ctx.uy[k] * ctx.mid_gy[k];

  std::vector<double> sx(nq), sy(nq);
  if (tau_ > 0.0)
    for (std::size_t k = 0; k < nq; ++k) {
      sx[k] = ctx.ux[k] * adv[k];
      sy[k] = ctx.uy[k] * adv[k];
    }
  std::vector<double> rhs = residual_dual(adv, sx, sy);
  for (double& v : rhs) v = -v;

  if (tau_ == 0.0) return Field(v0_, cg(M0_, rhs, linear_));

  // Shifted mass system <g + tau u.grad g, omega_t> = rhs, nonsymmetric.
  LinOp A;
  A.n = v0_->ndofs();
  std::vector<double> vq, tx(nq), ty(nq);
  A.apply = [&, this](const double* x, double* y) {
    Field xf(v0_, std::vector<double>(x, x + v0_->ndofs()));
    values_at_quad(xf, quad_, vq);
    for (std::size_t k = 0; k < nq; ++k) {
      tx[k] = ctx.ux[k] * vq[k];
      ty[k] = ctx.uy[k] * vq[k];
    }
    const auto d = residual_dual(vq, tx, ty);
    std::copy(d.begin(), d.end(), y);
  };
  return Field(v0_, gmres(A, rhs, linear_));
}

// The advecting context frozen at the midpoint of omega and a candidate end
// state x: omega_m = (omega + x)/2 and its induced velocity.
Euler2D::AdvectionContext Euler2D::midpoint_context(
    const Field& omega, const std::vector<double>& x) const {
  const Index n = v0_->ndofs();
  Field mid(v0_);
  for (Index i = 0; i < n; ++i) mid[i] = 0.5 * (omega.coeffs[i] + x[i]);
  AdvectionContext ctx;
  const Field psi = elliptic_solve(mid);
  const Field u = velocity(psi);
  values_at_quad(u, quad_, ctx.ux, ctx.uy);
  grads_at_quad(mid, quad_, ctx.mid_gx, ctx.mid_gy);
  return ctx;
}

std::vector<double> Euler2D::midpoint_defect(
    const Field& omega, double dt, const std::vector<double>& x,
    const AdvectionContext& ctx) const {
  const Index n = v0_->ndofs();
  Field diff(v0_);
  for (Index i = 0; i < n; ++i) diff[i] = x[i] - omega.coeffs[i];
  std::vector<double> e;
  values_at_quad(diff, quad_, e);
  for (std::size_t k = 0; k < e.size(); ++k)
    e[k] += dt * (ctx.ux[k] * ctx.mid_gx[k] + ctx.uy[k] * ctx.mid_gy[k]);
  return e;
}

// Midpoint equations in the (possibly shifted) dual:
// R(x) = <g + tau u_m.grad g, (x - omega) + dt u_m.grad omega_m>.
std::vector<double> Euler2D::midpoint_residual(
    const Field& omega, double dt, const std::vector<double>& x) const {
  check_field(omega, "midpoint_residual");
  if (!(dt > 0.0))
    throw std::invalid_argument("midpoint_residual: dt must be > 0");
  if (x.size() != static_cast<std::size_t>(v0_->ndofs()))
    throw std::invalid_argument("midpoint_residual: wrong candidate size");
  const AdvectionContext ctx = midpoint_context(omega, x);
  const std::vector<double> e = midpoint_defect(omega, dt, x, ctx);
  std::vector<double> sx(e.size(), 0.0), sy(e.size(), 0.0);
  if (tau_ > 0.0)
    for (std::size_t k = 0; k < e.size(); ++k) {
      sx[k] = ctx.ux[k] * e[k];
      sy[k] = ctx.uy[k] * e[k];
    }
  return residual_dual(e, sx, sy);
}

void Euler2D::midpoint_japply(double dt, const AdvectionContext& ctx,
                              const std::vector<double>& e, const double* dx,
                              double* dy) const {
  const Index n = v0_->ndofs();
  const std::size_t nq = ctx.ux.size();
  Field d(v0_, std::vector<double>(dx, dx + n));
  std::vector<double> dq, dgx, dgy;
  values_at_quad(d, quad_, dq);
  grads_at_quad(d, quad_, dgx, dgy);
  // Velocity perturbation: half the induced velocity of d (midpoint
  // chain rule), via the same elliptic solve.
  const Field dpsi = elliptic_solve(d);
  const Field du = velocity(dpsi);
  std::vector<double> dux, duy;
  values_at_quad(du, quad_, dux, duy);

  std::vector<double> val(nq), sx(nq), sy(nq);
  for (std::size_t k = 0; k < nq; ++k) {
    const double da = 0.5 * (dux[k] * ctx.mid_gx[k] + duy[k] * ctx.mid_gy[k] +
                             ctx.ux[k] * dgx[k] + ctx.uy[k] * dgy[k]);
    val[k] = dq[k] + dt * da;
  }
  if (tau_ > 0.0)
    for (std::size_t k = 0; k < nq; ++k) {
      sx[k] = ctx.ux[k] * val[k] + 0.5 * dux[k] * e[k];
      sy[k] = ctx.uy[k] * val[k] + 0.5 * duy[k] * e[k];
    }
  const auto out = residual_dual(val, sx, sy);
  std::copy(out.begin(), out.end(), dy);
}

std::vector<double> Euler2D::midpoint_jacobian_apply(
    const Field& omega, double dt, const std::vector<double>& x,
    const std::vector<double>& dx) const {
  check_field(omega, "midpoint_jacobian_apply");
  if (!(dt > 0.0))
    throw std::invalid_argument("midpoint_jacobian_apply: dt must be > 0");
  const std::size_t n = static_cast<std::size_t>(v0_->ndofs());
  if (x.size() != n || dx.size() != n)
    throw std::invalid_argument("midpoint_jacobian_apply: wrong vector size");
  const AdvectionContext ctx = midpoint_context(omega, x);
  const std::vector<double> e = midpoint_defect(omega, dt, x, ctx);
  std::vector<double> out(n);
  midpoint_japply(dt, ctx, e, dx.data(), out.data());
  return out;
}

Field Euler2D::step_midpoint(const Field& omega, double dt,
                             NewtonReport* report) const {
  check_field(omega, "step_midpoint");
  if (!(dt > 0.0)) throw std::invalid_argument("step_midpoint: dt must be > 0");

  auto residual = [&](const std::vector<double>& x) {
    return midpoint_residual(omega, dt, x);
  };

  auto jacobian_solve = [&](const std::vector<double>& x,
                            const std::vector<double>& r) {
    // Freeze the context once per Newton iteration; GMRES applies the
    // Jacobian many times against it.
    const AdvectionContext ctx = midpoint_context(omega, x);
    const std::vector<double> e = midpoint_defect(omega, dt, x, ctx);
    LinOp J;
    J.n = v0_->ndofs();
    J.apply = [&, this](const double* dx, double* dy) {
      midpoint_japply(dt, ctx, e, dx, dy);
    };
    return gmres(J, r, linear_);
  };

  NewtonReport rep;
  std::vector<double> x =
      newton(residual, jacobian_solve, omega.coeffs, newton_, &rep);
  if (report != nullptr) *report = rep;
  return Field(v0_, std::move(x));
}

double Euler2D::energy(const Field& omega) const {
  check_field(omega, "energy");
  const Field psi = elliptic_solve(omega);
  std::vector<double> m0w(v0_->ndofs());
  M0_.apply(omega.coeffs.data(), m0w.data());
  return -0.5 * dot(psi.coeffs, m0w);
}

double Euler2D::enstrophy(const Field& omega) const {
  check_field(omega, "enstrophy");
  std::vector<double> m0w(v0_->ndofs());
  M0_.apply(omega.coeffs.data(), m0w.data());
  return 0.5 * dot(omega.coeffs, m0w);
}

double Euler2D::total_vorticity(const Field& omega) const {
  check_field(omega, "total_vorticity");
  return dot(pin_, omega.coeffs);
}

double Euler2D::streamwise_diffusion(const Field& omega) const {
  check_field(omega, "streamwise_diffusion");
  const Field psi = elliptic_solve(omega);
  const Field u = velocity(psi);
  std::vector<double> ux, uy, gx, gy;
  values_at_quad(u, quad_, ux, uy);
  grads_at_quad(omega, quad_, gx, gy);
  const double area = v0_->mesh().cell_area();
  const std::size_t nq = quad_.w.size();
  double acc = 0.0;
  for (std::size_t k = 0; k < ux.size(); ++k) {
    const double a = ux[k] * gx[k] + uy[k] * gy[k];
    acc += quad_.w[k % nq] * a * a * area;
  }
  return -tau_ * acc;
}

}  // namespace tfe
