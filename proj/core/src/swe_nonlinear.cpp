#include "tfe/swe_nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tfe {

namespace {

std::vector<double> concat(const std::vector<double>& a,
                           const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

NonlinearSWE::NonlinearSWE(const PeriodicQuadMesh& mesh, SweParams params)
    : params_(std::move(params)),
      v0_(make_space(mesh, Family::V0)),
      v1_(make_space(mesh, Family::V1)),
      v2_(make_space(mesh, Family::V2)),
      quad_(tensor_gauss(3)),
      M0_(mass_matrix(v0_)),
      M1_(mass_matrix(v1_)),
      Div_(div_matrix(v1_, v2_)),
      G_(grad_perp(v0_, v1_)),
      m2_(m2_diagonal(v2_)),
      vol_(mesh.Lx() * mesh.Ly()) {
  if (!(params_.g > 0.0)) throw std::invalid_argument("NonlinearSWE: g must be > 0");
  if (params_.tau < 0.0) throw std::invalid_argument("NonlinearSWE: tau must be >= 0");
  if (!(params_.dt > 0.0)) throw std::invalid_argument("NonlinearSWE: dt must be > 0");
  if (params_.k_max < 1) throw std::invalid_argument("NonlinearSWE: k_max must be >= 1");

  if (params_.f_field.space == nullptr) {
    params_.f_field = Field(v0_);
    std::fill(params_.f_field.coeffs.begin(), params_.f_field.coeffs.end(),
              params_.f_value);
  } else if (params_.f_field.space->family() != Family::V0 ||
             params_.f_field.size() != v0_->ndofs()) {
    throw std::invalid_argument("NonlinearSWE: Coriolis field must live in the vertex space");
  }
  if (params_.b_field.space == nullptr) {
    params_.b_field = Field(v2_);
  } else if (params_.b_field.space->family() != Family::V2 ||
             params_.b_field.size() != v2_->ndofs()) {
    throw std::invalid_argument("NonlinearSWE: topography must live in the cell space");
  }

  P_ = Div_.transposed();
  P_.scale_cols(m2_);

  // Reference-cell vertex mass block for fast weighted-mass actions.
  const auto t = tabulate_v0(quad_, mesh.dx(), mesh.dy());
  const double area = mesh.cell_area();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < quad_.w.size(); ++k)
        s += quad_.w[k] * t.value[a][k] * t.value[b][k];
      local_v0_mass_[a][b] = s * area;
    }
}

void NonlinearSWE::check_state(const SweState& s, const char* who) const {
  if (s.u.space == nullptr || s.u.space->family() != Family::V1 ||
      s.u.size() != v1_->ndofs() || s.D.space == nullptr ||
      s.D.space->family() != Family::V2 || s.D.size() != v2_->ndofs())
    throw std::invalid_argument(std::string(who) + ": malformed state");
}

void NonlinearSWE::require_positive(const Field& D, const char* who) const {
  for (Index c = 0; c < v2_->ndofs(); ++c)
    if (!(D[c] > 0.0))
      throw std::domain_error(std::string(who) +
                              ": layer depth is not positive in cell " +
                              std::to_string(c));
}

double NonlinearSWE::mean_depth(const Field& D) const {
  double s = 0.0;
  for (Index c = 0; c < v2_->ndofs(); ++c) s += m2_[c] * D[c];
  return s / vol_;
}

void NonlinearSWE::apply_weighted_v0_mass(const std::vector<double>& x,
                                          const std::vector<double>& cell_weight,
                                          std::vector<double>& y) const {
  y.assign(v0_->ndofs(), 0.0);
  for (Index c = 0; c < v2_->ndofs(); ++c) {
    const auto dofs = v0_->cell_dofs(c);
    const double w = cell_weight[c];
    for (int a = 0; a < 4; ++a) {
      double acc = 0.0;
      for (int b = 0; b < 4; ++b)
        acc += local_v0_mass_[a][b] * x[dofs[b].index];
      y[dofs[a].index] += w * acc;
    }
  }
}

Field NonlinearSWE::diagnose_q(const Field& u, const Field& D) const {
  const SparseOperator B = weighted_v0_mass(v0_, D, quad_);
  std::vector<double> m1u(v1_->ndofs()), rhs(v0_->ndofs());
  M1_.apply(u.coeffs.data(), m1u.data());
  G_.apply_transpose(m1u.data(), rhs.data());
  std::vector<double> m0f(v0_->ndofs());
  M0_.apply(params_.f_field.coeffs.data(), m0f.data());
  for (Index i = 0; i < v0_->ndofs(); ++i) rhs[i] = -rhs[i] + m0f[i];
  return Field(v0_, cg(B, rhs, params_.linear));
}

Field NonlinearSWE::diagnose_m(const Field& u, const Field& D) const {
  std::vector<double> ux, uy;
  values_at_quad(u, quad_, ux, uy);
  const std::size_t nq = quad_.w.size();
  for (Index c = 0; c < v2_->ndofs(); ++c)
    for (std::size_t k = 0; k < nq; ++k) {
      ux[c * nq + k] *= D[c];
      uy[c * nq + k] *= D[c];
    }
  const auto rhs = v1_dual_value(v1_, quad_, ux, uy);
  return Field(v1_, cg(M1_, rhs, params_.linear));
}

std::vector<double> NonlinearSWE::q_values_with_mode(
    const std::vector<double>& q_q, const std::vector<double>& gx,
    const std::vector<double>& gy, const std::vector<double>& fx,
    const std::vector<double>& fy, const Field& D) const {
  if (params_.stab == Stabilization::none || params_.tau == 0.0) return q_q;
  const std::size_t nq = quad_.w.size();
  std::vector<double> out(q_q.size());

  if (params_.stab == Stabilization::apvm) {
    for (Index c = 0; c < v2_->ndofs(); ++c)
      for (std::size_t k = 0; k < nq; ++k) {
        const std::size_t i = c * nq + k;
        out[i] = q_q[i] -
                 params_.tau * (fx[i] * gx[i] + fy[i] * gy[i]) / D[c];
      }
    return out;
  }

  // Streamline variant: shift by the lagged material rate q_t + flux.grad q,
  // with q_t finite-differenced from the two previously accepted PV fields
  // (zero until two steps have been accepted).
  std::vector<double> qt(q_q.size(), 0.0);
  if (hist_count_ >= 2 && hist_dt_ > 0.0) {
    Field rate(v0_);
    for (Index i = 0; i < v0_->ndofs(); ++i)
      rate[i] = (q_prev_[i] - q_prev2_[i]) / hist_dt_;
    values_at_quad(rate, quad_, qt);
  }
  for (std::size_t i = 0; i < q_q.size(); ++i)
    out[i] = q_q[i] - params_.tau * (qt[i] + fx[i] * gx[i] + fy[i] * gy[i]);
  return out;
}

std::vector<double> NonlinearSWE::stabilized_q_values(const Field& q,
                                                      const Field& flux,
                                                      const Field& D) const {
  std::vector<double> q_q, gx, gy, fx, fy;
  values_at_quad(q, quad_, q_q);
  grads_at_quad(q, quad_, gx, gy);
  values_at_quad(flux, quad_, fx, fy);
  return q_values_with_mode(q_q, gx, gy, fx, fy, D);
}

std::vector<double> NonlinearSWE::pv_flux_dual(const std::vector<double>& qstar,
                                               const std::vector<double>& fx,
                                               const std::vector<double>& fy) const {
  std::vector<double> px(fx.size()), py(fy.size());
  for (std::size_t i = 0; i < fx.size(); ++i) {
    px[i] = qstar[i] * fx[i];
    py[i] = qstar[i] * fy[i];
  }
  return v0_dual_grad(v0_, quad_, px, py);
}

std::vector<double> NonlinearSWE::mixed_v0_dual(const Field& scalar) const {
  std::vector<double> s;
  values_at_quad(scalar, quad_, s);
  return v0_dual_value(v0_, quad_, s);
}

std::pair<Field, Field> NonlinearSWE::semidiscrete_tendency(
    const SweState& s) const {
  check_state(s, "semidiscrete_tendency");
  const Field q = diagnose_q(s.u, s.D);
  const Field m = diagnose_m(s.u, s.D);

  std::vector<double> qstar = stabilized_q_values(q, m, s.D);
  std::vector<double> mx, my, ux, uy;
  values_at_quad(m, quad_, mx, my);
  values_at_quad(s.u, quad_, ux, uy);

  const std::size_t nq = quad_.w.size();
  std::vector<double> fx(mx.size()), fy(my.size()), phi(mx.size());
  for (Index c = 0; c < v2_->ndofs(); ++c)
    for (std::size_t k = 0; k < nq; ++k) {
      const std::size_t i = c * nq + k;
      // perp of the mass flux, weighted by the stabilized PV
      fx[i] = -qstar[i] * my[i];
      fy[i] = qstar[i] * mx[i];
      phi[i] = 0.5 * (ux[i] * ux[i] + uy[i] * uy[i]) +
               params_.g * (s.D[c] + params_.b_field[c]);
    }

  std::vector<double> rhs = v1_dual_value(v1_, quad_, fx, fy);
  for (double& v : rhs) v = -v;
  const auto bern = v2_dual_value(v2_, quad_, phi);
  std::vector<double> grad(v1_->ndofs());
  Div_.apply_transpose(bern.data(), grad.data());
  for (Index i = 0; i < v1_->ndofs(); ++i) rhs[i] += grad[i];
  Field du(v1_, cg(M1_, rhs, params_.linear));

  Field dD(v2_);
  Div_.apply(m.coeffs.data(), dD.coeffs.data());
  for (Index c = 0; c < v2_->ndofs(); ++c) dD[c] = -dD[c];
  return {std::move(du), std::move(dD)};
}

double NonlinearSWE::energy_rate(const SweState& s, const Field& du,
                                 const Field& dD) const {
  check_state(s, "energy_rate");
  std::vector<double> ux, uy, dux, duy;
  values_at_quad(s.u, quad_, ux, uy);
  values_at_quad(du, quad_, dux, duy);
  const std::size_t nq = quad_.w.size();
  const double area = v2_->mesh().cell_area();
  double rate = 0.0;
  for (Index c = 0; c < v2_->ndofs(); ++c) {
    double ke = 0.0, half_u2 = 0.0;
    for (std::size_t k = 0; k < nq; ++k) {
      const std::size_t i = c * nq + k;
      ke += quad_.w[k] * (ux[i] * dux[i] + uy[i] * duy[i]);
      half_u2 += quad_.w[k] * 0.5 * (ux[i] * ux[i] + uy[i] * uy[i]);
    }
    rate += area * (s.D[c] * ke +
                    dD[c] * (half_u2 +
                             params_.g * (s.D[c] + params_.b_field[c])));
  }
  return rate;
}

double NonlinearSWE::enstrophy_rate(const SweState& s, const Field& du,
                                    const Field& dD) const {
  check_state(s, "enstrophy_rate");
  const Field q = diagnose_q(s.u, s.D);
  // d/dt of the D-weighted PV square under the diagnostic constraint:
  // -2 <rot-grad q, du> - <q^2, dD>.
  Field gq(v1_);
  G_.apply(q.coeffs.data(), gq.coeffs.data());
  std::vector<double> gx, gy, dux, duy, q_q;
  values_at_quad(gq, quad_, gx, gy);
  values_at_quad(du, quad_, dux, duy);
  values_at_quad(q, quad_, q_q);
  const std::size_t nq = quad_.w.size();
  const double area = v2_->mesh().cell_area();
  double rate = 0.0;
  for (Index c = 0; c < v2_->ndofs(); ++c) {
    double rot = 0.0, q2 = 0.0;
    for (std::size_t k = 0; k < nq; ++k) {
      const std::size_t i = c * nq + k;
      rot += quad_.w[k] * (gx[i] * dux[i] + gy[i] * duy[i]);
      q2 += quad_.w[k] * q_q[i] * q_q[i];
    }
    rate += area * (-2.0 * rot - q2 * dD[c]);
  }
  return rate;
}

Field NonlinearSWE::mass_flux_reconstruct(const Field& u, const Field& D) const {
  if (u.space == nullptr || u.space->family() != Family::V1)
    throw std::invalid_argument("mass_flux_reconstruct: expected an edge-flux field");
  const auto& mesh = v1_->mesh();
  Field m(v1_);
  for (Index e = 0; e < v1_->ndofs(); ++e) {
    const auto cells = mesh.edge_cells(e);
    const double ue = u[e];
    double Dt;
    if (ue > 0.0)
      Dt = D[cells.plus];
    else if (ue < 0.0)
      Dt = D[cells.minus];
    else
      Dt = 0.5 * (D[cells.plus] + D[cells.minus]);
    m[e] = ue * Dt;
  }
  return m;
}

SparseOperator NonlinearSWE::upwind_flux_matrix(const Field& u) const {
  const auto& mesh = v1_->mesh();
  CooBuilder builder(v1_->ndofs(), v2_->ndofs());
  for (Index e = 0; e < v1_->ndofs(); ++e) {
    const double ue = u[e];
    if (ue == 0.0) continue;
    const auto cells = mesh.edge_cells(e);
    builder.add(e, ue > 0.0 ? cells.plus : cells.minus, ue);
  }
  return builder.compress(false);
}

Field NonlinearSWE::apply_flux(const Field& u, const Field& D) const {
  return params_.upwind ? mass_flux_reconstruct(u, D) : diagnose_m(u, D);
}

double NonlinearSWE::energy(const SweState& s) const {
  check_state(s, "energy");
  std::vector<double> ux, uy;
  values_at_quad(s.u, quad_, ux, uy);
  const std::size_t nq = quad_.w.size();
  const double area = v2_->mesh().cell_area();
  double e = 0.0;
  for (Index c = 0; c < v2_->ndofs(); ++c) {
    double u2 = 0.0;
    for (std::size_t k = 0; k < nq; ++k) {
      const std::size_t i = c * nq + k;
      u2 += quad_.w[k] * (ux[i] * ux[i] + uy[i] * uy[i]);
    }
    e += area * (0.5 * s.D[c] * u2 + 0.5 * params_.g * s.D[c] * s.D[c] +
                 params_.g * s.D[c] * params_.b_field[c]);
  }
  return e;
}

double NonlinearSWE::enstrophy(const SweState& s) const {
  check_state(s, "enstrophy");
  const Field q = diagnose_q(s.u, s.D);
  std::vector<double> q_q;
  values_at_quad(q, quad_, q_q);
  const std::size_t nq = quad_.w.size();
  const double area = v2_->mesh().cell_area();
  double z = 0.0;
  for (Index c = 0; c < v2_->ndofs(); ++c) {
    double q2 = 0.0;
    for (std::size_t k = 0; k < nq; ++k)
      q2 += quad_.w[k] * q_q[c * nq + k] * q_q[c * nq + k];
    z += area * s.D[c] * q2;
  }
  return z;
}

double NonlinearSWE::mass(const SweState& s) const {
  check_state(s, "mass");
  double m = 0.0;
  for (Index c = 0; c < v2_->ndofs(); ++c) m += m2_[c] * s.D[c];
  return m;
}

double NonlinearSWE::total_vorticity(const SweState& s) const {
  check_state(s, "total_vorticity");
  const Field q = diagnose_q(s.u, s.D);
  std::vector<double> q_q;
  values_at_quad(q, quad_, q_q);
  const std::size_t nq = quad_.w.size();
  const double area = v2_->mesh().cell_area();
  double v = 0.0;
  for (Index c = 0; c < v2_->ndofs(); ++c) {
    double qc = 0.0;
    for (std::size_t k = 0; k < nq; ++k) qc += quad_.w[k] * q_q[c * nq + k];
    v += area * s.D[c] * qc;
  }
  return v;
}

double NonlinearSWE::apvm_dissipation(const SweState& s) const {
  check_state(s, "apvm_dissipation");
  const Field q = diagnose_q(s.u, s.D);
  const Field m = diagnose_m(s.u, s.D);
  std::vector<double> gx, gy, mx, my;
  grads_at_quad(q, quad_, gx, gy);
  values_at_quad(m, quad_, mx, my);
  const std::size_t nq = quad_.w.size();
  const double area = v2_->mesh().cell_area();
  double acc = 0.0;
  for (Index c = 0; c < v2_->ndofs(); ++c) {
    for (std::size_t k = 0; k < nq; ++k) {
      const std::size_t i = c * nq + k;
      const double a = mx[i] * gx[i] + my[i] * gy[i];
      acc += quad_.w[k] * area * a * a / s.D[c];
    }
  }
  return -params_.tau * acc;
}

double NonlinearSWE::divergence_norm(const Field& u) const {
  std::vector<double> d(v2_->ndofs());
  Div_.apply(u.coeffs.data(), d.data());
  double acc = 0.0;
  for (Index c = 0; c < v2_->ndofs(); ++c) acc += m2_[c] * d[c] * d[c];
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Newton integrators

// Everything frozen at the current Newton iterate that both the residual and
// the Jacobian action need.
struct NonlinearSWE::FrozenMid {
  Field u_mid, D_mid;
  Field q, flux;               // diagnosed PV; advecting flux field
  SparseOperator B;            // D_mid-weighted vertex mass (for dq solves)
  std::vector<double> q_q, qgx, qgy;   // PV values and gradients at quad
  std::vector<double> flx, fly;        // flux values at quad
  std::vector<double> qstar;
};

NonlinearSWE::FrozenMid NonlinearSWE::freeze_midpoint(
    const SweState& s, const std::vector<double>& x) const {
  const Index nu = v1_->ndofs();
  const Index nd = v2_->ndofs();
  FrozenMid fm;
  fm.u_mid = Field(v1_);
  fm.D_mid = Field(v2_);
  for (Index i = 0; i < nu; ++i) fm.u_mid[i] = 0.5 * (s.u[i] + x[i]);
  for (Index c = 0; c < nd; ++c) fm.D_mid[c] = 0.5 * (s.D[c] + x[nu + c]);
  fm.q = diagnose_q(fm.u_mid, fm.D_mid);  // checks positivity of D_mid
  fm.flux = diagnose_m(fm.u_mid, fm.D_mid);
  fm.B = weighted_v0_mass(v0_, fm.D_mid, quad_);
  values_at_quad(fm.q, quad_, fm.q_q);
  grads_at_quad(fm.q, quad_, fm.qgx, fm.qgy);
  values_at_quad(fm.flux, quad_, fm.flx, fm.fly);
  fm.qstar = q_values_with_mode(fm.q_q, fm.qgx, fm.qgy, fm.flx, fm.fly,
                                fm.D_mid);
  return fm;
}

std::vector<double> NonlinearSWE::midpoint_residual_at(
    const SweState& s, double dt, const std::vector<double>& x,
    const FrozenMid& fm) const {
  const Index nu = v1_->ndofs();
  const Index nd = v2_->ndofs();
  const std::size_t nq = quad_.w.size();
  const double area = v2_->mesh().cell_area();
  const double g = params_.g;

  std::vector<double> ux, uy;
  values_at_quad(fm.u_mid, quad_, ux, uy);
  std::vector<double> fx(ux.size()), fy(ux.size()), phi(ux.size());
  for (Index c = 0; c < nd; ++c)
    for (std::size_t k = 0; k < nq; ++k) {
      const std::size_t i = c * nq + k;
      fx[i] = -fm.qstar[i] * fm.fly[i];
      fy[i] = fm.qstar[i] * fm.flx[i];
      phi[i] = 0.5 * (ux[i] * ux[i] + uy[i] * uy[i]) +
               g * (fm.D_mid[c] + params_.b_field[c]);
    }
  std::vector<double> Ru = v1_dual_value(v1_, quad_, fx, fy);
  const auto bern = v2_dual_value(v2_, quad_, phi);
  std::vector<double> grad(nu);
  Div_.apply_transpose(bern.data(), grad.data());
  std::vector<double> m1du(nu), udiff(nu);
  for (Index i = 0; i < nu; ++i) udiff[i] = x[i] - s.u[i];
  M1_.apply(udiff.data(), m1du.data());
  for (Index i = 0; i < nu; ++i)
    Ru[i] = m1du[i] + dt * (Ru[i] - grad[i]);

  std::vector<double> divm(nd);
  Div_.apply(fm.flux.coeffs.data(), divm.data());
  std::vector<double> Rd(nd);
  for (Index c = 0; c < nd; ++c)
    Rd[c] = area * ((x[nu + c] - s.D[c]) + dt * divm[c]);
  return concat(Ru, Rd);
}

void NonlinearSWE::midpoint_japply(double dt, const FrozenMid& fm,
                                   const std::vector<double>& umx,
                                   const std::vector<double>& umy,
                                   const double* dx, double* dy) const {
  const Index nu = v1_->ndofs();
  const Index nd = v2_->ndofs();
  const std::size_t nq = quad_.w.size();
  const double area = v2_->mesh().cell_area();
  const double g = params_.g;

  Field du(v1_, std::vector<double>(dx, dx + nu));
  Field dD(v2_, std::vector<double>(dx + nu, dx + nu + nd));
  Field du_m(v1_), dD_m(v2_);
  for (Index i = 0; i < nu; ++i) du_m[i] = 0.5 * du[i];
  for (Index c = 0; c < nd; ++c) dD_m[c] = 0.5 * dD[c];

  // dq from differentiating the weighted diagnosis system.
  std::vector<double> m1du(nu), rhs_q(v0_->ndofs());
  M1_.apply(du_m.coeffs.data(), m1du.data());
  G_.apply_transpose(m1du.data(), rhs_q.data());
  std::vector<double> bq;
  apply_weighted_v0_mass(fm.q.coeffs, dD_m.coeffs, bq);
  for (Index i = 0; i < v0_->ndofs(); ++i) rhs_q[i] = -rhs_q[i] - bq[i];
  Field dq(v0_, cg(fm.B, rhs_q, params_.linear));

  // dm from differentiating the flux projection P1(D u).
  std::vector<double> dux, duy;
  values_at_quad(du_m, quad_, dux, duy);
  std::vector<double> fx(dux.size()), fy(dux.size());
  for (Index c = 0; c < nd; ++c)
    for (std::size_t k = 0; k < nq; ++k) {
      const std::size_t i = c * nq + k;
      fx[i] = fm.D_mid[c] * dux[i] + dD_m[c] * umx[i];
      fy[i] = fm.D_mid[c] * duy[i] + dD_m[c] * umy[i];
    }
  Field dm(v1_, cg(M1_, v1_dual_value(v1_, quad_, fx, fy), params_.linear));

  // d(qstar) chain at quadrature points.
  std::vector<double> dq_q, dqgx, dqgy, dmx, dmy;
  values_at_quad(dq, quad_, dq_q);
  grads_at_quad(dq, quad_, dqgx, dqgy);
  values_at_quad(dm, quad_, dmx, dmy);
  std::vector<double> dqstar(dq_q.size());
  if (params_.stab == Stabilization::none || params_.tau == 0.0) {
    dqstar = dq_q;
  } else if (params_.stab == Stabilization::apvm) {
    for (Index c = 0; c < nd; ++c)
      for (std::size_t k = 0; k < nq; ++k) {
        const std::size_t i = c * nq + k;
        const double adv = fm.flx[i] * fm.qgx[i] + fm.fly[i] * fm.qgy[i];
        const double dadv = dmx[i] * fm.qgx[i] + dmy[i] * fm.qgy[i] +
                            fm.flx[i] * dqgx[i] + fm.fly[i] * dqgy[i];
        dqstar[i] = dq_q[i] -
                    params_.tau * (dadv / fm.D_mid[c] -
                                   adv * dD_m[c] /
                                       (fm.D_mid[c] * fm.D_mid[c]));
      }
  } else {  // streamline variant; the lagged rate is frozen
    for (std::size_t i = 0; i < dq_q.size(); ++i)
      dqstar[i] = dq_q[i] -
                  params_.tau * (dmx[i] * fm.qgx[i] + dmy[i] * fm.qgy[i] +
                                 fm.flx[i] * dqgx[i] + fm.fly[i] * dqgy[i]);
  }

  // dR_u
  std::vector<double> tx(dq_q.size()), ty(dq_q.size()), dphi(dq_q.size());
  for (Index c = 0; c < nd; ++c)
    for (std::size_t k = 0; k < nq; ++k) {
      const std::size_t i = c * nq + k;
      tx[i] = -(dqstar[i] * fm.fly[i] + fm.qstar[i] * dmy[i]);
      ty[i] = dqstar[i] * fm.flx[i] + fm.qstar[i] * dmx[i];
      dphi[i] = umx[i] * dux[i] + umy[i] * duy[i] + g * dD_m[c];
    }
  std::vector<double> out_u = v1_dual_value(v1_, quad_, tx, ty);
  const auto dbern = v2_dual_value(v2_, quad_, dphi);
  std::vector<double> dgrad(nu);
  Div_.apply_transpose(dbern.data(), dgrad.data());
  std::vector<double> m1d(nu);
  M1_.apply(du.coeffs.data(), m1d.data());
  for (Index i = 0; i < nu; ++i)
    dy[i] = m1d[i] + dt * (out_u[i] - dgrad[i]);

  std::vector<double> divdm(nd);
  Div_.apply(dm.coeffs.data(), divdm.data());
  for (Index c = 0; c < nd; ++c)
    dy[nu + c] = area * (dD[c] + dt * divdm[c]);
}

SweState NonlinearSWE::midpoint_step_impl(const SweState& s, double dt,
                                          StepInfo* info) {
  const Index nu = v1_->ndofs();
  const Index nd = v2_->ndofs();

  auto residual = [&](const std::vector<double>& x) {
    return midpoint_residual_at(s, dt, x, freeze_midpoint(s, x));
  };

  const double H_ref = mean_depth(s.D);
  SchurPreconditioner prec(M1_, Div_, m2_, params_.g, H_ref, dt,
                           params_.linear);
  const LinOp precop = prec.as_linop();

  auto jacobian_solve = [&](const std::vector<double>& x,
                            const std::vector<double>& r) {
    // Freeze once per Newton iteration; GMRES applies the Jacobian many
    // times against the same context.
    const FrozenMid fm = freeze_midpoint(s, x);
    std::vector<double> umx, umy;
    values_at_quad(fm.u_mid, quad_, umx, umy);
    LinOp J;
    J.n = nu + nd;
    J.apply = [&, this](const double* dx, double* dy) {
      midpoint_japply(dt, fm, umx, umy, dx, dy);
    };
    return gmres(J, r, params_.linear, nullptr, &precop);
  };

  NewtonReport rep;
  std::vector<double> x = newton(residual, jacobian_solve,
                                 concat(s.u.coeffs, s.D.coeffs),
                                 params_.newton, &rep);

  SweState out{Field(v1_, std::vector<double>(x.begin(), x.begin() + nu)),
               Field(v2_, std::vector<double>(x.begin() + nu, x.end()))};
  require_positive(out.D, "step_midpoint_nl");

  if (info != nullptr) {
    info->newton_iters = rep.iterations;
    info->residual_norm = rep.residual_norm;
    if (info->record_pv_flux) {
      const FrozenMid fm = freeze_midpoint(s, x);
      info->pv_flux = pv_flux_dual(fm.qstar, fm.flx, fm.fly);
      for (double& v : info->pv_flux) v *= dt;
    }
  }
  return out;
}

// Two-point time-path data frozen at a candidate end state for the
// energy-exact integrator.  The path flux and Bernoulli integrands use the
// two-point structure exact for the cubic energy; PV is diagnosed at the
// plain midpoint (the flux members of fm stay empty).
struct NonlinearSWE::PoissonCtx {
  FrozenMid fm;
  Field Dn, Dp;                  // old and new-iterate depth
  Field mbar;
  std::vector<double> unx, uny;  // old velocity at quadrature points
  std::vector<double> upx, upy;  // new-iterate velocity at quadrature points
  std::vector<double> mbx, mby;
  std::vector<double> pi;        // cell values
};

NonlinearSWE::PoissonCtx NonlinearSWE::freeze_poisson(
    const SweState& s, const std::vector<double>& x) const {
  const Index nu = v1_->ndofs();
  const Index nd = v2_->ndofs();
  const std::size_t nq = quad_.w.size();
  const double g = params_.g;

  PoissonCtx ctx;
  values_at_quad(s.u, quad_, ctx.unx, ctx.uny);
  Field up(v1_, std::vector<double>(x.begin(), x.begin() + nu));
  ctx.Dn = s.D;
  ctx.Dp = Field(v2_, std::vector<double>(x.begin() + nu, x.end()));
  ctx.fm.u_mid = Field(v1_);
  ctx.fm.D_mid = Field(v2_);
  for (Index i = 0; i < nu; ++i) ctx.fm.u_mid[i] = 0.5 * (s.u[i] + up[i]);
  for (Index c = 0; c < nd; ++c)
    ctx.fm.D_mid[c] = 0.5 * (s.D[c] + ctx.Dp[c]);
  ctx.fm.q = diagnose_q(ctx.fm.u_mid, ctx.fm.D_mid);
  ctx.fm.B = weighted_v0_mass(v0_, ctx.fm.D_mid, quad_);

  values_at_quad(up, quad_, ctx.upx, ctx.upy);
  std::vector<double> fx(ctx.unx.size()), fy(ctx.unx.size()),
      phi(ctx.unx.size());
  for (Index c = 0; c < nd; ++c)
    for (std::size_t k = 0; k < nq; ++k) {
      const std::size_t i = c * nq + k;
      const double cn = (s.D[c] + 0.5 * ctx.Dp[c]) / 3.0;
      const double cp = (0.5 * s.D[c] + ctx.Dp[c]) / 3.0;
      fx[i] = cn * ctx.unx[i] + cp * ctx.upx[i];
      fy[i] = cn * ctx.uny[i] + cp * ctx.upy[i];
      phi[i] = (ctx.unx[i] * ctx.unx[i] + ctx.uny[i] * ctx.uny[i] +
                ctx.unx[i] * ctx.upx[i] + ctx.uny[i] * ctx.upy[i] +
                ctx.upx[i] * ctx.upx[i] + ctx.upy[i] * ctx.upy[i]) /
               6.0;
    }
  ctx.mbar = Field(v1_, cg(M1_, v1_dual_value(v1_, quad_, fx, fy),
                           params_.linear));
  values_at_quad(ctx.mbar, quad_, ctx.mbx, ctx.mby);

  ctx.pi.assign(nd, 0.0);
  for (Index c = 0; c < nd; ++c) {
    double mean = 0.0;
    for (std::size_t k = 0; k < nq; ++k) mean += quad_.w[k] * phi[c * nq + k];
    ctx.pi[c] = mean + 0.5 * g * (s.D[c] + ctx.Dp[c]) + g * params_.b_field[c];
  }

  values_at_quad(ctx.fm.q, quad_, ctx.fm.q_q);
  grads_at_quad(ctx.fm.q, quad_, ctx.fm.qgx, ctx.fm.qgy);
  ctx.fm.qstar = q_values_with_mode(ctx.fm.q_q, ctx.fm.qgx, ctx.fm.qgy,
                                    ctx.mbx, ctx.mby, ctx.fm.D_mid);
  return ctx;
}

std::vector<double> NonlinearSWE::poisson_residual_at(
    const SweState& s, double dt, const std::vector<double>& x,
    const PoissonCtx& ctx) const {
  const Index nu = v1_->ndofs();
  const Index nd = v2_->ndofs();
  const double area = v2_->mesh().cell_area();

  std::vector<double> fx(ctx.mbx.size()), fy(ctx.mbx.size());
  for (std::size_t i = 0; i < fx.size(); ++i) {
    fx[i] = -ctx.fm.qstar[i] * ctx.mby[i];
    fy[i] = ctx.fm.qstar[i] * ctx.mbx[i];
  }
  std::vector<double> Ru = v1_dual_value(v1_, quad_, fx, fy);
  std::vector<double> grad(nu);
  P_.apply(ctx.pi.data(), grad.data());
  std::vector<double> udiff(nu), m1du(nu);
  for (Index i = 0; i < nu; ++i) udiff[i] = x[i] - s.u[i];
  M1_.apply(udiff.data(), m1du.data());
  for (Index i = 0; i < nu; ++i)
    Ru[i] = m1du[i] + dt * (Ru[i] - grad[i]);

  std::vector<double> divm(nd);
  Div_.apply(ctx.mbar.coeffs.data(), divm.data());
  std::vector<double> Rd(nd);
  for (Index c = 0; c < nd; ++c)
    Rd[c] = area * ((x[nu + c] - s.D[c]) + dt * divm[c]);
  return concat(Ru, Rd);
}

void NonlinearSWE::poisson_japply(double dt, const PoissonCtx& ctx,
                                  const double* dx, double* dy) const {
  const Index nu = v1_->ndofs();
  const Index nd = v2_->ndofs();
  const std::size_t nq = quad_.w.size();
  const double area = v2_->mesh().cell_area();
  const double g = params_.g;

  Field du(v1_, std::vector<double>(dx, dx + nu));
  Field dD(v2_, std::vector<double>(dx + nu, dx + nu + nd));
  std::vector<double> dux, duy;
  values_at_quad(du, quad_, dux, duy);

  // d(mbar): coefficients of du are the D-path weights; of dD, the
  // u-path weights.
  std::vector<double> fx(ctx.unx.size()), fy(ctx.unx.size());
  for (Index c = 0; c < nd; ++c)
    for (std::size_t k = 0; k < nq; ++k) {
      const std::size_t i = c * nq + k;
      const double cp = (0.5 * ctx.Dn[c] + ctx.Dp[c]) / 3.0;
      fx[i] = cp * dux[i] + dD[c] * (0.5 * ctx.unx[i] + ctx.upx[i]) / 3.0;
      fy[i] = cp * duy[i] + dD[c] * (0.5 * ctx.uny[i] + ctx.upy[i]) / 3.0;
    }
  Field dm(v1_, cg(M1_, v1_dual_value(v1_, quad_, fx, fy), params_.linear));
  std::vector<double> dmx, dmy;
  values_at_quad(dm, quad_, dmx, dmy);

  // d(pi)
  std::vector<double> dpi(nd, 0.0);
  for (Index c = 0; c < nd; ++c) {
    double mean = 0.0;
    for (std::size_t k = 0; k < nq; ++k) {
      const std::size_t i = c * nq + k;
      mean += quad_.w[k] * ((ctx.unx[i] + 2.0 * ctx.upx[i]) * dux[i] +
                            (ctx.uny[i] + 2.0 * ctx.upy[i]) * duy[i]) / 6.0;
    }
    dpi[c] = mean + 0.5 * g * dD[c];
  }

  // dq at the midpoint state.
  Field du_m(v1_), dD_m(v2_);
  for (Index i = 0; i < nu; ++i) du_m[i] = 0.5 * du[i];
  for (Index c = 0; c < nd; ++c) dD_m[c] = 0.5 * dD[c];
  std::vector<double> m1du(nu), rhs_q(v0_->ndofs());
  M1_.apply(du_m.coeffs.data(), m1du.data());
  G_.apply_transpose(m1du.data(), rhs_q.data());
  std::vector<double> bq;
  apply_weighted_v0_mass(ctx.fm.q.coeffs, dD_m.coeffs, bq);
  for (Index i = 0; i < v0_->ndofs(); ++i) rhs_q[i] = -rhs_q[i] - bq[i];
  Field dq(v0_, cg(ctx.fm.B, rhs_q, params_.linear));
  std::vector<double> dq_q, dqgx, dqgy;
  values_at_quad(dq, quad_, dq_q);
  grads_at_quad(dq, quad_, dqgx, dqgy);

  std::vector<double> dqstar(dq_q.size());
  if (params_.stab == Stabilization::none || params_.tau == 0.0) {
    dqstar = dq_q;
  } else if (params_.stab == Stabilization::apvm) {
    for (Index c = 0; c < nd; ++c)
      for (std::size_t k = 0; k < nq; ++k) {
        const std::size_t i = c * nq + k;
        const double adv =
            ctx.mbx[i] * ctx.fm.qgx[i] + ctx.mby[i] * ctx.fm.qgy[i];
        const double dadv = dmx[i] * ctx.fm.qgx[i] + dmy[i] * ctx.fm.qgy[i] +
                            ctx.mbx[i] * dqgx[i] + ctx.mby[i] * dqgy[i];
        dqstar[i] = dq_q[i] -
                    params_.tau * (dadv / ctx.fm.D_mid[c] -
                                   adv * dD_m[c] / (ctx.fm.D_mid[c] *
                                                    ctx.fm.D_mid[c]));
      }
  } else {
    for (std::size_t i = 0; i < dq_q.size(); ++i)
      dqstar[i] =
          dq_q[i] - params_.tau * (dmx[i] * ctx.fm.qgx[i] +
                                   dmy[i] * ctx.fm.qgy[i] +
                                   ctx.mbx[i] * dqgx[i] +
                                   ctx.mby[i] * dqgy[i]);
  }

  std::vector<double> tx(dq_q.size()), ty(dq_q.size());
  for (std::size_t i = 0; i < dq_q.size(); ++i) {
    tx[i] = -(dqstar[i] * ctx.mby[i] + ctx.fm.qstar[i] * dmy[i]);
    ty[i] = dqstar[i] * ctx.mbx[i] + ctx.fm.qstar[i] * dmx[i];
  }
  std::vector<double> out_u = v1_dual_value(v1_, quad_, tx, ty);
  std::vector<double> dgrad(nu);
  P_.apply(dpi.data(), dgrad.data());
  std::vector<double> m1d(nu);
  M1_.apply(du.coeffs.data(), m1d.data());
  for (Index i = 0; i < nu; ++i)
    dy[i] = m1d[i] + dt * (out_u[i] - dgrad[i]);

  std::vector<double> divdm(nd);
  Div_.apply(dm.coeffs.data(), divdm.data());
  for (Index c = 0; c < nd; ++c)
    dy[nu + c] = area * (dD[c] + dt * divdm[c]);
}

SweState NonlinearSWE::poisson_step_impl(const SweState& s, double dt,
                                         StepInfo* info) {
  const Index nu = v1_->ndofs();
  const Index nd = v2_->ndofs();

  auto residual = [&](const std::vector<double>& x) {
    return poisson_residual_at(s, dt, x, freeze_poisson(s, x));
  };

  const double H_ref = mean_depth(s.D);
  SchurPreconditioner prec(M1_, Div_, m2_, params_.g, H_ref, dt,
                           params_.linear);
  const LinOp precop = prec.as_linop();

  auto jacobian_solve = [&](const std::vector<double>& x,
                            const std::vector<double>& r) {
    const PoissonCtx ctx = freeze_poisson(s, x);
    LinOp J;
    J.n = nu + nd;
    J.apply = [&, this](const double* dx, double* dy) {
      poisson_japply(dt, ctx, dx, dy);
    };
    return gmres(J, r, params_.linear, nullptr, &precop);
  };

  NewtonReport rep;
  std::vector<double> x = newton(residual, jacobian_solve,
                                 concat(s.u.coeffs, s.D.coeffs),
                                 params_.newton, &rep);

  SweState out{Field(v1_, std::vector<double>(x.begin(), x.begin() + nu)),
               Field(v2_, std::vector<double>(x.begin() + nu, x.end()))};
  require_positive(out.D, "step_poisson");

  if (info != nullptr) {
    info->newton_iters = rep.iterations;
    info->residual_norm = rep.residual_norm;
    if (info->record_pv_flux) {
      const PoissonCtx ctx = freeze_poisson(s, x);
      info->pv_flux = pv_flux_dual(ctx.fm.qstar, ctx.mbx, ctx.mby);
      for (double& v : info->pv_flux) v *= dt;
    }
  }
  return out;
}

std::vector<double> NonlinearSWE::step_residual(
    const SweState& s, double dt, const std::vector<double>& x) const {
  check_state(s, "step_residual");
  if (!(dt > 0.0))
    throw std::invalid_argument("step_residual: dt must be > 0");
  if (x.size() != static_cast<std::size_t>(v1_->ndofs() + v2_->ndofs()))
    throw std::invalid_argument("step_residual: wrong candidate size");
  switch (params_.integrator) {
    case TimeIntegrator::midpoint:
      return midpoint_residual_at(s, dt, x, freeze_midpoint(s, x));
    case TimeIntegrator::poisson:
      return poisson_residual_at(s, dt, x, freeze_poisson(s, x));
    default:
      throw std::invalid_argument(
          "step_residual: the sweep integrator has no Newton residual");
  }
}

std::vector<double> NonlinearSWE::step_jacobian_apply(
    const SweState& s, double dt, const std::vector<double>& x,
    const std::vector<double>& dx) const {
  check_state(s, "step_jacobian_apply");
  if (!(dt > 0.0))
    throw std::invalid_argument("step_jacobian_apply: dt must be > 0");
  const std::size_t n = static_cast<std::size_t>(v1_->ndofs() + v2_->ndofs());
  if (x.size() != n || dx.size() != n)
    throw std::invalid_argument("step_jacobian_apply: wrong vector size");
  std::vector<double> out(n);
  switch (params_.integrator) {
    case TimeIntegrator::midpoint: {
      const FrozenMid fm = freeze_midpoint(s, x);
      std::vector<double> umx, umy;
      values_at_quad(fm.u_mid, quad_, umx, umy);
      midpoint_japply(dt, fm, umx, umy, dx.data(), out.data());
      return out;
    }
    case TimeIntegrator::poisson: {
      const PoissonCtx ctx = freeze_poisson(s, x);
      poisson_japply(dt, ctx, dx.data(), out.data());
      return out;
    }
    default:
      throw std::invalid_argument(
          "step_jacobian_apply: the sweep integrator has no Newton residual");
  }
}

SweState NonlinearSWE::semi_implicit_step_impl(const SweState& s, double dt,
                                               StepInfo* info) {
  const Index nu = v1_->ndofs();
  const Index nd = v2_->ndofs();
  const std::size_t nq = quad_.w.size();
  const double area = v2_->mesh().cell_area();
  const double g = params_.g;
  const double H_ref = mean_depth(s.D);

  SchurPreconditioner prec(M1_, Div_, m2_, g, H_ref, dt, params_.linear);
  const LinOp precop = prec.as_linop();
  SparseOperator M2Div = Div_;
  M2Div.scale_rows(m2_);

  Field v = s.u;
  Field Dv = s.D;
  double last_residual = 0.0;

  for (int sweep = 0; sweep < params_.k_max; ++sweep) {
    Field ubar(v1_), Dbar(v2_);
    for (Index i = 0; i < nu; ++i) ubar[i] = 0.5 * (s.u[i] + v[i]);
    for (Index c = 0; c < nd; ++c) Dbar[c] = 0.5 * (s.D[c] + Dv[c]);
    const Field qbar = diagnose_q(ubar, Dbar);  // checks positivity

    // Stage 1: implicit transport of the depth with frozen advecting
    // velocity; the unknown enters through the midpoint flux.
    Field DT(v2_);
    if (params_.upwind) {
      const SparseOperator F = upwind_flux_matrix(ubar);
      const SparseOperator A =
          SparseOperator::diagonal(m2_).plus(M2Div.multiply(F), 0.5 * dt);
      std::vector<double> fd(nu), divf(nd), rhs(nd);
      F.apply(s.D.coeffs.data(), fd.data());
      M2Div.apply(fd.data(), divf.data());
      for (Index c = 0; c < nd; ++c)
        rhs[c] = m2_[c] * s.D[c] - 0.5 * dt * divf[c];
      DT.coeffs = gmres(A, rhs, params_.linear);
    } else {
      LinOp A;
      A.n = nd;
      A.apply = [&, this](const double* xx, double* yy) {
        Field Dx(v2_, std::vector<double>(xx, xx + nd));
        const Field mx = diagnose_m(ubar, Dx);
        std::vector<double> divf(nd);
        M2Div.apply(mx.coeffs.data(), divf.data());
        for (Index c = 0; c < nd; ++c)
          yy[c] = m2_[c] * Dx[c] + 0.5 * dt * divf[c];
      };
      const Field mn = diagnose_m(ubar, s.D);
      std::vector<double> divf(nd), rhs(nd);
      M2Div.apply(mn.coeffs.data(), divf.data());
      for (Index c = 0; c < nd; ++c)
        rhs[c] = m2_[c] * s.D[c] - 0.5 * dt * divf[c];
      DT.coeffs = gmres(A, rhs, params_.linear);
    }

    Field DmidT(v2_);
    for (Index c = 0; c < nd; ++c) DmidT[c] = 0.5 * (s.D[c] + DT[c]);

    // Stage 2: velocity update with the stage flux and Bernoulli head.
    {
      const Field Mbar = apply_flux(ubar, DmidT);
      const std::vector<double> qstar = stabilized_q_values(qbar, Mbar, Dbar);
      std::vector<double> mbx, mby, ubx, uby;
      values_at_quad(Mbar, quad_, mbx, mby);
      values_at_quad(ubar, quad_, ubx, uby);
      std::vector<double> fx(mbx.size()), fy(mbx.size());
      std::vector<double> pi(nd, 0.0);
      for (Index c = 0; c < nd; ++c) {
        double mean = 0.0;
        for (std::size_t k = 0; k < nq; ++k) {
          const std::size_t i = c * nq + k;
          fx[i] = -qstar[i] * mby[i];
          fy[i] = qstar[i] * mbx[i];
          mean += quad_.w[k] * 0.5 * (ubx[i] * ubx[i] + uby[i] * uby[i]);
        }
        pi[c] = mean + g * (DmidT[c] + params_.b_field[c]);
      }
      std::vector<double> rhs(nu), t(nu);
      M1_.apply(s.u.coeffs.data(), rhs.data());
      const auto qm = v1_dual_value(v1_, quad_, fx, fy);
      P_.apply(pi.data(), t.data());
      for (Index i = 0; i < nu; ++i) rhs[i] -= dt * (qm[i] - t[i]);
      v.coeffs = cg(M1_, rhs, params_.linear);
    }
    Field uT = v;  // stage velocity before correction

    // Residuals at the candidate, with midpoints, PV, and fluxes all
    // re-evaluated at the candidate pair.
    Field uprime(v1_), Dprime(v2_);
    for (Index i = 0; i < nu; ++i) uprime[i] = 0.5 * (s.u[i] + uT[i]);
    Dprime = DmidT;
    const Field qprime = diagnose_q(uprime, Dprime);
    const Field Mprime = apply_flux(uprime, Dprime);
    const std::vector<double> qstar2 = stabilized_q_values(qprime, Mprime, Dprime);

    std::vector<double> mpx, mpy, upx, upy;
    values_at_quad(Mprime, quad_, mpx, mpy);
    values_at_quad(uprime, quad_, upx, upy);
    std::vector<double> fx(mpx.size()), fy(mpx.size());
    std::vector<double> pi2(nd, 0.0);
    for (Index c = 0; c < nd; ++c) {
      double mean = 0.0;
      for (std::size_t k = 0; k < nq; ++k) {
        const std::size_t i = c * nq + k;
        fx[i] = -qstar2[i] * mpy[i];
        fy[i] = qstar2[i] * mpx[i];
        mean += quad_.w[k] * 0.5 * (upx[i] * upx[i] + upy[i] * upy[i]);
      }
      pi2[c] = mean + g * (Dprime[c] + params_.b_field[c]);
    }
    std::vector<double> Ru = v1_dual_value(v1_, quad_, fx, fy);
    {
      std::vector<double> t(nu), udiff(nu), m1du(nu);
      P_.apply(pi2.data(), t.data());
      for (Index i = 0; i < nu; ++i) udiff[i] = uT[i] - s.u[i];
      M1_.apply(udiff.data(), m1du.data());
      for (Index i = 0; i < nu; ++i)
        Ru[i] = m1du[i] + dt * (Ru[i] - t[i]);
    }
    std::vector<double> Rd(nd);
    {
      std::vector<double> divm(nd);
      Div_.apply(Mprime.coeffs.data(), divm.data());
      for (Index c = 0; c < nd; ++c)
        Rd[c] = area * ((DT[c] - s.D[c]) + dt * divm[c]);
    }
    std::vector<double> rhs(nu + nd);
    for (Index i = 0; i < nu; ++i) rhs[i] = -Ru[i];
    for (Index c = 0; c < nd; ++c) rhs[nu + c] = -Rd[c];
    last_residual = norm2(rhs);

    // Correction: wave system linearized about the reference depth, with the
    // Coriolis block carrying the candidate's stabilized PV so that the
    // velocity correction stays curl-compatible with the depth correction.
    const SparseOperator Wq = coriolis_matrix_values(v1_, quad_, qstar2);
    LinOp A;
    A.n = nu + nd;
    A.apply = [&, this](const double* xx, double* yy) {
      const double* xu = xx;
      const double* xd = xx + nu;
      std::vector<double> t(nu);
      M1_.apply(xu, yy);
      Wq.apply(xu, t.data());
      for (Index i = 0; i < nu; ++i) yy[i] += 0.5 * dt * H_ref * t[i];
      P_.apply(xd, t.data());
      for (Index i = 0; i < nu; ++i) yy[i] -= 0.5 * g * dt * t[i];
      std::vector<double> d(nd);
      Div_.apply(xu, d.data());
      for (Index c = 0; c < nd; ++c)
        yy[nu + c] = m2_[c] * (xd[c] + 0.5 * H_ref * dt * d[c]);
    };
    const std::vector<double> corr = gmres(A, rhs, params_.linear, nullptr,
                                           &precop);
    for (Index i = 0; i < nu; ++i) v[i] = uT[i] + corr[i];
    for (Index c = 0; c < nd; ++c) Dv[c] = DT[c] + corr[nu + c];

    if (sweep == params_.k_max - 1 && info != nullptr && info->record_pv_flux) {
      // <g, (qD)_new - (qD)_old> decomposes into the stage PV flux plus the
      // curl contribution of the correction's Coriolis block.
      info->pv_flux = pv_flux_dual(qstar2, mpx, mpy);
      Field dcorr(v1_, std::vector<double>(corr.begin(), corr.begin() + nu));
      std::vector<double> cx, cy;
      values_at_quad(dcorr, quad_, cx, cy);
      const auto extra = pv_flux_dual(qstar2, cx, cy);
      for (Index i = 0; i < v0_->ndofs(); ++i)
        info->pv_flux[i] = dt * info->pv_flux[i] +
                           0.5 * dt * H_ref * extra[i];
    }
  }

  require_positive(Dv, "step_semi_implicit");
  if (info != nullptr) {
    info->newton_iters = params_.k_max;
    info->residual_norm = last_residual;
  }
  return SweState{std::move(v), std::move(Dv)};
}

SweState NonlinearSWE::step_once(const SweState& s, double dt, StepInfo* info) {
  switch (params_.integrator) {
    case TimeIntegrator::midpoint:
      return midpoint_step_impl(s, dt, info);
    case TimeIntegrator::poisson:
      return poisson_step_impl(s, dt, info);
    case TimeIntegrator::semi_implicit:
      return semi_implicit_step_impl(s, dt, info);
  }
  throw std::logic_error("step_once: unreachable");
}

void NonlinearSWE::accept_history(const Field& q_new, double dt) {
  q_prev2_ = q_prev_;
  q_prev_ = q_new;
  hist_dt_ = dt;
  ++hist_count_;
}

void NonlinearSWE::reset_history() {
  hist_count_ = 0;
  hist_dt_ = 0.0;
  q_prev_ = Field();
  q_prev2_ = Field();
}

SweState NonlinearSWE::with_retry(const SweState& s, double dt,
                                  TimeIntegrator which, StepInfo* info) {
  check_state(s, "step");
  const TimeIntegrator saved = params_.integrator;
  params_.integrator = which;
  auto restore = [&]() { params_.integrator = saved; };

  auto finish = [&](const SweState& out, double used_dt) {
    if (params_.stab == Stabilization::supg_q)
      accept_history(diagnose_q(out.u, out.D), used_dt);
  };

  try {
    StepInfo local;
    if (info != nullptr) local.record_pv_flux = info->record_pv_flux;
    SweState out = step_once(s, dt, &local);
    finish(out, dt);
    if (info != nullptr) {
      local.record_pv_flux = info->record_pv_flux;
      *info = std::move(local);
    }
    restore();
    return out;
  } catch (const std::domain_error&) {
    // Depth positivity failed: retry once as two half steps.
    try {
      StepInfo i1, i2;
      if (info != nullptr) {
        i1.record_pv_flux = info->record_pv_flux;
        i2.record_pv_flux = info->record_pv_flux;
      }
      SweState mid = step_once(s, 0.5 * dt, &i1);
      finish(mid, 0.5 * dt);
      SweState out = step_once(mid, 0.5 * dt, &i2);
      finish(out, 0.5 * dt);
      if (info != nullptr) {
        StepInfo merged;
        merged.record_pv_flux = info->record_pv_flux;
        merged.newton_iters = i1.newton_iters + i2.newton_iters;
        merged.residual_norm = std::max(i1.residual_norm, i2.residual_norm);
        merged.substeps = 2;
        if (merged.record_pv_flux && !i1.pv_flux.empty()) {
          merged.pv_flux = i1.pv_flux;
          for (Index i = 0; i < v0_->ndofs(); ++i)
            merged.pv_flux[i] += i2.pv_flux[i];
        }
        *info = std::move(merged);
      }
      restore();
      return out;
    } catch (const std::domain_error& e) {
      restore();
      throw SolveError(std::string("step: layer depth lost positivity even "
                                   "after halving the step (") +
                       e.what() + ")");
    } catch (...) {
      restore();
      throw;
    }
  } catch (...) {
    restore();
    throw;
  }
}

SweState NonlinearSWE::step(const SweState& s, StepInfo* info) {
  return with_retry(s, params_.dt, params_.integrator, info);
}

SweState NonlinearSWE::step_midpoint_nl(const SweState& s, StepInfo* info) {
  return with_retry(s, params_.dt, TimeIntegrator::midpoint, info);
}

SweState NonlinearSWE::step_poisson(const SweState& s, StepInfo* info) {
  return with_retry(s, params_.dt, TimeIntegrator::poisson, info);
}

SweState NonlinearSWE::step_semi_implicit(const SweState& s, StepInfo* info) {
  return with_retry(s, params_.dt, TimeIntegrator::semi_implicit, info);
}

PvReport NonlinearSWE::pv_consistency_check(
    const std::vector<SweState>& trajectory,
    const std::vector<StepInfo>& steps) const {
  if (trajectory.size() != steps.size() + 1)
    throw std::invalid_argument(
        "pv_consistency_check: need one more state than steps");
  PvReport report;
  if (trajectory.empty()) return report;

  // Weak PV mass <g, q D> per state.
  auto qd_dual = [&](const SweState& s, Field& q_out) {
    q_out = diagnose_q(s.u, s.D);
    std::vector<double> q_q;
    values_at_quad(q_out, quad_, q_q);
    const std::size_t nq = quad_.w.size();
    for (Index c = 0; c < v2_->ndofs(); ++c)
      for (std::size_t k = 0; k < nq; ++k) q_q[c * nq + k] *= s.D[c];
    return v0_dual_value(v0_, quad_, q_q);
  };

  Field q0;
  std::vector<double> prev = qd_dual(trajectory[0], q0);

  // Constant-PV detection from the initial diagnosed field.
  double qmin = q0[0], qmax = q0[0];
  for (Index i = 0; i < v0_->ndofs(); ++i) {
    qmin = std::min(qmin, q0[i]);
    qmax = std::max(qmax, q0[i]);
  }
  const double c0 = 0.5 * (qmin + qmax);
  report.constant_initial_q =
      (qmax - qmin) <= 1e-8 * std::max(1.0, std::abs(c0));

  auto track_deviation = [&](const Field& q) {
    if (!report.constant_initial_q) return;
    for (Index i = 0; i < v0_->ndofs(); ++i)
      report.max_constant_deviation =
          std::max(report.max_constant_deviation, std::abs(q[i] - c0));
  };
  track_deviation(q0);

  for (std::size_t n = 0; n < steps.size(); ++n) {
    Field qn;
    const std::vector<double> cur = qd_dual(trajectory[n + 1], qn);
    track_deviation(qn);
    if (!steps[n].pv_flux.empty()) {
      for (Index i = 0; i < v0_->ndofs(); ++i) {
        const double r = cur[i] - prev[i] - steps[n].pv_flux[i];
        report.max_flux_residual =
            std::max(report.max_flux_residual, std::abs(r) / params_.dt);
      }
    }
    prev = cur;
  }
  return report;
}

}  // namespace tfe
