#include "tfe/hodge.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace tfe {

namespace {

Eigen::MatrixXd densify(const SparseOperator& A) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(A.rows(), A.cols());
  const auto& rp = A.row_ptr();
  const auto& ci = A.col_idx();
  const auto& v = A.values();
  for (Index r = 0; r < A.rows(); ++r)
    for (Index k = rp[r]; k < rp[r + 1]; ++k) M(r, ci[k]) += v[k];
  return M;
}

Field constant_field(const SpacePtr& v1, double cx, double cy) {
  const auto& mesh = v1->mesh();
  Field e(v1);
  const Index n = mesh.num_cells();
  for (Index k = 0; k < n; ++k) {
    e[k] = cx;      // x-edges carry the x-component as mean normal flux
    e[n + k] = cy;  // y-edges carry the y-component
  }
  return e;
}

}  // namespace

std::vector<Field> harmonic_basis(const SpacePtr& v1, Index dense_check_limit) {
  if (v1 == nullptr || v1->family() != Family::V1)
    throw std::invalid_argument("harmonic_basis: expected an edge-flux space");
  const auto& mesh = v1->mesh();
  const auto v0 = make_space(mesh, Family::V0);
  const auto v2 = make_space(mesh, Family::V2);

  const SparseOperator G = grad_perp(v0, v1);
  const SparseOperator D = div_matrix(v1, v2);
  const SparseOperator M1 = mass_matrix(v1);

  std::vector<Field> basis;
  basis.push_back(constant_field(v1, 1.0, 0.0));
  basis.push_back(constant_field(v1, 0.0, 1.0));

  // Verify the defining residuals: zero divergence and zero curl (the latter
  // as orthogonality of M1 e against every rotated vertex gradient).
  const double scale = std::sqrt(mesh.Lx() * mesh.Ly());
  for (const Field& e : basis) {
    std::vector<double> div(v2->ndofs()), me(v1->ndofs()), curl(v0->ndofs());
    D.apply(e.coeffs.data(), div.data());
    M1.apply(e.coeffs.data(), me.data());
    G.apply_transpose(me.data(), curl.data());
    double rd = 0.0, rc = 0.0;
    for (double x : div) rd = std::max(rd, std::abs(x));
    for (double x : curl) rc = std::max(rc, std::abs(x));
    if (rd > 1e-12 * scale || rc > 1e-12 * scale)
      throw std::logic_error(
          "harmonic_basis: constant field fails the harmonicity residual "
          "(div " + std::to_string(rd) + ", curl " + std::to_string(rc) + ")");
  }

  // On small meshes, count the dimension of the harmonic space by a dense
  // generalized eigensolve of A x = lambda M1 x with
  //   A = Div^T M2 Div + (M1 G)(M1 G)^T / s,
  // whose kernel is exactly the harmonic space.  The Gram scaling s balances
  // the magnitudes of the two terms.
  if (v1->ndofs() <= dense_check_limit) {
    const SparseOperator M1G = M1.multiply(G);
    const SparseOperator DtM2D =
        D.transposed().multiply(
            SparseOperator::diagonal(m2_diagonal(v2)).multiply(D));
    Eigen::MatrixXd A = densify(DtM2D);
    const Eigen::MatrixXd C = densify(M1G);
    const double s = std::max(C.norm(), 1e-300);
    A += C * C.transpose() / s;
    const Eigen::MatrixXd B = densify(M1);

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B);
    if (es.info() != Eigen::Success)
      throw std::logic_error("harmonic_basis: dense eigensolve failed");
    const auto& ev = es.eigenvalues();
    const double cutoff = 1e-8 * std::max(ev(ev.size() - 1), 1e-300);
    Index dim = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (std::abs(ev(i)) < cutoff) ++dim;
    if (dim != 2)
      throw std::logic_error(
          "harmonic_basis: harmonic space dimension is " + std::to_string(dim) +
          ", expected 2");
  }
  return basis;
}

HelmholtzParts decompose(const Field& u, const SolverConfig& config) {
  if (u.space == nullptr || u.space->family() != Family::V1)
    throw std::invalid_argument("decompose: expected an edge-flux field");
  const auto v1 = u.space;
  const auto& mesh = v1->mesh();
  const auto v0 = make_space(mesh, Family::V0);

  const SparseOperator G = grad_perp(v0, v1);
  const SparseOperator M1 = mass_matrix(v1);
  const SparseOperator K = G.transposed().multiply(M1.multiply(G));
  const std::vector<double> pin = mass_matrix(v0).row_sums();  // M0 * 1

  // Least-squares stream function: K psi = G^T M1 u, mean pinned by the
  // rank-one term (pin pin^T); the right-hand side is orthogonal to the
  // kernel, so the pinned solution solves the singular system with
  // <1, psi> = 0 in the vertex mass inner product.
  LinOp pinned;
  pinned.n = v0->ndofs();
  pinned.apply = [&K, &pin](const double* x, double* y) {
    K.apply(x, y);
    double s = 0.0;
    for (std::size_t i = 0; i < pin.size(); ++i) s += pin[i] * x[i];
    for (std::size_t i = 0; i < pin.size(); ++i) y[i] += s * pin[i];
  };

  std::vector<double> m1u(v1->ndofs());
  M1.apply(u.coeffs.data(), m1u.data());
  std::vector<double> rhs(v0->ndofs());
  G.apply_transpose(m1u.data(), rhs.data());

  HelmholtzParts parts;
  parts.stream = Field(v0, cg(pinned, rhs, config));
  parts.rotational = Field(v1);
  G.apply(parts.stream.coeffs.data(), parts.rotational.coeffs.data());

  // Residual after removing the rotational part, projected onto the
  // constant fields (mutually orthogonal, each with squared norm |domain|).
  std::vector<double> r(v1->ndofs());
  for (Index i = 0; i < v1->ndofs(); ++i)
    r[i] = u.coeffs[i] - parts.rotational.coeffs[i];
  std::vector<double> m1r(v1->ndofs());
  M1.apply(r.data(), m1r.data());
  const Field ex = constant_field(v1, 1.0, 0.0);
  const Field ey = constant_field(v1, 0.0, 1.0);
  const double vol = mesh.Lx() * mesh.Ly();
  const double hx = dot(ex.coeffs, m1r) / vol;
  const double hy = dot(ey.coeffs, m1r) / vol;

  parts.harmonic = Field(v1);
  parts.divergent = Field(v1);
  const Index n = mesh.num_cells();
  for (Index k = 0; k < n; ++k) {
    parts.harmonic[k] = hx;
    parts.harmonic[n + k] = hy;
  }
  for (Index i = 0; i < v1->ndofs(); ++i)
    parts.divergent[i] = r[i] - parts.harmonic[i];
  return parts;
}

}  // namespace tfe
