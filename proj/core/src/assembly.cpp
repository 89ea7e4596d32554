#include "tfe/assembly.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tfe {

namespace {

bool same_mesh(const PeriodicQuadMesh& a, const PeriodicQuadMesh& b) {
  return a.nx() == b.nx() && a.ny() == b.ny() && a.Lx() == b.Lx() &&
         a.Ly() == b.Ly();
}

void require_family(const SpacePtr& s, Family f, const char* who) {
  if (s == nullptr || s->family() != f)
    throw std::invalid_argument(std::string(who) + ": expected a " +
                                family_name(f) + " space");
}

// Local 4x4 blocks are identical in every cell of the uniform mesh, so they
// are computed once and scattered.
using Local4 = std::array<std::array<double, 4>, 4>;

Local4 local_v0_mass(const BasisTablesV0& t, const Quadrature& q, double area) {
  Local4 m{};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < q.w.size(); ++k)
        s += q.w[k] * t.value[a][k] * t.value[b][k];
      m[a][b] = s * area;
    }
  return m;
}

Local4 local_v0_stiffness(const BasisTablesV0& t, const Quadrature& q,
                          double area) {
  Local4 m{};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < q.w.size(); ++k)
        s += q.w[k] *
             (t.grad_x[a][k] * t.grad_x[b][k] + t.grad_y[a][k] * t.grad_y[b][k]);
      m[a][b] = s * area;
    }
  return m;
}

Local4 local_v1_mass(const BasisTablesV1& t, const Quadrature& q, double area) {
  Local4 m{};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < q.w.size(); ++k)
        s += q.w[k] * (t.value_x[a][k] * t.value_x[b][k] +
                       t.value_y[a][k] * t.value_y[b][k]);
      m[a][b] = s * area;
    }
  return m;
}

SparseOperator scatter_local(const SpacePtr& space, const Local4& m,
                             const std::vector<double>* cell_weight) {
  const Index n = space->ndofs();
  const Index ncells = space->mesh().num_cells();
  CooBuilder builder(n, n);
  for (Index c = 0; c < ncells; ++c) {
    const double w = cell_weight != nullptr ? (*cell_weight)[c] : 1.0;
    const auto dofs = space->cell_dofs(c);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        builder.add(dofs[a].index, dofs[b].index,
                    w * dofs[a].sign * dofs[b].sign * m[a][b]);
  }
  return builder.compress();
}

}  // namespace

SparseOperator mass_matrix(const SpacePtr& space, const Quadrature& quad) {
  if (space == nullptr) throw std::invalid_argument("mass_matrix: null space");
  const auto& mesh = space->mesh();
  switch (space->family()) {
    case Family::V2:
      // Exactly diagonal: disjoint cellwise-constant supports.
      return SparseOperator::diagonal(
          std::vector<double>(mesh.num_cells(), mesh.cell_area()));
    case Family::V0: {
      const auto t = tabulate_v0(quad, mesh.dx(), mesh.dy());
      return scatter_local(space, local_v0_mass(t, quad, mesh.cell_area()),
                           nullptr);
    }
    case Family::V1: {
      const auto t = tabulate_v1(quad, mesh.dx(), mesh.dy());
      return scatter_local(space, local_v1_mass(t, quad, mesh.cell_area()),
                           nullptr);
    }
  }
  throw std::logic_error("mass_matrix: unreachable");
}

std::vector<double> m2_diagonal(const SpacePtr& v2) {
  require_family(v2, Family::V2, "m2_diagonal");
  return std::vector<double>(v2->mesh().num_cells(), v2->mesh().cell_area());
}

SparseOperator stiffness_matrix(const SpacePtr& v0, const Quadrature& quad) {
  require_family(v0, Family::V0, "stiffness_matrix");
  const auto& mesh = v0->mesh();
  const auto t = tabulate_v0(quad, mesh.dx(), mesh.dy());
  return scatter_local(v0, local_v0_stiffness(t, quad, mesh.cell_area()),
                       nullptr);
}

SparseOperator weighted_v0_mass(const SpacePtr& v0, const Field& D,
                                const Quadrature& quad) {
  require_family(v0, Family::V0, "weighted_v0_mass");
  require_family(D.space, Family::V2, "weighted_v0_mass (weight)");
  if (!same_mesh(v0->mesh(), D.space->mesh()))
    throw std::invalid_argument("weighted_v0_mass: weight lives on a different mesh");
  const auto& mesh = v0->mesh();
  for (Index c = 0; c < mesh.num_cells(); ++c)
    if (!(D[c] > 0.0))
      throw std::domain_error(
          "weighted_v0_mass: non-positive layer depth in cell " +
          std::to_string(c) + " (value " + std::to_string(D[c]) + ")");
  const auto t = tabulate_v0(quad, mesh.dx(), mesh.dy());
  return scatter_local(v0, local_v0_mass(t, quad, mesh.cell_area()), &D.coeffs);
}

SparseOperator grad_perp(const SpacePtr& v0, const SpacePtr& v1) {
  require_family(v0, Family::V0, "grad_perp");
  require_family(v1, Family::V1, "grad_perp");
  const auto& mesh = v0->mesh();
  if (!same_mesh(mesh, v1->mesh()))
    throw std::invalid_argument("grad_perp: spaces live on different meshes");

  CooBuilder builder(v1->ndofs(), v0->ndofs());
  const double inv_dx = 1.0 / mesh.dx();
  const double inv_dy = 1.0 / mesh.dy();
  for (Index j = 0; j < mesh.ny(); ++j)
    for (Index i = 0; i < mesh.nx(); ++i) {
      // Mean normal flux of (-psi_y, psi_x) across each edge is an exact
      // difference of vertex values along the edge.
      builder.add(mesh.edge_x_id(i, j), mesh.vertex_id(i, j), inv_dy);
      builder.add(mesh.edge_x_id(i, j), mesh.vertex_id(i, j + 1), -inv_dy);
      builder.add(mesh.edge_y_id(i, j), mesh.vertex_id(i + 1, j), inv_dx);
      builder.add(mesh.edge_y_id(i, j), mesh.vertex_id(i, j), -inv_dx);
    }
  return builder.compress();
}

SparseOperator div_matrix(const SpacePtr& v1, const SpacePtr& v2) {
  require_family(v1, Family::V1, "div_matrix");
  require_family(v2, Family::V2, "div_matrix");
  const auto& mesh = v1->mesh();
  if (!same_mesh(mesh, v2->mesh()))
    throw std::invalid_argument("div_matrix: spaces live on different meshes");

  CooBuilder builder(v2->ndofs(), v1->ndofs());
  const double inv_dx = 1.0 / mesh.dx();
  const double inv_dy = 1.0 / mesh.dy();
  for (Index j = 0; j < mesh.ny(); ++j)
    for (Index i = 0; i < mesh.nx(); ++i) {
      const Index c = mesh.cell_id(i, j);
      builder.add(c, mesh.edge_x_id(i + 1, j), inv_dx);
      builder.add(c, mesh.edge_x_id(i, j), -inv_dx);
      builder.add(c, mesh.edge_y_id(i, j + 1), inv_dy);
      builder.add(c, mesh.edge_y_id(i, j), -inv_dy);
    }
  return builder.compress();
}

SparseOperator coriolis_matrix_values(const SpacePtr& v1, const Quadrature& quad,
                                      const std::vector<double>& fvals) {
  require_family(v1, Family::V1, "coriolis_matrix_values");
  const auto& mesh = v1->mesh();
  const Index ncells = mesh.num_cells();
  const std::size_t nq = quad.w.size();
  if (fvals.size() != static_cast<std::size_t>(ncells) * nq)
    throw std::invalid_argument(
        "coriolis_matrix_values: weight array has wrong length");

  const auto t = tabulate_v1(quad, mesh.dx(), mesh.dy());
  const double area = mesh.cell_area();

  // Pointwise a . b-perp with perp (a,b) -> (-b,a): a_y b_x - a_x b_y.
  std::array<std::array<std::vector<double>, 4>, 4> cross;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      cross[a][b].resize(nq);
      for (std::size_t k = 0; k < nq; ++k)
        cross[a][b][k] = t.value_y[a][k] * t.value_x[b][k] -
                         t.value_x[a][k] * t.value_y[b][k];
    }

  CooBuilder builder(v1->ndofs(), v1->ndofs());
  for (Index c = 0; c < ncells; ++c) {
    const auto dofs = v1->cell_dofs(c);
    const double* f = fvals.data() + static_cast<std::size_t>(c) * nq;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < nq; ++k)
          s += quad.w[k] * f[k] * cross[a][b][k];
        if (s != 0.0)
          builder.add(dofs[a].index, dofs[b].index,
                      dofs[a].sign * dofs[b].sign * s * area);
      }
  }
  return builder.compress();
}

SparseOperator coriolis_matrix(const SpacePtr& v1, double f,
                               const Quadrature& quad) {
  require_family(v1, Family::V1, "coriolis_matrix");
  const std::size_t nq = quad.w.size();
  std::vector<double> fvals(
      static_cast<std::size_t>(v1->mesh().num_cells()) * nq, f);
  return coriolis_matrix_values(v1, quad, fvals);
}

SparseOperator coriolis_matrix(const SpacePtr& v1, const Field& f,
                               const Quadrature& quad) {
  require_family(v1, Family::V1, "coriolis_matrix");
  require_family(f.space, Family::V0, "coriolis_matrix (weight)");
  if (!same_mesh(v1->mesh(), f.space->mesh()))
    throw std::invalid_argument("coriolis_matrix: weight lives on a different mesh");
  std::vector<double> fvals;
  values_at_quad(f, quad, fvals);
  return coriolis_matrix_values(v1, quad, fvals);
}

void values_at_quad(const Field& f, const Quadrature& quad,
                    std::vector<double>& out) {
  if (f.space == nullptr)
    throw std::invalid_argument("values_at_quad: field has no space");
  const auto& mesh = f.space->mesh();
  const Index ncells = mesh.num_cells();
  const std::size_t nq = quad.w.size();
  out.assign(static_cast<std::size_t>(ncells) * nq, 0.0);

  switch (f.space->family()) {
    case Family::V2:
      for (Index c = 0; c < ncells; ++c)
        for (std::size_t k = 0; k < nq; ++k)
          out[static_cast<std::size_t>(c) * nq + k] = f[c];
      return;
    case Family::V0: {
      const auto t = tabulate_v0(quad, mesh.dx(), mesh.dy());
      for (Index c = 0; c < ncells; ++c) {
        const auto dofs = f.space->cell_dofs(c);
        double* dst = out.data() + static_cast<std::size_t>(c) * nq;
        for (int a = 0; a < 4; ++a) {
          const double ca = f[dofs[a].index] * dofs[a].sign;
          for (std::size_t k = 0; k < nq; ++k) dst[k] += ca * t.value[a][k];
        }
      }
      return;
    }
    case Family::V1:
      throw std::invalid_argument(
          "values_at_quad: edge-flux field is vector valued; use the two-array "
          "overload");
  }
  throw std::logic_error("values_at_quad: unreachable");
}

void values_at_quad(const Field& f, const Quadrature& quad,
                    std::vector<double>& out_x, std::vector<double>& out_y) {
  require_family(f.space, Family::V1, "values_at_quad");
  const auto& mesh = f.space->mesh();
  const Index ncells = mesh.num_cells();
  const std::size_t nq = quad.w.size();
  out_x.assign(static_cast<std::size_t>(ncells) * nq, 0.0);
  out_y.assign(static_cast<std::size_t>(ncells) * nq, 0.0);
  const auto t = tabulate_v1(quad, mesh.dx(), mesh.dy());
  for (Index c = 0; c < ncells; ++c) {
    const auto dofs = f.space->cell_dofs(c);
    double* dx_ = out_x.data() + static_cast<std::size_t>(c) * nq;
    double* dy_ = out_y.data() + static_cast<std::size_t>(c) * nq;
    for (int a = 0; a < 4; ++a) {
      const double ca = f[dofs[a].index] * dofs[a].sign;
      for (std::size_t k = 0; k < nq; ++k) {
        dx_[k] += ca * t.value_x[a][k];
        dy_[k] += ca * t.value_y[a][k];
      }
    }
  }
}

void grads_at_quad(const Field& f, const Quadrature& quad,
                   std::vector<double>& out_x, std::vector<double>& out_y) {
  require_family(f.space, Family::V0, "grads_at_quad");
  const auto& mesh = f.space->mesh();
  const Index ncells = mesh.num_cells();
  const std::size_t nq = quad.w.size();
  out_x.assign(static_cast<std::size_t>(ncells) * nq, 0.0);
  out_y.assign(static_cast<std::size_t>(ncells) * nq, 0.0);
  const auto t = tabulate_v0(quad, mesh.dx(), mesh.dy());
  for (Index c = 0; c < ncells; ++c) {
    const auto dofs = f.space->cell_dofs(c);
    double* gx = out_x.data() + static_cast<std::size_t>(c) * nq;
    double* gy = out_y.data() + static_cast<std::size_t>(c) * nq;
    for (int a = 0; a < 4; ++a) {
      const double ca = f[dofs[a].index] * dofs[a].sign;
      for (std::size_t k = 0; k < nq; ++k) {
        gx[k] += ca * t.grad_x[a][k];
        gy[k] += ca * t.grad_y[a][k];
      }
    }
  }
}

namespace {

void check_quad_data(const SpacePtr& s, const Quadrature& quad,
                     std::size_t len, const char* who) {
  if (len != static_cast<std::size_t>(s->mesh().num_cells()) * quad.w.size())
    throw std::invalid_argument(std::string(who) +
                                ": quadrature data has wrong length");
}

}  // namespace

std::vector<double> v0_dual_value(const SpacePtr& v0, const Quadrature& quad,
                                  const std::vector<double>& s) {
  require_family(v0, Family::V0, "v0_dual_value");
  check_quad_data(v0, quad, s.size(), "v0_dual_value");
  const auto& mesh = v0->mesh();
  const std::size_t nq = quad.w.size();
  const auto t = tabulate_v0(quad, mesh.dx(), mesh.dy());
  const double area = mesh.cell_area();
  std::vector<double> out(v0->ndofs(), 0.0);
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto dofs = v0->cell_dofs(c);
    const double* sv = s.data() + static_cast<std::size_t>(c) * nq;
    for (int a = 0; a < 4; ++a) {
      double acc = 0.0;
      for (std::size_t k = 0; k < nq; ++k)
        acc += quad.w[k] * t.value[a][k] * sv[k];
      out[dofs[a].index] += dofs[a].sign * acc * area;
    }
  }
  return out;
}

std::vector<double> v0_dual_grad(const SpacePtr& v0, const Quadrature& quad,
                                 const std::vector<double>& fx,
                                 const std::vector<double>& fy) {
  require_family(v0, Family::V0, "v0_dual_grad");
  check_quad_data(v0, quad, fx.size(), "v0_dual_grad");
  check_quad_data(v0, quad, fy.size(), "v0_dual_grad");
  const auto& mesh = v0->mesh();
  const std::size_t nq = quad.w.size();
  const auto t = tabulate_v0(quad, mesh.dx(), mesh.dy());
  const double area = mesh.cell_area();
  std::vector<double> out(v0->ndofs(), 0.0);
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto dofs = v0->cell_dofs(c);
    const std::size_t off = static_cast<std::size_t>(c) * nq;
    for (int a = 0; a < 4; ++a) {
      double acc = 0.0;
      for (std::size_t k = 0; k < nq; ++k)
        acc += quad.w[k] *
               (t.grad_x[a][k] * fx[off + k] + t.grad_y[a][k] * fy[off + k]);
      out[dofs[a].index] += dofs[a].sign * acc * area;
    }
  }
  return out;
}

std::vector<double> v1_dual_value(const SpacePtr& v1, const Quadrature& quad,
                                  const std::vector<double>& fx,
                                  const std::vector<double>& fy) {
  require_family(v1, Family::V1, "v1_dual_value");
  check_quad_data(v1, quad, fx.size(), "v1_dual_value");
  check_quad_data(v1, quad, fy.size(), "v1_dual_value");
  const auto& mesh = v1->mesh();
  const std::size_t nq = quad.w.size();
  const auto t = tabulate_v1(quad, mesh.dx(), mesh.dy());
  const double area = mesh.cell_area();
  std::vector<double> out(v1->ndofs(), 0.0);
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    const auto dofs = v1->cell_dofs(c);
    const std::size_t off = static_cast<std::size_t>(c) * nq;
    for (int a = 0; a < 4; ++a) {
      double acc = 0.0;
      for (std::size_t k = 0; k < nq; ++k)
        acc += quad.w[k] *
               (t.value_x[a][k] * fx[off + k] + t.value_y[a][k] * fy[off + k]);
      out[dofs[a].index] += dofs[a].sign * acc * area;
    }
  }
  return out;
}

std::vector<double> v2_dual_value(const SpacePtr& v2, const Quadrature& quad,
                                  const std::vector<double>& s) {
  require_family(v2, Family::V2, "v2_dual_value");
  check_quad_data(v2, quad, s.size(), "v2_dual_value");
  const auto& mesh = v2->mesh();
  const std::size_t nq = quad.w.size();
  const double area = mesh.cell_area();
  std::vector<double> out(v2->ndofs(), 0.0);
  for (Index c = 0; c < mesh.num_cells(); ++c) {
    double acc = 0.0;
    const double* sv = s.data() + static_cast<std::size_t>(c) * nq;
    for (std::size_t k = 0; k < nq; ++k) acc += quad.w[k] * sv[k];
    out[c] = acc * area;
  }
  return out;
}

Field l2_project(const Field& src, const SpacePtr& target,
                 const SolverConfig& config, const Quadrature& quad) {
  if (src.space == nullptr || target == nullptr)
    throw std::invalid_argument("l2_project: null space");
  if (!same_mesh(src.space->mesh(), target->mesh()))
    throw std::invalid_argument("l2_project: source and target meshes differ");

  const bool src_vector = src.space->family() == Family::V1;
  const bool tgt_vector = target->family() == Family::V1;
  if (src_vector != tgt_vector)
    throw std::invalid_argument(
        "l2_project: cannot project between scalar and vector valued spaces");

  Field out(target);
  if (tgt_vector) {
    std::vector<double> fx, fy;
    values_at_quad(src, quad, fx, fy);
    const auto b = v1_dual_value(target, quad, fx, fy);
    out.coeffs = cg(mass_matrix(target, quad), b, config);
    return out;
  }

  std::vector<double> s;
  values_at_quad(src, quad, s);
  if (target->family() == Family::V2) {
    // Diagonal mass: the projection is the cell mean.
    const std::size_t nq = quad.w.size();
    for (Index c = 0; c < target->ndofs(); ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < nq; ++k)
        acc += quad.w[k] * s[static_cast<std::size_t>(c) * nq + k];
      out[c] = acc;
    }
    return out;
  }
  const auto b = v0_dual_value(target, quad, s);
  out.coeffs = cg(mass_matrix(target, quad), b, config);
  return out;
}

}  // namespace tfe
