#include "tfe/fespace.hpp"

#include <stdexcept>

namespace tfe {

const char* family_name(Family f) {
  switch (f) {
    case Family::V0: return "V0";
    case Family::V1: return "V1";
    case Family::V2: return "V2";
  }
  return "?";
}

FunctionSpace::FunctionSpace(const PeriodicQuadMesh& mesh, Family family)
    : mesh_(mesh), family_(family) {
  const Index n = mesh_.num_cells();
  switch (family_) {
    case Family::V0: ndofs_ = n; break;
    case Family::V1: ndofs_ = 2 * n; break;
    case Family::V2: ndofs_ = n; break;
  }
}

std::array<DofRef, 4> FunctionSpace::cell_dofs(Index c) const {
  std::array<DofRef, 4> dofs{};
  switch (family_) {
    case Family::V0: {
      const auto v = mesh_.cell_vertices(c);
      for (int k = 0; k < 4; ++k) dofs[k] = {v[k], 1.0};
      break;
    }
    case Family::V1: {
      const auto e = mesh_.cell_edges(c);
      // Global normals are axis-aligned and so is the local basis; all signs
      // are +1 on this mesh family.
      for (int k = 0; k < 4; ++k) dofs[k] = {e[k], 1.0};
      break;
    }
    case Family::V2:
      dofs[0] = {c, 1.0};
      break;
  }
  return dofs;
}

SpacePtr make_space(const PeriodicQuadMesh& mesh, Family family) {
  return std::make_shared<FunctionSpace>(mesh, family);
}

Field::Field(SpacePtr s, std::vector<double> c)
    : space(std::move(s)), coeffs(std::move(c)) {
  if (static_cast<Index>(coeffs.size()) != space->ndofs())
    throw std::invalid_argument("Field: coefficient count does not match space");
}

std::array<double, 4> v0_values_at(double xi, double eta) {
  return {(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), (1.0 - xi) * eta,
          xi * eta};
}

std::array<Vec2, 4> v1_values_at(double xi, double eta) {
  // Physical values for mean-flux DOFs: the basis of edge k has unit constant
  // normal component on edge k and zero mean flux on the other three.
  return {Vec2{1.0 - xi, 0.0}, Vec2{xi, 0.0}, Vec2{0.0, 1.0 - eta},
          Vec2{0.0, eta}};
}

BasisTablesV0 tabulate_v0(const Quadrature& q, double dx, double dy) {
  BasisTablesV0 t;
  const int nq = q.size();
  for (int k = 0; k < 4; ++k) {
    t.value[k].resize(nq);
    t.grad_x[k].resize(nq);
    t.grad_y[k].resize(nq);
  }
  for (int p = 0; p < nq; ++p) {
    const double xi = q.x[p], eta = q.y[p];
    const auto v = v0_values_at(xi, eta);
    // Reference gradients of the bilinear basis, scaled to physical space.
    const double dxi[4] = {-(1.0 - eta), (1.0 - eta), -eta, eta};
    const double deta[4] = {-(1.0 - xi), -xi, (1.0 - xi), xi};
    for (int k = 0; k < 4; ++k) {
      t.value[k][p] = v[k];
      t.grad_x[k][p] = dxi[k] / dx;
      t.grad_y[k][p] = deta[k] / dy;
    }
  }
  return t;
}

BasisTablesV1 tabulate_v1(const Quadrature& q, double dx, double dy) {
  BasisTablesV1 t;
  const int nq = q.size();
  for (int k = 0; k < 4; ++k) {
    t.value_x[k].resize(nq);
    t.value_y[k].resize(nq);
  }
  for (int p = 0; p < nq; ++p) {
    const auto v = v1_values_at(q.x[p], q.y[p]);
    for (int k = 0; k < 4; ++k) {
      t.value_x[k][p] = v[k].x;
      t.value_y[k][p] = v[k].y;
    }
  }
  t.divergence = {-1.0 / dx, 1.0 / dx, -1.0 / dy, 1.0 / dy};
  return t;
}

Field interpolate(const SpacePtr& space, const ScalarFn& f, int quad_order) {
  Field out(space);
  const PeriodicQuadMesh& mesh = space->mesh();
  switch (space->family()) {
    case Family::V0: {
      for (Index v = 0; v < space->ndofs(); ++v) {
        const Point p = mesh.vertex_position(v);
        out[v] = f(p.x, p.y);
      }
      break;
    }
    case Family::V2: {
      const GaussRule1D g = gauss_rule_1d(quad_order);
      for (Index c = 0; c < mesh.num_cells(); ++c) {
        const auto geo = mesh.cell_geometry(c);
        double mean = 0.0;
        for (int j = 0; j < quad_order; ++j)
          for (int i = 0; i < quad_order; ++i)
            mean += g.weights[i] * g.weights[j] *
                    f(geo.origin.x + g.points[i] * geo.dx,
                      geo.origin.y + g.points[j] * geo.dy);
        out[c] = mean;  // weights sum to 1, so this is the cell mean
      }
      break;
    }
    case Family::V1:
      throw std::invalid_argument(
          "interpolate: V1 requires a vector-valued function");
  }
  return out;
}

Field interpolate(const SpacePtr& space, const VectorFn& f, int quad_order) {
  if (space->family() != Family::V1)
    throw std::invalid_argument(
        "interpolate: vector-valued interpolation targets V1");
  Field out(space);
  const PeriodicQuadMesh& mesh = space->mesh();
  const Index n = mesh.num_cells();
  const GaussRule1D g = gauss_rule_1d(quad_order);
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    const auto [i, j] = mesh.edge_lattice(e);
    double mean = 0.0;
    if (e < n) {
      // X edge at x = i*dx spanning y in [j*dy,(j+1)*dy]; normal +x.
      const double x = i * mesh.dx();
      for (int p = 0; p < quad_order; ++p)
        mean += g.weights[p] * f(x, (j + g.points[p]) * mesh.dy()).x;
    } else {
      // Y edge at y = j*dy spanning x in [i*dx,(i+1)*dx]; normal +y.
      const double y = j * mesh.dy();
      for (int p = 0; p < quad_order; ++p)
        mean += g.weights[p] * f((i + g.points[p]) * mesh.dx(), y).y;
    }
    out[e] = mean;
  }
  return out;
}

double evaluate_scalar(const Field& field, Point p) {
  const FunctionSpace& space = *field.space;
  const PeriodicQuadMesh& mesh = space.mesh();
  const auto loc = mesh.locate(p);
  if (space.family() == Family::V2) return field[loc.cell];
  if (space.family() != Family::V0)
    throw std::invalid_argument("evaluate_scalar: field must be V0 or V2");
  const auto dofs = space.cell_dofs(loc.cell);
  const auto v = v0_values_at(loc.xi, loc.eta);
  double s = 0.0;
  for (int k = 0; k < 4; ++k) s += v[k] * dofs[k].sign * field[dofs[k].index];
  return s;
}

Vec2 evaluate_vector(const Field& field, Point p) {
  const FunctionSpace& space = *field.space;
  if (space.family() != Family::V1)
    throw std::invalid_argument("evaluate_vector: field must be V1");
  const auto loc = space.mesh().locate(p);
  const auto dofs = space.cell_dofs(loc.cell);
  const auto v = v1_values_at(loc.xi, loc.eta);
  Vec2 s;
  for (int k = 0; k < 4; ++k) {
    const double c = dofs[k].sign * field[dofs[k].index];
    s.x += c * v[k].x;
    s.y += c * v[k].y;
  }
  return s;
}

}  // namespace tfe
