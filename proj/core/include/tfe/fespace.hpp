// The three spaces of the lowest-order quadrilateral complex on the periodic
// mesh:
//   V0 - continuous bilinear (one DOF per vertex),
//   V1 - lowest-order Raviart-Thomas on squares (one DOF per edge),
//   V2 - piecewise constants (one DOF per cell),
// together with DOF maps, interpolation and pointwise evaluation.
//
// V1 DOF convention: the coefficient on an edge is the MEAN normal flux of
// the field across that edge with respect to the fixed global normal (+x for
// vertical edges, +y for horizontal ones).  For a constant field (a,b) every
// x-edge DOF is a and every y-edge DOF is b; the edge-integrated flux is the
// DOF times the edge length.  With the axis-aligned global orientation all
// cell-to-global sign factors are +1 (they are kept in the DOF map so that
// assembly code stays orientation-agnostic).
#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "tfe/mesh.hpp"
#include "tfe/quadrature.hpp"

namespace tfe {

enum class Family { V0, V1, V2 };

const char* family_name(Family f);

// Signed local-to-global DOF map entry.
struct DofRef {
  Index index;
  double sign;
};

class FunctionSpace;
using SpacePtr = std::shared_ptr<const FunctionSpace>;

class FunctionSpace : public std::enable_shared_from_this<FunctionSpace> {
public:
  FunctionSpace(const PeriodicQuadMesh& mesh, Family family);

  const PeriodicQuadMesh& mesh() const { return mesh_; }
  Family family() const { return family_; }
  Index ndofs() const { return ndofs_; }
  int dofs_per_cell() const { return family_ == Family::V2 ? 1 : 4; }

  // Local DOF order: V0 (v00, v10, v01, v11); V1 (left, right, bottom, top);
  // V2 (cell).  Unused tail entries are zero-filled for V2.
  std::array<DofRef, 4> cell_dofs(Index c) const;

private:
  PeriodicQuadMesh mesh_;
  Family family_;
  Index ndofs_;
};

SpacePtr make_space(const PeriodicQuadMesh& mesh, Family family);

// A coefficient vector tagged by its space.
struct Field {
  SpacePtr space;
  std::vector<double> coeffs;

  Field() = default;
  explicit Field(SpacePtr s) : space(std::move(s)), coeffs(space->ndofs(), 0.0) {}
  Field(SpacePtr s, std::vector<double> c);

  Index size() const { return static_cast<Index>(coeffs.size()); }
  double& operator[](Index i) { return coeffs[i]; }
  double operator[](Index i) const { return coeffs[i]; }
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

using ScalarFn = std::function<double(double, double)>;
using VectorFn = std::function<Vec2(double, double)>;

// Interpolation (the canonical DOF functionals):
//   V0: vertex values;  V2: cell means;  V1: per-edge mean normal flux.
// Cell and edge means are computed with a Gauss rule of `quad_order` points,
// high enough by default that smooth analytic data is interpolated to
// near machine precision.
Field interpolate(const SpacePtr& space, const ScalarFn& f, int quad_order = 8);
Field interpolate(const SpacePtr& space, const VectorFn& f, int quad_order = 8);

// Pointwise evaluation by cellwise basis expansion (points are folded into
// the periodic domain).  Scalar evaluation requires V0/V2, vector requires V1.
double evaluate_scalar(const Field& field, Point p);
Vec2 evaluate_vector(const Field& field, Point p);

// Reference-element tables evaluated at the points of a quadrature rule, in
// physical normalization for a (dx,dy) cell of the uniform mesh (identical in
// every cell).  Layout: value[k][q] for local basis k and quadrature point q.
struct BasisTablesV0 {
  std::array<std::vector<double>, 4> value;
  std::array<std::vector<double>, 4> grad_x;  // physical d/dx
  std::array<std::vector<double>, 4> grad_y;  // physical d/dy
};
struct BasisTablesV1 {
  std::array<std::vector<double>, 4> value_x;
  std::array<std::vector<double>, 4> value_y;
  std::array<double, 4> divergence;  // constant per basis function
};

BasisTablesV0 tabulate_v0(const Quadrature& q, double dx, double dy);
BasisTablesV1 tabulate_v1(const Quadrature& q, double dx, double dy);

// Reference basis values at a single reference point (used by evaluation).
std::array<double, 4> v0_values_at(double xi, double eta);
std::array<Vec2, 4> v1_values_at(double xi, double eta);

}  // namespace tfe
