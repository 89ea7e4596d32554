// Galerkin assembly on the periodic quad mesh: mass matrices for the three
// spaces, the exact perpendicular-gradient and divergence maps between them,
// Coriolis-type skew couplings, weighted scalar mass matrices, L2 projection,
// and dual-vector (right-hand-side) assembly helpers used by the schemes.
#pragma once

#include <vector>

#include "tfe/fespace.hpp"
#include "tfe/quadrature.hpp"
#include "tfe/solvers.hpp"
#include "tfe/sparse.hpp"

namespace tfe {

// Mass matrix of a space.  The cellwise-constant space yields an exact
// diagonal with the cell area on the diagonal.
SparseOperator mass_matrix(const SpacePtr& space,
                           const Quadrature& quad = tensor_gauss(3));

// Diagonal of the cellwise-constant mass matrix (cell areas).
std::vector<double> m2_diagonal(const SpacePtr& v2);

// Stiffness matrix <grad a, grad b> on the vertex space.
SparseOperator stiffness_matrix(const SpacePtr& v0,
                                const Quadrature& quad = tensor_gauss(3));

// Vertex-space mass matrix weighted by a cellwise-constant field:
// entries <a, D b>.  Throws std::domain_error if the weight is not strictly
// positive somewhere, since its uses require an invertible product.
SparseOperator weighted_v0_mass(const SpacePtr& v0, const Field& D,
                                const Quadrature& quad = tensor_gauss(3));

// Exact map taking vertex coefficients to edge-flux coefficients of the
// rotated gradient (-d/dy, d/dx).  The image is pointwise equal to the
// rotated gradient of the vertex function, so the discrete divergence of the
// image vanishes identically.
SparseOperator grad_perp(const SpacePtr& v0, const SpacePtr& v1);

// Exact divergence map from edge-flux coefficients to cell means.
SparseOperator div_matrix(const SpacePtr& v1, const SpacePtr& v2);

// Skew coupling W with entries <w_i, f w_j-perp> where perp rotates
// (a, b) to (-b, a).  Overloads take a constant weight, a vertex-space
// weight, or raw weight values at quadrature points (cell-major, one value
// per quadrature node).
SparseOperator coriolis_matrix(const SpacePtr& v1, double f,
                               const Quadrature& quad = tensor_gauss(3));
SparseOperator coriolis_matrix(const SpacePtr& v1, const Field& f,
                               const Quadrature& quad = tensor_gauss(3));
SparseOperator coriolis_matrix_values(const SpacePtr& v1,
                                      const Quadrature& quad,
                                      const std::vector<double>& fvals);

// Values of a field at every quadrature node, cell-major.  Scalar fields
// fill `out`; vector fields fill `out_x`/`out_y`.
void values_at_quad(const Field& f, const Quadrature& quad,
                    std::vector<double>& out);
void values_at_quad(const Field& f, const Quadrature& quad,
                    std::vector<double>& out_x, std::vector<double>& out_y);

// Gradient of a vertex-space field at every quadrature node, cell-major.
void grads_at_quad(const Field& f, const Quadrature& quad,
                   std::vector<double>& out_x, std::vector<double>& out_y);

// Dual vectors against quadrature-point data (all cell-major, length
// ncells * nq): <phi_i, s>, <grad phi_i, F>, <w_i, F>, <chi_i, s>.
std::vector<double> v0_dual_value(const SpacePtr& v0, const Quadrature& quad,
                                  const std::vector<double>& s);
std::vector<double> v0_dual_grad(const SpacePtr& v0, const Quadrature& quad,
                                 const std::vector<double>& fx,
                                 const std::vector<double>& fy);
std::vector<double> v1_dual_value(const SpacePtr& v1, const Quadrature& quad,
                                  const std::vector<double>& fx,
                                  const std::vector<double>& fy);
std::vector<double> v2_dual_value(const SpacePtr& v2, const Quadrature& quad,
                                  const std::vector<double>& s);

// L2 projection of a field onto a target space on the same mesh.  Scalar
// fields project between the vertex and cell spaces; edge-flux fields
// project onto the edge-flux space.  Mass solves use conjugate gradients
// with the given tolerances (the cell space is diagonal and exact).
Field l2_project(const Field& src, const SpacePtr& target,
                 const SolverConfig& config = {},
                 const Quadrature& quad = tensor_gauss(3));

}  // namespace tfe
