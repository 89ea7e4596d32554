// Tensor-product Gauss-Legendre quadrature on the reference square [0,1]^2
// and the matching 1D rule on reference edges.
#pragma once

#include <vector>

namespace tfe {

// 1D Gauss-Legendre rule on [0,1]; n points integrate polynomials of degree
// 2n-1 exactly.  Weights sum to 1.
struct GaussRule1D {
  std::vector<double> points;
  std::vector<double> weights;
};

GaussRule1D gauss_rule_1d(int n);

// Tensor rule on [0,1]^2 built from the 1D rule; weights sum to 1 so cell
// integrals are weight * |cell| * integrand.
struct Quadrature {
  int order = 0;  // points per direction
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;

  int size() const { return static_cast<int>(w.size()); }
};

// Default order 3: degree-5 exactness per direction, enough for every
// integrand assembled by this library (products of at most degree 4 per
// direction on affine cells).
Quadrature tensor_gauss(int points_per_direction = 3);

}  // namespace tfe
