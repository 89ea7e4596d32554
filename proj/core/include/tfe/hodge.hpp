// Discrete Helmholtz-Hodge decomposition of edge-flux fields on the torus:
// a rotational part (rotated gradient of a vertex stream function), a
// harmonic part (constant vector fields), and a divergent remainder, mutually
// orthogonal in the edge-space mass inner product.
#pragma once

#include <vector>

#include "tfe/assembly.hpp"
#include "tfe/fespace.hpp"
#include "tfe/solvers.hpp"

namespace tfe {

struct HelmholtzParts {
  Field rotational;  // rotated gradient of `stream`
  Field harmonic;    // constant vector field component
  Field divergent;   // remainder, orthogonal to the other two
  Field stream;      // zero-mean vertex stream function
};

// The two constant vector fields spanning the harmonic subspace (zero
// divergence and zero curl against every vertex test function).  Both
// residuals are verified; on meshes small enough for a dense eigensolve
// (at most `dense_check_limit` edge DOFs) the dimension of the harmonic
// space is additionally counted and must equal two.
std::vector<Field> harmonic_basis(const SpacePtr& v1,
                                  Index dense_check_limit = 600);

// Decomposes u into rotational + harmonic + divergent.  The stream function
// solves the curl-curl least-squares system with a rank-one mean pin.
HelmholtzParts decompose(const Field& u, const SolverConfig& config = {});

}  // namespace tfe
