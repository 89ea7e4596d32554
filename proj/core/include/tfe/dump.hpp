// Plain-text field dumps (bit-exact round trip) and a legacy-VTK export of
// cellwise-sampled values for visualization.
#pragma once

#include <string>
#include <vector>

#include "tfe/fespace.hpp"

namespace tfe {

// Contents of a text dump: the header describes the space and mesh, the
// coefficients follow in global DOF order.
struct DumpData {
  std::string family;  // "V0" | "V1" | "V2"
  Index ndofs = 0;
  int nx = 0, ny = 0;
  double Lx = 0.0, Ly = 0.0;
  std::vector<double> coeffs;
};

// Header line "family ndofs nx ny Lx Ly", then one coefficient per line;
// all doubles are written with %.17g so a round trip is bit-exact.
void write_dump(const Field& field, const std::string& path);
DumpData read_dump(const std::string& path);

// Legacy-VTK unstructured-grid export: quads over the fundamental domain
// (the periodic seam is duplicated for viewers) with one cell-sampled value
// per cell — scalars for vertex/cell fields, vectors for edge-flux fields.
void write_vtk(const Field& field, const std::string& path,
               const std::string& name);

}  // namespace tfe
