#include "tfe/dump.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tfe/mesh.hpp"

namespace tfe {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_dump(const Field& field, const std::string& path) {
  if (field.space == nullptr)
    throw std::invalid_argument("write_dump: empty field");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open dump file '" + path + "'");
  const auto& mesh = field.space->mesh();
  out << family_name(field.space->family()) << ' ' << field.size() << ' '
      << mesh.nx() << ' ' << mesh.ny() << ' ' << fmt(mesh.Lx()) << ' '
      << fmt(mesh.Ly()) << '\n';
  for (Index i = 0; i < field.size(); ++i) out << fmt(field[i]) << '\n';
  if (!out) throw std::runtime_error("failed writing dump '" + path + "'");
}

DumpData read_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dump file '" + path + "'");
  DumpData d;
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("dump file '" + path + "' is empty");
  std::istringstream hs(header);
  long ndofs = 0;
  if (!(hs >> d.family >> ndofs >> d.nx >> d.ny >> d.Lx >> d.Ly) || ndofs < 0)
    throw std::runtime_error("malformed dump header in '" + path + "'");
  if (d.family != "V0" && d.family != "V1" && d.family != "V2")
    throw std::runtime_error("unknown space family '" + d.family + "' in '" +
                             path + "'");
  d.ndofs = static_cast<Index>(ndofs);
  d.coeffs.reserve(d.coeffs.size() + static_cast<std::size_t>(ndofs));
  double v;
  while (in >> v) d.coeffs.push_back(v);
  if (static_cast<long>(d.coeffs.size()) != ndofs)
    throw std::runtime_error("dump '" + path + "' has " +
                             std::to_string(d.coeffs.size()) +
                             " coefficients, header promises " +
                             std::to_string(ndofs));
  return d;
}

void write_vtk(const Field& field, const std::string& path,
               const std::string& name) {
  if (field.space == nullptr)
    throw std::invalid_argument("write_vtk: empty field");
  const auto& mesh = field.space->mesh();
  const int nx = mesh.nx(), ny = mesh.ny();
  const int npoints = (nx + 1) * (ny + 1);
  const int ncells = nx * ny;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open VTK file '" + path + "'");

  out << "# vtk DataFile Version 3.0\n";
  out << "torusfe field '" << name << "'\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << npoints << " double\n";
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      out << fmt(i * mesh.dx()) << ' ' << fmt(j * mesh.dy()) << " 0\n";

  auto pid = [&](int i, int j) { return j * (nx + 1) + i; };
  out << "CELLS " << ncells << ' ' << 5 * ncells << '\n';
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      out << "4 " << pid(i, j) << ' ' << pid(i + 1, j) << ' '
          << pid(i + 1, j + 1) << ' ' << pid(i, j + 1) << '\n';
  out << "CELL_TYPES " << ncells << '\n';
  for (int c = 0; c < ncells; ++c) out << "9\n";

  out << "CELL_DATA " << ncells << '\n';
  const bool vector_valued = field.space->family() == Family::V1;
  if (vector_valued)
    out << "VECTORS " << name << " double\n";
  else
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Point center{(i + 0.5) * mesh.dx(), (j + 0.5) * mesh.dy()};
      if (vector_valued) {
        const Vec2 v = evaluate_vector(field, center);
        out << fmt(v.x) << ' ' << fmt(v.y) << " 0\n";
      } else {
        out << fmt(evaluate_scalar(field, center)) << '\n';
      }
    }
  if (!out) throw std::runtime_error("failed writing VTK '" + path + "'");
}

}  // namespace tfe
