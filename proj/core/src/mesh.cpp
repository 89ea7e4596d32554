#include "tfe/mesh.hpp"

#include <cmath>

namespace tfe {

PeriodicQuadMesh::PeriodicQuadMesh(Index nx, Index ny, double Lx, double Ly)
    : nx_(nx), ny_(ny), Lx_(Lx), Ly_(Ly) {
  // Fewer than 3 cells per direction would alias periodic neighbors: a cell
  // would meet the same neighbor through two of its edges' stencils.
  if (nx < 3 || ny < 3)
    throw std::invalid_argument(
        "PeriodicQuadMesh: nx and ny must be at least 3");
  if (!(Lx > 0.0) || !(Ly > 0.0))
    throw std::invalid_argument(
        "PeriodicQuadMesh: domain extents must be positive");
  dx_ = Lx_ / nx_;
  dy_ = Ly_ / ny_;
}

std::array<Index, 2> PeriodicQuadMesh::edge_lattice(Index e) const {
  check_edge(e);
  const Index n = nx_ * ny_;
  const Index f = e < n ? e : e - n;
  return {f % nx_, f / nx_};
}

std::array<Index, 2> PeriodicQuadMesh::cell_lattice(Index c) const {
  check_cell(c);
  return {c % nx_, c / nx_};
}

std::array<Index, 2> PeriodicQuadMesh::vertex_lattice(Index v) const {
  check_cell(v);  // same index range as cells
  return {v % nx_, v / nx_};
}

PeriodicQuadMesh::EdgeCells PeriodicQuadMesh::edge_cells(Index e) const {
  check_edge(e);
  const auto [i, j] = edge_lattice(e);
  if (edge_axis(e) == EdgeAxis::X) {
    // Normal +x points out of cell (i-1,j) into cell (i,j).
    return {cell_id(i - 1, j), cell_id(i, j)};
  }
  // Normal +y points out of cell (i,j-1) into cell (i,j).
  return {cell_id(i, j - 1), cell_id(i, j)};
}

std::array<Index, 4> PeriodicQuadMesh::cell_edges(Index c) const {
  check_cell(c);
  const auto [i, j] = cell_lattice(c);
  return {edge_x_id(i, j), edge_x_id(i + 1, j), edge_y_id(i, j),
          edge_y_id(i, j + 1)};
}

std::array<Index, 4> PeriodicQuadMesh::cell_vertices(Index c) const {
  check_cell(c);
  const auto [i, j] = cell_lattice(c);
  return {vertex_id(i, j), vertex_id(i + 1, j), vertex_id(i, j + 1),
          vertex_id(i + 1, j + 1)};
}

PeriodicQuadMesh::CellGeometry PeriodicQuadMesh::cell_geometry(Index c) const {
  check_cell(c);
  const auto [i, j] = cell_lattice(c);
  return {{i * dx_, j * dy_}, dx_, dy_};
}

Point PeriodicQuadMesh::vertex_position(Index v) const {
  const auto [i, j] = vertex_lattice(v);
  return {i * dx_, j * dy_};
}

Point PeriodicQuadMesh::fold(Point p) const {
  double x = std::fmod(p.x, Lx_);
  double y = std::fmod(p.y, Ly_);
  if (x < 0.0) x += Lx_;
  if (y < 0.0) y += Ly_;
  // fmod of a value just below a period can round up to the period itself.
  if (x >= Lx_) x = 0.0;
  if (y >= Ly_) y = 0.0;
  return {x, y};
}

PeriodicQuadMesh::CellPoint PeriodicQuadMesh::locate(Point p) const {
  const Point q = fold(p);
  Index i = static_cast<Index>(q.x / dx_);
  Index j = static_cast<Index>(q.y / dy_);
  if (i >= nx_) i = nx_ - 1;
  if (j >= ny_) j = ny_ - 1;
  return {cell_id(i, j), q.x / dx_ - i, q.y / dy_ - j};
}

}  // namespace tfe
