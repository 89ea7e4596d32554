// Uniform doubly periodic quadrilateral mesh (flat torus) with globally
// oriented edges.  Edge normals are fixed to the +x / +y axes; the "plus"
// cell of an edge is the one the normal points out of.
#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace tfe {

using Index = std::int32_t;

// Axis tag for edges: an X edge is a vertical edge whose normal is +x,
// a Y edge is a horizontal edge whose normal is +y.
enum class EdgeAxis { X, Y };

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// nx x ny cells on [0,Lx) x [0,Ly), periodic in both directions.
//
// Flat index layout is row-major: id = j*nx + i for vertices, cells and for
// each family of edges.  Edge ids enumerate all X edges first (the X edge
// (i,j) sits at x = i*dx spanning y in [j*dy,(j+1)*dy], i.e. it is the left
// edge of cell (i,j)), then all Y edges (the Y edge (i,j) is the bottom edge
// of cell (i,j) at y = j*dy).
class PeriodicQuadMesh {
public:
  PeriodicQuadMesh(Index nx, Index ny, double Lx, double Ly);

  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  double Lx() const { return Lx_; }
  double Ly() const { return Ly_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double cell_area() const { return dx_ * dy_; }

  Index num_vertices() const { return nx_ * ny_; }
  Index num_edges() const { return 2 * nx_ * ny_; }
  Index num_cells() const { return nx_ * ny_; }

  // Lattice <-> flat index maps (indices taken modulo the lattice).
  Index vertex_id(Index i, Index j) const { return wrap_y(j) * nx_ + wrap_x(i); }
  Index cell_id(Index i, Index j) const { return wrap_y(j) * nx_ + wrap_x(i); }
  Index edge_x_id(Index i, Index j) const { return wrap_y(j) * nx_ + wrap_x(i); }
  Index edge_y_id(Index i, Index j) const {
    return nx_ * ny_ + wrap_y(j) * nx_ + wrap_x(i);
  }

  EdgeAxis edge_axis(Index e) const {
    check_edge(e);
    return e < nx_ * ny_ ? EdgeAxis::X : EdgeAxis::Y;
  }
  // Lattice coordinates (i,j) of an edge within its axis family.
  std::array<Index, 2> edge_lattice(Index e) const;
  std::array<Index, 2> cell_lattice(Index c) const;
  std::array<Index, 2> vertex_lattice(Index v) const;

  // The two cells adjacent to an edge.  The global normal (+x or +y) points
  // out of `plus` and into `minus`.
  struct EdgeCells {
    Index plus;
    Index minus;
  };
  EdgeCells edge_cells(Index e) const;

  // Edges of a cell in the order (left, right, bottom, top).  The left/bottom
  // edges have inward-pointing global normals for this cell, right/top have
  // outward ones.
  std::array<Index, 4> cell_edges(Index c) const;

  // Vertices of a cell in the order (v00, v10, v01, v11), i.e. reference
  // coordinates (0,0), (1,0), (0,1), (1,1).
  std::array<Index, 4> cell_vertices(Index c) const;

  // Affine geometry of a cell: lower-left corner plus the constant diagonal
  // Jacobian (dx, dy) of the map from the reference square [0,1]^2.
  struct CellGeometry {
    Point origin;
    double dx;
    double dy;
  };
  CellGeometry cell_geometry(Index c) const;

  Point vertex_position(Index v) const;

  // Fold an arbitrary point into [0,Lx) x [0,Ly).
  Point fold(Point p) const;

  // Containing cell of a folded point together with reference coordinates.
  struct CellPoint {
    Index cell;
    double xi;
    double eta;
  };
  CellPoint locate(Point p) const;

private:
  Index wrap_x(Index i) const {
    i %= nx_;
    return i < 0 ? i + nx_ : i;
  }
  Index wrap_y(Index j) const {
    j %= ny_;
    return j < 0 ? j + ny_ : j;
  }
  void check_edge(Index e) const {
    if (e < 0 || e >= num_edges())
      throw std::out_of_range("PeriodicQuadMesh: edge id out of range");
  }
  void check_cell(Index c) const {
    if (c < 0 || c >= num_cells())
      throw std::out_of_range("PeriodicQuadMesh: cell id out of range");
  }

  Index nx_;
  Index ny_;
  double Lx_;
  double Ly_;
  double dx_;
  double dy_;
};

}  // namespace tfe
