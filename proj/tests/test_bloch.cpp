// Plane-wave (Bloch) analysis of the assembled operators: on a commensurate
// wavenumber every operator acts on a discrete plane wave as multiplication
// by a scalar symbol once each DOF carries the phase of its physical
// location (edge midpoints, vertices, cell centers).  The symbols have short
// closed forms which double as an independent oracle for the dispersion
// solver.
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "tfe/assembly.hpp"
#include "tfe/fespace.hpp"
#include "tfe/mesh.hpp"
#include "tfe/sparse.hpp"
#include "tfe/swe_linear.hpp"

using namespace tfe;
using test_util::kPi;
using cplx = std::complex<double>;

namespace {

struct PlaneWave {
  std::vector<double> re, im;  // cos/sin of k . r over a family's DOFs
};

// Phase positions: x edge (i,j) sits at (i dx, (j+1/2) dy), y edge (i,j) at
// ((i+1/2) dx, j dy), vertex (i,j) at (i dx, j dy), cell (i,j) at the center.
PlaneWave vertex_wave(const PeriodicQuadMesh& m, double kx, double ky) {
  PlaneWave w;
  w.re.resize(m.num_vertices());
  w.im.resize(m.num_vertices());
  for (Index j = 0; j < m.ny(); ++j)
    for (Index i = 0; i < m.nx(); ++i) {
      const double ph = kx * i * m.dx() + ky * j * m.dy();
      w.re[m.vertex_id(i, j)] = std::cos(ph);
      w.im[m.vertex_id(i, j)] = std::sin(ph);
    }
  return w;
}

PlaneWave cell_wave(const PeriodicQuadMesh& m, double kx, double ky) {
  PlaneWave w;
  w.re.resize(m.num_cells());
  w.im.resize(m.num_cells());
  for (Index j = 0; j < m.ny(); ++j)
    for (Index i = 0; i < m.nx(); ++i) {
      const double ph = kx * (i + 0.5) * m.dx() + ky * (j + 0.5) * m.dy();
      w.re[m.cell_id(i, j)] = std::cos(ph);
      w.im[m.cell_id(i, j)] = std::sin(ph);
    }
  return w;
}

// axis = 0: wave on the x edges only; axis = 1: y edges only.  Entries for
// the other family stay zero.
PlaneWave edge_wave(const PeriodicQuadMesh& m, double kx, double ky,
                    int axis) {
  PlaneWave w;
  w.re.assign(m.num_edges(), 0.0);
  w.im.assign(m.num_edges(), 0.0);
  for (Index j = 0; j < m.ny(); ++j)
    for (Index i = 0; i < m.nx(); ++i) {
      if (axis == 0) {
        const double ph = kx * i * m.dx() + ky * (j + 0.5) * m.dy();
        w.re[m.edge_x_id(i, j)] = std::cos(ph);
        w.im[m.edge_x_id(i, j)] = std::sin(ph);
      } else {
        const double ph = kx * (i + 0.5) * m.dx() + ky * j * m.dy();
        w.re[m.edge_y_id(i, j)] = std::cos(ph);
        w.im[m.edge_y_id(i, j)] = std::sin(ph);
      }
    }
  return w;
}

// Applies A to the complex wave and divides out the output-family phase,
// returning the largest deviation of the per-DOF quotient from `expect`
// over the DOFs selected by [begin, end).
double symbol_deviation(const SparseOperator& A, const PlaneWave& in,
                        const PlaneWave& out_phase, Index begin, Index end,
                        cplx expect) {
  const auto ar = A.apply(in.re);
  const auto ai = A.apply(in.im);
  double dev = 0.0;
  for (Index d = begin; d < end; ++d) {
    const cplx val(ar[d], ai[d]);
    const cplx phase(out_phase.re[d], out_phase.im[d]);
    dev = std::max(dev, std::abs(val * std::conj(phase) - expect));
  }
  return dev;
}

}  // namespace

TEST_CASE("assembled operators act on plane waves by their closed symbols") {
  PeriodicQuadMesh mesh(16, 16, 1.0, 1.0);
  auto v0 = make_space(mesh, Family::V0);
  auto v1 = make_space(mesh, Family::V1);
  auto v2 = make_space(mesh, Family::V2);
  const double kx = 2.0 * kPi * 2.0, ky = 2.0 * kPi * 3.0;
  const double tx = kx * mesh.dx(), ty = ky * mesh.dy();
  const double area = mesh.cell_area();
  const double f = 4.0;
  const Index n = mesh.num_cells();

  const auto wx = edge_wave(mesh, kx, ky, 0);
  const auto wy = edge_wave(mesh, kx, ky, 1);
  const auto wv = vertex_wave(mesh, kx, ky);
  const auto wc = cell_wave(mesh, kx, ky);

  const auto M0 = mass_matrix(v0);
  const auto M1 = mass_matrix(v1);
  const auto W = coriolis_matrix(v1, f);
  const auto G = grad_perp(v0, v1);
  const auto Div = div_matrix(v1, v2);

  const double tol = 1e-12 * area * 10.0 + 1e-12;

  // Vertex mass: tensor product of the 1D three-point mass stencils.
  const cplx m0sym = (area / 9.0) * (2.0 + std::cos(tx)) * (2.0 + std::cos(ty));
  CHECK(symbol_deviation(M0, wv, wv, 0, mesh.num_vertices(), m0sym) <= tol);

  // Edge mass: each family sees only its own 1D stencil along its axis.
  const cplx m1x = (area / 3.0) * (2.0 + std::cos(tx));
  const cplx m1y = (area / 3.0) * (2.0 + std::cos(ty));
  CHECK(symbol_deviation(M1, wx, wx, 0, n, m1x) <= tol);
  CHECK(symbol_deviation(M1, wx, wx, n, 2 * n, 0.0) <= tol);
  CHECK(symbol_deviation(M1, wy, wy, n, 2 * n, m1y) <= tol);
  CHECK(symbol_deviation(M1, wy, wy, 0, n, 0.0) <= tol);

  // Coriolis: pure cross coupling with a staggered cosine profile.
  const double cc = std::cos(tx / 2.0) * std::cos(ty / 2.0);
  CHECK(symbol_deviation(W, wy, wx, 0, n, cplx(-f * area * cc)) <= tol);
  CHECK(symbol_deviation(W, wx, wy, n, 2 * n, cplx(f * area * cc)) <= tol);
  CHECK(symbol_deviation(W, wx, wx, 0, n, 0.0) <= tol);
  CHECK(symbol_deviation(W, wy, wy, n, 2 * n, 0.0) <= tol);

  // Rotated gradient: central differences at the half-integer stagger.
  const cplx ix(0.0, 1.0);
  const cplx gx = -2.0 * ix * std::sin(ty / 2.0) / mesh.dy();
  const cplx gy = 2.0 * ix * std::sin(tx / 2.0) / mesh.dx();
  const double gtol = 1e-11 / std::min(mesh.dx(), mesh.dy());
  CHECK(symbol_deviation(G, wv, wx, 0, n, gx) <= gtol);
  CHECK(symbol_deviation(G, wv, wy, n, 2 * n, gy) <= gtol);

  // Divergence: the adjoint stagger, one family at a time.
  const cplx dxs = 2.0 * ix * std::sin(tx / 2.0) / mesh.dx();
  const cplx dys = 2.0 * ix * std::sin(ty / 2.0) / mesh.dy();
  CHECK(symbol_deviation(Div, wx, wc, 0, n, dxs) <= gtol);
  CHECK(symbol_deviation(Div, wy, wc, 0, n, dys) <= gtol);
}

TEST_CASE("dispersion solver reproduces the closed-form discrete relations") {
  // Along one axis the 3x3 Bloch system reduces by hand.  With
  // s = sin(t/2), c = cos(t/2), m = (2+cos t)/3 (the unit mass symbol):
  // gravity only    w^2 = (4 g H s^2/dx^2) / m
  // with rotation   w^2 = (f^2 c^2 + 4 g H s^2 / dx^2) / m
  // (the cross mass symbol at zero transverse wavenumber is exactly 1).
  const double dx = 1.0 / 24.0;
  for (double f : {0.0, 6.0}) {
    LinearParams p;
    p.f = f;
    p.g = 2.5;
    p.H = 0.7;
    for (int mode = 1; mode <= 5; ++mode) {
      const double kx = 2.0 * kPi * mode;
      const double t = kx * dx;
      const double s = std::sin(t / 2.0), c = std::cos(t / 2.0);
      const double m = (2.0 + std::cos(t)) / 3.0;
      const double w2 =
          (f * f * c * c + 4.0 * p.g * p.H * s * s / (dx * dx)) / m;
      const auto w = dispersion(kx, 0.0, p, dx, dx);
      CHECK(w[2] == doctest::Approx(std::sqrt(w2)).epsilon(1e-10));
      CHECK(w[0] == doctest::Approx(-std::sqrt(w2)).epsilon(1e-10));
    }
  }
}

TEST_CASE("dispersion is symmetric under axis swap and sign flips") {
  LinearParams p;
  p.f = 3.0;
  p.g = 1.2;
  p.H = 2.0;
  const double h = 1.0 / 32.0;
  const double kx = 2.0 * kPi * 3.0, ky = 2.0 * kPi * 5.0;
  const auto a = dispersion(kx, ky, p, h, h);
  const auto b = dispersion(ky, kx, p, h, h);
  const auto cta = dispersion(-kx, ky, p, h, h);
  for (int i = 0; i < 3; ++i) {
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-11));
    CHECK(a[i] == doctest::Approx(cta[i]).epsilon(1e-11));
  }
}
