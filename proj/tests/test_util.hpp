// Shared helpers for the test suite: a portable deterministic RNG, random
// smooth trigonometric fields, and dense mirrors of the sparse operators for
// oracle comparisons.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "tfe/assembly.hpp"
#include "tfe/fespace.hpp"
#include "tfe/mesh.hpp"
#include "tfe/sparse.hpp"

namespace test_util {

constexpr double kPi = 3.14159265358979323846;

// Uniform [0,1) from the raw engine bits so that sequences are identical
// across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() {
    return static_cast<double>(eng_() >> 11) * (1.0 / 9007199254740992.0);
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(uniform() * (hi - lo + 1));
  }

private:
  std::mt19937_64 eng_;
};

inline std::vector<double> random_vector(Rng& rng, std::size_t n,
                                         double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.uniform(-1.0, 1.0);
  return v;
}

// A smooth doubly periodic scalar: a few random low-wavenumber Fourier modes.
inline tfe::ScalarFn random_smooth_scalar(Rng& rng, double Lx, double Ly,
                                          int modes = 3) {
  struct Mode {
    double a, kx, ky, px, py;
  };
  std::vector<Mode> ms;
  for (int m = 0; m < modes; ++m) {
    Mode mm;
    mm.a = rng.uniform(-1.0, 1.0);
    mm.kx = 2.0 * kPi * rng.integer(0, 2) / Lx;
    mm.ky = 2.0 * kPi * rng.integer(0, 2) / Ly;
    mm.px = rng.uniform(0.0, 2.0 * kPi);
    mm.py = rng.uniform(0.0, 2.0 * kPi);
    ms.push_back(mm);
  }
  return [ms](double x, double y) {
    double s = 0.0;
    for (const auto& m : ms)
      s += m.a * std::cos(m.kx * x + m.px) * std::cos(m.ky * y + m.py);
    return s;
  };
}

inline tfe::VectorFn random_smooth_vector(Rng& rng, double Lx, double Ly,
                                          int modes = 3) {
  auto fx = random_smooth_scalar(rng, Lx, Ly, modes);
  auto fy = random_smooth_scalar(rng, Lx, Ly, modes);
  return [fx, fy](double x, double y) {
    return tfe::Vec2{fx(x, y), fy(x, y)};
  };
}

// Dense mirror of a sparse operator as a row-major vector of rows.
inline std::vector<std::vector<double>> to_dense(const tfe::SparseOperator& A) {
  std::vector<std::vector<double>> d(
      static_cast<std::size_t>(A.rows()),
      std::vector<double>(static_cast<std::size_t>(A.cols()), 0.0));
  for (tfe::Index r = 0; r < A.rows(); ++r)
    for (tfe::Index k = A.row_ptr()[r]; k < A.row_ptr()[r + 1]; ++k)
      d[static_cast<std::size_t>(r)][static_cast<std::size_t>(A.col_idx()[k])] +=
          A.values()[k];
  return d;
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace test_util
