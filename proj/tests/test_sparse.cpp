#include <sstream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "test_util.hpp"
#include "tfe/sparse.hpp"

using tfe::CooBuilder;
using tfe::Index;
using tfe::SparseOperator;

namespace {

// Random sparse matrix and its dense Eigen mirror built side by side.
struct Pair {
  SparseOperator A;
  Eigen::MatrixXd D;
};

Pair random_pair(test_util::Rng& rng, Index rows, Index cols, int nnz) {
  CooBuilder b(rows, cols);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(rows, cols);
  for (int k = 0; k < nnz; ++k) {
    const Index r = rng.integer(0, rows - 1);
    const Index c = rng.integer(0, cols - 1);
    const double v = rng.uniform(-2.0, 2.0);
    b.add(r, c, v);
    D(r, c) += v;
  }
  return {b.compress(), D};
}

Eigen::MatrixXd dense_of(const SparseOperator& A) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(A.rows(), A.cols());
  for (Index r = 0; r < A.rows(); ++r)
    for (Index k = A.row_ptr()[r]; k < A.row_ptr()[r + 1]; ++k)
      D(r, A.col_idx()[k]) += A.values()[k];
  return D;
}

}  // namespace

TEST_CASE("builder accumulates duplicates and drops exact zeros") {
  CooBuilder b(3, 3);
  b.add(0, 0, 1.0);
  b.add(0, 0, 2.0);
  b.add(1, 2, 0.5);
  b.add(1, 2, -0.5);  // cancels exactly
  b.add(2, 1, -3.0);
  const SparseOperator A = b.compress();
  CHECK(A.coeff(0, 0) == 3.0);
  CHECK(A.coeff(1, 2) == 0.0);
  CHECK(A.coeff(2, 1) == -3.0);
  CHECK(A.nnz() == 2);  // the cancelled entry is dropped

  const SparseOperator Akeep = b.compress(false);
  CHECK(Akeep.nnz() == 3);  // structurally kept as an explicit zero
  CHECK(Akeep.coeff(1, 2) == 0.0);
}

TEST_CASE("builder rejects out-of-range entries") {
  CooBuilder b(3, 4);
  b.add(2, 3, 1.0);
  CHECK_NOTHROW(b.compress());
  CooBuilder bad(3, 4);
  bad.add(3, 0, 1.0);
  CHECK_THROWS_AS(bad.compress(), std::out_of_range);
  CooBuilder bad2(3, 4);
  bad2.add(0, 4, 1.0);
  CHECK_THROWS_AS(bad2.compress(), std::out_of_range);
}

TEST_CASE("apply and apply_transpose match a dense oracle") {
  test_util::Rng rng(42);
  const auto [A, D] = random_pair(rng, 7, 5, 24);
  const auto x = test_util::random_vector(rng, 5);
  const auto y = test_util::random_vector(rng, 7);

  const auto Ax = A.apply(x);
  const Eigen::VectorXd Dx =
      D * Eigen::Map<const Eigen::VectorXd>(x.data(), 5);
  for (int i = 0; i < 7; ++i) CHECK(Ax[i] == doctest::Approx(Dx(i)).epsilon(1e-14));

  const auto Aty = A.apply_transpose(y);
  const Eigen::VectorXd Dty =
      D.transpose() * Eigen::Map<const Eigen::VectorXd>(y.data(), 7);
  for (int i = 0; i < 5; ++i)
    CHECK(Aty[i] == doctest::Approx(Dty(i)).epsilon(1e-14));

  std::vector<double> acc(7, 1.0);
  A.apply_add(x.data(), acc.data(), 0.5);
  for (int i = 0; i < 7; ++i)
    CHECK(acc[i] == doctest::Approx(1.0 + 0.5 * Dx(i)).epsilon(1e-14));
}

TEST_CASE("algebra: transpose, plus, scaled, multiply") {
  test_util::Rng rng(43);
  const auto [A, DA] = random_pair(rng, 6, 4, 15);
  const auto [B, DB] = random_pair(rng, 6, 4, 12);
  const auto [C, DC] = random_pair(rng, 4, 5, 14);

  CHECK((dense_of(A.transposed()) - DA.transpose()).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0));
  CHECK((dense_of(A.plus(B, -2.0)) - (DA - 2.0 * DB)).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0).epsilon(1e-14));
  CHECK((dense_of(A.scaled(0.25)) - 0.25 * DA).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0));
  CHECK((dense_of(A.multiply(C)) - DA * DC).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0).epsilon(1e-13));

  CHECK_THROWS_AS(A.plus(C), std::invalid_argument);
  CHECK_THROWS_AS(A.multiply(B), std::invalid_argument);
}

TEST_CASE("row sums, scaling, max_abs, identity and diagonal") {
  test_util::Rng rng(44);
  auto [A, D] = random_pair(rng, 5, 5, 18);
  const auto rs = A.row_sums();
  for (int r = 0; r < 5; ++r)
    CHECK(rs[r] == doctest::Approx(D.row(r).sum()).epsilon(1e-14));
  CHECK(A.max_abs() == doctest::Approx(D.cwiseAbs().maxCoeff()));

  const std::vector<double> dr{1.0, 2.0, -1.0, 0.5, 3.0};
  A.scale_rows(dr);
  D = Eigen::Map<const Eigen::VectorXd>(dr.data(), 5).asDiagonal() * D;
  CHECK((dense_of(A) - D).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0).epsilon(1e-14));
  const std::vector<double> dc{-2.0, 1.0, 1.5, 1.0, 0.25};
  A.scale_cols(dc);
  D = D * Eigen::Map<const Eigen::VectorXd>(dc.data(), 5).asDiagonal();
  CHECK((dense_of(A) - D).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0).epsilon(1e-14));

  const auto I = SparseOperator::identity(3, 2.0);
  CHECK(I.coeff(0, 0) == 2.0);
  CHECK(I.coeff(1, 1) == 2.0);
  CHECK(I.coeff(0, 1) == 0.0);
  const auto G = SparseOperator::diagonal({1.0, -2.0, 3.0});
  CHECK(G.coeff(2, 2) == 3.0);
  CHECK(G.nnz() == 3);
}

TEST_CASE("matrix market output is parseable and exact") {
  CooBuilder b(2, 3);
  b.add(0, 2, 1.0 / 3.0);
  b.add(1, 0, -0.125);
  const SparseOperator A = b.compress();
  std::ostringstream os;
  A.write_matrix_market(os, "unit test");
  std::istringstream is(os.str());

  std::string banner;
  std::getline(is, banner);
  CHECK(banner.find("%%MatrixMarket") == 0);
  std::string line;
  // Skip remaining comment lines.
  while (std::getline(is, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream hdr(line);
  int rows = 0, cols = 0, nnz = 0;
  hdr >> rows >> cols >> nnz;
  CHECK(rows == 2);
  CHECK(cols == 3);
  CHECK(nnz == 2);
  int seen = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int r = 0, c = 0;
    double v = 0.0;
    ls >> r >> c >> v;
    CHECK(A.coeff(r - 1, c - 1) == v);  // bit-exact via %.17g round trip
    ++seen;
  }
  CHECK(seen == 2);
}
