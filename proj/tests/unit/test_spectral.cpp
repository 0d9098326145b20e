#include "doctest.h"

#include "mdkit/error.hpp"
#include "mdkit/spectral/dct.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace mdkit;
using namespace mdkit::spectral;

TEST_CASE("dct_basis values") {
  CHECK(DctBasis(1).matrix()(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  const DctBasis b4(4);
  const auto& c4 = b4.matrix();
  for (int t = 0; t < 4; ++t) CHECK(c4(0, t) == doctest::Approx(0.5).epsilon(1e-15));
  // Direct evaluation of the cosine formula with 1-based indices.
  const int L = 7;
  const DctBasis b7(L);
  const auto& c7 = b7.matrix();
  for (int l = 1; l <= L; ++l)
    for (int t = 1; t <= L; ++t) {
      const double expect = std::sqrt(2.0 / L) / std::sqrt(1.0 + (l == 1)) *
                            std::cos(std::numbers::pi / (2.0 * L) * (2 * t - 1) * (l - 1));
      CHECK(c7(l - 1, t - 1) == doctest::Approx(expect).epsilon(1e-14));
    }
  CHECK_THROWS_AS(DctBasis(0), Error);
}

TEST_CASE("dct_basis is orthogonal") {
  for (int L = 2; L <= 16; ++L) {
    const DctBasis basis(L);
    const auto& C = basis.matrix();
    CHECK((C * C.transpose() - MatX::Identity(L, L)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dct / idct") {
  VecX ones = VecX::Ones(4);
  const VecX h = dct(ones);
  CHECK(h[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(h.tail(3).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(dct(VecX::Zero(5)).isZero(0.0));
  CHECK(idct(VecX::Zero(5)).isZero(0.0));
  CHECK(idct(h).isApprox(ones, 1e-14));

  std::mt19937_64 rng(0);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int L : {1, 2, 45, 90, 128}) {
    VecX x(L), y(L);
    for (int i = 0; i < L; ++i) {
      x[i] = n(rng);
      y[i] = n(rng);
    }
    CHECK((idct(dct(x)) - x).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(std::abs(dct(x).norm() - x.norm()) < 1e-9);
    CHECK((dct(2.5 * x - 0.75 * y) - (2.5 * dct(x) - 0.75 * dct(y))).cwiseAbs().maxCoeff() < 1e-10);
  }
  const DctBasis basis(5);
  CHECK_THROWS_AS(dct(basis, VecX::Zero(4)), Error);
  CHECK_THROWS_AS(idct(basis, VecX::Zero(6)), Error);
}

TEST_CASE("row-wise transforms agree with per-row transforms") {
  MatX seq(3, 9);
  seq.setRandom();
  const MatX coeffs = dct_rows(seq);
  for (int r = 0; r < 3; ++r) CHECK((coeffs.row(r).transpose() - dct(VecX(seq.row(r).transpose()))).norm() < 1e-12);
  CHECK((idct_rows(coeffs) - seq).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pad_history") {
  MatX seq(2, 3);
  seq << 1, 2, 3, 4, 5, 6;
  MatX expected(2, 5);
  expected << 1, 2, 3, 3, 3, 4, 5, 6, 6, 6;
  CHECK(pad_history(seq, 2) == expected);
  CHECK(pad_history(seq, 0) == seq);
  CHECK_THROWS_AS(pad_history(MatX(2, 0), 3), Error);

  const MatX constant = MatX::Constant(3, 4, 0.7);
  const MatX h = dct_rows(pad_history(constant, 6));
  CHECK(h.rightCols(9).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(h.col(0).minCoeff() > 0.0);
}
