#include <gtest/gtest.h>

#include "catgates/linalg.hpp"

using namespace catgates;

namespace {

Mat random_hermitian(int n, unsigned seed) {
  std::srand(seed);
  Mat m = Mat::Random(n, n);
  return hermitian_part(m);
}

}  // namespace

TEST(Linalg, KronMatchesBlockStructure) {
  Mat a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << 0, 1, 1, 0;
  const Mat k = kron(a, b);
  ASSERT_EQ(k.rows(), 4);
  EXPECT_EQ(k(0, 1), cplx(1));
  EXPECT_EQ(k(2, 3), cplx(4));
  EXPECT_EQ(k(3, 0), cplx(3));

  Mat acc = Mat::Zero(4, 4);
  kron_add(2.0, a, b, acc);
  EXPECT_LT((acc - 2.0 * k).norm(), 1e-15);
}

TEST(Linalg, KronOfVectors) {
  Vec a(2), b(3);
  a << 1, kI;
  b << 1, 2, 3;
  const Vec k = kron(a, b);
  EXPECT_EQ(k(4), 2.0 * kI);
  EXPECT_EQ(k.size(), 6);
}

TEST(Linalg, ExpmAgreesWithSpectralExponential) {
  const Mat h = random_hermitian(6, 7);
  const Mat u1 = expm(-kI * 0.7 * h);
  const Mat u2 = expm_hermitian(h, -kI * 0.7);
  EXPECT_LT((u1 - u2).norm(), 1e-12);
  EXPECT_LT((u1.adjoint() * u1 - identity(6)).norm(), 1e-12);
}

TEST(Linalg, PsdSqrtSquaresBack) {
  const Mat h = random_hermitian(5, 3);
  const Mat p = h * h;
  const Mat s = psd_sqrt(p);
  EXPECT_LT((s * s - p).norm(), 1e-10);
  EXPECT_GE(min_eigenvalue(s), -1e-12);
}

TEST(Linalg, HermiticityDefect) {
  EXPECT_LT(hermiticity_defect(random_hermitian(4, 1)), 1e-15);
  Mat m = Mat::Zero(2, 2);
  m(0, 1) = 1.0;
  EXPECT_NEAR(hermiticity_defect(m), std::sqrt(2.0), 1e-12);
  EXPECT_EQ(hermiticity_defect(Mat::Zero(3, 3)), 0.0);
}

TEST(Linalg, MatrixPower) {
  Mat a(2, 2);
  a << 1, 1, 0, 1;
  const Mat p = matrix_power(a, 5);
  EXPECT_EQ(p(0, 1), cplx(5));
  EXPECT_LT((matrix_power(a, 0) - identity(2)).norm(), 1e-15);
}
