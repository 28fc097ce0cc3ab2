#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace catgates {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

inline Mat kron(const Mat& a, const Mat& b) { return Eigen::kroneckerProduct(a, b).eval(); }

inline Vec kron(const Vec& a, const Vec& b) {
  Vec out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// out += s * kron(a, b) without forming the product.
inline void kron_add(cplx s, const Mat& a, const Mat& b, Mat& out) {
  const Eigen::Index nr = b.rows(), nc = b.cols();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const cplx w = s * a(i, j);
      if (w != cplx(0.0)) out.block(i * nr, j * nc, nr, nc) += w * b;
    }
}

inline Mat identity(Eigen::Index n) { return Mat::Identity(n, n); }

inline Mat outer(const Vec& a, const Vec& b) { return a * b.adjoint(); }

inline Mat projector(const Vec& v) { return v * v.adjoint(); }

/// Relative Frobenius distance of `h` from its adjoint.
inline double hermiticity_defect(const Mat& h) {
  const double n = h.norm();
  if (n == 0.0) return 0.0;
  return (h - h.adjoint()).norm() / n;
}

inline Mat hermitian_part(const Mat& m) { return 0.5 * (m + m.adjoint()); }

/// General matrix exponential (scaling and squaring Padé).
inline Mat expm(const Mat& a) { return a.exp(); }

/// exp(factor * h) for Hermitian h through its eigendecomposition.
inline Mat expm_hermitian(const Mat& h, cplx factor) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(h));
  if (es.info() != Eigen::Success) throw std::runtime_error("expm_hermitian: eigensolver failed");
  Vec phases = (factor * es.eigenvalues().cast<cplx>().array()).exp().matrix();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline RVec hermitian_eigenvalues(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(h), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("hermitian_eigenvalues: eigensolver failed");
  return es.eigenvalues();
}

inline double min_eigenvalue(const Mat& h) { return hermitian_eigenvalues(h).minCoeff(); }

/// Principal square root of a positive semidefinite matrix; small negative
/// eigenvalues from roundoff are clamped to zero.
inline Mat psd_sqrt(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(h));
  RVec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

inline Mat matrix_power(const Mat& a, int p) {
  Mat out = identity(a.rows());
  for (int i = 0; i < p; ++i) out = out * a;
  return out;
}

}  // namespace catgates
