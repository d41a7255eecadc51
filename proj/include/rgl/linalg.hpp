#pragma once

// Dense complex linear algebra helpers shared by every module: Hermitian
// functional calculus, operator norms and seeded random test matrices.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <string>

#include "rgl/error.hpp"

namespace rgl {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;
using Index = Eigen::Index;

/// Numerical knobs used across the library.
struct Tolerances {
  double algebraic = 1e-9;     // relative tolerance for algebraic identities
  double rank_gap = 0.5;       // projection eigenvalues above this count towards the rank
  double rank_window = 0.25;   // eigenvalues within rank_gap +- rank_window are ambiguous
  double transport_cap = 0.9;  // max projection distance for a single transport step

  void validate() const {
    if (!(algebraic > 0) || !(rank_gap > 0) || !(rank_window > 0) || !(transport_cap > 0))
      throw Error(ErrorKind::Precondition, "tolerances must be strictly positive");
    if (!(transport_cap < 1))
      throw Error(ErrorKind::Precondition, "transport cap must be < 1");
    if (rank_window >= rank_gap || rank_gap + rank_window >= 1)
      throw Error(ErrorKind::Precondition, "rank window must lie inside (0, 1)");
  }

  /// Defaults, with the algebraic tolerance overridden by RGL_TOL when set.
  static Tolerances from_env() {
    Tolerances tol;
    if (const char* env = std::getenv("RGL_TOL")) {
      char* end = nullptr;
      const double value = std::strtod(env, &end);
      if (end == env || *end != '\0')
        throw Error(ErrorKind::Precondition, std::string("RGL_TOL is not a number: ") + env);
      tol.algebraic = value;
    }
    tol.validate();
    return tol;
  }
};

inline Mat hermitian_part(const Mat& m) { return 0.5 * (m + m.adjoint()); }

struct HermitianEigen {
  RealVec values;  // ascending
  Mat vectors;     // columns are orthonormal eigenvectors
};

/// Eigendecomposition of the Hermitian part of `m`.
inline HermitianEigen hermitian_eigen(const Mat& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::Shape, "Hermitian eigendecomposition needs a square matrix");
  if (m.size() == 0) return {RealVec(0), Mat(0, 0)};
  Eigen::SelfAdjointEigenSolver<Mat> solver(hermitian_part(m));
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::Numerical, "Hermitian eigendecomposition did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// V diag(fn(lambda)) V* for the Hermitian part of `m`.
template <typename Fn>
Mat hermitian_function(const Mat& m, Fn&& fn) {
  const HermitianEigen eig = hermitian_eigen(m);
  RealVec mapped(eig.values.size());
  for (Index i = 0; i < eig.values.size(); ++i) mapped(i) = fn(eig.values(i));
  Mat out = eig.vectors * mapped.asDiagonal() * eig.vectors.adjoint();
  return hermitian_part(out);
}

/// Square root of a positive semidefinite matrix; negative round-off is clamped at 0.
inline Mat psd_sqrt(const Mat& m) {
  return hermitian_function(m, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

inline RealVec singular_values(const Mat& m) {
  if (m.size() == 0) return RealVec(0);
  if (std::min(m.rows(), m.cols()) > 64) {
    Eigen::BDCSVD<Mat> svd(m);
    return svd.singularValues();
  }
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues();
}

/// Spectral (operator) norm.
inline double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

/// Spectral norm of a matrix known to be Hermitian up to round-off.
inline double hermitian_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  const RealVec ev = hermitian_eigen(m).values;
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

inline bool all_finite(const Mat& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

/// ||U*U - I||, the unitarity (or column-isometry) residual.
inline double isometry_residual(const Mat& u) {
  return spectral_norm(u.adjoint() * u - Mat::Identity(u.cols(), u.cols()));
}

inline double unitarity_residual(const Mat& u) {
  return std::max(isometry_residual(u), isometry_residual(u.adjoint()));
}

// Seeded generators for tests, the gallery and calibration scans.

inline Mat random_gaussian(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * Complex(normal(rng), normal(rng));
  return m;
}

/// Haar-distributed unitary (QR of a Gaussian matrix with the phase fix).
inline Mat random_unitary(std::mt19937_64& rng, Index n) {
  Mat g = random_gaussian(rng, n, n);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index i = 0; i < n; ++i) {
    const double mag = std::abs(r(i, i));
    if (mag > 0) q.col(i) *= r(i, i) / mag;
  }
  return q;
}

inline Mat random_hermitian(std::mt19937_64& rng, Index n, double scale = 1.0) {
  return hermitian_part(random_gaussian(rng, n, n, scale));
}

/// Random m x n matrix with prescribed singular values (padded with zeros).
inline Mat random_with_singular_values(std::mt19937_64& rng, Index m, Index n, const RealVec& sv) {
  const Mat u = random_unitary(rng, m);
  const Mat v = random_unitary(rng, n);
  Mat s = Mat::Zero(m, n);
  for (Index i = 0; i < std::min({m, n, sv.size()}); ++i) s(i, i) = sv(i);
  return u * s * v.adjoint();
}

}  // namespace rgl
