#pragma once

// Independent oracles shared by the test suites. Nothing here calls into the
// code path it is used to check.

#include <cmath>
#include <random>

#include "rgl/linalg.hpp"

namespace rgl::testing {

inline double scalar_transform(double x) { return x / std::hypot(1.0, x); }

/// Graph distance of two real scalars: |l - m| / sqrt((1+l^2)(1+m^2)).
inline double scalar_graph_oracle(double l, double m) {
  return std::abs(l - m) / (std::hypot(1.0, l) * std::hypot(1.0, m));
}

/// Riesz distance of two real scalars.
inline double scalar_riesz_oracle(double l, double m) {
  return std::abs(scalar_transform(l) - scalar_transform(m));
}

/// Projection onto the column space of [I; A] via QR, not via the bounded transform.
inline Mat graph_projection_oracle(const Mat& a) {
  const Index n = a.cols();
  const Index m = a.rows();
  Mat basis(n + m, n);
  basis.topRows(n).setIdentity();
  basis.bottomRows(m) = a;
  Eigen::HouseholderQR<Mat> qr(basis);
  const Mat q = qr.householderQ() * Mat::Identity(n + m, n);
  return q * q.adjoint();
}

/// Bounded transform through the SVD, independent of the eigensolver route.
inline Mat transform_via_svd(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat s = Mat::Zero(a.rows(), a.cols());
  for (Index i = 0; i < svd.singularValues().size(); ++i) s(i, i) = scalar_transform(svd.singularValues()(i));
  return svd.matrixU() * s * svd.matrixV().adjoint();
}

/// Line projection in C^2 onto span(cos t, sin t).
inline Mat line_projection(double angle) {
  Mat p(2, 2);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  p << c * c, c * s, c * s, s * s;
  return p;
}

inline Mat rotation(double angle) {
  Mat r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

inline Mat random_operator(std::mt19937_64& rng, Index m, Index n, double max_norm) {
  std::uniform_real_distribution<double> scale(0.0, max_norm);
  Mat a = random_gaussian(rng, m, n);
  const double norm = a.norm() > 0 ? spectral_norm(a) : 1.0;
  return a * (scale(rng) / norm);
}

inline Index random_dim(std::mt19937_64& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

}  // namespace rgl::testing
