#pragma once

// Finite-dimensional models of regular operators and closed relations, the
// bounded transform, graph projections and the Riesz / graph metrics.
//
// An operator A : H -> H' with dim H = n and dim H' = m is an m x n matrix.
// Subspaces of H (+) H' are stored as (n+m) x (n+m) orthogonal projections,
// with the H block first.

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "rgl/error.hpp"
#include "rgl/linalg.hpp"

namespace rgl {

class MatrixOperator {
 public:
  MatrixOperator() = default;

  explicit MatrixOperator(Mat entries) : entries_(std::move(entries)) {
    if (!all_finite(entries_)) throw Error(ErrorKind::Precondition, "operator entries must be finite");
  }

  static MatrixOperator zero(Index m, Index n) { return MatrixOperator(Mat::Zero(m, n)); }
  static MatrixOperator identity(Index n) { return MatrixOperator(Mat::Identity(n, n)); }
  static MatrixOperator diagonal(const RealVec& d) {
    return MatrixOperator(d.cast<Complex>().asDiagonal().toDenseMatrix());
  }

  const Mat& matrix() const noexcept { return entries_; }
  /// dim H
  Index domain_dim() const noexcept { return entries_.cols(); }
  /// dim H'
  Index codomain_dim() const noexcept { return entries_.rows(); }

  MatrixOperator adjoint() const { return MatrixOperator(entries_.adjoint()); }

  friend bool operator==(const MatrixOperator& a, const MatrixOperator& b) {
    return a.entries_.rows() == b.entries_.rows() && a.entries_.cols() == b.entries_.cols() &&
           a.entries_ == b.entries_;
  }

 private:
  Mat entries_;
};

/// A closed subspace of H (+) H', represented by its orthogonal projection.
class ClosedRelation {
 public:
  ClosedRelation() = default;

  ClosedRelation(Mat projection, Index n, Index m, const Tolerances& tol = {})
      : projection_(std::move(projection)), n_(n), m_(m) {
    if (projection_.rows() != n + m || projection_.cols() != n + m)
      throw Error(ErrorKind::Shape, "relation projection must be (n+m) x (n+m)");
    if (!all_finite(projection_)) throw Error(ErrorKind::Precondition, "relation projection must be finite");
    const double sym = bounded_norm(projection_ - projection_.adjoint(), tol.algebraic);
    const double idem = bounded_norm(projection_ * projection_ - projection_, tol.algebraic);
    if (sym > tol.algebraic || idem > tol.algebraic)
      throw Error(ErrorKind::Precondition, "matrix is not an orthogonal projection (||P-P*|| = " +
                                               std::to_string(sym) + ", ||P^2-P|| = " + std::to_string(idem) + ")");
    projection_ = hermitian_part(projection_);
    rank_ = count_rank(projection_, tol);
  }

  /// Projection onto the span of the columns of `basis` (any full-column-rank basis).
  static ClosedRelation from_basis(const Mat& basis, Index n, Index m, const Tolerances& tol = {}) {
    Eigen::HouseholderQR<Mat> qr(basis);
    const Mat q = qr.householderQ() * Mat::Identity(basis.rows(), basis.cols());
    return ClosedRelation(q * q.adjoint(), n, m, tol);
  }

  /// H (+) 0, the graph of the zero operator.
  static ClosedRelation horizontal(Index n, Index m) {
    Mat p = Mat::Zero(n + m, n + m);
    p.topLeftCorner(n, n).setIdentity();
    return ClosedRelation(std::move(p), n, m);
  }

  /// 0 (+) H', the relation with every vector of H' "at infinity".
  static ClosedRelation vertical(Index n, Index m) {
    Mat p = Mat::Zero(n + m, n + m);
    p.bottomRightCorner(m, m).setIdentity();
    return ClosedRelation(std::move(p), n, m);
  }

  const Mat& projection() const noexcept { return projection_; }
  Index domain_dim() const noexcept { return n_; }
  Index codomain_dim() const noexcept { return m_; }
  Index rank() const noexcept { return rank_; }

  /// Orthonormal basis of the range (columns).
  Mat range_basis() const { return hermitian_eigen(projection_).vectors.rightCols(rank_); }

 private:
  // Frobenius norm when it already certifies the bound, spectral norm otherwise.
  static double bounded_norm(const Mat& m, double bound) {
    const double frob = m.norm();
    return frob <= bound ? frob : spectral_norm(m);
  }

  static Index count_rank(const Mat& p, const Tolerances& tol) {
    if (p.size() == 0) return 0;
    const RealVec ev = hermitian_eigen(p).values;
    Index rank = 0;
    for (Index i = 0; i < ev.size(); ++i) {
      if (std::abs(ev(i) - tol.rank_gap) <= tol.rank_window)
        throw Error(ErrorKind::Numerical, "projection eigenvalue " + std::to_string(ev(i)) + " inside the rank-gap window");
      if (ev(i) > tol.rank_gap) ++rank;
    }
    return rank;
  }

  Mat projection_;
  Index n_ = 0;
  Index m_ = 0;
  Index rank_ = 0;
};

/// a = f(A), q = (1 + A*A)^{-1/2} = (1 - a*a)^{1/2}, b = a q.
struct BoundedTransformData {
  Mat a;
  Mat q;
  Mat b;
};

inline Mat resolvent_root(const Mat& a_op) {
  return hermitian_function(a_op.adjoint() * a_op, [](double x) { return 1.0 / std::sqrt(1.0 + std::max(x, 0.0)); });
}

/// f(A) = A (1 + A*A)^{-1/2}.
inline BoundedTransformData bounded_transform(const MatrixOperator& op) {
  const Mat& a_op = op.matrix();
  BoundedTransformData out;
  out.q = resolvent_root(a_op);
  out.a = a_op * out.q;
  out.b = out.a * out.q;
  return out;
}

inline Mat bounded_transform_matrix(const MatrixOperator& op) { return bounded_transform(op).a; }

/// Inverse of the bounded transform on contractions with 1 - a*a invertible.
inline MatrixOperator inverse_bounded_transform(const Mat& a, const Tolerances& tol = {}) {
  if (!all_finite(a)) throw Error(ErrorKind::Precondition, "contraction entries must be finite");
  const double norm = spectral_norm(a);
  if (norm >= 1.0 - tol.algebraic)
    throw Error(ErrorKind::Precondition, "not in the open image of the bounded transform (||a|| = " + std::to_string(norm) + ")");
  const Mat defect = Mat::Identity(a.cols(), a.cols()) - a.adjoint() * a;
  const Mat inv_root = hermitian_function(defect, [](double x) { return 1.0 / std::sqrt(x); });
  return MatrixOperator(a * inv_root);
}

/// Column isometry H -> H (+) H' onto the graph: z |-> (1+A*A)^{-1/2} z (+) A (1+A*A)^{-1/2} z.
inline Mat graph_isometry(const MatrixOperator& op) {
  const BoundedTransformData t = bounded_transform(op);
  const Index n = op.domain_dim();
  const Index m = op.codomain_dim();
  Mat w(n + m, n);
  w.topRows(n) = t.q;
  w.bottomRows(m) = t.a;
  return w;
}

/// Orthogonal projection onto the graph, [[q^2, q a*], [a q, a a*]].
inline ClosedRelation graph_projection(const MatrixOperator& op, const Tolerances& tol = {}) {
  const Mat w = graph_isometry(op);
  return ClosedRelation(w * w.adjoint(), op.domain_dim(), op.codomain_dim(), tol);
}

/// The relation of adjoints: J (1 - P) J* with J(x, y) = (-y, x).
inline ClosedRelation adjoint_relation(const ClosedRelation& rel) {
  const Index n = rel.domain_dim();
  const Index m = rel.codomain_dim();
  Mat j = Mat::Zero(n + m, n + m);
  j.topRightCorner(m, m) = -Mat::Identity(m, m);
  j.bottomLeftCorner(n, n) = Mat::Identity(n, n);
  const Mat complement = Mat::Identity(n + m, n + m) - rel.projection();
  return ClosedRelation(j * complement * j.adjoint(), m, n);
}

inline void require_same_shape(const MatrixOperator& a, const MatrixOperator& b) {
  if (a.domain_dim() != b.domain_dim() || a.codomain_dim() != b.codomain_dim())
    throw Error(ErrorKind::Shape, "operators have different shapes");
}

inline void require_same_shape(const ClosedRelation& a, const ClosedRelation& b) {
  if (a.domain_dim() != b.domain_dim() || a.codomain_dim() != b.codomain_dim())
    throw Error(ErrorKind::Shape, "relations live in different spaces");
}

/// ||f(A) - f(B)||.
inline double riesz_distance(const MatrixOperator& a, const MatrixOperator& b) {
  require_same_shape(a, b);
  return spectral_norm(bounded_transform_matrix(a) - bounded_transform_matrix(b));
}

/// ||p_X - p_Y||.
inline double graph_distance(const ClosedRelation& x, const ClosedRelation& y) {
  require_same_shape(x, y);
  return hermitian_norm(x.projection() - y.projection());
}

inline double graph_distance(const MatrixOperator& a, const MatrixOperator& b) {
  return graph_distance(graph_projection(a), graph_projection(b));
}

inline double graph_distance(const ClosedRelation& x, const MatrixOperator& b) {
  return graph_distance(x, graph_projection(b));
}

inline double graph_distance(const MatrixOperator& a, const ClosedRelation& y) {
  return graph_distance(graph_projection(a), y);
}

struct GraphDecision {
  bool is_graph = false;
  std::optional<MatrixOperator> op;  // set when is_graph
  /// Smallest singular value of the H-component of a range basis; 0 for a vertical direction.
  double horizontal_margin = 0.0;
};

/// Decides whether a relation is the graph of an operator and extracts it.
/// A relation is a graph iff rank = n and range(P) meets 0 (+) H' trivially.
inline GraphDecision is_operator_graph(const ClosedRelation& rel, const Tolerances& tol = {}) {
  const Index n = rel.domain_dim();
  const Index m = rel.codomain_dim();
  GraphDecision out;
  if (rel.rank() != n) return out;
  if (n == 0) {
    out.is_graph = true;
    out.horizontal_margin = 1.0;
    out.op = MatrixOperator::zero(m, 0);
    return out;
  }
  const HermitianEigen eig = hermitian_eigen(rel.projection());
  const Mat basis = eig.vectors.rightCols(n);
  const Mat top = basis.topRows(n);
  const RealVec sv = singular_values(top);
  out.horizontal_margin = sv(sv.size() - 1);
  if (out.horizontal_margin <= tol.algebraic) return out;
  const Mat bottom = basis.bottomRows(m);
  const Mat a_op = top.transpose().partialPivLu().solve(bottom.transpose()).transpose();
  out.is_graph = true;
  out.op = MatrixOperator(a_op);
  return out;
}

struct KernelCokernel {
  Index ker = 0;
  Index coker = 0;
};

/// dim ker A and dim coker A, counting singular values <= tol * ||A|| as zero.
/// Singular values in (tol ||A||, 1e3 tol ||A||) are refused as ambiguous.
inline KernelCokernel kernel_cokernel_dims(const MatrixOperator& op, const Tolerances& tol = {}) {
  const Index n = op.domain_dim();
  const Index m = op.codomain_dim();
  const RealVec sv = singular_values(op.matrix());
  const double norm = sv.size() > 0 ? sv(0) : 0.0;
  const double zero_cut = tol.algebraic * norm;
  const double ambiguous_cut = 1e3 * zero_cut;
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > zero_cut && sv(i) < ambiguous_cut)
      throw Error(ErrorKind::Numerical, "singular value " + std::to_string(sv(i)) + " inside the rank ambiguity window");
    if (sv(i) > zero_cut) ++rank;
  }
  return {n - rank, m - rank};
}

}  // namespace rgl
