#pragma once

// Turning graph-continuous families into Riesz-continuous ones by a unitary
// right factor: Phi(A) = A V(A).
//
// A frame g along a family carries the base projection p0 onto H (+) 0 to the
// graph projection p_A. Its first n columns u_A = g|_{H (+) 0} form an isometry
// with range Gamma_A. The canonical isometry w_A = (1+A*A)^{-1/2} (+) A(1+A*A)^{-1/2}
// has the same range, so V_A = w_A* u_A is unitary, u_A = w_A V_A, and
//
//     f(Phi_A) = f(A) V_A = p' w_A V_A = p' u_A,
//
// where p' is the coordinate projection onto H'. The right-hand side moves with
// the frame, which moves with the graph projections.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rgl/error.hpp"
#include "rgl/families.hpp"
#include "rgl/linalg.hpp"
#include "rgl/operator.hpp"

namespace rgl {

/// Largest admissible defect ||g p0 g* - P|| for a frame entry.
inline constexpr double kFrameTolerance = 1e-8;

/// Maximal bisection depth when a transport step exceeds the cap.
inline constexpr int kMaxBisection = 20;

// ---------------------------------------------------------------------------
// Transport of projections

/// Unitary u with u p u* = q for ||p - q|| < cap:
///   u = (q p + (1-q)(1-p)) (1 - (p-q)^2)^{-1/2},
/// the direct rotation; u = 1 when p = q.
inline Mat projection_transport(const Mat& p, const Mat& q, const Tolerances& tol = {}) {
  if (p.rows() != q.rows() || p.cols() != q.cols() || p.rows() != p.cols())
    throw Error(ErrorKind::Shape, "transport needs projections of the same size");
  const Index n = p.rows();
  const Mat diff = p - q;
  const double dist = hermitian_norm(diff);
  if (!(dist < tol.transport_cap))
    throw Error(ErrorKind::RefinePath, "projection step " + std::to_string(dist) + " exceeds the transport cap " +
                                           std::to_string(tol.transport_cap) + "; refine the path");
  const Mat id = Mat::Identity(n, n);
  const Mat s = q * p + (id - q) * (id - p);
  const Mat inv_root = hermitian_function(id - diff * diff, [](double x) { return 1.0 / std::sqrt(x); });
  return s * inv_root;
}

inline Mat projection_transport(const ClosedRelation& p, const ClosedRelation& q, const Tolerances& tol = {}) {
  require_same_shape(p, q);
  return projection_transport(p.projection(), q.projection(), tol);
}

/// Projection onto H (+) 0 inside H (+) H'.
inline Mat horizontal_projection(Index n, Index m) { return ClosedRelation::horizontal(n, m).projection(); }

/// Unitary carrying `from` to `to` along t in [a, b], bisecting wherever a single
/// transport step would exceed the cap. `projection_at` evaluates the path.
inline Mat transport_along(const std::function<Mat(double)>& projection_at, double a, double b, const Mat& from,
                           const Mat& to, const Tolerances& tol, int depth = 0) {
  if (hermitian_norm(from - to) < tol.transport_cap) return projection_transport(from, to, tol);
  if (depth >= kMaxBisection || !projection_at)
    throw Error(ErrorKind::RefinePath, "transport step does not shrink under bisection");
  const double mid = 0.5 * (a + b);
  const Mat middle = projection_at(mid);
  const Mat first = transport_along(projection_at, a, mid, from, middle, tol, depth + 1);
  const Mat second = transport_along(projection_at, mid, b, middle, to, tol, depth + 1);
  return second * first;
}

// ---------------------------------------------------------------------------
// Frames

/// Grid-indexed unitaries g_i with g_i p0 g_i* = P_i.
struct Frame {
  std::vector<double> x;
  std::vector<Mat> unitaries;
  Mat base;

  std::size_t size() const noexcept { return unitaries.size(); }

  /// max_i ||g_i p0 g_i* - P_i||.
  double max_defect(const std::vector<Mat>& projections) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < unitaries.size(); ++i)
      worst = std::max(worst, hermitian_norm(unitaries[i] * base * unitaries[i].adjoint() - projections[i]));
    return worst;
  }

  double max_unitarity_residual() const {
    double worst = 0.0;
    for (const auto& g : unitaries) worst = std::max(worst, unitarity_residual(g));
    return worst;
  }
};

/// Chains local transports from the base: g_0 = T(p0 -> P_0), g_{i+1} = T(P_i -> P_{i+1}) g_i.
inline Frame section_along_family(const std::vector<Mat>& projections, const Mat& base, const Tolerances& tol = {}) {
  if (projections.empty()) throw Error(ErrorKind::Precondition, "empty projection family");
  Frame frame;
  frame.base = base;
  frame.unitaries.reserve(projections.size());
  for (std::size_t i = 0; i < projections.size(); ++i) {
    const Mat& prev = i == 0 ? base : projections[i - 1];
    try {
      const Mat step = projection_transport(prev, projections[i], tol);
      frame.unitaries.push_back(i == 0 ? step : Mat(step * frame.unitaries.back()));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RefinePath) throw;
      throw Error(ErrorKind::RefinePath,
                  i == 0 ? std::string("base projection too far from the first node; refine the path")
                         : "step " + std::to_string(i - 1) + " -> " + std::to_string(i) + " exceeds the transport cap; refine the path",
                  i);
    }
  }
  frame.x.resize(projections.size());
  for (std::size_t i = 0; i < projections.size(); ++i) frame.x[i] = static_cast<double>(i);
  return frame;
}

inline Frame section_along_family(const std::vector<ClosedRelation>& relations, const Tolerances& tol = {}) {
  if (relations.empty()) throw Error(ErrorKind::Precondition, "empty relation family");
  std::vector<Mat> projections;
  projections.reserve(relations.size());
  for (const auto& r : relations) {
    require_same_shape(r, relations.front());
    projections.push_back(r.projection());
  }
  return section_along_family(projections, horizontal_projection(relations.front().domain_dim(), relations.front().codomain_dim()), tol);
}

/// Frame along the graph projections of `family` on `grid`. Steps above the cap
/// are bisected through the generator; the link from p0 to the first node follows
/// the straight path s |-> graph(s A_0) when A_0 is an operator.
inline Frame frame_along_family(const OperatorFamily& family, const ParamGrid& grid,
                                std::vector<Mat>* projections_out = nullptr, const Tolerances& tol = {}) {
  grid.validate();
  std::vector<Mat> projections;
  projections.reserve(grid.points);
  std::vector<FamilyValue> values;
  values.reserve(grid.points);
  for (std::size_t i = 0; i < grid.points; ++i) {
    values.push_back(family.evaluate_at(grid.node(i)));
    projections.push_back(relation_of(values.back()).projection());
  }
  const auto [n, m] = dims_of(values.front());
  Frame frame;
  frame.base = horizontal_projection(n, m);
  frame.x = grid.nodes();

  std::function<Mat(double)> first_link;
  if (const auto* op0 = std::get_if<MatrixOperator>(&values.front())) {
    const MatrixOperator a0 = *op0;
    first_link = [a0](double s) { return graph_projection(MatrixOperator(s * a0.matrix())).projection(); };
  }
  std::function<Mat(double)> along;
  if (family.refinable()) along = [&family](double t) { return relation_of(family.evaluate_at(t)).projection(); };

  try {
    frame.unitaries.push_back(transport_along(first_link, 0.0, 1.0, frame.base, projections.front(), tol));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::RefinePath) throw;
    throw Error(ErrorKind::RefinePath, "cannot connect the base projection to the first node", 0);
  }
  for (std::size_t i = 1; i < grid.points; ++i) {
    try {
      const Mat step = transport_along(along, frame.x[i - 1], frame.x[i], projections[i - 1], projections[i], tol);
      frame.unitaries.push_back(step * frame.unitaries.back());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RefinePath) throw;
      throw Error(ErrorKind::RefinePath, "step " + std::to_string(i - 1) + " -> " + std::to_string(i) +
                                             " exceeds the transport cap after refinement", i - 1);
    }
  }
  if (projections_out) *projections_out = std::move(projections);
  return frame;
}

// ---------------------------------------------------------------------------
// Isometries and the twist

/// Column isometry with its declared range projection.
struct Isometry {
  Mat entries;
  ClosedRelation range;

  Isometry(Mat v, ClosedRelation declared) : entries(std::move(v)), range(std::move(declared)) {
    if (entries.rows() != range.domain_dim() + range.codomain_dim())
      throw Error(ErrorKind::Shape, "isometry rows must match the relation space");
    if (isometry_residual(entries) > kFrameTolerance)
      throw Error(ErrorKind::Precondition, "columns are not orthonormal");
    if (hermitian_norm(entries * entries.adjoint() - range.projection()) > kFrameTolerance)
      throw Error(ErrorKind::Precondition, "isometry range differs from the declared projection");
  }

  Index domain_dim() const { return entries.cols(); }
  /// p' applied to the isometry: the H' block of rows.
  Mat second_component() const { return entries.bottomRows(range.codomain_dim()); }
  Mat first_component() const { return entries.topRows(range.domain_dim()); }
};

/// u = g restricted to H (+) 0; requires g p0 g* to equal the relation's projection.
inline Isometry isometry_u(const ClosedRelation& rel, const Mat& g) {
  const Index n = rel.domain_dim();
  const Index m = rel.codomain_dim();
  if (g.rows() != n + m || g.cols() != n + m) throw Error(ErrorKind::Shape, "frame entry has the wrong size");
  const Mat u = g.leftCols(n);
  if (hermitian_norm(u * u.adjoint() - rel.projection()) > kFrameTolerance)
    throw Error(ErrorKind::Precondition, "frame entry does not carry p0 to the relation");
  return Isometry(u, rel);
}

inline Isometry isometry_u(const MatrixOperator& op, const Mat& g) { return isometry_u(graph_projection(op), g); }

/// w_A = (1+A*A)^{-1/2} (+) A (1+A*A)^{-1/2}.
inline Isometry w_isometry(const MatrixOperator& op) { return Isometry(graph_isometry(op), graph_projection(op)); }

/// w_A* = ((1 - a*a)^{1/2}, a*) with a = f(A).
inline Mat coisometry_wstar(const MatrixOperator& op) { return graph_isometry(op).adjoint(); }

/// V_A = w_A* u_A.
inline Mat twist_unitary(const MatrixOperator& op, const Mat& g) {
  const Isometry u = isometry_u(op, g);
  return coisometry_wstar(op) * u.entries;
}

struct PhiValue {
  MatrixOperator phi;  // A V_A
  Mat twist;           // V_A
  Mat transform;       // p' u_A, which equals f(Phi_A)
  double identity_residual = 0.0;  // ||f(Phi_A) - p' u_A||
};

inline PhiValue phi(const MatrixOperator& op, const Mat& g) {
  const Isometry u = isometry_u(op, g);
  PhiValue out;
  out.twist = coisometry_wstar(op) * u.entries;
  out.phi = MatrixOperator(op.matrix() * out.twist);
  out.transform = u.second_component();
  out.identity_residual = spectral_norm(bounded_transform_matrix(out.phi) - out.transform);
  return out;
}

/// Phi extended to relations through the frame: the range of [(u1* u1)^{1/2}; u2]
/// with u = [u1; u2]. On graphs this is the graph of A V_A.
inline ClosedRelation phi_relation(const ClosedRelation& rel, const Mat& g) {
  const Isometry u = isometry_u(rel, g);
  const Mat top = u.first_component();
  Mat w(u.entries.rows(), u.entries.cols());
  w.topRows(rel.domain_dim()) = psd_sqrt(top.adjoint() * top);
  w.bottomRows(rel.codomain_dim()) = u.second_component();
  return ClosedRelation(w * w.adjoint(), rel.domain_dim(), rel.codomain_dim());
}

// ---------------------------------------------------------------------------
// Phi along a family

struct PhiLevel {
  std::size_t points = 0;
  double step = 0.0;
  double raw_graph = 0.0;     // graph modulus of the input
  double raw_riesz = 0.0;     // Riesz modulus of the input (+inf with vertical nodes)
  double phi_riesz = 0.0;     // max ||p'u_{i+1} - p'u_i||, the Riesz modulus of Phi(F)
  double max_identity_residual = 0.0;
  double max_frame_defect = 0.0;
  bool kernels_preserved = true;
};

struct PhiResult {
  OperatorFamily output;
  Frame frame;
  std::vector<Mat> transforms;  // p' u at every node
  StepTable raw_steps;
  std::vector<double> phi_steps;  // NaN at the last node
  PhiLevel level;
};

/// Builds the frame along `family` (on `grid`) and applies Phi node by node.
inline PhiResult phi_family(const OperatorFamily& family, const ParamGrid& grid, const Tolerances& tol = {}) {
  std::vector<Mat> projections;
  Frame frame = frame_along_family(family, grid, &projections, tol);

  std::vector<FamilyValue> outputs;
  std::vector<Mat> transforms;
  outputs.reserve(grid.points);
  transforms.reserve(grid.points);
  PhiLevel level;
  level.points = grid.points;
  level.step = grid.step();
  level.max_frame_defect = frame.max_defect(projections);
  for (std::size_t i = 0; i < grid.points; ++i) {
    const FamilyValue v = family.evaluate_at(grid.node(i));
    const ClosedRelation rel = relation_of(v);
    std::optional<MatrixOperator> op;
    if (const auto* direct = std::get_if<MatrixOperator>(&v)) op = *direct;
    else op = is_operator_graph(rel, tol).op;
    if (op) {
      const PhiValue pv = phi(*op, frame.unitaries[i]);
      level.max_identity_residual = std::max(level.max_identity_residual, pv.identity_residual);
      try {
        const auto before = kernel_cokernel_dims(*op, tol);
        const auto after = kernel_cokernel_dims(pv.phi, tol);
        if (before.ker != after.ker || before.coker != after.coker) level.kernels_preserved = false;
      } catch (const Error&) {
        level.kernels_preserved = false;
      }
      transforms.push_back(pv.transform);
      outputs.emplace_back(pv.phi);
    } else {
      const Isometry u = isometry_u(rel, frame.unitaries[i]);
      transforms.push_back(u.second_component());
      outputs.emplace_back(phi_relation(rel, frame.unitaries[i]));
    }
  }

  PhiResult result{OperatorFamily::explicit_values(std::move(outputs), grid), std::move(frame), std::move(transforms),
                   step_table(family, grid, Metric::Both, tol), {}, level};
  result.phi_steps.assign(grid.points, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i + 1 < grid.points; ++i) {
    result.phi_steps[i] = spectral_norm(result.transforms[i + 1] - result.transforms[i]);
    result.level.phi_riesz = std::max(result.level.phi_riesz, result.phi_steps[i]);
  }
  const LevelModuli raw = moduli_of(result.raw_steps, grid.step(), true);
  result.level.raw_graph = raw.graph;
  result.level.raw_riesz = raw.riesz;
  return result;
}

inline PhiResult phi_family(const OperatorFamily& family, const Tolerances& tol = {}) {
  return phi_family(family, family.grid(), tol);
}

/// Phi applied on `levels` successive grid doublings of the family's grid.
inline std::vector<PhiLevel> phi_refinement(const OperatorFamily& family, int levels, const Tolerances& tol = {}) {
  if (levels < 1) throw Error(ErrorKind::Precondition, "need at least one level");
  std::vector<PhiLevel> out;
  ParamGrid grid = family.grid();
  for (int k = 0; k < levels; ++k) {
    if (k > 0) {
      if (!family.refinable()) throw Error(ErrorKind::Precondition, "explicit families cannot be refined");
      grid = grid.refined();
    }
    out.push_back(phi_family(family, grid, tol).level);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Polar decomposition of invertible operators

struct PolarTwist {
  Mat positive;  // |A| = (A A*)^{1/2}
  Mat unitary;   // u = |A|^{-1} A, so that A = |A| u and A u* = |A|
};

inline PolarTwist polar_twist(const MatrixOperator& op, const Tolerances& tol = {}) {
  const Mat& a = op.matrix();
  if (a.rows() != a.cols()) throw Error(ErrorKind::Shape, "polar twist needs a square operator");
  const RealVec sv = singular_values(a);
  if (sv.size() == 0) return {Mat(0, 0), Mat(0, 0)};
  if (sv(sv.size() - 1) < tol.algebraic * std::max(1.0, sv(0)))
    throw Error(ErrorKind::Precondition, "operator is numerically singular (smallest singular value " +
                                             std::to_string(sv(sv.size() - 1)) + ")");
  const Mat gram = a * a.adjoint();
  PolarTwist out;
  out.positive = psd_sqrt(gram);
  out.unitary = hermitian_function(gram, [](double x) { return 1.0 / std::sqrt(x); }) * a;
  return out;
}

}  // namespace rgl
