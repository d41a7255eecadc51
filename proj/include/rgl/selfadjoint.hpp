#pragma once

// Self-adjoint families: spectral projections 1_[lambda, inf)(A), chart covers,
// polarization compatibility through a tail proxy, and trivialization by
// conjugation u(x) A(x) u(x)*.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rgl/error.hpp"
#include "rgl/families.hpp"
#include "rgl/linalg.hpp"
#include "rgl/operator.hpp"
#include "rgl/phi.hpp"

namespace rgl {

/// Default minimal distance between a level and the spectrum.
inline constexpr double kDefaultMinGap = 1e-3;

/// Default compatibility threshold on tail norms.
inline constexpr double kCompatibilityThreshold = 0.1;

inline void require_self_adjoint(const Mat& a, const Tolerances& tol = {}) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::Shape, "self-adjoint operator must be square");
  const double scale = std::max(1.0, a.size() ? spectral_norm(a) : 0.0);
  if (spectral_norm(a - a.adjoint()) > tol.algebraic * scale)
    throw Error(ErrorKind::Precondition, "operator is not self-adjoint");
}

/// Self-adjoint matrix at a family value; relations (vertical defects) are rejected.
inline Mat self_adjoint_value(const FamilyValue& v, const Tolerances& tol = {}) {
  const auto* op = std::get_if<MatrixOperator>(&v);
  if (!op) throw Error(ErrorKind::Precondition, "self-adjoint families must be operator-valued at every node");
  require_self_adjoint(op->matrix(), tol);
  return hermitian_part(op->matrix());
}

// ---------------------------------------------------------------------------
// Spectral projections

struct SpectralProjection {
  Mat projection;
  std::size_t rank = 0;
  double gap = 0.0;  // dist(lambda, spectrum)
};

/// Distance from `lambda` to the eigenvalues of the self-adjoint `a`.
inline double spectral_gap(const Mat& a, double lambda) {
  const RealVec ev = hermitian_eigen(a).values;
  double gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < ev.size(); ++i) gap = std::min(gap, std::abs(ev(i) - lambda));
  return gap;
}

/// 1_[lambda, inf)(A) from the eigendecomposition.
inline SpectralProjection spectral_projection(const Mat& a, double lambda, double min_gap = kDefaultMinGap,
                                              const Tolerances& tol = {}) {
  require_self_adjoint(a, tol);
  const HermitianEigen eig = hermitian_eigen(a);
  SpectralProjection out;
  out.gap = std::numeric_limits<double>::infinity();
  Index first = eig.values.size();
  for (Index i = 0; i < eig.values.size(); ++i) {
    out.gap = std::min(out.gap, std::abs(eig.values(i) - lambda));
    if (eig.values(i) >= lambda && first == eig.values.size()) first = i;
  }
  if (out.gap < min_gap)
    throw Error(ErrorKind::Precondition, "level " + std::to_string(lambda) + " lies within " +
                                             std::to_string(out.gap) + " of the spectrum (need " +
                                             std::to_string(min_gap) + ")");
  out.rank = static_cast<std::size_t>(eig.values.size() - first);
  const Mat cols = eig.vectors.rightCols(static_cast<Index>(out.rank));
  out.projection = hermitian_part(cols * cols.adjoint());
  return out;
}

inline SpectralProjection spectral_projection(const MatrixOperator& op, double lambda,
                                              double min_gap = kDefaultMinGap, const Tolerances& tol = {}) {
  return spectral_projection(op.matrix(), lambda, min_gap, tol);
}

// ---------------------------------------------------------------------------
// Charts

/// A contiguous run of grid nodes where `lambda` stays at least min_gap away from the spectrum.
struct SpectralChart {
  double lambda = 0.0;
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
  std::vector<double> gaps;

  bool contains(std::size_t node) const noexcept { return node >= first && node <= last; }
  std::size_t size() const noexcept { return last - first + 1; }
};

struct ChartCover {
  std::vector<SpectralChart> charts;     // in the order they are used along the grid
  std::vector<std::size_t> assignment;   // chart index per node
};

/// Eigenvalues at every node of `grid`.
inline std::vector<RealVec> node_spectra(const OperatorFamily& family, const ParamGrid& grid,
                                         const Tolerances& tol = {}) {
  std::vector<RealVec> out;
  out.reserve(grid.points);
  for (std::size_t i = 0; i < grid.points; ++i)
    out.push_back(hermitian_eigen(self_adjoint_value(family.evaluate_at(grid.node(i)), tol)).values);
  return out;
}

/// Midpoints of the `count` widest gaps between eigenvalues seen on a coarse
/// subsample (at most 17 nodes) of the grid.
inline std::vector<double> default_lambda_candidates(const std::vector<RealVec>& spectra, std::size_t count = 3) {
  std::vector<double> all;
  const std::size_t stride = std::max<std::size_t>(1, spectra.size() / 16);
  for (std::size_t i = 0; i < spectra.size(); i += stride)
    for (Index k = 0; k < spectra[i].size(); ++k) all.push_back(spectra[i](k));
  std::sort(all.begin(), all.end());
  std::vector<std::pair<double, double>> gaps;  // (width, midpoint)
  for (std::size_t k = 0; k + 1 < all.size(); ++k)
    if (all[k + 1] > all[k]) gaps.emplace_back(all[k + 1] - all[k], 0.5 * (all[k + 1] + all[k]));
  std::stable_sort(gaps.begin(), gaps.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
  std::vector<double> out;
  for (std::size_t k = 0; k < gaps.size() && out.size() < count; ++k) out.push_back(gaps[k].second);
  return out;
}

/// Covers the grid by charts built from `candidates`. The current chart is kept
/// while it stays admissible; otherwise the chart covering both the previous and
/// the current node that reaches furthest is taken.
inline ChartCover chart_cover(const std::vector<RealVec>& spectra, const std::vector<double>& candidates,
                              double min_gap = kDefaultMinGap) {
  const std::size_t n = spectra.size();
  if (n == 0) throw Error(ErrorKind::Precondition, "empty family");
  std::vector<SpectralChart> runs;
  for (double lambda : candidates) {
    std::optional<SpectralChart> open;
    for (std::size_t i = 0; i <= n; ++i) {
      double gap = -1.0;
      if (i < n) {
        gap = std::numeric_limits<double>::infinity();
        for (Index k = 0; k < spectra[i].size(); ++k) gap = std::min(gap, std::abs(spectra[i](k) - lambda));
      }
      if (gap >= min_gap) {
        if (!open) open = SpectralChart{lambda, i, i, {}};
        open->last = i;
        open->gaps.push_back(gap);
      } else if (open) {
        runs.push_back(*open);
        open.reset();
      }
    }
  }

  std::vector<std::size_t> uncovered;
  for (std::size_t i = 0; i < n; ++i)
    if (std::none_of(runs.begin(), runs.end(), [i](const SpectralChart& c) { return c.contains(i); }))
      uncovered.push_back(i);
  if (!uncovered.empty()) {
    std::string list;
    for (std::size_t k = 0; k < uncovered.size() && k < 20; ++k) list += (k ? "," : "") + std::to_string(uncovered[k]);
    if (uncovered.size() > 20) list += ",...";
    throw Error(ErrorKind::Precondition, "no admissible level at nodes " + list, uncovered.front());
  }

  ChartCover cover;
  cover.assignment.assign(n, 0);
  auto pick = [&runs](std::size_t need_a, std::size_t need_b) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t r = 0; r < runs.size(); ++r)
      if (runs[r].contains(need_a) && runs[r].contains(need_b) && (!best || runs[r].last > runs[*best].last)) best = r;
    return best;
  };
  std::size_t current = *pick(0, 0);
  cover.charts.push_back(runs[current]);
  for (std::size_t i = 1; i < n; ++i) {
    if (!runs[current].contains(i)) {
      const auto next = pick(i - 1, i);
      if (!next)
        throw Error(ErrorKind::Precondition, "charts do not overlap between nodes " + std::to_string(i - 1) +
                                                 " and " + std::to_string(i), i - 1);
      current = *next;
      cover.charts.push_back(runs[current]);
    }
    cover.assignment[i] = cover.charts.size() - 1;
  }
  return cover;
}

inline ChartCover chart_cover(const OperatorFamily& family, const ParamGrid& grid, const std::vector<double>& candidates,
                              double min_gap = kDefaultMinGap, const Tolerances& tol = {}) {
  return chart_cover(node_spectra(family, grid, tol), candidates, min_gap);
}

// ---------------------------------------------------------------------------
// Tail model

/// Coordinates from block `tail_start` on (blocks of `block_size` coordinates) form the tail.
struct TailModel {
  std::size_t tail_start = 0;
  std::size_t block_size = 1;

  /// Last quarter of `modes` blocks, at least one block.
  static TailModel last_quarter(std::size_t modes, std::size_t block_size = 1) {
    const std::size_t tail = std::max<std::size_t>(1, modes / 4);
    return {modes - std::min(tail, modes), block_size};
  }

  void validate(Index dim) const {
    if (block_size == 0 || dim % static_cast<Index>(block_size) != 0)
      throw Error(ErrorKind::Precondition, "tail block size does not divide the dimension");
    if (tail_start * block_size > static_cast<std::size_t>(dim))
      throw Error(ErrorKind::Precondition, "tail index exceeds the number of modes");
  }
  std::size_t modes(Index dim) const { return static_cast<std::size_t>(dim) / block_size; }
  std::size_t tail_modes(Index dim) const { return modes(dim) - tail_start; }
};

/// max(||C Q||, ||Q C||) with Q the coordinate projection onto the tail.
inline double tail_norm(const Mat& c, const TailModel& tail) {
  if (c.rows() != c.cols()) throw Error(ErrorKind::Shape, "tail norm needs a square matrix");
  tail.validate(c.rows());
  const Index start = static_cast<Index>(tail.tail_start * tail.block_size);
  const Index len = c.rows() - start;
  if (len == 0) return 0.0;
  return std::max(spectral_norm(c.rightCols(len)), spectral_norm(c.bottomRows(len)));
}

struct CompactPart {
  Mat c;  // f(A) - (2 p_lambda - 1)
  std::optional<double> tail_norm;
};

inline CompactPart compact_part(const Mat& a, double lambda, std::optional<TailModel> tail = std::nullopt,
                                double min_gap = kDefaultMinGap, const Tolerances& tol = {}) {
  const SpectralProjection p = spectral_projection(a, lambda, min_gap, tol);
  const Index n = a.rows();
  CompactPart out;
  out.c = hermitian_part(bounded_transform_matrix(MatrixOperator(hermitian_part(a))) -
                         (2.0 * p.projection - Mat::Identity(n, n)));
  if (tail) out.tail_norm = rgl::tail_norm(out.c, *tail);
  return out;
}

// ---------------------------------------------------------------------------
// Essential sign

enum class EssentialSign { Positive, Negative, Neither };

inline const char* to_string(EssentialSign s) {
  switch (s) {
    case EssentialSign::Positive: return "essentially-positive";
    case EssentialSign::Negative: return "essentially-negative";
    case EssentialSign::Neither: return "neither";
  }
  return "?";
}

/// Classification by the signs of the tail at every node. Mode families read the
/// tail modes directly; other families use the eigenvalues of the trailing
/// principal block. Needs at least two tail modes.
inline EssentialSign essential_sign(const OperatorFamily& family, const ParamGrid& grid, const TailModel& tail,
                                    const Tolerances& tol = {}) {
  bool all_pos = true;
  bool all_neg = true;
  for (std::size_t i = 0; i < grid.points; ++i) {
    const double t = grid.node(i);
    if (const ModeFamily* modes = family.modes()) {
      const Index dim = static_cast<Index>(modes->size());
      tail.validate(dim);
      if (tail.tail_modes(dim) < 2)
        throw Error(ErrorKind::Inconclusive, "tail has fewer than two modes; sign undecided");
      const auto values = modes->values(t);
      for (std::size_t k = tail.tail_start; k < values.size(); ++k) {
        if (!values[k]) {
          all_pos = all_neg = false;  // passes through infinity
          continue;
        }
        all_pos = all_pos && *values[k] > 0;
        all_neg = all_neg && *values[k] < 0;
      }
    } else {
      const Mat a = self_adjoint_value(family.evaluate_at(t), tol);
      tail.validate(a.rows());
      if (tail.tail_modes(a.rows()) < 2)
        throw Error(ErrorKind::Inconclusive, "tail has fewer than two modes; sign undecided");
      const Index start = static_cast<Index>(tail.tail_start * tail.block_size);
      const RealVec ev = hermitian_eigen(a.bottomRightCorner(a.rows() - start, a.rows() - start)).values;
      all_pos = all_pos && ev.minCoeff() > 0;
      all_neg = all_neg && ev.maxCoeff() < 0;
    }
    if (!all_pos && !all_neg) return EssentialSign::Neither;
  }
  return all_pos ? EssentialSign::Positive : EssentialSign::Negative;
}

// ---------------------------------------------------------------------------
// Polarization families

/// Grid-indexed projections on H. `shape` is {points} or {nx, ny} (row-major nodes).
struct PolarizationFamily {
  std::vector<Mat> projections;
  std::vector<std::size_t> shape;
  std::optional<double> lambda;
  std::string origin = "external";

  PolarizationFamily() = default;
  PolarizationFamily(std::vector<Mat> ps, std::vector<std::size_t> shp = {}, std::optional<double> level = std::nullopt,
                     std::string from = "external", const Tolerances& tol = {})
      : projections(std::move(ps)), shape(std::move(shp)), lambda(level), origin(std::move(from)) {
    if (shape.empty()) shape = {projections.size()};
    std::size_t count = 1;
    for (auto s : shape) count *= s;
    if (shape.size() > 2 || count != projections.size() || projections.empty())
      throw Error(ErrorKind::Shape, "polarization grid shape does not match the number of projections");
    const Index d = projections.front().rows();
    for (std::size_t i = 0; i < projections.size(); ++i) {
      const Mat& p = projections[i];
      if (p.rows() != d || p.cols() != d) throw Error(ErrorKind::Shape, "projections differ in size", i);
      const double scale = std::max(1.0, p.norm());
      if ((p - p.adjoint()).norm() > tol.algebraic * scale || (p * p - p).norm() > tol.algebraic * scale * 10)
        throw Error(ErrorKind::Precondition, "not an orthogonal projection", i);
    }
  }

  std::size_t size() const noexcept { return projections.size(); }
  Index dim() const { return projections.front().rows(); }
};

struct CompatibilityReport {
  std::vector<double> scores;  // tail norm of p - q per node
  double max_score = 0.0;
  double threshold = kCompatibilityThreshold;
  bool compatible = true;
};

inline CompatibilityReport compatibility(const PolarizationFamily& p, const PolarizationFamily& q,
                                         const TailModel& tail, double threshold = kCompatibilityThreshold) {
  if (p.shape != q.shape || p.dim() != q.dim())
    throw Error(ErrorKind::Shape, "polarizations live on different grids or spaces");
  CompatibilityReport out;
  out.threshold = threshold;
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.scores.push_back(tail_norm(p.projections[i] - q.projections[i], tail));
    out.max_score = std::max(out.max_score, out.scores.back());
  }
  out.compatible = out.max_score <= threshold;
  return out;
}

// ---------------------------------------------------------------------------
// Conjugation trivializer

enum class SnakeOrientation { Rows, Columns };

/// Visiting order of a grid: 1-D in order; 2-D boustrophedon along rows or columns.
inline std::vector<std::size_t> snake_order(const std::vector<std::size_t>& shape,
                                            SnakeOrientation orientation = SnakeOrientation::Rows) {
  std::vector<std::size_t> order;
  if (shape.size() == 1) {
    for (std::size_t i = 0; i < shape[0]; ++i) order.push_back(i);
    return order;
  }
  const std::size_t nx = shape[0];
  const std::size_t ny = shape[1];
  if (orientation == SnakeOrientation::Rows) {
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t k = 0; k < ny; ++k) order.push_back(i * ny + (i % 2 ? ny - 1 - k : k));
  } else {
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t k = 0; k < nx; ++k) order.push_back((j % 2 ? nx - 1 - k : k) * ny + j);
  }
  return order;
}

struct Trivialization {
  std::vector<Mat> unitaries;  // per node, grid order; u(x0) = I
  std::vector<double> defects;
  double max_defect = 0.0;
  double max_unitarity_residual = 0.0;
};

/// u(x0) = I and u_{next} = u_prev T(p_prev -> p_next)* along the snake path, so
/// that u(x) p(x) u(x)* = p(x0).
inline Trivialization conjugation_trivializer(const PolarizationFamily& family,
                                              SnakeOrientation orientation = SnakeOrientation::Rows,
                                              const Tolerances& tol = {}) {
  const auto order = snake_order(family.shape, orientation);
  const Index d = family.dim();
  Trivialization out;
  out.unitaries.assign(family.size(), Mat());
  out.defects.assign(family.size(), 0.0);
  out.unitaries[order.front()] = Mat::Identity(d, d);
  const Mat& p0 = family.projections[order.front()];
  for (std::size_t k = 1; k < order.size(); ++k) {
    const std::size_t prev = order[k - 1];
    const std::size_t node = order[k];
    Mat step;
    try {
      step = projection_transport(family.projections[prev], family.projections[node], tol);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RefinePath) throw;
      throw Error(ErrorKind::RefinePath, "polarization step " + std::to_string(prev) + " -> " + std::to_string(node) +
                                             " exceeds the transport cap; refine the grid", prev);
    }
    out.unitaries[node] = out.unitaries[prev] * step.adjoint();
  }
  for (std::size_t i = 0; i < family.size(); ++i) {
    const Mat& u = out.unitaries[i];
    out.defects[i] = hermitian_norm(u * family.projections[i] * u.adjoint() - p0);
    out.max_defect = std::max(out.max_defect, out.defects[i]);
    out.max_unitarity_residual = std::max(out.max_unitarity_residual, unitarity_residual(u));
  }
  return out;
}

/// Largest ||w p0 - p0 w|| with w = u1 u2*; zero when the two trivializations
/// differ by unitaries commuting with the base projection.
inline double path_order_residual(const Trivialization& a, const Trivialization& b, const Mat& p0) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.unitaries.size(); ++i) {
    const Mat w = a.unitaries[i] * b.unitaries[i].adjoint();
    worst = std::max(worst, spectral_norm(w * p0 - p0 * w));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Riesz-continuous conjugation of self-adjoint families

struct SaOptions {
  std::optional<std::vector<double>> candidates;
  double min_gap = kDefaultMinGap;
  std::optional<TailModel> tail;
};

struct SaResult {
  OperatorFamily output;
  bool trivialized = false;
  std::string note;
  std::optional<EssentialSign> sign;
  ChartCover cover;
  std::vector<Mat> unitaries;
  std::vector<double> gaps;     // chart gap per node
  std::vector<double> defects;  // ||u p u* - u_s p u_s*|| within the chart segment
  double max_defect = 0.0;
  double max_spectrum_deviation = 0.0;
  LevelModuli input;
  LevelModuli result;
};

inline SaResult make_riesz_continuous_sa(const OperatorFamily& family, const ParamGrid& grid, const SaOptions& options = {},
                                         const Tolerances& tol = {}) {
  grid.validate();
  std::vector<Mat> values;
  values.reserve(grid.points);
  for (std::size_t i = 0; i < grid.points; ++i) values.push_back(self_adjoint_value(family.evaluate_at(grid.node(i)), tol));

  std::optional<TailModel> tail = options.tail;
  if (!tail && family.modes()) tail = TailModel::last_quarter(family.modes()->size());
  std::optional<EssentialSign> sign;
  if (tail) {
    try {
      sign = essential_sign(family, grid, *tail, tol);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Inconclusive) throw;
    }
  }
  const LevelModuli input = modulus(family, Metric::Both, grid, tol);
  if (sign && *sign != EssentialSign::Neither) {
    const Index d = values.front().rows();
    SaResult out{family.with_grid(grid), false, "Riesz continuous in every trivialization", sign, {},
                 std::vector<Mat>(grid.points, Mat::Identity(d, d)), {}, std::vector<double>(grid.points, 0.0), 0.0,
                 0.0, input, input};
    return out;
  }

  std::vector<RealVec> spectra;
  spectra.reserve(values.size());
  for (const auto& a : values) spectra.push_back(hermitian_eigen(a).values);
  const std::vector<double> candidates =
      options.candidates ? *options.candidates : default_lambda_candidates(spectra);
  ChartCover cover = chart_cover(spectra, candidates, options.min_gap);

  const Index d = values.front().rows();
  std::vector<Mat> unitaries(grid.points);
  std::vector<double> gaps(grid.points), defects(grid.points, 0.0);
  unitaries[0] = Mat::Identity(d, d);
  const SpectralChart* chart = &cover.charts[cover.assignment[0]];
  Mat segment_base = spectral_projection(values[0], chart->lambda, options.min_gap, tol).projection;
  Mat prev_p = segment_base;
  gaps[0] = chart->gaps[0];
  const double min_gap = options.min_gap;
  for (std::size_t i = 1; i < grid.points; ++i) {
    const SpectralChart* next = &cover.charts[cover.assignment[i]];
    if (next != chart) {
      // both nodes lie in the new chart; restart the segment at the previous node
      chart = next;
      prev_p = spectral_projection(values[i - 1], chart->lambda, min_gap, tol).projection;
      segment_base = unitaries[i - 1] * prev_p * unitaries[i - 1].adjoint();
    }
    const SpectralProjection sp = spectral_projection(values[i], chart->lambda, min_gap, tol);
    const double lambda = chart->lambda;
    std::function<Mat(double)> along;
    if (family.refinable())
      along = [&family, lambda, min_gap, &tol](double t) {
        return spectral_projection(self_adjoint_value(family.evaluate_at(t), tol), lambda, min_gap, tol).projection;
      };
    Mat step;
    try {
      step = transport_along(along, grid.node(i - 1), grid.node(i), prev_p, sp.projection, tol);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RefinePath && e.kind() != ErrorKind::Precondition) throw;
      throw Error(ErrorKind::RefinePath, "spectral projections jump between nodes " + std::to_string(i - 1) + " and " +
                                             std::to_string(i) + ": " + e.what(), i - 1);
    }
    unitaries[i] = unitaries[i - 1] * step.adjoint();
    gaps[i] = sp.gap;
    defects[i] = hermitian_norm(unitaries[i] * sp.projection * unitaries[i].adjoint() - segment_base);
    prev_p = sp.projection;
  }

  std::vector<FamilyValue> conjugated;
  conjugated.reserve(grid.points);
  double spectrum_dev = 0.0;
  for (std::size_t i = 0; i < grid.points; ++i) {
    const Mat c = hermitian_part(unitaries[i] * values[i] * unitaries[i].adjoint());
    const RealVec after = hermitian_eigen(c).values;
    const double scale = std::max(1.0, spectra[i].cwiseAbs().maxCoeff());
    spectrum_dev = std::max(spectrum_dev, (after - spectra[i]).cwiseAbs().maxCoeff() / scale);
    conjugated.emplace_back(MatrixOperator(c));
  }
  OperatorFamily output = OperatorFamily::explicit_values(std::move(conjugated), grid);
  const LevelModuli result = modulus(output, Metric::Both, grid, tol);
  SaResult out{std::move(output), true, cover.charts.size() == 1 ? "single chart" : std::to_string(cover.charts.size()) + " charts",
               sign, std::move(cover), std::move(unitaries), std::move(gaps), std::move(defects), 0.0, spectrum_dev, input,
               result};
  out.max_defect = *std::max_element(out.defects.begin(), out.defects.end());
  if (!sign) out.note += "; essential sign undetermined";
  return out;
}

inline SaResult make_riesz_continuous_sa(const OperatorFamily& family, const SaOptions& options = {},
                                         const Tolerances& tol = {}) {
  return make_riesz_continuous_sa(family, family.grid(), options, tol);
}

// ---------------------------------------------------------------------------
// Semibounded comparison

struct SemiboundedReport {
  double bound = 0.0;     // c
  double constant = 0.0;  // K(c)
  double min_eigenvalue = 0.0;
  double max_ratio = 0.0;  // max d_R / d_G over steps with d_G > 0
  double max_excess = 0.0; // max(d_R - K d_G)
  bool holds = true;
  StepTable steps;
};

/// Checks d_R <= K(c) d_G step by step for a family whose spectrum stays >= c.
inline SemiboundedReport semibounded_check(const OperatorFamily& family, const ParamGrid& grid, double c,
                                           const Tolerances& tol = {}) {
  SemiboundedReport out;
  out.bound = c;
  out.constant = semibounded_constant(c);
  out.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.points; ++i) {
    const Mat a = self_adjoint_value(family.evaluate_at(grid.node(i)), tol);
    const double low = hermitian_eigen(a).values.minCoeff();
    out.min_eigenvalue = std::min(out.min_eigenvalue, low);
    if (low < c - tol.algebraic * std::max(1.0, std::abs(c)))
      throw Error(ErrorKind::Precondition, "eigenvalue " + std::to_string(low) + " below the bound " +
                                               std::to_string(c), i);
  }
  out.steps = step_table(family, grid, Metric::Both, tol);
  for (std::size_t i = 0; i + 1 < grid.points; ++i) {
    const double dg = out.steps.d_graph[i];
    const double dr = out.steps.d_riesz[i];
    if (dg > 0) out.max_ratio = std::max(out.max_ratio, dr / dg);
    out.max_excess = std::max(out.max_excess, dr - out.constant * dg);
  }
  out.holds = out.max_excess <= tol.algebraic;
  return out;
}

}  // namespace rgl
