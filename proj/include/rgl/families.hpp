#pragma once

// Parametrized operator / relation families over one-dimensional grids,
// block-diagonal mode models of diagonal operators on l^2, and continuity
// analysis in the graph and Riesz metrics.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rgl/error.hpp"
#include "rgl/linalg.hpp"
#include "rgl/operator.hpp"

namespace rgl {

// ---------------------------------------------------------------------------
// Grids

/// Uniform grid start + i * step + offset, i = 0 .. points-1.
struct ParamGrid {
  double start = 0.0;
  double end = 1.0;
  std::size_t points = 2;
  /// Absolute shift of every node; unset means 1e-3 * step.
  std::optional<double> offset;

  static constexpr double kDefaultOffsetFraction = 1e-3;

  void validate() const {
    if (points < 2) throw Error(ErrorKind::Precondition, "grid needs at least 2 points");
    if (!std::isfinite(start) || !std::isfinite(end) || !(end > start))
      throw Error(ErrorKind::Precondition, "grid needs finite start < end");
    if (offset && !std::isfinite(*offset)) throw Error(ErrorKind::Precondition, "grid offset must be finite");
  }

  double step() const { return (end - start) / static_cast<double>(points - 1); }
  double effective_offset() const { return offset ? *offset : kDefaultOffsetFraction * step(); }
  double node(std::size_t i) const { return start + static_cast<double>(i) * step() + effective_offset(); }

  std::vector<double> nodes() const {
    std::vector<double> out(points);
    for (std::size_t i = 0; i < points; ++i) out[i] = node(i);
    return out;
  }

  /// Doubles the node density; an explicit offset is halved so it stays the same fraction of a step.
  ParamGrid refined() const {
    ParamGrid out = *this;
    out.points = 2 * (points - 1) + 1;
    if (offset) out.offset = *offset / 2.0;
    return out;
  }

  /// The grid with 2^k + 1 points on [start, end].
  static ParamGrid dyadic(double start, double end, int k, std::optional<double> offset = std::nullopt) {
    ParamGrid g{start, end, (std::size_t{1} << k) + 1, offset};
    g.validate();
    return g;
  }
};

// ---------------------------------------------------------------------------
// Scalar modes and mode families

/// Closed-form scalar generator t |-> a(t) for one mode of a diagonal operator.
struct ScalarMode {
  enum class Kind { Linear, Pole };

  Kind kind = Kind::Linear;
  double first = 0.0;   // Linear: intercept; Pole: scale
  double second = 0.0;  // Linear: slope;     Pole: centre

  static ScalarMode constant(double value) { return {Kind::Linear, value, 0.0}; }
  /// a(t) = intercept + slope * t
  static ScalarMode linear(double intercept, double slope) { return {Kind::Linear, intercept, slope}; }
  /// a(t) = scale / (t - centre)
  static ScalarMode pole(double centre, double scale = 1.0) { return {Kind::Pole, scale, centre}; }

  bool has_pole_at(double t) const { return kind == Kind::Pole && t == second; }

  /// Value at t; nullopt exactly at a pole (the mode's graph is the vertical line there).
  std::optional<double> value(double t) const {
    if (kind == Kind::Linear) return first + second * t;
    if (t == second) return std::nullopt;
    return first / (t - second);
  }

  std::string name() const { return kind == Kind::Linear ? "linear" : "pole"; }
};

/// Angle of the line span(1, a) in (-pi/2, pi/2]; the vertical line has angle pi/2.
inline double line_angle(std::optional<double> value) {
  return value ? std::atan(*value) : std::numbers::pi / 2;
}

/// Graph and Riesz distances of two real scalars.
struct ScalarDistances {
  double graph = 0.0;
  double riesz = 0.0;
};

inline ScalarDistances scalar_distances(double lambda, double mu) {
  if (!std::isfinite(lambda) || !std::isfinite(mu)) throw Error(ErrorKind::Precondition, "scalars must be finite");
  const double hl = std::hypot(1.0, lambda);
  const double hm = std::hypot(1.0, mu);
  return {std::abs(lambda - mu) / (hl * hm), std::abs(lambda / hl - mu / hm)};
}

/// Graph distance of scalar lines where either side may be the vertical line.
inline double scalar_graph_distance(std::optional<double> lambda, std::optional<double> mu) {
  if (lambda && mu) return scalar_distances(*lambda, *mu).graph;
  if (!lambda && !mu) return 0.0;
  const double finite = lambda ? *lambda : *mu;
  return 1.0 / std::hypot(1.0, finite);
}

/// Constant K(c) with d_R(l, m) <= K(c) d_G(l, m) for all real l, m >= c.
/// With l = tan(x), m = tan(y): d_R / d_G = cos((x+y)/2) / cos((x-y)/2), maximised
/// at x = y = atan(c) when c >= 0 and at x = atan(c), y -> pi/2 when c <= 0.
inline double semibounded_constant(double c) {
  if (!std::isfinite(c)) throw Error(ErrorKind::Precondition, "spectral bound must be finite");
  if (c >= 0) return 1.0 / std::hypot(1.0, c);
  return std::hypot(1.0, c) - c;
}

using FamilyValue = std::variant<MatrixOperator, ClosedRelation>;

inline bool is_operator(const FamilyValue& v) { return std::holds_alternative<MatrixOperator>(v); }

inline ClosedRelation relation_of(const FamilyValue& v) {
  if (const auto* op = std::get_if<MatrixOperator>(&v)) return graph_projection(*op);
  return std::get<ClosedRelation>(v);
}

inline std::pair<Index, Index> dims_of(const FamilyValue& v) {
  if (const auto* op = std::get_if<MatrixOperator>(&v)) return {op->domain_dim(), op->codomain_dim()};
  const auto& rel = std::get<ClosedRelation>(v);
  return {rel.domain_dim(), rel.codomain_dim()};
}

/// Direct sum of scalar modes, a diagonal operator diag(a_1(t), ..., a_N(t)).
class ModeFamily {
 public:
  ModeFamily() = default;
  explicit ModeFamily(std::vector<ScalarMode> modes) : modes_(std::move(modes)) {
    if (modes_.empty()) throw Error(ErrorKind::Precondition, "mode family needs at least one mode");
  }

  std::size_t size() const noexcept { return modes_.size(); }
  const std::vector<ScalarMode>& modes() const noexcept { return modes_; }

  std::vector<std::optional<double>> values(double t) const {
    std::vector<std::optional<double>> out;
    out.reserve(modes_.size());
    for (const auto& mode : modes_) {
      auto v = mode.value(t);
      if (v && !std::isfinite(*v)) v.reset();
      out.push_back(v);
    }
    return out;
  }

  /// diag(a_1(t), ..., a_N(t)), or the block-diagonal relation when some mode sits on its pole.
  FamilyValue evaluate(double t) const {
    const auto vals = values(t);
    const Index n = static_cast<Index>(vals.size());
    const bool all_finite_values = std::all_of(vals.begin(), vals.end(), [](const auto& v) { return v.has_value(); });
    if (all_finite_values) {
      Mat d = Mat::Zero(n, n);
      for (Index i = 0; i < n; ++i) d(i, i) = *vals[static_cast<std::size_t>(i)];
      return MatrixOperator(std::move(d));
    }
    Mat p = Mat::Zero(2 * n, 2 * n);
    for (Index i = 0; i < n; ++i) {
      const auto& v = vals[static_cast<std::size_t>(i)];
      if (!v) {
        p(n + i, n + i) = 1.0;
        continue;
      }
      const double h2 = 1.0 + *v * *v;
      p(i, i) = 1.0 / h2;
      p(i, n + i) = *v / h2;
      p(n + i, i) = *v / h2;
      p(n + i, n + i) = *v * *v / h2;
    }
    return ClosedRelation(std::move(p), n, n);
  }

 private:
  std::vector<ScalarMode> modes_;
};

// ---------------------------------------------------------------------------
// Operator families

struct Provenance {
  std::string generator = "explicit";
  nlohmann::json params = nlohmann::json::object();
};

/// A grid-indexed family backed by a re-evaluable generator. Explicit value
/// arrays are wrapped as generators that cannot be refined.
class OperatorFamily {
 public:
  using Generator = std::function<FamilyValue(double)>;

  OperatorFamily(ParamGrid grid, Generator generator, Provenance provenance = {})
      : grid_(std::move(grid)), generator_(std::move(generator)), provenance_(std::move(provenance)) {
    grid_.validate();
    if (!generator_) throw Error(ErrorKind::Precondition, "family generator is empty");
  }

  static OperatorFamily from_modes(ModeFamily modes, ParamGrid grid, Provenance provenance = {}) {
    auto shared = std::make_shared<const ModeFamily>(std::move(modes));
    OperatorFamily out(std::move(grid), [shared](double t) { return shared->evaluate(t); }, std::move(provenance));
    out.modes_ = std::move(shared);
    return out;
  }

  static OperatorFamily constant(const MatrixOperator& op, ParamGrid grid) {
    return OperatorFamily(std::move(grid), [op](double) { return FamilyValue(op); }, {"constant", {}});
  }

  /// Wraps explicit node values; evaluation is only possible at the grid nodes.
  static OperatorFamily explicit_values(std::vector<FamilyValue> values, ParamGrid grid) {
    grid.validate();
    if (values.size() != grid.points)
      throw Error(ErrorKind::Shape, "explicit family has " + std::to_string(values.size()) + " values for " +
                                        std::to_string(grid.points) + " grid points");
    const auto dims = dims_of(values.front());
    bool any_graph = false;
    for (const auto& v : values) {
      if (dims_of(v) != dims) throw Error(ErrorKind::Shape, "explicit family values have different shapes");
      any_graph = any_graph || is_operator(v) || is_operator_graph(std::get<ClosedRelation>(v)).is_graph;
    }
    if (!any_graph) throw Error(ErrorKind::Precondition, "explicit family contains no operator graph");
    auto shared = std::make_shared<const std::vector<FamilyValue>>(std::move(values));
    const ParamGrid frozen = grid;
    OperatorFamily out(grid, [shared, frozen](double t) {
      const double pos = (t - frozen.start - frozen.effective_offset()) / frozen.step();
      const double nearest = std::round(pos);
      if (std::abs(pos - nearest) > 1e-9 || nearest < 0 || nearest >= static_cast<double>(shared->size()))
        throw Error(ErrorKind::Precondition, "explicit family evaluated off its grid");
      return (*shared)[static_cast<std::size_t>(nearest)];
    });
    out.refinable_ = false;
    return out;
  }

  const ParamGrid& grid() const noexcept { return grid_; }
  const Provenance& provenance() const noexcept { return provenance_; }
  bool refinable() const noexcept { return refinable_; }
  /// Mode structure when the family is a direct sum of scalar modes.
  const ModeFamily* modes() const noexcept { return modes_.get(); }

  FamilyValue evaluate_at(double t) const { return generator_(t); }
  FamilyValue evaluate(std::size_t node) const {
    if (node >= grid_.points) throw Error(ErrorKind::Precondition, "grid node out of range");
    return generator_(grid_.node(node));
  }

  OperatorFamily with_grid(ParamGrid grid) const {
    if (!refinable_) throw Error(ErrorKind::Precondition, "explicit families cannot be re-gridded");
    grid.validate();
    OperatorFamily out = *this;
    out.grid_ = std::move(grid);
    return out;
  }

 private:
  ParamGrid grid_;
  Generator generator_;
  Provenance provenance_;
  std::shared_ptr<const ModeFamily> modes_;
  bool refinable_ = true;
};

// ---------------------------------------------------------------------------
// Continuity analysis

enum class Metric { Graph, Riesz, Both };

inline const char* to_string(Metric metric) {
  switch (metric) {
    case Metric::Graph: return "graph";
    case Metric::Riesz: return "riesz";
    case Metric::Both: return "both";
  }
  return "?";
}

inline Metric parse_metric(const std::string& s) {
  if (s == "graph") return Metric::Graph;
  if (s == "riesz") return Metric::Riesz;
  if (s == "both") return Metric::Both;
  throw Error(ErrorKind::Precondition, "unknown metric '" + s + "'");
}

inline bool wants_graph(Metric m) { return m != Metric::Riesz; }
inline bool wants_riesz(Metric m) { return m != Metric::Graph; }

/// Per-node and per-step data of one grid level. Step i joins nodes i and i+1;
/// the last node carries no step (NaN).
struct StepTable {
  std::vector<double> x;
  std::vector<double> d_graph;
  std::vector<double> d_riesz;  // NaN where unavailable
  std::vector<bool> is_graph;
  std::vector<long> ker_dim;    // -1 at relation nodes or ambiguous ranks
};

struct LevelModuli {
  std::size_t points = 0;
  double step = 0.0;
  double graph = 0.0;
  /// +infinity when some node is not an operator graph.
  double riesz = 0.0;
  bool riesz_computed = false;
};

namespace detail {

inline long kernel_dim_or_unknown(const MatrixOperator& op, const Tolerances& tol) {
  try {
    return static_cast<long>(kernel_cokernel_dims(op, tol).ker);
  } catch (const Error&) {
    return -1;
  }
}

inline StepTable mode_steps(const ModeFamily& modes, const ParamGrid& grid, bool want_riesz) {
  StepTable t;
  const std::size_t points = grid.points;
  t.x = grid.nodes();
  t.d_graph.assign(points, std::numeric_limits<double>::quiet_NaN());
  t.d_riesz.assign(points, std::numeric_limits<double>::quiet_NaN());
  t.is_graph.assign(points, true);
  t.ker_dim.assign(points, 0);
  std::vector<std::optional<double>> prev;
  for (std::size_t i = 0; i < points; ++i) {
    auto cur = modes.values(t.x[i]);
    long ker = 0;
    for (const auto& v : cur) {
      if (!v) t.is_graph[i] = false;
      else if (*v == 0.0) ++ker;
    }
    t.ker_dim[i] = t.is_graph[i] ? ker : -1;
    if (i > 0) {
      double dg = 0.0;
      double dr = 0.0;
      bool riesz_ok = t.is_graph[i] && t.is_graph[i - 1];
      for (std::size_t k = 0; k < cur.size(); ++k) {
        dg = std::max(dg, scalar_graph_distance(prev[k], cur[k]));
        if (want_riesz && riesz_ok) dr = std::max(dr, scalar_distances(*prev[k], *cur[k]).riesz);
      }
      t.d_graph[i - 1] = dg;
      if (want_riesz && riesz_ok) t.d_riesz[i - 1] = dr;
    }
    prev = std::move(cur);
  }
  return t;
}

inline StepTable matrix_steps(const OperatorFamily& family, const ParamGrid& grid, bool want_riesz,
                              const Tolerances& tol) {
  StepTable t;
  const std::size_t points = grid.points;
  t.x = grid.nodes();
  t.d_graph.assign(points, std::numeric_limits<double>::quiet_NaN());
  t.d_riesz.assign(points, std::numeric_limits<double>::quiet_NaN());
  t.is_graph.assign(points, false);
  t.ker_dim.assign(points, -1);
  ClosedRelation prev_rel;
  std::optional<Mat> prev_transform;
  for (std::size_t i = 0; i < points; ++i) {
    const FamilyValue v = family.evaluate_at(t.x[i]);
    ClosedRelation rel = relation_of(v);
    std::optional<MatrixOperator> op;
    if (const auto* direct = std::get_if<MatrixOperator>(&v)) op = *direct;
    else op = is_operator_graph(rel, tol).op;
    t.is_graph[i] = op.has_value();
    std::optional<Mat> transform;
    if (op) {
      t.ker_dim[i] = kernel_dim_or_unknown(*op, tol);
      if (want_riesz) transform = bounded_transform_matrix(*op);
    }
    if (i > 0) {
      t.d_graph[i - 1] = graph_distance(prev_rel, rel);
      if (transform && prev_transform) t.d_riesz[i - 1] = spectral_norm(*transform - *prev_transform);
    }
    prev_rel = std::move(rel);
    prev_transform = std::move(transform);
  }
  return t;
}

}  // namespace detail

/// Per-step distances of `family` on `grid`. Mode families use the exact scalar
/// closed forms (the direct-sum metrics are the sup over modes).
inline StepTable step_table(const OperatorFamily& family, const ParamGrid& grid, Metric metric,
                            const Tolerances& tol = {}) {
  grid.validate();
  if (family.modes()) return detail::mode_steps(*family.modes(), grid, wants_riesz(metric));
  return detail::matrix_steps(family, grid, wants_riesz(metric), tol);
}

inline LevelModuli moduli_of(const StepTable& t, double step, bool riesz_requested) {
  LevelModuli out;
  out.points = t.x.size();
  out.step = step;
  out.riesz_computed = riesz_requested;
  const bool all_graph = std::all_of(t.is_graph.begin(), t.is_graph.end(), [](bool b) { return b; });
  for (std::size_t i = 0; i + 1 < t.x.size(); ++i) {
    out.graph = std::max(out.graph, t.d_graph[i]);
    if (riesz_requested && all_graph) out.riesz = std::max(out.riesz, t.d_riesz[i]);
  }
  if (riesz_requested && !all_graph) out.riesz = std::numeric_limits<double>::infinity();
  return out;
}

/// Largest consecutive distance of the family on `grid` in the requested metric(s).
/// Throws when the Riesz metric alone is requested and some node is not an operator.
inline LevelModuli modulus(const OperatorFamily& family, Metric metric, const ParamGrid& grid,
                           const Tolerances& tol = {}) {
  const StepTable t = step_table(family, grid, metric, tol);
  if (metric == Metric::Riesz) {
    for (std::size_t i = 0; i < t.is_graph.size(); ++i)
      if (!t.is_graph[i])
        throw Error(ErrorKind::Precondition, "Riesz metric requested at a vertical-defect node", i);
  }
  return moduli_of(t, grid.step(), wants_riesz(metric));
}

inline LevelModuli modulus(const OperatorFamily& family, Metric metric, const Tolerances& tol = {}) {
  return modulus(family, metric, family.grid(), tol);
}

enum class Verdict { ContinuousEvidence, RieszDiscontinuityWitness, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::ContinuousEvidence: return "graph-continuous-evidence";
    case Verdict::RieszDiscontinuityWitness: return "riesz-discontinuity-witness";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct RefineOptions {
  double target = 1e-2;         // modulus below which a metric counts as resolved
  int max_depth = 8;            // number of grid doublings allowed
  double riesz_floor = 1.0;     // Riesz modulus that must persist for a witness
  double decay_factor = 1.8;    // required graph-modulus decay per doubling for a witness
  std::size_t witness_levels = 3;
};

struct ContinuityReport {
  Metric metric = Metric::Both;
  std::vector<LevelModuli> history;
  StepTable last_steps;
  Verdict verdict = Verdict::Inconclusive;
  int depth = 0;
};

namespace detail {

inline bool witness_established(const std::vector<LevelModuli>& h, const RefineOptions& opt) {
  if (h.size() < opt.witness_levels) return false;
  const std::size_t first = h.size() - opt.witness_levels;
  for (std::size_t i = first; i < h.size(); ++i)
    if (!(h[i].riesz >= opt.riesz_floor)) return false;
  for (std::size_t i = first + 1; i < h.size(); ++i)
    if (!(h[i - 1].graph >= opt.decay_factor * h[i].graph)) return false;
  return true;
}

}  // namespace detail

/// Doubles the grid density until the requested metric resolves, a Riesz
/// discontinuity witness appears, or `max_depth` doublings are spent.
inline ContinuityReport refine_until(const OperatorFamily& family, Metric metric, const RefineOptions& opt = {},
                                     const Tolerances& tol = {}) {
  if (!(opt.target > 0) || opt.max_depth < 0 || opt.witness_levels < 2)
    throw Error(ErrorKind::Precondition, "invalid refinement options");
  ContinuityReport report;
  report.metric = metric;
  ParamGrid grid = family.grid();
  for (int depth = 0;; ++depth) {
    // Both moduli are always tracked; the requested metric decides the verdict.
    report.last_steps = step_table(family, grid, Metric::Both, tol);
    report.history.push_back(moduli_of(report.last_steps, grid.step(), true));
    report.depth = depth;
    const LevelModuli& level = report.history.back();
    if (metric == Metric::Riesz && !std::isfinite(level.riesz))
      throw Error(ErrorKind::Precondition, "Riesz metric requested for a family with vertical-defect nodes");
    const bool graph_ok = level.graph <= opt.target;
    const bool riesz_ok = level.riesz <= opt.target;
    if ((metric == Metric::Graph && graph_ok) || (metric == Metric::Riesz && riesz_ok) ||
        (metric == Metric::Both && graph_ok && riesz_ok)) {
      report.verdict = Verdict::ContinuousEvidence;
      return report;
    }
    if (metric != Metric::Graph && detail::witness_established(report.history, opt)) {
      report.verdict = Verdict::RieszDiscontinuityWitness;
      return report;
    }
    if (depth >= opt.max_depth || !family.refinable()) {
      report.verdict = Verdict::Inconclusive;
      return report;
    }
    grid = grid.refined();
  }
}

}  // namespace rgl
