#pragma once

// Canonical example families.
//
//   pole_crossing      a_n(t) = 1/(t - 1/n) for n <= K, a_n = n for n > K
//   semibounded_drift  a_n(t) = c + (n - 1) + drift t
//   rotating_spectrum  2x2 blocks R(w n t) diag(s_n, -s_n) R(w n t)*, s_n = n (1 + drift t)
//   dixmier_douady     A(x) = (+)_i c_i r_i(x), r = 2p - 1 for lines p in C^2
//   invertible_polar   U(t) S(t) V(t)* with all singular values >= smin

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgl/error.hpp"
#include "rgl/families.hpp"
#include "rgl/linalg.hpp"
#include "rgl/operator.hpp"

namespace rgl {

struct GeneratorSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& generator_names() {
  static const std::vector<std::string> names{"pole_crossing", "semibounded_drift", "rotating_spectrum",
                                              "dixmier_douady", "invertible_polar"};
  return names;
}

namespace detail {

inline const nlohmann::json& param(const nlohmann::json& params, const char* key) {
  static const nlohmann::json missing;
  if (!params.is_object()) throw Error(ErrorKind::Precondition, "generator params must be an object");
  auto it = params.find(key);
  return it == params.end() ? missing : *it;
}

inline double number_param(const nlohmann::json& params, const char* key, double fallback) {
  const auto& v = param(params, key);
  if (v.is_null()) return fallback;
  if (!v.is_number()) throw Error(ErrorKind::Precondition, std::string("parameter ") + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw Error(ErrorKind::Precondition, std::string("parameter ") + key + " must be finite");
  return x;
}

inline long count_param(const nlohmann::json& params, const char* key, long fallback, long lo, long hi) {
  const auto& v = param(params, key);
  long x = fallback;
  if (!v.is_null()) {
    if (!v.is_number_integer()) throw Error(ErrorKind::Precondition, std::string("parameter ") + key + " must be an integer");
    x = v.get<long>();
  }
  if (x < lo || x > hi)
    throw Error(ErrorKind::Precondition, std::string("parameter ") + key + " = " + std::to_string(x) + " outside [" +
                                             std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return x;
}

inline std::vector<double> list_param(const nlohmann::json& params, const char* key, std::vector<double> fallback,
                                      std::size_t size) {
  const auto& v = param(params, key);
  if (!v.is_null()) {
    if (!v.is_array()) throw Error(ErrorKind::Precondition, std::string("parameter ") + key + " must be an array");
    fallback.clear();
    for (const auto& e : v) {
      if (!e.is_number()) throw Error(ErrorKind::Precondition, std::string("parameter ") + key + " must hold numbers");
      fallback.push_back(e.get<double>());
    }
  }
  if (fallback.size() != size)
    throw Error(ErrorKind::Precondition, std::string("parameter ") + key + " needs " + std::to_string(size) + " entries");
  return fallback;
}

inline void reject_unknown(const nlohmann::json& params, std::initializer_list<const char*> known) {
  for (auto it = params.begin(); it != params.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw Error(ErrorKind::Precondition, "unknown generator parameter '" + it.key() + "'");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline OperatorFamily pole_crossing(std::size_t modes, std::size_t poles, const ParamGrid& grid) {
  if (modes == 0 || poles > modes) throw Error(ErrorKind::Precondition, "pole_crossing needs 1 <= N and K <= N");
  std::vector<ScalarMode> list;
  for (std::size_t n = 1; n <= modes; ++n)
    list.push_back(n <= poles ? ScalarMode::pole(1.0 / static_cast<double>(n), 1.0)
                              : ScalarMode::constant(static_cast<double>(n)));
  return OperatorFamily::from_modes(ModeFamily(std::move(list)), grid,
                                    {"pole_crossing", {{"N", modes}, {"K", poles}}});
}

inline OperatorFamily semibounded_drift(std::size_t modes, double bound, double drift, const ParamGrid& grid) {
  if (modes == 0) throw Error(ErrorKind::Precondition, "semibounded_drift needs N >= 1");
  if (drift * grid.start < 0 || drift * (grid.end + grid.effective_offset()) < 0 ||
      drift * (grid.start + grid.effective_offset()) < 0)
    throw Error(ErrorKind::Precondition, "drift would push eigenvalues below the bound on this grid");
  std::vector<ScalarMode> list;
  for (std::size_t n = 1; n <= modes; ++n)
    list.push_back(ScalarMode::linear(bound + static_cast<double>(n - 1), drift));
  return OperatorFamily::from_modes(ModeFamily(std::move(list)), grid,
                                    {"semibounded_drift", {{"N", modes}, {"c", bound}, {"drift", drift}}});
}

/// Value of rotating_spectrum at t; exposed for closed-form checks.
inline Mat rotating_spectrum_value(std::size_t blocks, double omega, double drift, double t) {
  const Index d = static_cast<Index>(2 * blocks);
  Mat a = Mat::Zero(d, d);
  for (std::size_t k = 0; k < blocks; ++k) {
    const double n = static_cast<double>(k + 1);
    const double s = n * (1.0 + drift * t);
    const double th = omega * n * t;
    const double c = std::cos(2 * th);
    const double sn = std::sin(2 * th);
    const Index i = static_cast<Index>(2 * k);
    // R diag(s, -s) R* = s [[cos 2th, sin 2th], [sin 2th, -cos 2th]]
    a(i, i) = s * c;
    a(i, i + 1) = s * sn;
    a(i + 1, i) = s * sn;
    a(i + 1, i + 1) = -s * c;
  }
  return a;
}

inline OperatorFamily rotating_spectrum(std::size_t blocks, double omega, double drift, const ParamGrid& grid) {
  if (blocks == 0) throw Error(ErrorKind::Precondition, "rotating_spectrum needs at least one block");
  for (double t : {grid.start, grid.end + grid.effective_offset()})
    if (1.0 + drift * t <= 0) throw Error(ErrorKind::Precondition, "drift closes the spectral gap at 0 on this grid");
  return OperatorFamily(
      grid, [=](double t) { return FamilyValue(MatrixOperator(rotating_spectrum_value(blocks, omega, drift, t))); },
      {"rotating_spectrum", {{"N", blocks}, {"omega", omega}, {"drift", drift}}});
}

/// Reflection 2p - 1 for the line spanned by (cos phi, sin phi).
inline Mat line_reflection(double phi) {
  Mat r(2, 2);
  r << std::cos(2 * phi), std::sin(2 * phi), std::sin(2 * phi), -std::cos(2 * phi);
  return r;
}

struct DdSpec {
  std::vector<double> c;     // block scales, one per C^2 factor
  std::vector<double> from;  // line angles at t = 0
  std::vector<double> to;    // line angles at t = 1

  std::size_t factors() const { return c.size(); }

  void validate() const {
    if (c.empty()) throw Error(ErrorKind::Precondition, "dixmier_douady needs m >= 1");
    if (from.size() != c.size() || to.size() != c.size())
      throw Error(ErrorKind::Precondition, "dixmier_douady angle lists must have m entries");
    for (double v : c)
      if (!(v > 0) || !std::isfinite(v)) throw Error(ErrorKind::Precondition, "dixmier_douady scales must be positive");
  }

  /// Half-turn of the first line; the others stay on span(e1).
  static DdSpec half_turn(std::vector<double> scales) {
    DdSpec s{std::move(scales), {}, {}};
    s.from.assign(s.c.size(), 0.0);
    s.to.assign(s.c.size(), 0.0);
    s.to[0] = M_PI / 2;
    return s;
  }

  double angle(std::size_t i, double t) const { return from[i] + t * (to[i] - from[i]); }

  Mat scales() const {
    const Index d = static_cast<Index>(2 * c.size());
    Mat a = Mat::Zero(d, d);
    for (std::size_t i = 0; i < c.size(); ++i) a.block(2 * i, 2 * i, 2, 2) = c[i] * Mat::Identity(2, 2);
    return a;
  }

  Mat reflection(double t) const {
    const Index d = static_cast<Index>(2 * c.size());
    Mat r = Mat::Zero(d, d);
    for (std::size_t i = 0; i < c.size(); ++i) r.block(2 * i, 2 * i, 2, 2) = line_reflection(angle(i, t));
    return r;
  }

  /// A(x) = A r(x).
  Mat value(double t) const { return scales() * reflection(t); }
};

inline OperatorFamily dixmier_douady(const DdSpec& spec, const ParamGrid& grid) {
  spec.validate();
  return OperatorFamily(grid, [spec](double t) { return FamilyValue(MatrixOperator(spec.value(t))); },
                        {"dixmier_douady", {{"m", spec.c.size()}, {"c", spec.c}, {"from", spec.from}, {"to", spec.to}}});
}

struct PolarSpec {
  std::size_t n = 4;
  double smin = 0.1;
  double smax = 10.0;
  double omega = 1.0;
  std::uint64_t seed = 0;
};

inline OperatorFamily invertible_polar(const PolarSpec& spec, const ParamGrid& grid) {
  if (spec.n == 0 || !(spec.smin > 0) || !(spec.smax >= spec.smin))
    throw Error(ErrorKind::Precondition, "invertible_polar needs n >= 1 and 0 < smin <= smax");
  std::mt19937_64 rng(spec.seed);
  const Index n = static_cast<Index>(spec.n);
  const Mat u0 = random_unitary(rng, n);
  const Mat v0 = random_unitary(rng, n);
  const Mat hu = random_hermitian(rng, n);
  const Mat hv = random_hermitian(rng, n);
  std::uniform_real_distribution<double> sv(spec.smin, spec.smax);
  RealVec s0(n), s1(n);
  for (Index i = 0; i < n; ++i) s0(i) = sv(rng);
  for (Index i = 0; i < n; ++i) s1(i) = sv(rng);
  const HermitianEigen eu = hermitian_eigen(hu);
  const HermitianEigen ev = hermitian_eigen(hv);
  const double omega = spec.omega;
  auto flow = [omega](const HermitianEigen& e, double t) {
    Vec phases(e.values.size());
    for (Index i = 0; i < e.values.size(); ++i) phases(i) = std::exp(Complex(0.0, omega * t * e.values(i)));
    return Mat(e.vectors * phases.asDiagonal() * e.vectors.adjoint());
  };
  auto value = [=](double t) {
    // convex combination keeps every singular value in [smin, smax]
    const double w = std::clamp(t, 0.0, 1.0);
    const RealVec s = (1.0 - w) * s0 + w * s1;
    return FamilyValue(MatrixOperator(flow(eu, t) * u0 * s.cast<Complex>().asDiagonal() * v0.adjoint() * flow(ev, t)));
  };
  return OperatorFamily(grid, value,
                        {"invertible_polar",
                         {{"n", spec.n}, {"smin", spec.smin}, {"smax", spec.smax}, {"omega", spec.omega}, {"seed", spec.seed}}});
}

/// Default grid per generator: [0, 1] with a small offset.
inline ParamGrid default_grid(const std::string& name) {
  return ParamGrid{0.0, 1.0, name == "pole_crossing" ? std::size_t{17} : std::size_t{33}, std::nullopt};
}

inline OperatorFamily generate(const GeneratorSpec& spec, const ParamGrid& grid) {
  const auto& p = spec.params.is_null() ? nlohmann::json::object() : spec.params;
  if (!p.is_object()) throw Error(ErrorKind::Precondition, "generator params must be an object");
  using detail::count_param;
  using detail::number_param;
  if (spec.name == "pole_crossing") {
    detail::reject_unknown(p, {"N", "K"});
    const long n = count_param(p, "N", 1, 1, 100000);
    const long k = count_param(p, "K", n, 0, n);
    return pole_crossing(static_cast<std::size_t>(n), static_cast<std::size_t>(k), grid);
  }
  if (spec.name == "semibounded_drift") {
    detail::reject_unknown(p, {"N", "c", "drift"});
    return semibounded_drift(static_cast<std::size_t>(count_param(p, "N", 8, 1, 100000)), number_param(p, "c", 1.0),
                             number_param(p, "drift", 1.0), grid);
  }
  if (spec.name == "rotating_spectrum") {
    detail::reject_unknown(p, {"N", "omega", "drift"});
    return rotating_spectrum(static_cast<std::size_t>(count_param(p, "N", 4, 1, 2000)), number_param(p, "omega", 1.0),
                             number_param(p, "drift", 0.0), grid);
  }
  if (spec.name == "dixmier_douady") {
    detail::reject_unknown(p, {"m", "c", "from", "to"});
    const auto m = static_cast<std::size_t>(count_param(p, "m", 2, 1, 1000));
    std::vector<double> c(m);
    for (std::size_t i = 0; i < m; ++i) c[i] = static_cast<double>(i + 1);
    DdSpec dd = DdSpec::half_turn(detail::list_param(p, "c", c, m));
    dd.from = detail::list_param(p, "from", dd.from, m);
    dd.to = detail::list_param(p, "to", dd.to, m);
    return dixmier_douady(dd, grid);
  }
  if (spec.name == "invertible_polar") {
    detail::reject_unknown(p, {"n", "smin", "smax", "omega"});
    PolarSpec ps;
    ps.n = static_cast<std::size_t>(count_param(p, "n", 4, 1, 2000));
    ps.smin = number_param(p, "smin", 0.1);
    ps.smax = number_param(p, "smax", 10.0);
    ps.omega = number_param(p, "omega", 1.0);
    ps.seed = spec.seed;
    return invertible_polar(ps, grid);
  }
  throw Error(ErrorKind::Precondition, "unknown generator '" + spec.name + "'");
}

// ---------------------------------------------------------------------------
// DD constancy

struct ConjugatedSpread {
  std::string name;
  double spread = 0.0;   // max_i ||f(B_i) - f(B_0)||
  double modulus = 0.0;  // max consecutive Riesz step
};

struct DdReport {
  double deviation = 0.0;    // max ||A(x) r(x) - A||
  double raw_modulus = 0.0;  // max consecutive Riesz step of A(x)
  double raw_spread = 0.0;
  double endpoint_oracle = 0.0;  // 2 c1 / sqrt(1 + c1^2) for a half-turn of the first factor
  std::vector<ConjugatedSpread> conjugated;
};

namespace detail {

inline ConjugatedSpread riesz_spread(const std::string& name, const std::vector<Mat>& family) {
  ConjugatedSpread out{name, 0.0, 0.0};
  std::vector<Mat> transforms;
  transforms.reserve(family.size());
  for (const auto& b : family) transforms.push_back(bounded_transform_matrix(MatrixOperator(b)));
  for (std::size_t i = 0; i < transforms.size(); ++i) {
    out.spread = std::max(out.spread, spectral_norm(transforms[i] - transforms[0]));
    if (i > 0) out.modulus = std::max(out.modulus, spectral_norm(transforms[i] - transforms[i - 1]));
  }
  return out;
}

}  // namespace detail

/// Right multiplication by r(x) makes the family constant; conjugations do not
/// remove its Riesz spread. Conjugations tried: a seeded constant unitary, r(x)
/// itself, and a slow seeded path exp(i t H) with ||H|| = 0.1.
inline DdReport dd_constancy_check(const DdSpec& spec, const ParamGrid& grid, std::uint64_t seed = 0) {
  spec.validate();
  grid.validate();
  const Mat a = spec.scales();
  const Index d = a.rows();
  std::vector<double> xs = grid.nodes();
  std::vector<Mat> raw;
  DdReport out;
  for (double t : xs) {
    const Mat r = spec.reflection(t);
    const Mat ax = a * r;
    out.deviation = std::max(out.deviation, spectral_norm(ax * r - a));
    raw.push_back(ax);
  }
  const ConjugatedSpread base = detail::riesz_spread("raw", raw);
  out.raw_modulus = base.modulus;
  out.raw_spread = base.spread;
  out.endpoint_oracle = 2.0 * spec.c[0] / std::hypot(1.0, spec.c[0]);

  std::mt19937_64 rng(seed);
  const Mat v = random_unitary(rng, d);
  Mat h = random_hermitian(rng, d);
  h *= 0.1 / std::max(hermitian_norm(h), 1e-300);
  const HermitianEigen eh = hermitian_eigen(h);
  std::vector<Mat> constant, reflected, drifting;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    constant.push_back(v * raw[i] * v.adjoint());
    const Mat r = spec.reflection(xs[i]);
    reflected.push_back(r * raw[i] * r.adjoint());
    Vec phases(d);
    for (Index k = 0; k < d; ++k) phases(k) = std::exp(Complex(0.0, xs[i] * eh.values(k)));
    const Mat w = eh.vectors * phases.asDiagonal() * eh.vectors.adjoint();
    drifting.push_back(w * raw[i] * w.adjoint());
  }
  out.conjugated.push_back(detail::riesz_spread("constant-unitary", constant));
  out.conjugated.push_back(detail::riesz_spread("reflection", reflected));
  out.conjugated.push_back(detail::riesz_spread("slow-path", drifting));
  return out;
}

}  // namespace rgl
