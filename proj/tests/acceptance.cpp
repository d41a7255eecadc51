// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Oracles are closed forms computed here, never through the code path under check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rgl/rgl.hpp"
#include "test_support.hpp"

using namespace rgl;
using namespace rgl::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[violated: " << what << "] ";
    }
  }
};

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<void(Outcome&)> body;
};

Mat op_matrix(const FamilyValue& v) { return std::get<MatrixOperator>(v).matrix(); }

// ---------------------------------------------------------------------------

void metric_oracle(Outcome& out) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double l = u(rng);
    const double m = u(rng);
    const MatrixOperator a(Mat::Constant(1, 1, Complex(l, 0)));
    const MatrixOperator b(Mat::Constant(1, 1, Complex(m, 0)));
    worst = std::max(worst, std::abs(graph_distance(a, b) - scalar_graph_oracle(l, m)));
    worst = std::max(worst, std::abs(riesz_distance(a, b) - scalar_riesz_oracle(l, m)));
  }
  out.detail << "pairs=1000 max_err=" << worst << " ";
  out.require(worst <= 1e-9, "max error <= 1e-9");
}

// pole at t = 1 for the single mode 1/(t - 1)
double pole_value(double t) { return 1.0 / (t - 1.0); }

void separation_witness(Outcome& out) {
  const OperatorFamily fam = pole_crossing(1, 1, ParamGrid::dyadic(0.0, 1.0, 4));
  double worst_graph_ratio = 0.0;
  double min_riesz = std::numeric_limits<double>::infinity();
  double oracle_gap = 0.0;
  for (int k = 4; k <= 12; ++k) {
    const ParamGrid grid = ParamGrid::dyadic(0.0, 1.0, k);
    const LevelModuli mod = modulus(fam, Metric::Both, grid);
    double og = 0.0;
    double orz = 0.0;
    for (std::size_t i = 0; i + 1 < grid.points; ++i) {
      const double a = pole_value(grid.node(i));
      const double b = pole_value(grid.node(i + 1));
      og = std::max(og, scalar_graph_oracle(a, b));
      orz = std::max(orz, scalar_riesz_oracle(a, b));
    }
    oracle_gap = std::max({oracle_gap, std::abs(og - mod.graph), std::abs(orz - mod.riesz)});
    worst_graph_ratio = std::max(worst_graph_ratio, mod.graph / grid.step());
    min_riesz = std::min(min_riesz, mod.riesz);
    out.require(mod.graph <= 1.2 * grid.step(), "graph modulus <= 1.2 step at k=" + std::to_string(k));
    out.require(mod.riesz >= 1.9, "riesz modulus >= 1.9 at k=" + std::to_string(k));
  }
  out.detail << "k=4..12 max graph/step=" << worst_graph_ratio << " min riesz=" << min_riesz
             << " oracle_dev=" << oracle_gap << " ";
  out.require(oracle_gap <= 1e-12, "library moduli match the scalar oracle");
}

void phi_decay(Outcome& out) {
  const OperatorFamily fam = pole_crossing(1, 1, ParamGrid::dyadic(0.0, 1.0, 4));
  double prev = 0.0;
  double min_ratio = std::numeric_limits<double>::infinity();
  double worst_identity = 0.0;
  for (int k = 4; k <= 10; ++k) {
    const ParamGrid grid = ParamGrid::dyadic(0.0, 1.0, k);
    const PhiResult r = phi_family(fam, grid);
    for (std::size_t i = 0; i < grid.points; ++i) {
      // f(Phi_A) through the SVD, against p'u from the frame
      const Mat f = transform_via_svd(op_matrix(r.output.evaluate_at(grid.node(i))));
      worst_identity = std::max(worst_identity, spectral_norm(f - r.transforms[i]));
    }
    if (k > 4) min_ratio = std::min(min_ratio, prev / r.level.phi_riesz);
    prev = r.level.phi_riesz;
  }
  out.detail << "k=4..10 min decay=" << min_ratio << " last phi riesz=" << prev
             << " max identity residual=" << worst_identity << " ";
  out.require(min_ratio >= 1.8, "decay >= 1.8 per doubling");
  out.require(worst_identity <= 1e-9, "||f(Phi) - p'u|| <= 1e-9");
}

void kernel_preservation(Outcome& out) {
  std::mt19937_64 rng(4);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = random_dim(rng, 1, 12);
    const Index m = random_dim(rng, 1, 12);
    // full rank on every fourth trial, deficient otherwise
    const Index rank = random_dim(rng, 0, std::min(n, m) - (trial % 4 == 0 ? 0 : 1));
    std::uniform_real_distribution<double> scale(0.1, 50.0);
    const Mat a = rank == 0 ? Mat(Mat::Zero(m, n))
                            : Mat(random_gaussian(rng, m, rank) * random_gaussian(rng, rank, n) * scale(rng));
    const MatrixOperator op(a);
    const OperatorFamily fam = OperatorFamily::constant(op, ParamGrid{0.0, 1.0, 2, 0.0});
    const PhiResult r = phi_family(fam, fam.grid());
    const auto before = kernel_cokernel_dims(op);
    const auto after = kernel_cokernel_dims(std::get<MatrixOperator>(r.output.evaluate(0)));
    const bool ok = before.ker == n - rank && before.coker == m - rank && after.ker == before.ker &&
                    after.coker == before.coker;
    if (!ok) ++mismatches;
  }
  out.detail << "operators=200 mismatches=" << mismatches << " ";
  out.require(mismatches == 0, "ker/coker dims equal between A and Phi(A)");
}

void block_witness(Outcome& out) {
  constexpr int kModes = 200;
  std::vector<ScalarMode> modes;
  for (int n = 1; n <= kModes; ++n) modes.push_back(ScalarMode::linear(n, -static_cast<double>(n) * n));
  const ModeFamily fam(modes);
  const auto at = [&](double t) { return std::get<MatrixOperator>(fam.evaluate(t)); };
  const MatrixOperator a0 = at(0.0);
  const double dr = riesz_distance(a0, at(0.02));
  const double dg = graph_distance(a0, at(1e-4));
  // per-mode closed forms, sup over modes
  double oracle_r = 0.0;
  double oracle_g = 0.0;
  for (int n = 1; n <= kModes; ++n) {
    oracle_r = std::max(oracle_r, scalar_riesz_oracle(n, n * (1.0 - n * 0.02)));
    oracle_g = std::max(oracle_g, scalar_graph_oracle(n, n * (1.0 - n * 1e-4)));
  }
  out.detail << "d_R(0,0.02)=" << dr << " d_G(0,1e-4)=" << dg << " oracle_dev="
             << std::max(std::abs(dr - oracle_r), std::abs(dg - oracle_g)) << " ";
  out.require(dr >= 1.9, "d_R(A0, A0.02) >= 1.9");
  out.require(dg <= 0.02, "d_G(A0, A1e-4) <= 0.02");
  out.require(std::abs(dr - oracle_r) <= 1e-10 && std::abs(dg - oracle_g) <= 1e-10, "matrix route matches mode oracle");
}

Mat line_in_c3(double alpha, double beta) {
  Vec v(3);
  v << std::cos(alpha), std::sin(alpha) * std::cos(beta), std::sin(alpha) * std::sin(beta);
  return v * v.adjoint();
}

void trivializer_defect(Outcome& out) {
  std::vector<Mat> path;
  constexpr int kSteps = 64;
  for (int i = 0; i <= kSteps; ++i) path.push_back(line_projection(M_PI * i / kSteps));
  const Trivialization t1 = conjugation_trivializer(PolarizationFamily(path));
  double rotation_dev = 0.0;
  for (int i = 0; i <= kSteps; ++i)
    rotation_dev = std::max(rotation_dev, spectral_norm(t1.unitaries[i] - rotation(-M_PI * i / kSteps)));

  std::vector<Mat> grid;
  constexpr std::size_t kSide = 16;
  for (std::size_t i = 0; i < kSide; ++i)
    for (std::size_t j = 0; j < kSide; ++j)
      grid.push_back(line_in_c3(0.1 + 1.2 * i / (kSide - 1), 0.2 + 2.0 * j / (kSide - 1)));
  const PolarizationFamily pf(grid, {kSide, kSide});
  const Trivialization rows = conjugation_trivializer(pf, SnakeOrientation::Rows);
  const Trivialization cols = conjugation_trivializer(pf, SnakeOrientation::Columns);

  // defects recomputed here from the returned unitaries
  double defect = 0.0;
  double unitarity = 0.0;
  const auto scan = [&](const Trivialization& t, const std::vector<Mat>& ps) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const Mat& u = t.unitaries[i];
      defect = std::max(defect, spectral_norm(u * ps[i] * u.adjoint() - ps.front()));
      const Index d = u.rows();
      unitarity = std::max(unitarity, spectral_norm(u.adjoint() * u - Mat::Identity(d, d)));
    }
  };
  scan(t1, path);
  scan(rows, grid);
  scan(cols, grid);
  out.detail << "path+16x16 max defect=" << defect << " unitarity=" << unitarity << " rotation_dev=" << rotation_dev
             << " ";
  out.require(defect <= 1e-8, "defect <= 1e-8");
  out.require(unitarity <= 1e-10, "unitarity residual <= 1e-10");
  out.require(rotation_dev <= 1e-10, "path unitaries equal the rotation closed form");
}

void selfadjoint_pipeline(Outcome& out) {
  constexpr std::size_t kBlocks = 4;
  constexpr double kDrift = 0.5;
  const OperatorFamily fam = generate({"rotating_spectrum", {{"N", kBlocks}, {"drift", kDrift}}, 0},
                                      ParamGrid{0.0, 1.0, 17, std::nullopt});
  ParamGrid grid = fam.grid();
  double prev = 0.0;
  double min_ratio = std::numeric_limits<double>::infinity();
  double spectrum_dev = 0.0;
  for (int level = 0; level < 4; ++level) {
    const SaResult r = make_riesz_continuous_sa(fam, grid);
    double modulus_after = 0.0;
    Mat prev_f;
    for (std::size_t i = 0; i < grid.points; ++i) {
      const double t = grid.node(i);
      const Mat b = op_matrix(r.output.evaluate_at(t));
      // eigenvalues +-n(1 + drift t)
      std::vector<double> expected;
      for (std::size_t n = 1; n <= kBlocks; ++n) {
        expected.push_back(n * (1.0 + kDrift * t));
        expected.push_back(-(n * (1.0 + kDrift * t)));
      }
      std::sort(expected.begin(), expected.end());
      Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (b + b.adjoint())));
      for (std::size_t k = 0; k < expected.size(); ++k)
        spectrum_dev = std::max(spectrum_dev, std::abs(es.eigenvalues()(static_cast<Index>(k)) - expected[k]) /
                                                  std::max(1.0, std::abs(expected[k])));
      const Mat f = transform_via_svd(b);
      if (i > 0) modulus_after = std::max(modulus_after, spectral_norm(f - prev_f));
      prev_f = f;
    }
    if (level > 0) min_ratio = std::min(min_ratio, prev / modulus_after);
    prev = modulus_after;
    grid = grid.refined();
  }
  out.detail << "levels=4 min decay=" << min_ratio << " last riesz=" << prev << " spectrum_dev=" << spectrum_dev << " ";
  out.require(min_ratio >= 1.8, "conjugated Riesz modulus decays >= 1.8 per doubling");
  out.require(spectrum_dev <= 1e-9, "spectra preserved to 1e-9");
}

// dense scan of d_R / d_G over [0, 1e4]^2
double scanned_semibounded_constant() {
  std::vector<double> xs{0.0};
  constexpr int kPoints = 1500;
  for (int i = 0; i < kPoints; ++i) xs.push_back(1e-4 * std::pow(1e8, static_cast<double>(i) / (kPoints - 1)));
  for (int i = 1; i <= 500; ++i) xs.push_back(20.0 * i);
  double k = 0.0;
  for (double l : xs)
    for (double m : xs) {
      const double g = scalar_graph_oracle(l, m);
      if (g > 0) k = std::max(k, scalar_riesz_oracle(l, m) / g);
    }
  return k;
}

void semibounded_comparison(Outcome& out) {
  const double k = scanned_semibounded_constant();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_excess = -std::numeric_limits<double>::infinity();
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = random_dim(rng, 1, 12);
    const Mat basis = random_unitary(rng, n);
    std::vector<double> c(n), s(n);
    for (Index i = 0; i < n; ++i) {
      c[i] = trial % 3 == 0 ? 0.0 : 100.0 * std::pow(unit(rng), 3.0);
      s[i] = -c[i] + (c[i] + 100.0) * unit(rng);  // stays >= 0 on [0, 1]
    }
    // diagonal in a random basis, so the matrix route is exercised
    const OperatorFamily fam(ParamGrid{0.0, 1.0, 33, 0.0}, [=](double t) {
      RealVec d(n);
      for (Index i = 0; i < n; ++i) d(i) = std::max(0.0, c[i] + s[i] * t);
      return FamilyValue(MatrixOperator(basis * d.cast<Complex>().asDiagonal() * basis.adjoint()));
    });
    const StepTable st = step_table(fam, fam.grid(), Metric::Both);
    for (std::size_t i = 0; i + 1 < st.x.size(); ++i) {
      worst_excess = std::max(worst_excess, st.d_riesz[i] - k * st.d_graph[i]);
      if (st.d_graph[i] > 1e-12) worst_ratio = std::max(worst_ratio, st.d_riesz[i] / st.d_graph[i]);
    }
  }
  out.detail << "scanned K=" << k << " families=100 max d_R/d_G=" << worst_ratio << " max excess=" << worst_excess << " ";
  out.require(worst_excess <= 1e-12, "d_R <= K d_G on every step");
}

void dd_constancy(Outcome& out) {
  double worst_dev = 0.0;
  double min_spread = std::numeric_limits<double>::infinity();
  double oracle_gap = 0.0;
  for (std::size_t m : {1u, 2u, 3u}) {
    for (double c1 : {2.0, 4.0, 10.0}) {
      std::vector<double> c{c1};
      for (std::size_t i = 1; i < m; ++i) c.push_back(1.0 + static_cast<double>(i));
      const DdReport rep = dd_constancy_check(DdSpec::half_turn(c), ParamGrid{0.0, 1.0, 33, 0.0}, 9);
      worst_dev = std::max(worst_dev, rep.deviation);
      oracle_gap = std::max(oracle_gap, std::abs(rep.raw_spread - 2.0 * c1 / std::hypot(1.0, c1)));
      for (const auto& conj : rep.conjugated) min_spread = std::min(min_spread, conj.spread);
    }
  }
  out.detail << "m=1..3 c1 in {2,4,10} deviation=" << worst_dev << " min conjugated spread=" << min_spread
             << " raw_oracle_dev=" << oracle_gap << " ";
  out.require(worst_dev <= 1e-12, "deviation <= 1e-12");
  out.require(min_spread >= 1.5, "conjugated Riesz spread >= 1.5");
  out.require(oracle_gap <= 1e-12, "raw spread equals 2c/sqrt(1+c^2)");
}

void algebraic_suites(Outcome& out) {
  std::mt19937_64 rng(10);
  double idem = 0.0;
  double herm = 0.0;
  double qr_dev = 0.0;
  double round_trip = 0.0;
  double adjoint_dev = 0.0;
  double polar_dev = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = random_dim(rng, 1, 16);
    const Index m = random_dim(rng, 1, 16);
    const Mat a = random_operator(rng, m, n, 100.0);
    const Mat p = graph_projection(MatrixOperator(a)).projection();
    idem = std::max(idem, spectral_norm(p * p - p));
    herm = std::max(herm, spectral_norm(p - p.adjoint()));
    qr_dev = std::max(qr_dev, spectral_norm(p - graph_projection_oracle(a)));
    adjoint_dev = std::max(adjoint_dev, spectral_norm(adjoint_relation(graph_projection(MatrixOperator(a))).projection() -
                                                      graph_projection_oracle(a.adjoint())));

    const Mat b = random_operator(rng, m, n, 10.0);
    const Mat back = inverse_bounded_transform(bounded_transform_matrix(MatrixOperator(b))).matrix();
    round_trip = std::max(round_trip, spectral_norm(back - b) / std::max(spectral_norm(b), 1e-300));

    // polar parts against the SVD: A = U S V*, |A| = U S U*, u = U V*
    const Index d = random_dim(rng, 1, 12);
    Mat s = Mat::Zero(d, d);
    std::uniform_real_distribution<double> sv(0.1, 10.0);
    for (Index i = 0; i < d; ++i) s(i, i) = sv(rng);
    const Mat uu = random_unitary(rng, d);
    const Mat vv = random_unitary(rng, d);
    const PolarTwist pt = polar_twist(MatrixOperator(uu * s * vv.adjoint()));
    polar_dev = std::max({polar_dev, spectral_norm(pt.positive - uu * s * uu.adjoint()) / 10.0,
                          spectral_norm(pt.unitary - uu * vv.adjoint())});
  }
  out.detail << "P^2-P=" << idem << " P-P*=" << herm << " qr_dev=" << qr_dev << " round_trip=" << round_trip
             << " adjoint_dev=" << adjoint_dev << " polar_dev=" << polar_dev << " ";
  out.require(idem <= 1e-10 && herm <= 1e-10, "graph projection identities to 1e-10");
  out.require(qr_dev <= 1e-10, "graph projection equals the QR oracle");
  out.require(round_trip <= 1e-8, "inverse transform round trip to 1e-8");
  out.require(adjoint_dev <= 1e-10, "adjoint relation equals the adjoint's graph to 1e-10");
  out.require(polar_dev <= 1e-10, "polar parts equal the SVD closed form");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "metric oracle agreement", 1.0, metric_oracle},
      {2, "topology separation witness", 5.0, separation_witness},
      {3, "phi makes the pole family Riesz continuous", 10.0, phi_decay},
      {4, "kernel/cokernel preservation", 5.0, kernel_preservation},
      {5, "block family witness", 2.0, block_witness},
      {6, "trivializer defect", 5.0, trivializer_defect},
      {7, "self-adjoint pipeline", 10.0, selfadjoint_pipeline},
      {8, "semibounded comparison", 5.0, semibounded_comparison},
      {9, "dd constancy and conjugated spread", 2.0, dd_constancy},
      {10, "round-trip and algebraic suites", 5.0, algebraic_suites},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome out;
    out.detail.precision(4);
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << "[exception: " << e.what() << "] ";
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.limit_seconds) {
      out.pass = false;
      out.detail << "[over time limit] ";
    }
    if (!out.pass) ++failures;
    std::printf("%s %2d %-44s %.3fs/%.0fs  %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, seconds, c.limit_seconds,
                out.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
