#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "orbitlab/enumerate.hpp"
#include "orbitlab/exact.hpp"
#include "orbitlab/linalg.hpp"
#include "orbitlab/volume.hpp"

namespace orbitlab {

// ---------------------------------------------------------------------------
// Test functions (indicators)

/// {r1 <= |w| < r2, theta1 <= arg w < theta2 (mod 2 pi)} in R^2.
struct RealAnnulusSector {
  Real r1, r2;
  Real theta1 = 0, theta2 = 2 * 3.14159265358979323846264338327950288L;
};

/// {w in Q_p^2 : |w|_p = p^s, unit part p^-s... w = p^-s u with u primitive,
/// u mod p^m in `classes`}. m = 0 means no congruence condition.
struct PadicShellBox {
  long p;
  int s = 0;
  int m = 0;
  std::vector<std::array<std::int64_t, 2>> classes;

  /// Every primitive class mod p^m: the whole shell.
  static PadicShellBox full(long p, int s, int m = 0);
};

/// {r1 <= |w| < r2} in Lambda^k(R^n).
struct RealWedgeAnnulus {
  Real r1, r2;
  int n, k;
};

struct ProductSet {
  RealAnnulusSector real;
  PadicShellBox padic;
};

using TestFunction = std::variant<RealAnnulusSector, PadicShellBox, RealWedgeAnnulus, ProductSet>;

struct NamedTest {
  std::string id;
  TestFunction f;
};

void validate(const TestFunction& f);
std::string describe(const TestFunction& f);

bool contains(const RealAnnulusSector& f, Real x, Real y);

/// Point of Q_p^2 given as p^-e z / q with z integral and q a p-unit.
struct PadicPoint {
  long p;
  long shift;                    // e
  std::array<__int128, 2> z;     // not both zero
  std::int64_t q = 1;
};
bool contains(const PadicShellBox& f, const PadicPoint& w);
bool contains(const PadicShellBox& f, const std::array<ExactScalar, 2>& w);

/// (theta2 - theta1)(r2 - r1): the integral of 1/|w| over the sector.
Real predicted_integral_r2(const RealAnnulusSector& f);
/// p^s (1 - p^-2) times the fraction of primitive classes listed: the mass
/// of the shell box under dw / |w|_p with Z_p^2 of mass 1.
ExactScalar predicted_integral_qp2(const PadicShellBox& f);
/// Integral of 1/|w| over the annulus restricted to the cone of decomposable
/// k-vectors, radial part only: (r2^(c-1) - r1^(c-1)) / (c-1) with
/// c = k(n-k) + 1 its dimension, times the sphere area when the cone is the
/// whole space (k = 1 or k = n - 1).
Real predicted_integral_wedge(const RealWedgeAnnulus& f);
/// Dispatch; products factor as predicted_r2 * predicted_qp2.
Real predicted_integral(const TestFunction& f);

// ---------------------------------------------------------------------------
// Orbit sums

/// Orbit base point: real coordinates (symbolic surds allowed) and, for the
/// S-arithmetic applications, a rational p-adic point.
struct OrbitVector {
  std::vector<Surd> real;
  std::optional<long> p;
  std::vector<ExactScalar> padic;

  std::vector<Real> real_values() const;  // extended precision
  PlacedVector placed() const;
};

/// Evaluates the indicator of f at gamma v.
class PointEvaluator {
 public:
  PointEvaluator(const OrbitVector& v, std::span<const NamedTest> tests);

  /// gamma = p^-level m; adds the hits to counts[i].
  void add(int level, const Mat2& m, std::span<std::uint64_t> counts) const;
  void add(const IntMatrix& gamma, std::span<std::uint64_t> counts) const;

  /// Largest real radius any test can see; infinity if unbounded.
  Real real_reach() const { return reach_; }
  /// p-adic bound shared by all tests, when every test restricts |w|_p.
  std::optional<PadicReach> padic_reach() const;

 private:
  std::vector<NamedTest> tests_;
  std::vector<Real> v_;
  std::optional<long> p_;
  std::array<__int128, 2> vp_num_{};  // v_p = vp_num / (p^vp_shift vp_q)
  long vp_shift_ = 0;
  std::int64_t vp_q_ = 1;
  Real reach_ = 0;
  int k_ = 0;  // wedge degree of the tests
  std::optional<long> max_shell_;
  bool all_padic_ = true;
};

/// (1/normalizer) sum over the sequence of f(gamma v).
Real orbit_sum(std::span<const Mat2> seq, const OrbitVector& v, const TestFunction& f, Real normalizer);
Real orbit_sum(std::span<const Sl2Element> seq, const OrbitVector& v, const TestFunction& f, Real normalizer);
Real orbit_sum(std::span<const IntMatrix> seq, const OrbitVector& v, const TestFunction& f, Real normalizer);

/// Hit counts of every test over the ball, window applied (level 0 only
/// when a window is present). Uses the near-orbit kernel for SL(2) balls
/// when every test has bounded real support, full enumeration otherwise.
std::vector<std::uint64_t> orbit_counts(const BallSpec& spec, const OrbitVector& v, std::span<const NamedTest> tests);

namespace serial {
/// Reference: full enumeration, then evaluation.
std::vector<std::uint64_t> orbit_counts(const BallSpec& spec, const OrbitVector& v, std::span<const NamedTest> tests);
}  // namespace serial

// ---------------------------------------------------------------------------
// Predictions and experiments

enum class Application { Ledrappier, Window, SArithmetic, Wedge };
Application parse_application(std::string_view text);
std::string to_string(Application a);

/// n^2 + k^2 - nk - n
int lambda_exponent(int n, int k);

/// T for Ledrappier and Window; T p^E(ln_p T) for SArithmetic; T^(n^2+k^2-nk-n) for
/// Lambda^k, with T replaced by T p^E(ln_p T) when a prime is given.
Real normalizer(Application a, const Radius& t, std::optional<long> p = std::nullopt, int n = 2, int k = 1);

struct Prediction {
  Real normalizer = 1;
  std::vector<Real> integrals;      // per test, times the window mass
  std::vector<Real> ratio_targets;  // integrals[i] / integrals[0]
  ExactScalar window_mass{1};
};

struct ExperimentConfig {
  Application application = Application::Ledrappier;
  OrbitVector v;
  std::vector<Radius> ladder;
  std::optional<long> p;
  std::optional<CongruenceWindow> window;
  NormKind norm = NormKind::Frobenius;
  int n = 2;
  int k = 1;
  std::vector<NamedTest> tests;
  std::uint64_t seed = 1;
  std::size_t capacity = 100'000'000;
  int cf_depth = 24;
  /// Also count with the full window and report the window/full mass ratio (Window).
  bool compare_full_window = false;
  bool use_serial_reference = false;
};

Prediction predicted_limit(const ExperimentConfig& config, const Radius& t);

struct SlopeFit {
  Real slope = 0;
  Real stderr_ = 0;
};

/// Least-squares slope of log value against log x. Needs >= 5 points with
/// max x / min x >= 8.
SlopeFit slope_fit(const std::vector<std::pair<Real, Real>>& points);

/// Heuristic irrationality: the continued fraction of x does not terminate
/// within `depth` terms.
bool cf_irrational(Real x, int depth);

struct HypothesisCheck {
  bool ok = true;
  bool exact = false;  // decided exactly from the symbolic input
  std::string note;
};

HypothesisCheck check_hypothesis(const ExperimentConfig& config);

struct ReportRow {
  Real t = 0;
  std::string test_id;
  std::uint64_t count = 0;
  Real normalizer = 1;
  Real empirical = 0;        // count / normalizer
  Real predicted = 0;        // integral (times window mass)
  Real predicted_ratio = 0;  // against the first test
  Real empirical_ratio = 0;
  Real ratio_error = 0;      // |empirical_ratio / predicted_ratio - 1|
  Real fitted_constant = 0;  // empirical / predicted
};

struct LevelSummary {
  Real t = 0;
  Real normalizer = 1;
  Real max_ratio_error = 0;
  Real constant_mean = 0;
  Real constant_cv = 0;
  std::optional<Real> window_ratio;  // windowed / full counts over all tests
};

struct SlopeRecord {
  std::string test_id;
  std::string against;  // "normalizer" or "T"
  SlopeFit fit;
};

struct DistributionReport {
  Application application = Application::Ledrappier;
  std::vector<ReportRow> rows;
  std::vector<LevelSummary> levels;
  std::vector<SlopeRecord> slopes;
  HypothesisCheck hypothesis;
  std::optional<OrientationCalibration> orientation;
  ExactScalar window_mass{1};
  std::vector<std::string> flags;
};

DistributionReport run_experiment(const ExperimentConfig& config);

}  // namespace orbitlab
