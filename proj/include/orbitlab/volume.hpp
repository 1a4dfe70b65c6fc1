#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "orbitlab/exact.hpp"
#include "orbitlab/linalg.hpp"

namespace orbitlab {

/// mantissa * sqrt(p)^k, kept with k in {0, 1} (even powers move into the
/// mantissa). Serialized as "a/b*sqrt(p)^k".
class SqrtPower {
 public:
  SqrtPower() = default;
  SqrtPower(ExactScalar mantissa, long p, long k);
  /// sqrt(p)^k
  static SqrtPower power(long p, long k) { return SqrtPower(ExactScalar(1), p, k); }
  static SqrtPower parse(std::string_view text);

  const ExactScalar& mantissa() const { return mantissa_; }
  long prime() const { return p_; }
  long half_exponent() const { return k_; }

  Real to_real() const;
  std::string to_string() const;

  friend SqrtPower operator*(const SqrtPower& a, const SqrtPower& b);
  friend SqrtPower operator/(const SqrtPower& a, const SqrtPower& b);
  /// The prime only matters when the half exponent is odd.
  friend bool operator==(const SqrtPower& a, const SqrtPower& b);

 private:
  ExactScalar mantissa_{0};
  long p_ = 2;
  long k_ = 0;
};

/// A volume: always a real value, plus the exact value when it is known.
struct VolumeValue {
  Real value = 0;
  std::optional<SqrtPower> exact;

  static VolumeValue of(const SqrtPower& x) { return {x.to_real(), x}; }
  /// Exact string when exact, "%.12g" otherwise.
  std::string to_string() const;
};

// ---------------------------------------------------------------------------
// Subgroups H

/// Stab(v) in SL(2, R) with the Frobenius norm: h(s) = I + s v u^T with
/// u = (-v2, v1), Haar measure ds.
struct StabSl2R {
  std::array<Real, 2> v;
};

/// The adjoint image of the upper unipotent group of SL(2) in
/// SL(3, R) x SL(3, Q_p), h(s, s') = (n(s), n(s')), n(s) = [[1,2s,s^2],[0,1,s],[0,0,1]],
/// with max-entry norms. At the real place the max norm is taken in the basis
/// scaled by diag(1, sqrt 2, 1), which makes the real ball {s^2 <= t} for
/// t >= 2. Haar measure: ds with |s| <= L of mass L at infinity, Z_p of
/// mass 1 at p.
struct AdjointUnipotent {
  long p;
};

/// Stab(v_inf) x Stab(v_p) in SL(2, R) x SL(2, Q_p): Frobenius norm at
/// infinity, max-entry norm at p. Each factor is parametrized as in StabSl2R.
struct UnipotentPair {
  std::array<Real, 2> v_inf;
  long p;
  std::array<ExactScalar, 2> v_p;
};

using HDescriptor = std::variant<StabSl2R, AdjointUnipotent, UnipotentPair>;

std::string describe(const HDescriptor& h);
/// Throws std::invalid_argument on a malformed descriptor (v = 0, p not prime).
void validate(const HDescriptor& h);

/// Which translate is measured: {h : h g in G_t} = H cap G_t g^-1 (the
/// skew-ball L_t(g)), or {h : h g^-1 in G_t} = H cap G_t g.
enum class Orientation { SkewBall, Translate };

struct SkewBallQuery {
  HDescriptor h;
  std::optional<PlacedMatrix> g;  // identity when absent; missing places are identity
  Radius t;
  Orientation orientation = Orientation::SkewBall;
};

/// 2 sqrt(t^2 - 2) / |v|^2, and 0 for t < sqrt 2.
Real stab_ball_volume_sl2r(std::array<Real, 2> v, Real t);

VolumeValue skew_ball_volume(const SkewBallQuery& query);

/// Plain ball H_t of the same descriptor.
VolumeValue ball_volume(const HDescriptor& h, const Radius& t);

/// |N|_F / |N g|_F for Stab(v), N = v u^T: the limit of the skew/plain ratio.
Real stab_ratio_closed_form(std::array<Real, 2> v, const RealMatrix& g);

// ---------------------------------------------------------------------------
// Ratio limits

struct Ladder {
  ExactScalar t0{10};
  ExactScalar factor{2};
  int steps = 24;

  std::vector<Radius> values() const;
};

struct RatioLimit {
  bool converged = false;
  /// Residue-class modulus of E(ln_p t) used; 1 without finite places.
  int modulus = 1;
  /// Limit per residue class (index j = E(ln_p t) mod modulus).
  std::vector<std::optional<Real>> class_limits;
  std::vector<Real> ladder_t;
  std::vector<Real> ladder_ratio;
  /// Richardson estimates (single-class ladders only).
  std::vector<Real> accelerated;
  std::optional<Real> closed_form;
  std::string note;

  /// The single limit when there is one class.
  std::optional<Real> limit() const;
};

RatioLimit skew_ball_ratio_limit(const HDescriptor& h, const std::optional<PlacedMatrix>& g,
                                 const Ladder& ladder = {}, Orientation orientation = Orientation::SkewBall,
                                 Real tolerance = 1e-4);

/// Extreme values of skew/plain along the ladder.
std::pair<Real, Real> bounded_ratio_check(const HDescriptor& h, const std::optional<PlacedMatrix>& g,
                                          const std::vector<Radius>& ladder,
                                          Orientation orientation = Orientation::SkewBall);

/// Orientation calibration for Stab(v): the limit ratio L(g) times |w| is
/// constant over g for exactly one of w = g^-1 v and w = g v.
struct OrientationCalibration {
  std::string winner;  // "g^-1 v" or "g v"
  Real cv_inverse = 0;
  Real cv_direct = 0;
  Real constant = 0;  // mean of L(g) |w| for the winner
};

OrientationCalibration calibrate_orientation(std::array<Real, 2> v, const std::vector<RealMatrix>& samples);

// ---------------------------------------------------------------------------
// p-adic balls and asymptotics

/// Haar mass of {g in SL(2, Q_p) : |g|_p <= p^j}, with SL(2, Z_p) of mass 1.
ExactScalar padic_sl2_ball_volume(long p, int j);
/// Mass of the double coset K diag(p^a, p^-a) K: the number of primitive
/// Hermite forms of determinant p^(2a).
ExactScalar hecke_cell_mass(long p, int a);

struct ClassFit {
  Real c = 0;
  Real d = 0;
  int e = 0;
  Real residual = 0;  // RMS of the log residuals
  std::size_t samples = 0;
};

/// Per-class growth c t^d (ln t)^e.
struct AsymptoticProfile {
  int modulus = 1;
  std::vector<std::optional<ClassFit>> classes;
};

struct AsymptoticFit {
  bool ok = false;
  AsymptoticProfile profile;
  /// Worst within-class residual for every candidate modulus tried.
  std::vector<std::pair<int, Real>> candidate_residuals;
  std::string note;
};

struct FitOptions {
  std::optional<long> prime;
  std::vector<int> moduli{1, 2, 3, 4};
  Real tolerance = 1e-2;
  std::size_t min_samples = 8;
};

/// Groups samples (t, volume) by E(ln_p t) mod N and fits
/// log vol = log c + d log t + e log log t per class. The selected modulus is
/// the smallest candidate whose worst class residual is under tolerance.
AsymptoticFit fit_asymptotics(const std::vector<std::pair<Real, Real>>& samples, const FitOptions& options = {});

}  // namespace orbitlab
