#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "orbitlab/exact.hpp"
#include "orbitlab/linalg.hpp"

namespace orbitlab {

/// Row-major 2x2 integer matrix {a, b, c, d}.
using Mat2 = std::array<std::int64_t, 4>;

/// Canonical form of an element of SL(2, Z[1/p]): gamma = p^(-level) * m with
/// m integral, det m = p^(2 level), and m not divisible by p when level > 0.
/// Then |gamma|_p = p^level exactly.
struct Sl2Element {
  int level = 0;
  Mat2 m{};

  ExactMatrix to_exact(long p) const;
  PlacedMatrix to_placed(long p) const;
  friend auto operator<=>(const Sl2Element&, const Sl2Element&) = default;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// |SL(n, Z/p^m)|.
std::int64_t sl_order_mod(long p, int m, int n);
/// All elements of SL(n, Z/p^m), entries in [0, p^m). Brute force; small cases only.
std::vector<std::vector<std::int64_t>> enumerate_sl_mod(long p, int m, int n);

/// Finite union of cosets of the principal congruence subgroup of level p^m
/// in SL(n, Z_p): the computable model of a bounded open p-adic set.
class CongruenceWindow {
 public:
  CongruenceWindow(long p, int m, int n, std::vector<std::vector<std::int64_t>> reps);
  static CongruenceWindow full(long p, int n);
  static CongruenceWindow principal(long p, int m, int n);

  /// Text format: lines "prime P", "exponent M", "dim N", "rep e11 e12 ...";
  /// '#' starts a comment. Exponent 0 may omit reps.
  static CongruenceWindow parse(std::string_view text);
  static CongruenceWindow load(const std::string& path);
  std::string serialize() const;

  long prime() const { return p_; }
  int exponent() const { return m_; }
  int dim() const { return n_; }
  std::int64_t modulus() const { return q_; }
  const std::vector<std::vector<std::int64_t>>& reps() const { return reps_; }

  /// Membership of an integral matrix (entries reduced mod p^m first).
  bool contains(std::span<const std::int64_t> entries) const;
  /// m_p(O) = #reps / |SL(n, Z/p^m)|, with SL(n, Z_p) of mass 1.
  ExactScalar haar_mass() const;

 private:
  std::uint64_t key(std::span<const std::int64_t> entries) const;

  long p_;
  int m_;
  int n_;
  std::int64_t q_;
  std::vector<std::vector<std::int64_t>> reps_;
  std::unordered_set<std::uint64_t> keys_;
};

struct BallSpec {
  int n = 2;
  NormKind real_norm = NormKind::Frobenius;
  Radius t_inf;
  std::optional<long> prime;  // a finite place is present
  bool invert_prime = false;  // lattice is SL(n, Z[1/p]) instead of SL(n, Z)
  std::optional<Radius> t_p;  // defaults to t_inf
  std::optional<CongruenceWindow> window;
  std::size_t capacity = 100'000'000;
  int max_dim = 4;

  void validate() const;
  const Radius& padic_radius() const { return t_p ? *t_p : t_inf; }
  /// Highest level m with p^m <= T_p.
  int max_level() const;
};

// OpenMP kernels. The outer loop (level, first entry) is split into
// independent work units; results are concatenated in unit order, so the
// output order matches the serial reference exactly.
std::vector<Mat2> enum_sl2z(const BallSpec& spec);
std::vector<Sl2Element> enum_sl2_zinvp(const BallSpec& spec);
std::vector<IntMatrix> enum_slnz(const BallSpec& spec);

std::uint64_t count_sl2z(const BallSpec& spec);
std::uint64_t count_sl2_zinvp(const BallSpec& spec);
/// Uses the signed-permutation symmetry of the ball to only visit one first
/// row per orbit.
std::uint64_t count_slnz(const BallSpec& spec);

/// p-adic side of the near-orbit kernel: the point u = num / (p^shift q),
/// q a p-unit, and the bound |p^-level m u|_p <= p^max_shell.
struct PadicReach {
  std::array<std::int64_t, 2> num;
  long shift = 0;
  long max_shell = 0;
};

/// Elements of the SL(2) ball (either lattice) whose real orbit point
/// p^-level m v lies in the box max(|x|, |y|) <= reach, and, when `padic` is
/// given, whose p-adic orbit point obeys its bound. The work is proportional
/// to the strip of first rows with |row . v| <= p^level reach, thinned by the
/// row congruence of the p-adic bound, not to the ball.
std::vector<Sl2Element> near_orbit_sl2(const BallSpec& spec, std::array<Real, 2> v, Real reach,
                                       const std::optional<PadicReach>& padic = std::nullopt);

/// Streaming form of the near-orbit kernel: `visit` runs on the thread that
/// found the element with that thread's `width` counters; the per-thread
/// counters are summed at the end.
std::vector<std::uint64_t> tally_near_orbit_sl2(
    const BallSpec& spec, std::array<Real, 2> v, Real reach, const std::optional<PadicReach>& padic,
    std::size_t width, const std::function<void(const Sl2Element&, std::span<std::uint64_t>)>& visit);

namespace serial {
std::vector<Mat2> enum_sl2z(const BallSpec& spec);
std::vector<Sl2Element> near_orbit_sl2(const BallSpec& spec, std::array<Real, 2> v, Real reach,
                                       const std::optional<PadicReach>& padic = std::nullopt);
std::vector<Sl2Element> enum_sl2_zinvp(const BallSpec& spec);
std::vector<IntMatrix> enum_slnz(const BallSpec& spec);
std::uint64_t count_slnz(const BallSpec& spec);
}  // namespace serial

std::vector<Mat2> filter_window(std::span<const Mat2> seq, const CongruenceWindow& window);
/// Elements with level > 0 are not p-integral and are dropped.
std::vector<Sl2Element> filter_window(std::span<const Sl2Element> seq,
                                      const CongruenceWindow& window);
std::vector<IntMatrix> filter_window(std::span<const IntMatrix> seq,
                                     const CongruenceWindow& window);

namespace detail {

/// Integer thresholds of one level of the SL(2, Z[1/p]) ball:
/// sum of squares <= frob_sq, or every |entry| <= max_abs.
struct LevelBounds {
  int level = 0;
  std::int64_t det = 1;
  std::int64_t p = 0;
  NormKind kind = NormKind::Frobenius;
  std::int64_t frob_sq = 0;
  std::int64_t max_abs = 0;
};

LevelBounds level_bounds(const BallSpec& spec, int level);

/// Visits every x in Z^n with w.x = 1 and |x|^2 <= budget (w primitive,
/// n <= 4) by Fincke-Pohst enumeration of the affine lattice. `emit` gets a
/// span of n entries.
void solve_last_row(std::span<const std::int64_t> w, std::int64_t budget,
                    const std::function<void(std::span<const std::int64_t>)>& emit);
std::uint64_t count_last_row(std::span<const std::int64_t> w, std::int64_t budget,
                             std::int64_t box = 0);

}  // namespace detail

}  // namespace orbitlab
