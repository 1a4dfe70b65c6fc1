#include "orbitlab/enumerate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <omp.h>

#include "orbitlab/intmath.hpp"

namespace orbitlab {

using namespace intmath;

// ---------------------------------------------------------------------------
// Sl2Element

ExactMatrix Sl2Element::to_exact(long p) const {
  const ExactScalar scale = pow_p(p, -level);
  ExactMatrix out(2, 2);
  for (std::size_t i = 0; i < 4; ++i) out(i / 2, i % 2) = ExactScalar(static_cast<long>(m[i])) * scale;
  return out;
}

PlacedMatrix Sl2Element::to_placed(long p) const {
  const std::array<Place, 2> places{Place::archimedean(), Place::finite(p)};
  return PlacedMatrix::diagonal(to_exact(p), places);
}

// ---------------------------------------------------------------------------
// Congruence windows

std::int64_t sl_order_mod(long p, int m, int n) {
  if (m == 0) return 1;
  // |SL(n, F_p)| * p^((n^2 - 1)(m - 1))
  i128 order = 1;
  for (int i = 0; i < n * (n - 1) / 2; ++i) order *= p;
  for (int i = 2; i <= n; ++i) order *= static_cast<i128>(ipow(p, i) - 1);
  for (int i = 0; i < (n * n - 1) * (m - 1); ++i) order *= p;
  if (order > static_cast<i128>(INT64_MAX)) throw std::overflow_error("group order overflow");
  return static_cast<std::int64_t>(order);
}

std::vector<std::vector<std::int64_t>> enumerate_sl_mod(long p, int m, int n) {
  const i64 q = ipow(p, m);
  const int entries = n * n;
  long double space = std::pow(static_cast<long double>(q), entries);
  if (space > 5e7L) throw CapacityError("SL(n, Z/p^m) too large for brute force enumeration");
  std::vector<std::vector<std::int64_t>> out;
  std::vector<i64> cur(entries, 0);
  while (true) {
    IntMatrix mat(n, n, cur);
    if (q == 1 || mod(det(mat), q) == 1 % q) out.push_back(cur);
    int i = entries - 1;
    while (i >= 0 && ++cur[i] == q) cur[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

CongruenceWindow::CongruenceWindow(long p, int m, int n, std::vector<std::vector<std::int64_t>> reps)
    : p_(p), m_(m), n_(n), reps_(std::move(reps)) {
  if (!is_prime(p)) throw std::invalid_argument("window prime is not prime: " + std::to_string(p));
  if (m < 0) throw std::invalid_argument("window exponent must be >= 0");
  if (n < 1) throw std::invalid_argument("window dimension must be >= 1");
  q_ = ipow(p, m);
  if (std::pow(static_cast<long double>(q_), n * n) > 4e18L)
    throw std::invalid_argument("window modulus too large");
  if (m == 0 && reps_.empty()) reps_.push_back(std::vector<std::int64_t>(n * n, 0));
  if (reps_.empty()) throw std::invalid_argument("window has no coset representatives");
  for (auto& r : reps_) {
    if (static_cast<int>(r.size()) != n * n)
      throw std::invalid_argument("coset representative has wrong size");
    for (auto& x : r) x = mod(x, q_);
    if (q_ > 1 && mod(det(IntMatrix(n, n, r)), q_) != 1)
      throw std::invalid_argument("coset representative does not have determinant 1 mod p^m");
    if (!keys_.insert(key(r)).second)
      throw std::invalid_argument("duplicate coset representative");
  }
}

CongruenceWindow CongruenceWindow::full(long p, int n) { return CongruenceWindow(p, 0, n, {}); }

CongruenceWindow CongruenceWindow::principal(long p, int m, int n) {
  std::vector<std::int64_t> id(n * n, 0);
  for (int i = 0; i < n; ++i) id[i * n + i] = 1;
  return CongruenceWindow(p, m, n, {id});
}

CongruenceWindow CongruenceWindow::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  long p = 0;
  int m = -1, n = 2;
  std::vector<std::vector<std::int64_t>> reps;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    auto fail = [&](const std::string& what) {
      throw std::invalid_argument("window line " + std::to_string(lineno) + ": " + what);
    };
    if (word == "prime") {
      if (!(ls >> p)) fail("expected prime value");
    } else if (word == "exponent") {
      if (!(ls >> m)) fail("expected exponent value");
    } else if (word == "dim") {
      if (!(ls >> n)) fail("expected dimension");
    } else if (word == "rep") {
      std::vector<std::int64_t> r;
      std::int64_t x;
      while (ls >> x) r.push_back(x);
      if (!ls.eof()) fail("non-integer entry in rep");
      reps.push_back(std::move(r));
    } else {
      fail("unknown keyword '" + word + "'");
    }
  }
  if (p == 0) throw std::invalid_argument("window: missing 'prime'");
  if (m < 0) throw std::invalid_argument("window: missing 'exponent'");
  return CongruenceWindow(p, m, n, std::move(reps));
}

CongruenceWindow CongruenceWindow::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read window file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string CongruenceWindow::serialize() const {
  std::ostringstream out;
  out << "prime " << p_ << "\nexponent " << m_ << "\ndim " << n_ << "\n";
  for (const auto& r : reps_) {
    out << "rep";
    for (auto x : r) out << ' ' << x;
    out << "\n";
  }
  return out.str();
}

std::uint64_t CongruenceWindow::key(std::span<const std::int64_t> entries) const {
  std::uint64_t k = 0;
  for (auto x : entries) k = k * static_cast<std::uint64_t>(q_) + static_cast<std::uint64_t>(mod(x, q_));
  return k;
}

bool CongruenceWindow::contains(std::span<const std::int64_t> entries) const {
  if (static_cast<int>(entries.size()) != n_ * n_)
    throw std::invalid_argument("window dimension mismatch");
  if (q_ == 1) return true;
  return keys_.count(key(entries)) != 0;
}

ExactScalar CongruenceWindow::haar_mass() const {
  return ExactScalar(static_cast<long>(reps_.size()), static_cast<long>(sl_order_mod(p_, m_, n_)));
}

// ---------------------------------------------------------------------------
// Ball specification

void BallSpec::validate() const {
  if (n < 2) throw std::invalid_argument("dimension must be >= 2");
  if (n > max_dim)
    throw std::invalid_argument("dimension " + std::to_string(n) + " exceeds the configured maximum " +
                                std::to_string(max_dim));
  if (t_inf.square() < ExactScalar(1)) throw std::invalid_argument("radius T must be >= 1");
  if (prime && !is_prime(*prime)) throw std::invalid_argument("not a prime: " + std::to_string(*prime));
  if (invert_prime && !prime) throw std::invalid_argument("Z[1/p] lattice needs a prime");
  if (t_p && !prime) throw std::invalid_argument("p-adic radius given without a prime");
  if (t_p && t_p->square() < ExactScalar(1)) throw std::invalid_argument("radius T_p must be >= 1");
  if (window) {
    if (!prime) throw std::invalid_argument("a congruence window needs a finite place");
    if (window->prime() != *prime) throw std::invalid_argument("window prime differs from ball prime");
    if (window->dim() != n) throw std::invalid_argument("window dimension differs from ball dimension");
  }
}

int BallSpec::max_level() const {
  if (!invert_prime) return 0;
  return static_cast<int>(padic_radius().floor_log(*prime));
}

namespace detail {

LevelBounds level_bounds(const BallSpec& spec, int level) {
  LevelBounds b;
  b.level = level;
  b.kind = spec.real_norm;
  b.p = spec.prime.value_or(0);
  b.det = level == 0 ? 1 : ipow(b.p, 2 * level);
  // |p^-m M|^2 <= T^2  <=>  |M|^2 <= p^(2m) T^2; integer left side, so floor.
  const ExactScalar scaled = spec.t_inf.square() * (level == 0 ? ExactScalar(1) : pow_p(b.p, 2 * level));
  mpz_class floor_sq;
  mpz_fdiv_q(floor_sq.get_mpz_t(), scaled.numerator().get_mpz_t(), scaled.denominator().get_mpz_t());
  if (mpz_sizeinbase(floor_sq.get_mpz_t(), 2) > 60) throw CapacityError("ball radius too large");
  b.frob_sq = floor_sq.get_si();
  b.max_abs = floor_sqrt(scaled).get_si();
  return b;
}

}  // namespace detail

namespace {

using detail::LevelBounds;

i128 sq(i64 x) { return static_cast<i128>(x) * x; }

bool entries_ok(const LevelBounds& L, i64 a, i64 b, i64 c, i64 d) {
  if (L.kind == NormKind::Frobenius) return sq(a) + sq(b) + sq(c) + sq(d) <= L.frob_sq;
  return std::max({std::llabs(a), std::llabs(b), std::llabs(c), std::llabs(d)}) <= L.max_abs;
}

// Range of t with lo <= x0 + t*u <= hi (u != 0).
void clip_linear(i64 x0, i64 u, i64 lo, i64 hi, i64& tlo, i64& thi) {
  if (u > 0) {
    tlo = std::max(tlo, ceil_div(lo - x0, u));
    thi = std::min(thi, floor_div(hi - x0, u));
  } else {
    tlo = std::max(tlo, ceil_div(hi - x0, u));
    thi = std::min(thi, floor_div(lo - x0, u));
  }
}

// All second columns (b, d) completing the first column (a, c) to an
// integral matrix of determinant L.det inside the level bounds, in increasing
// order of the line parameter. `clip` may narrow [tlo, thi] further given the
// line (b0, d0) + t (a1, c1).
struct NoClip {
  void operator()(i64, i64, i64, i64, i64&, i64&) const {}
};

template <class F, class Clip = NoClip>
void expand_first_column(const LevelBounds& L, i64 a, i64 c, F&& emit, Clip&& clip = {}) {
  if (a == 0 && c == 0) return;
  const i64 g = igcd(a, c);
  if (L.det % g != 0) return;
  const i64 a1 = a / g, c1 = c / g;
  const ExtGcd e = ext_gcd(a1, c1);  // a1 x + c1 y = 1
  const i64 k = L.det / g;
  i64 b0 = -k * e.y, d0 = k * e.x;
  i64 tlo = INT64_MIN / 4, thi = INT64_MAX / 4;
  if (L.kind == NormKind::Frobenius) {
    const i64 budget = L.frob_sq - static_cast<i64>(sq(a) + sq(c));
    if (budget < 1) return;
    const long double uu = static_cast<long double>(sq(a1) + sq(c1));
    const long double uw = static_cast<long double>(a1) * b0 + static_cast<long double>(c1) * d0;
    const long double centre = -uw / uu;
    const i64 shift = std::llround(centre);
    b0 += shift * a1;
    d0 += shift * c1;
    const long double uw2 = static_cast<long double>(a1) * b0 + static_cast<long double>(c1) * d0;
    const long double ww = static_cast<long double>(b0) * b0 + static_cast<long double>(d0) * d0;
    const long double disc = uw2 * uw2 - uu * (ww - static_cast<long double>(budget));
    const long double half = std::sqrt(std::max(0.0L, disc)) / uu;
    const long double c2 = -uw2 / uu;
    tlo = static_cast<i64>(std::floor(c2 - half)) - 1;
    thi = static_cast<i64>(std::ceil(c2 + half)) + 1;
  } else {
    if (a1 != 0) clip_linear(b0, a1, -L.max_abs, L.max_abs, tlo, thi);
    else if (std::llabs(b0) > L.max_abs) return;
    if (c1 != 0) clip_linear(d0, c1, -L.max_abs, L.max_abs, tlo, thi);
    else if (std::llabs(d0) > L.max_abs) return;
  }
  clip(b0, d0, a1, c1, tlo, thi);
  const bool need_primitive = L.level > 0 && a % L.p == 0 && c % L.p == 0;
  for (i64 t = tlo; t <= thi; ++t) {
    const i64 b = b0 + t * a1, d = d0 + t * c1;
    if (!entries_ok(L, a, b, c, d)) continue;
    if (need_primitive && b % L.p == 0 && d % L.p == 0) continue;
    emit(b, d);
  }
}

i64 first_entry_bound(const LevelBounds& L) {
  return L.kind == NormKind::Frobenius ? isqrt(std::max<i64>(0, L.frob_sq - 1)) : L.max_abs;
}

i64 second_entry_bound(const LevelBounds& L, i64 a) {
  if (L.kind == NormKind::MaxEntry) return L.max_abs;
  const i128 rest = static_cast<i128>(L.frob_sq) - 1 - sq(a);
  return rest < 0 ? -1 : isqrt(rest);
}

struct Sl2Unit {
  int level;
  i64 a;
};

std::vector<LevelBounds> sl2_levels(const BallSpec& spec) {
  std::vector<LevelBounds> levels;
  for (int m = 0; m <= spec.max_level(); ++m) levels.push_back(detail::level_bounds(spec, m));
  return levels;
}

std::vector<Sl2Unit> sl2_units(const std::vector<LevelBounds>& levels) {
  std::vector<Sl2Unit> units;
  for (const auto& L : levels) {
    const i64 A = first_entry_bound(L);
    for (i64 a = -A; a <= A; ++a) units.push_back({L.level, a});
  }
  return units;
}

template <class F>
void run_sl2_unit(const LevelBounds& L, i64 a, F&& emit) {
  const i64 C = second_entry_bound(L, a);
  for (i64 c = -C; c <= C; ++c)
    expand_first_column(L, a, c, [&](i64 b, i64 d) { emit(Mat2{a, b, c, d}); });
}

template <class Out, class Make>
std::vector<Out> collect_sl2(const BallSpec& spec, Make make) {
  const auto levels = sl2_levels(spec);
  const auto units = sl2_units(levels);
  std::vector<std::vector<Out>> parts(units.size());
  std::atomic<std::size_t> total{0};
  std::atomic<bool> overflow{false};
  const std::size_t capacity = spec.capacity;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (overflow.load(std::memory_order_relaxed)) continue;
    const auto& L = levels[units[u].level];
    run_sl2_unit(L, units[u].a, [&](const Mat2& m) { parts[u].push_back(make(L.level, m)); });
    if (total.fetch_add(parts[u].size()) + parts[u].size() > capacity) overflow = true;
  }
  if (overflow) throw CapacityError("enumeration exceeds capacity of " + std::to_string(capacity));
  std::vector<Out> out;
  out.reserve(total.load());
  for (auto& part : parts) out.insert(out.end(), part.begin(), part.end());
  return out;
}

std::uint64_t count_sl2(const BallSpec& spec) {
  const auto levels = sl2_levels(spec);
  const auto units = sl2_units(levels);
  std::uint64_t total = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : total)
  for (std::size_t u = 0; u < units.size(); ++u) {
    std::uint64_t local = 0;
    run_sl2_unit(levels[units[u].level], units[u].a, [&](const Mat2&) { ++local; });
    total += local;
  }
  return total;
}

void require_sl2(const BallSpec& spec, bool invert) {
  spec.validate();
  if (spec.n != 2) throw std::invalid_argument("SL(2) enumeration needs n = 2");
  if (spec.invert_prime != invert)
    throw std::invalid_argument(invert ? "SL(2, Z[1/p]) enumeration needs a denominator prime"
                                       : "SL(2, Z) enumeration does not allow a denominator prime");
}

}  // namespace

std::vector<Mat2> enum_sl2z(const BallSpec& spec) {
  require_sl2(spec, false);
  return collect_sl2<Mat2>(spec, [](int, const Mat2& m) { return m; });
}

std::vector<Sl2Element> enum_sl2_zinvp(const BallSpec& spec) {
  require_sl2(spec, true);
  return collect_sl2<Sl2Element>(spec, [](int level, const Mat2& m) { return Sl2Element{level, m}; });
}

std::uint64_t count_sl2z(const BallSpec& spec) {
  require_sl2(spec, false);
  return count_sl2(spec);
}

std::uint64_t count_sl2_zinvp(const BallSpec& spec) {
  require_sl2(spec, true);
  return count_sl2(spec);
}

// ---------------------------------------------------------------------------
// Near-orbit kernel

namespace {

bool near_box(const Mat2& m, Real scale, std::array<Real, 2> v, Real reach) {
  const Real x = (static_cast<Real>(m[0]) * v[0] + static_cast<Real>(m[1]) * v[1]) * scale;
  const Real y = (static_cast<Real>(m[2]) * v[0] + static_cast<Real>(m[3]) * v[1]) * scale;
  return std::fabs(x) <= reach && std::fabs(y) <= reach;
}

// p^-level; det = p^(2 level).
Real level_scale(const LevelBounds& L) { return L.level == 0 ? 1.0L : 1.0L / std::sqrt(static_cast<Real>(L.det)); }

i64 clamp_floor(long double x) { return static_cast<i64>(std::floor(std::clamp(x, -4e18L, 4e18L))); }
i64 clamp_ceil(long double x) { return static_cast<i64>(std::ceil(std::clamp(x, -4e18L, 4e18L))); }

// t-range with |y0 + t delta| <= w, padded against rounding in y0.
void clip_strip(long double y0, long double delta, long double w, i64& tlo, i64& thi) {
  if (delta == 0) {
    if (std::fabs(y0) > w + 1) thi = tlo - 1;
    return;
  }
  long double lo = (-w - y0) / delta, hi = (w - y0) / delta;
  if (lo > hi) std::swap(lo, hi);
  const long double pad = 2 + std::fabs(y0) * 1e-15L / std::fabs(delta);
  tlo = std::max(tlo, clamp_floor(lo - pad));
  thi = std::min(thi, clamp_ceil(hi + pad));
}

// Row congruence alpha x + beta y = 0 mod q (q a power of p) for one level.
struct RowCongruence {
  i64 q = 1;  // 1: no condition
  i64 alpha = 0, beta = 0;

  bool holds(i64 x, i64 y) const {
    return q == 1 || (static_cast<i128>(alpha) * x + static_cast<i128>(beta) * y) % q == 0;
  }
};

RowCongruence row_congruence(const LevelBounds& L, const std::optional<PadicReach>& padic) {
  RowCongruence rc;
  if (!padic) return rc;
  const long e = L.level + padic->shift - padic->max_shell;
  if (e <= 0) return rc;
  rc.q = ipow(L.p, static_cast<int>(e));
  rc.alpha = mod(padic->num[0], rc.q);
  rc.beta = mod(padic->num[1], rc.q);
  return rc;
}

bool padic_ok(const RowCongruence& rc, const Mat2& m) {
  return rc.holds(m[0], m[1]) && rc.holds(m[2], m[3]);
}

// Inner values y with alpha_o x + alpha_i y = 0 mod q, as y = start + k step;
// false when x admits none.
bool inner_progression(i64 coeff_outer, i64 coeff_inner, i64 q, i64 x, i64& start, i64& step) {
  if (q == 1) {
    start = 0, step = 1;
    return true;
  }
  const i64 g = std::gcd(coeff_inner, q);
  const i64 rhs = mod128(-static_cast<i128>(coeff_outer) * x, q);
  if (rhs % g != 0) return false;
  step = q / g;
  start = step == 1 ? 0 : static_cast<i64>(static_cast<i128>(rhs / g) * inv_mod(coeff_inner / g, step) % step);
  return true;
}

// Rows (a, b) with |a v1 + b v2| <= w, then second rows on the strip. The
// coordinate whose coefficient in v is smaller is the outer loop.
template <class F>
void run_near_unit(const LevelBounds& L, i64 outer, std::array<Real, 2> v, Real reach, const RowCongruence& rc,
                   F&& emit) {
  const Real scale = level_scale(L);
  const long double w = reach / scale * (1 + 1e-12L) + 1e-9L;
  const bool outer_is_a = std::fabs(v[1]) >= std::fabs(v[0]);
  const long double vo = outer_is_a ? v[0] : v[1], vi = outer_is_a ? v[1] : v[0];
  const i64 B = second_entry_bound(L, outer);
  if (B < 0) return;
  long double lo = (-w - outer * vo) / vi, hi = (w - outer * vo) / vi;
  if (lo > hi) std::swap(lo, hi);
  const i64 ilo = std::max(-B, clamp_floor(lo) - 1), ihi = std::min(B, clamp_ceil(hi) + 1);
  i64 start = 0, step = 1;
  if (!inner_progression(outer_is_a ? rc.alpha : rc.beta, outer_is_a ? rc.beta : rc.alpha, rc.q, outer, start,
                         step))
    return;
  const i64 first = ilo + mod(start - ilo, step);
  for (i64 inner = first; inner <= ihi; inner += step) {
    const i64 a = outer_is_a ? outer : inner, b = outer_is_a ? inner : outer;
    auto clip = [&](i64 c0, i64 d0, i64 a1, i64 b1, i64& tlo, i64& thi) {
      const long double y0 = static_cast<long double>(c0) * v[0] + static_cast<long double>(d0) * v[1];
      const long double delta = static_cast<long double>(a1) * v[0] + static_cast<long double>(b1) * v[1];
      clip_strip(y0, delta, w, tlo, thi);
    };
    // The first row plays the first column: a y - x b = det makes (x, y) the second row.
    expand_first_column(
        L, a, b,
        [&](i64 c, i64 d) {
          const Mat2 m{a, b, c, d};
          if (near_box(m, scale, v, reach) && rc.holds(c, d)) emit(m);
        },
        clip);
  }
}

}  // namespace

std::vector<Sl2Element> near_orbit_sl2(const BallSpec& spec, std::array<Real, 2> v, Real reach,
                                       const std::optional<PadicReach>& padic) {
  require_sl2(spec, spec.invert_prime);
  if (v[0] == 0 && v[1] == 0) throw std::invalid_argument("near-orbit kernel needs v != 0");
  if (!(reach > 0)) throw std::invalid_argument("near-orbit reach must be positive");
  const auto levels = sl2_levels(spec);
  std::vector<RowCongruence> congruences;
  for (const auto& L : levels) congruences.push_back(row_congruence(L, padic));
  // The outer coordinate obeys the same bound as a first entry.
  const auto units = sl2_units(levels);
  std::vector<std::vector<Sl2Element>> parts(units.size());
  std::atomic<std::size_t> total{0};
  std::atomic<bool> overflow{false};
  const std::size_t capacity = spec.capacity;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (overflow.load(std::memory_order_relaxed)) continue;
    const auto& L = levels[units[u].level];
    run_near_unit(L, units[u].a, v, reach, congruences[units[u].level],
                  [&](const Mat2& m) { parts[u].push_back({L.level, m}); });
    if (total.fetch_add(parts[u].size()) + parts[u].size() > capacity) overflow = true;
  }
  if (overflow) throw CapacityError("near-orbit set exceeds capacity of " + std::to_string(capacity));
  std::vector<Sl2Element> out;
  out.reserve(total.load());
  for (auto& part : parts) out.insert(out.end(), part.begin(), part.end());
  return out;
}

std::vector<std::uint64_t> tally_near_orbit_sl2(
    const BallSpec& spec, std::array<Real, 2> v, Real reach, const std::optional<PadicReach>& padic,
    std::size_t width, const std::function<void(const Sl2Element&, std::span<std::uint64_t>)>& visit) {
  require_sl2(spec, spec.invert_prime);
  if (v[0] == 0 && v[1] == 0) throw std::invalid_argument("near-orbit kernel needs v != 0");
  if (!(reach > 0)) throw std::invalid_argument("near-orbit reach must be positive");
  const auto levels = sl2_levels(spec);
  std::vector<RowCongruence> congruences;
  for (const auto& L : levels) congruences.push_back(row_congruence(L, padic));
  const auto units = sl2_units(levels);
  std::vector<std::uint64_t> total(width, 0);
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(width, 0);
#pragma omp for schedule(dynamic, 8)
    for (std::size_t u = 0; u < units.size(); ++u) {
      const auto& L = levels[units[u].level];
      run_near_unit(L, units[u].a, v, reach, congruences[units[u].level],
                    [&](const Mat2& m) { visit(Sl2Element{L.level, m}, local); });
    }
#pragma omp critical
    for (std::size_t i = 0; i < width; ++i) total[i] += local[i];
  }
  return total;
}

// ---------------------------------------------------------------------------
// Affine lattice enumeration for the last row of SL(n, Z)

namespace detail {
namespace {

constexpr int kMaxN = 4;
using Vec = std::array<i64, kMaxN>;

i128 dot(const Vec& x, const Vec& y, int n) {
  i128 s = 0;
  for (int i = 0; i < n; ++i) s += static_cast<i128>(x[i]) * y[i];
  return s;
}

// Unimodular column reduction of the row vector w. Returns x0 with
// w.x0 = 1 and a basis of the integer kernel of w.
bool affine_solution(std::span<const i64> w, int n, Vec& x0, std::array<Vec, kMaxN>& kernel) {
  Vec ww{};
  std::array<Vec, kMaxN> cols{};
  for (int i = 0; i < n; ++i) {
    ww[i] = w[i];
    cols[i] = Vec{};
    cols[i][i] = 1;
  }
  while (true) {
    int piv = -1;
    for (int i = 0; i < n; ++i)
      if (ww[i] != 0 && (piv < 0 || std::llabs(ww[i]) < std::llabs(ww[piv]))) piv = i;
    if (piv < 0) return false;
    bool done = true;
    for (int j = 0; j < n; ++j) {
      if (j == piv || ww[j] == 0) continue;
      const i64 q = ww[j] / ww[piv];
      ww[j] -= q * ww[piv];
      for (int r = 0; r < n; ++r) cols[j][r] -= q * cols[piv][r];
      if (ww[j] != 0) done = false;
    }
    if (done) {
      if (std::llabs(ww[piv]) != 1) return false;
      for (int r = 0; r < n; ++r) x0[r] = ww[piv] * cols[piv][r];
      int k = 0;
      for (int j = 0; j < n; ++j)
        if (j != piv) kernel[k++] = cols[j];
      return true;
    }
  }
}

void lagrange_reduce(Vec& b1, Vec& b2, int n) {
  while (true) {
    i128 n1 = dot(b1, b1, n), n2 = dot(b2, b2, n);
    if (n2 < n1) {
      std::swap(b1, b2);
      std::swap(n1, n2);
    }
    const i128 ip = dot(b1, b2, n);
    // nearest integer to ip / n1
    const long double ratio = static_cast<long double>(ip) / static_cast<long double>(n1);
    const i64 mu = std::llround(ratio);
    if (mu == 0) return;
    for (int i = 0; i < n; ++i) b2[i] -= mu * b1[i];
    if (dot(b2, b2, n) >= n2) {
      // rounding could not shorten b2 further
      return;
    }
  }
}

void lll_reduce(std::array<Vec, kMaxN>& b, int d, int n) {
  auto gram_schmidt = [&](std::array<std::array<long double, kMaxN>, kMaxN>& mu,
                          std::array<long double, kMaxN>& B) {
    std::array<std::array<long double, kMaxN>, kMaxN> bs{};
    for (int i = 0; i < d; ++i) {
      for (int r = 0; r < n; ++r) bs[i][r] = static_cast<long double>(b[i][r]);
      for (int j = 0; j < i; ++j) {
        long double ip = 0;
        for (int r = 0; r < n; ++r) ip += static_cast<long double>(b[i][r]) * bs[j][r];
        mu[i][j] = ip / B[j];
        for (int r = 0; r < n; ++r) bs[i][r] -= mu[i][j] * bs[j][r];
      }
      B[i] = 0;
      for (int r = 0; r < n; ++r) B[i] += bs[i][r] * bs[i][r];
    }
  };
  std::array<std::array<long double, kMaxN>, kMaxN> mu{};
  std::array<long double, kMaxN> B{};
  gram_schmidt(mu, B);
  int k = 1;
  int guard = 0;
  while (k < d && guard++ < 10000) {
    for (int j = k - 1; j >= 0; --j) {
      const i64 q = std::llround(mu[k][j]);
      if (q != 0) {
        for (int r = 0; r < n; ++r) b[k][r] -= q * b[j][r];
        gram_schmidt(mu, B);
      }
    }
    if (B[k] >= (0.99L - mu[k][k - 1] * mu[k][k - 1]) * B[k - 1]) {
      ++k;
    } else {
      std::swap(b[k], b[k - 1]);
      gram_schmidt(mu, B);
      k = std::max(k - 1, 1);
    }
  }
}

// Fincke-Pohst over y in Z^d for |x0 + sum y_i b_i|^2 <= budget.
template <class F>
void enumerate_affine(const Vec& x0, const std::array<Vec, kMaxN>& b, int d, int n, i64 budget,
                      F&& emit) {
  std::array<std::array<long double, kMaxN>, kMaxN> bs{}, mu{};
  std::array<long double, kMaxN> B{}, tau{};
  for (int i = 0; i < d; ++i) {
    for (int r = 0; r < n; ++r) bs[i][r] = static_cast<long double>(b[i][r]);
    for (int j = 0; j < i; ++j) {
      long double ip = 0;
      for (int r = 0; r < n; ++r) ip += static_cast<long double>(b[i][r]) * bs[j][r];
      mu[i][j] = ip / B[j];
      for (int r = 0; r < n; ++r) bs[i][r] -= mu[i][j] * bs[j][r];
    }
    B[i] = 0;
    for (int r = 0; r < n; ++r) B[i] += bs[i][r] * bs[i][r];
  }
  // Target c = -x0 projected onto the span.
  long double perp = 0;
  for (int r = 0; r < n; ++r) perp += static_cast<long double>(x0[r]) * x0[r];
  for (int i = 0; i < d; ++i) {
    long double ip = 0;
    for (int r = 0; r < n; ++r) ip -= static_cast<long double>(x0[r]) * bs[i][r];
    tau[i] = ip / B[i];
    perp -= tau[i] * tau[i] * B[i];
  }
  const long double slack = 1e-9L * (1 + static_cast<long double>(budget));
  const long double rem0 = static_cast<long double>(budget) - perp + slack;
  if (rem0 < 0) return;
  std::array<i64, kMaxN> y{};
  Vec x{};
  auto recurse = [&](auto&& self, int i, long double rem) -> void {
    long double centre = tau[i];
    for (int j = i + 1; j < d; ++j) centre -= mu[j][i] * static_cast<long double>(y[j]);
    const long double half = std::sqrt(std::max(0.0L, rem) / B[i]);
    const i64 lo = static_cast<i64>(std::ceil(centre - half - 1e-9L));
    const i64 hi = static_cast<i64>(std::floor(centre + half + 1e-9L));
    for (i64 v = lo; v <= hi; ++v) {
      y[i] = v;
      const long double dev = static_cast<long double>(v) - centre;
      const long double next = rem - dev * dev * B[i];
      if (i == 0) {
        for (int r = 0; r < n; ++r) {
          x[r] = x0[r];
          for (int j = 0; j < d; ++j) x[r] += y[j] * b[j][r];
        }
        if (dot(x, x, n) <= budget) emit(x);
      } else {
        self(self, i - 1, next + slack);
      }
    }
  };
  recurse(recurse, d - 1, rem0);
}

template <class F>
void last_row_impl(std::span<const i64> w, i64 budget, F&& emit) {
  const int n = static_cast<int>(w.size());
  if (n < 2 || n > kMaxN) throw std::invalid_argument("last-row solver supports 2 <= n <= 4");
  Vec x0{};
  std::array<Vec, kMaxN> kernel{};
  if (!affine_solution(w, n, x0, kernel)) return;
  const int d = n - 1;
  if (d == 2) lagrange_reduce(kernel[0], kernel[1], n);
  else if (d == 3) lll_reduce(kernel, d, n);
  enumerate_affine(x0, kernel, d, n, budget, emit);
}

}  // namespace

void solve_last_row(std::span<const std::int64_t> w, std::int64_t budget,
                    const std::function<void(std::span<const std::int64_t>)>& emit) {
  const int n = static_cast<int>(w.size());
  last_row_impl(w, budget, [&](const Vec& x) { emit(std::span<const i64>(x.data(), n)); });
}

std::uint64_t count_last_row(std::span<const std::int64_t> w, std::int64_t budget, std::int64_t box) {
  const int n = static_cast<int>(w.size());
  std::uint64_t count = 0;
  last_row_impl(w, budget, [&](const Vec& x) {
    if (box > 0)
      for (int i = 0; i < n; ++i)
        if (std::llabs(x[i]) > box) return;
    ++count;
  });
  return count;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SL(n, Z)

namespace {

constexpr int kMaxN = 4;
using Row = std::array<i64, kMaxN>;

struct SlnBounds {
  int n;
  NormKind kind;
  i64 frob_sq;
  i64 max_abs;
  // Squared-norm budget that covers every admissible row.
  i64 ball_sq() const { return kind == NormKind::Frobenius ? frob_sq : n * max_abs * max_abs; }
};

struct Candidate {
  Row r;
  i64 norm_sq;
};

i64 row_norm_sq(const Row& r, int n) {
  i64 s = 0;
  for (int i = 0; i < n; ++i) s += r[i] * r[i];
  return s;
}

// All non-zero rows that can occur, in lexicographic order.
std::vector<Candidate> candidate_rows(const SlnBounds& sb) {
  std::vector<Candidate> out;
  const int n = sb.n;
  // every other row has norm >= 1
  const i64 budget = sb.kind == NormKind::Frobenius ? sb.frob_sq - (n - 1) : 0;
  const i64 box = sb.kind == NormKind::Frobenius ? isqrt(std::max<i64>(0, budget)) : sb.max_abs;
  Row r{};
  for (int i = 0; i < n; ++i) r[i] = -box;
  while (true) {
    const i64 ns = row_norm_sq(r, n);
    if (ns > 0 && (sb.kind == NormKind::MaxEntry || ns <= budget)) out.push_back({r, ns});
    int i = n - 1;
    while (i >= 0 && ++r[i] > box) r[i--] = -box;
    if (i < 0) break;
  }
  return out;
}

// Cofactor vector of the (n-1) x n block of chosen rows: det = sum x_j w_j
// for the last row x.
Row cofactors(const std::array<Row, kMaxN>& rows, int n) {
  Row w{};
  for (int j = 0; j < n; ++j) {
    IntMatrix minor(n - 1, n - 1);
    for (int i = 0; i < n - 1; ++i) {
      int cc = 0;
      for (int k = 0; k < n; ++k)
        if (k != j) minor(i, cc++) = rows[i][k];
    }
    const i64 sign = ((n - 1 + j) % 2 == 0) ? 1 : -1;
    w[j] = sign * det(minor);
  }
  return w;
}

// gcd of the k x k minors and the Gram determinant of the first k rows.
void partial_invariants(const std::array<Row, kMaxN>& rows, int k, int n, i64& gcd_minors, i128& gram) {
  gcd_minors = 0;
  gram = 0;
  IntMatrix minor(k, k);
  for (const auto& cols : lex_subsets(n, k)) {
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) minor(i, j) = rows[i][cols[j]];
    const i64 d = det(minor);
    gcd_minors = std::gcd(gcd_minors, d);
    gram += static_cast<i128>(d) * d;
  }
}

// Depth-first choice of rows 1..n-2 (0-based) after the first one, then the
// last row by lattice enumeration.
template <class OnMatrix>
void complete_rows(const SlnBounds& sb, const std::vector<Candidate>& cands, bool sorted_by_norm,
                   std::array<Row, kMaxN>& rows, int k, i64 used, OnMatrix&& on_last) {
  const int n = sb.n;
  const i64 ball = sb.ball_sq();
  if (k == n - 1) {
    const Row w = cofactors(rows, n);
    i64 g = 0;
    for (int j = 0; j < n; ++j) g = std::gcd(g, w[j]);
    if (g != 1) return;
    const i64 budget = sb.kind == NormKind::Frobenius ? sb.frob_sq - used : ball;
    if (budget < 1) return;
    on_last(w, budget);
    return;
  }
  const int remaining_after = n - 1 - k;  // rows still to choose after this one
  for (const auto& cand : cands) {
    if (sb.kind == NormKind::Frobenius && used + cand.norm_sq + remaining_after > sb.frob_sq) {
      if (sorted_by_norm) break;
      continue;
    }
    rows[k] = cand.r;
    i64 g;
    i128 gram;
    partial_invariants(rows, k + 1, n, g, gram);
    if (g != 1) continue;
    // Hadamard: the remaining n-k-1 rows need prod |r|^2 >= 1/gram, while
    // AM-GM bounds that product by (budget/(n-k-1))^(n-k-1).
    const int rest = n - k - 1;
    const long double budget = sb.kind == NormKind::Frobenius
                                   ? static_cast<long double>(sb.frob_sq - used - cand.norm_sq)
                                   : static_cast<long double>(rest) * static_cast<long double>(ball);
    if (static_cast<long double>(gram) * std::pow(budget / rest, rest) < 1.0L) continue;
    complete_rows(sb, cands, sorted_by_norm, rows, k + 1, used + cand.norm_sq, on_last);
  }
}

SlnBounds sln_bounds(const BallSpec& spec) {
  spec.validate();
  if (spec.invert_prime) throw std::invalid_argument("SL(n, Z) enumeration does not allow a denominator prime");
  const auto L = detail::level_bounds(spec, 0);
  return SlnBounds{spec.n, spec.real_norm, L.frob_sq, L.max_abs};
}

IntMatrix assemble(const std::array<Row, kMaxN>& rows, std::span<const i64> last, int n) {
  IntMatrix m(n, n);
  for (int i = 0; i < n - 1; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
  for (int j = 0; j < n; ++j) m(n - 1, j) = last[j];
  return m;
}

bool box_ok(std::span<const i64> x, i64 box) {
  return std::all_of(x.begin(), x.end(), [box](i64 v) { return std::llabs(v) <= box; });
}

// Signed permutations P acting on rows by r -> det(P) * r P; the map
// gamma -> diag(det P, 1, ..., 1) gamma P preserves SL(n, Z) and the norm.
struct SignedPerm {
  std::array<int, kMaxN> perm;
  std::array<int, kMaxN> sign;
  int det;
};

std::vector<SignedPerm> signed_perms(int n) {
  std::vector<SignedPerm> out;
  std::array<int, kMaxN> perm{};
  std::iota(perm.begin(), perm.begin() + n, 0);
  do {
    int inversions = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) ++inversions;
    for (int mask = 0; mask < (1 << n); ++mask) {
      SignedPerm sp{perm, {}, inversions % 2 ? -1 : 1};
      for (int i = 0; i < n; ++i) {
        sp.sign[i] = (mask >> i) & 1 ? -1 : 1;
        sp.det *= sp.sign[i];
      }
      out.push_back(sp);
    }
  } while (std::next_permutation(perm.begin(), perm.begin() + n));
  return out;
}

Row apply(const SignedPerm& sp, const Row& r, int n) {
  Row out{};
  for (int i = 0; i < n; ++i) out[sp.perm[i]] = sp.det * sp.sign[i] * r[i];
  return out;
}

bool lex_less(const Row& a, const Row& b, int n) {
  return std::lexicographical_compare(a.begin(), a.begin() + n, b.begin(), b.begin() + n);
}

}  // namespace

std::vector<IntMatrix> enum_slnz(const BallSpec& spec) {
  const SlnBounds sb = sln_bounds(spec);
  const int n = sb.n;
  const auto cands = candidate_rows(sb);
  std::vector<std::vector<IntMatrix>> parts(cands.size());
  std::atomic<std::size_t> total{0};
  std::atomic<bool> overflow{false};
  const std::size_t capacity = spec.capacity;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t u = 0; u < cands.size(); ++u) {
    if (overflow.load(std::memory_order_relaxed)) continue;
    std::array<Row, kMaxN> rows{};
    rows[0] = cands[u].r;
    i64 g = 0;
    for (int j = 0; j < n; ++j) g = std::gcd(g, rows[0][j]);
    if (g != 1) continue;
    auto& part = parts[u];
    complete_rows(sb, cands, false, rows, 1, cands[u].norm_sq, [&](const Row& w, i64 budget) {
      detail::solve_last_row(std::span<const i64>(w.data(), n), budget, [&](std::span<const i64> x) {
        if (sb.kind == NormKind::MaxEntry && !box_ok(x, sb.max_abs)) return;
        part.push_back(assemble(rows, x, n));
      });
    });
    if (total.fetch_add(part.size()) + part.size() > capacity) overflow = true;
  }
  if (overflow) throw CapacityError("enumeration exceeds capacity of " + std::to_string(capacity));
  std::vector<IntMatrix> out;
  out.reserve(total.load());
  for (auto& part : parts)
    for (auto& m : part) out.push_back(std::move(m));
  return out;
}

std::uint64_t count_slnz(const BallSpec& spec) {
  const SlnBounds sb = sln_bounds(spec);
  const int n = sb.n;
  auto cands = candidate_rows(sb);
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) { return a.norm_sq < b.norm_sq; });
  const auto group = signed_perms(n);
  // One representative (lexicographically least) per orbit, with its orbit size.
  std::vector<std::pair<std::size_t, std::uint64_t>> reps;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const Row& r = cands[i].r;
    i64 g = 0;
    for (int j = 0; j < n; ++j) g = std::gcd(g, r[j]);
    if (g != 1) continue;
    std::vector<Row> orbit;
    bool minimal = true;
    for (const auto& sp : group) {
      const Row img = apply(sp, r, n);
      if (lex_less(img, r, n)) {
        minimal = false;
        break;
      }
      orbit.push_back(img);
    }
    if (!minimal) continue;
    std::sort(orbit.begin(), orbit.end(), [n](const Row& a, const Row& b) { return lex_less(a, b, n); });
    orbit.erase(std::unique(orbit.begin(), orbit.end()), orbit.end());
    reps.emplace_back(i, orbit.size());
  }
  std::uint64_t total = 0;
#pragma omp parallel for schedule(dynamic, 1) reduction(+ : total)
  for (std::size_t u = 0; u < reps.size(); ++u) {
    std::array<Row, kMaxN> rows{};
    const auto& cand = cands[reps[u].first];
    rows[0] = cand.r;
    std::uint64_t local = 0;
    complete_rows(sb, cands, true, rows, 1, cand.norm_sq, [&](const Row& w, i64 budget) {
      local += detail::count_last_row(std::span<const i64>(w.data(), n), budget,
                                      sb.kind == NormKind::MaxEntry ? sb.max_abs : 0);
    });
    total += local * reps[u].second;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Serial references

namespace serial {

std::vector<Mat2> enum_sl2z(const BallSpec& spec) {
  require_sl2(spec, false);
  const auto L = detail::level_bounds(spec, 0);
  std::vector<Mat2> out;
  const i64 A = first_entry_bound(L);
  for (i64 a = -A; a <= A; ++a) {
    const i64 C = second_entry_bound(L, a);
    for (i64 c = -C; c <= C; ++c) {
      if (igcd(a, c) != 1) continue;
      const ExtGcd e = ext_gcd(a, c);
      // (b, d) = (-y, x) + t (a, c); |t| bounded by (|w0| + T) / |(a, c)|.
      const i64 b0 = -e.y, d0 = e.x;
      const long double reach =
          (std::sqrt(static_cast<long double>(sq(b0) + sq(d0))) +
           std::sqrt(static_cast<long double>(L.kind == NormKind::Frobenius ? L.frob_sq : 2 * sq(L.max_abs)))) /
          std::sqrt(static_cast<long double>(sq(a) + sq(c)));
      const i64 tmax = static_cast<i64>(reach) + 1;
      for (i64 t = -tmax; t <= tmax; ++t) {
        const i64 b = b0 + t * a, d = d0 + t * c;
        if (entries_ok(L, a, b, c, d)) {
          if (out.size() >= spec.capacity) throw CapacityError("enumeration exceeds capacity");
          out.push_back({a, b, c, d});
        }
      }
    }
  }
  return out;
}

std::vector<Sl2Element> enum_sl2_zinvp(const BallSpec& spec) {
  require_sl2(spec, true);
  std::vector<Sl2Element> out;
  for (int m = 0; m <= spec.max_level(); ++m) {
    const auto L = detail::level_bounds(spec, m);
    const i64 A = first_entry_bound(L);
    for (i64 a = -A; a <= A; ++a) {
      const i64 C = second_entry_bound(L, a);
      for (i64 c = -C; c <= C; ++c) {
        if (a == 0 && c == 0) continue;
        const i64 g = igcd(a, c);
        if (L.det % g != 0) continue;
        const ExtGcd e = ext_gcd(a / g, c / g);
        const i64 k = L.det / g;
        const i64 b0 = -k * e.y, d0 = k * e.x;
        const long double step = std::sqrt(static_cast<long double>(sq(a / g) + sq(c / g)));
        const long double reach =
            (std::sqrt(static_cast<long double>(sq(b0) + sq(d0))) +
             std::sqrt(static_cast<long double>(L.kind == NormKind::Frobenius ? L.frob_sq : 2 * sq(L.max_abs)))) /
            step;
        const i64 tmax = static_cast<i64>(reach) + 1;
        for (i64 t = -tmax; t <= tmax; ++t) {
          const i64 b = b0 + t * (a / g), d = d0 + t * (c / g);
          if (!entries_ok(L, a, b, c, d)) continue;
          if (m > 0 && a % L.p == 0 && b % L.p == 0 && c % L.p == 0 && d % L.p == 0) continue;
          if (out.size() >= spec.capacity) throw CapacityError("enumeration exceeds capacity");
          out.push_back({m, {a, b, c, d}});
        }
      }
    }
  }
  return out;
}

std::vector<IntMatrix> enum_slnz(const BallSpec& spec) {
  const SlnBounds sb = sln_bounds(spec);
  const int n = sb.n;
  const auto cands = candidate_rows(sb);
  std::vector<IntMatrix> out;
  std::array<Row, kMaxN> rows{};
  // Rows 0..n-2 without pruning beyond the norm budget; the last row by
  // solving det = 1 for one coordinate over a box of the others.
  auto recurse = [&](auto&& self, int k, i64 used) -> void {
    if (k == n - 1) {
      const Row w = cofactors(rows, n);
      int pivot = -1;
      for (int j = 0; j < n; ++j)
        if (w[j] != 0 && (pivot < 0 || std::llabs(w[j]) < std::llabs(w[pivot]))) pivot = j;
      if (pivot < 0) return;
      const i64 budget = sb.kind == NormKind::Frobenius ? sb.frob_sq - used : sb.ball_sq();
      if (budget < 1) return;
      const i64 box = sb.kind == NormKind::Frobenius ? isqrt(budget) : sb.max_abs;
      Row x{};
      std::vector<int> free;
      for (int j = 0; j < n; ++j)
        if (j != pivot) free.push_back(j);
      for (int j : free) x[j] = -box;
      while (true) {
        i128 rest = 1;
        for (int j : free) rest -= static_cast<i128>(w[j]) * x[j];
        if (rest % w[pivot] == 0) {
          x[pivot] = static_cast<i64>(rest / w[pivot]);
          const bool ok = sb.kind == NormKind::Frobenius ? row_norm_sq(x, n) <= budget
                                                          : box_ok(std::span<const i64>(x.data(), n), sb.max_abs);
          if (ok) {
            if (out.size() >= spec.capacity) throw CapacityError("enumeration exceeds capacity");
            out.push_back(assemble(rows, std::span<const i64>(x.data(), n), n));
          }
        }
        std::size_t i = free.size();
        while (i > 0 && ++x[free[i - 1]] > box) x[free[--i]] = -box;
        if (i == 0) break;
      }
      return;
    }
    for (const auto& cand : cands) {
      if (sb.kind == NormKind::Frobenius && used + cand.norm_sq > sb.frob_sq) continue;
      rows[k] = cand.r;
      self(self, k + 1, used + cand.norm_sq);
    }
  };
  recurse(recurse, 0, 0);
  return out;
}

std::uint64_t count_slnz(const BallSpec& spec) {
  const SlnBounds sb = sln_bounds(spec);
  const int n = sb.n;
  const auto cands = candidate_rows(sb);
  std::uint64_t total = 0;
  for (const auto& cand : cands) {
    std::array<Row, kMaxN> rows{};
    rows[0] = cand.r;
    i64 g = 0;
    for (int j = 0; j < n; ++j) g = std::gcd(g, rows[0][j]);
    if (g != 1) continue;
    complete_rows(sb, cands, false, rows, 1, cand.norm_sq, [&](const Row& w, i64 budget) {
      total += detail::count_last_row(std::span<const i64>(w.data(), n), budget,
                                      sb.kind == NormKind::MaxEntry ? sb.max_abs : 0);
    });
  }
  return total;
}

std::vector<Sl2Element> near_orbit_sl2(const BallSpec& spec, std::array<Real, 2> v, Real reach,
                                       const std::optional<PadicReach>& padic) {
  std::vector<Sl2Element> all;
  if (spec.invert_prime) {
    all = serial::enum_sl2_zinvp(spec);
  } else {
    for (const auto& m : serial::enum_sl2z(spec)) all.push_back({0, m});
  }
  std::vector<Real> scales;
  std::vector<RowCongruence> congruences;
  for (int m = 0; m <= spec.max_level(); ++m) {
    const auto L = detail::level_bounds(spec, m);
    scales.push_back(level_scale(L));
    congruences.push_back(row_congruence(L, padic));
  }
  std::vector<Sl2Element> out;
  for (const auto& e : all)
    if (near_box(e.m, scales[e.level], v, reach) && padic_ok(congruences[e.level], e.m)) out.push_back(e);
  return out;
}

}  // namespace serial

// ---------------------------------------------------------------------------
// Windows

std::vector<Mat2> filter_window(std::span<const Mat2> seq, const CongruenceWindow& window) {
  if (window.dim() != 2) throw std::invalid_argument("window dimension must be 2");
  std::vector<Mat2> out;
  for (const auto& m : seq)
    if (window.contains(m)) out.push_back(m);
  return out;
}

std::vector<Sl2Element> filter_window(std::span<const Sl2Element> seq, const CongruenceWindow& window) {
  if (window.dim() != 2) throw std::invalid_argument("window dimension must be 2");
  std::vector<Sl2Element> out;
  for (const auto& e : seq)
    if (e.level == 0 && window.contains(e.m)) out.push_back(e);
  return out;
}

std::vector<IntMatrix> filter_window(std::span<const IntMatrix> seq, const CongruenceWindow& window) {
  std::vector<IntMatrix> out;
  for (const auto& m : seq) {
    if (static_cast<int>(m.rows()) != window.dim()) throw std::invalid_argument("window dimension mismatch");
    if (window.contains(m.data())) out.push_back(m);
  }
  return out;
}

}  // namespace orbitlab
