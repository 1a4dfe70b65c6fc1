#include "orbitlab/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <stdexcept>
#include <type_traits>

namespace orbitlab {

// ---------------------------------------------------------------------------
// SqrtPower

SqrtPower::SqrtPower(ExactScalar mantissa, long p, long k) : mantissa_(std::move(mantissa)), p_(p), k_(k) {
  if (p_ < 2) throw std::invalid_argument("SqrtPower needs a prime");
  if (mantissa_.is_zero()) {
    k_ = 0;
    return;
  }
  const long half = k_ >= 0 ? k_ / 2 : -((-k_ + 1) / 2);
  mantissa_ *= pow_p(p_, half);
  k_ -= 2 * half;
}

SqrtPower SqrtPower::parse(std::string_view text) {
  const auto star = text.find("*sqrt(");
  if (star == std::string_view::npos) return SqrtPower(ExactScalar::parse(text), 2, 0);
  const auto close = text.find(")^", star);
  if (close == std::string_view::npos) throw std::invalid_argument("malformed sqrt power '" + std::string(text) + "'");
  const ExactScalar mantissa = ExactScalar::parse(text.substr(0, star));
  const ExactScalar p = ExactScalar::parse(text.substr(star + 6, close - star - 6));
  const ExactScalar k = ExactScalar::parse(text.substr(close + 2));
  if (!p.is_integer() || !k.is_integer())
    throw std::invalid_argument("malformed sqrt power '" + std::string(text) + "'");
  return SqrtPower(mantissa, p.numerator().get_si(), k.numerator().get_si());
}

Real SqrtPower::to_real() const {
  Real v = mantissa_.to_real();
  if (k_) v *= std::sqrt(static_cast<Real>(p_));
  return v;
}

std::string SqrtPower::to_string() const {
  return mantissa_.to_string() + "*sqrt(" + std::to_string(p_) + ")^" + std::to_string(k_);
}

namespace {
long common_prime(const SqrtPower& a, const SqrtPower& b) {
  if (a.half_exponent() && b.half_exponent() && a.prime() != b.prime())
    throw std::invalid_argument("SqrtPower values over different primes");
  return a.half_exponent() ? a.prime() : b.prime();
}
}  // namespace

SqrtPower operator*(const SqrtPower& a, const SqrtPower& b) {
  return SqrtPower(a.mantissa_ * b.mantissa_, common_prime(a, b), a.k_ + b.k_);
}

SqrtPower operator/(const SqrtPower& a, const SqrtPower& b) {
  return SqrtPower(a.mantissa_ / b.mantissa_, common_prime(a, b), a.k_ - b.k_);
}

bool operator==(const SqrtPower& a, const SqrtPower& b) {
  return a.mantissa_ == b.mantissa_ && a.k_ == b.k_ && (a.k_ == 0 || a.p_ == b.p_);
}

std::string VolumeValue::to_string() const {
  if (exact) return exact->to_string();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", static_cast<double>(value));
  return buf;
}

// ---------------------------------------------------------------------------
// Descriptors

std::string describe(const HDescriptor& h) {
  return std::visit(
      [](const auto& d) -> std::string {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, StabSl2R>) return "stab2";
        else if constexpr (std::is_same_v<D, AdjointUnipotent>) return "adjoint(p=" + std::to_string(d.p) + ")";
        else return "unipair(p=" + std::to_string(d.p) + ")";
      },
      h);
}

void validate(const HDescriptor& h) {
  std::visit(
      [](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, StabSl2R>) {
          if (d.v[0] == 0 && d.v[1] == 0) throw std::invalid_argument("Stab(v) needs v != 0");
        } else if constexpr (std::is_same_v<D, AdjointUnipotent>) {
          if (!is_prime(d.p)) throw std::invalid_argument("not a prime: " + std::to_string(d.p));
        } else {
          if (d.v_inf[0] == 0 && d.v_inf[1] == 0) throw std::invalid_argument("v_inf must be non-zero");
          if (d.v_p[0].is_zero() && d.v_p[1].is_zero()) throw std::invalid_argument("v_p must be non-zero");
          if (!is_prime(d.p)) throw std::invalid_argument("not a prime: " + std::to_string(d.p));
        }
      },
      h);
}

namespace {

// Component of g at a place as a real or exact matrix; identity when absent.
RealMatrix real_component(const std::optional<PlacedMatrix>& g, std::size_t n) {
  if (!g || !g->has(Place::archimedean())) return RealMatrix::identity(n);
  const auto& comp = g->at(Place::archimedean()).value;
  RealMatrix m = std::holds_alternative<RealMatrix>(comp) ? std::get<RealMatrix>(comp)
                                                          : to_real(std::get<ExactMatrix>(comp));
  if (m.rows() != n) throw std::invalid_argument("translator has the wrong dimension");
  return m;
}

std::optional<ExactMatrix> exact_real_component(const std::optional<PlacedMatrix>& g, std::size_t n) {
  if (!g || !g->has(Place::archimedean())) return ExactMatrix::identity(n);
  const auto& comp = g->at(Place::archimedean()).value;
  if (!std::holds_alternative<ExactMatrix>(comp)) return std::nullopt;
  return std::get<ExactMatrix>(comp);
}

ExactMatrix padic_component(const std::optional<PlacedMatrix>& g, long p, std::size_t n) {
  if (!g || !g->has(Place::finite(p))) return ExactMatrix::identity(n);
  const auto& m = std::get<ExactMatrix>(g->at(Place::finite(p)).value);
  if (m.rows() != n) throw std::invalid_argument("translator has the wrong dimension");
  return m;
}

RealMatrix real_inverse(const RealMatrix& m) {
  const std::size_t n = m.rows();
  RealMatrix a = m, inv = RealMatrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (a(piv, c) == 0) throw std::domain_error("singular translator");
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(a(piv, j), a(c, j));
      std::swap(inv(piv, j), inv(c, j));
    }
    const Real d = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= d;
      inv(c, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const Real f = a(r, c);
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

bool is_diagonal(const auto& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j && !(m(i, j) == 0)) return false;
  return true;
}

RealMatrix stab_generator(std::array<Real, 2> v) {
  // N = v u^T with u = (-v2, v1)
  return RealMatrix(2, 2, {-v[0] * v[1], v[0] * v[0], -v[1] * v[1], v[0] * v[1]});
}

Real frob_sq(const RealMatrix& m) {
  Real s = 0;
  for (Real x : m.data()) s += x * x;
  return s;
}

// Length of {s : |g + s N g|_F <= t}.
Real stab_interval(std::array<Real, 2> v, const RealMatrix& g, Real t) {
  const RealMatrix ng = stab_generator(v) * g;
  const Real a = frob_sq(ng);
  Real b = 0;
  for (std::size_t i = 0; i < 4; ++i) b += 2 * g.data()[i] * ng.data()[i];
  const Real c = frob_sq(g);
  const Real disc = b * b - 4 * a * (c - t * t);
  if (disc <= 0) return 0;
  return std::sqrt(disc) / a;
}

// sqrt(r) as a SqrtPower over p when the p-free part of r is a rational square.
std::optional<SqrtPower> sqrt_power(const ExactScalar& r, long p) {
  if (r.is_zero()) return SqrtPower(ExactScalar(0), p, 0);
  const long v = padic_valuation(r, p).value();
  const auto root = exact_sqrt(r * pow_p(p, -v));
  if (!root) return std::nullopt;
  return SqrtPower(*root, p, v);
}

VolumeValue adjoint_volume(const AdjointUnipotent& h, const std::optional<PlacedMatrix>& g, const Radius& t,
                             Orientation orientation) {
  const long p = h.p;
  ExactMatrix gp = padic_component(g, p, 3);
  RealMatrix greal = real_component(g, 3);
  std::optional<ExactMatrix> gexact = exact_real_component(g, 3);
  if (!is_diagonal(gp) || !is_diagonal(greal))
    throw std::invalid_argument("the adjoint case supports diagonal translators only");
  if (orientation == Orientation::Translate) {
    gp = inverse(gp);
    greal = real_inverse(greal);
    if (gexact) gexact = inverse(*gexact);
  }

  // Real place, max norm in the basis diag(1, sqrt 2, 1):
  // |g_i| <= t, sqrt2 |s g2| <= t, sqrt2 |s g3| <= t, s^2 |g3| <= t.
  const Real tv = t.value();
  for (int i = 0; i < 3; ++i)
    if (std::abs(greal(i, i)) > tv) return {0, SqrtPower(ExactScalar(0), p, 0)};
  const Real g2 = std::abs(greal(1, 1)), g3 = std::abs(greal(2, 2));
  const Real real_mass = std::min({tv / (std::sqrt(Real(2)) * g2), tv / (std::sqrt(Real(2)) * g3), std::sqrt(tv / g3)});
  std::optional<SqrtPower> real_exact;
  if (gexact && t.exact()) {
    const ExactScalar e2 = (*gexact)(1, 1).abs(), e3 = (*gexact)(2, 2).abs();
    const ExactScalar tt = *t.exact();
    ExactScalar sq = std::min({tt * tt / (ExactScalar(2) * e2 * e2), tt * tt / (ExactScalar(2) * e3 * e3), tt / e3});
    real_exact = sqrt_power(sq, p);
  }

  // p-adic place: |g_i|_p <= p^E and |c s^k|_p <= p^E  <=>  v(s) >= ceil((-v(c) - E) / k).
  const long e = t.floor_log(p);
  for (int i = 0; i < 3; ++i)
    if (padic_abs(gp(i, i), p) > pow_p(p, e)) return {0, SqrtPower(ExactScalar(0), p, 0)};
  auto bound = [&](const ExactScalar& c, long k) {
    const long num = -padic_valuation(c, p).value() - e;
    return num >= 0 ? (num + k - 1) / k : -((-num) / k);
  };
  const long r = std::max({bound(ExactScalar(2) * gp(1, 1), 1), bound(gp(2, 2), 1), bound(gp(2, 2), 2)});
  const SqrtPower padic_mass(pow_p(p, -r), p, 0);

  VolumeValue out;
  out.value = real_mass * padic_mass.to_real();
  if (real_exact) {
    out.exact = *real_exact * padic_mass;
    out.value = out.exact->to_real();
  }
  return out;
}

// Mass of {s in Q_p : |a_ij + s b_ij|_p <= p^E for all entries}.
Real unipair_padic_mass(const UnipotentPair& h, const ExactMatrix& g, long e) {
  const long p = h.p;
  const ExactScalar v1 = h.v_p[0], v2 = h.v_p[1];
  const ExactMatrix n(2, 2, {-v1 * v2, v1 * v1, -v2 * v2, v1 * v2});
  const ExactMatrix ng = n * g;
  struct Ball {
    ExactScalar centre;
    long r;  // {s : v(s - centre) >= -r}, mass p^r
  };
  std::vector<Ball> balls;
  const ExactScalar limit = pow_p(p, e);
  for (std::size_t i = 0; i < 4; ++i) {
    const ExactScalar& a = g.data()[i];
    const ExactScalar& b = ng.data()[i];
    if (b.is_zero()) {
      if (padic_abs(a, p) > limit) return 0;
      continue;
    }
    balls.push_back({-a / b, e + padic_valuation(b, p).value()});
  }
  if (balls.empty()) throw std::domain_error("degenerate unipotent direction");
  const auto smallest = std::min_element(balls.begin(), balls.end(), [](const Ball& x, const Ball& y) { return x.r < y.r; });
  for (const auto& b : balls) {
    const ExactScalar diff = smallest->centre - b.centre;
    if (!diff.is_zero() && padic_valuation(diff, p).value() < -b.r) return 0;
  }
  return pow_p(p, smallest->r).to_real();
}

}  // namespace

Real stab_ball_volume_sl2r(std::array<Real, 2> v, Real t) {
  if (v[0] == 0 && v[1] == 0) throw std::invalid_argument("Stab(v) needs v != 0");
  if (t * t <= 2) return 0;
  const Real norm_sq = v[0] * v[0] + v[1] * v[1];
  return round_real(2 * std::sqrt(t * t - 2) / norm_sq);
}

Real stab_ratio_closed_form(std::array<Real, 2> v, const RealMatrix& g) {
  const RealMatrix n = stab_generator(v);
  return round_real(std::sqrt(frob_sq(n) / frob_sq(n * g)));
}

VolumeValue skew_ball_volume(const SkewBallQuery& q) {
  validate(q.h);
  return std::visit(
      [&](const auto& d) -> VolumeValue {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, StabSl2R>) {
          RealMatrix g = real_component(q.g, 2);
          if (q.orientation == Orientation::Translate) g = real_inverse(g);
          return {round_real(stab_interval(d.v, g, q.t.value())), std::nullopt};
        } else if constexpr (std::is_same_v<D, AdjointUnipotent>) {
          return adjoint_volume(d, q.g, q.t, q.orientation);
        } else {
          RealMatrix g = real_component(q.g, 2);
          ExactMatrix gp = padic_component(q.g, d.p, 2);
          if (q.orientation == Orientation::Translate) {
            g = real_inverse(g);
            gp = inverse(gp);
          }
          const Real real = stab_interval(d.v_inf, g, q.t.value());
          if (real == 0) return {0, std::nullopt};
          return {round_real(real * unipair_padic_mass(d, gp, q.t.floor_log(d.p))), std::nullopt};
        }
      },
      q.h);
}

VolumeValue ball_volume(const HDescriptor& h, const Radius& t) {
  if (const auto* stab = std::get_if<StabSl2R>(&h)) return {stab_ball_volume_sl2r(stab->v, t.value()), std::nullopt};
  return skew_ball_volume({h, std::nullopt, t, Orientation::SkewBall});
}

// ---------------------------------------------------------------------------
// Ratio limits

std::vector<Radius> Ladder::values() const {
  if (t0.sign() <= 0 || factor <= ExactScalar(1) || steps < 1)
    throw std::invalid_argument("ladder needs t0 > 0, factor > 1 and steps >= 1");
  std::vector<Radius> out;
  ExactScalar t = t0;
  for (int k = 0; k < steps; ++k, t *= factor) out.emplace_back(Surd(t));
  return out;
}

std::optional<Real> RatioLimit::limit() const {
  if (!converged || class_limits.size() != 1) return std::nullopt;
  return class_limits.front();
}

namespace {

std::optional<long> finite_prime(const HDescriptor& h) {
  if (const auto* e = std::get_if<AdjointUnipotent>(&h)) return e->p;
  if (const auto* u = std::get_if<UnipotentPair>(&h)) return u->p;
  return std::nullopt;
}

bool agree(std::span<const Real> xs, Real tol) {
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  const Real scale = std::max(std::abs(*lo), std::abs(*hi));
  return *hi - *lo <= tol * scale;
}

}  // namespace

RatioLimit skew_ball_ratio_limit(const HDescriptor& h, const std::optional<PlacedMatrix>& g, const Ladder& ladder,
                                 Orientation orientation, Real tolerance) {
  validate(h);
  RatioLimit out;
  const auto ts = ladder.values();
  std::vector<long> classes_e;
  const auto prime = finite_prime(h);
  for (const auto& t : ts) {
    const Real plain = ball_volume(h, t).value;
    if (plain <= 0) continue;
    out.ladder_t.push_back(t.value());
    out.ladder_ratio.push_back(skew_ball_volume({h, g, t, orientation}).value / plain);
    classes_e.push_back(prime ? t.floor_log(*prime) : 0);
  }
  if (const auto* stab = std::get_if<StabSl2R>(&h)) {
    RealMatrix gr = real_component(g, 2);
    if (orientation == Orientation::Translate) gr = real_inverse(gr);
    out.closed_form = stab_ratio_closed_form(stab->v, gr);
  }
  const std::size_t n = out.ladder_ratio.size();
  if (n < 3) {
    out.note = "ladder too short";
    return out;
  }

  if (!prime) {
    // Ratio = L (1 + c t^-2 + O(t^-4)): Richardson on t_k = t0 f^k.
    const Real f2 = std::pow(ladder.factor.to_real(), 2);
    for (std::size_t k = 0; k + 1 < n; ++k)
      out.accelerated.push_back((f2 * out.ladder_ratio[k + 1] - out.ladder_ratio[k]) / (f2 - 1));
    const auto& acc = out.accelerated;
    if (acc.size() >= 3 && agree(std::span(acc).last(3), tolerance)) {
      out.converged = true;
      out.class_limits = {acc.back()};
    } else {
      out.note = "Richardson estimates do not settle";
    }
    return out;
  }

  // Residue classes of E(ln_p t): the raw subsequences must settle.
  for (int modulus = 1; modulus <= 4; ++modulus) {
    std::vector<std::vector<Real>> per(modulus);
    for (std::size_t k = 0; k < n; ++k) per[((classes_e[k] % modulus) + modulus) % modulus].push_back(out.ladder_ratio[k]);
    bool all = true;
    std::vector<std::optional<Real>> limits(modulus);
    for (int j = 0; j < modulus; ++j) {
      if (per[j].empty()) continue;
      if (per[j].size() < 3 || !agree(std::span(per[j]).last(3), tolerance)) {
        all = false;
        break;
      }
      limits[j] = per[j].back();
    }
    if (all) {
      out.converged = true;
      out.modulus = modulus;
      out.class_limits = std::move(limits);
      if (modulus > 1) out.note = "limits exist on residue classes of E(ln_p t) mod " + std::to_string(modulus);
      return out;
    }
  }
  out.note = "no residue-class refinement up to modulus 4 converges";
  return out;
}

std::pair<Real, Real> bounded_ratio_check(const HDescriptor& h, const std::optional<PlacedMatrix>& g,
                                          const std::vector<Radius>& ladder, Orientation orientation) {
  Real lo = INFINITY, hi = 0;
  for (const auto& t : ladder) {
    const Real plain = ball_volume(h, t).value;
    if (plain <= 0) continue;
    const Real r = skew_ball_volume({h, g, t, orientation}).value / plain;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (hi == 0 && lo == INFINITY) throw std::invalid_argument("every ladder ball is empty");
  return {lo, hi};
}

OrientationCalibration calibrate_orientation(std::array<Real, 2> v, const std::vector<RealMatrix>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("calibration needs at least two translators");
  std::vector<Real> inv, dir;
  for (const auto& g : samples) {
    const Real ratio = stab_ratio_closed_form(v, g);
    const RealMatrix gi = real_inverse(g);
    const Real w_inv = std::hypot(gi(0, 0) * v[0] + gi(0, 1) * v[1], gi(1, 0) * v[0] + gi(1, 1) * v[1]);
    const Real w_dir = std::hypot(g(0, 0) * v[0] + g(0, 1) * v[1], g(1, 0) * v[0] + g(1, 1) * v[1]);
    inv.push_back(ratio * w_inv);
    dir.push_back(ratio * w_dir);
  }
  auto cv = [](const std::vector<Real>& xs, Real& mean) {
    mean = std::accumulate(xs.begin(), xs.end(), Real(0)) / xs.size();
    Real var = 0;
    for (Real x : xs) var += (x - mean) * (x - mean);
    return std::sqrt(var / xs.size()) / mean;
  };
  OrientationCalibration out;
  Real mean_inv, mean_dir;
  out.cv_inverse = cv(inv, mean_inv);
  out.cv_direct = cv(dir, mean_dir);
  const bool inverse_wins = out.cv_inverse <= out.cv_direct;
  out.winner = inverse_wins ? "g^-1 v" : "g v";
  out.constant = inverse_wins ? mean_inv : mean_dir;
  return out;
}

// ---------------------------------------------------------------------------
// p-adic balls

ExactScalar hecke_cell_mass(long p, int a) {
  if (a < 0) throw std::invalid_argument("negative Cartan index");
  if (a == 0) return ExactScalar(1);
  // Primitive Hermite forms of determinant p^(2a): p^(2a) + p^(2a-1).
  return pow_p(p, 2 * a) + pow_p(p, 2 * a - 1);
}

ExactScalar padic_sl2_ball_volume(long p, int j) {
  if (!is_prime(p)) throw std::invalid_argument("not a prime: " + std::to_string(p));
  if (j < 0) throw std::invalid_argument("ball index must be >= 0");
  ExactScalar total(0);
  for (int a = 0; a <= j; ++a) total += hecke_cell_mass(p, a);
  return total;
}

// ---------------------------------------------------------------------------
// Asymptotic fits

namespace {

/// E(ln_p t) for a sampled t. Ladders hit powers of p exactly, but a t that
/// went through double arithmetic may land an ulp below p^e; such a t counts
/// as p^e.
long floor_log_real(long p, Real t) {
  t *= 1 + 1e-12L;
  long e = static_cast<long>(std::floor(std::log(t) / std::log(static_cast<Real>(p))));
  while (e > -64 && std::pow(static_cast<Real>(p), e) > t) --e;
  while (std::pow(static_cast<Real>(p), e + 1) <= t) ++e;
  return e;
}

struct Line {
  Real intercept, slope, rms;
};

Line least_squares(const std::vector<Real>& x, const std::vector<Real>& y) {
  const std::size_t n = x.size();
  const Real mx = std::accumulate(x.begin(), x.end(), Real(0)) / n;
  const Real my = std::accumulate(y.begin(), y.end(), Real(0)) / n;
  Real sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit needs at least two distinct t values per class");
  const Real slope = sxy / sxx, intercept = my - slope * mx;
  Real ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real r = y[i] - intercept - slope * x[i];
    ss += r * r;
  }
  return {intercept, slope, std::sqrt(ss / n)};
}

ClassFit fit_class(const std::vector<std::pair<Real, Real>>& pts) {
  std::optional<ClassFit> best;
  const bool loglog_ok = std::all_of(pts.begin(), pts.end(), [](const auto& s) { return s.first > 1; });
  for (int e = 0; e <= 2; ++e) {
    if (e > 0 && !loglog_ok) break;
    std::vector<Real> x, y;
    for (const auto& [t, v] : pts) {
      x.push_back(std::log(t));
      y.push_back(std::log(v) - (e ? e * std::log(std::log(t)) : 0));
    }
    const Line line = least_squares(x, y);
    ClassFit fit{std::exp(line.intercept), line.slope, e, line.rms, pts.size()};
    // A log factor must earn its place by halving the residual.
    if (!best || fit.residual * 2 < best->residual) best = fit;
  }
  return *best;
}

}  // namespace

AsymptoticFit fit_asymptotics(const std::vector<std::pair<Real, Real>>& samples, const FitOptions& options) {
  for (const auto& [t, v] : samples)
    if (!(t > 0) || !(v > 0)) throw std::invalid_argument("fit samples need t > 0 and volume > 0");
  if (options.prime && !is_prime(*options.prime)) throw std::invalid_argument("fit prime is not prime");
  std::vector<int> moduli = options.prime ? options.moduli : std::vector<int>{1};
  std::sort(moduli.begin(), moduli.end());
  moduli.erase(std::unique(moduli.begin(), moduli.end()), moduli.end());
  if (moduli.empty() || moduli.front() < 1) throw std::invalid_argument("moduli must be positive");

  AsymptoticFit out;
  std::optional<std::pair<Real, AsymptoticProfile>> best;
  for (int modulus : moduli) {
    std::vector<std::vector<std::pair<Real, Real>>> per(modulus);
    for (const auto& s : samples) {
      const long e = options.prime ? floor_log_real(*options.prime, s.first) : 0;
      per[((e % modulus) + modulus) % modulus].push_back(s);
    }
    AsymptoticProfile profile{modulus, std::vector<std::optional<ClassFit>>(modulus)};
    Real worst = 0;
    bool enough = true, any = false;
    for (int j = 0; j < modulus; ++j) {
      if (per[j].empty()) continue;
      if (per[j].size() < options.min_samples) {
        enough = false;
        break;
      }
      profile.classes[j] = fit_class(per[j]);
      worst = std::max(worst, profile.classes[j]->residual);
      any = true;
    }
    if (!enough || !any) {
      out.candidate_residuals.emplace_back(modulus, INFINITY);
      continue;
    }
    out.candidate_residuals.emplace_back(modulus, worst);
    if (worst <= options.tolerance && !out.ok) {
      out.ok = true;
      out.profile = profile;
    }
    if (!best || worst < best->first) best = std::pair(worst, profile);
  }
  if (!out.ok) {
    out.note = "no candidate modulus brings the class residuals under tolerance";
    if (best) out.profile = best->second;
  }
  if (!best) throw std::invalid_argument("fewer than the required samples in every residue class");
  return out;
}

}  // namespace orbitlab
