#include "orbitlab/equidist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <omp.h>

#include "orbitlab/intmath.hpp"

namespace orbitlab {

using namespace intmath;

namespace {

constexpr Real kTwoPi = 2 * std::numbers::pi_v<Real>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Extended-precision value of a surd, independent of the global precision mode.
Real extended(const ExactScalar& x) {
  const mpz_class& n = x.value().get_num();
  const mpz_class& d = x.value().get_den();
  if (mpz_sizeinbase(n.get_mpz_t(), 2) < 63 && mpz_sizeinbase(d.get_mpz_t(), 2) < 63)
    return static_cast<Real>(n.get_si()) / static_cast<Real>(d.get_si());
  return static_cast<Real>(x.value().get_d());
}

Real extended(const Surd& s) { return extended(s.coeff()) * std::sqrt(extended(s.radicand())); }

int val128(i128 x, long p) {
  int v = 0;
  while (x % p == 0) {
    x /= p;
    ++v;
  }
  return v;
}

void validate_sector(const RealAnnulusSector& f) {
  if (!(f.r1 > 0) || !(f.r1 < f.r2) || !std::isfinite(f.r2))
    throw std::invalid_argument("annulus sector needs 0 < r1 < r2 < infinity");
  if (!(f.theta1 < f.theta2) || f.theta2 - f.theta1 > kTwoPi * (1 + 1e-15L))
    throw std::invalid_argument("sector angle interval must be nonempty and within one turn");
}

void validate_shell(const PadicShellBox& f) {
  if (!is_prime(f.p)) throw std::invalid_argument("shell box prime is not prime");
  if (f.m < 0) throw std::invalid_argument("shell box congruence exponent must be >= 0");
  if (f.m == 0) {
    if (!f.classes.empty()) throw std::invalid_argument("shell box with m = 0 takes no classes");
    return;
  }
  const i64 q = ipow(f.p, f.m);
  if (q > (1 << 12)) throw std::invalid_argument("shell box modulus p^m is limited to 4096");
  if (f.classes.empty()) throw std::invalid_argument("shell box congruence set is empty");
  std::vector<std::array<std::int64_t, 2>> sorted = f.classes;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("shell box lists a class twice");
  for (const auto& c : sorted) {
    if (c[0] < 0 || c[0] >= q || c[1] < 0 || c[1] >= q)
      throw std::invalid_argument("shell box class out of range [0, p^m)");
    if (c[0] % f.p == 0 && c[1] % f.p == 0)
      throw std::invalid_argument("shell box class is not primitive");
  }
}

void validate_wedge(const RealWedgeAnnulus& f) {
  if (!(f.r1 > 0) || !(f.r1 < f.r2) || !std::isfinite(f.r2))
    throw std::invalid_argument("wedge annulus needs 0 < r1 < r2 < infinity");
  if (f.n < 2 || f.n > 4 || f.k < 1 || f.k >= f.n)
    throw std::invalid_argument("wedge annulus needs 2 <= n <= 4 and 1 <= k < n");
}

Real sphere_area(int dim) {  // area of the unit sphere in R^dim
  return 2 * std::pow(std::numbers::pi_v<Real>, dim / 2.0L) / std::tgamma(dim / 2.0L);
}

}  // namespace

// ---------------------------------------------------------------------------
// Test functions

PadicShellBox PadicShellBox::full(long p, int s, int m) {
  PadicShellBox f{p, s, m, {}};
  if (m > 0) {
    const i64 q = ipow(p, m);
    for (i64 x = 0; x < q; ++x)
      for (i64 y = 0; y < q; ++y)
        if (x % p != 0 || y % p != 0) f.classes.push_back({x, y});
  }
  return f;
}

void validate(const TestFunction& f) {
  std::visit(overloaded{[](const RealAnnulusSector& g) { validate_sector(g); },
                        [](const PadicShellBox& g) { validate_shell(g); },
                        [](const RealWedgeAnnulus& g) { validate_wedge(g); },
                        [](const ProductSet& g) {
                          validate_sector(g.real);
                          validate_shell(g.padic);
                        }},
             f);
}

std::string describe(const TestFunction& f) {
  std::ostringstream out;
  out.precision(12);
  auto sector = [&](const RealAnnulusSector& g) {
    out << "sector r=[" << static_cast<double>(g.r1) << "," << static_cast<double>(g.r2) << ") theta=["
        << static_cast<double>(g.theta1) << "," << static_cast<double>(g.theta2) << ")";
  };
  auto shell = [&](const PadicShellBox& g) {
    out << "shell p=" << g.p << " s=" << g.s;
    if (g.m > 0) out << " m=" << g.m << " classes=" << g.classes.size();
  };
  std::visit(overloaded{sector, shell,
                        [&](const RealWedgeAnnulus& g) {
                          out << "wedge n=" << g.n << " k=" << g.k << " r=[" << static_cast<double>(g.r1) << ","
                              << static_cast<double>(g.r2) << ")";
                        },
                        [&](const ProductSet& g) {
                          sector(g.real);
                          out << " x ";
                          shell(g.padic);
                        }},
             f);
  return out.str();
}

bool contains(const RealAnnulusSector& f, Real x, Real y) {
  const Real r = std::hypot(x, y);
  if (r < f.r1 || r >= f.r2) return false;
  if (f.theta2 - f.theta1 >= kTwoPi) return true;
  Real a = std::fmod(std::atan2(y, x) - f.theta1, kTwoPi);
  if (a < 0) a += kTwoPi;
  return f.theta1 + a < f.theta2;
}

bool contains(const PadicShellBox& f, const PadicPoint& w) {
  if (w.p != f.p) throw std::invalid_argument("shell box and point live at different primes");
  if (w.z[0] == 0 && w.z[1] == 0) return false;
  int vz = INT32_MAX;
  for (i128 z : w.z)
    if (z != 0) vz = std::min(vz, val128(z, w.p));
  if (w.shift - vz != f.s) return false;
  if (f.m == 0) return true;
  const i64 q = ipow(f.p, f.m);
  i128 scale = 1;
  for (int i = 0; i < vz; ++i) scale *= w.p;
  const i64 qi = inv_mod(mod(w.q, q), q);
  const std::array<std::int64_t, 2> u{mod128(static_cast<i128>(mod128(w.z[0] / scale, q)) * qi, q),
                                      mod128(static_cast<i128>(mod128(w.z[1] / scale, q)) * qi, q)};
  return std::find(f.classes.begin(), f.classes.end(), u) != f.classes.end();
}

namespace {

// w = p^-shift z / q with q coprime to p.
PadicPoint to_padic_point(const std::array<ExactScalar, 2>& w, long p) {
  mpz_class den = 1;
  for (const auto& x : w) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), x.denominator().get_mpz_t());
  long shift = 0;
  mpz_class q = den;
  while (mpz_divisible_ui_p(q.get_mpz_t(), p)) {
    q /= p;
    ++shift;
  }
  PadicPoint out{p, shift, {0, 0}, 1};
  if (!q.fits_slong_p()) throw std::overflow_error("p-adic point denominator too large");
  out.q = q.get_si();
  for (int i = 0; i < 2; ++i) {
    mpz_class z = w[i].numerator() * (den / w[i].denominator());
    if (mpz_sizeinbase(z.get_mpz_t(), 2) > 62) throw std::overflow_error("p-adic point numerator too large");
    out.z[i] = z.get_si();
  }
  return out;
}

}  // namespace

bool contains(const PadicShellBox& f, const std::array<ExactScalar, 2>& w) {
  return contains(f, to_padic_point(w, f.p));
}

Real predicted_integral_r2(const RealAnnulusSector& f) { return (f.theta2 - f.theta1) * (f.r2 - f.r1); }

ExactScalar predicted_integral_qp2(const PadicShellBox& f) {
  const ExactScalar p2(f.p * f.p);
  ExactScalar shell = pow_p(f.p, f.s) * (ExactScalar(1) - ExactScalar(1) / p2);
  if (f.m == 0) return shell;
  const ExactScalar q2 = pow_p(f.p, 2 * f.m);
  return shell * ExactScalar(static_cast<long>(f.classes.size())) / (q2 - q2 / p2);
}

Real predicted_integral_wedge(const RealWedgeAnnulus& f) {
  const int D = static_cast<int>(binomial(f.n, f.k));
  const int c = f.k * (f.n - f.k) + 1;
  const Real radial = (std::pow(f.r2, c - 1) - std::pow(f.r1, c - 1)) / (c - 1);
  return c == D ? sphere_area(D) * radial : radial;
}

Real predicted_integral(const TestFunction& f) {
  return std::visit(overloaded{[](const RealAnnulusSector& g) { return predicted_integral_r2(g); },
                               [](const PadicShellBox& g) { return extended(predicted_integral_qp2(g)); },
                               [](const RealWedgeAnnulus& g) { return predicted_integral_wedge(g); },
                               [](const ProductSet& g) {
                                 return predicted_integral_r2(g.real) * extended(predicted_integral_qp2(g.padic));
                               }},
                    f);
}

// ---------------------------------------------------------------------------
// Orbit vectors and evaluation

std::vector<Real> OrbitVector::real_values() const {
  std::vector<Real> out;
  for (const auto& s : real) out.push_back(extended(s));
  return out;
}

PlacedVector OrbitVector::placed() const {
  std::vector<PlacedVector::Component> comps;
  comps.push_back({Place::archimedean(), real_values()});
  if (p) comps.push_back({Place::finite(*p), padic});
  return PlacedVector(std::move(comps));
}

PointEvaluator::PointEvaluator(const OrbitVector& v, std::span<const NamedTest> tests)
    : tests_(tests.begin(), tests.end()), v_(v.real_values()), p_(v.p) {
  if (v_.empty()) throw std::invalid_argument("orbit vector has no real coordinates");
  if (std::all_of(v_.begin(), v_.end(), [](Real x) { return x == 0; }))
    throw std::invalid_argument("orbit vector must be nonzero");
  bool padic_tests = false;
  auto shell_bound = [&](long s) { max_shell_ = std::max(max_shell_.value_or(s), s); };
  for (const auto& t : tests_) {
    validate(t.f);
    std::visit(overloaded{[&](const RealAnnulusSector& g) {
                            if (v_.size() != 2) throw std::invalid_argument("sector tests need a vector in R^2");
                            reach_ = std::max(reach_, g.r2);
                          },
                          [&](const PadicShellBox& g) {
                            padic_tests = true;
                            shell_bound(g.s);
                            if (!p_ || g.p != *p_) throw std::invalid_argument("shell box prime differs from v_p");
                            reach_ = std::numeric_limits<Real>::infinity();
                          },
                          [&](const RealWedgeAnnulus& g) {
                            all_padic_ = false;
                            if (binomial(g.n, g.k) != v_.size())
                              throw std::invalid_argument("wedge annulus dimension differs from the vector");
                            if (k_ != 0 && k_ != g.k) throw std::invalid_argument("wedge tests mix degrees");
                            k_ = g.k;
                            reach_ = std::max(reach_, g.r2);
                          },
                          [&](const ProductSet& g) {
                            padic_tests = true;
                            shell_bound(g.padic.s);
                            if (!p_ || g.padic.p != *p_)
                              throw std::invalid_argument("product shell prime differs from v_p");
                            if (v_.size() != 2) throw std::invalid_argument("product tests need a vector in R^2");
                            reach_ = std::max(reach_, g.real.r2);
                          }},
               t.f);
  }
  if (p_) {
    if (v.padic.size() != 2) {
      if (padic_tests) throw std::invalid_argument("p-adic tests need a p-adic vector in Q_p^2");
    } else {
      const PadicPoint base = to_padic_point({v.padic[0], v.padic[1]}, *p_);
      if (base.z[0] == 0 && base.z[1] == 0) throw std::invalid_argument("p-adic vector must be nonzero");
      vp_num_ = base.z;
      vp_shift_ = base.shift;
      vp_q_ = base.q;
    }
  }
  if (k_ == 0) k_ = 1;
}

std::optional<PadicReach> PointEvaluator::padic_reach() const {
  if (!all_padic_ || !max_shell_ || tests_.empty() || (vp_num_[0] == 0 && vp_num_[1] == 0)) return std::nullopt;
  return PadicReach{{static_cast<std::int64_t>(vp_num_[0]), static_cast<std::int64_t>(vp_num_[1])}, vp_shift_,
                    *max_shell_};
}

void PointEvaluator::add(int level, const Mat2& m, std::span<std::uint64_t> counts) const {
  if (v_.size() != 2) throw std::invalid_argument("SL(2) evaluation needs a vector in R^2");
  Real scale = 1;
  if (level > 0) {
    if (!p_) throw std::invalid_argument("level > 0 element without a prime");
    scale = 1 / std::pow(static_cast<Real>(*p_), static_cast<Real>(level));
  }
  const Real x = (static_cast<Real>(m[0]) * v_[0] + static_cast<Real>(m[1]) * v_[1]) * scale;
  const Real y = (static_cast<Real>(m[2]) * v_[0] + static_cast<Real>(m[3]) * v_[1]) * scale;
  std::optional<PadicPoint> wp;
  auto padic = [&]() -> const PadicPoint& {
    if (!wp)
      wp = PadicPoint{*p_, vp_shift_ + level,
                      {static_cast<i128>(m[0]) * vp_num_[0] + static_cast<i128>(m[1]) * vp_num_[1],
                       static_cast<i128>(m[2]) * vp_num_[0] + static_cast<i128>(m[3]) * vp_num_[1]},
                      vp_q_};
    return *wp;
  };
  for (std::size_t i = 0; i < tests_.size(); ++i) {
    const bool hit = std::visit(
        overloaded{[&](const RealAnnulusSector& g) { return contains(g, x, y); },
                   [&](const PadicShellBox& g) { return contains(g, padic()); },
                   [&](const RealWedgeAnnulus& g) {
                     const Real r = std::hypot(x, y);
                     return r >= g.r1 && r < g.r2;
                   },
                   [&](const ProductSet& g) { return contains(g.real, x, y) && contains(g.padic, padic()); }},
        tests_[i].f);
    if (hit) ++counts[i];
  }
}

void PointEvaluator::add(const IntMatrix& gamma, std::span<std::uint64_t> counts) const {
  if (gamma.rows() == 2 && v_.size() == 2 && k_ == 1) {
    add(0, Mat2{gamma(0, 0), gamma(0, 1), gamma(1, 0), gamma(1, 1)}, counts);
    return;
  }
  const IntMatrix action = k_ == 1 ? gamma : wedge_action(gamma, static_cast<std::size_t>(k_));
  if (action.cols() != v_.size()) throw std::invalid_argument("matrix and vector dimensions differ");
  Real norm_sq = 0;
  for (std::size_t i = 0; i < action.rows(); ++i) {
    Real w = 0;
    for (std::size_t j = 0; j < action.cols(); ++j) w += static_cast<Real>(action(i, j)) * v_[j];
    norm_sq += w * w;
  }
  const Real r = std::sqrt(norm_sq);
  for (std::size_t i = 0; i < tests_.size(); ++i) {
    const auto* g = std::get_if<RealWedgeAnnulus>(&tests_[i].f);
    if (!g) throw std::invalid_argument("SL(n) orbit sums take wedge annulus tests only");
    if (r >= g->r1 && r < g->r2) ++counts[i];
  }
}

namespace {

template <class Seq>
std::vector<std::uint64_t> count_sequence(const Seq& seq, const PointEvaluator& ev, std::size_t tests) {
  std::vector<std::uint64_t> total(tests, 0);
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(tests, 0);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if constexpr (std::is_same_v<typename Seq::value_type, Sl2Element>)
        ev.add(seq[i].level, seq[i].m, local);
      else if constexpr (std::is_same_v<typename Seq::value_type, Mat2>)
        ev.add(0, seq[i], local);
      else
        ev.add(seq[i], local);
    }
#pragma omp critical
    for (std::size_t t = 0; t < tests; ++t) total[t] += local[t];
  }
  return total;
}

template <class T>
Real single_sum(std::span<const T> seq, const OrbitVector& v, const TestFunction& f, Real normalizer) {
  if (!(normalizer > 0)) throw std::invalid_argument("normalizer must be positive");
  const NamedTest test{"f", f};
  const PointEvaluator ev(v, std::span<const NamedTest>(&test, 1));
  return static_cast<Real>(count_sequence(seq, ev, 1)[0]) / normalizer;
}

std::array<Real, 2> plane_vector(const PointEvaluator&, const OrbitVector& v) {
  const auto r = v.real_values();
  return {r[0], r[1]};
}

}  // namespace

Real orbit_sum(std::span<const Mat2> seq, const OrbitVector& v, const TestFunction& f, Real normalizer) {
  return single_sum(seq, v, f, normalizer);
}
Real orbit_sum(std::span<const Sl2Element> seq, const OrbitVector& v, const TestFunction& f, Real normalizer) {
  return single_sum(seq, v, f, normalizer);
}
Real orbit_sum(std::span<const IntMatrix> seq, const OrbitVector& v, const TestFunction& f, Real normalizer) {
  return single_sum(seq, v, f, normalizer);
}

std::vector<std::uint64_t> orbit_counts(const BallSpec& spec, const OrbitVector& v, std::span<const NamedTest> tests) {
  spec.validate();
  const PointEvaluator ev(v, tests);
  if (spec.n == 2 && v.real.size() == 2 && std::isfinite(ev.real_reach()) && ev.real_reach() > 0) {
    const auto& window = spec.window;
    return tally_near_orbit_sl2(spec, plane_vector(ev, v), ev.real_reach() * (1 + 1e-9L), ev.padic_reach(),
                                tests.size(), [&](const Sl2Element& e, std::span<std::uint64_t> local) {
                                  if (window && (e.level > 0 || !window->contains(e.m))) return;
                                  ev.add(e.level, e.m, local);
                                });
  }
  if (spec.n == 2) {
    std::vector<Sl2Element> all;
    if (spec.invert_prime) {
      all = enum_sl2_zinvp(spec);
    } else {
      for (const auto& m : enum_sl2z(spec)) all.push_back({0, m});
    }
    if (spec.window) all = filter_window(all, *spec.window);
    return count_sequence(all, ev, tests.size());
  }
  auto all = enum_slnz(spec);
  if (spec.window) all = filter_window(all, *spec.window);
  return count_sequence(all, ev, tests.size());
}

namespace serial {

std::vector<std::uint64_t> orbit_counts(const BallSpec& spec, const OrbitVector& v, std::span<const NamedTest> tests) {
  spec.validate();
  const PointEvaluator ev(v, tests);
  std::vector<std::uint64_t> counts(tests.size(), 0);
  if (spec.n == 2) {
    std::vector<Sl2Element> all;
    if (spec.invert_prime) {
      all = serial::enum_sl2_zinvp(spec);
    } else {
      for (const auto& m : serial::enum_sl2z(spec)) all.push_back({0, m});
    }
    if (spec.window) all = filter_window(all, *spec.window);
    for (const auto& e : all) ev.add(e.level, e.m, counts);
    return counts;
  }
  auto all = serial::enum_slnz(spec);
  if (spec.window) all = filter_window(all, *spec.window);
  for (const auto& g : all) ev.add(g, counts);
  return counts;
}

}  // namespace serial

// ---------------------------------------------------------------------------
// Predictions

Application parse_application(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ledrappier") return Application::Ledrappier;
  if (s == "window") return Application::Window;
  if (s == "s-arithmetic") return Application::SArithmetic;
  if (s == "wedge") return Application::Wedge;
  throw std::invalid_argument("unknown application '" + std::string(text) +
                              "' (expected ledrappier, window, s-arithmetic or wedge)");
}

std::string to_string(Application a) {
  switch (a) {
    case Application::Ledrappier: return "ledrappier";
    case Application::Window: return "window";
    case Application::SArithmetic: return "s-arithmetic";
    case Application::Wedge: return "wedge";
  }
  return "?";
}

int lambda_exponent(int n, int k) { return n * n + k * k - n * k - n; }

Real normalizer(Application a, const Radius& t, std::optional<long> p, int n, int k) {
  auto s_arith = [&] {
    if (!p) throw std::invalid_argument("this normalizer needs a prime");
    return t.value() * std::pow(static_cast<Real>(*p), static_cast<Real>(t.floor_log(*p)));
  };
  switch (a) {
    case Application::Ledrappier:
    case Application::Window: return t.value();
    case Application::SArithmetic: return s_arith();
    case Application::Wedge: return std::pow(p ? s_arith() : t.value(), static_cast<Real>(lambda_exponent(n, k)));
  }
  return 1;
}

namespace {

Real euclid(const std::vector<Real>& v) {
  Real s = 0;
  for (Real x : v) s += x * x;
  return std::sqrt(s);
}

// Known factor in front of the integral, so that the fitted constant is
// comparable across base points: 1/|v|, and (p^2 - 1)/(p^2 |v|_inf |v_p|_p) for the S-arithmetic case.
Real density_scale(const ExperimentConfig& c) {
  const Real vinf = euclid(c.v.real_values());
  if (c.application != Application::SArithmetic) return 1 / vinf;
  const long p = *c.p;
  ExactScalar vp(0);
  for (const auto& x : c.v.padic) vp = std::max(vp, padic_abs(x, p));
  const Real pp = static_cast<Real>(p) * p;
  return (pp - 1) / (pp * vinf * extended(vp));
}

}  // namespace

Prediction predicted_limit(const ExperimentConfig& config, const Radius& t) {
  Prediction out;
  const auto p = config.application == Application::Window ? std::optional<long>{} : config.p;
  out.normalizer = normalizer(config.application, t, p, config.n, config.k);
  if (config.application == Application::Window && config.window) out.window_mass = config.window->haar_mass();
  const Real scale = density_scale(config) * extended(out.window_mass);
  for (const auto& test : config.tests) out.integrals.push_back(predicted_integral(test.f) * scale);
  for (Real x : out.integrals) out.ratio_targets.push_back(x / out.integrals.front());
  return out;
}

SlopeFit slope_fit(const std::vector<std::pair<Real, Real>>& points) {
  if (points.size() < 5) throw std::invalid_argument("slope fit needs at least 5 points");
  Real lo = points.front().first, hi = lo;
  for (const auto& [x, y] : points) {
    if (!(x > 0) || !(y > 0)) throw std::invalid_argument("slope fit needs positive values");
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (hi / lo < 8) throw std::invalid_argument("slope fit needs the abscissae to span a factor of 8");
  const Real n = static_cast<Real>(points.size());
  Real mx = 0, my = 0;
  for (const auto& [x, y] : points) mx += std::log(x), my += std::log(y);
  mx /= n;
  my /= n;
  Real sxx = 0, sxy = 0;
  for (const auto& [x, y] : points) {
    const Real dx = std::log(x) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - my);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  Real ssr = 0;
  for (const auto& [x, y] : points) {
    const Real r = std::log(y) - my - fit.slope * (std::log(x) - mx);
    ssr += r * r;
  }
  fit.stderr_ = std::sqrt(ssr / (n - 2) / sxx);
  return fit;
}

bool cf_irrational(Real x, int depth) {
  if (!std::isfinite(x)) return false;
  for (int i = 0; i < depth; ++i) {
    const Real a = std::floor(x);
    const Real frac = x - a;
    if (frac < 1e-12L) return false;
    x = 1 / frac;
    if (x > 1e12L) return false;
  }
  return true;
}

namespace {

// a / b when it is rational (b != 0).
std::optional<ExactScalar> surd_ratio(const Surd& a, const Surd& b) {
  if (a.sign() == 0) return ExactScalar(0);
  const auto root = exact_sqrt(a.radicand() / b.radicand());
  if (!root) return std::nullopt;
  return a.coeff() / b.coeff() * *root;
}

// The real line through v contains a nonzero rational vector.
bool rational_direction(const std::vector<Surd>& v) {
  const auto pivot = std::find_if(v.begin(), v.end(), [](const Surd& s) { return s.sign() != 0; });
  if (pivot == v.end()) return true;
  for (const auto& s : v)
    if (!surd_ratio(s, *pivot)) return false;
  return true;
}

}  // namespace

HypothesisCheck check_hypothesis(const ExperimentConfig& config) {
  HypothesisCheck out;
  const auto& v = config.v.real;
  switch (config.application) {
    case Application::Ledrappier:
    case Application::Window: {
      if (v.size() != 2) throw std::invalid_argument("this application needs v in R^2");
      out.exact = true;
      out.ok = !rational_direction(v);
      const auto r = config.v.real_values();
      const bool cf = r[0] != 0 && cf_irrational(std::fabs(r[1] / r[0]), config.cf_depth);
      out.note = std::string(out.ok ? "slope irrational" : "slope rational: orbit is discrete") +
                 "; continued fraction " + (cf ? "non-terminating" : "terminates") + " within depth " +
                 std::to_string(config.cf_depth);
      if (cf != out.ok) out.note += " (heuristic disagrees with exact check)";
      break;
    }
    case Application::SArithmetic: {
      if (v.size() != 2 || config.v.padic.size() != 2)
        throw std::invalid_argument("s-arithmetic needs v_inf in R^2 and v_p in Q_p^2");
      out.exact = true;
      // v_p is rational, so the only rational line through it is its own; the
      // hypothesis fails when v_inf lies on that line.
      const auto& w = config.v.padic;
      const Surd a(v[0].coeff() * w[1], v[0].radicand());
      const Surd b(v[1].coeff() * w[0], v[1].radicand());
      const bool parallel = (a.sign() == 0 && b.sign() == 0) ||
                            (a.sign() == b.sign() && a.square() == b.square());
      out.ok = !parallel;
      out.note = parallel ? "v_inf and v_p span the same rational line" : "v_inf is off the rational line of v_p";
      break;
    }
    case Application::Wedge: {
      if (v.size() != binomial(config.n, config.k)) throw std::invalid_argument("v must live in Lambda^k(R^n)");
      if (config.k == 1) {
        out.exact = true;
        out.ok = !rational_direction(v);
        out.note = out.ok ? "line contains no rational vector" : "line contains a rational vector";
      } else {
        out.note = "not checked for k > 1";
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

void validate_config(const ExperimentConfig& c) {
  if (c.ladder.empty()) throw std::invalid_argument("experiment needs a nonempty T ladder");
  switch (c.application) {
    case Application::Ledrappier:
      if (c.window) throw std::invalid_argument("ledrappier takes no window (use window)");
      break;
    case Application::Window:
      if (!c.window) throw std::invalid_argument("window needs a congruence window");
      if (c.window->dim() != 2) throw std::invalid_argument("the congruence window must be in SL(2)");
      break;
    case Application::SArithmetic:
      if (!c.p || !is_prime(*c.p)) throw std::invalid_argument("s-arithmetic needs a prime p");
      if (c.window) throw std::invalid_argument("s-arithmetic takes no window");
      break;
    case Application::Wedge:
      if (c.n < 2 || c.n > 4 || c.k < 1 || c.k >= c.n)
        throw std::invalid_argument("wedge needs 2 <= n <= 4 and 1 <= k < n");
      if (c.p) throw std::invalid_argument("wedge over SL(n, Z[1/p]) is not enumerable here");
      break;
  }
  if (c.application != Application::Wedge && c.v.real.size() != 2)
    throw std::invalid_argument("v must have 2 real coordinates");
}

BallSpec ball_for(const ExperimentConfig& c, const Radius& t) {
  BallSpec spec;
  spec.n = c.application == Application::Wedge ? c.n : 2;
  spec.real_norm = c.norm;
  spec.t_inf = t;
  spec.capacity = c.capacity;
  if (c.application == Application::Window) {
    spec.prime = c.window->prime();
    spec.window = c.window;
  }
  if (c.application == Application::SArithmetic) {
    spec.prime = c.p;
    spec.invert_prime = true;
  }
  return spec;
}

std::vector<RealMatrix> calibration_samples(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi), stretch(-1, 1), shear(-2, 2);
  std::vector<RealMatrix> out;
  for (int i = 0; i < count; ++i) {
    const Real th = angle(rng), s = std::exp(static_cast<Real>(stretch(rng))), u = shear(rng);
    const RealMatrix k(2, 2, {std::cos(th), -std::sin(th), std::sin(th), std::cos(th)});
    const RealMatrix a(2, 2, {s, 0, 0, 1 / s});
    const RealMatrix n(2, 2, {1, u, 0, 1});
    out.push_back(k * a * n);
  }
  return out;
}

}  // namespace

DistributionReport run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  DistributionReport report;
  report.application = config.application;
  report.hypothesis = check_hypothesis(config);
  if (!report.hypothesis.ok) report.flags.push_back("density hypothesis violated");
  if (config.application == Application::Window) report.window_mass = config.window->haar_mass();
  if (config.application == Application::Ledrappier || config.application == Application::Window) {
    const auto r = config.v.real_values();
    report.orientation = calibrate_orientation({r[0], r[1]}, calibration_samples(config.seed, 16));
  }

  const std::size_t nt = config.tests.size();
  std::vector<std::vector<std::pair<Real, Real>>> series(nt);
  std::vector<std::pair<Real, Real>> ball_series;
  for (const auto& t : config.ladder) {
    const BallSpec spec = ball_for(config, t);
    const Prediction pred = predicted_limit(config, t);
    LevelSummary level;
    level.t = t.value();
    level.normalizer = pred.normalizer;
    if (nt == 0) {
      // Nothing to evaluate: record the size of the ball itself.
      std::uint64_t size = 0;
      if (spec.n == 2) {
        size = spec.invert_prime ? count_sl2_zinvp(spec)
                                 : (spec.window ? filter_window(enum_sl2z(spec), *spec.window).size()
                                                : count_sl2z(spec));
      } else {
        size = count_slnz(spec);
      }
      ball_series.emplace_back(t.value(), static_cast<Real>(size));
      report.levels.push_back(level);
      continue;
    }
    const auto counts = config.use_serial_reference ? serial::orbit_counts(spec, config.v, config.tests)
                                                    : orbit_counts(spec, config.v, config.tests);
    if (config.compare_full_window && spec.window) {
      BallSpec full = spec;
      full.window.reset();
      const auto fc = config.use_serial_reference ? serial::orbit_counts(full, config.v, config.tests)
                                                  : orbit_counts(full, config.v, config.tests);
      std::uint64_t w = 0, f = 0;
      for (std::size_t i = 0; i < nt; ++i) w += counts[i], f += fc[i];
      if (f > 0) level.window_ratio = static_cast<Real>(w) / static_cast<Real>(f);
    }
    std::vector<Real> constants;
    for (std::size_t i = 0; i < nt; ++i) {
      ReportRow row;
      row.t = t.value();
      row.test_id = config.tests[i].id;
      row.count = counts[i];
      row.normalizer = pred.normalizer;
      row.empirical = static_cast<Real>(counts[i]) / pred.normalizer;
      row.predicted = pred.integrals[i];
      row.predicted_ratio = pred.ratio_targets[i];
      row.empirical_ratio =
          counts[0] > 0 ? static_cast<Real>(counts[i]) / static_cast<Real>(counts[0]) : std::nan("");
      row.ratio_error = std::fabs(row.empirical_ratio / row.predicted_ratio - 1);
      row.fitted_constant = row.empirical / row.predicted;
      level.max_ratio_error = std::max(level.max_ratio_error, std::isnan(row.ratio_error) ? Real(1) : row.ratio_error);
      constants.push_back(row.fitted_constant);
      if (counts[i] > 0) series[i].emplace_back(pred.normalizer, static_cast<Real>(counts[i]));
      report.rows.push_back(row);
    }
    Real mean = 0, var = 0;
    for (Real c : constants) mean += c;
    mean /= static_cast<Real>(constants.size());
    for (Real c : constants) var += (c - mean) * (c - mean);
    level.constant_mean = mean;
    level.constant_cv = constants.size() > 1 && mean > 0
                            ? std::sqrt(var / static_cast<Real>(constants.size() - 1)) / mean
                            : 0;
    report.levels.push_back(level);
  }

  auto add_slope = [&](const std::string& id, const std::string& against,
                       const std::vector<std::pair<Real, Real>>& pts) {
    try {
      report.slopes.push_back({id, against, slope_fit(pts)});
    } catch (const std::invalid_argument& e) {
      report.flags.push_back("no slope for " + id + ": " + e.what());
    }
  };
  if (nt == 0) {
    add_slope("ball", "T", ball_series);
  } else {
    for (std::size_t i = 0; i < nt; ++i) add_slope(config.tests[i].id, "normalizer", series[i]);
  }
  if (report.levels.size() > 1 && nt > 0) {
    bool monotone = true;
    for (std::size_t i = 1; i < report.levels.size(); ++i)
      monotone = monotone && report.levels[i].max_ratio_error <= report.levels[i - 1].max_ratio_error;
    if (!monotone) report.flags.push_back("max ratio error not monotone along the ladder");
  }
  return report;
}

}  // namespace orbitlab
