#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <gmpxx.h>

namespace orbitlab {

/// Scalar type used at the archimedean place.
using Real = long double;

/// Global precision of archimedean computations. `Double` rounds every
/// real-place result through IEEE double; `Extended` keeps long double.
enum class RealPrecision { Double, Extended };

void set_real_precision(RealPrecision precision);
RealPrecision real_precision();
Real round_real(Real x);

/// Exact rational number. Always stored in lowest terms with a positive
/// denominator, zero as 0/1.
class ExactScalar {
 public:
  ExactScalar() = default;
  ExactScalar(long value) : q_(value) {}  // NOLINT(google-explicit-constructor)
  ExactScalar(long num, long den);
  explicit ExactScalar(const mpz_class& value) : q_(value) {}
  explicit ExactScalar(mpq_class value);

  /// Accepts "a", "a/b", "-a/b" and finite decimals such as "12.5" or "1e3".
  static ExactScalar parse(std::string_view text);

  const mpq_class& value() const { return q_; }
  mpz_class numerator() const { return q_.get_num(); }
  mpz_class denominator() const { return q_.get_den(); }

  int sign() const { return sgn(q_); }
  bool is_zero() const { return sign() == 0; }
  bool is_integer() const { return q_.get_den() == 1; }
  ExactScalar abs() const { return ExactScalar(mpq_class(::abs(q_))); }
  ExactScalar inverse() const;

  Real to_real() const;
  /// "a" for integers, "a/b" otherwise.
  std::string to_string() const { return q_.get_str(); }

  ExactScalar& operator+=(const ExactScalar& o) { q_ += o.q_; return *this; }
  ExactScalar& operator-=(const ExactScalar& o) { q_ -= o.q_; return *this; }
  ExactScalar& operator*=(const ExactScalar& o) { q_ *= o.q_; return *this; }
  ExactScalar& operator/=(const ExactScalar& o);

  friend ExactScalar operator+(ExactScalar a, const ExactScalar& b) { return a += b; }
  friend ExactScalar operator-(ExactScalar a, const ExactScalar& b) { return a -= b; }
  friend ExactScalar operator*(ExactScalar a, const ExactScalar& b) { return a *= b; }
  friend ExactScalar operator/(ExactScalar a, const ExactScalar& b) { return a /= b; }
  friend ExactScalar operator-(const ExactScalar& a) { return ExactScalar(mpq_class(-a.q_)); }

  friend bool operator==(const ExactScalar& a, const ExactScalar& b) { return a.q_ == b.q_; }
  friend std::strong_ordering operator<=>(const ExactScalar& a, const ExactScalar& b) {
    const int c = cmp(a.q_, b.q_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  mpq_class q_{0};
};

/// p-adic valuation; `infinite()` stands for the valuation of zero.
class Valuation {
 public:
  explicit Valuation(long v) : v_(v) {}
  static Valuation infinity() { Valuation r(0); r.inf_ = true; return r; }

  bool is_infinite() const { return inf_; }
  long value() const;

  friend bool operator==(const Valuation& a, const Valuation& b) {
    return a.inf_ == b.inf_ && (a.inf_ || a.v_ == b.v_);
  }
  friend std::strong_ordering operator<=>(const Valuation& a, const Valuation& b) {
    if (a.inf_ || b.inf_) {
      if (a.inf_ && b.inf_) return std::strong_ordering::equal;
      return a.inf_ ? std::strong_ordering::greater : std::strong_ordering::less;
    }
    return a.v_ <=> b.v_;
  }

 private:
  long v_ = 0;
  bool inf_ = false;
};

bool is_prime(long p);

/// A place of Q: the archimedean one or the p-adic one for a prime p.
class Place {
 public:
  static Place archimedean() { return Place(0); }
  /// Throws std::invalid_argument unless p is prime.
  static Place finite(long p);

  bool is_archimedean() const { return p_ == 0; }
  bool is_finite() const { return p_ != 0; }
  long prime() const;
  std::string to_string() const;

  friend bool operator==(const Place&, const Place&) = default;
  friend auto operator<=>(const Place&, const Place&) = default;

 private:
  explicit Place(long p) : p_(p) {}
  long p_;
};

Valuation padic_valuation(const ExactScalar& x, long p);
long padic_valuation(const mpz_class& x, long p);  // x != 0

/// |x| at a place: exact p^(-v) at finite places, a real at infinity.
using AbsValue = std::variant<ExactScalar, Real>;
AbsValue abs_at_place(const ExactScalar& x, const Place& place);
ExactScalar padic_abs(const ExactScalar& x, long p);

bool is_p_integral(const ExactScalar& x, long p);

/// p^e for any integer e.
ExactScalar pow_p(long p, long e);
/// Largest e with p^e <= t, for t > 0. This is E(ln_p t).
long floor_log(long p, const ExactScalar& t);
/// floor(sqrt(q)) for q >= 0.
mpz_class floor_sqrt(const ExactScalar& q);
/// Exact square root when q is the square of a rational.
std::optional<ExactScalar> exact_sqrt(const ExactScalar& q);

/// Reduction of a p-integral rational modulo `modulus` (coprime denominator).
std::int64_t reduce_mod(const ExactScalar& x, std::int64_t modulus);

/// coeff * sqrt(radicand): rationals and quadratic surds such as "sqrt(2)",
/// "-3/2*sqrt(5)" or "sqrt(2)/2". Used for irrational vector coordinates and
/// radii supplied on the command line.
class Surd {
 public:
  Surd() = default;
  Surd(ExactScalar coeff, ExactScalar radicand);  // radicand >= 0
  Surd(const ExactScalar& rational) : coeff_(rational) {}  // NOLINT

  static Surd parse(std::string_view text);

  const ExactScalar& coeff() const { return coeff_; }
  const ExactScalar& radicand() const { return radicand_; }
  /// The rational value when the surd is rational.
  std::optional<ExactScalar> rational() const;
  ExactScalar square() const { return coeff_ * coeff_ * radicand_; }
  int sign() const { return radicand_.is_zero() ? 0 : coeff_.sign(); }
  Real to_real() const;
  std::string to_string() const;

 private:
  ExactScalar coeff_{0};
  ExactScalar radicand_{1};  // square-free part not enforced
};

/// Radius of a ball. The square is always exact so that membership tests
/// |x| <= T can be decided by exact comparison of squares.
class Radius {
 public:
  Radius() = default;
  Radius(const Surd& value);  // NOLINT
  static Radius parse(std::string_view text) { return Radius(Surd::parse(text)); }
  static Radius from_real(Real value);

  const ExactScalar& square() const { return square_; }
  const std::optional<ExactScalar>& exact() const { return exact_; }
  Real value() const { return value_; }
  std::string to_string() const { return text_; }

  /// E(ln_p t), exact.
  long floor_log(long p) const;

 private:
  ExactScalar square_{1};
  std::optional<ExactScalar> exact_{ExactScalar(1)};
  Real value_ = 1;
  std::string text_ = "1";
};

}  // namespace orbitlab
