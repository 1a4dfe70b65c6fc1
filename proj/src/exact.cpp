#include "orbitlab/exact.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace orbitlab {

namespace {

std::atomic<RealPrecision> g_precision{RealPrecision::Double};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

// Decimal literal [-+]digits[.digits][e[-+]digits] as an exact rational.
std::optional<mpq_class> parse_decimal(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp = s.substr(e + 1);
    bool exp_negative = false;
    if (!exp.empty() && (exp.front() == '-' || exp.front() == '+')) {
      exp_negative = exp.front() == '-';
      exp.remove_prefix(1);
    }
    if (!all_digits(exp) || exp.size() > 6) return std::nullopt;
    exponent = std::stol(std::string(exp));
    if (exp_negative) exponent = -exponent;
    s = s.substr(0, e);
  }
  std::string digits;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view ip = s.substr(0, dot), fp = s.substr(dot + 1);
    if ((ip.empty() && fp.empty()) || (!ip.empty() && !all_digits(ip)) ||
        (!fp.empty() && !all_digits(fp)))
      return std::nullopt;
    digits = std::string(ip) + std::string(fp);
    exponent -= static_cast<long>(fp.size());
  } else {
    if (!all_digits(s)) return std::nullopt;
    digits = std::string(s);
  }
  if (digits.empty()) return std::nullopt;
  mpq_class q{mpz_class(digits, 10)};
  mpz_class ten_pow;
  mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
  if (exponent >= 0)
    q *= ten_pow;
  else
    q /= ten_pow;
  q.canonicalize();
  return negative ? mpq_class(-q) : q;
}

}  // namespace

void set_real_precision(RealPrecision precision) { g_precision = precision; }
RealPrecision real_precision() { return g_precision; }

Real round_real(Real x) {
  if (g_precision == RealPrecision::Double) return static_cast<Real>(static_cast<double>(x));
  return x;
}

ExactScalar::ExactScalar(long num, long den) : q_(num, den) {
  if (den == 0) throw std::domain_error("zero denominator");
  q_.canonicalize();
}

ExactScalar::ExactScalar(mpq_class value) : q_(std::move(value)) {
  if (q_.get_den() == 0) throw std::domain_error("zero denominator");
  q_.canonicalize();
}

ExactScalar ExactScalar::parse(std::string_view text) {
  text = trim(text);
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::string_view num = trim(text.substr(0, slash)), den = trim(text.substr(slash + 1));
    std::string_view num_digits = num;
    if (!num_digits.empty() && (num_digits.front() == '-' || num_digits.front() == '+'))
      num_digits.remove_prefix(1);
    if (!all_digits(num_digits) || !all_digits(den))
      throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
    mpz_class n(std::string(num_digits), 10), d(std::string(den), 10);
    if (num.front() == '-') n = -n;
    if (d == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    return ExactScalar(mpq_class(n, d));
  }
  if (auto q = parse_decimal(text)) return ExactScalar(*q);
  throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
}

ExactScalar ExactScalar::inverse() const {
  if (is_zero()) throw std::domain_error("inverse of zero");
  return ExactScalar(mpq_class(1) / q_);
}

ExactScalar& ExactScalar::operator/=(const ExactScalar& o) {
  if (o.is_zero()) throw std::domain_error("division by zero");
  q_ /= o.q_;
  return *this;
}

Real ExactScalar::to_real() const {
  // mpq_get_d truncates; long double via num/den keeps more bits for
  // moderate sizes and falls back to double for huge operands.
  const mpz_class& n = q_.get_num();
  const mpz_class& d = q_.get_den();
  if (mpz_sizeinbase(n.get_mpz_t(), 2) < 63 && mpz_sizeinbase(d.get_mpz_t(), 2) < 63)
    return round_real(static_cast<Real>(n.get_si()) / static_cast<Real>(d.get_si()));
  return round_real(static_cast<Real>(q_.get_d()));
}

long Valuation::value() const {
  if (inf_) throw std::domain_error("valuation of zero is infinite");
  return v_;
}

bool is_prime(long p) {
  if (p < 2) return false;
  mpz_class z(p);
  return mpz_probab_prime_p(z.get_mpz_t(), 30) != 0;
}

Place Place::finite(long p) {
  if (!is_prime(p)) throw std::invalid_argument("not a prime: " + std::to_string(p));
  return Place(p);
}

long Place::prime() const {
  if (p_ == 0) throw std::logic_error("archimedean place has no prime");
  return p_;
}

std::string Place::to_string() const { return p_ == 0 ? "inf" : "p=" + std::to_string(p_); }

long padic_valuation(const mpz_class& x, long p) {
  if (x == 0) throw std::domain_error("valuation of zero");
  mpz_class rest;
  mpz_class prime(p);
  return static_cast<long>(mpz_remove(rest.get_mpz_t(), x.get_mpz_t(), prime.get_mpz_t()));
}

Valuation padic_valuation(const ExactScalar& x, long p) {
  if (!is_prime(p)) throw std::invalid_argument("not a prime: " + std::to_string(p));
  if (x.is_zero()) return Valuation::infinity();
  return Valuation(padic_valuation(x.numerator(), p) - padic_valuation(x.denominator(), p));
}

ExactScalar pow_p(long p, long e) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(std::labs(e)));
  return e >= 0 ? ExactScalar(r) : ExactScalar(mpq_class(1, r));
}

ExactScalar padic_abs(const ExactScalar& x, long p) {
  Valuation v = padic_valuation(x, p);
  if (v.is_infinite()) return ExactScalar(0);
  return pow_p(p, -v.value());
}

AbsValue abs_at_place(const ExactScalar& x, const Place& place) {
  if (place.is_finite()) return padic_abs(x, place.prime());
  return x.abs().to_real();
}

bool is_p_integral(const ExactScalar& x, long p) {
  Valuation v = padic_valuation(x, p);
  return v.is_infinite() || v.value() >= 0;
}

long floor_log(long p, const ExactScalar& t) {
  if (t.sign() <= 0) throw std::domain_error("floor_log of a non-positive number");
  // Start from the bit-length estimate and correct by exact comparison.
  long e = static_cast<long>(std::floor(std::log(static_cast<double>(t.to_real())) /
                                        std::log(static_cast<double>(p))));
  while (pow_p(p, e) > t) --e;
  while (pow_p(p, e + 1) <= t) ++e;
  return e;
}

mpz_class floor_sqrt(const ExactScalar& q) {
  if (q.sign() < 0) throw std::domain_error("square root of a negative number");
  mpz_class prod = q.numerator() * q.denominator();
  mpz_class root;
  mpz_sqrt(root.get_mpz_t(), prod.get_mpz_t());
  mpz_class out;
  mpz_fdiv_q(out.get_mpz_t(), root.get_mpz_t(), q.denominator().get_mpz_t());
  return out;
}

std::optional<ExactScalar> exact_sqrt(const ExactScalar& q) {
  if (q.sign() < 0) return std::nullopt;
  mpz_class n = q.numerator(), d = q.denominator();
  if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t()))
    return std::nullopt;
  mpz_class rn, rd;
  mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
  mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
  return ExactScalar(mpq_class(rn, rd));
}

std::int64_t reduce_mod(const ExactScalar& x, std::int64_t modulus) {
  if (modulus <= 0) throw std::invalid_argument("modulus must be positive");
  mpz_class mod(static_cast<long>(modulus));
  mpz_class inv;
  mpz_class den = x.denominator();
  if (mpz_invert(inv.get_mpz_t(), den.get_mpz_t(), mod.get_mpz_t()) == 0 && modulus != 1)
    throw std::domain_error("denominator not invertible modulo " + std::to_string(modulus));
  mpz_class r = x.numerator() * inv;
  mpz_class out;
  mpz_fdiv_r(out.get_mpz_t(), r.get_mpz_t(), mod.get_mpz_t());
  return out.get_si();
}

Surd::Surd(ExactScalar coeff, ExactScalar radicand)
    : coeff_(std::move(coeff)), radicand_(std::move(radicand)) {
  if (radicand_.sign() < 0) throw std::invalid_argument("negative radicand");
}

Surd Surd::parse(std::string_view text) {
  text = trim(text);
  const auto pos = text.find("sqrt(");
  if (pos == std::string_view::npos) return Surd(ExactScalar::parse(text));
  const auto close = text.find(')', pos);
  if (close == std::string_view::npos)
    throw std::invalid_argument("unbalanced sqrt in '" + std::string(text) + "'");
  ExactScalar radicand = ExactScalar::parse(text.substr(pos + 5, close - pos - 5));
  std::string_view prefix = trim(text.substr(0, pos));
  ExactScalar coeff(1);
  if (prefix == "-") {
    coeff = ExactScalar(-1);
  } else if (!prefix.empty()) {
    if (prefix.back() != '*')
      throw std::invalid_argument("malformed surd '" + std::string(text) + "'");
    prefix.remove_suffix(1);
    coeff = ExactScalar::parse(prefix);
  }
  std::string_view suffix = trim(text.substr(close + 1));
  if (!suffix.empty()) {
    if (suffix.front() != '/')
      throw std::invalid_argument("malformed surd '" + std::string(text) + "'");
    coeff /= ExactScalar::parse(suffix.substr(1));
  }
  return Surd(coeff, radicand);
}

std::optional<ExactScalar> Surd::rational() const {
  if (coeff_.is_zero()) return ExactScalar(0);
  if (auto r = exact_sqrt(radicand_)) return coeff_ * *r;
  return std::nullopt;
}

Real Surd::to_real() const {
  return round_real(coeff_.to_real() * std::sqrt(static_cast<Real>(radicand_.to_real())));
}

std::string Surd::to_string() const {
  if (auto r = rational()) return r->to_string();
  if (coeff_ == ExactScalar(1)) return "sqrt(" + radicand_.to_string() + ")";
  return coeff_.to_string() + "*sqrt(" + radicand_.to_string() + ")";
}

Radius::Radius(const Surd& value)
    : square_(value.square()), exact_(value.rational()), value_(value.to_real()),
      text_(value.to_string()) {
  if (value.sign() <= 0) throw std::invalid_argument("radius must be positive");
}

Radius Radius::from_real(Real value) {
  if (!(value > 0) || !std::isfinite(static_cast<double>(value)))
    throw std::invalid_argument("radius must be positive and finite");
  mpq_class q(static_cast<double>(value));
  return Radius(Surd(ExactScalar(q)));
}

long Radius::floor_log(long p) const {
  // p^e <= t  <=>  p^(2e) <= t^2
  long e = static_cast<long>(std::floor(std::log(static_cast<double>(value_)) /
                                        std::log(static_cast<double>(p))));
  while (pow_p(p, 2 * e) > square_) --e;
  while (pow_p(p, 2 * (e + 1)) <= square_) ++e;
  return e;
}

}  // namespace orbitlab
