#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace orbitlab::intmath {

using i64 = std::int64_t;
using i128 = __int128;

inline i64 floor_div(i64 a, i64 b) {
  i64 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline i64 ceil_div(i64 a, i64 b) { return -floor_div(-a, b); }

inline i64 mod(i64 a, i64 m) {
  i64 r = a % m;
  return r < 0 ? r + m : r;
}

inline i64 mod128(i128 a, i64 m) {
  i128 r = a % m;
  return static_cast<i64>(r < 0 ? r + m : r);
}

struct ExtGcd {
  i64 g, x, y;  // a*x + b*y = g >= 0
};

inline ExtGcd ext_gcd(i64 a, i64 b) {
  i64 old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
  while (r != 0) {
    const i64 q = old_r / r;
    i64 tmp = old_r - q * r; old_r = r; r = tmp;
    tmp = old_s - q * s; old_s = s; s = tmp;
    tmp = old_t - q * t; old_t = t; t = tmp;
  }
  if (old_r < 0) return {-old_r, -old_s, -old_t};
  return {old_r, old_s, old_t};
}

/// floor(sqrt(x)) for x >= 0.
inline i64 isqrt(i128 x) {
  if (x < 0) throw std::domain_error("isqrt of a negative number");
  if (x == 0) return 0;
  i64 r = static_cast<i64>(__builtin_sqrtl(static_cast<long double>(x)));
  while (static_cast<i128>(r) * r > x) --r;
  while (static_cast<i128>(r + 1) * (r + 1) <= x) ++r;
  return r;
}

inline i64 inv_mod(i64 a, i64 m) {
  if (m == 1) return 0;
  ExtGcd e = ext_gcd(mod(a, m), m);
  if (e.g != 1) throw std::domain_error("not invertible modulo m");
  return mod(e.x, m);
}

/// Valuation of a non-zero integer.
inline int padic_val(i64 x, i64 p) {
  int v = 0;
  while (x % p == 0) {
    x /= p;
    ++v;
  }
  return v;
}

inline i64 ipow(i64 p, int e) {
  i64 r = 1;
  for (int i = 0; i < e; ++i) {
    if (r > INT64_MAX / p) throw std::overflow_error("integer power overflow");
    r *= p;
  }
  return r;
}

inline i64 igcd(i64 a, i64 b) { return std::gcd(a, b); }

}  // namespace orbitlab::intmath
