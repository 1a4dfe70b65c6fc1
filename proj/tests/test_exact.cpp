#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "orbitlab/exact.hpp"

using namespace orbitlab;

TEST_CASE("rationals are kept in lowest terms") {
  CHECK(ExactScalar(6, 4).to_string() == "3/2");
  CHECK(ExactScalar(3, -6).to_string() == "-1/2");
  CHECK(ExactScalar(0, 7).to_string() == "0");
  CHECK(ExactScalar(0, 7).denominator() == 1);
  CHECK_THROWS_AS(ExactScalar(1, 0), std::domain_error);
}

TEST_CASE("parsing integers, fractions and decimals") {
  CHECK(ExactScalar::parse("12") == ExactScalar(12));
  CHECK(ExactScalar::parse("-9/6") == ExactScalar(-3, 2));
  CHECK(ExactScalar::parse("0.125") == ExactScalar(1, 8));
  CHECK(ExactScalar::parse("-2.5e-1") == ExactScalar(-1, 4));
  CHECK(ExactScalar::parse("1e3") == ExactScalar(1000));
  CHECK(ExactScalar::parse("010/03") == ExactScalar(10, 3));
  CHECK_THROWS(ExactScalar::parse("1/0"));
  CHECK_THROWS(ExactScalar::parse("abc"));
  CHECK_THROWS(ExactScalar::parse("1/-2"));
}

TEST_CASE("p-adic valuation") {
  CHECK(padic_valuation(ExactScalar(12), 2) == Valuation(2));
  CHECK(padic_valuation(ExactScalar(0), 5).is_infinite());
  CHECK(padic_valuation(ExactScalar(9, 2), 3) == Valuation(2));
  CHECK(padic_valuation(ExactScalar(9, 2), 2) == Valuation(-1));
  CHECK(padic_valuation(ExactScalar(7, 5), 3) == Valuation(0));
  CHECK(Valuation(100) < Valuation::infinity());
}

TEST_CASE("places validate their prime") {
  CHECK(Place::finite(7).prime() == 7);
  CHECK_THROWS_AS(Place::finite(1), std::invalid_argument);
  CHECK_THROWS_AS(Place::finite(9), std::invalid_argument);
  CHECK_THROWS_AS(Place::finite(-3), std::invalid_argument);
  CHECK(Place::archimedean().is_archimedean());
  CHECK(Place::finite(2) != Place::finite(3));
}

TEST_CASE("absolute values at places") {
  CHECK(std::get<ExactScalar>(abs_at_place(ExactScalar(9, 2), Place::finite(3))) == ExactScalar(1, 9));
  CHECK(std::get<Real>(abs_at_place(ExactScalar(-5, 3), Place::archimedean())) ==
        doctest::Approx(5.0 / 3.0));
  for (long p : {2L, 3L, 5L, 7L})
    CHECK(std::get<ExactScalar>(abs_at_place(ExactScalar(1, p), Place::finite(p))) == ExactScalar(p));
  CHECK(padic_abs(ExactScalar(0), 5) == ExactScalar(0));
}

TEST_CASE("p-integrality") {
  CHECK_FALSE(is_p_integral(ExactScalar(3, 4), 2));
  CHECK(is_p_integral(ExactScalar(0), 7));
  CHECK(is_p_integral(ExactScalar(6, 5), 3));
}

TEST_CASE("ultrametric inequality and multiplicativity on random rationals") {
  std::mt19937_64 rng(11);
  for (long p : {2L, 3L, 5L}) {
    for (int it = 0; it < 2000; ++it) {
      const ExactScalar x = oracle::random_rational(rng, 200, 64), y = oracle::random_rational(rng, 200, 64);
      const ExactScalar ax = padic_abs(x, p), ay = padic_abs(y, p), as = padic_abs(x + y, p);
      CHECK(as <= std::max(ax, ay));
      if (ax != ay) CHECK(as == std::max(ax, ay));
      CHECK(padic_abs(x * y, p) == ax * ay);
      CHECK(x.abs() * y.abs() == (x * y).abs());
    }
  }
}

TEST_CASE("product formula on rationals supported at infinity and p") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> exp(-12, 12);
  for (long p : {2L, 3L, 5L, 7L}) {
    for (int it = 0; it < 200; ++it) {
      const int k = exp(rng);
      const ExactScalar x = (it % 2 ? ExactScalar(-1) : ExactScalar(1)) * pow_p(p, k);
      CHECK(x.abs() * padic_abs(x, p) == ExactScalar(1));
    }
  }
}

TEST_CASE("floor_log and floor_sqrt are exact") {
  CHECK(floor_log(2, ExactScalar(8)) == 3);
  CHECK(floor_log(2, ExactScalar(7)) == 2);
  CHECK(floor_log(3, ExactScalar(1, 3)) == -1);
  CHECK(floor_log(3, ExactScalar(1, 2)) == -1);
  CHECK(floor_log(5, ExactScalar(1)) == 0);
  CHECK(floor_sqrt(ExactScalar(10)) == 3);
  CHECK(floor_sqrt(ExactScalar(9, 4)) == 1);
  CHECK(exact_sqrt(ExactScalar(9, 4)) == ExactScalar(3, 2));
  CHECK_FALSE(exact_sqrt(ExactScalar(2)).has_value());
}

TEST_CASE("surds and radii") {
  const Surd s = Surd::parse("sqrt(2)");
  CHECK(s.square() == ExactScalar(2));
  CHECK_FALSE(s.rational().has_value());
  CHECK(Surd::parse("-3/2*sqrt(5)").square() == ExactScalar(45, 4));
  CHECK(Surd::parse("-3/2*sqrt(5)").sign() < 0);
  CHECK(Surd::parse("sqrt(2)/2").square() == ExactScalar(1, 2));
  CHECK(Surd::parse("sqrt(9)").rational() == ExactScalar(3));
  CHECK(Surd::parse("7/3").rational() == ExactScalar(7, 3));

  const Radius r = Radius::parse("sqrt(8)");
  CHECK(r.square() == ExactScalar(8));
  CHECK(r.floor_log(2) == 1);  // 2 <= sqrt(8) < 4
  CHECK(Radius::parse("4").floor_log(2) == 2);
  CHECK(Radius::parse("sqrt(16)").floor_log(2) == 2);
  CHECK(Radius::parse("sqrt(15)").floor_log(2) == 1);
}

TEST_CASE("reduction modulo prime powers") {
  CHECK(reduce_mod(ExactScalar(1, 3), 8) == 3);  // 3 * 3 = 9 = 1 mod 8
  CHECK(reduce_mod(ExactScalar(-1), 8) == 7);
  CHECK_THROWS(reduce_mod(ExactScalar(1, 2), 8));
}
