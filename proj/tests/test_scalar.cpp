#include <doctest.h>

#include "test_support.hpp"

using namespace smp;

TEST_CASE("rational text parsing") {
  auto q = ScalarTraits<Rational>::from_text("3/4");
  REQUIRE(q.has_value());
  CHECK(*q == ScalarTraits<Rational>::from_fraction(3, 4));

  CHECK(*ScalarTraits<Rational>::from_text("-7/2") ==
        ScalarTraits<Rational>::from_fraction(-7, 2));
  CHECK(*ScalarTraits<Rational>::from_text("5") == Rational(5));
  // Decimal text parses to the exact decimal fraction.
  CHECK(*ScalarTraits<Rational>::from_text("0.25") ==
        ScalarTraits<Rational>::from_fraction(1, 4));
  CHECK(*ScalarTraits<Rational>::from_text("-1.5") ==
        ScalarTraits<Rational>::from_fraction(-3, 2));
  CHECK(!ScalarTraits<Rational>::from_text("abc").has_value());
  CHECK(!ScalarTraits<Rational>::from_text("1/0").has_value());

  CHECK(*ScalarTraits<double>::from_text("3/4") == doctest::Approx(0.75));
  CHECK(*ScalarTraits<double>::from_text("1e-3") == doctest::Approx(1e-3));
}

TEST_CASE("rational round-trip through text") {
  const Rational q = ScalarTraits<Rational>::from_fraction(-22, 7);
  CHECK(*ScalarTraits<Rational>::from_text(ScalarTraits<Rational>::repr(q)) ==
        q);
}

TEST_CASE("near and rel_gap") {
  CHECK(near(1.0, 1.0 + 1e-12, 1e-9));
  CHECK(!near(1.0, 1.0 + 1e-6, 1e-9));
  CHECK(near(0.0, 1e-12, 1e-9));  // absolute floor of 1 near zero
  CHECK(near(Rational(1), Rational(1), 0.0));
  CHECK(!near(Rational(1), ScalarTraits<Rational>::from_fraction(1000000001, 1000000000), 1.0));
  CHECK(rel_gap(2.0, 2.0) == 0.0);
  CHECK(rel_gap(Rational(3), Rational(4)) == doctest::Approx(0.25));
}

TEST_CASE("binomial coefficients") {
  CHECK(binomial(0, 0) == 1);
  CHECK(binomial(4, 2) == 6);
  CHECK(binomial(6, 3) == 20);
  CHECK(binomial(5, 7) == 0);
  CHECK(binom<Rational>(4, 1) == Rational(4));
}

TEST_CASE("scalar casts") {
  CHECK(scalar_cast<double>(ScalarTraits<Rational>::from_fraction(1, 2)) ==
        0.5);
  CHECK(scalar_cast<Rational>(0.25) ==
        ScalarTraits<Rational>::from_fraction(1, 4));
}
