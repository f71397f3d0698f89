#include "doctest.h"

#include "fidex/rational.hpp"

using namespace fidex;

TEST_CASE("parse and format round-trip") {
  CHECK(parse_rational("3/5") == Rat(3, 5));
  CHECK(parse_rational("-7/2") == Rat(-7, 2));
  CHECK(parse_rational("42") == Rat(42));
  CHECK(format_rational(Rat(4, 5)) == "4/5");
  CHECK(format_rational(Rat(15)) == "15");
  CHECK(format_rational(Rat(6, 4)) == "3/2");
  CHECK_THROWS_AS(parse_rational("1/0"), InputError);
  CHECK_THROWS_AS(parse_rational("a/b"), InputError);
  CHECK_THROWS_AS(parse_rational(""), InputError);
}

TEST_CASE("floor and ceil") {
  CHECK(floor_rat(Rat(7, 2)) == 3);
  CHECK(ceil_rat(Rat(7, 2)) == 4);
  CHECK(floor_rat(Rat(-7, 2)) == -4);
  CHECK(ceil_rat(Rat(-7, 2)) == -3);
  CHECK(ceil_rat(Rat(6)) == 6);
  CHECK(ceil_to_int64(Rat(40, 7)) == 6);
}

TEST_CASE("doubles are exact dyadic rationals") {
  CHECK(rat_from_double(0.5) == Rat(1, 2));
  CHECK(rat_from_double(0.75) == Rat(3, 4));
  CHECK(rat_from_double(0.0) == Rat(0));
  for (double x : {0.1, 0.3333333, 0.9999999, 1e-9, 123.456}) {
    CHECK(to_double(rat_from_double(x)) == x);
  }
}

TEST_CASE("certified natural log enclosures") {
  const RatInterval one = ln_enclosure(Rat(1), 16);
  CHECK(one.lo <= 0);
  CHECK(one.hi >= 0);
  CHECK(one.hi - one.lo < Rat(1, 1000000));

  const RatInterval two = ln_enclosure(Rat(2), 32);
  CHECK(two.lo > Rat(693146, 1000000));
  CHECK(two.hi < Rat(693148, 1000000));

  const RatInterval twenty = ln_enclosure(Rat(20), 32);
  CHECK(twenty.lo > Rat(299573, 100000));
  CHECK(twenty.hi < Rat(299574, 100000));

  const RatInterval half = ln_enclosure(Rat(1, 2), 32);
  CHECK(half.lo < 0);
  CHECK(half.hi < 0);
  CHECK(half.lo > Rat(-693148, 1000000));

  CHECK_THROWS_AS(ln_enclosure(Rat(0), 8), InputError);
  CHECK_THROWS_AS(ln_enclosure(Rat(-3), 8), InputError);
}

TEST_CASE("enclosures tighten with more terms") {
  const RatInterval coarse = ln_enclosure(Rat(20), 4);
  const RatInterval fine = ln_enclosure(Rat(20), 64);
  CHECK(fine.hi - fine.lo < coarse.hi - coarse.lo);
  CHECK(coarse.lo <= fine.lo);
  CHECK(fine.hi <= coarse.hi);
}
