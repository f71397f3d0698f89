/*
 * Copyright 2026 The fidex authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "fidex/rational.hpp"

#include <cctype>
#include <cmath>
#include <limits>

namespace fidex {

namespace {

BigInt parse_bigint(const std::string& text) {
  if (text.empty()) throw InputError("empty integer literal");
  std::size_t start = (text[0] == '-' || text[0] == '+') ? 1 : 0;
  if (start == text.size()) throw InputError("bad integer literal: " + text);
  for (std::size_t i = start; i < text.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      throw InputError("bad integer literal: " + text);
    }
  }
  return BigInt(text);
}

}  // namespace

Rat parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) return Rat(parse_bigint(text));
  const BigInt num = parse_bigint(text.substr(0, slash));
  const BigInt den = parse_bigint(text.substr(slash + 1));
  if (den <= 0) throw InputError("denominator must be positive: " + text);
  return Rat(num, den);
}

std::string format_rational(const Rat& x) {
  const BigInt den = denominator(x);
  if (den == 1) return numerator(x).str();
  return numerator(x).str() + "/" + den.str();
}

double to_double(const Rat& x) { return static_cast<double>(x); }

Rat rat_from_double(double u) {
  if (!std::isfinite(u)) throw InputError("non-finite double");
  if (u == 0.0) return Rat(0);
  int exp = 0;
  const double mant = std::frexp(u, &exp);  // u = mant * 2^exp, |mant| in [0.5, 1)
  const auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  Rat result(scaled);
  const int shift = exp - 53;
  BigInt pow2 = BigInt(1) << static_cast<unsigned>(shift < 0 ? -shift : shift);
  if (shift >= 0) {
    result *= Rat(pow2);
  } else {
    result /= Rat(pow2);
  }
  return result;
}

BigInt floor_rat(const Rat& x) {
  BigInt q = numerator(x) / denominator(x);
  if (numerator(x) < 0 && q * denominator(x) != numerator(x)) --q;
  return q;
}

BigInt ceil_rat(const Rat& x) {
  BigInt q = numerator(x) / denominator(x);
  if (numerator(x) > 0 && q * denominator(x) != numerator(x)) ++q;
  return q;
}

long long ceil_to_int64(const Rat& x) {
  const BigInt c = ceil_rat(x);
  if (c > std::numeric_limits<long long>::max() ||
      c < std::numeric_limits<long long>::min()) {
    throw InputError("value does not fit in 64 bits: " + c.str());
  }
  return static_cast<long long>(c);
}

namespace {

// 2*atanh(z) = ln((1+z)/(1-z)) via the odd power series; the tail of the
// series is bounded by the first omitted term times a geometric factor.
RatInterval two_atanh_enclosure(const Rat& z, int terms) {
  const Rat z2 = z * z;
  Rat sum(0);
  Rat power = z;
  for (int j = 0; j < terms; ++j) {
    sum += power / (2 * j + 1);
    power *= z2;
  }
  sum *= 2;
  // |power| = |z|^(2*terms+1) after the loop.
  Rat tail = 2 * abs(power) / ((2 * terms + 1) * (1 - z2));
  if (z >= 0) return {sum, sum + tail};
  return {sum - tail, sum};
}

}  // namespace

RatInterval ln_enclosure(const Rat& x, int terms) {
  if (x <= 0) throw InputError("ln of non-positive value");
  if (terms < 1) terms = 1;
  Rat m = x;
  long long k = 0;
  while (m >= Rat(3, 2)) {
    m /= 2;
    ++k;
  }
  while (m < Rat(3, 4)) {
    m *= 2;
    --k;
  }
  const RatInterval ln_m = two_atanh_enclosure((m - 1) / (m + 1), terms);
  if (k == 0) return ln_m;
  const RatInterval ln2 = two_atanh_enclosure(Rat(1, 3), terms);
  if (k > 0) return {k * ln2.lo + ln_m.lo, k * ln2.hi + ln_m.hi};
  return {k * ln2.hi + ln_m.lo, k * ln2.lo + ln_m.hi};
}

}  // namespace fidex
