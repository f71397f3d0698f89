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
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>

namespace fidex {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

/// Malformed or out-of-contract input. The CLI maps this to exit code 4.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A planning or enumeration budget was exceeded. CLI exit code 3.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses "p", "-p" or "p/q" with a positive denominator.
Rat parse_rational(const std::string& text);

/// Renders an exact rational as "p" (integral) or "p/q".
std::string format_rational(const Rat& x);

double to_double(const Rat& x);

/// Exact rational value of a finite double (doubles are dyadic rationals).
Rat rat_from_double(double u);

BigInt floor_rat(const Rat& x);
BigInt ceil_rat(const Rat& x);
long long ceil_to_int64(const Rat& x);

struct RatInterval {
  Rat lo;
  Rat hi;
};

/// Certified enclosure of ln(x) for rational x > 0. The true value lies in
/// [lo, hi]; `terms` controls the series length (wider -> tighter).
RatInterval ln_enclosure(const Rat& x, int terms);

}  // namespace fidex
