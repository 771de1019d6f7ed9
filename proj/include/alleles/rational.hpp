#pragma once

#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace alleles {

/// Arbitrary-precision rational used by the exact (oracle) code paths.
using Rational = boost::multiprecision::cpp_rational;

/// Parses "num/den", an integer, or a decimal literal ("0.125", "2.5e-3")
/// into an exact rational. Throws std::invalid_argument on malformed input.
Rational parse_rational(std::string_view text);

/// "num/den", or just "num" when the denominator is 1.
std::string to_string(const Rational& value);

inline double to_double(const Rational& value) { return value.convert_to<double>(); }
inline double to_double(double value) { return value; }

}  // namespace alleles
