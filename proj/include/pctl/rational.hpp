#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <string_view>

namespace pctl {

// Exact fraction; the only numeric type used in semantic computations.
using Rational = mpq_class;
using Integer = mpz_class;

// Accepts `3`, `0.25`, `.5` and `1/4`. Returns nullopt on malformed input or a
// zero denominator.
std::optional<Rational> parse_rational(std::string_view text);

// Canonical `p/q` form (`q` omitted when it is 1), e.g. "3/5", "1", "0".
std::string to_string(const Rational& value);

// Simplest continued-fraction convergent of `exact` within `tolerance`.
Rational rationalize(const Rational& exact, const Rational& tolerance);

}  // namespace pctl
