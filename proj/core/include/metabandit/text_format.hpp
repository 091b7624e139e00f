#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace metabandit {

/// Fixed three-decimal rendering used in every prompt and rationale
/// ("%.3f", sign preserved).
std::string fixed3(double x);

/// Shortest decimal that round-trips to `x` ("1", "0.2", "-1.5").
std::string shortest(double x);

/// Strict decimal parse: optional sign, digits, optional fraction/exponent,
/// nothing else. Returns nullopt on any trailing garbage.
std::optional<double> parse_real(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace metabandit
