#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pidrag::text {

/// "PumpChamber" -> "pumpChamber", "NominalCapacity(Volume)" -> "nominalCapacityVolume".
std::string lower_camel(std::string_view name);

/// DEXPI attribute name -> property key: strips AssignmentClass/Specialization, then lower_camel.
std::string property_key(std::string_view dexpi_name);

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// Case-insensitive glob with '*' and '?'.
bool glob_match(std::string_view pattern, std::string_view text);

/// Shortest round-trip decimal form of a double ("1", "0.25", "1e+300").
std::string format_number(double value);

/// Parses text as a double only if format_number() reproduces it exactly.
std::optional<double> parse_lossless_number(std::string_view s);

/// Number of Unicode code points in UTF-8 text (invalid bytes count as one each).
std::size_t utf8_length(std::string_view s);

/// Orders digit runs by numeric value: "Nozzle-2" < "Nozzle-10".
bool natural_less(const std::string& a, const std::string& b);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string trim(std::string_view s);

} // namespace pidrag::text
