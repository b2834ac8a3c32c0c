#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace elab {

/// Shortest decimal form that parses back to the same double ("60", "1e-04").
std::string format_double(double v);

/// Like format_double but always carries a '.' or exponent so it lexes as a float.
std::string format_float_literal(double v);

std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<std::uint64_t> parse_uint(std::string_view s);
std::optional<double> parse_double(std::string_view s);

/// Splits on runs of ASCII whitespace.
std::vector<std::string_view> split_ws(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Nanoseconds since the Unix epoch, system clock.
std::int64_t now_ns();

/// "YYYY-MM-DDTHH:MM:SS.mmmZ"
std::string format_timestamp(std::int64_t ns);

} // namespace elab
