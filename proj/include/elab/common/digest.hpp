#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace elab {

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Lower-case hex SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

/// Random bytes from the system CSPRNG, hex encoded.
std::string random_token(std::size_t n_bytes);

} // namespace elab
