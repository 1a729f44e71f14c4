#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace flowrace {

std::string base64_encode(std::string_view bytes);
std::optional<std::string> base64_decode(std::string_view text);

bool is_valid_utf8(std::string_view bytes);

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

// Shell-style glob: '*' matches any run (including empty), '?' one character.
bool glob_match(std::string_view pattern, std::string_view text);

std::string to_lower(std::string_view s);

}  // namespace flowrace
