#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace irds {

bool is_valid_utf8(std::string_view bytes);

/// Copies `bytes`, replacing each maximal invalid UTF-8 subsequence with
/// U+FFFD. The number of replacements is added to `replaced`.
std::string sanitize_utf8(std::string_view bytes, std::size_t& replaced);

/// Each byte becomes the code point of the same value.
std::string latin1_to_utf8(std::string_view bytes);

/// Repairs text that was UTF-8, wrongly decoded as Latin-1, then re-encoded as
/// UTF-8 ("cafÃ©" -> "café").
///
/// Applies only when every code point is <= U+00FF and the resulting byte
/// string is valid UTF-8; otherwise the input is returned unchanged.
std::string fix_double_encoding(std::string_view text);

}  // namespace irds
