#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace nftaudit {

// Standard alphabet, padded.
std::string base64_encode(std::string_view bytes);
std::string base64_encode_url_safe(std::string_view bytes, bool keep_padding = true);

// Accepts the standard and URL-safe alphabets, repairs missing padding,
// skips ASCII whitespace. Empty result on any other character.
std::optional<std::string> base64_decode(std::string_view text);

} // namespace nftaudit
