#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace nftaudit {

inline constexpr std::string_view kZeroAddress =
    "0x0000000000000000000000000000000000000000";

// 0x + 40 hex digits.
bool is_address(std::string_view s);
// 0x + 64 hex digits.
bool is_tx_hash(std::string_view s);

// Canonical form is lowercase; checksummed input is accepted, never emitted.
std::optional<std::string> normalize_address(std::string_view s);
std::optional<std::string> normalize_tx_hash(std::string_view s);

} // namespace nftaudit
