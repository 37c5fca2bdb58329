#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace nftaudit {

/// Unsigned token identifier covering the full 256-bit range. Held as a
/// canonical decimal string (no leading zeros) so external files never lose
/// width; converts to the 32-byte big-endian form used for contract calls.
class TokenId {
public:
    TokenId() : dec_("0") {}
    explicit TokenId(std::uint64_t v);

    // Accepts decimal digits only; rejects empty, non-digits, and values
    // above 2^256 - 1. Leading zeros are stripped.
    static std::optional<TokenId> parse(std::string_view s);

    const std::string& str() const { return dec_; }
    std::array<std::uint8_t, 32> to_bytes32() const;
    std::string to_hex64() const; // 64 lowercase hex chars, no 0x prefix

    bool operator==(const TokenId& o) const { return dec_ == o.dec_; }
    // Numeric order: shorter decimal first, then lexicographic.
    std::strong_ordering operator<=>(const TokenId& o) const;

private:
    std::string dec_;
};

} // namespace nftaudit
