#include "nftaudit/token_id.hpp"

namespace nftaudit {

TokenId::TokenId(std::uint64_t v) : dec_(std::to_string(v)) {}

std::optional<TokenId> TokenId::parse(std::string_view s) {
    if (s.empty()) return std::nullopt;
    size_t first = 0;
    while (first + 1 < s.size() && s[first] == '0') ++first;
    std::string_view body = s.substr(first);
    if (body.size() > 78) return std::nullopt; // 2^256-1 has 78 digits
    for (char c : body) {
        if (c < '0' || c > '9') return std::nullopt;
    }
    TokenId id;
    id.dec_.assign(body);
    // Range check doubles as the conversion: mul-10-add overflows iff > 2^256-1.
    std::array<std::uint8_t, 32> bytes{};
    for (char c : id.dec_) {
        unsigned carry = static_cast<unsigned>(c - '0');
        for (int i = 31; i >= 0; --i) {
            unsigned v = bytes[static_cast<size_t>(i)] * 10u + carry;
            bytes[static_cast<size_t>(i)] = static_cast<std::uint8_t>(v & 0xff);
            carry = v >> 8;
        }
        if (carry != 0) return std::nullopt;
    }
    return id;
}

std::array<std::uint8_t, 32> TokenId::to_bytes32() const {
    std::array<std::uint8_t, 32> bytes{};
    for (char c : dec_) {
        unsigned carry = static_cast<unsigned>(c - '0');
        for (int i = 31; i >= 0; --i) {
            unsigned v = bytes[static_cast<size_t>(i)] * 10u + carry;
            bytes[static_cast<size_t>(i)] = static_cast<std::uint8_t>(v & 0xff);
            carry = v >> 8;
        }
    }
    return bytes;
}

std::string TokenId::to_hex64() const {
    static const char* digits = "0123456789abcdef";
    auto bytes = to_bytes32();
    std::string out;
    out.reserve(64);
    for (std::uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

std::strong_ordering TokenId::operator<=>(const TokenId& o) const {
    if (dec_.size() != o.dec_.size())
        return dec_.size() <=> o.dec_.size();
    return dec_.compare(o.dec_) <=> 0;
}

} // namespace nftaudit
