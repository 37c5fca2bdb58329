#include "nftaudit/addresses.hpp"

#include <cctype>

#include "nftaudit/util.hpp"

namespace nftaudit {

namespace {

bool is_hex_with_prefix(std::string_view s, size_t digits) {
    if (s.size() != digits + 2 || s[0] != '0' || (s[1] != 'x' && s[1] != 'X'))
        return false;
    for (size_t i = 2; i < s.size(); ++i) {
        if (!std::isxdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    return true;
}

} // namespace

bool is_address(std::string_view s) { return is_hex_with_prefix(s, 40); }
bool is_tx_hash(std::string_view s) { return is_hex_with_prefix(s, 64); }

std::optional<std::string> normalize_address(std::string_view s) {
    auto t = trim(s);
    if (!is_address(t)) return std::nullopt;
    return to_lower(t);
}

std::optional<std::string> normalize_tx_hash(std::string_view s) {
    auto t = trim(s);
    if (!is_tx_hash(t)) return std::nullopt;
    return to_lower(t);
}

} // namespace nftaudit
