#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nftaudit/errors.hpp"

namespace nftaudit {

/// Scheme + host root of a token URI, the unit of storage classification.
/// For hierarchical URIs, scheme + "://" + host_root is a prefix of the
/// lowercased raw string.
struct UriStem {
    std::string scheme;    // lowercase; "" when the string has no scheme
    std::string host_root; // lowercase; empty for non-hierarchical schemes
    std::string raw;

    bool same_location(const UriStem& o) const {
        return scheme == o.scheme && host_root == o.host_root;
    }
};

enum class StorageKind {
    ipfs,
    pinata,
    cloud_provider,
    private_domain,
    onchain_base64,
    unreadable,
};

struct StorageCategory {
    StorageKind kind = StorageKind::unreadable;
    std::string cloud_keyword; // set iff kind == cloud_provider

    bool operator==(const StorageCategory&) const = default;
};

enum class PermanenceClass { permanent, non_permanent, not_readable };

std::string_view storage_kind_name(StorageKind k);
std::optional<StorageKind> parse_storage_kind(std::string_view name);
std::string_view permanence_name(PermanenceClass c);

// "cloud_provider(aws)" for cloud rows, the plain kind name otherwise.
std::string storage_label(const StorageCategory& c);

/// Splits a raw token URI at the first "//" boundary: scheme and host root
/// lowercased, "data" URIs yield an empty host, scheme-less strings keep
/// their first path segment as the host root. Throws DataError on
/// empty/whitespace input.
UriStem split_uri(std::string_view raw);

// The twelve provider keywords used when no config file overrides them.
const std::vector<std::string>& default_cloud_keywords();
std::vector<std::string> load_cloud_keywords(const std::filesystem::path& path);

/// Assigns exactly one storage category. Rule order: on-chain data URIs,
/// then pinata, then ipfs, then cloud keywords (first match in list order),
/// then private domain.
StorageCategory classify_uri(const UriStem& stem,
                             std::span<const std::string> cloud_keywords);

PermanenceClass map_permanence(StorageKind kind);
std::string_view permanence_of(const StorageCategory& c);

// ---- data URIs ------------------------------------------------------------

struct DataUriParts {
    std::string media_type; // lowercase
    bool base64 = false;
    std::string_view payload;
};

std::optional<DataUriParts> parse_data_uri(std::string_view raw);

struct OnChainAsset {
    nlohmann::json metadata;
    std::string metadata_raw;                    // decoded payload bytes
    std::optional<std::string> image_payload;    // second-layer decode
    std::optional<std::string> image_media_type; // present iff payload is
};

class DecodeError : public DataError {
public:
    enum class Kind { bad_prefix, invalid_base64, payload_not_parseable };
    DecodeError(Kind kind, const std::string& msg, std::string raw_payload)
        : DataError(msg), kind(kind), raw_payload(std::move(raw_payload)) {}
    Kind kind;
    std::string raw_payload;
};

/// Decodes a "data:application/json;base64," URI into its metadata document.
/// Throws DecodeError with kind bad_prefix / invalid_base64 /
/// payload_not_parseable; the raw payload is retained on the error.
OnChainAsset decode_onchain_json(std::string_view data_uri);

/// Second decode layer: when the metadata's image field is a base64 SVG data
/// URI, fills image_payload/image_media_type. Other image forms leave the
/// payload absent. Throws DecodeError on a corrupt second layer.
void decode_onchain_image(OnChainAsset& asset);

// Encoding counterparts, used by fixtures and round-trip checks.
std::string make_json_data_uri(const nlohmann::json& doc, bool url_safe = false,
                               bool strip_padding = false);
std::string make_svg_data_uri(std::string_view svg_bytes, bool url_safe = false,
                              bool strip_padding = false);

/// Writes <contract>_<token>.json (and .svg when an image payload is
/// present) under dir; returns the paths written.
std::vector<std::filesystem::path>
export_onchain_asset(const std::filesystem::path& dir, std::string_view contract,
                     std::string_view token, const OnChainAsset& asset);

} // namespace nftaudit
