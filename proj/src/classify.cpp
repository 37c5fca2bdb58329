#include "nftaudit/classify.hpp"

#include <cctype>
#include <fstream>

#include "nftaudit/base64.hpp"
#include "nftaudit/util.hpp"

namespace nftaudit {

std::string_view storage_kind_name(StorageKind k) {
    switch (k) {
    case StorageKind::ipfs: return "ipfs";
    case StorageKind::pinata: return "pinata";
    case StorageKind::cloud_provider: return "cloud_provider";
    case StorageKind::private_domain: return "private_domain";
    case StorageKind::onchain_base64: return "onchain_base64";
    case StorageKind::unreadable: return "unreadable";
    }
    return "unreadable";
}

std::optional<StorageKind> parse_storage_kind(std::string_view name) {
    for (StorageKind k :
         {StorageKind::ipfs, StorageKind::pinata, StorageKind::cloud_provider,
          StorageKind::private_domain, StorageKind::onchain_base64,
          StorageKind::unreadable}) {
        if (storage_kind_name(k) == name) return k;
    }
    return std::nullopt;
}

std::string_view permanence_name(PermanenceClass c) {
    switch (c) {
    case PermanenceClass::permanent: return "permanent";
    case PermanenceClass::non_permanent: return "non-permanent";
    case PermanenceClass::not_readable: return "not readable";
    }
    return "not readable";
}

std::string storage_label(const StorageCategory& c) {
    if (c.kind == StorageKind::cloud_provider && !c.cloud_keyword.empty())
        return "cloud_provider(" + c.cloud_keyword + ")";
    return std::string(storage_kind_name(c.kind));
}

namespace {

bool has_scheme(std::string_view s, size_t* colon_pos) {
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    for (size_t i = 1; i < s.size(); ++i) {
        char c = s[i];
        if (c == ':') {
            *colon_pos = i;
            return true;
        }
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' &&
            c != '.')
            return false;
    }
    return false;
}

// Host root runs to the next path/query/fragment delimiter.
std::string_view take_host_root(std::string_view rest) {
    size_t end = rest.find_first_of("/?#");
    return rest.substr(0, end);
}

} // namespace

UriStem split_uri(std::string_view raw) {
    std::string_view t = trim(raw);
    if (t.empty()) throw DataError("split_uri: empty URI");

    UriStem stem;
    stem.raw.assign(t);

    size_t colon = 0;
    if (has_scheme(t, &colon)) {
        stem.scheme = to_lower(t.substr(0, colon));
        std::string_view rest = t.substr(colon + 1);
        if (rest.substr(0, 2) == "//") {
            stem.host_root = to_lower(take_host_root(rest.substr(2)));
        }
        // Non-hierarchical schemes (data:, mailto:) keep an empty host root.
        return stem;
    }

    // Scheme-less: first path segment stands in for the host.
    stem.host_root = to_lower(take_host_root(t));
    return stem;
}

const std::vector<std::string>& default_cloud_keywords() {
    static const std::vector<std::string> keywords = {
        "heroku",  "aws",     "google",  "s3",
        "azure",   "microsoft", "kyndryl", "digitalocean",
        "linode",  "alibaba", "oracle",  "tencent",
    };
    return keywords;
}

std::vector<std::string> load_cloud_keywords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open keyword list: " + path.string());
    std::vector<std::string> keywords;
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        keywords.emplace_back(to_lower(t));
    }
    return keywords;
}

StorageCategory classify_uri(const UriStem& stem,
                             std::span<const std::string> cloud_keywords) {
    // Rule 1: on-chain data URIs. JSON media type is the canonical token
    // metadata form; any base64 data URI (e.g. an inline SVG asset) is also
    // on-chain. Plain-text data URIs of other types fall through.
    if (stem.scheme == "data") {
        if (auto parts = parse_data_uri(stem.raw)) {
            if (parts->media_type == "application/json" || parts->base64)
                return {StorageKind::onchain_base64, {}};
        }
    }
    // Rule 2: pinata before ipfs; its gateways carry "ipfs" in the host.
    if (contains(stem.host_root, "pinata") || contains(stem.scheme, "pinata"))
        return {StorageKind::pinata, {}};
    // Rule 3
    if (stem.scheme == "ipfs" || contains(stem.host_root, "ipfs"))
        return {StorageKind::ipfs, {}};
    // Rule 4: plain substring match over the host, first keyword in list order.
    for (const std::string& kw : cloud_keywords) {
        if (!kw.empty() && contains(stem.host_root, kw))
            return {StorageKind::cloud_provider, kw};
    }
    return {StorageKind::private_domain, {}};
}

PermanenceClass map_permanence(StorageKind kind) {
    switch (kind) {
    case StorageKind::ipfs:
    case StorageKind::pinata:
    case StorageKind::onchain_base64:
        return PermanenceClass::permanent;
    case StorageKind::cloud_provider:
    case StorageKind::private_domain:
        return PermanenceClass::non_permanent;
    case StorageKind::unreadable:
        return PermanenceClass::not_readable;
    }
    return PermanenceClass::not_readable;
}

std::string_view permanence_of(const StorageCategory& c) {
    return permanence_name(map_permanence(c.kind));
}

std::optional<DataUriParts> parse_data_uri(std::string_view raw) {
    std::string_view t = trim(raw);
    if (!starts_with_ci(t, "data:")) return std::nullopt;
    t.remove_prefix(5);
    size_t comma = t.find(',');
    if (comma == std::string_view::npos) return std::nullopt;

    std::string_view header = t.substr(0, comma);
    DataUriParts parts;
    parts.payload = t.substr(comma + 1);

    size_t semi = header.find(';');
    parts.media_type = to_lower(header.substr(0, semi));
    while (semi != std::string_view::npos) {
        size_t next = header.find(';', semi + 1);
        std::string_view param = header.substr(
            semi + 1, next == std::string_view::npos ? next : next - semi - 1);
        if (to_lower(trim(param)) == "base64") parts.base64 = true;
        semi = next;
    }
    return parts;
}

namespace {

constexpr std::string_view kJsonPrefix = "data:application/json;base64,";
constexpr std::string_view kSvgPrefix = "data:image/svg+xml;base64,";

std::string snippet(std::string_view payload) {
    return std::string(payload.substr(0, 256));
}

} // namespace

OnChainAsset decode_onchain_json(std::string_view data_uri) {
    std::string_view t = trim(data_uri);
    if (!starts_with_ci(t, kJsonPrefix))
        throw DecodeError(DecodeError::Kind::bad_prefix,
                          "not a base64 JSON data URI", snippet(t));
    std::string_view payload = t.substr(kJsonPrefix.size());

    auto decoded = base64_decode(payload);
    if (!decoded)
        throw DecodeError(DecodeError::Kind::invalid_base64,
                          "invalid base64 in metadata layer", snippet(payload));

    OnChainAsset asset;
    asset.metadata_raw = *decoded;
    asset.metadata = nlohmann::json::parse(*decoded, nullptr, false);
    if (asset.metadata.is_discarded())
        throw DecodeError(DecodeError::Kind::payload_not_parseable,
                          "decoded metadata is not a document", *decoded);
    return asset;
}

void decode_onchain_image(OnChainAsset& asset) {
    asset.image_payload.reset();
    asset.image_media_type.reset();
    if (!asset.metadata.is_object()) return;
    auto it = asset.metadata.find("image");
    if (it == asset.metadata.end() || !it->is_string()) return;

    const std::string image = it->get<std::string>();
    std::string_view t = trim(image);
    if (!starts_with_ci(t, kSvgPrefix)) return; // remote or non-base64 image

    auto decoded = base64_decode(t.substr(kSvgPrefix.size()));
    if (!decoded)
        throw DecodeError(DecodeError::Kind::invalid_base64,
                          "invalid base64 in image layer",
                          snippet(t.substr(kSvgPrefix.size())));
    asset.image_payload = std::move(*decoded);
    asset.image_media_type = "image/svg+xml";
}

std::string make_json_data_uri(const nlohmann::json& doc, bool url_safe,
                               bool strip_padding) {
    std::string payload = doc.dump();
    std::string encoded = url_safe ? base64_encode_url_safe(payload, !strip_padding)
                                   : base64_encode(payload);
    if (strip_padding && !url_safe) {
        while (!encoded.empty() && encoded.back() == '=') encoded.pop_back();
    }
    return std::string(kJsonPrefix) + encoded;
}

std::string make_svg_data_uri(std::string_view svg_bytes, bool url_safe,
                              bool strip_padding) {
    std::string encoded = url_safe ? base64_encode_url_safe(svg_bytes, !strip_padding)
                                   : base64_encode(svg_bytes);
    if (strip_padding && !url_safe) {
        while (!encoded.empty() && encoded.back() == '=') encoded.pop_back();
    }
    return std::string(kSvgPrefix) + encoded;
}

std::vector<std::filesystem::path>
export_onchain_asset(const std::filesystem::path& dir, std::string_view contract,
                     std::string_view token, const OnChainAsset& asset) {
    std::filesystem::create_directories(dir);
    std::string base = std::string(contract) + "_" + std::string(token);
    std::vector<std::filesystem::path> written;

    auto json_path = dir / (base + ".json");
    write_file_atomic(json_path, asset.metadata_raw);
    written.push_back(json_path);

    if (asset.image_payload) {
        auto svg_path = dir / (base + ".svg");
        write_file_atomic(svg_path, *asset.image_payload);
        written.push_back(svg_path);
    }
    return written;
}

} // namespace nftaudit
