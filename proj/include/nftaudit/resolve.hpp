#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nftaudit/classify.hpp"
#include "nftaudit/errors.hpp"
#include "nftaudit/ingest.hpp"

namespace nftaudit {

struct FetchResponse {
    int status = 0;
    std::string media_type; // declared content type, parameters stripped
    std::string body;
};

/// Pluggable fetch backend; throws TransportError when the host is
/// unreachable, the response exceeds the byte cap, or the fetch times out.
class Fetcher {
public:
    virtual ~Fetcher() = default;
    virtual FetchResponse fetch(const std::string& url) = 0;
};

// Real HTTP backend (10s timeout, 16 MiB cap by default).
std::unique_ptr<Fetcher> make_http_fetcher(int timeout_seconds = 10,
                                           std::size_t max_bytes = 16u << 20);

// File-backed replay: <dir>/manifest.json maps exact URLs to
// {"file": ..., "media_type": ..., "status": ...} entries.
std::unique_ptr<Fetcher> make_fixture_fetcher(std::filesystem::path dir);

/// Ordered prefix rewrites applied before fetching (first match wins), e.g.
/// ipfs:// -> https://ipfs.io/ipfs/ with ipfs://ipfs/ collapsed first.
class GatewayMap {
public:
    static GatewayMap defaults();
    // Lines of "scheme_prefix -> replacement_prefix"; '#' starts a comment.
    static GatewayMap parse(std::string_view text);
    static GatewayMap load(const std::filesystem::path& path);

    void add(std::string prefix, std::string replacement);
    std::string map(const std::string& uri) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

enum class StepTransport { network_fetch, inline_decode };

struct ResolutionStep {
    std::string uri;
    StepTransport transport = StepTransport::network_fetch;
    std::string media_type;
    std::uint64_t byte_size = 0;
};

enum class TraceStatus { resolved, broken_link, depth_exceeded };

std::string_view trace_status_name(TraceStatus s);

struct ResolutionTrace {
    TokenRef token;
    std::vector<ResolutionStep> steps;
    std::uint32_t click_depth = 0; // count of network_fetch steps
    std::optional<std::string> final_asset_uri;
    StorageCategory final_category;
    TraceStatus status = TraceStatus::broken_link;
};

struct ResolveOptions {
    GatewayMap gateways = GatewayMap::defaults();
    std::vector<std::string> asset_keys = {"image", "image_url", "animation_url"};
    std::uint32_t max_depth = 5;
    std::vector<std::string> cloud_keywords;
};

struct FetchedDocument {
    nlohmann::json document;
    std::string media_type;
    std::uint64_t byte_size = 0;
};

/// Fetches one metadata document through the gateway map. Unreachable hosts,
/// non-success statuses and non-parseable bodies throw TransportError; the
/// caller folds those into broken_link.
FetchedDocument fetch_metadata(Fetcher& fetcher, const std::string& uri,
                               const GatewayMap& gateways);

/// First present string value among the configured keys, in order.
std::optional<std::string> extract_asset_uri(const nlohmann::json& metadata,
                                             std::span<const std::string> keys);

/// Follows a tokenURI to its final asset. Data URIs decode inline with no
/// depth contribution; each metadata fetch adds one; the walk stops at the
/// first non-document asset, a missing asset field (broken_link), or after
/// max_depth fetches (depth_exceeded). Never fetches more than max_depth
/// times.
ResolutionTrace trace_asset(Fetcher& fetcher, const TokenRef& token,
                            const std::string& token_uri, const ResolveOptions& options);

// Trace stage file: one JSON object per line.
std::string trace_to_json_line(const ResolutionTrace& trace);

} // namespace nftaudit
