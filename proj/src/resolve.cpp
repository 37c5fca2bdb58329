#include "nftaudit/resolve.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <httplib.h>

#include "nftaudit/base64.hpp"
#include "nftaudit/util.hpp"

namespace nftaudit {

std::string_view trace_status_name(TraceStatus s) {
    switch (s) {
    case TraceStatus::resolved: return "resolved";
    case TraceStatus::broken_link: return "broken_link";
    case TraceStatus::depth_exceeded: return "depth_exceeded";
    }
    return "broken_link";
}

// ---- fetchers ---------------------------------------------------------------

namespace {

std::string strip_media_params(std::string_view content_type) {
    size_t semi = content_type.find(';');
    return to_lower(trim(content_type.substr(0, semi)));
}

class HttpFetcher : public Fetcher {
public:
    HttpFetcher(int timeout_seconds, std::size_t max_bytes)
        : timeout_seconds_(timeout_seconds), max_bytes_(max_bytes) {}

    FetchResponse fetch(const std::string& url) override {
        size_t scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw TransportError("not a fetchable URL: " + url);
        size_t path_start = url.find('/', scheme_end + 3);
        std::string origin =
            path_start == std::string::npos ? url : url.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(origin);
        client.set_connection_timeout(timeout_seconds_);
        client.set_read_timeout(timeout_seconds_);
        client.set_follow_location(true); // transport-level redirects are not hops

        std::string body;
        std::string content_type;
        bool too_large = false;
        auto res = client.Get(
            path,
            [&](const httplib::Response& response) {
                content_type = response.get_header_value("Content-Type");
                return true;
            },
            [&](const char* data, size_t len) {
                if (body.size() + len > max_bytes_) {
                    too_large = true;
                    return false;
                }
                body.append(data, len);
                return true;
            });
        if (too_large) throw TransportError("response exceeds byte cap: " + url);
        if (!res)
            throw TransportError("unreachable host: " + url + " (" +
                                 httplib::to_string(res.error()) + ")");
        if (res->status < 200 || res->status >= 300)
            throw TransportError("HTTP " + std::to_string(res->status) + ": " + url);

        FetchResponse out;
        out.status = res->status;
        out.media_type = strip_media_params(content_type);
        out.body = std::move(body);
        return out;
    }

private:
    int timeout_seconds_;
    std::size_t max_bytes_;
};

class FixtureFetcher : public Fetcher {
public:
    explicit FixtureFetcher(std::filesystem::path dir) : dir_(std::move(dir)) {
        auto manifest_path = dir_ / "manifest.json";
        if (!std::filesystem::exists(manifest_path))
            throw DataError("fixture fetcher: missing " + manifest_path.string());
        manifest_ = nlohmann::json::parse(read_file(manifest_path));
    }

    FetchResponse fetch(const std::string& url) override {
        auto it = manifest_.find(url);
        if (it == manifest_.end())
            throw TransportError("unreachable host (no fixture): " + url);
        FetchResponse out;
        out.status = it->value("status", 200);
        if (out.status < 200 || out.status >= 300)
            throw TransportError("HTTP " + std::to_string(out.status) + ": " + url);
        out.media_type = it->value("media_type", "application/octet-stream");
        out.body = read_file(dir_ / it->value("file", ""));
        return out;
    }

private:
    std::filesystem::path dir_;
    nlohmann::json manifest_;
};

} // namespace

std::unique_ptr<Fetcher> make_http_fetcher(int timeout_seconds, std::size_t max_bytes) {
    return std::make_unique<HttpFetcher>(timeout_seconds, max_bytes);
}

std::unique_ptr<Fetcher> make_fixture_fetcher(std::filesystem::path dir) {
    return std::make_unique<FixtureFetcher>(std::move(dir));
}

// ---- gateway map ------------------------------------------------------------

GatewayMap GatewayMap::defaults() {
    GatewayMap map;
    map.add("ipfs://ipfs/", "https://ipfs.io/ipfs/");
    map.add("ipfs://", "https://ipfs.io/ipfs/");
    return map;
}

GatewayMap GatewayMap::parse(std::string_view text) {
    GatewayMap map;
    for (const auto& raw_line : split(text, '\n')) {
        auto line = trim(raw_line);
        if (line.empty() || line[0] == '#') continue;
        size_t arrow = line.find("->");
        if (arrow == std::string_view::npos)
            throw DataError("gateway map line missing '->': " + std::string(line));
        map.add(std::string(trim(line.substr(0, arrow))),
                std::string(trim(line.substr(arrow + 2))));
    }
    return map;
}

GatewayMap GatewayMap::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

void GatewayMap::add(std::string prefix, std::string replacement) {
    entries_.emplace_back(std::move(prefix), std::move(replacement));
}

std::string GatewayMap::map(const std::string& uri) const {
    for (const auto& [prefix, replacement] : entries_) {
        if (uri.size() >= prefix.size() && uri.compare(0, prefix.size(), prefix) == 0)
            return replacement + uri.substr(prefix.size());
    }
    return uri;
}

// ---- resolution -------------------------------------------------------------

namespace {

const std::unordered_set<std::string>& media_extensions() {
    static const std::unordered_set<std::string> exts = {
        "png", "jpg", "jpeg", "gif", "svg", "webp", "bmp", "avif",
        "tif", "tiff", "ico", "mp4", "webm", "mov", "avi", "mkv"};
    return exts;
}

std::string path_extension(std::string_view uri) {
    size_t cut = uri.find_first_of("?#");
    std::string_view path = uri.substr(0, cut);
    size_t slash = path.find_last_of('/');
    std::string_view last = slash == std::string_view::npos ? path : path.substr(slash + 1);
    size_t dot = last.find_last_of('.');
    if (dot == std::string_view::npos || dot + 1 == last.size()) return "";
    return to_lower(last.substr(dot + 1));
}

bool has_media_extension(const std::string& uri) {
    return media_extensions().count(path_extension(uri)) > 0;
}

bool is_asset_media_type(std::string_view media_type) {
    return media_type.substr(0, 6) == "image/" || media_type.substr(0, 6) == "video/";
}

struct DecodedDataUri {
    std::string media_type;
    std::string payload;
};

std::optional<DecodedDataUri> decode_data_uri(const std::string& uri) {
    auto parts = parse_data_uri(uri);
    if (!parts) return std::nullopt;
    DecodedDataUri out;
    out.media_type = parts->media_type;
    if (parts->base64) {
        auto decoded = base64_decode(parts->payload);
        if (!decoded) return std::nullopt;
        out.payload = std::move(*decoded);
    } else {
        out.payload = std::string(parts->payload);
    }
    return out;
}

} // namespace

FetchedDocument fetch_metadata(Fetcher& fetcher, const std::string& uri,
                               const GatewayMap& gateways) {
    FetchResponse response = fetcher.fetch(gateways.map(uri));
    auto doc = nlohmann::json::parse(response.body, nullptr, false);
    if (doc.is_discarded())
        throw TransportError("metadata at " + uri + " is not a parseable document");
    return {std::move(doc), response.media_type, response.body.size()};
}

std::optional<std::string> extract_asset_uri(const nlohmann::json& metadata,
                                             std::span<const std::string> keys) {
    if (!metadata.is_object()) return std::nullopt;
    for (const auto& key : keys) {
        auto it = metadata.find(key);
        if (it != metadata.end() && it->is_string()) return it->get<std::string>();
    }
    return std::nullopt;
}

ResolutionTrace trace_asset(Fetcher& fetcher, const TokenRef& token,
                            const std::string& token_uri, const ResolveOptions& options) {
    if (options.max_depth < 1) throw UsageError("max_depth must be >= 1");

    std::span<const std::string> keywords =
        options.cloud_keywords.empty() ? std::span<const std::string>(default_cloud_keywords())
                                       : std::span<const std::string>(options.cloud_keywords);

    ResolutionTrace trace;
    trace.token = token;
    trace.status = TraceStatus::broken_link;

    auto resolve_to = [&](const std::string& asset_uri) {
        trace.status = TraceStatus::resolved;
        trace.final_asset_uri = asset_uri;
        trace.final_category = classify_uri(split_uri(asset_uri), keywords);
    };

    std::string current = token_uri;
    while (true) {
        if (trim(current).empty()) return trace; // broken_link

        if (starts_with_ci(trim(current), "data:")) {
            auto decoded = decode_data_uri(current);
            if (!decoded) return trace;
            trace.steps.push_back({current, StepTransport::inline_decode,
                                   decoded->media_type, decoded->payload.size()});
            if (is_asset_media_type(decoded->media_type)) {
                resolve_to(current);
                return trace;
            }
            auto doc = nlohmann::json::parse(decoded->payload, nullptr, false);
            if (doc.is_discarded()) return trace;
            auto next = extract_asset_uri(doc, options.asset_keys);
            if (!next) return trace;
            current = *next;
            continue;
        }

        // A URI that already names a media file is the asset; no fetch needed.
        if (has_media_extension(current)) {
            resolve_to(current);
            return trace;
        }

        if (trace.click_depth >= options.max_depth) {
            trace.status = TraceStatus::depth_exceeded;
            return trace;
        }

        FetchResponse response;
        try {
            response = fetcher.fetch(options.gateways.map(current));
        } catch (const TransportError&) {
            return trace; // broken_link
        }

        if (is_asset_media_type(response.media_type)) {
            // The fetch that turns out to be the asset view is not a
            // metadata hop; it stays off the step list and the click count.
            resolve_to(current);
            return trace;
        }

        auto doc = nlohmann::json::parse(response.body, nullptr, false);
        if (doc.is_discarded()) return trace;

        trace.steps.push_back({current, StepTransport::network_fetch,
                               response.media_type, response.body.size()});
        ++trace.click_depth;

        auto next = extract_asset_uri(doc, options.asset_keys);
        if (!next) return trace;
        current = *next;
    }
}

std::string trace_to_json_line(const ResolutionTrace& trace) {
    nlohmann::ordered_json j;
    j["contract_address"] = trace.token.contract_address;
    j["token_id"] = trace.token.token_id.str();
    j["status"] = trace_status_name(trace.status);
    j["click_depth"] = trace.click_depth;
    if (trace.final_asset_uri) {
        j["final_asset_uri"] = *trace.final_asset_uri;
        j["final_category"] = storage_label(trace.final_category);
        j["permanence"] = permanence_of(trace.final_category);
    }
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (const auto& step : trace.steps) {
        nlohmann::ordered_json s;
        s["uri"] = step.uri;
        s["transport"] = step.transport == StepTransport::network_fetch
                             ? "network_fetch"
                             : "inline_decode";
        s["media_type"] = step.media_type;
        s["byte_size"] = step.byte_size;
        steps.push_back(std::move(s));
    }
    j["steps"] = std::move(steps);
    return j.dump();
}

} // namespace nftaudit
