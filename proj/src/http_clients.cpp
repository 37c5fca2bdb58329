#include <charconv>
#include <filesystem>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "nftaudit/chainio.hpp"
#include "nftaudit/util.hpp"

namespace nftaudit {

std::string build_token_uri_calldata(const TokenId& token) {
    // keccak256("tokenURI(uint256)") starts c87b56dd.
    return "0xc87b56dd" + token.to_hex64();
}

std::optional<std::string> decode_eth_string(std::string_view hex_result) {
    auto t = trim(hex_result);
    if (t.substr(0, 2) == "0x" || t.substr(0, 2) == "0X") t.remove_prefix(2);
    if (t.empty()) return std::string{};
    if (t.size() % 2 != 0) return std::nullopt;

    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string bytes;
    bytes.reserve(t.size() / 2);
    for (size_t i = 0; i < t.size(); i += 2) {
        int hi = nibble(t[i]), lo = nibble(t[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        bytes.push_back(static_cast<char>((hi << 4) | lo));
    }
    // Dynamic string layout: 32-byte offset, 32-byte length, data.
    if (bytes.size() < 64) return std::nullopt;
    std::uint64_t offset = 0, length = 0;
    for (size_t i = 24; i < 32; ++i)
        offset = (offset << 8) | static_cast<unsigned char>(bytes[i]);
    if (offset + 32 > bytes.size()) return std::nullopt;
    for (size_t i = offset + 24; i < offset + 32; ++i)
        length = (length << 8) | static_cast<unsigned char>(bytes[i]);
    if (offset + 32 + length > bytes.size()) return std::nullopt;
    return bytes.substr(offset + 32, length);
}

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
    // scheme://host[:port] and path remainder
    size_t scheme_end = url.find("://");
    size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    size_t path_start = url.find('/', host_start);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

long retry_after_ms(const httplib::Response& res) {
    if (!res.has_header("Retry-After")) return -1;
    auto value = res.get_header_value("Retry-After");
    long seconds = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seconds);
    if (ec != std::errc{} || ptr != value.data() + value.size()) return -1;
    return seconds * 1000;
}

class HttpExplorerClient : public ExplorerClient {
public:
    HttpExplorerClient(std::string base_url, std::string api_key)
        : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {}

    AbiResult get_abi(const std::string& address) override {
        auto [origin, path] = split_url(base_url_);
        httplib::Client client(origin);
        client.set_connection_timeout(10);
        client.set_read_timeout(10);

        httplib::Params params{{"module", "contract"},
                               {"action", "getabi"},
                               {"address", address}};
        if (!api_key_.empty()) params.emplace("apikey", api_key_);

        auto res = client.Get(path, params, httplib::Headers{});
        if (!res)
            throw TransportError("explorer unreachable: " +
                                 httplib::to_string(res.error()));
        if (res->status == 429)
            throw RateLimited("explorer rate limit (HTTP 429)", retry_after_ms(*res));
        if (res->status < 200 || res->status >= 300)
            throw TransportError("explorer HTTP " + std::to_string(res->status));
        return parse_explorer_body(address, res->body);
    }

    static AbiResult parse_explorer_body(const std::string& address,
                                         const std::string& body) {
        AbiResult result;
        result.contract_address = address;
        result.raw_response = body;

        auto j = nlohmann::json::parse(body, nullptr, false);
        std::string abi_text;
        bool ok = false;
        if (j.is_object()) {
            std::string status = j.value("status", "");
            abi_text = j.value("result", "");
            ok = status == "1";
            if (!ok && contains(to_lower(abi_text), "rate limit"))
                throw RateLimited("explorer rate limit: " + abi_text);
        }
        if (!ok) {
            result.status = AbiStatus::not_verified;
            return result;
        }
        auto abi = nlohmann::json::parse(abi_text, nullptr, false);
        if (abi.is_discarded()) {
            // OK status with an unparseable ABI payload: treat as unverified
            // rather than inventing a readable contract.
            result.status = AbiStatus::not_verified;
            return result;
        }
        result.status = AbiStatus::verified;
        result.abi_document = std::move(abi);
        return result;
    }

private:
    std::string base_url_;
    std::string api_key_;
};

class HttpNodeClient : public NodeClient {
public:
    explicit HttpNodeClient(std::string rpc_url) : rpc_url_(std::move(rpc_url)) {}

    NodeReply call_token_uri(const std::string& address, const TokenId& token) override {
        auto [origin, path] = split_url(rpc_url_);
        httplib::Client client(origin);
        client.set_connection_timeout(10);
        client.set_read_timeout(10);

        nlohmann::json request = {
            {"jsonrpc", "2.0"},
            {"method", "eth_call"},
            {"params",
             {{{"to", address}, {"data", build_token_uri_calldata(token)}}, "latest"}},
            {"id", 1}};

        auto res = client.Post(path, request.dump(), "application/json");
        if (!res)
            throw TransportError("node unreachable: " + httplib::to_string(res.error()));
        if (res->status == 429)
            throw RateLimited("node rate limit (HTTP 429)", retry_after_ms(*res));
        if (res->status < 200 || res->status >= 300)
            throw TransportError("node HTTP " + std::to_string(res->status));

        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw TransportError("node returned a non-JSON body");

        NodeReply reply;
        if (j.contains("error")) {
            const auto& err = j["error"];
            std::string message = err.is_object() ? err.value("message", err.dump())
                                                  : err.dump();
            long code = err.is_object() ? err.value("code", 0L) : 0;
            // Server-side errors are retryable; reverts are contract outcomes.
            if (code <= -32000) throw TransportError("node error: " + message);
            reply.error = message;
            return reply;
        }
        std::string hex = j.value("result", "");
        auto decoded = decode_eth_string(hex);
        if (!decoded) {
            reply.error = "undecodable tokenURI return: " + hex;
            return reply;
        }
        reply.value = *decoded;
        return reply;
    }

private:
    std::string rpc_url_;
};

class FixtureExplorerClient : public ExplorerClient {
public:
    explicit FixtureExplorerClient(std::filesystem::path dir) : dir_(std::move(dir)) {}

    AbiResult get_abi(const std::string& address) override {
        auto path = dir_ / "explorer" / (address + ".json");
        if (!std::filesystem::exists(path))
            throw TransportError("no explorer fixture for " + address);
        return HttpExplorerClient::parse_explorer_body(address, read_file(path));
    }

private:
    std::filesystem::path dir_;
};

class FixtureNodeClient : public NodeClient {
public:
    explicit FixtureNodeClient(std::filesystem::path dir) : dir_(std::move(dir)) {}

    NodeReply call_token_uri(const std::string& address, const TokenId& token) override {
        auto per_token = dir_ / "node" / (address + "." + token.str() + ".json");
        auto per_address = dir_ / "node" / (address + ".json");
        std::string body;
        if (std::filesystem::exists(per_token)) {
            body = read_file(per_token);
        } else if (std::filesystem::exists(per_address)) {
            body = read_file(per_address);
            // Per-address fallback files may template on the token id.
            const std::string placeholder = "{token_id}";
            size_t pos;
            while ((pos = body.find(placeholder)) != std::string::npos)
                body.replace(pos, placeholder.size(), token.str());
        } else {
            throw TransportError("no node fixture for " + address + " token " +
                                 token.str());
        }

        auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw TransportError("bad node fixture for " + address);
        NodeReply reply;
        if (j.contains("error")) {
            reply.error = j["error"].get<std::string>();
        } else if (j.contains("result")) {
            reply.value = j["result"].get<std::string>();
        } else {
            throw TransportError("node fixture for " + address +
                                 " has neither result nor error");
        }
        return reply;
    }

private:
    std::filesystem::path dir_;
};

} // namespace

std::unique_ptr<ExplorerClient> make_http_explorer_client(std::string base_url,
                                                          std::string api_key) {
    return std::make_unique<HttpExplorerClient>(std::move(base_url), std::move(api_key));
}

std::unique_ptr<NodeClient> make_http_node_client(std::string rpc_url) {
    return std::make_unique<HttpNodeClient>(std::move(rpc_url));
}

std::unique_ptr<ExplorerClient> make_fixture_explorer_client(std::filesystem::path dir) {
    return std::make_unique<FixtureExplorerClient>(std::move(dir));
}

std::unique_ptr<NodeClient> make_fixture_node_client(std::filesystem::path dir) {
    return std::make_unique<FixtureNodeClient>(std::move(dir));
}

} // namespace nftaudit
