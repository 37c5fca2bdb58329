#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nftaudit/errors.hpp"
#include "nftaudit/ingest.hpp"
#include "nftaudit/token_id.hpp"

namespace nftaudit {

enum class AbiStatus { verified, not_verified };

struct AbiResult {
    std::string contract_address;
    AbiStatus status = AbiStatus::not_verified;
    std::optional<nlohmann::json> abi_document; // present iff verified
    std::string raw_response;                   // kept verbatim for taxonomy matching
};

enum class TokenUriStatus { uri, nonexistent_token, method_missing, empty_string };

struct TokenUriOutcome {
    std::string contract_address;
    TokenId token_id;
    TokenUriStatus status = TokenUriStatus::empty_string;
    std::string value;                    // non-empty after trimming iff status == uri
    std::optional<std::string> raw_error; // node/explorer response on failure
};

enum class Readability { readable, bytecode_only, invalid_abi_or_token_id, empty_string };

std::string_view readability_name(Readability r);
std::optional<Readability> parse_readability(std::string_view name);

struct ContractProbe {
    std::string contract_address;
    Readability readability = Readability::bytecode_only;
    std::optional<std::string> sample_token_uri; // present iff readable
    std::int64_t probe_timestamp = 0;            // UTC seconds
    std::optional<std::string> raw_error;
};

// ---- clients ---------------------------------------------------------------

/// Block-explorer ABI endpoint. Returns the verification status plus the raw
/// response; throws TransportError / RateLimited for retryable conditions.
class ExplorerClient {
public:
    virtual ~ExplorerClient() = default;
    virtual AbiResult get_abi(const std::string& address) = 0;
};

struct NodeReply {
    std::optional<std::string> value; // decoded tokenURI return value
    std::optional<std::string> error; // contract-level failure string
};

/// Read-only tokenURI(uint256) call against a node endpoint.
class NodeClient {
public:
    virtual ~NodeClient() = default;
    virtual NodeReply call_token_uri(const std::string& address, const TokenId& token) = 0;
};

// HTTP-backed clients. The explorer client issues
//   GET {base_url}?module=contract&action=getabi&address=...&apikey=...
// and the node client a JSON-RPC eth_call with the tokenURI selector.
std::unique_ptr<ExplorerClient> make_http_explorer_client(std::string base_url,
                                                          std::string api_key);
std::unique_ptr<NodeClient> make_http_node_client(std::string rpc_url);

// Fixture clients replay per-address response files from a directory:
//   <dir>/explorer/<address>.json            raw explorer response body
//   <dir>/node/<address>.<token>.json        per-token reply
//   <dir>/node/<address>.json                fallback; {token_id} is substituted
// Node reply files hold {"result": "..."} or {"error": "..."}.
std::unique_ptr<ExplorerClient> make_fixture_explorer_client(std::filesystem::path dir);
std::unique_ptr<NodeClient> make_fixture_node_client(std::filesystem::path dir);

// calldata for tokenURI(uint256): 4-byte selector + 32-byte token id.
std::string build_token_uri_calldata(const TokenId& token);
// ABI decoding of a returned dynamic string ("0x" + offset + length + bytes).
std::optional<std::string> decode_eth_string(std::string_view hex_result);

// ---- retry -----------------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;
    // Injectable for tests; defaults to a real sleep.
    std::function<void(std::chrono::milliseconds)> sleep_fn;

    static RetryPolicy no_wait();
};

// ---- operations ------------------------------------------------------------

/// Fetches the ABI with retry/backoff. Malformed addresses fail immediately
/// (DataError); exhausted retries surface as EndpointError.
AbiResult fetch_abi(ExplorerClient& client, const std::string& address,
                    const RetryPolicy& retry = {});

/// Executes tokenURI for one token. Requires a verified ABI; when the ABI
/// lacks the method the outcome is method_missing without a node call.
/// Contract-level failures are outcomes, never exceptions.
TokenUriOutcome call_token_uri(NodeClient& client, const AbiResult& abi,
                               const TokenId& token, const RetryPolicy& retry = {});

bool abi_has_token_uri(const nlohmann::json& abi_document);

// Failure-string taxonomy, keyed on stable substrings; anything
// unrecognized lands in the nonexistent_token bucket with the raw string kept.
TokenUriStatus classify_token_uri_failure(std::string_view raw_error);

/// Maps one probe to exactly one readability category:
/// not_verified -> bytecode_only; nonexistent_token/method_missing ->
/// invalid_abi_or_token_id; empty_string -> empty_string; uri -> readable.
/// Throws DataError on inconsistent inputs (verified ABI without an outcome).
Readability classify_readability(const AbiResult& abi,
                                 const std::optional<TokenUriOutcome>& outcome);

// ---- cache -----------------------------------------------------------------

struct CacheRecord {
    ContractProbe probe;
    // decimal token id -> tokenURI value, for extra-token stem validation
    std::map<std::string, std::string> extra_uris;
};

/// Append-only JSONL store keyed by contract address. Loading tolerates a
/// truncated trailing line so an interrupted run can resume; writes are
/// serialized and flushed per record.
class ProbeCache {
public:
    explicit ProbeCache(std::filesystem::path path);

    std::optional<CacheRecord> find(const std::string& address) const;
    void append(const CacheRecord& record);
    std::size_t size() const;

private:
    std::filesystem::path path_;
    std::map<std::string, CacheRecord> records_;
    mutable std::mutex mutex_;
};

/// Fetch ABI, execute tokenURI for the sample token, classify. A warm cache
/// hit returns without any client call; fresh results are persisted before
/// returning.
ContractProbe probe_contract(const CollectionSample& sample, ExplorerClient& explorer,
                             NodeClient& node, ProbeCache* cache,
                             const RetryPolicy& retry = {},
                             std::int64_t now_utc_seconds = 0);

// ---- concurrent runner -----------------------------------------------------

/// Token-bucket limiter shared across in-flight client calls.
class TokenBucket {
public:
    explicit TokenBucket(double per_second);
    void acquire();

private:
    double per_second_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

struct ProbeLimits {
    int in_flight = 8;
    double rate_per_second = 5.0;
    int probe_extra = 0; // extra tokens per contract for stem validation
};

struct ProbeFailure {
    std::string contract_address;
    std::string error;
};

struct StemMismatch {
    std::string contract_address;
    std::string sample_stem; // "scheme://host_root" of the sample token
    std::string token_id;
    std::string token_stem;
};

struct ProbeRunResult {
    std::vector<ContractProbe> probes;     // sorted by contract address
    std::vector<ProbeFailure> failures;    // exhausted retries, flagged for re-run
    std::vector<StemMismatch> mismatches;  // collection-assumption violations
    std::size_t cache_hits = 0;
    bool aborted = false;
};

/// Probes all samples concurrently under the in-flight bound and a shared
/// per-endpoint rate limiter. Output is sorted, so results are independent of
/// scheduling. refs supply the extra tokens when limits.probe_extra > 0.
/// abort_after (when >= 0) stops the run after that many cache appends; used
/// to exercise interrupted-run recovery.
ProbeRunResult run_probes(std::span<const CollectionSample> samples,
                          std::span<const TokenRef> refs, ExplorerClient& explorer,
                          NodeClient& node, ProbeCache& cache, const ProbeLimits& limits,
                          const RetryPolicy& retry = {}, long abort_after = -1,
                          std::function<std::int64_t()> clock = {});

// Canonical probe stage file: one JSON object per line, sorted by address,
// volatile fields (timestamps) excluded so reruns are byte-identical.
std::string probes_to_jsonl(std::span<const ContractProbe> probes);
std::vector<ContractProbe> read_probes_jsonl(const std::filesystem::path& path);

} // namespace nftaudit
