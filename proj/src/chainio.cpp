#include "nftaudit/chainio.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>
#include <unordered_map>

#include "nftaudit/addresses.hpp"
#include "nftaudit/classify.hpp"
#include "nftaudit/util.hpp"

namespace nftaudit {

std::string_view readability_name(Readability r) {
    switch (r) {
    case Readability::readable: return "readable";
    case Readability::bytecode_only: return "bytecode_only";
    case Readability::invalid_abi_or_token_id: return "invalid_abi_or_token_id";
    case Readability::empty_string: return "empty_string";
    }
    return "bytecode_only";
}

std::optional<Readability> parse_readability(std::string_view name) {
    for (Readability r : {Readability::readable, Readability::bytecode_only,
                          Readability::invalid_abi_or_token_id,
                          Readability::empty_string}) {
        if (readability_name(r) == name) return r;
    }
    return std::nullopt;
}

RetryPolicy RetryPolicy::no_wait() {
    RetryPolicy p;
    p.base_delay = std::chrono::milliseconds(0);
    p.sleep_fn = [](std::chrono::milliseconds) {};
    return p;
}

namespace {

void sleep_for(const RetryPolicy& policy, std::chrono::milliseconds d) {
    if (policy.sleep_fn)
        policy.sleep_fn(d);
    else
        std::this_thread::sleep_for(d);
}

// Retries transport failures with exponential backoff; rate-limit replies
// honor a server-supplied delay when one is given.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    auto delay = policy.base_delay;
    std::string last_error;
    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        try {
            return fn();
        } catch (const RateLimited& e) {
            last_error = e.what();
            if (attempt == policy.max_attempts) break;
            auto wait = e.delay_ms >= 0 ? std::chrono::milliseconds(e.delay_ms) : delay;
            sleep_for(policy, wait);
        } catch (const TransportError& e) {
            last_error = e.what();
            if (attempt == policy.max_attempts) break;
            sleep_for(policy, delay);
        }
        delay = std::chrono::milliseconds(
            static_cast<long>(static_cast<double>(delay.count()) * policy.factor));
    }
    throw EndpointError("retries exhausted: " + last_error);
}

} // namespace

AbiResult fetch_abi(ExplorerClient& client, const std::string& address,
                    const RetryPolicy& retry) {
    auto normalized = normalize_address(address);
    if (!normalized) throw DataError("malformed address: " + address);
    return with_retry(retry, [&] { return client.get_abi(*normalized); });
}

bool abi_has_token_uri(const nlohmann::json& abi_document) {
    if (!abi_document.is_array()) return false;
    for (const auto& entry : abi_document) {
        if (!entry.is_object()) continue;
        if (entry.value("type", "") == "function" && entry.value("name", "") == "tokenURI")
            return true;
    }
    return false;
}

TokenUriStatus classify_token_uri_failure(std::string_view raw_error) {
    if (contains(raw_error, "was not found in this contract"))
        return TokenUriStatus::method_missing;
    // "nonexistent token" and every unrecognized failure string share the
    // invalid-token bucket; the raw string is preserved alongside.
    return TokenUriStatus::nonexistent_token;
}

TokenUriOutcome call_token_uri(NodeClient& client, const AbiResult& abi,
                               const TokenId& token, const RetryPolicy& retry) {
    if (abi.status != AbiStatus::verified || !abi.abi_document)
        throw DataError("call_token_uri requires a verified ABI for " +
                        abi.contract_address);

    TokenUriOutcome outcome;
    outcome.contract_address = abi.contract_address;
    outcome.token_id = token;

    if (!abi_has_token_uri(*abi.abi_document)) {
        outcome.status = TokenUriStatus::method_missing;
        outcome.raw_error = "function 'tokenURI' not present in contract ABI";
        return outcome;
    }

    NodeReply reply = with_retry(
        retry, [&] { return client.call_token_uri(abi.contract_address, token); });

    if (reply.error) {
        outcome.status = classify_token_uri_failure(*reply.error);
        outcome.raw_error = reply.error;
        return outcome;
    }
    std::string value(trim(reply.value.value_or("")));
    if (value.empty()) {
        outcome.status = TokenUriStatus::empty_string;
    } else {
        outcome.status = TokenUriStatus::uri;
        outcome.value = std::move(value);
    }
    return outcome;
}

Readability classify_readability(const AbiResult& abi,
                                 const std::optional<TokenUriOutcome>& outcome) {
    if (abi.status == AbiStatus::not_verified) return Readability::bytecode_only;
    if (!outcome)
        throw DataError("verified ABI without a tokenURI outcome for " +
                        abi.contract_address);
    switch (outcome->status) {
    case TokenUriStatus::uri: return Readability::readable;
    case TokenUriStatus::nonexistent_token:
    case TokenUriStatus::method_missing:
        return Readability::invalid_abi_or_token_id;
    case TokenUriStatus::empty_string: return Readability::empty_string;
    }
    return Readability::invalid_abi_or_token_id;
}

// ---- cache -----------------------------------------------------------------

namespace {

nlohmann::ordered_json record_to_json(const CacheRecord& record) {
    nlohmann::ordered_json j;
    j["contract_address"] = record.probe.contract_address;
    j["readability"] = readability_name(record.probe.readability);
    if (record.probe.sample_token_uri)
        j["sample_token_uri"] = *record.probe.sample_token_uri;
    if (record.probe.raw_error) j["raw_error"] = *record.probe.raw_error;
    j["probe_timestamp"] = record.probe.probe_timestamp;
    if (!record.extra_uris.empty()) {
        nlohmann::ordered_json extras = nlohmann::ordered_json::object();
        for (const auto& [token, uri] : record.extra_uris) extras[token] = uri;
        j["extra_uris"] = extras;
    }
    return j;
}

std::optional<CacheRecord> record_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("contract_address") || !j.contains("readability"))
        return std::nullopt;
    CacheRecord record;
    record.probe.contract_address = j["contract_address"].get<std::string>();
    auto readability = parse_readability(j["readability"].get<std::string>());
    if (!readability) return std::nullopt;
    record.probe.readability = *readability;
    if (j.contains("sample_token_uri"))
        record.probe.sample_token_uri = j["sample_token_uri"].get<std::string>();
    if (j.contains("raw_error"))
        record.probe.raw_error = j["raw_error"].get<std::string>();
    record.probe.probe_timestamp = j.value("probe_timestamp", std::int64_t{0});
    if (j.contains("extra_uris")) {
        for (auto it = j["extra_uris"].begin(); it != j["extra_uris"].end(); ++it)
            record.extra_uris[it.key()] = it.value().get<std::string>();
    }
    return record;
}

} // namespace

ProbeCache::ProbeCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) continue; // truncated tail from an interrupted run
        if (auto record = record_from_json(j))
            records_[record->probe.contract_address] = std::move(*record);
    }
}

std::optional<CacheRecord> ProbeCache::find(const std::string& address) const {
    std::lock_guard lock(mutex_);
    auto it = records_.find(address);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void ProbeCache::append(const CacheRecord& record) {
    std::lock_guard lock(mutex_);
    if (path_.has_parent_path())
        std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw DataError("cannot append to probe cache: " + path_.string());
    out << record_to_json(record).dump() << '\n';
    out.flush();
    records_[record.probe.contract_address] = record;
}

std::size_t ProbeCache::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

// ---- probe -----------------------------------------------------------------

ContractProbe probe_contract(const CollectionSample& sample, ExplorerClient& explorer,
                             NodeClient& node, ProbeCache* cache,
                             const RetryPolicy& retry, std::int64_t now_utc_seconds) {
    if (cache) {
        if (auto cached = cache->find(sample.contract_address))
            return cached->probe;
    }

    AbiResult abi = fetch_abi(explorer, sample.contract_address, retry);

    ContractProbe probe;
    probe.contract_address = sample.contract_address;
    probe.probe_timestamp = now_utc_seconds;

    if (abi.status == AbiStatus::not_verified) {
        // No node call for an unverified contract.
        probe.readability = Readability::bytecode_only;
        probe.raw_error = abi.raw_response;
    } else {
        TokenUriOutcome outcome =
            call_token_uri(node, abi, sample.sample_token_id, retry);
        probe.readability = classify_readability(abi, outcome);
        if (probe.readability == Readability::readable)
            probe.sample_token_uri = outcome.value;
        if (outcome.raw_error) probe.raw_error = outcome.raw_error;
    }

    if (cache) cache->append(CacheRecord{probe, {}});
    return probe;
}

// ---- rate limiter ----------------------------------------------------------

TokenBucket::TokenBucket(double per_second)
    : per_second_(per_second > 0 ? per_second : 1.0),
      tokens_(per_second_),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    while (true) {
        std::chrono::duration<double> wait{0};
        {
            std::lock_guard lock(mutex_);
            auto now = std::chrono::steady_clock::now();
            tokens_ += std::chrono::duration<double>(now - last_).count() * per_second_;
            if (tokens_ > per_second_) tokens_ = per_second_; // burst == 1s of budget
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait = std::chrono::duration<double>((1.0 - tokens_) / per_second_);
        }
        std::this_thread::sleep_for(wait);
    }
}

// ---- concurrent runner -----------------------------------------------------

namespace {

class RateLimitedExplorer : public ExplorerClient {
public:
    RateLimitedExplorer(ExplorerClient& inner, TokenBucket& bucket)
        : inner_(inner), bucket_(bucket) {}
    AbiResult get_abi(const std::string& address) override {
        bucket_.acquire();
        return inner_.get_abi(address);
    }

private:
    ExplorerClient& inner_;
    TokenBucket& bucket_;
};

class RateLimitedNode : public NodeClient {
public:
    RateLimitedNode(NodeClient& inner, TokenBucket& bucket)
        : inner_(inner), bucket_(bucket) {}
    NodeReply call_token_uri(const std::string& address, const TokenId& token) override {
        bucket_.acquire();
        return inner_.call_token_uri(address, token);
    }

private:
    NodeClient& inner_;
    TokenBucket& bucket_;
};

std::string stem_key(const std::string& uri) {
    try {
        UriStem stem = split_uri(uri);
        return stem.scheme + "://" + stem.host_root;
    } catch (const DataError&) {
        return "";
    }
}

// Counting cache appends lets tests cut the run at a precise point.
class AbortCounter {
public:
    explicit AbortCounter(long limit) : limit_(limit) {}
    // Returns true when the caller may proceed with one more append.
    bool admit() {
        if (limit_ < 0) return true;
        long v = count_.fetch_add(1);
        return v < limit_;
    }
    bool tripped() const { return limit_ >= 0 && count_.load() >= limit_; }

private:
    long limit_;
    std::atomic<long> count_{0};
};

} // namespace

ProbeRunResult run_probes(std::span<const CollectionSample> samples,
                          std::span<const TokenRef> refs, ExplorerClient& explorer,
                          NodeClient& node, ProbeCache& cache, const ProbeLimits& limits,
                          const RetryPolicy& retry, long abort_after,
                          std::function<std::int64_t()> clock) {
    if (limits.in_flight < 1) throw UsageError("in-flight limit must be positive");
    if (limits.rate_per_second <= 0) throw UsageError("rate must be positive");

    // Extra tokens per contract, smallest first, for stem validation.
    std::unordered_map<std::string, std::vector<TokenId>> extra_tokens;
    if (limits.probe_extra > 0) {
        for (const auto& ref : refs)
            extra_tokens[ref.contract_address].push_back(ref.token_id);
        for (auto& [addr, tokens] : extra_tokens) std::sort(tokens.begin(), tokens.end());
    }

    TokenBucket explorer_bucket(limits.rate_per_second);
    TokenBucket node_bucket(limits.rate_per_second);
    RateLimitedExplorer limited_explorer(explorer, explorer_bucket);
    RateLimitedNode limited_node(node, node_bucket);
    AbortCounter abort(abort_after);

    struct Slot {
        std::optional<CacheRecord> record;
        std::optional<ProbeFailure> failure;
        bool cache_hit = false;
        bool skipped = false;
    };
    std::vector<Slot> slots(samples.size());
    std::atomic<size_t> next{0};

    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= samples.size()) return;
            const CollectionSample& sample = samples[i];
            Slot& slot = slots[i];

            size_t wanted_extras = 0;
            if (limits.probe_extra > 0) {
                auto it = extra_tokens.find(sample.contract_address);
                size_t available = it == extra_tokens.end() ? 0 : it->second.size();
                wanted_extras = std::min<size_t>(
                    static_cast<size_t>(limits.probe_extra),
                    available > 0 ? available - 1 : 0); // sample token excluded
            }

            if (auto cached = cache.find(sample.contract_address)) {
                bool extras_covered =
                    cached->probe.readability != Readability::readable ||
                    cached->extra_uris.size() >= wanted_extras;
                if (extras_covered) {
                    slot.record = std::move(cached);
                    slot.cache_hit = true;
                    continue;
                }
            }
            if (abort.tripped()) {
                slot.skipped = true;
                continue;
            }

            try {
                AbiResult abi =
                    fetch_abi(limited_explorer, sample.contract_address, retry);
                CacheRecord record;
                record.probe.contract_address = sample.contract_address;
                record.probe.probe_timestamp = clock ? clock() : 0;
                if (abi.status == AbiStatus::not_verified) {
                    record.probe.readability = Readability::bytecode_only;
                    record.probe.raw_error = abi.raw_response;
                } else {
                    TokenUriOutcome outcome = call_token_uri(
                        limited_node, abi, sample.sample_token_id, retry);
                    record.probe.readability = classify_readability(abi, outcome);
                    if (record.probe.readability == Readability::readable)
                        record.probe.sample_token_uri = outcome.value;
                    if (outcome.raw_error) record.probe.raw_error = outcome.raw_error;
                }

                if (record.probe.readability == Readability::readable &&
                    wanted_extras > 0) {
                    const auto& tokens = extra_tokens[sample.contract_address];
                    size_t taken = 0;
                    for (const TokenId& token : tokens) {
                        if (token == sample.sample_token_id) continue;
                        if (taken == wanted_extras) break;
                        TokenUriOutcome extra =
                            call_token_uri(limited_node, abi, token, retry);
                        if (extra.status == TokenUriStatus::uri)
                            record.extra_uris[token.str()] = extra.value;
                        else
                            record.extra_uris[token.str()] = "";
                        ++taken;
                    }
                }

                if (!abort.admit()) {
                    slot.skipped = true;
                    continue;
                }
                cache.append(record);
                slot.record = std::move(record);
            } catch (const EndpointError& e) {
                slot.failure = ProbeFailure{sample.contract_address, e.what()};
            } catch (const DataError& e) {
                slot.failure = ProbeFailure{sample.contract_address, e.what()};
            }
        }
    };

    std::vector<std::thread> threads;
    int n_threads = std::min<int>(limits.in_flight, static_cast<int>(samples.size()));
    threads.reserve(static_cast<size_t>(std::max(n_threads, 1)));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    ProbeRunResult result;
    for (Slot& slot : slots) {
        if (slot.failure) {
            result.failures.push_back(std::move(*slot.failure));
            continue;
        }
        if (slot.skipped) {
            result.aborted = true;
            continue;
        }
        if (!slot.record) continue;
        if (slot.cache_hit) ++result.cache_hits;

        const CacheRecord& record = *slot.record;
        if (record.probe.sample_token_uri) {
            std::string sample_stem = stem_key(*record.probe.sample_token_uri);
            for (const auto& [token, uri] : record.extra_uris) {
                std::string token_stem = uri.empty() ? "" : stem_key(uri);
                if (token_stem != sample_stem)
                    result.mismatches.push_back({record.probe.contract_address,
                                                 sample_stem, token, token_stem});
            }
        }
        result.probes.push_back(record.probe);
    }

    std::sort(result.probes.begin(), result.probes.end(),
              [](const ContractProbe& a, const ContractProbe& b) {
                  return a.contract_address < b.contract_address;
              });
    std::sort(result.failures.begin(), result.failures.end(),
              [](const ProbeFailure& a, const ProbeFailure& b) {
                  return a.contract_address < b.contract_address;
              });
    std::sort(result.mismatches.begin(), result.mismatches.end(),
              [](const StemMismatch& a, const StemMismatch& b) {
                  return std::tie(a.contract_address, a.token_id) <
                         std::tie(b.contract_address, b.token_id);
              });
    return result;
}

std::string probes_to_jsonl(std::span<const ContractProbe> probes) {
    std::string out;
    for (const auto& probe : probes) {
        nlohmann::ordered_json j;
        j["contract_address"] = probe.contract_address;
        j["readability"] = readability_name(probe.readability);
        if (probe.sample_token_uri) j["sample_token_uri"] = *probe.sample_token_uri;
        if (probe.raw_error) j["raw_error"] = *probe.raw_error;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<ContractProbe> read_probes_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("file missing: " + path.string());
    std::vector<ContractProbe> probes;
    std::string line;
    size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw DataError("probes file row " + std::to_string(row) +
                            ": not a JSON object");
        auto record = record_from_json(j);
        if (!record)
            throw DataError("probes file row " + std::to_string(row) +
                            ": missing required fields");
        probes.push_back(record->probe);
    }
    return probes;
}

} // namespace nftaudit
